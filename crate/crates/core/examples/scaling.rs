//! Scale-r constants c_r against ξQ̂, and the set-to-set tightness table.
//!
//! Usage: `cargo run --release --example scaling -- [n] [replicas] [xi]`

use lfpp::experiments::{estimate_q, estimate_scaling_constants, set_distance_tightness, ExperimentConfig};

fn main() -> lfpp::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n = args.first().and_then(|s| s.parse().ok()).unwrap_or(1024);
    let replicas = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(16);
    let xi = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(0.8);
    let cfg = ExperimentConfig::new(xi, n, 2.0, replicas, 1);

    let sc = estimate_scaling_constants(&cfg, &cfg.scaling.r_list)?;
    let q = estimate_q(&cfg)?;
    for (r, c) in sc.r_list.iter().zip(&sc.c_r) {
        println!("c_{r} = {c:.4}");
    }
    println!(
        "slope {:.3} ± {:.3}  vs  xi Q = {:.3} ± {:.3}  (Λ = {:.2})",
        sc.fit.slope,
        sc.fit.stderr_slope,
        xi * q.q_hat,
        xi * q.q_stderr,
        sc.lambda
    );

    let p = &cfg.tightness;
    let t = set_distance_tightness(&cfg, &p.k1, &p.k2, &p.a_list)?;
    for (a, pr) in t.a_list.iter().zip(&t.probability) {
        println!("P(A^-1 ≤ D/(c_r e^(xi h_r)) ≤ A) at A = {a}: {pr:.3}");
    }
    println!("A_95 = {:.3}", t.a_95);
    Ok(())
}
