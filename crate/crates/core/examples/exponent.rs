//! Background charge `Q̂(ξ)` from the crossing medians `a_ε` under joint
//! refinement, for several ξ on shared fields.
//!
//! Usage: `cargo run --release --example exponent -- [n] [replicas] [eps_count]`

use lfpp::experiments::{estimate_q_multi, xi_crit_bracket, ExperimentConfig};

fn main() -> lfpp::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n = args.first().and_then(|s| s.parse().ok()).unwrap_or(512);
    let replicas = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(8);
    let mut cfg = ExperimentConfig::new(0.8, n, 2.0, replicas, 1);
    cfg.exponent.eps_count = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(4);
    let xis = [0.2, 0.4, 0.7, 1.0];
    let t0 = std::time::Instant::now();
    let qs = estimate_q_multi(&cfg, &xis)?;
    println!("eps {:?}", qs[0].eps_list);
    for q in &qs {
        let med: Vec<String> = q.medians.iter().map(|m| format!("{m:.4}")).collect();
        println!(
            "xi {:.1}  Q {:.3} ± {:.3}  slope {:.4} (fit se {:.4}, replica se {:.4})  a_eps {}",
            q.xi,
            q.q_hat,
            q.q_stderr,
            q.fit.slope,
            q.fit.stderr_slope,
            q.sampling_se_slope,
            med.join(" ")
        );
    }
    match xi_crit_bracket(&qs) {
        Some([a, b]) => println!("Q crosses 2 for xi in [{a}, {b}]"),
        None => println!("Q does not cross 2 on this xi list"),
    }
    println!("({:.1?})", t0.elapsed());
    Ok(())
}
