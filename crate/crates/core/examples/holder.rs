//! Empirical Hölder exponent of the LFPP metric against ξ(Q̂ + 2).
//!
//! Usage: `cargo run --release --example holder -- [n] [replicas]`

use lfpp::experiments::{estimate_q, holder_check, ExperimentConfig};

fn main() -> lfpp::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n = args.first().and_then(|s| s.parse().ok()).unwrap_or(512);
    let replicas = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(8);
    for xi in [0.2, 0.8] {
        let cfg = ExperimentConfig::new(xi, n, 2.0, replicas, 1);
        let q = estimate_q(&cfg)?;
        let rep = holder_check(&cfg, q.q_hat, cfg.holder.chi_margin)?;
        println!(
            "xi {xi}: max exponent {:.3} (median over replicas {:.3} ± {:.3}), bound {:.3}, holds on {}/{}",
            rep.max_exponent,
            rep.median_exponent,
            rep.stderr,
            rep.bound,
            rep.replicas_holding,
            replicas
        );
    }
    Ok(())
}
