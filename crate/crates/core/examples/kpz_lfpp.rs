//! Quantum dimension of a segment under LFPP against the KPZ prediction
//! `f(1)` at the same run's `Q̂`.
//!
//! Usage: `cargo run --release --example kpz_lfpp -- [n] [replicas] [xi]`

use lfpp::experiments::{kpz_run, ExperimentConfig};

fn main() -> lfpp::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n = args.first().and_then(|s| s.parse().ok()).unwrap_or(1024);
    let replicas = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let xi = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(0.4);
    let mut cfg = ExperimentConfig::new(xi, n, 2.0, replicas, 1);
    cfg.exponent.eps_count = 5;
    let t0 = std::time::Instant::now();
    let rep = kpz_run(&cfg)?;
    for e in &rep.estimates {
        println!("  s* {:.4}{}", e.value, if e.infinite { " (infinite)" } else { "" });
    }
    println!(
        "box dim {:.4}  Q {:.3} ± {:.3}  f(dim) {:.4}  median s* {:.4}  ({:.1?})",
        rep.box_dimension,
        rep.q.q_hat,
        rep.q.q_stderr,
        rep.prediction,
        rep.median_s,
        t0.elapsed()
    );
    Ok(())
}
