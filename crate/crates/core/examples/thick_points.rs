//! Scale-matched box dimension of α-thick points of sampled GFFs against
//! `2 − α²/2`.
//!
//! Usage: `cargo run --release --example thick_points -- [n] [replicas] [alpha]`

use lfpp::experiments::{thick_dimension_run, ExperimentConfig};

fn main() -> lfpp::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n = args.first().and_then(|s| s.parse().ok()).unwrap_or(1024);
    let replicas = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let mut cfg = ExperimentConfig::new(0.8, n, 2.0, replicas, 1);
    cfg.thick.alpha = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(0.5);
    let t0 = std::time::Instant::now();
    let rep = thick_dimension_run(&cfg)?;
    for e in &rep.estimates {
        let Some(e) = e else {
            println!("  undefined (a level has no thick square)");
            continue;
        };
        let counts: Vec<String> = e.fit.y_values.iter().map(|y| format!("{:.0}", y.exp2())).collect();
        println!("  dim {:.4}  boxes per level {}", e.value, counts.join(" "));
    }
    println!(
        "median {:.4}  theory {:.4}  ({:.1?})",
        rep.median_dimension,
        rep.theory,
        t0.elapsed()
    );
    Ok(())
}
