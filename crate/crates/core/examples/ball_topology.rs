//! Complement components of metric balls at matched quantum depth, for a
//! subcritical and a supercritical ξ over three grid refinements.
//!
//! Usage: `cargo run --release --example ball_topology -- [n] [replicas] [quantile]`

use lfpp::experiments::{ball_topology, ExperimentConfig};

fn main() -> lfpp::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n = args.first().and_then(|s| s.parse().ok()).unwrap_or(256);
    let replicas = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(10);
    let quantile = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(0.001);
    let cfg = ExperimentConfig::new(1.2, n, 2.0, replicas, 1);
    let t0 = std::time::Instant::now();
    let t = ball_topology(&cfg, quantile, &[0.2, 1.2])?;
    for row in &t.rows {
        println!(
            "xi {:.1}  n {:5}  median components {:6.1}  median radius {:.4}  counts {:?}",
            row.xi, row.n, row.median_components, row.median_radius, row.components
        );
    }
    println!("({:.1?})", t0.elapsed());
    Ok(())
}
