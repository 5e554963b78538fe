//! Dyadic squares, hashes, annulus events and the counting lemma.
//!
//! Usage: `cargo run --release --example events -- [n] [replicas]`

use lfpp::experiments::{event_calibration, ExperimentConfig};
use lfpp::field::{mollify, sample_gff};
use lfpp::metric::build_weights;
use lfpp::multiscale::{
    build_hash, count_dominant_indices, dominant_count_bound, separating_square, square_annulus, DyadicSquare,
};

fn main() -> lfpp::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n = args.first().and_then(|s| s.parse().ok()).unwrap_or(512);
    let replicas = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(4);

    let s = DyadicSquare::new(3, 2, 5);
    let a = square_annulus(&s);
    println!("square {:?} side {}: annulus {a:?}", s.corner(), s.side());
    if let Some(sep) = separating_square([0.1, 0.1], [0.6, 0.3], 4) {
        println!("separating square at level {}: corner {:?}", sep.level, sep.corner());
    }

    let h = sample_gff(n, 2.0, 1)?;
    let eps = 4.0 * h.spacing();
    let w = build_weights(&mollify(&h, eps)?, 0.4)?.with_eps(eps);
    let hash = build_hash(&DyadicSquare::new(2, 0, 0), &w)?;
    println!("hash crossings {:?}, diameter bound {:.4}", hash.lengths, hash.diameter);

    let mut cfg = ExperimentConfig::new(0.4, n, 2.0, replicas, 1);
    cfg.events.points_per_replica = 3;
    let cal = event_calibration(&cfg)?;
    println!("c_r {:?}  C {:.3}  fraction with an event {:.2}", cal.c_r, cal.c, cal.fraction_any);

    let xs = [1.0, 0.5, 3.0, 0.1, 10.0, 0.0, 40.0];
    println!(
        "dominant indices {} ≤ bound {:.3}",
        count_dominant_indices(&xs, 1.0),
        dominant_count_bound(&xs, 1.0)
    );
    Ok(())
}
