//! LFPP distances on one sampled field: unit-square crossing, annulus
//! distances, a geodesic, and a metric ball.
//!
//! Usage: `cargo run --release --example distances -- [xi] [n] [seed]`

use lfpp::experiments::square_crossing;
use lfpp::field::{mollify, sample_gff};
use lfpp::metric::{
    build_weights, complement_components, distance, distance_across, distance_around, metric_ball, AnnulusSpec,
    RegionMask,
};

fn main() -> lfpp::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let xi = args.first().and_then(|s| s.parse().ok()).unwrap_or(0.4);
    let n = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(512);
    let seed = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1);

    let h = sample_gff(n, 2.0, seed)?;
    let eps = 4.0 * h.spacing();
    let w = build_weights(&mollify(&h, eps)?, xi)?.with_eps(eps);
    let g = *w.geometry();
    let full = RegionMask::full(g);

    println!("crossing of the unit square: {:.4}", square_crossing(&w, [0.0, 0.0], 1.0)?);
    let ann = AnnulusSpec::round([0.0, 0.0], 0.25, 0.5)?;
    println!("across A(0; 1/4, 1/2): {:.4}", distance_across(&w, &ann, &full)?.distance);
    println!("around A(0; 1/4, 1/2): {:.4}", distance_around(&w, &ann, &full)?.distance);

    let (a, b) = (g.nearest_vertex([-0.5, 0.0]).unwrap(), g.nearest_vertex([0.5, 0.0]).unwrap());
    let r = distance(&w, &[a], &[b], &full, true)?;
    let path = r.geodesic.unwrap_or_default();
    println!("D((-1/2, 0), (1/2, 0)) = {:.4} along {} vertices", r.distance, path.len());
    assert!((w.path_cost(&path)? - r.distance).abs() < 1e-9);

    let window = RegionMask::window(g, 0.5);
    let ball = metric_ball(&w, g.center_vertex(), 0.5 * r.distance, &full)?;
    println!(
        "ball of radius {:.4}: {} vertices, {} complementary components in the window",
        0.5 * r.distance,
        ball.count(),
        complement_components(&ball, &window)
    );
    Ok(())
}
