//! Quantum dimension by diameter sums, compared with box counting.
//!
//! With unit weights the two estimators should agree; with a GFF weight grid
//! the quantum exponent moves toward the KPZ prediction.
//!
//!     cargo run --release --example kpz_dimension

use std::time::Instant;

use lfpp::fractal::{
    box_dimension_mask, cantor_dust_mask, kpz_diameters, segment_mask, square_mask,
};
use lfpp::{Geometry, WeightGrid};

fn main() -> lfpp::Result<()> {
    // [-1/4, 5/4]² at spacing 2^-9
    let k = 9;
    let spacing = (-(k as f64)).exp2();
    let g = Geometry::new(3 * (1 << k) / 2 + 1, spacing, [-0.25, -0.25])?;
    let w = WeightGrid::uniform(g, 1.0)?;
    let sets = [
        ("segment", segment_mask(g, [0.0, 0.5], 1.0)),
        ("square", square_mask(g, [0.0, 0.0], 1.0)),
        ("cantor dust", cantor_dust_mask(g, 7, [0.0, 0.0], 1.0)),
    ];
    for (name, x) in sets {
        let t = Instant::now();
        let boxed = box_dimension_mask(&x, 2..=7)?;
        let kpz = kpz_diameters(&x, &w, 2..=7)?.dimension()?;
        println!(
            "{name:12} box {:.4}  kpz {:.4}  |diff| {:.4}  ({:.1?})",
            boxed.value,
            kpz.value,
            (boxed.value - kpz.value).abs(),
            t.elapsed()
        );
    }
    Ok(())
}
