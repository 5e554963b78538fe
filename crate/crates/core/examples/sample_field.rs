//! Sample a GFF, look at its circle averages, and save a snapshot.
//!
//! Usage: `cargo run --release --example sample_field -- [n] [L] [seed] [path]`

use lfpp::field::{circle_average, load_snapshot, mollify, sample_gff, save_snapshot};

fn main() -> lfpp::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n = args.first().and_then(|s| s.parse().ok()).unwrap_or(512);
    let side = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(4.0);
    let seed = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1);
    let path = args.get(3).cloned().unwrap_or_else(|| "field.lfpp".into());

    let h = sample_gff(n, side, seed)?;
    println!("n {n}  L {side}  spacing {}  mean {:.4}", h.spacing(), h.mean());
    for r in [1.0, 0.5, 0.25, 0.125, 0.0625] {
        // h_r(0) grows like a Brownian motion in log(1/r)
        println!("h_{r}(0) = {:+.4}", circle_average(&h, [0.0, 0.0], r)?.value);
    }
    let m = mollify(&h, 4.0 * h.spacing())?;
    let (lo, hi) = m.values().iter().fold((f64::MAX, f64::MIN), |(a, b), &x| (a.min(x), b.max(x)));
    println!("mollified at 4 spacings: range [{lo:.3}, {hi:.3}]");

    save_snapshot(&h, &path)?;
    assert_eq!(load_snapshot(&path)?, h);
    println!("wrote {path}");
    Ok(())
}
