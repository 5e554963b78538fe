use super::{distances_from, RegionMask, WeightGrid};
use crate::error::{Error, Result};
use crate::grid::Vertex;

/// Closed metric ball: vertices at distance `≤ radius` from `center`, with
/// paths confined to `mask`.
pub fn metric_ball(w: &WeightGrid, center: Vertex, radius: f64, mask: &RegionMask) -> Result<RegionMask> {
    if radius.is_nan() || radius < 0.0 {
        return Err(Error::Config(format!("ball radius must be nonnegative, got {radius}")));
    }
    let map = distances_from(w, &[center], mask, radius)?;
    let bits = map.values().iter().map(|d| *d <= radius).collect();
    RegionMask::from_bits(*w.geometry(), bits)
}

/// Number of 4-connected components of `window \ ball`.
pub fn complement_components(ball: &RegionMask, window: &RegionMask) -> usize {
    let g = *window.geometry();
    let n = g.n;
    let mut open: Vec<bool> = window
        .bits()
        .iter()
        .zip(ball.bits())
        .map(|(w, b)| *w && !*b)
        .collect();
    let mut components = 0;
    let mut stack = Vec::new();
    for start in 0..open.len() {
        if !open[start] {
            continue;
        }
        components += 1;
        open[start] = false;
        stack.push(start);
        while let Some(i) = stack.pop() {
            let (r, c) = (i / n, i % n);
            let mut visit = |j: usize| {
                if open[j] {
                    open[j] = false;
                    stack.push(j);
                }
            };
            if r > 0 {
                visit(i - n);
            }
            if r + 1 < n {
                visit(i + n);
            }
            if c > 0 {
                visit(i - 1);
            }
            if c + 1 < n {
                visit(i + 1);
            }
        }
    }
    components
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Geometry;

    #[test]
    fn zero_radius_ball_is_the_centre() {
        let g = Geometry::new(9, 1.0, [0.0, 0.0]).unwrap();
        let w = WeightGrid::uniform(g, 1.0).unwrap();
        let m = RegionMask::full(g);
        let b = metric_ball(&w, (4, 4), 0.0, &m).unwrap();
        assert_eq!(b.vertices(), vec![(4, 4)]);
        assert_eq!(complement_components(&b, &m), 1);
    }

    #[test]
    fn ball_grows_with_radius() {
        let g = Geometry::new(15, 1.0, [0.0, 0.0]).unwrap();
        let weights = (0..g.len()).map(|i| 1.0 + ((i * 37) % 11) as f64 / 5.0).collect();
        let w = WeightGrid::from_weights(g, weights, 1.0).unwrap();
        let m = RegionMask::full(g);
        let mut prev = metric_ball(&w, (7, 7), 0.0, &m).unwrap();
        for k in 1..20 {
            let b = metric_ball(&w, (7, 7), k as f64 * 0.7, &m).unwrap();
            assert!(prev.is_subset_of(&b));
            prev = b;
        }
    }

    #[test]
    fn component_counts() {
        let g = Geometry::new(7, 1.0, [0.0, 0.0]).unwrap();
        let window = RegionMask::full(g);
        assert_eq!(complement_components(&RegionMask::empty(g), &window), 1);
        assert_eq!(complement_components(&window, &window), 0);
        // 8-connected diamond ring around (3, 3): the pocket is 4-separated
        let ring = RegionMask::from_vertices(g, [(2, 3), (3, 2), (4, 3), (3, 4)]);
        assert_eq!(complement_components(&ring, &window), 2);
    }
}
