//! Property tests for the lattice metric on small random weight grids.

use proptest::prelude::*;

use lfpp::metric::{distance, distances_from, metric_ball, RegionMask, Stencil};
use lfpp::{Geometry, WeightGrid};

fn grid(n: usize, logs: &[f64], stencil: Stencil) -> WeightGrid {
    let g = Geometry::new(n, 0.25, [0.0, 0.0]).unwrap();
    let ws = logs.iter().take(n * n).map(|x| x.exp()).collect();
    WeightGrid::from_weights(g, ws, 1.0).unwrap().with_stencil(stencil)
}

fn stencil() -> impl Strategy<Value = Stencil> {
    prop_oneof![Just(Stencil::King8), Just(Stencil::Sixteen)]
}

fn setup() -> impl Strategy<Value = (usize, Vec<f64>, Stencil, [usize; 6])> {
    (3usize..12, stencil()).prop_flat_map(|(n, s)| {
        (
            Just(n),
            prop::collection::vec(-2.0f64..2.0, n * n),
            Just(s),
            [0..n, 0..n, 0..n, 0..n, 0..n, 0..n],
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn symmetric_and_triangle((n, logs, s, v) in setup()) {
        let w = grid(n, &logs, s);
        let full = RegionMask::full(*w.geometry());
        let (a, b, c) = ((v[0], v[1]), (v[2], v[3]), (v[4], v[5]));
        let da = distances_from(&w, &[a], &full, f64::INFINITY).unwrap();
        let db = distances_from(&w, &[b], &full, f64::INFINITY).unwrap();
        let (ab, ba) = (da.get(b), db.get(a));
        prop_assert!((ab - ba).abs() <= 1e-12 * ab.max(1.0));
        prop_assert!(da.get(c) <= ab + db.get(c) + 1e-9);
        prop_assert_eq!(da.get(a), 0.0);
        prop_assert!(a == b || ab > 0.0);
    }

    #[test]
    fn geodesic_cost_is_the_distance((n, logs, s, v) in setup()) {
        let w = grid(n, &logs, s);
        let full = RegionMask::full(*w.geometry());
        let r = distance(&w, &[(v[0], v[1])], &[(v[2], v[3])], &full, true).unwrap();
        let path = r.geodesic.unwrap();
        if !path.is_empty() {
            prop_assert_eq!(path[0], (v[0], v[1]));
            prop_assert_eq!(*path.last().unwrap(), (v[2], v[3]));
            prop_assert!((w.path_cost(&path).unwrap() - r.distance).abs() <= 1e-12 * r.distance.max(1.0));
        }
    }

    #[test]
    fn homogeneous_of_degree_one((n, logs, s, v) in setup(), c in 0.1f64..10.0) {
        let w = grid(n, &logs, s);
        let full = RegionMask::full(*w.geometry());
        let (a, b) = ((v[0], v[1]), (v[2], v[3]));
        let d = distance(&w, &[a], &[b], &full, false).unwrap().distance;
        let dc = distance(&w.scaled(c).unwrap(), &[a], &[b], &full, false).unwrap().distance;
        prop_assert!((dc - c * d).abs() <= 1e-12 * (c * d).max(1.0));
    }

    #[test]
    fn masks_only_lengthen_paths((n, logs, s, v) in setup(), holes in prop::collection::vec(any::<bool>(), 144)) {
        let w = grid(n, &logs, s);
        let g = *w.geometry();
        let (a, b) = ((v[0], v[1]), (v[2], v[3]));
        let mut mask = RegionMask::from_bits(g, holes.iter().take(n * n).map(|h| !h).collect()).unwrap();
        mask.set(a, true);
        mask.set(b, true);
        let full = RegionMask::full(g);
        let d = distance(&w, &[a], &[b], &full, false).unwrap().distance;
        let dm = distance(&w, &[a], &[b], &mask, false).unwrap().distance;
        prop_assert!(dm >= d - 1e-12);
    }

    #[test]
    fn balls_grow_with_the_radius((n, logs, s, v) in setup(), r1 in 0.0f64..2.0, dr in 0.0f64..2.0) {
        let w = grid(n, &logs, s);
        let full = RegionMask::full(*w.geometry());
        let small = metric_ball(&w, (v[0], v[1]), r1, &full).unwrap();
        let big = metric_ball(&w, (v[0], v[1]), r1 + dr, &full).unwrap();
        prop_assert!(small.is_subset_of(&big));
        prop_assert!(small.contains((v[0], v[1])));
    }
}
