//! Dyadic squares, square annuli, hashes and the annulus events used to
//! chain distance bounds across scales.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{circle_average, GridField};
use crate::grid::{Geometry, Vertex};
use crate::metric::{
    annulus_mask, distance, distance_across, distance_around, distances_to, AnnulusSpec, RegionMask, WeightGrid,
};

const TOL: f64 = 1e-9;

/// The closed square `[i·2⁻ⁿ, (i+1)·2⁻ⁿ] × [j·2⁻ⁿ, (j+1)·2⁻ⁿ]`, anchored at
/// the physical origin.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DyadicSquare {
    pub level: u32,
    pub i: i64,
    pub j: i64,
}

impl DyadicSquare {
    pub fn new(level: u32, i: i64, j: i64) -> Self {
        DyadicSquare { level, i, j }
    }

    pub fn side(&self) -> f64 {
        (-(self.level as f64)).exp2()
    }

    pub fn corner(&self) -> [f64; 2] {
        let s = self.side();
        [self.i as f64 * s, self.j as f64 * s]
    }

    pub fn center(&self) -> [f64; 2] {
        let s = self.side();
        [(self.i as f64 + 0.5) * s, (self.j as f64 + 0.5) * s]
    }

    /// The four level-`n+1` squares tiling this one.
    pub fn children(&self) -> [DyadicSquare; 4] {
        let (l, i, j) = (self.level + 1, 2 * self.i, 2 * self.j);
        [
            DyadicSquare::new(l, i, j),
            DyadicSquare::new(l, i + 1, j),
            DyadicSquare::new(l, i, j + 1),
            DyadicSquare::new(l, i + 1, j + 1),
        ]
    }

    pub fn parent(&self) -> Option<DyadicSquare> {
        (self.level > 0).then(|| DyadicSquare::new(self.level - 1, self.i.div_euclid(2), self.j.div_euclid(2)))
    }

    /// Closed-square membership.
    pub fn contains(&self, p: [f64; 2]) -> bool {
        let s = self.side();
        let c = self.corner();
        (0..2).all(|a| p[a] >= c[a] - TOL * s && p[a] <= c[a] + s + TOL * s)
    }

    pub fn x_range(&self) -> [f64; 2] {
        let c = self.corner();
        [c[0], c[0] + self.side()]
    }

    pub fn y_range(&self) -> [f64; 2] {
        let c = self.corner();
        [c[1], c[1] + self.side()]
    }

    /// Whether two distinct same-level squares share an edge.
    pub fn shares_edge_with(&self, other: &DyadicSquare) -> bool {
        self.level == other.level && (self.i - other.i).abs() + (self.j - other.j).abs() == 1
    }
}

/// Indices `k` with `t ∈ [k, k+1]`.
fn closed_cells(t: f64) -> Vec<i64> {
    let k = t.round();
    if (t - k).abs() < TOL {
        vec![k as i64 - 1, k as i64]
    } else {
        vec![t.floor() as i64]
    }
}

/// Level-`n` closed dyadic squares meeting a finite point set, in
/// lexicographic `(i, j)` order.
pub fn squares_intersecting(points: &[[f64; 2]], level: u32) -> Vec<DyadicSquare> {
    let inv = level_scale(level);
    let mut set = BTreeSet::new();
    for p in points {
        for i in closed_cells(p[0] * inv) {
            for j in closed_cells(p[1] * inv) {
                set.insert((i, j));
            }
        }
    }
    set.into_iter().map(|(i, j)| DyadicSquare::new(level, i, j)).collect()
}

/// Level-`n` closed dyadic squares meeting the closed segment `[a, b]`.
pub fn squares_meeting_segment(a: [f64; 2], b: [f64; 2], level: u32) -> Vec<DyadicSquare> {
    let inv = level_scale(level);
    let lo = |k: usize| (a[k].min(b[k]) * inv - TOL).floor() as i64 - 1;
    let hi = |k: usize| (a[k].max(b[k]) * inv + TOL).floor() as i64 + 1;
    let mut out = Vec::new();
    for i in lo(0)..=hi(0) {
        for j in lo(1)..=hi(1) {
            let sq = DyadicSquare::new(level, i, j);
            if segment_meets_box(a, b, sq.x_range(), sq.y_range()) {
                out.push(sq);
            }
        }
    }
    out
}

/// Liang–Barsky clip of a closed segment against a closed box.
fn segment_meets_box(a: [f64; 2], b: [f64; 2], x: [f64; 2], y: [f64; 2]) -> bool {
    let d = [b[0] - a[0], b[1] - a[1]];
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for (k, range) in [x, y].into_iter().enumerate() {
        let tol = TOL * (range[1] - range[0]);
        let (lo, hi) = (range[0] - tol, range[1] + tol);
        if d[k] == 0.0 {
            if a[k] < lo || a[k] > hi {
                return false;
            }
            continue;
        }
        let (mut ta, mut tb) = ((lo - a[k]) / d[k], (hi - a[k]) / d[k]);
        if ta > tb {
            std::mem::swap(&mut ta, &mut tb);
        }
        t0 = t0.max(ta);
        t1 = t1.min(tb);
        if t0 > t1 {
            return false;
        }
    }
    true
}

/// Level-`n` squares of the half-open partition `[i, i+1) × [j, j+1)` that
/// contain at least one point; each point lies in exactly one square.
pub fn occupied_squares(points: &[[f64; 2]], level: u32) -> Vec<DyadicSquare> {
    let inv = level_scale(level);
    let set: BTreeSet<(i64, i64)> = points
        .iter()
        .map(|p| ((p[0] * inv + TOL).floor() as i64, (p[1] * inv + TOL).floor() as i64))
        .collect();
    set.into_iter().map(|(i, j)| DyadicSquare::new(level, i, j)).collect()
}

fn level_scale(level: u32) -> f64 {
    (level as f64).exp2()
}

/// Square annulus about `v_S` between the squares of side `2|S|` and `3|S|`.
pub fn square_annulus(s: &DyadicSquare) -> AnnulusSpec {
    let side = s.side();
    AnnulusSpec::square(s.center(), side, 1.5 * side).expect("dyadic sides are positive")
}

/// Whether the square annulus `inner` sits inside the hole of `outer`
/// (so the two are nested and their interiors are disjoint).
pub fn nested_inside(inner: &AnnulusSpec, outer: &AnnulusSpec) -> bool {
    let off = (inner.center[0] - outer.center[0])
        .abs()
        .max((inner.center[1] - outer.center[1]).abs());
    off + inner.outer_radius <= outer.inner_radius * (1.0 + TOL)
}

/// A level-`n+2` square containing `z` whose annulus leaves `w` outside its
/// outer square, if one exists.
pub fn separating_square(z: [f64; 2], w: [f64; 2], n: u32) -> Option<DyadicSquare> {
    squares_intersecting(&[z], n + 2).into_iter().find(|s| {
        let a = square_annulus(s);
        a.norm(w) >= a.outer_radius
    })
}

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn on_segment(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> bool {
    p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
}

/// Closed-segment intersection test.
pub fn segments_intersect(p1: [f64; 2], p2: [f64; 2], q1: [f64; 2], q2: [f64; 2]) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

/// Whether two polylines (as point sequences) share a point.
pub fn polylines_intersect(a: &[[f64; 2]], b: &[[f64; 2]]) -> bool {
    let segs = |p: &[[f64; 2]]| -> Vec<([f64; 2], [f64; 2])> {
        match p.len() {
            0 => vec![],
            1 => vec![(p[0], p[0])],
            _ => p.windows(2).map(|s| (s[0], s[1])).collect(),
        }
    };
    let (sa, sb) = (segs(a), segs(b));
    sa.iter().any(|&(p1, p2)| {
        sb.iter().any(|&(q1, q2)| {
            // bounding boxes first
            p1[0].max(p2[0]) >= q1[0].min(q2[0])
                && q1[0].max(q2[0]) >= p1[0].min(p2[0])
                && p1[1].max(p2[1]) >= q1[1].min(q2[1])
                && q1[1].max(q2[1]) >= p1[1].min(p2[1])
                && segments_intersect(p1, p2, q1, q2)
        })
    })
}

/// Physical positions of a vertex path.
pub fn path_points(g: &Geometry, path: &[Vertex]) -> Vec<[f64; 2]> {
    path.iter().map(|v| g.position(*v)).collect()
}

/// Index range of lattice coordinates inside `[lo, hi]` along one axis.
fn axis_range(origin: f64, spacing: f64, n: usize, lo: f64, hi: f64) -> Option<(usize, usize)> {
    let a = ((lo - origin) / spacing - TOL).ceil().max(0.0);
    let b = ((hi - origin) / spacing + TOL).floor().min(n as f64 - 1.0);
    (a <= b).then_some((a as usize, b as usize))
}

/// Closed rectangle of the lattice, clipped to the lattice, as a cropped
/// weight grid with a mask of the rectangle's vertices.
pub(crate) struct Patch {
    pub w: WeightGrid,
    pub mask: RegionMask,
    pub corner: Vertex,
    pub rows: (usize, usize),
    pub cols: (usize, usize),
}

impl Patch {
    pub fn new(w: &WeightGrid, x: [f64; 2], y: [f64; 2]) -> Result<Patch> {
        let g = w.geometry();
        let (Some(cols), Some(rows)) = (
            axis_range(g.origin[0], g.spacing, g.n, x[0], x[1]),
            axis_range(g.origin[1], g.spacing, g.n, y[0], y[1]),
        ) else {
            return Err(Error::OutOfDomain("rectangle misses the lattice".into()));
        };
        let size = (rows.1 - rows.0 + 1).max(cols.1 - cols.0 + 1).max(2);
        if size > g.n {
            return Err(Error::OutOfDomain("rectangle exceeds the lattice".into()));
        }
        let corner = (rows.0.min(g.n - size), cols.0.min(g.n - size));
        let local = w.crop(corner, size)?;
        let mut mask = RegionMask::empty(*local.geometry());
        for r in rows.0..=rows.1 {
            for c in cols.0..=cols.1 {
                mask.set((r - corner.0, c - corner.1), true);
            }
        }
        Ok(Patch {
            w: local,
            mask,
            corner,
            rows,
            cols,
        })
    }

    pub fn to_local(&self, v: Vertex) -> Vertex {
        (v.0 - self.corner.0, v.1 - self.corner.1)
    }

    pub fn to_global(&self, v: Vertex) -> Vertex {
        (v.0 + self.corner.0, v.1 + self.corner.1)
    }

}

/// Largest pairwise distance among `points` (global vertices inside the
/// patch). Eccentricities are taken from the extreme points of the set in the
/// axis and diagonal directions, then once more from the farthest point
/// found; the result is a lower bound on the diameter, exact for segments and
/// convex sets under near-isotropic weights.
pub(crate) fn sweep_diameter(patch: &Patch, points: &[Vertex]) -> Result<f64> {
    if points.len() < 2 {
        return Ok(0.0);
    }
    let local: Vec<Vertex> = points.iter().map(|v| patch.to_local(*v)).collect();
    let keys: [fn(Vertex) -> i64; 4] = [
        |v| v.0 as i64,
        |v| v.1 as i64,
        |v| v.0 as i64 + v.1 as i64,
        |v| v.0 as i64 - v.1 as i64,
    ];
    let mut starts = BTreeSet::new();
    for key in keys {
        let lo = local.iter().min_by_key(|v| (key(**v), **v)).unwrap();
        let hi = local.iter().max_by_key(|v| (key(**v), std::cmp::Reverse(**v))).unwrap();
        starts.insert(*lo);
        starts.insert(*hi);
    }
    let mut best = (0.0f64, local[0]);
    let mut done = BTreeSet::new();
    let mut eccentricity = |from: Vertex, best: &mut (f64, Vertex)| -> Result<()> {
        if !done.insert(from) {
            return Ok(());
        }
        let d = distances_to(&patch.w, from, &local, &patch.mask)?;
        for (k, &x) in d.iter().enumerate() {
            if x > best.0 {
                *best = (x, local[k]);
            }
        }
        Ok(())
    };
    for v in starts {
        eccentricity(v, &mut best)?;
    }
    let far = best.1;
    eccentricity(far, &mut best)?;
    Ok(best.0)
}

/// Number of lattice vertices along one side of the closed square.
fn vertices_per_side(s: &DyadicSquare, g: &Geometry) -> usize {
    (s.side() / g.spacing + TOL).floor() as usize + 1
}

pub(crate) fn check_resolved(s: &DyadicSquare, g: &Geometry) -> Result<()> {
    let k = vertices_per_side(s, g);
    if k < 4 {
        return Err(Error::Resolution(format!(
            "square of side {} has only {k} lattice vertices per side",
            s.side()
        )));
    }
    Ok(())
}

/// Four rectangle crossings forming a `#` inside a dyadic square.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HashNet {
    pub square: DyadicSquare,
    /// Crossings of the bottom, top, left and right halves of the square:
    /// the first two run left to right, the last two bottom to top.
    pub paths: [Vec<Vertex>; 4],
    pub lengths: [f64; 4],
    pub diameter: f64,
}

impl HashNet {
    pub fn vertices(&self) -> Vec<Vertex> {
        let set: BTreeSet<Vertex> = self.paths.iter().flatten().copied().collect();
        set.into_iter().collect()
    }

    /// Whether the two hashes meet as planar sets.
    pub fn meets(&self, other: &HashNet, g: &Geometry) -> bool {
        self.paths.iter().any(|p| {
            let a = path_points(g, p);
            other.paths.iter().any(|q| polylines_intersect(&a, &path_points(g, q)))
        })
    }
}

/// The minimal-cost hash of `s`, and its diameter in the internal metric of
/// the square of side `3|S|` about `v_S`.
pub fn build_hash(s: &DyadicSquare, w: &WeightGrid) -> Result<HashNet> {
    let g = *w.geometry();
    check_resolved(s, &g)?;
    let [x0, x1] = s.x_range();
    let [y0, y1] = s.y_range();
    if !(g.contains_disk([x0, y0], 0.0) && g.contains_disk([x1, y1], 0.0)) {
        return Err(Error::OutOfDomain(format!("square {s:?} leaves the lattice")));
    }
    let (xm, ym) = (0.5 * (x0 + x1), 0.5 * (y0 + y1));
    let rects = [
        ([x0, x1], [y0, ym], true),
        ([x0, x1], [ym, y1], true),
        ([x0, xm], [y0, y1], false),
        ([xm, x1], [y0, y1], false),
    ];
    let mut paths: [Vec<Vertex>; 4] = Default::default();
    let mut lengths = [0.0; 4];
    for (k, (x, y, horizontal)) in rects.into_iter().enumerate() {
        let patch = Patch::new(w, x, y)?;
        let (rows, cols) = (patch.rows, patch.cols);
        let side = |fixed_col: Option<usize>, fixed_row: Option<usize>| -> Vec<Vertex> {
            match (fixed_col, fixed_row) {
                (Some(c), _) => (rows.0..=rows.1).map(|r| patch.to_local((r, c))).collect(),
                (_, Some(r)) => (cols.0..=cols.1).map(|c| patch.to_local((r, c))).collect(),
                _ => unreachable!(),
            }
        };
        let (src, dst) = if horizontal {
            (side(Some(cols.0), None), side(Some(cols.1), None))
        } else {
            (side(None, Some(rows.0)), side(None, Some(rows.1)))
        };
        let d = distance(&patch.w, &src, &dst, &patch.mask, true)?;
        lengths[k] = d.distance;
        paths[k] = d
            .geodesic
            .unwrap_or_default()
            .into_iter()
            .map(|v| patch.to_global(v))
            .collect();
    }
    let side = s.side();
    let hood = Patch::new(w, [x0 - side, x1 + side], [y0 - side, y1 + side])?;
    let all: BTreeSet<Vertex> = paths.iter().flatten().copied().collect();
    let all: Vec<Vertex> = all.into_iter().collect();
    let diameter = sweep_diameter(&hood, &all)?;
    Ok(HashNet {
        square: *s,
        paths,
        lengths,
        diameter,
    })
}

/// Outcome of testing the annulus event at `(z, r)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub z: [f64; 2],
    pub r: f64,
    pub c: f64,
    pub across: f64,
    pub around: f64,
    pub h_r: f64,
    pub c_r: f64,
    pub holds: bool,
}

impl EventRecord {
    pub const CSV_HEADER: &'static str = "z_x,z_y,r,C,across,around,h_r,c_r,holds";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.z[0], self.z[1], self.r, self.c, self.across, self.around, self.h_r, self.c_r, self.holds
        )
    }
}

/// Checks whether the distance across `A_{r/2,r}(z)` exceeds
/// `C⁻¹ c_r e^{ξ h_r(z)}` and the distance around `A_{r,2r}(z)` is below
/// `C c_r e^{ξ h_r(z)}`. Both annuli must lie inside `window`.
pub fn check_event_e(
    z: [f64; 2],
    r: f64,
    c: f64,
    w: &WeightGrid,
    h: &GridField,
    c_r: f64,
    window: &RegionMask,
) -> Result<EventRecord> {
    if !(c >= 1.0) {
        return Err(Error::Config(format!("event threshold C must be at least 1, got {c}")));
    }
    if !(r > 0.0 && c_r > 0.0) {
        return Err(Error::Config("event radius and scaling constant must be positive".into()));
    }
    let g = *w.geometry();
    if !h.geometry().same_as(&g) {
        return Err(Error::Config("field and weights live on different lattices".into()));
    }
    let inner = AnnulusSpec::round(z, 0.5 * r, r)?;
    let outer = AnnulusSpec::round(z, r, 2.0 * r)?;
    if !annulus_mask(&g, &outer)?.is_subset_of(window) || !annulus_mask(&g, &inner)?.is_subset_of(window) {
        return Err(Error::OutOfDomain(format!(
            "annuli about ({}, {}) at radius {r} leave the measurement window",
            z[0], z[1]
        )));
    }
    let full = RegionMask::full(g);
    let across = distance_across(w, &inner, &full)?.distance;
    let around = distance_around(w, &outer, &full)?.distance;
    let h_r = circle_average(h, z, r)?.value;
    let scale = c_r * (w.xi() * h_r).exp();
    Ok(EventRecord {
        z,
        r,
        c,
        across,
        around,
        h_r,
        c_r,
        holds: across > scale / c && around < c * scale,
    })
}

/// `#{ j : x_j > c · Σ_{i<j} x_i }`.
pub fn count_dominant_indices(xs: &[f64], c: f64) -> usize {
    let mut prefix = 0.0;
    let mut count = 0;
    for &x in xs {
        if x > c * prefix {
            count += 1;
        }
        prefix += x;
    }
    count
}

/// Upper bound on [`count_dominant_indices`]:
/// `max{1, log(max/x₁)/log(1+c) − log c/log(1+c) + 2}`.
pub fn dominant_count_bound(xs: &[f64], c: f64) -> f64 {
    let Some(&x1) = xs.first() else {
        return 1.0;
    };
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let l = (1.0 + c).ln();
    let b = (max / x1).ln() / l - c.ln() / l + 2.0;
    if b.is_nan() {
        f64::INFINITY
    } else {
        b.max(1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::Stencil;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn interior_point_meets_one_square() {
        assert_eq!(squares_intersecting(&[[0.3, 0.6]], 2), vec![DyadicSquare::new(2, 1, 2)]);
    }

    #[test]
    fn dyadic_corner_meets_four_squares() {
        let sq = squares_intersecting(&[[0.25, 0.5]], 2);
        assert_eq!(sq.len(), 4);
        assert!(sq.iter().all(|s| s.contains([0.25, 0.5])));
    }

    #[test]
    fn segment_on_a_row_boundary() {
        // x ∈ [0.1, 0.9] meets columns 0..=7 at level 3; y = 0.5 is shared
        // by rows 3 and 4
        let sq = squares_meeting_segment([0.1, 0.5], [0.9, 0.5], 3);
        let oracle: Vec<_> = (0..8)
            .flat_map(|i| (0..8).map(move |j| DyadicSquare::new(3, i, j)))
            .filter(|s| s.x_range()[1] >= 0.1 && s.x_range()[0] <= 0.9 && s.contains([s.center()[0], 0.5]))
            .collect();
        assert_eq!(sq, oracle);
        assert_eq!(sq.len(), 16);
    }

    #[test]
    fn occupied_squares_partition_points() {
        let pts = [[0.0, 0.0], [0.25, 0.25], [0.2, 0.1], [0.99, 0.5]];
        let sq = occupied_squares(&pts, 2);
        assert_eq!(
            sq,
            vec![DyadicSquare::new(2, 0, 0), DyadicSquare::new(2, 1, 1), DyadicSquare::new(2, 3, 2)]
        );
    }

    #[test]
    fn children_tile_parent() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let s = DyadicSquare::new(rng.gen_range(0..12), rng.gen_range(-50..50), rng.gen_range(-50..50));
            let kids = s.children();
            let area: f64 = kids.iter().map(|k| k.side() * k.side()).sum();
            assert_eq!(area, s.side() * s.side());
            for k in kids {
                assert_eq!(k.parent(), Some(s));
                assert!(s.contains(k.corner()) && s.contains(k.center()));
            }
            let p = [
                s.corner()[0] + rng.gen::<f64>() * s.side(),
                s.corner()[1] + rng.gen::<f64>() * s.side(),
            ];
            assert!(kids.iter().any(|k| k.contains(p)));
        }
    }

    #[test]
    fn unit_square_annulus() {
        let a = square_annulus(&DyadicSquare::new(0, 0, 0));
        assert_eq!(a.center, [0.5, 0.5]);
        assert_eq!((a.inner_radius, a.outer_radius), (1.0, 1.5));
    }

    #[test]
    fn child_annuli_nest_inside_parent() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let s = DyadicSquare::new(rng.gen_range(0..10), rng.gen_range(-20..20), rng.gen_range(-20..20));
            for k in s.children() {
                assert!(nested_inside(&square_annulus(&k), &square_annulus(&s)));
            }
        }
    }

    #[test]
    fn separating_square_exists_for_far_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let n = rng.gen_range(0..8u32);
            let z = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let sep = (-(n as f64)).exp2() * rng.gen_range(1.0..3.0);
            let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let w = [z[0] + sep * th.cos(), z[1] + sep * th.sin()];
            let s = separating_square(z, w, n).expect("separating square");
            assert!(s.contains(z));
            let a = square_annulus(&s);
            assert!(a.norm(w) >= a.outer_radius);
        }
    }

    #[test]
    fn crossing_segments() {
        assert!(segments_intersect([0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]));
        assert!(!segments_intersect([0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]));
        assert!(segments_intersect([0.0, 0.0], [1.0, 0.0], [1.0, 0.0], [2.0, 5.0]));
        assert!(segments_intersect([0.0, 0.0], [2.0, 0.0], [1.0, 0.0], [3.0, 0.0]));
    }

    fn grid(n: usize, lo: f64, hi: f64) -> Geometry {
        Geometry::new(n, (hi - lo) / (n - 1) as f64, [lo, lo]).unwrap()
    }

    fn random_weights(g: Geometry, seed: u64) -> WeightGrid {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = (0..g.len()).map(|_| rng.gen_range(0.2..5.0)).collect();
        WeightGrid::from_weights(g, w, 1.0).unwrap()
    }

    #[test]
    fn loops_around_adjacent_annuli_cross() {
        // lattice over [-2, 3]² with spacing 1/16
        let g = grid(81, -2.0, 3.0);
        for seed in 0..3 {
            let w = random_weights(g, seed);
            let full = RegionMask::full(g);
            let s = DyadicSquare::new(0, 0, 0);
            for t in [DyadicSquare::new(0, 1, 0), DyadicSquare::new(0, 0, 1)] {
                assert!(s.shares_edge_with(&t));
                let a = distance_around(&w, &square_annulus(&s), &full).unwrap();
                let b = distance_around(&w, &square_annulus(&t), &full).unwrap();
                let pa = path_points(&g, &a.geodesic.unwrap());
                let pb = path_points(&g, &b.geodesic.unwrap());
                assert!(polylines_intersect(&pa, &pb));
            }
        }
    }

    #[test]
    fn unit_weight_hash_matches_euclidean_diameter() {
        let g = Geometry::new(97, 1.0 / 32.0, [-1.0, -1.0]).unwrap();
        let w = WeightGrid::uniform(g, 1.0).unwrap();
        let h = build_hash(&DyadicSquare::new(0, 0, 0), &w).unwrap();
        for (k, p) in h.paths.iter().enumerate() {
            assert!((h.lengths[k] - 1.0).abs() < 1e-12);
            let pts = path_points(&g, p);
            // straight crossings
            let fixed = if k < 2 { 1 } else { 0 };
            assert!(pts.iter().all(|q| q[fixed] == pts[0][fixed]));
        }
        let pts = path_points(&g, &h.vertices());
        let mut euclid = 0.0f64;
        for a in &pts {
            for b in &pts {
                euclid = euclid.max((a[0] - b[0]).hypot(a[1] - b[1]));
            }
        }
        assert!((h.diameter / euclid - 1.0).abs() < 0.05, "{} vs {}", h.diameter, euclid);
        let h4 = build_hash(&DyadicSquare::new(0, 0, 0), &w.scaled(4.0).unwrap()).unwrap();
        assert_eq!(h4.diameter, 4.0 * h.diameter);
        let h3 = build_hash(&DyadicSquare::new(0, 0, 0), &w.scaled(3.0).unwrap()).unwrap();
        assert!((h3.diameter / (3.0 * h.diameter) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn parent_and_child_hashes_meet() {
        let g = Geometry::new(97, 1.0 / 32.0, [-1.0, -1.0]).unwrap();
        for seed in 0..3 {
            let w = random_weights(g, 100 + seed);
            let s = DyadicSquare::new(0, 0, 0);
            let h = build_hash(&s, &w).unwrap();
            for k in s.children() {
                let hk = build_hash(&k, &w).unwrap();
                assert!(h.meets(&hk, &g));
            }
        }
    }

    #[test]
    fn coarse_hash_is_a_resolution_error() {
        let g = Geometry::new(9, 0.5, [-1.0, -1.0]).unwrap();
        let w = WeightGrid::uniform(g, 1.0).unwrap();
        assert!(matches!(
            build_hash(&DyadicSquare::new(0, 0, 0), &w),
            Err(Error::Resolution(_))
        ));
    }

    #[test]
    fn event_thresholds() {
        let g = Geometry::new(129, 1.0 / 32.0, [-2.0, -2.0]).unwrap();
        let w = WeightGrid::uniform(g, 1.0).unwrap().with_stencil(Stencil::King8);
        let h = GridField::zeros(g);
        let win = RegionMask::full(g);
        let e = check_event_e([0.0, 0.0], 0.5, 1e6, &w, &h, 1.0, &win).unwrap();
        assert!(e.holds);
        let e1 = check_event_e([0.0, 0.0], 0.5, 1.0, &w, &h, e.across, &win).unwrap();
        assert!(!e1.holds);
        assert!(matches!(
            check_event_e([1.5, 0.0], 0.5, 2.0, &w, &h, 1.0, &win),
            Err(Error::OutOfDomain(_))
        ));
    }

    #[test]
    fn dominant_indices_hand_cases() {
        assert_eq!(count_dominant_indices(&[1.0, 1.0, 1.0, 1.0], 1.0), 1);
        assert_eq!(count_dominant_indices(&[1.0, 2.0, 4.0, 8.0], 0.5), 4);
    }

    #[test]
    fn dominant_count_respects_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            let n = rng.gen_range(1..40);
            let c = rng.gen_range(0.01..5.0);
            let mut xs: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0f64).powi(3) * 100.0).collect();
            xs[0] = xs[0].max(1e-6);
            assert!(count_dominant_indices(&xs, c) as f64 <= dominant_count_bound(&xs, c));
        }
    }
}
