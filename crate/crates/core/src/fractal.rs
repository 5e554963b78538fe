//! Thick and singular points, box-counting and quantum (diameter-sum)
//! dimension estimators, and the closed-form KPZ relations.

use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{FieldSpectrum, GridField};
use crate::fit::ScalingFit;
use crate::grid::{Geometry, Vertex};
use crate::metric::{RegionMask, WeightGrid};
use crate::multiscale::{check_resolved, occupied_squares, sweep_diameter, DyadicSquare, Patch};

/// Window points whose circle averages stay in the band
/// `h_r(z)/log(1/r) ∈ [α − ζ, α + ζ]` at every tested radius.
#[derive(Clone, Debug, PartialEq)]
pub struct ThickSet {
    pub alpha: f64,
    pub zeta: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub radii: Vec<f64>,
    pub points: RegionMask,
    pub window: RegionMask,
}

/// Dyadic radii `r_min · 2^k ≤ r_max`.
pub fn dyadic_radii(r_min: f64, r_max: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut r = r_min;
    while r <= r_max * (1.0 + 1e-12) {
        out.push(r);
        r *= 2.0;
    }
    out
}

fn check_radii(g: &Geometry, radii: &[f64]) -> Result<()> {
    if radii.is_empty() {
        return Err(Error::Config("radius range is empty".into()));
    }
    for &r in radii {
        if !(r >= 4.0 * g.spacing * (1.0 - 1e-12)) {
            return Err(Error::Resolution(format!(
                "radius {r} is below four lattice spacings ({})",
                4.0 * g.spacing
            )));
        }
        if !(r < 1.0) {
            return Err(Error::Config(format!("radius {r} must be below 1 so that log(1/r) > 0")));
        }
    }
    Ok(())
}

/// Thick set in the central half window of the lattice.
pub fn thick_points(h: &GridField, alpha: f64, zeta: f64, r_min: f64, r_max: f64) -> Result<ThickSet> {
    let window = RegionMask::window(*h.geometry(), 0.5);
    thick_points_in(h, alpha, zeta, r_min, r_max, &window)
}

pub fn thick_points_in(
    h: &GridField,
    alpha: f64,
    zeta: f64,
    r_min: f64,
    r_max: f64,
    window: &RegionMask,
) -> Result<ThickSet> {
    if !(zeta > 0.0) {
        return Err(Error::Config(format!("zeta must be positive, got {zeta}")));
    }
    if !(r_min > 0.0 && r_max >= r_min) {
        return Err(Error::Config(format!("radius range [{r_min}, {r_max}] is empty")));
    }
    let g = *h.geometry();
    if !window.geometry().same_as(&g) {
        return Err(Error::Config("window and field live on different lattices".into()));
    }
    let radii = dyadic_radii(r_min, r_max);
    check_radii(&g, &radii)?;
    let spec = FieldSpectrum::new(h);
    let mut keep = window.bits().to_vec();
    for &r in &radii {
        let avg = spec.circle_average_map(r)?;
        let l = (1.0 / r).ln();
        for (k, a) in keep.iter_mut().zip(avg) {
            let t = a / l;
            *k &= t >= alpha - zeta && t <= alpha + zeta;
        }
    }
    Ok(ThickSet {
        alpha,
        zeta,
        r_min,
        r_max,
        radii,
        points: RegionMask::from_bits(g, keep)?,
        window: window.clone(),
    })
}

/// Per vertex, `max_r h_r(z)/log(1/r)` over the given radii.
pub fn singular_scores(h: &GridField, radii: &[f64]) -> Result<Vec<f64>> {
    check_radii(h.geometry(), radii)?;
    let spec = FieldSpectrum::new(h);
    let mut best = vec![f64::NEG_INFINITY; h.values().len()];
    for &r in radii {
        let l = (1.0 / r).ln();
        for (b, a) in best.iter_mut().zip(spec.circle_average_map(r)?) {
            *b = b.max(a / l);
        }
    }
    Ok(best)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DimensionMethod {
    BoxCount,
    KpzSum,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    pub value: f64,
    pub infinite: bool,
    pub fit: ScalingFit,
    pub method: DimensionMethod,
    pub n_min: u32,
    pub n_max: u32,
}

fn check_levels(levels: &RangeInclusive<u32>) -> Result<()> {
    if levels.end() < levels.start() || levels.end() - levels.start() < 3 {
        return Err(Error::Config(format!(
            "level range {}..={} must span at least 4 levels",
            levels.start(),
            levels.end()
        )));
    }
    Ok(())
}

/// Slope of `log₂ N(n)` against `n`, where `N(n)` counts the level-`n`
/// dyadic squares (half-open partition) containing a point of `points`.
pub fn box_dimension(points: &[[f64; 2]], levels: RangeInclusive<u32>) -> Result<DimensionEstimate> {
    if points.is_empty() {
        return Err(Error::UndefinedDimension("empty set".into()));
    }
    check_levels(&levels)?;
    let xs: Vec<f64> = levels.clone().map(f64::from).collect();
    let ys: Vec<f64> = levels
        .clone()
        .map(|n| (occupied_squares(points, n).len() as f64).log2())
        .collect();
    let fit = ScalingFit::fit(&xs, &ys)?;
    Ok(DimensionEstimate {
        value: fit.slope,
        infinite: false,
        fit,
        method: DimensionMethod::BoxCount,
        n_min: *levels.start(),
        n_max: *levels.end(),
    })
}

pub fn box_dimension_mask(x: &RegionMask, levels: RangeInclusive<u32>) -> Result<DimensionEstimate> {
    box_dimension(&x.points(), levels)
}

/// Box dimension of the thick set with each covering scale resolving its own
/// band test: a level-`n` square counts when it contains a window point whose
/// circle averages lie in `[α − ζ, α + ζ] · log(1/r)` at every dyadic radius
/// `r` from the square's side up to `2^span` times it.
pub fn thick_box_dimension(
    h: &GridField,
    alpha: f64,
    zeta: f64,
    levels: RangeInclusive<u32>,
    window: &RegionMask,
    span: u32,
) -> Result<DimensionEstimate> {
    check_levels(&levels)?;
    if !(zeta > 0.0) {
        return Err(Error::Config(format!("zeta must be positive, got {zeta}")));
    }
    let g = *h.geometry();
    if !window.geometry().same_as(&g) {
        return Err(Error::Config("window and field live on different lattices".into()));
    }
    let radii: Vec<f64> = (levels.start() - span.min(*levels.start())..=*levels.end())
        .map(|k| 0.5f64.powi(k as i32))
        .collect();
    check_radii(&g, &radii)?;
    let spec = FieldSpectrum::new(h);
    let band: BTreeMap<u32, Vec<bool>> = (levels.start() - span.min(*levels.start())..=*levels.end())
        .map(|k| {
            let r = 0.5f64.powi(k as i32);
            let l = (1.0 / r).ln();
            let avg = spec.circle_average_map(r)?;
            Ok((k, avg.iter().map(|a| a / l >= alpha - zeta && a / l <= alpha + zeta).collect()))
        })
        .collect::<Result<_>>()?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for k in levels.clone() {
        let mut keep = window.bits().to_vec();
        for j in k.saturating_sub(span)..=k {
            for (a, b) in keep.iter_mut().zip(&band[&j]) {
                *a &= *b;
            }
        }
        let pts = RegionMask::from_bits(g, keep)?.points();
        let count = occupied_squares(&pts, k).len();
        if count == 0 {
            return Err(Error::UndefinedDimension(format!("no thick points resolved at level {k}")));
        }
        xs.push(f64::from(k));
        ys.push((count as f64).log2());
    }
    let fit = ScalingFit::fit(&xs, &ys)?;
    Ok(DimensionEstimate {
        value: fit.slope,
        infinite: false,
        fit,
        method: DimensionMethod::BoxCount,
        n_min: *levels.start(),
        n_max: *levels.end(),
    })
}

/// Per level, the squares meeting `X` and the diameter of `X ∩ S` (closed
/// square) in the internal metric of the square of side `3|S|` about `v_S`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KpzDiameters {
    pub levels: Vec<u32>,
    pub squares: Vec<Vec<DyadicSquare>>,
    pub diameters: Vec<Vec<f64>>,
}

/// Lattice vertices of `x` inside the closed square `s`.
fn members(x: &RegionMask, s: &DyadicSquare) -> Vec<Vertex> {
    let g = x.geometry();
    let axis = |lo: f64, hi: f64, o: f64| {
        let a = ((lo - o) / g.spacing - 1e-9).ceil().max(0.0) as usize;
        let b = ((hi - o) / g.spacing + 1e-9).floor().min(g.n as f64 - 1.0);
        (a, b as i64)
    };
    let [x0, x1] = s.x_range();
    let [y0, y1] = s.y_range();
    let (c0, c1) = axis(x0, x1, g.origin[0]);
    let (r0, r1) = axis(y0, y1, g.origin[1]);
    let mut out = Vec::new();
    if c1 < 0 || r1 < 0 {
        return out;
    }
    for r in r0..=r1 as usize {
        for c in c0..=c1 as usize {
            if x.contains((r, c)) {
                out.push((r, c));
            }
        }
    }
    out
}

pub fn kpz_diameters(x: &RegionMask, w: &WeightGrid, levels: RangeInclusive<u32>) -> Result<KpzDiameters> {
    let g = *w.geometry();
    if !x.geometry().same_as(&g) {
        return Err(Error::Config("set and weights live on different lattices".into()));
    }
    if x.is_empty() {
        return Err(Error::UndefinedDimension("empty set".into()));
    }
    check_levels(&levels)?;
    let points = x.points();
    let mut out = KpzDiameters {
        levels: Vec::new(),
        squares: Vec::new(),
        diameters: Vec::new(),
    };
    for n in levels {
        let squares = occupied_squares(&points, n);
        for s in &squares {
            check_resolved(s, &g)?;
        }
        let diameters = squares
            .par_iter()
            .map(|s| {
                let side = s.side();
                let [x0, x1] = s.x_range();
                let [y0, y1] = s.y_range();
                let hood = Patch::new(w, [x0 - side, x1 + side], [y0 - side, y1 + side])?;
                sweep_diameter(&hood, &members(x, s))
            })
            .collect::<Result<Vec<f64>>>()?;
        out.levels.push(n);
        out.squares.push(squares);
        out.diameters.push(diameters);
    }
    Ok(out)
}

impl KpzDiameters {
    /// `Σ_S diam^s` at the `k`-th level, with `0⁰ = 1`.
    pub fn sum(&self, k: usize, s: f64) -> f64 {
        if s == 0.0 {
            return self.diameters[k].len() as f64;
        }
        self.diameters[k].iter().map(|d| d.powf(s)).sum()
    }

    /// Regression of `log₂ Σ_S diam^s` against the level.
    pub fn fit(&self, s: f64) -> Result<ScalingFit> {
        let xs: Vec<f64> = self.levels.iter().map(|&n| f64::from(n)).collect();
        let ys: Vec<f64> = (0..self.levels.len()).map(|k| self.sum(k, s).log2()).collect();
        if ys.iter().any(|y| !y.is_finite()) {
            return Err(Error::Resolution(format!("diameter sum at s = {s} is degenerate")));
        }
        ScalingFit::fit(&xs, &ys)
    }

    /// Root of `slope(s) = 0` on `[0, S_MAX]` by bisection.
    pub fn dimension(&self) -> Result<DimensionEstimate> {
        let est = |value: f64, infinite: bool, fit: ScalingFit| DimensionEstimate {
            value,
            infinite,
            fit,
            method: DimensionMethod::KpzSum,
            n_min: self.levels[0],
            n_max: *self.levels.last().unwrap(),
        };
        let f0 = self.fit(0.0)?;
        if f0.slope <= 0.0 {
            return Ok(est(0.0, false, f0));
        }
        let fmax = self.fit(S_MAX)?;
        if fmax.slope > 0.0 {
            return Ok(est(f64::INFINITY, true, fmax));
        }
        let (mut lo, mut hi) = (0.0, S_MAX);
        while hi - lo > S_TOL {
            let mid = 0.5 * (lo + hi);
            if self.fit(mid)?.slope > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let s = 0.5 * (lo + hi);
        Ok(est(s, false, self.fit(s)?))
    }
}

const S_MAX: f64 = 10.0;
const S_TOL: f64 = 1e-3;

/// Regression of `log₂ Σ_{S ∈ 𝒮ⁿ(X)} diam(X ∩ S)^s` against `n`.
pub fn kpz_sum_statistic(x: &RegionMask, w: &WeightGrid, s: f64, levels: RangeInclusive<u32>) -> Result<ScalingFit> {
    if !(s >= 0.0) {
        return Err(Error::Config(format!("exponent s must be nonnegative, got {s}")));
    }
    kpz_diameters(x, w, levels)?.fit(s)
}

/// Critical exponent `s*` of the diameter sums.
pub fn kpz_dimension(x: &RegionMask, w: &WeightGrid, levels: RangeInclusive<u32>) -> Result<DimensionEstimate> {
    kpz_diameters(x, w, levels)?.dimension()
}

/// `f(x) = ξ⁻¹(Q − √(Q² − 2x))` for `x ≤ Q²/2`, `+∞` beyond.
pub fn kpz_f(x: f64, xi: f64, q: f64) -> Result<f64> {
    if !(0.0..=2.0).contains(&x) {
        return Err(Error::Domain(format!("Euclidean dimension {x} is outside [0, 2]")));
    }
    if !(xi > 0.0 && q > 0.0) {
        return Err(Error::Domain("xi and Q must be positive".into()));
    }
    let disc = q * q - 2.0 * x;
    if disc < 0.0 {
        Ok(f64::INFINITY)
    } else {
        Ok((q - disc.sqrt()) / xi)
    }
}

/// Quantum dimension of the `α`-thick part of a set of Euclidean dimension
/// `dim_euclid`: `dim_euclid / (ξ(Q − α))`.
pub fn thick_kpz_theory(alpha: f64, dim_euclid: f64, xi: f64, q: f64) -> Result<f64> {
    if !(alpha < q) {
        return Err(Error::Domain(format!("thickness {alpha} is not below Q = {q}")));
    }
    if !(xi > 0.0) {
        return Err(Error::Domain("xi must be positive".into()));
    }
    Ok(dim_euclid / (xi * (q - alpha)))
}

/// Euclidean dimension of the `α`-thick points of a set of dimension `x`:
/// `max{x − α²/2, 0}`.
pub fn thick_dimension(x: f64, alpha: f64) -> f64 {
    (x - 0.5 * alpha * alpha).max(0.0)
}

/// Middle-thirds Cantor set of the given depth as closed intervals of `[0, 1]`.
pub fn cantor_intervals(depth: u32) -> Vec<[f64; 2]> {
    let mut iv = vec![[0.0, 1.0]];
    for _ in 0..depth {
        iv = iv
            .into_iter()
            .flat_map(|[a, b]| {
                let t = (b - a) / 3.0;
                [[a, a + t], [b - t, b]]
            })
            .collect();
    }
    iv
}

/// Lattice raster of `[x0, x0 + side]² ∩ (C × C)` for the depth-`d` Cantor
/// set `C`: vertices within half a spacing (per axis) of the dust.
pub fn cantor_dust_mask(g: Geometry, depth: u32, corner: [f64; 2], side: f64) -> RegionMask {
    let axis = |o: f64, c: f64| -> Vec<bool> {
        let mut on = vec![false; g.n];
        let h = 0.5 * g.spacing;
        for [a, b] in cantor_intervals(depth) {
            let (a, b) = (c + side * a, c + side * b);
            let lo = ((a - h - o) / g.spacing - 1e-9).ceil().max(0.0) as usize;
            let hi = ((b + h - o) / g.spacing + 1e-9).floor();
            if hi < 0.0 {
                continue;
            }
            for k in lo..=(hi as usize).min(g.n - 1) {
                on[k] = true;
            }
        }
        on
    };
    let cols = axis(g.origin[0], corner[0]);
    let rows = axis(g.origin[1], corner[1]);
    let bits = (0..g.len())
        .map(|i| {
            let (r, c) = g.vertex(i);
            rows[r] && cols[c]
        })
        .collect();
    RegionMask::from_bits(g, bits).expect("sized from geometry")
}

/// Exact piece corners of the depth-`d` dust in `[0, 1)²`, for box counting
/// without a lattice.
pub fn cantor_dust_points(depth: u32) -> Vec<[f64; 2]> {
    let ends: Vec<f64> = {
        let mut e: Vec<f64> = cantor_intervals(depth).into_iter().flatten().collect();
        e.sort_by(f64::total_cmp);
        e.dedup();
        e
    };
    ends.iter().flat_map(|&x| ends.iter().map(move |&y| [x, y])).collect()
}

/// Vertices of the half-open square `[x0, x0 + side)²`.
pub fn square_mask(g: Geometry, corner: [f64; 2], side: f64) -> RegionMask {
    let tol = 1e-9 * g.spacing;
    RegionMask::from_fn(g, |p| {
        (0..2).all(|a| p[a] >= corner[a] - tol && p[a] < corner[a] + side - tol)
    })
}

/// Vertices of the half-open horizontal segment `[x0, x0 + len) × {y}`.
pub fn segment_mask(g: Geometry, start: [f64; 2], len: f64) -> RegionMask {
    let tol = 1e-9 * g.spacing;
    RegionMask::from_fn(g, |p| {
        (p[1] - start[1]).abs() < tol && p[0] >= start[0] - tol && p[0] < start[0] + len - tol
    })
}

/// Groups mask vertices by the level-`n` square containing them.
pub fn points_by_square(x: &RegionMask, level: u32) -> BTreeMap<DyadicSquare, Vec<Vertex>> {
    let g = x.geometry();
    let mut out: BTreeMap<DyadicSquare, Vec<Vertex>> = BTreeMap::new();
    for v in x.vertices() {
        let sq = occupied_squares(&[g.position(v)], level)[0];
        out.entry(sq).or_default().push(v);
    }
    out
}
