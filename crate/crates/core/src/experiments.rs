//! Seeded Monte Carlo experiments: crossing normalizers and the exponent `Q`,
//! scaling constants, set-to-set tightness, Hölder exponents, ball topology,
//! thick-point and KPZ dimension runs, and the annulus-event calibration.
//!
//! Every experiment is a pure function of an [`ExperimentConfig`]. Replica
//! `i` draws its field from [`replica_seed`]`(master_seed, i)`; replicas run
//! in parallel and are folded back in index order, so results do not depend
//! on the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{circle_average_periodic, sample_gff, FieldSpectrum, GridField};
use crate::fit::{self, ScalingFit};
use crate::fractal::{
    box_dimension_mask, cantor_dust_mask, kpz_dimension, kpz_f, segment_mask, square_mask, thick_dimension,
    thick_box_dimension, DimensionEstimate,
};
use crate::grid::{Geometry, Vertex};
use crate::metric::{
    build_weights, complement_components, distance, distances_from, distances_to, RegionMask, Stencil, WeightGrid,
};
use crate::multiscale::{check_event_e, segments_intersect, Patch};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer; a bijection of `u64`.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replica `i`. Distinct indices give distinct seeds because the
/// inputs `master + (i+1)·φ` are distinct mod 2⁶⁴ for `i < 2⁶⁴` and
/// [`splitmix64`] is injective.
pub fn replica_seed(master: u64, i: usize) -> u64 {
    splitmix64(master.wrapping_add((i as u64).wrapping_add(1).wrapping_mul(GOLDEN)))
}

fn default_eps_ratio() -> u32 {
    4
}
fn default_window_fraction() -> f64 {
    0.5
}

/// Parameters for the `Q` regression.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExponentParams {
    /// Number of ε values; ε doubles and n halves at each step from the finest grid.
    pub eps_count: usize,
    /// Values of ξ sharing the same fields; empty means just the top-level `xi`.
    pub xi_list: Vec<f64>,
}

impl Default for ExponentParams {
    fn default() -> Self {
        ExponentParams {
            eps_count: 4,
            xi_list: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingParams {
    pub r_list: Vec<f64>,
}

impl Default for ScalingParams {
    fn default() -> Self {
        ScalingParams {
            r_list: vec![1.0, 0.5, 0.25, 0.125],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThickParams {
    pub alpha: f64,
    pub zeta: f64,
    /// Box levels; the band is tested at radius `2^-k` for level `k`.
    pub levels: [u32; 2],
    /// Extra dyadic radii above the box side that must also be in band.
    pub span: u32,
}

impl Default for ThickParams {
    fn default() -> Self {
        ThickParams {
            alpha: 0.5,
            zeta: 0.1,
            levels: [3, 7],
            span: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KpzSet {
    Segment,
    Square,
    CantorDust,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KpzParams {
    pub set: KpzSet,
    /// Dyadic levels of the diameter sums. Squares much smaller than a few ε
    /// see an almost smooth metric and pull `s*` toward the Euclidean
    /// dimension; the default stops at side 4ε for `n = 1024`, `L = 2`.
    pub levels: [u32; 2],
    pub cantor_depth: u32,
}

impl Default for KpzParams {
    fn default() -> Self {
        KpzParams {
            set: KpzSet::Segment,
            levels: [2, 5],
            cantor_depth: 7,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BallParams {
    pub quantile: f64,
    /// Grids `n, 2n, …` compared at fixed physical geometry.
    pub refinements: usize,
    /// Values of ξ sharing the same fields; empty means just `xi`.
    pub xi_list: Vec<f64>,
}

impl Default for BallParams {
    fn default() -> Self {
        BallParams {
            quantile: 0.001,
            refinements: 3,
            xi_list: Vec::new(),
        }
    }
}

/// A compact set for the tightness experiment, in units of the scale `r`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SetDescriptor {
    Circle { center: [f64; 2], radius: f64 },
    Segment { start: [f64; 2], end: [f64; 2] },
}

impl SetDescriptor {
    fn scaled(&self, r: f64) -> SetDescriptor {
        match self {
            SetDescriptor::Circle { center, radius } => SetDescriptor::Circle {
                center: [center[0] * r, center[1] * r],
                radius: radius * r,
            },
            SetDescriptor::Segment { start, end } => SetDescriptor::Segment {
                start: [start[0] * r, start[1] * r],
                end: [end[0] * r, end[1] * r],
            },
        }
    }

    /// Euclidean distance from `p` to the set.
    fn distance_to(&self, p: [f64; 2]) -> f64 {
        match self {
            SetDescriptor::Circle { center, radius } => (dist(p, *center) - radius).abs(),
            SetDescriptor::Segment { start, end } => point_segment_distance(p, *start, *end),
        }
    }

    /// Lattice raster: vertices within `spacing/√2` of the set, which makes
    /// the raster 8-connected.
    pub fn raster(&self, g: &Geometry) -> RegionMask {
        let tol = g.spacing * std::f64::consts::FRAC_1_SQRT_2;
        RegionMask::from_fn(*g, |p| self.distance_to(p) <= tol)
    }
}

/// Whether two descriptors are disjoint as subsets of the plane.
pub fn sets_disjoint(a: &SetDescriptor, b: &SetDescriptor) -> bool {
    use SetDescriptor::*;
    match (a, b) {
        (Circle { center: c1, radius: r1 }, Circle { center: c2, radius: r2 }) => {
            let d = dist(*c1, *c2);
            d > r1 + r2 || d < (r1 - r2).abs()
        }
        (Circle { center, radius }, Segment { start, end }) | (Segment { start, end }, Circle { center, radius }) => {
            let near = point_segment_distance(*center, *start, *end);
            let far = dist(*center, *start).max(dist(*center, *end));
            near > *radius || far < *radius
        }
        (Segment { start: a1, end: a2 }, Segment { start: b1, end: b2 }) => !segments_intersect(*a1, *a2, *b1, *b2),
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0)
    };
    dist(p, [a[0] + t * d[0], a[1] + t * d[1]])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TightnessParams {
    pub r: f64,
    pub k1: SetDescriptor,
    pub k2: SetDescriptor,
    /// Half side of the square domain `U` (centred at the origin).
    pub domain_half: f64,
    pub a_list: Vec<f64>,
}

impl Default for TightnessParams {
    fn default() -> Self {
        TightnessParams {
            r: 0.5,
            k1: SetDescriptor::Circle {
                center: [0.0, 0.0],
                radius: 0.25,
            },
            k2: SetDescriptor::Circle {
                center: [0.0, 0.0],
                radius: 0.75,
            },
            domain_half: 1.0,
            a_list: vec![1.0, 1.25, 1.5, 2.0, 3.0, 5.0, 8.0],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HolderParams {
    pub sources: usize,
    pub targets: usize,
    pub min_sep: f64,
    pub max_sep: f64,
    pub chi_margin: f64,
    /// Use this `Q` instead of estimating it from the same fields.
    pub q_hat: Option<f64>,
}

impl Default for HolderParams {
    fn default() -> Self {
        HolderParams {
            sources: 100,
            targets: 100,
            min_sep: 0.01,
            max_sep: 0.1,
            chi_margin: 0.5,
            q_hat: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistanceParams {
    pub inner: f64,
    pub outer: f64,
}

impl Default for DistanceParams {
    fn default() -> Self {
        DistanceParams { inner: 0.25, outer: 0.5 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EventParams {
    pub radii: Vec<f64>,
    pub points_per_replica: usize,
    pub quantile: f64,
}

impl Default for EventParams {
    fn default() -> Self {
        EventParams {
            radii: vec![1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0],
            points_per_replica: 5,
            quantile: 0.9,
        }
    }
}

/// One run's configuration. Top-level keys are shared; each experiment reads
/// its own table, all of which have defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub xi: f64,
    /// Vertices per side of the (finest) torus lattice.
    pub n: usize,
    /// Torus period.
    #[serde(rename = "L")]
    pub side: f64,
    pub replicas: usize,
    pub master_seed: u64,
    #[serde(default = "default_eps_ratio")]
    pub eps_ratio: u32,
    #[serde(default = "default_window_fraction")]
    pub window_fraction: f64,
    #[serde(default)]
    pub stencil: Stencil,
    #[serde(default)]
    pub exponent: ExponentParams,
    #[serde(default)]
    pub scaling: ScalingParams,
    #[serde(default)]
    pub thick: ThickParams,
    #[serde(default)]
    pub kpz: KpzParams,
    #[serde(default)]
    pub ball: BallParams,
    #[serde(default)]
    pub tightness: TightnessParams,
    #[serde(default)]
    pub holder: HolderParams,
    #[serde(default)]
    pub distance: DistanceParams,
    #[serde(default)]
    pub events: EventParams,
}

fn positive(key: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::validation(key, format!("must be positive and finite, got {v}")))
    }
}

impl ExperimentConfig {
    /// A config with every experiment table at its default.
    pub fn new(xi: f64, n: usize, side: f64, replicas: usize, master_seed: u64) -> Self {
        ExperimentConfig {
            xi,
            n,
            side,
            replicas,
            master_seed,
            eps_ratio: default_eps_ratio(),
            window_fraction: default_window_fraction(),
            stencil: Stencil::default(),
            exponent: ExponentParams::default(),
            scaling: ScalingParams::default(),
            thick: ThickParams::default(),
            kpz: KpzParams::default(),
            ball: BallParams::default(),
            tightness: TightnessParams::default(),
            holder: HolderParams::default(),
            distance: DistanceParams::default(),
            events: EventParams::default(),
        }
    }

    /// Checks every field; errors name the offending key.
    pub fn validate(&self) -> Result<()> {
        positive("xi", self.xi)?;
        if self.n < 64 || !self.n.is_power_of_two() {
            return Err(Error::validation("n", format!("must be a power of two ≥ 64, got {}", self.n)));
        }
        positive("L", self.side)?;
        if self.replicas < 1 {
            return Err(Error::validation("replicas", "must be at least 1"));
        }
        if self.eps_ratio < 2 {
            return Err(Error::validation("eps_ratio", format!("must be at least 2, got {}", self.eps_ratio)));
        }
        if !(self.window_fraction > 0.0 && self.window_fraction <= 1.0) {
            return Err(Error::validation("window_fraction", "must lie in (0, 1]"));
        }
        if self.exponent.eps_count < 3 {
            return Err(Error::validation("exponent.eps_count", "must be at least 3"));
        }
        for (k, x) in self.exponent.xi_list.iter().enumerate() {
            positive(&format!("exponent.xi_list[{k}]"), *x)?;
        }
        if self.scaling.r_list.len() < 3 {
            return Err(Error::validation("scaling.r_list", "needs at least 3 radii"));
        }
        for (k, r) in self.scaling.r_list.iter().enumerate() {
            let dyadic = *r > 0.0 && r.log2().fract() == 0.0;
            if !dyadic {
                return Err(Error::validation(format!("scaling.r_list[{k}]"), format!("{r} is not a power of two")));
            }
        }
        let t = &self.thick;
        positive("thick.zeta", t.zeta)?;
        if t.levels[1] < t.levels[0] + 3 {
            return Err(Error::validation("thick.levels", "must span at least 4 levels"));
        }
        if self.kpz.levels[1] < self.kpz.levels[0] + 3 {
            return Err(Error::validation("kpz.levels", "must span at least 4 levels"));
        }
        if !(self.ball.quantile > 0.0 && self.ball.quantile < 1.0) {
            return Err(Error::validation("ball.quantile", "must lie in (0, 1)"));
        }
        if self.ball.refinements < 1 {
            return Err(Error::validation("ball.refinements", "must be at least 1"));
        }
        for (k, x) in self.ball.xi_list.iter().enumerate() {
            positive(&format!("ball.xi_list[{k}]"), *x)?;
        }
        positive("tightness.r", self.tightness.r)?;
        positive("tightness.domain_half", self.tightness.domain_half)?;
        if self.tightness.a_list.iter().any(|a| !(*a >= 1.0)) {
            return Err(Error::validation("tightness.a_list", "entries must be at least 1"));
        }
        let h = &self.holder;
        positive("holder.min_sep", h.min_sep)?;
        if !(h.max_sep > h.min_sep) {
            return Err(Error::validation("holder.max_sep", "must exceed holder.min_sep"));
        }
        if h.sources == 0 || h.targets == 0 {
            return Err(Error::validation("holder.sources", "source and target counts must be positive"));
        }
        positive("distance.inner", self.distance.inner)?;
        if !(self.distance.outer > self.distance.inner) {
            return Err(Error::validation("distance.outer", "must exceed distance.inner"));
        }
        if !(self.events.quantile > 0.0 && self.events.quantile < 1.0) {
            return Err(Error::validation("events.quantile", "must lie in (0, 1)"));
        }
        Ok(())
    }

    pub fn geometry(&self) -> Result<Geometry> {
        Geometry::centered_torus(self.n, self.side)
    }

    pub fn spacing(&self) -> f64 {
        self.side / self.n as f64
    }

    /// Mollifier scale on the finest lattice.
    pub fn eps0(&self) -> f64 {
        self.eps_ratio as f64 * self.spacing()
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.replicas).map(|i| replica_seed(self.master_seed, i)).collect()
    }

    fn weights(&self, mollified: &GridField, xi: f64, eps: f64) -> Result<WeightGrid> {
        Ok(build_weights(mollified, xi)?.with_eps(eps).with_stencil(self.stencil))
    }

    fn power_warning(&self) -> Option<String> {
        (self.replicas < 8).then(|| {
            format!(
                "only {} replicas; medians from fewer than 8 replicas have little statistical power",
                self.replicas
            )
        })
    }
}

/// Runs `f` for each replica in parallel and returns results in replica order.
fn per_replica<T: Send>(cfg: &ExperimentConfig, f: impl Fn(usize, u64) -> Result<T> + Sync) -> Result<Vec<T>> {
    cfg.seeds()
        .into_par_iter()
        .enumerate()
        .map(|(i, s)| f(i, s))
        .collect()
}

/// Mollified copies of one field for a jointly refined sequence: level `j`
/// uses `ε_j = eps_ratio · spacing · 2^j` and keeps every `2^j`-th vertex, so
/// `ε_j` is always `eps_ratio` spacings of its own lattice.
pub fn coupled_mollified(h: &GridField, eps_ratio: f64, levels: usize) -> Result<Vec<GridField>> {
    let spec = FieldSpectrum::new(h);
    (0..levels)
        .map(|j| {
            let f = 1usize << j;
            let eps = eps_ratio * h.spacing() * f as f64;
            spec.mollify(eps)?.subsample(f)
        })
        .collect()
}

/// Left-to-right crossing distance of the closed axis-parallel square of the
/// given side about `center`, with paths confined to the square.
pub fn square_crossing(w: &WeightGrid, center: [f64; 2], side: f64) -> Result<f64> {
    let g = w.geometry();
    let h = 0.5 * side;
    if !g.contains_disk(center, h) {
        return Err(Error::OutOfDomain(format!("square of side {side} leaves the lattice")));
    }
    if side < 4.0 * g.spacing {
        return Err(Error::Resolution(format!(
            "square of side {side} spans fewer than 4 spacings of {}",
            g.spacing
        )));
    }
    let p = Patch::new(w, [center[0] - h, center[0] + h], [center[1] - h, center[1] + h])?;
    let left: Vec<Vertex> = (p.rows.0..=p.rows.1).map(|r| p.to_local((r, p.cols.0))).collect();
    let right: Vec<Vertex> = (p.rows.0..=p.rows.1).map(|r| p.to_local((r, p.cols.1))).collect();
    Ok(distance(&p.w, &left, &right, &p.mask, false)?.distance)
}

/// Median crossing of the central unit square at a single ε.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AEstimate {
    pub eps: f64,
    pub n: usize,
    pub median: f64,
    pub samples: Vec<f64>,
    pub warning: Option<String>,
}

/// `a_ε`: median over replicas of the unit-square crossing distance on the
/// lattice with `ε = eps_ratio · spacing`. The lattice side is chosen from
/// `eps` and must be a power of two.
pub fn estimate_a_eps(cfg: &ExperimentConfig, eps: f64) -> Result<AEstimate> {
    cfg.validate()?;
    positive("eps", eps)?;
    let spacing = eps / cfg.eps_ratio as f64;
    let nf = cfg.side / spacing;
    let n = nf.round() as usize;
    if (nf - n as f64).abs() > 1e-9 * nf || n < 64 || !n.is_power_of_two() {
        return Err(Error::Config(format!(
            "ε = {eps} needs a lattice of {nf} vertices per side; only powers of two ≥ 64 are supported"
        )));
    }
    let samples = per_replica(cfg, |_, seed| {
        let h = sample_gff(n, cfg.side, seed)?;
        let m = FieldSpectrum::new(&h).mollify(eps)?;
        square_crossing(&cfg.weights(&m, cfg.xi, eps)?, [0.0, 0.0], 1.0)
    })?;
    Ok(AEstimate {
        eps,
        n,
        median: fit::median(&samples),
        samples,
        warning: cfg.power_warning(),
    })
}

/// Fitted background charge `Q̂ = (1 − slope)/ξ` from `log a_ε` against `log ε`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QEstimate {
    pub xi: f64,
    pub q_hat: f64,
    /// `√(fit² + sampling²)/ξ`: residual scatter of the regression combined
    /// with the replica-to-replica spread of per-replica slopes.
    pub q_stderr: f64,
    pub fit: ScalingFit,
    pub sampling_se_slope: f64,
    pub eps_list: Vec<f64>,
    pub n_list: Vec<usize>,
    pub replicas_per_eps: usize,
    /// Per-ε medians, i.e. the `a_ε` values.
    pub medians: Vec<f64>,
    /// `crossings[j][i]`: replica `i` at `eps_list[j]`.
    pub crossings: Vec<Vec<f64>>,
    pub warning: Option<String>,
}

/// Joint-refinement ε ladder for the config: `ε_j = eps_ratio·spacing·2^j`
/// on lattices `n/2^j`.
pub fn eps_ladder(cfg: &ExperimentConfig) -> Result<(Vec<f64>, Vec<usize>)> {
    let k = cfg.exponent.eps_count;
    if k < 4 {
        return Err(Error::Config(format!("the Q regression needs at least 4 ε values, got {k}")));
    }
    let eps: Vec<f64> = (0..k).map(|j| cfg.eps0() * (1u64 << j) as f64).collect();
    let ns: Vec<usize> = (0..k).map(|j| cfg.n >> j).collect();
    let coarse = cfg.spacing() * (1u64 << (k - 1)) as f64;
    if cfg.side <= 1.0 + 2.0 * coarse {
        return Err(Error::Config(format!("the torus period {} leaves no room for the unit square", cfg.side)));
    }
    if 1.0 < 8.0 * coarse {
        return Err(Error::Resolution(format!(
            "the coarsest lattice (spacing {coarse}) resolves the unit square with fewer than 8 spacings"
        )));
    }
    Ok((eps, ns))
}

/// [`estimate_q`] for several ξ on the same fields.
pub fn estimate_q_multi(cfg: &ExperimentConfig, xis: &[f64]) -> Result<Vec<QEstimate>> {
    cfg.validate()?;
    for &xi in xis {
        if !(xi > 0.0) {
            return Err(Error::Config(format!("xi must be positive, got {xi}")));
        }
    }
    let (eps, ns) = eps_ladder(cfg)?;
    // per replica: [xi][j]
    let raw: Vec<Vec<Vec<f64>>> = per_replica(cfg, |_, seed| {
        let h = sample_gff(cfg.n, cfg.side, seed)?;
        let fields = coupled_mollified(&h, cfg.eps_ratio as f64, eps.len())?;
        xis.iter()
            .map(|&xi| {
                fields
                    .iter()
                    .zip(&eps)
                    .map(|(m, &e)| square_crossing(&cfg.weights(m, xi, e)?, [0.0, 0.0], 1.0))
                    .collect()
            })
            .collect()
    })?;
    let log_eps: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    xis.iter()
        .enumerate()
        .map(|(a, &xi)| {
            let crossings: Vec<Vec<f64>> = (0..eps.len())
                .map(|j| raw.iter().map(|rep| rep[a][j]).collect())
                .collect();
            let medians: Vec<f64> = crossings.iter().map(|c| fit::median(c)).collect();
            let log_med: Vec<f64> = medians.iter().map(|m| m.ln()).collect();
            let fit = ScalingFit::fit(&log_eps, &log_med)?;
            let slopes: Vec<f64> = raw
                .iter()
                .map(|rep| {
                    let y: Vec<f64> = rep[a].iter().map(|d| d.ln()).collect();
                    ScalingFit::fit(&log_eps, &y).map(|f| f.slope)
                })
                .collect::<Result<_>>()?;
            let sampling = if slopes.len() > 1 {
                (fit::variance(&slopes) / slopes.len() as f64).sqrt()
            } else {
                0.0
            };
            Ok(QEstimate {
                xi,
                q_hat: (1.0 - fit.slope) / xi,
                q_stderr: fit.stderr_slope.hypot(sampling) / xi,
                sampling_se_slope: sampling,
                fit,
                eps_list: eps.clone(),
                n_list: ns.clone(),
                replicas_per_eps: cfg.replicas,
                medians,
                crossings,
                warning: cfg.power_warning(),
            })
        })
        .collect()
}

pub fn estimate_q(cfg: &ExperimentConfig) -> Result<QEstimate> {
    Ok(estimate_q_multi(cfg, &[cfg.xi])?.remove(0))
}

/// The ξ interval on which `Q̂` crosses 2, if the estimates bracket it.
pub fn xi_crit_bracket(estimates: &[QEstimate]) -> Option<[f64; 2]> {
    let mut pts: Vec<(f64, f64)> = estimates.iter().map(|e| (e.xi, e.q_hat)).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts.windows(2)
        .find(|p| (p[0].1 - 2.0) * (p[1].1 - 2.0) <= 0.0)
        .map(|p| [p[0].0, p[1].0])
}

/// Per-replica measurements at scale `r`: crossing of the `r`-square about
/// the origin and the circle average `h_r(0)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleSample {
    pub r: f64,
    pub crossing: f64,
    pub h_r: f64,
}

fn scale_samples(w: &WeightGrid, h: &GridField, r_list: &[f64]) -> Result<Vec<ScaleSample>> {
    r_list
        .iter()
        .map(|&r| {
            Ok(ScaleSample {
                r,
                crossing: square_crossing(w, [0.0, 0.0], r)?,
                h_r: circle_average_periodic(h, [0.0, 0.0], r)?.value,
            })
        })
        .collect()
}

/// `c_r` at the smallest available ε, with a log-log fit against `r`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingConstants {
    pub xi: f64,
    pub eps: f64,
    pub a_eps: f64,
    pub r_list: Vec<f64>,
    pub c_r: Vec<f64>,
    /// `log c_r` against `log r`; the slope estimates `ξQ`.
    pub fit: ScalingFit,
    /// `Λ = 1 + max |log(c_{r'}/c_r)/log(r'/r)|` over pairs `r' < r`.
    pub lambda: f64,
    /// Whether `Λ⁻¹δ^Λ ≤ c_{δr}/c_r ≤ Λδ^{−Λ}` held for every pair. It always
    /// does for this choice of `Λ`, so it is recorded rather than tested.
    pub sandwich_holds: bool,
    /// `samples[i]`: replica `i`, one entry per radius.
    pub samples: Vec<Vec<ScaleSample>>,
    pub warning: Option<String>,
}

fn c_r_from_samples(xi: f64, a: f64, samples: &[Vec<ScaleSample>], k: usize) -> f64 {
    let v: Vec<f64> = samples.iter().map(|s| s[k].crossing * (-xi * s[k].h_r).exp()).collect();
    fit::median(&v) / a
}

/// `c_r = median_i[D_r,i · e^{−ξ h_r,i(0)}] / a_ε` with `D_r` the crossing of
/// the `r`-square about the origin and `a_ε` the median unit crossing.
pub fn estimate_scaling_constants(cfg: &ExperimentConfig, r_list: &[f64]) -> Result<ScalingConstants> {
    cfg.validate()?;
    if r_list.len() < 4 {
        return Err(Error::Config(format!("need at least 4 radii, got {}", r_list.len())));
    }
    if let Some(r) = r_list.iter().find(|r| !(**r > 0.0 && r.log2().fract() == 0.0)) {
        return Err(Error::Config(format!("radius {r} is not dyadic")));
    }
    let eps = cfg.eps0();
    if let Some(r) = r_list.iter().find(|r| **r < 8.0 * eps) {
        return Err(Error::Resolution(format!(
            "radius {r} is below 8ε = {}; refine the lattice",
            8.0 * eps
        )));
    }
    let samples: Vec<(f64, Vec<ScaleSample>)> = per_replica(cfg, |_, seed| {
        let h = sample_gff(cfg.n, cfg.side, seed)?;
        let w = cfg.weights(&FieldSpectrum::new(&h).mollify(eps)?, cfg.xi, eps)?;
        Ok((square_crossing(&w, [0.0, 0.0], 1.0)?, scale_samples(&w, &h, r_list)?))
    })?;
    let a = fit::median(&samples.iter().map(|s| s.0).collect::<Vec<_>>());
    let samples: Vec<Vec<ScaleSample>> = samples.into_iter().map(|s| s.1).collect();
    let c_r: Vec<f64> = (0..r_list.len()).map(|k| c_r_from_samples(cfg.xi, a, &samples, k)).collect();
    let lx: Vec<f64> = r_list.iter().map(|r| r.ln()).collect();
    let ly: Vec<f64> = c_r.iter().map(|c| c.ln()).collect();
    let fit = ScalingFit::fit(&lx, &ly)?;
    let mut max_exp: f64 = 0.0;
    let mut pairs = Vec::new();
    for a in 0..r_list.len() {
        for b in 0..r_list.len() {
            if r_list[b] < r_list[a] {
                let delta = r_list[b] / r_list[a];
                let ratio = c_r[b] / c_r[a];
                max_exp = max_exp.max((ratio.ln() / delta.ln()).abs());
                pairs.push((delta, ratio));
            }
        }
    }
    let lambda = max_exp + 1.0;
    let sandwich_holds = pairs
        .iter()
        .all(|&(d, q)| q >= d.powf(lambda) / lambda && q <= lambda * d.powf(-lambda));
    Ok(ScalingConstants {
        xi: cfg.xi,
        eps,
        a_eps: a,
        r_list: r_list.to_vec(),
        c_r,
        fit,
        lambda,
        sandwich_holds,
        samples,
        warning: cfg.power_warning(),
    })
}

/// Empirical probabilities of `A⁻¹ ≤ D(rK₁, rK₂; rU)/(a_ε c_r e^{ξh_r(0)}) ≤ A`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TightnessTable {
    pub r: f64,
    pub a_eps: f64,
    pub c_r: f64,
    pub a_list: Vec<f64>,
    pub probability: Vec<f64>,
    /// Smallest `A` at which the empirical probability reaches 0.95.
    pub a_95: f64,
    /// Per-replica normalized distances.
    pub ratios: Vec<f64>,
    pub distances: Vec<f64>,
    pub h_r: Vec<f64>,
    pub warning: Option<String>,
}

impl TightnessTable {
    pub fn probability_at(ratios: &[f64], a: f64) -> f64 {
        let hit = ratios.iter().filter(|&&q| q >= 1.0 / a && q <= a).count();
        hit as f64 / ratios.len() as f64
    }
}

pub fn set_distance_tightness(
    cfg: &ExperimentConfig,
    k1: &SetDescriptor,
    k2: &SetDescriptor,
    a_list: &[f64],
) -> Result<TightnessTable> {
    cfg.validate()?;
    if !sets_disjoint(k1, k2) {
        return Err(Error::Config("the two compact sets overlap".into()));
    }
    if a_list.iter().any(|a| !(*a >= 1.0)) {
        return Err(Error::Config("every A must be at least 1".into()));
    }
    let p = &cfg.tightness;
    let r = p.r;
    let g = cfg.geometry()?;
    let u = r * p.domain_half;
    if !g.contains_disk([0.0, 0.0], u) {
        return Err(Error::OutOfDomain(format!("domain of half side {u} leaves the lattice")));
    }
    let domain = RegionMask::rect(g, [-u, u], [-u, u]);
    let (s1, s2) = (k1.scaled(r), k2.scaled(r));
    let (m1, m2) = (s1.raster(&g).and(&domain)?, s2.raster(&g).and(&domain)?);
    if m1.is_empty() || m2.is_empty() {
        return Err(Error::Config("a compact set misses the domain".into()));
    }
    if !m1.and(&m2)?.is_empty() {
        return Err(Error::Config("the two sets overlap at this resolution".into()));
    }
    let (v1, v2) = (m1.vertices(), m2.vertices());
    let eps = cfg.eps0();
    let per: Vec<(f64, ScaleSample, f64)> = per_replica(cfg, |_, seed| {
        let h = sample_gff(cfg.n, cfg.side, seed)?;
        let w = cfg.weights(&FieldSpectrum::new(&h).mollify(eps)?, cfg.xi, eps)?;
        let unit = square_crossing(&w, [0.0, 0.0], 1.0)?;
        let s = scale_samples(&w, &h, &[r])?.remove(0);
        let d = distance(&w, &v1, &v2, &domain, false)?.distance;
        Ok((unit, s, d))
    })?;
    let a = fit::median(&per.iter().map(|p| p.0).collect::<Vec<_>>());
    let samples: Vec<Vec<ScaleSample>> = per.iter().map(|p| vec![p.1.clone()]).collect();
    let c_r = c_r_from_samples(cfg.xi, a, &samples, 0);
    let ratios: Vec<f64> = per
        .iter()
        .map(|p| p.2 / (a * c_r * (cfg.xi * p.1.h_r).exp()))
        .collect();
    let probability = a_list.iter().map(|&x| TightnessTable::probability_at(&ratios, x)).collect();
    let spread: Vec<f64> = ratios.iter().map(|q| q.max(1.0 / q)).collect();
    Ok(TightnessTable {
        r,
        a_eps: a,
        c_r,
        a_list: a_list.to_vec(),
        probability,
        a_95: fit::quantile(&spread, 0.95),
        ratios,
        distances: per.iter().map(|p| p.2).collect(),
        h_r: per.iter().map(|p| p.1.h_r).collect(),
        warning: cfg.power_warning(),
    })
}

/// One sampled pair for the Hölder check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairSample {
    pub replica: usize,
    pub separation: f64,
    pub distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderReport {
    pub xi: f64,
    pub q_hat: f64,
    pub chi_margin: f64,
    /// `ξ(Q̂ + 2) + margin`.
    pub bound: f64,
    pub a_eps: f64,
    /// Largest `log(D/a_ε)/log|z − w|` per replica.
    pub replica_max: Vec<f64>,
    pub max_exponent: f64,
    pub median_exponent: f64,
    /// Standard error of the mean of `replica_max`.
    pub stderr: f64,
    pub holds: bool,
    pub replicas_holding: usize,
    pub pairs: Vec<PairSample>,
}

fn holder_exponent(p: &PairSample, a: f64) -> f64 {
    (p.distance / a).ln() / p.separation.ln()
}

/// Random pairs at log-uniform separations in `[min_sep, max_sep]` with both
/// points in the window; `D` is the full-lattice distance normalized by the
/// median unit crossing.
pub fn holder_check(cfg: &ExperimentConfig, q_hat: f64, chi_margin: f64) -> Result<HolderReport> {
    cfg.validate()?;
    let p = &cfg.holder;
    if p.max_sep >= 1.0 {
        return Err(Error::Config("holder.max_sep must be below 1 so that log|z − w| < 0".into()));
    }
    let eps = cfg.eps0();
    let g = cfg.geometry()?;
    let window = RegionMask::window(g, cfg.window_fraction);
    let window_vs = window.vertices();
    if window_vs.is_empty() {
        return Err(Error::Config("empty measurement window".into()));
    }
    let full = RegionMask::full(g);
    let per: Vec<(f64, Vec<PairSample>)> = per_replica(cfg, |i, seed| {
        let h = sample_gff(cfg.n, cfg.side, seed)?;
        let w = cfg.weights(&FieldSpectrum::new(&h).mollify(eps)?, cfg.xi, eps)?;
        let unit = square_crossing(&w, [0.0, 0.0], 1.0)?;
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ 0x484F_4C44_4552));
        let (lo, hi) = (p.min_sep.ln(), p.max_sep.ln());
        let mut pairs = Vec::with_capacity(p.sources * p.targets);
        for _ in 0..p.sources {
            let s = window_vs[rng.gen_range(0..window_vs.len())];
            let zs = g.position(s);
            let mut targets = Vec::with_capacity(p.targets);
            let mut tries = 0;
            while targets.len() < p.targets {
                tries += 1;
                if tries > 1000 * p.targets {
                    return Err(Error::Config("cannot place targets inside the window".into()));
                }
                let sep = rng.gen_range(lo..hi).exp();
                let th = rng.gen_range(0.0..std::f64::consts::TAU);
                let Some(t) = g.nearest_vertex([zs[0] + sep * th.cos(), zs[1] + sep * th.sin()]) else {
                    continue;
                };
                if t != s && window.contains(t) {
                    targets.push(t);
                }
            }
            let d = distances_to(&w, s, &targets, &full)?;
            pairs.extend(targets.iter().zip(d).map(|(t, d)| PairSample {
                replica: i,
                separation: dist(zs, g.position(*t)),
                distance: d,
            }));
        }
        Ok((unit, pairs))
    })?;
    let a = fit::median(&per.iter().map(|p| p.0).collect::<Vec<_>>());
    let replica_max: Vec<f64> = per
        .iter()
        .map(|(_, ps)| ps.iter().map(|p| holder_exponent(p, a)).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let bound = cfg.xi * (q_hat + 2.0) + chi_margin;
    let max_exponent = replica_max.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let stderr = if replica_max.len() > 1 {
        (fit::variance(&replica_max) / replica_max.len() as f64).sqrt()
    } else {
        0.0
    };
    Ok(HolderReport {
        xi: cfg.xi,
        q_hat,
        chi_margin,
        bound,
        a_eps: a,
        median_exponent: fit::median(&replica_max),
        max_exponent,
        stderr,
        holds: max_exponent <= bound,
        replicas_holding: replica_max.iter().filter(|m| **m <= bound).count(),
        replica_max,
        pairs: per.into_iter().flat_map(|p| p.1).collect(),
    })
}

/// Complement-component counts of quantile-radius metric balls.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallRow {
    pub xi: f64,
    pub n: usize,
    pub median_components: f64,
    pub median_radius: f64,
    pub components: Vec<usize>,
    pub radii: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallTopology {
    pub quantile: f64,
    pub rows: Vec<BallRow>,
    /// Replica 0's balls, one per `(ξ, n)` row, for export.
    #[serde(skip)]
    pub first_balls: Vec<RegionMask>,
}

impl BallTopology {
    pub fn row(&self, xi: f64, n: usize) -> Option<&BallRow> {
        self.rows.iter().find(|r| r.xi == xi && r.n == n)
    }
}

/// Window vertices with a 4-neighbour outside the window.
fn window_boundary(window: &RegionMask) -> Vec<Vertex> {
    let n = window.geometry().n;
    window
        .vertices()
        .into_iter()
        .filter(|&(r, c)| {
            r == 0
                || c == 0
                || r + 1 == n
                || c + 1 == n
                || !window.contains((r - 1, c))
                || !window.contains((r + 1, c))
                || !window.contains((r, c - 1))
                || !window.contains((r, c + 1))
        })
        .collect()
}

/// Ball about the window centre with radius the given quantile of the
/// centre-to-window-boundary distances, and the number of components of its
/// complement in the window. Returns `(radius, components, ball)`.
pub fn quantile_ball(w: &WeightGrid, window: &RegionMask, quantile: f64) -> Result<(f64, usize, RegionMask)> {
    let g = *w.geometry();
    let center = g.center_vertex();
    let map = distances_from(w, &[center], window, f64::INFINITY)?;
    let boundary: Vec<f64> = window_boundary(window).iter().map(|v| map.get(*v)).collect();
    let radius = fit::quantile(&boundary, quantile);
    let ball = RegionMask::from_bits(g, map.values().iter().map(|d| *d <= radius).collect())?;
    let k = complement_components(&ball, window);
    Ok((radius, k, ball))
}

/// For each ξ and each grid `n·2^j` (`j < refinements`, all sharing the field
/// sampled on the finest grid), the median complement-component count.
pub fn ball_topology(cfg: &ExperimentConfig, quantile: f64, xis: &[f64]) -> Result<BallTopology> {
    cfg.validate()?;
    if !(quantile > 0.0 && quantile < 1.0) {
        return Err(Error::Config(format!("quantile must lie in (0, 1), got {quantile}")));
    }
    let k = cfg.ball.refinements;
    let fine = cfg.n << (k - 1);
    let s_fine = cfg.side / fine as f64;
    // per replica: [refinement][xi] -> (radius, count, ball if replica 0)
    let raw: Vec<Vec<Vec<(f64, usize, Option<RegionMask>)>>> = per_replica(cfg, |i, seed| {
        let h = sample_gff(fine, cfg.side, seed)?;
        let spec = FieldSpectrum::new(&h);
        (0..k)
            .map(|j| {
                let factor = 1usize << (k - 1 - j);
                let eps = cfg.eps_ratio as f64 * s_fine * factor as f64;
                let m = spec.mollify(eps)?.subsample(factor)?;
                let window = RegionMask::window(*m.geometry(), cfg.window_fraction);
                xis.iter()
                    .map(|&xi| {
                        let (r, c, b) = quantile_ball(&cfg.weights(&m, xi, eps)?, &window, quantile)?;
                        Ok((r, c, (i == 0).then_some(b)))
                    })
                    .collect()
            })
            .collect()
    })?;
    let mut rows = Vec::new();
    let mut first_balls = Vec::new();
    for (a, &xi) in xis.iter().enumerate() {
        for j in 0..k {
            first_balls.extend(raw[0][j][a].2.clone());
            let components: Vec<usize> = raw.iter().map(|rep| rep[j][a].1).collect();
            let radii: Vec<f64> = raw.iter().map(|rep| rep[j][a].0).collect();
            rows.push(BallRow {
                xi,
                n: cfg.n << j,
                median_components: fit::median(&components.iter().map(|&c| c as f64).collect::<Vec<_>>()),
                median_radius: fit::median(&radii),
                components,
                radii,
            });
        }
    }
    Ok(BallTopology {
        quantile,
        rows,
        first_balls,
    })
}

/// Scale-matched box dimension of the thick set of each replica.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThickReport {
    pub alpha: f64,
    pub zeta: f64,
    pub span: u32,
    pub theory: f64,
    /// Median over replicas whose thick set was resolved at every level.
    pub median_dimension: f64,
    /// `None` where some level had no thick square, so the fit is undefined.
    pub estimates: Vec<Option<DimensionEstimate>>,
}

pub fn thick_dimension_run(cfg: &ExperimentConfig) -> Result<ThickReport> {
    cfg.validate()?;
    let t = &cfg.thick;
    let estimates = per_replica(cfg, |_, seed| {
        let h = sample_gff(cfg.n, cfg.side, seed)?;
        let window = RegionMask::window(*h.geometry(), cfg.window_fraction);
        match thick_box_dimension(&h, t.alpha, t.zeta, t.levels[0]..=t.levels[1], &window, t.span) {
            Ok(e) => Ok(Some(e)),
            Err(Error::UndefinedDimension(_)) => Ok(None),
            Err(e) => Err(e),
        }
    })?;
    let values: Vec<f64> = estimates.iter().flatten().map(|e| e.value).collect();
    Ok(ThickReport {
        alpha: t.alpha,
        zeta: t.zeta,
        span: t.span,
        theory: thick_dimension(2.0, t.alpha),
        median_dimension: fit::median(&values),
        estimates,
    })
}

/// The test set for KPZ runs, placed in `[0, s]²` with `s` the window half side.
pub fn kpz_set(cfg: &ExperimentConfig, g: Geometry) -> RegionMask {
    let s = 0.5 * cfg.window_fraction * cfg.side;
    match cfg.kpz.set {
        KpzSet::Segment => {
            let y = g.position(g.nearest_vertex([0.0, 0.5 * s]).unwrap_or(g.center_vertex()))[1];
            segment_mask(g, [0.0, y], s)
        }
        KpzSet::Square => square_mask(g, [0.0, 0.0], s),
        KpzSet::CantorDust => cantor_dust_mask(g, cfg.kpz.cantor_depth, [0.0, 0.0], s),
    }
}

/// Quantum dimension of the KPZ test set per replica, against the KPZ
/// prediction `f(dim X)` at the same run's `Q̂`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KpzReport {
    pub xi: f64,
    pub set: KpzSet,
    pub box_dimension: f64,
    pub q: QEstimate,
    pub prediction: f64,
    pub median_s: f64,
    pub estimates: Vec<DimensionEstimate>,
    pub warning: Option<String>,
}

pub fn kpz_run(cfg: &ExperimentConfig) -> Result<KpzReport> {
    cfg.validate()?;
    let q = estimate_q(cfg)?;
    let g = cfg.geometry()?;
    let x = kpz_set(cfg, g);
    let levels = cfg.kpz.levels[0]..=cfg.kpz.levels[1];
    let boxdim = box_dimension_mask(&x, levels.clone())?.value;
    let eps = cfg.eps0();
    let estimates = per_replica(cfg, |_, seed| {
        let h = sample_gff(cfg.n, cfg.side, seed)?;
        let w = cfg.weights(&FieldSpectrum::new(&h).mollify(eps)?, cfg.xi, eps)?;
        kpz_dimension(&x, &w, levels.clone())
    })?;
    let values: Vec<f64> = estimates.iter().map(|e| if e.infinite { f64::INFINITY } else { e.value }).collect();
    let finest = (-(cfg.kpz.levels[1] as f64)).exp2();
    let small = (finest < 4.0 * eps).then(|| {
        format!("finest squares (side {finest}) are below 4ε = {}; s* is biased toward the Euclidean dimension", 4.0 * eps)
    });
    let warning = match (small, cfg.power_warning()) {
        (Some(a), Some(b)) => Some(format!("{a}; {b}")),
        (a, b) => a.or(b),
    };
    Ok(KpzReport {
        xi: cfg.xi,
        set: cfg.kpz.set,
        box_dimension: boxdim,
        prediction: kpz_f(boxdim, cfg.xi, q.q_hat)?,
        median_s: fit::median(&values),
        q,
        estimates,
        warning,
    })
}

/// Calibrated annulus-event frequencies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventCalibration {
    pub radii: Vec<f64>,
    pub c_r: Vec<f64>,
    /// Empirical `quantile` of the per-record threshold `max(scale/across, around/scale)`.
    pub c: f64,
    /// Fraction of sampled `(field, z)` with the event at some radius.
    pub fraction_any: f64,
    /// `thresholds[s][k]`: sample `s`, radius `k`.
    pub thresholds: Vec<Vec<f64>>,
    pub centers: Vec<[f64; 2]>,
}

/// Samples `(field, z)` pairs, measures both annulus distances at each
/// radius, sets `c_r` to the median of `√(across·around)·e^{−ξh_r(z)}`, then
/// picks `C` as the given quantile of the smallest threshold making each
/// record hold.
pub fn event_calibration(cfg: &ExperimentConfig) -> Result<EventCalibration> {
    cfg.validate()?;
    let p = &cfg.events;
    if p.radii.is_empty() || p.points_per_replica == 0 {
        return Err(Error::Config("event calibration needs radii and points".into()));
    }
    let eps = cfg.eps0();
    let g = cfg.geometry()?;
    let window = RegionMask::window(g, cfg.window_fraction);
    let r_big = p.radii.iter().copied().fold(0.0, f64::max);
    let half = 0.5 * cfg.window_fraction * cfg.side - 2.0 * r_big - 2.0 * cfg.spacing();
    if half <= 0.0 {
        return Err(Error::Config("the window is too small for the largest event radius".into()));
    }
    type Rec = ([f64; 2], Vec<(f64, f64, f64)>);
    let per: Vec<Vec<Rec>> = per_replica(cfg, |_, seed| {
        let h = sample_gff(cfg.n, cfg.side, seed)?;
        let w = cfg.weights(&FieldSpectrum::new(&h).mollify(eps)?, cfg.xi, eps)?;
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ 0x4556_454E_54));
        (0..p.points_per_replica)
            .map(|_| {
                let v = g
                    .nearest_vertex([rng.gen_range(-half..half), rng.gen_range(-half..half)])
                    .ok_or_else(|| Error::Config("event centre off the lattice".into()))?;
                let z = g.position(v);
                let recs = p
                    .radii
                    .iter()
                    .map(|&r| {
                        let e = check_event_e(z, r, 1.0, &w, &h, 1.0, &window)?;
                        Ok((e.across, e.around, e.h_r))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok((z, recs))
            })
            .collect()
    })?;
    let recs: Vec<Rec> = per.into_iter().flatten().collect();
    let c_r: Vec<f64> = (0..p.radii.len())
        .map(|k| {
            let v: Vec<f64> = recs
                .iter()
                .map(|(_, m)| (m[k].0 * m[k].1).sqrt() * (-cfg.xi * m[k].2).exp())
                .collect();
            fit::median(&v)
        })
        .collect();
    let thresholds: Vec<Vec<f64>> = recs
        .iter()
        .map(|(_, m)| {
            m.iter()
                .zip(&c_r)
                .map(|(&(across, around, h_r), c)| {
                    let scale = c * (cfg.xi * h_r).exp();
                    (scale / across).max(around / scale)
                })
                .collect()
        })
        .collect();
    let flat: Vec<f64> = thresholds.iter().flatten().copied().collect();
    let c = fit::quantile(&flat, p.quantile).max(1.0);
    // the event is strict, so it holds at C exactly when the threshold is below C
    let any = thresholds.iter().filter(|t| t.iter().any(|x| *x < c)).count();
    Ok(EventCalibration {
        radii: p.radii.clone(),
        c_r,
        c,
        fraction_any: any as f64 / thresholds.len() as f64,
        thresholds,
        centers: recs.iter().map(|r| r.0).collect(),
    })
}
