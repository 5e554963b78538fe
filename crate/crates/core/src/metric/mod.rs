//! LFPP weight grids and lattice metric quantities.
//!
//! The continuum length `∫ e^{ξ h*_ε(P(t))} |P'(t)| dt` is discretized on the
//! lattice graph given by a [`Stencil`]: an edge `u → v` with lattice offset
//! `Δ` costs `spacing · |Δ| · (w[u] + w[v]) / 2`.

mod annulus;
mod ball;
mod search;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{FieldKind, GridField};
use crate::grid::{Geometry, Vertex};

pub use annulus::{annulus_mask, distance_across, distance_around, AnnulusShape, AnnulusSpec};
pub use ball::{complement_components, metric_ball};
pub use search::{distance, distance_many, distances_from, distances_to, DistanceMap};

/// Lattice neighbourhood used for paths.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stencil {
    /// 8 neighbours: axis and diagonal steps.
    King8,
    /// 16 neighbours: king steps plus the eight (1, 2) knight steps. A knight
    /// step is admissible only if the two vertices it straddles are too, so
    /// every set that blocks king paths also blocks these.
    #[default]
    Sixteen,
}

/// One stencil offset with its Euclidean length and the straddled vertices
/// (both `None` for king steps).
#[derive(Clone, Copy, Debug)]
pub(crate) struct Step {
    pub dr: i64,
    pub dc: i64,
    pub len: f64,
    pub straddle: Option<[(i64, i64); 2]>,
}

const KING: [(i64, i64); 8] = [(0, 1), (1, 0), (0, -1), (-1, 0), (1, 1), (1, -1), (-1, 1), (-1, -1)];
const KNIGHT: [(i64, i64); 8] = [(1, 2), (2, 1), (-1, 2), (-2, 1), (1, -2), (2, -1), (-1, -2), (-2, -1)];

impl Stencil {
    pub(crate) fn steps(self) -> Vec<Step> {
        let mut out: Vec<Step> = KING
            .iter()
            .map(|&(dr, dc)| Step {
                dr,
                dc,
                len: ((dr * dr + dc * dc) as f64).sqrt(),
                straddle: None,
            })
            .collect();
        if self == Stencil::Sixteen {
            out.extend(KNIGHT.iter().map(|&(dr, dc)| {
                let straddle = if dr.abs() == 1 {
                    [(0, dc.signum()), (dr, dc.signum())]
                } else {
                    [(dr.signum(), 0), (dr.signum(), dc)]
                };
                Step {
                    dr,
                    dc,
                    len: ((dr * dr + dc * dc) as f64).sqrt(),
                    straddle: Some(straddle),
                }
            }));
        }
        out
    }

    /// Whether `(dr, dc)` is an edge offset of this stencil.
    pub fn has_offset(self, dr: i64, dc: i64) -> bool {
        self.steps().iter().any(|s| s.dr == dr && s.dc == dc)
    }
}

/// Per-vertex LFPP weights `exp(ξ · h*_ε)`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightGrid {
    geometry: Geometry,
    xi: f64,
    eps: Option<f64>,
    stencil: Stencil,
    weights: Vec<f64>,
}

/// `exp(ξ · field)` entrywise.
pub fn build_weights(mollified: &GridField, xi: f64) -> Result<WeightGrid> {
    if mollified.kind() == FieldKind::Gff {
        return Err(Error::Config(
            "weights must be built from a mollified or deterministic field".into(),
        ));
    }
    if !(xi > 0.0 && xi.is_finite()) {
        return Err(Error::Config(format!("xi must be positive, got {xi}")));
    }
    let weights: Vec<f64> = mollified.values().iter().map(|h| (xi * h).exp()).collect();
    WeightGrid::from_weights(*mollified.geometry(), weights, xi)
}

impl WeightGrid {
    /// Wrap explicit weights; all must be positive and finite.
    pub fn from_weights(geometry: Geometry, weights: Vec<f64>, xi: f64) -> Result<Self> {
        if weights.len() != geometry.len() {
            return Err(Error::Config("weight count does not match the lattice".into()));
        }
        if let Some(i) = weights.iter().position(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::Domain(format!(
                "weight at index {i} is {} (must be positive and finite)",
                weights[i]
            )));
        }
        Ok(WeightGrid {
            geometry,
            xi,
            eps: None,
            stencil: Stencil::default(),
            weights,
        })
    }

    pub fn uniform(geometry: Geometry, value: f64) -> Result<Self> {
        Self::from_weights(geometry, vec![value; geometry.len()], 0.0)
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = Some(eps);
        self
    }

    pub fn with_stencil(mut self, stencil: Stencil) -> Self {
        self.stencil = stencil;
        self
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn n(&self) -> usize {
        self.geometry.n
    }

    pub fn spacing(&self) -> f64 {
        self.geometry.spacing
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn eps(&self) -> Option<f64> {
        self.eps
    }

    pub fn stencil(&self) -> Stencil {
        self.stencil
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, v: Vertex) -> f64 {
        self.weights[self.geometry.index(v)]
    }

    /// All weights multiplied by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<WeightGrid> {
        let weights = self.weights.iter().map(|w| w * c).collect();
        self.replaced(weights)
    }

    fn replaced(&self, weights: Vec<f64>) -> Result<WeightGrid> {
        let mut out = WeightGrid::from_weights(self.geometry, weights, self.xi)?;
        out.eps = self.eps;
        out.stencil = self.stencil;
        Ok(out)
    }

    /// Weyl reweighting: `w ⊙ exp(ξ · f)` for a field `f` on the same lattice.
    pub fn reweighted(&self, f: &GridField) -> Result<WeightGrid> {
        if !self.geometry.same_as(f.geometry()) {
            return Err(Error::Config("reweighting field has a different lattice".into()));
        }
        let weights = self
            .weights
            .iter()
            .zip(f.values())
            .map(|(w, v)| w * (self.xi * v).exp())
            .collect();
        self.replaced(weights)
    }

    /// Every `factor`-th vertex in both directions.
    pub fn subsample(&self, factor: usize) -> Result<WeightGrid> {
        let geometry = self.geometry.coarsened(factor)?;
        let n = self.geometry.n;
        let weights = (0..geometry.n)
            .flat_map(|r| (0..geometry.n).map(move |c| (r * factor) * n + c * factor))
            .map(|i| self.weights[i])
            .collect();
        Ok(WeightGrid {
            geometry,
            weights,
            ..self.clone()
        })
    }

    /// Square sub-lattice of `size × size` vertices starting at `corner`.
    pub fn crop(&self, corner: Vertex, size: usize) -> Result<WeightGrid> {
        let (r0, c0) = corner;
        if size < 2 || r0 + size > self.n() || c0 + size > self.n() {
            return Err(Error::OutOfDomain(format!(
                "crop of size {size} at {corner:?} exceeds the {}-vertex lattice",
                self.n()
            )));
        }
        let origin = self.geometry.position(corner);
        let geometry = Geometry::new(size, self.spacing(), origin)?;
        let n = self.n();
        let weights = (0..size)
            .flat_map(|r| (0..size).map(move |c| (r0 + r) * n + c0 + c))
            .map(|i| self.weights[i])
            .collect();
        Ok(WeightGrid {
            geometry,
            weights,
            ..self.clone()
        })
    }

    /// Cost of the edge `u → v`; `None` if the offset is not a stencil step.
    pub fn edge_cost(&self, u: Vertex, v: Vertex) -> Option<f64> {
        let dr = v.0 as i64 - u.0 as i64;
        let dc = v.1 as i64 - u.1 as i64;
        if !self.stencil.has_offset(dr, dc) {
            return None;
        }
        let len = ((dr * dr + dc * dc) as f64).sqrt();
        Some(0.5 * self.spacing() * len * (self.weight(u) + self.weight(v)))
    }

    /// Sum of edge costs along a vertex path (0 for paths with < 2 vertices).
    pub fn path_cost(&self, path: &[Vertex]) -> Result<f64> {
        path.windows(2).try_fold(0.0, |acc, e| {
            self.edge_cost(e[0], e[1])
                .map(|c| acc + c)
                .ok_or_else(|| Error::Config(format!("{:?} → {:?} is not a lattice edge", e[0], e[1])))
        })
    }
}

/// Boolean vertex set on a lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct RegionMask {
    geometry: Geometry,
    bits: Vec<bool>,
}

impl RegionMask {
    pub fn full(geometry: Geometry) -> Self {
        RegionMask {
            geometry,
            bits: vec![true; geometry.len()],
        }
    }

    pub fn empty(geometry: Geometry) -> Self {
        RegionMask {
            geometry,
            bits: vec![false; geometry.len()],
        }
    }

    pub fn from_bits(geometry: Geometry, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != geometry.len() {
            return Err(Error::Config("mask size does not match the lattice".into()));
        }
        Ok(RegionMask { geometry, bits })
    }

    /// Mask of vertices whose physical position satisfies `pred`.
    pub fn from_fn(geometry: Geometry, pred: impl Fn([f64; 2]) -> bool) -> Self {
        let bits = (0..geometry.len())
            .map(|i| pred(geometry.position(geometry.vertex(i))))
            .collect();
        RegionMask { geometry, bits }
    }

    pub fn from_vertices(geometry: Geometry, vs: impl IntoIterator<Item = Vertex>) -> Self {
        let mut m = Self::empty(geometry);
        for v in vs {
            m.set(v, true);
        }
        m
    }

    /// Central half-open square window `[c − s/2, c + s/2)²` with side
    /// `s = fraction · period`, centred on the torus centre.
    pub fn window(geometry: Geometry, fraction: f64) -> Self {
        let half = 0.5 * fraction * geometry.period();
        let c = geometry.center();
        let tol = 1e-9 * geometry.spacing;
        Self::from_fn(geometry, |p| {
            (0..2).all(|a| p[a] >= c[a] - half - tol && p[a] < c[a] + half - tol)
        })
    }

    /// Closed axis-aligned rectangle `[x0, x1] × [y0, y1]`.
    pub fn rect(geometry: Geometry, x: [f64; 2], y: [f64; 2]) -> Self {
        let tol = 1e-9 * geometry.spacing;
        Self::from_fn(geometry, |p| {
            p[0] >= x[0] - tol && p[0] <= x[1] + tol && p[1] >= y[0] - tol && p[1] <= y[1] + tol
        })
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn contains(&self, v: Vertex) -> bool {
        v.0 < self.geometry.n && v.1 < self.geometry.n && self.bits[self.geometry.index(v)]
    }

    pub fn get(&self, idx: usize) -> bool {
        self.bits[idx]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn set(&mut self, v: Vertex, on: bool) {
        let i = self.geometry.index(v);
        self.bits[i] = on;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|b| *b)
    }

    pub fn vertices(&self) -> Vec<Vertex> {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, b)| **b)
            .map(|(i, _)| self.geometry.vertex(i))
            .collect()
    }

    pub fn points(&self) -> Vec<[f64; 2]> {
        self.vertices().into_iter().map(|v| self.geometry.position(v)).collect()
    }

    fn zip_with(&self, other: &RegionMask, f: impl Fn(bool, bool) -> bool) -> Result<RegionMask> {
        if !self.geometry.same_as(&other.geometry) {
            return Err(Error::Config("masks live on different lattices".into()));
        }
        Ok(RegionMask {
            geometry: self.geometry,
            bits: self.bits.iter().zip(&other.bits).map(|(a, b)| f(*a, *b)).collect(),
        })
    }

    pub fn and(&self, other: &RegionMask) -> Result<RegionMask> {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn or(&self, other: &RegionMask) -> Result<RegionMask> {
        self.zip_with(other, |a, b| a || b)
    }

    pub fn minus(&self, other: &RegionMask) -> Result<RegionMask> {
        self.zip_with(other, |a, b| a && !b)
    }

    pub fn complement(&self) -> RegionMask {
        RegionMask {
            geometry: self.geometry,
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    pub fn is_subset_of(&self, other: &RegionMask) -> bool {
        self.geometry.same_as(&other.geometry) && self.bits.iter().zip(&other.bits).all(|(a, b)| !a || *b)
    }

    pub fn crop(&self, corner: Vertex, size: usize) -> Result<RegionMask> {
        let (r0, c0) = corner;
        if r0 + size > self.geometry.n || c0 + size > self.geometry.n {
            return Err(Error::OutOfDomain("mask crop exceeds the lattice".into()));
        }
        let geometry = Geometry::new(size, self.geometry.spacing, self.geometry.position(corner))?;
        let n = self.geometry.n;
        let bits = (0..size)
            .flat_map(|r| (0..size).map(move |c| (r0 + r) * n + c0 + c))
            .map(|i| self.bits[i])
            .collect();
        Ok(RegionMask { geometry, bits })
    }
}

/// Shortest-path outcome. `distance` is `+∞` exactly when the targets are
/// unreachable, in which case there is no geodesic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceResult {
    pub distance: f64,
    pub geodesic: Option<Vec<Vertex>>,
    pub relaxations: u64,
}

impl DistanceResult {
    pub fn is_finite(&self) -> bool {
        self.distance.is_finite()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::mollify;

    fn geom(n: usize) -> Geometry {
        Geometry::new(n, 1.0, [0.0, 0.0]).unwrap()
    }

    #[test]
    fn zero_field_gives_unit_weights() {
        let f = GridField::zeros(geom(8));
        let w = build_weights(&f, 1.7).unwrap();
        assert!(w.weights().iter().all(|x| *x == 1.0));
    }

    #[test]
    fn constant_field_closed_form() {
        let f = GridField::constant(geom(4), 1.0);
        let w = build_weights(&f, 2.0).unwrap();
        assert!(w.weights().iter().all(|x| (x - 7.38905609893065).abs() < 1e-12));
    }

    #[test]
    fn rejects_bad_inputs() {
        let f = GridField::zeros(geom(4));
        assert!(matches!(build_weights(&f, 0.0), Err(Error::Config(_))));
        assert!(matches!(build_weights(&f, -1.0), Err(Error::Config(_))));
        let g = f.clone().with_kind(FieldKind::Gff);
        assert!(matches!(build_weights(&g, 1.0), Err(Error::Config(_))));
        assert!(WeightGrid::from_weights(geom(2), vec![1.0, 0.0, 1.0, 1.0], 1.0).is_err());
    }

    #[test]
    fn weyl_identity_on_weights() {
        let g = Geometry::new(32, 0.1, [0.0, 0.0]).unwrap();
        let h = GridField::from_fn(g, |p| (p[0] * 3.0).sin() * p[1]).unwrap();
        let f = GridField::from_fn(g, |p| 0.3 * p[0] - p[1] * p[1]).unwrap();
        let xi = 0.8;
        let mh = mollify(&h, 0.3).unwrap();
        let mf = mollify(&f, 0.3).unwrap();
        let lhs = build_weights(&crate::field::add_fields(&mh, &mf).unwrap(), xi).unwrap();
        let rhs = build_weights(&mh, xi).unwrap().reweighted(&mf).unwrap();
        for (a, b) in lhs.weights().iter().zip(rhs.weights()) {
            assert!((a / b - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn knight_steps_straddle_correct_vertices() {
        for s in Stencil::Sixteen.steps().into_iter().filter(|s| s.straddle.is_some()) {
            let [a, b] = s.straddle.unwrap();
            // straddled vertices are the king-step midpoints of the two
            // king paths approximating the knight move
            for (r, c) in [a, b] {
                assert!(r.abs() <= 1 && c.abs() <= 1 && (r, c) != (0, 0));
                let rest = (s.dr - r, s.dc - c);
                assert!(rest.0.abs() <= 1 && rest.1.abs() <= 1);
            }
        }
        assert_eq!(Stencil::King8.steps().len(), 8);
        assert_eq!(Stencil::Sixteen.steps().len(), 16);
    }

    #[test]
    fn path_cost_sums_edges() {
        let w = WeightGrid::from_weights(geom(3), (1..=9).map(f64::from).collect(), 1.0).unwrap();
        let cost = w.path_cost(&[(0, 0), (0, 1), (1, 2)]).unwrap();
        assert!((cost - (0.5 * (1.0 + 2.0) + 0.5 * 2f64.sqrt() * (2.0 + 6.0))).abs() < 1e-12);
        assert!(w.with_stencil(Stencil::King8).path_cost(&[(0, 0), (1, 2)]).is_err());
    }

    #[test]
    fn window_is_half_open_and_centred() {
        let g = Geometry::centered_torus(16, 2.0).unwrap();
        let w = RegionMask::window(g, 0.5);
        assert_eq!(w.count(), 64);
        assert!(w.contains((4, 4)));
        assert!(!w.contains((12, 12)));
    }
}
