//! Distances across and around round or square annuli.

use serde::{Deserialize, Serialize};

use super::search::{dijkstra, Graph, LatticeGraph};
use super::{distance, DistanceResult, RegionMask, WeightGrid};
use crate::error::{Error, Result};
use crate::grid::{Geometry, Vertex};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnnulusShape {
    Round,
    /// Radii are half side lengths (Chebyshev norm).
    Square,
}

/// Closed annulus `inner ≤ |p − center| ≤ outer` in the Euclidean or
/// Chebyshev norm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnulusSpec {
    pub center: [f64; 2],
    pub inner_radius: f64,
    pub outer_radius: f64,
    pub shape: AnnulusShape,
}

impl AnnulusSpec {
    pub fn new(center: [f64; 2], inner: f64, outer: f64, shape: AnnulusShape) -> Result<Self> {
        if !(inner > 0.0 && inner < outer && outer.is_finite()) {
            return Err(Error::Config(format!("annulus radii must satisfy 0 < {inner} < {outer}")));
        }
        Ok(AnnulusSpec {
            center,
            inner_radius: inner,
            outer_radius: outer,
            shape,
        })
    }

    pub fn round(center: [f64; 2], inner: f64, outer: f64) -> Result<Self> {
        Self::new(center, inner, outer, AnnulusShape::Round)
    }

    pub fn square(center: [f64; 2], inner: f64, outer: f64) -> Result<Self> {
        Self::new(center, inner, outer, AnnulusShape::Square)
    }

    /// Radial coordinate of `p` about the centre.
    pub fn norm(&self, p: [f64; 2]) -> f64 {
        let dx = p[0] - self.center[0];
        let dy = p[1] - self.center[1];
        match self.shape {
            AnnulusShape::Round => dx.hypot(dy),
            AnnulusShape::Square => dx.abs().max(dy.abs()),
        }
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        let r = self.norm(p);
        r >= self.inner_radius && r <= self.outer_radius
    }

    /// Whether the filled outer disk/square fits inside the lattice hull.
    pub fn fits_in(&self, g: &Geometry) -> bool {
        g.contains_disk(self.center, self.outer_radius)
    }
}

/// Lattice vertices of the closed annulus.
pub fn annulus_mask(g: &Geometry, a: &AnnulusSpec) -> Result<RegionMask> {
    if !a.fits_in(g) {
        return Err(Error::OutOfDomain(format!(
            "annulus of outer radius {} about ({}, {}) leaves the lattice",
            a.outer_radius, a.center[0], a.center[1]
        )));
    }
    let tol = 1e-9 * g.spacing;
    Ok(RegionMask::from_fn(*g, |p| {
        let r = a.norm(p);
        r >= a.inner_radius - tol && r <= a.outer_radius + tol
    }))
}

fn region(w: &WeightGrid, a: &AnnulusSpec, mask: &RegionMask) -> Result<RegionMask> {
    let region = annulus_mask(w.geometry(), a)?.and(mask)?;
    if region.is_empty() {
        return Err(Error::Resolution("annulus contains no admissible vertices".into()));
    }
    Ok(region)
}

/// Distance between the inner and outer boundary of the annulus, along paths
/// inside the closed annulus (and `mask`).
pub fn distance_across(w: &WeightGrid, a: &AnnulusSpec, mask: &RegionMask) -> Result<DistanceResult> {
    let region = region(w, a, mask)?;
    let g = *w.geometry();
    let tol = 1e-9 * g.spacing;
    let n = g.n as i64;
    let mut inner = Vec::new();
    let mut outer = Vec::new();
    for v in region.vertices() {
        let (r, c) = (v.0 as i64, v.1 as i64);
        let mut touches_hole = false;
        let mut touches_outside = false;
        for (dr, dc) in [(0, 1), (1, 0), (0, -1), (-1, 0)] {
            let (nr, nc) = (r + dr, c + dc);
            if nr < 0 || nc < 0 || nr >= n || nc >= n {
                continue;
            }
            let rho = a.norm(g.position((nr as usize, nc as usize)));
            touches_hole |= rho < a.inner_radius - tol;
            touches_outside |= rho > a.outer_radius + tol;
        }
        if touches_hole {
            inner.push(v);
        }
        if touches_outside {
            outer.push(v);
        }
    }
    if inner.is_empty() || outer.is_empty() {
        return Err(Error::Resolution("annulus boundary is not resolved by the lattice".into()));
    }
    distance(w, &inner, &outer, &region, true)
}

/// Two-sheeted cover of the annulus, cut along the rightward horizontal ray
/// from the centre: an edge crossing the ray switches sheets, so a path from
/// `(p, 0)` to `(p, 1)` is a loop with odd winding number about the centre.
struct CoverGraph<'a> {
    base: LatticeGraph<'a>,
    geometry: Geometry,
    center: [f64; 2],
    nodes: usize,
}

impl CoverGraph<'_> {
    fn upper(&self, idx: usize) -> bool {
        self.geometry.position(self.geometry.vertex(idx))[1] >= self.center[1]
    }

    fn crosses(&self, u: usize, v: usize) -> bool {
        if self.upper(u) == self.upper(v) {
            return false;
        }
        let pu = self.geometry.position(self.geometry.vertex(u));
        let pv = self.geometry.position(self.geometry.vertex(v));
        let t = (self.center[1] - pu[1]) / (pv[1] - pu[1]);
        pu[0] + t * (pv[0] - pu[0]) > self.center[0]
    }
}

impl Graph for CoverGraph<'_> {
    fn node_count(&self) -> usize {
        2 * self.nodes
    }

    fn for_each_neighbor<F: FnMut(usize, f64)>(&self, node: usize, mut f: F) {
        let sheet = node / self.nodes;
        let u = node % self.nodes;
        self.base.for_each_neighbor(u, |v, cost| {
            let s = if self.crosses(u, v) { 1 - sheet } else { sheet };
            f(v + s * self.nodes, cost)
        });
    }
}

/// Length of the shortest loop in the closed annulus that separates its
/// inner and outer boundaries. Loops are restricted to winding number ±1.
pub fn distance_around(w: &WeightGrid, a: &AnnulusSpec, mask: &RegionMask) -> Result<DistanceResult> {
    let region = region(w, a, mask)?;
    let g = *w.geometry();
    let cover = CoverGraph {
        base: LatticeGraph::new(w, Some(&region)),
        geometry: g,
        center: a.center,
        nodes: g.len(),
    };
    // every odd loop uses a ray-crossing edge; start from its upper endpoint
    let mut candidates: Vec<usize> = Vec::new();
    for v in region.vertices() {
        let u = g.index(v);
        if !cover.upper(u) {
            continue;
        }
        let mut crossing = false;
        cover.base.for_each_neighbor(u, |x, _| crossing |= cover.crosses(u, x));
        if crossing {
            candidates.push(u);
        }
    }
    if candidates.is_empty() {
        return Err(Error::Resolution("annulus contains no discrete ring around its centre".into()));
    }
    candidates.sort_by(|&x, &y| {
        let rx = a.norm(g.position(g.vertex(x)));
        let ry = a.norm(g.position(g.vertex(y)));
        rx.total_cmp(&ry).then(x.cmp(&y))
    });

    const PIVOTS: usize = 2;
    let nodes = g.len();
    let mut best = f64::INFINITY;
    let mut best_loop: Option<Vec<Vertex>> = None;
    let mut pivots: Vec<Vec<f64>> = Vec::new();
    let mut relaxations = 0;
    for &p in &candidates {
        // |d(q,p₁) − d(q,p₀)| ≤ d(p₀,p₁) for every pivot q
        let lower = pivots
            .iter()
            .map(|d| (d[p + nodes] - d[p]).abs())
            .filter(|x| x.is_finite())
            .fold(0.0, f64::max);
        if lower >= best {
            continue;
        }
        let keep = pivots.len() < PIVOTS;
        let target = p + nodes;
        let out = if keep {
            dijkstra(&cover, &[p], |_| false, f64::INFINITY)
        } else {
            dijkstra(&cover, &[p], |x| x == target, best)
        };
        relaxations += out.relaxations;
        let d = out.dist[target];
        if d < best && (keep || out.reached == Some(target)) {
            best = d;
            best_loop = Some(out.path_to(target).into_iter().map(|i| g.vertex(i % nodes)).collect());
        }
        if keep {
            pivots.push(out.dist);
        }
    }
    Ok(DistanceResult {
        distance: best,
        geodesic: best_loop,
        relaxations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::Stencil;
    use std::f64::consts::PI;

    fn unit_grid(n: usize, spacing: f64) -> WeightGrid {
        let g = Geometry::new(n, spacing, [-(n as f64 - 1.0) * spacing / 2.0; 2]).unwrap();
        WeightGrid::uniform(g, 1.0).unwrap()
    }

    #[test]
    fn across_unit_weights_is_radial_gap() {
        let w = unit_grid(121, 0.01);
        let m = RegionMask::full(*w.geometry());
        let a = AnnulusSpec::round([0.0, 0.0], 0.25, 0.5).unwrap();
        let d = distance_across(&w, &a, &m).unwrap();
        // boundary vertices lie within one spacing of each circle
        assert!(d.distance <= 0.25 + 1e-9 && d.distance >= 0.25 - 0.02 - 1e-9, "{}", d.distance);
        let path = d.geodesic.unwrap();
        assert!((w.path_cost(&path).unwrap() - d.distance).abs() < 1e-9);
    }

    #[test]
    fn doubling_weights_doubles_distances() {
        let w = unit_grid(61, 0.02);
        let m = RegionMask::full(*w.geometry());
        let a = AnnulusSpec::round([0.0, 0.0], 0.2, 0.5).unwrap();
        let w2 = w.scaled(2.0).unwrap();
        assert_eq!(
            distance_across(&w2, &a, &m).unwrap().distance,
            2.0 * distance_across(&w, &a, &m).unwrap().distance
        );
        assert_eq!(
            distance_around(&w2, &a, &m).unwrap().distance,
            2.0 * distance_around(&w, &a, &m).unwrap().distance
        );
    }

    #[test]
    fn masked_out_annulus_is_a_resolution_error() {
        let w = unit_grid(41, 0.05);
        let m = RegionMask::empty(*w.geometry());
        let a = AnnulusSpec::round([0.0, 0.0], 0.25, 0.5).unwrap();
        assert!(matches!(distance_across(&w, &a, &m), Err(Error::Resolution(_))));
        assert!(matches!(distance_around(&w, &a, &m), Err(Error::Resolution(_))));
    }

    #[test]
    fn annulus_outside_lattice_is_rejected() {
        let w = unit_grid(21, 0.05);
        let m = RegionMask::full(*w.geometry());
        let a = AnnulusSpec::round([0.0, 0.0], 0.25, 0.6).unwrap();
        assert!(matches!(distance_across(&w, &a, &m), Err(Error::OutOfDomain(_))));
    }

    #[test]
    fn radial_wall_blocks_every_loop() {
        let w = unit_grid(41, 0.05);
        let g = *w.geometry();
        let m = RegionMask::from_fn(g, |p| !(p[1].abs() < 0.075 && p[0] < 0.0));
        let a = AnnulusSpec::round([0.0, 0.0], 0.3, 0.8).unwrap();
        let d = distance_around(&w, &a, &m).unwrap();
        assert!(d.distance.is_infinite());
        assert!(d.geodesic.is_none());
    }

    #[test]
    fn around_loop_is_closed_and_encloses_centre() {
        let w = unit_grid(201, 0.005);
        let m = RegionMask::full(*w.geometry());
        let a = AnnulusSpec::round([0.0, 0.0], 0.25, 0.5).unwrap();
        let d = distance_around(&w, &a, &m).unwrap();
        let lp = d.geodesic.unwrap();
        assert_eq!(lp.first(), lp.last());
        assert!((w.path_cost(&lp).unwrap() - d.distance).abs() < 1e-9);
        // hugging the inner circle: close to its circumference
        assert!((d.distance / (2.0 * PI * 0.25) - 1.0).abs() < 0.05, "{}", d.distance);
    }

    #[test]
    fn square_annulus_around_unit_weights() {
        let w = unit_grid(61, 0.02).with_stencil(Stencil::King8);
        let m = RegionMask::full(*w.geometry());
        let a = AnnulusSpec::square([0.0, 0.0], 0.2, 0.4).unwrap();
        // perimeter of the inner square, each corner cut by one diagonal step
        let d = distance_around(&w, &a, &m).unwrap();
        let cut = 4.0 * (2.0 - 2f64.sqrt()) * 0.02;
        assert!((d.distance - (1.6 - cut)).abs() < 1e-9, "{}", d.distance);
        let across = distance_across(&w, &a, &m).unwrap();
        assert!((across.distance - 0.2).abs() < 1e-9);
    }
}
