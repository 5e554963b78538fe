//! Label-setting shortest paths on the lattice graph.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use super::{DistanceResult, RegionMask, Step, WeightGrid};
use crate::error::{Error, Result};
use crate::grid::{Geometry, Vertex};

pub(crate) const NO_PRED: u32 = u32::MAX;

pub(crate) trait Graph {
    fn node_count(&self) -> usize;
    fn for_each_neighbor<F: FnMut(usize, f64)>(&self, node: usize, f: F);
}

/// Weighted lattice restricted to an optional vertex mask.
pub(crate) struct LatticeGraph<'a> {
    weights: &'a [f64],
    mask: Option<&'a [bool]>,
    n: usize,
    steps: Vec<Step>,
    half_len: Vec<f64>,
}

impl<'a> LatticeGraph<'a> {
    pub fn new(w: &'a WeightGrid, mask: Option<&'a RegionMask>) -> Self {
        let steps = w.stencil().steps();
        let half_len = steps.iter().map(|s| 0.5 * w.spacing() * s.len).collect();
        LatticeGraph {
            weights: w.weights(),
            mask: mask.map(|m| m.bits()),
            n: w.n(),
            steps,
            half_len,
        }
    }

    #[inline]
    fn open(&self, r: i64, c: i64) -> Option<usize> {
        let n = self.n as i64;
        if r < 0 || c < 0 || r >= n || c >= n {
            return None;
        }
        let idx = (r * n + c) as usize;
        match self.mask {
            Some(m) if !m[idx] => None,
            _ => Some(idx),
        }
    }
}

impl Graph for LatticeGraph<'_> {
    fn node_count(&self) -> usize {
        self.n * self.n
    }

    #[inline]
    fn for_each_neighbor<F: FnMut(usize, f64)>(&self, node: usize, mut f: F) {
        let r = (node / self.n) as i64;
        let c = (node % self.n) as i64;
        let wu = self.weights[node];
        for (step, half) in self.steps.iter().zip(&self.half_len) {
            let Some(v) = self.open(r + step.dr, c + step.dc) else {
                continue;
            };
            if let Some([a, b]) = step.straddle {
                if self.open(r + a.0, c + a.1).is_none() || self.open(r + b.0, c + b.1).is_none() {
                    continue;
                }
            }
            f(v, half * (wu + self.weights[v]));
        }
    }
}

pub(crate) struct SearchOutput {
    pub dist: Vec<f64>,
    pub pred: Vec<u32>,
    pub reached: Option<usize>,
    pub relaxations: u64,
}

impl SearchOutput {
    /// Node path from the source that settled `node` to `node`.
    pub fn path_to(&self, node: usize) -> Vec<usize> {
        let mut path = vec![node];
        let mut cur = node;
        while self.pred[cur] != NO_PRED {
            cur = self.pred[cur] as usize;
            path.push(cur);
        }
        path.reverse();
        path
    }
}

/// Multi-source Dijkstra. Stops as soon as `stop` returns true for a settled
/// node, or once the smallest open label exceeds `bound`. Ties in the queue are broken by node
/// index, which for lattice nodes is lexicographic `(row, col)` order.
pub(crate) fn dijkstra<G: Graph>(
    g: &G,
    sources: &[usize],
    mut stop: impl FnMut(usize) -> bool,
    bound: f64,
) -> SearchOutput {
    let nodes = g.node_count();
    let mut dist = vec![f64::INFINITY; nodes];
    let mut pred = vec![NO_PRED; nodes];
    let mut heap = BinaryHeap::new();
    for &s in sources {
        if dist[s] != 0.0 {
            dist[s] = 0.0;
            heap.push(Reverse((0u64, s as u32)));
        }
    }
    let mut relaxations = 0u64;
    let mut reached = None;
    while let Some(Reverse((key, node))) = heap.pop() {
        let node = node as usize;
        // nonnegative floats order like their bit patterns
        let d = f64::from_bits(key);
        if d > dist[node] {
            continue;
        }
        if d > bound {
            break;
        }
        if stop(node) {
            reached = Some(node);
            break;
        }
        g.for_each_neighbor(node, |v, cost| {
            relaxations += 1;
            let nd = d + cost;
            if nd < dist[v] {
                dist[v] = nd;
                pred[v] = node as u32;
                heap.push(Reverse((nd.to_bits(), v as u32)));
            }
        });
    }
    SearchOutput {
        dist,
        pred,
        reached,
        relaxations,
    }
}

fn check_vertices(geometry: &Geometry, mask: &RegionMask, vs: &[Vertex], what: &str) -> Result<()> {
    if vs.is_empty() {
        return Err(Error::Config(format!("{what} set is empty")));
    }
    for &v in vs {
        if v.0 >= geometry.n || v.1 >= geometry.n || !mask.contains(v) {
            return Err(Error::Config(format!("{what} vertex {v:?} is outside the admissible region")));
        }
    }
    Ok(())
}

fn check_mask(w: &WeightGrid, mask: &RegionMask) -> Result<()> {
    if !w.geometry().same_as(mask.geometry()) {
        return Err(Error::Config("mask and weight grid live on different lattices".into()));
    }
    Ok(())
}

/// Shortest-path distance between two vertex sets, with paths confined to `mask`.
pub fn distance(
    w: &WeightGrid,
    sources: &[Vertex],
    targets: &[Vertex],
    mask: &RegionMask,
    want_geodesic: bool,
) -> Result<DistanceResult> {
    check_mask(w, mask)?;
    let g = *w.geometry();
    check_vertices(&g, mask, sources, "source")?;
    check_vertices(&g, mask, targets, "target")?;
    let mut is_target = vec![false; g.len()];
    for &t in targets {
        is_target[g.index(t)] = true;
    }
    if sources.iter().any(|s| is_target[g.index(*s)]) {
        return Ok(DistanceResult {
            distance: 0.0,
            geodesic: want_geodesic.then(Vec::new),
            relaxations: 0,
        });
    }
    let src: Vec<usize> = sources.iter().map(|v| g.index(*v)).collect();
    let graph = LatticeGraph::new(w, Some(mask));
    let out = dijkstra(&graph, &src, |i| is_target[i], f64::INFINITY);
    Ok(match out.reached {
        Some(t) => DistanceResult {
            distance: out.dist[t],
            geodesic: want_geodesic.then(|| out.path_to(t).into_iter().map(|i| g.vertex(i)).collect()),
            relaxations: out.relaxations,
        },
        None => DistanceResult {
            distance: f64::INFINITY,
            geodesic: None,
            relaxations: out.relaxations,
        },
    })
}

/// Distances from a source set to every vertex of `mask`.
#[derive(Clone, Debug)]
pub struct DistanceMap {
    geometry: Geometry,
    dist: Vec<f64>,
    pub relaxations: u64,
}

impl DistanceMap {
    pub fn get(&self, v: Vertex) -> f64 {
        self.dist[self.geometry.index(v)]
    }

    pub fn values(&self) -> &[f64] {
        &self.dist
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }
}

/// Single- or multi-source distance map. Labels above `bound` are not
/// finalized (they may be overestimates or `+∞`).
pub fn distances_from(w: &WeightGrid, sources: &[Vertex], mask: &RegionMask, bound: f64) -> Result<DistanceMap> {
    check_mask(w, mask)?;
    let g = *w.geometry();
    check_vertices(&g, mask, sources, "source")?;
    let src: Vec<usize> = sources.iter().map(|v| g.index(*v)).collect();
    let graph = LatticeGraph::new(w, Some(mask));
    let out = dijkstra(&graph, &src, |_| false, bound);
    Ok(DistanceMap {
        geometry: g,
        dist: out.dist,
        relaxations: out.relaxations,
    })
}

/// Distances from `source` to each of `targets` (in order). The search stops
/// once every target is settled.
pub fn distances_to(w: &WeightGrid, source: Vertex, targets: &[Vertex], mask: &RegionMask) -> Result<Vec<f64>> {
    check_mask(w, mask)?;
    let g = *w.geometry();
    check_vertices(&g, mask, &[source], "source")?;
    check_vertices(&g, mask, targets, "target")?;
    let mut pending = vec![false; g.len()];
    let mut left = 0usize;
    for &t in targets {
        let i = g.index(t);
        if !pending[i] {
            pending[i] = true;
            left += 1;
        }
    }
    let graph = LatticeGraph::new(w, Some(mask));
    let out = dijkstra(
        &graph,
        &[g.index(source)],
        |i| {
            if pending[i] {
                pending[i] = false;
                left -= 1;
            }
            left == 0
        },
        f64::INFINITY,
    );
    Ok(targets.iter().map(|&t| out.dist[g.index(t)]).collect())
}

/// Many independent queries, evaluated in parallel; results keep input order.
pub fn distance_many(
    w: &WeightGrid,
    queries: &[(Vec<Vertex>, Vec<Vertex>)],
    mask: &RegionMask,
    want_geodesic: bool,
) -> Vec<Result<DistanceResult>> {
    queries
        .par_iter()
        .map(|(s, t)| distance(w, s, t, mask, want_geodesic))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::Stencil;

    fn unit(n: usize) -> WeightGrid {
        WeightGrid::uniform(Geometry::new(n, 1.0, [0.0, 0.0]).unwrap(), 1.0).unwrap()
    }

    #[test]
    fn self_distance_is_zero_with_empty_geodesic() {
        let w = unit(4);
        let m = RegionMask::full(*w.geometry());
        let d = distance(&w, &[(1, 1)], &[(1, 1)], &m, true).unwrap();
        assert_eq!(d.distance, 0.0);
        assert_eq!(d.geodesic, Some(vec![]));
    }

    #[test]
    fn king_unit_weights_corner_to_corner() {
        let w = unit(5).with_stencil(Stencil::King8);
        let m = RegionMask::full(*w.geometry());
        // (row, col) = (0, 0) → (3, 4): three diagonal steps and one axis step
        let d = distance(&w, &[(0, 0)], &[(3, 4)], &m, true).unwrap();
        assert!((d.distance - (3.0 * 2f64.sqrt() + 1.0)).abs() < 1e-12);
        let path = d.geodesic.unwrap();
        assert!((w.path_cost(&path).unwrap() - d.distance).abs() < 1e-12);
    }

    #[test]
    fn sixteen_unit_weights_use_knight_steps() {
        let w = unit(5);
        let m = RegionMask::full(*w.geometry());
        let d = distance(&w, &[(0, 0)], &[(3, 4)], &m, false).unwrap();
        assert!((d.distance - (5f64.sqrt() + 2.0 * 2f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn separated_components_are_unreachable() {
        let w = unit(6);
        let m = RegionMask::from_fn(*w.geometry(), |p| p[0] != 3.0 && p[0] != 2.0);
        let d = distance(&w, &[(0, 0)], &[(5, 5)], &m, true).unwrap();
        assert!(d.distance.is_infinite());
        assert!(d.geodesic.is_none());
    }

    #[test]
    fn one_wide_wall_does_not_stop_knights_only_if_straddle_open() {
        // a straight 1-vertex-wide wall blocks every king path, so it must
        // block knight steps too
        let w = unit(7);
        let m = RegionMask::from_fn(*w.geometry(), |p| p[0] != 3.0);
        let d = distance(&w, &[(3, 0)], &[(3, 6)], &m, false).unwrap();
        assert!(d.distance.is_infinite());
    }

    #[test]
    fn empty_sets_are_rejected() {
        let w = unit(3);
        let m = RegionMask::full(*w.geometry());
        assert!(matches!(distance(&w, &[], &[(0, 0)], &m, false), Err(Error::Config(_))));
        assert!(matches!(distance(&w, &[(0, 0)], &[], &m, false), Err(Error::Config(_))));
        let hole = RegionMask::from_vertices(*w.geometry(), [(0, 0)]);
        assert!(distance(&w, &[(1, 1)], &[(0, 0)], &hole, false).is_err());
    }

    #[test]
    fn bulk_queries_keep_order() {
        let w = unit(6);
        let m = RegionMask::full(*w.geometry());
        let qs: Vec<_> = (0..6).map(|k| (vec![(0, 0)], vec![(0, k)])).collect();
        let res = distance_many(&w, &qs, &m, false);
        for (k, r) in res.into_iter().enumerate() {
            assert!((r.unwrap().distance - k as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn distances_to_matches_full_map() {
        let w = unit(9);
        let m = RegionMask::full(*w.geometry());
        let full = distances_from(&w, &[(2, 3)], &m, f64::INFINITY).unwrap();
        let ts = [(8, 8), (2, 3), (0, 5), (8, 8)];
        let d = distances_to(&w, (2, 3), &ts, &m).unwrap();
        for (t, x) in ts.iter().zip(d) {
            assert_eq!(full.get(*t), x);
        }
    }

    #[test]
    fn bounded_map_finalizes_labels_within_bound() {
        let w = unit(9);
        let m = RegionMask::full(*w.geometry());
        let full = distances_from(&w, &[(4, 4)], &m, f64::INFINITY).unwrap();
        let part = distances_from(&w, &[(4, 4)], &m, 2.0).unwrap();
        for (a, b) in full.values().iter().zip(part.values()) {
            if *a <= 2.0 {
                assert_eq!(a, b);
            }
        }
    }
}
