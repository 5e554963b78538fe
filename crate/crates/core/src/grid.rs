//! Lattice geometry shared by fields, weight grids and masks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lattice vertex as `(row, col)`; rows run along y, columns along x.
pub type Vertex = (usize, usize);

/// An `n × n` lattice with uniform spacing. Vertex `(row, col)` sits at
/// `origin + (col, row) · spacing`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub n: usize,
    pub spacing: f64,
    pub origin: [f64; 2],
}

impl Geometry {
    pub fn new(n: usize, spacing: f64, origin: [f64; 2]) -> Result<Self> {
        if n < 2 {
            return Err(Error::Config(format!("lattice needs at least 2 vertices per side, got {n}")));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::Config(format!("spacing must be positive and finite, got {spacing}")));
        }
        if !origin.iter().all(|v| v.is_finite()) {
            return Err(Error::Config("origin must be finite".into()));
        }
        Ok(Geometry { n, spacing, origin })
    }

    /// Periodic lattice of period `side` centred on the physical origin, so
    /// that vertex `(n/2, n/2)` is the point `(0, 0)`.
    pub fn centered_torus(n: usize, side: f64) -> Result<Self> {
        let spacing = side / n as f64;
        Geometry::new(n, spacing, [-0.5 * side, -0.5 * side])
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn index(&self, v: Vertex) -> usize {
        v.0 * self.n + v.1
    }

    pub fn vertex(&self, idx: usize) -> Vertex {
        (idx / self.n, idx % self.n)
    }

    pub fn position(&self, v: Vertex) -> [f64; 2] {
        [
            self.origin[0] + v.1 as f64 * self.spacing,
            self.origin[1] + v.0 as f64 * self.spacing,
        ]
    }

    /// Span of the vertex set along each axis, `(n − 1) · spacing`.
    pub fn extent(&self) -> f64 {
        (self.n - 1) as f64 * self.spacing
    }

    /// Period of the underlying torus, `n · spacing`.
    pub fn period(&self) -> f64 {
        self.n as f64 * self.spacing
    }

    /// Physical centre of the torus, i.e. the position of vertex `(n/2, n/2)`.
    pub fn center(&self) -> [f64; 2] {
        self.position((self.n / 2, self.n / 2))
    }

    pub fn center_vertex(&self) -> Vertex {
        (self.n / 2, self.n / 2)
    }

    /// Nearest vertex to a physical point, if it lies within half a spacing
    /// of the vertex set.
    pub fn nearest_vertex(&self, p: [f64; 2]) -> Option<Vertex> {
        let c = ((p[0] - self.origin[0]) / self.spacing).round();
        let r = ((p[1] - self.origin[1]) / self.spacing).round();
        if c < 0.0 || r < 0.0 || c >= self.n as f64 || r >= self.n as f64 {
            None
        } else {
            Some((r as usize, c as usize))
        }
    }

    /// Whether the closed disk of radius `r` about `z` lies inside the vertex hull.
    pub fn contains_disk(&self, z: [f64; 2], r: f64) -> bool {
        let tol = 1e-9 * self.spacing;
        let hi = [self.origin[0] + self.extent(), self.origin[1] + self.extent()];
        (0..2).all(|a| z[a] - r >= self.origin[a] - tol && z[a] + r <= hi[a] + tol)
    }

    pub fn same_as(&self, other: &Geometry) -> bool {
        self.n == other.n && self.spacing == other.spacing && self.origin == other.origin
    }

    /// Geometry of the sublattice keeping every `factor`-th vertex.
    pub fn coarsened(&self, factor: usize) -> Result<Geometry> {
        if factor == 0 || self.n % factor != 0 {
            return Err(Error::Config(format!("cannot coarsen n = {} by {factor}", self.n)));
        }
        Geometry::new(self.n / factor, self.spacing * factor as f64, self.origin)
    }
}
