//! Lattice fields: approximate whole-plane GFF samples, circle averages and
//! heat-kernel mollification.
//!
//! The whole-plane GFF is approximated by spectral synthesis on an `n × n`
//! torus of period `L`: every nonzero Fourier mode `k` gets variance
//! proportional to `1/|k|²`, scaled so that the covariance behaves like
//! `log(1/|z − w|)` at scales well below `L`.

mod snapshot;

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{signed_freq, Fft2};
use crate::grid::{Geometry, Vertex};

pub use snapshot::{load_snapshot, read_snapshot, save_snapshot, write_snapshot, SNAPSHOT_MAGIC};

/// Minimum number of quadrature points on a circle.
pub const MIN_CIRCLE_SAMPLES: usize = 64;

/// Mollifier support, in units of ε.
pub const KERNEL_CUTOFF: f64 = 6.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    Gff,
    Mollified,
    Deterministic,
}

impl FieldKind {
    pub fn code(self) -> u8 {
        match self {
            FieldKind::Gff => 0,
            FieldKind::Mollified => 1,
            FieldKind::Deterministic => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(FieldKind::Gff),
            1 => Some(FieldKind::Mollified),
            2 => Some(FieldKind::Deterministic),
            _ => None,
        }
    }
}

/// Real field sampled on an `n × n` lattice, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    geometry: Geometry,
    kind: FieldKind,
    values: Vec<f64>,
}

impl GridField {
    pub fn new(geometry: Geometry, kind: FieldKind, values: Vec<f64>) -> Result<Self> {
        if values.len() != geometry.len() {
            return Err(Error::Config(format!(
                "expected {} values for an {}×{} field, got {}",
                geometry.len(),
                geometry.n,
                geometry.n,
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Config(format!("non-finite field value at index {i}")));
        }
        Ok(GridField {
            geometry,
            kind,
            values,
        })
    }

    pub fn constant(geometry: Geometry, value: f64) -> Self {
        GridField {
            geometry,
            kind: FieldKind::Deterministic,
            values: vec![value; geometry.len()],
        }
    }

    pub fn zeros(geometry: Geometry) -> Self {
        Self::constant(geometry, 0.0)
    }

    /// Deterministic field from a function of the physical position.
    pub fn from_fn(geometry: Geometry, f: impl Fn([f64; 2]) -> f64) -> Result<Self> {
        let values = (0..geometry.len())
            .map(|i| f(geometry.position(geometry.vertex(i))))
            .collect();
        Self::new(geometry, FieldKind::Deterministic, values)
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

    pub fn origin(&self) -> [f64; 2] {
        self.geometry.origin
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, v: Vertex) -> f64 {
        self.values[self.geometry.index(v)]
    }

    pub fn with_kind(mut self, kind: FieldKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn scaled(&self, c: f64) -> GridField {
        GridField {
            geometry: self.geometry,
            kind: self.kind,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Keep every `factor`-th vertex in both directions (same origin).
    pub fn subsample(&self, factor: usize) -> Result<GridField> {
        let geometry = self.geometry.coarsened(factor)?;
        let n = self.geometry.n;
        let values = (0..geometry.n)
            .flat_map(|r| (0..geometry.n).map(move |c| (r * factor) * n + c * factor))
            .map(|i| self.values[i])
            .collect();
        Ok(GridField {
            geometry,
            kind: self.kind,
            values,
        })
    }

    fn sample_bilinear(&self, x: f64, y: f64, periodic: bool) -> f64 {
        let g = &self.geometry;
        let n = g.n;
        let fx = (x - g.origin[0]) / g.spacing;
        let fy = (y - g.origin[1]) / g.spacing;
        let (c0, tx) = split_coord(fx, n, periodic);
        let (r0, ty) = split_coord(fy, n, periodic);
        let (c1, r1) = if periodic {
            ((c0 + 1) % n, (r0 + 1) % n)
        } else {
            (c0 + 1, r0 + 1)
        };
        let v = |r: usize, c: usize| self.values[r * n + c];
        (1.0 - ty) * ((1.0 - tx) * v(r0, c0) + tx * v(r0, c1)) + ty * ((1.0 - tx) * v(r1, c0) + tx * v(r1, c1))
    }
}

fn split_coord(f: f64, n: usize, periodic: bool) -> (usize, f64) {
    if periodic {
        let fl = f.floor();
        let t = f - fl;
        (fl.rem_euclid(n as f64) as usize % n, t)
    } else {
        // clamp so that the right/top edge uses the last cell
        let fl = f.floor().clamp(0.0, (n - 2) as f64);
        (fl as usize, f - fl)
    }
}

/// Value of `h_r(z)`: mean of `h` over the circle of radius `r` about `z`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircleAverage {
    pub center: [f64; 2],
    pub radius: f64,
    pub value: f64,
    pub sample_count: usize,
}

/// Quadrature size for a circle of radius `r`.
pub fn circle_sample_count(r: f64, spacing: f64) -> usize {
    MIN_CIRCLE_SAMPLES.max((2.0 * PI * r / spacing).ceil() as usize)
}

fn check_radius(field: &GridField, r: f64) -> Result<()> {
    if !(r.is_finite() && r >= field.spacing() * (1.0 - 1e-12)) {
        return Err(Error::Config(format!(
            "circle radius {r} is below the lattice spacing {}",
            field.spacing()
        )));
    }
    Ok(())
}

/// Circle average by equal-angle trapezoidal quadrature of the bilinear
/// interpolant. The circle must lie inside the vertex hull.
pub fn circle_average(field: &GridField, z: [f64; 2], r: f64) -> Result<CircleAverage> {
    check_radius(field, r)?;
    if !field.geometry.contains_disk(z, r) {
        return Err(Error::OutOfDomain(format!(
            "circle of radius {r} about ({}, {}) leaves the field domain",
            z[0], z[1]
        )));
    }
    Ok(circle_average_impl(field, z, r, false))
}

/// Circle average on the torus: the lattice is treated as periodic, so any
/// centre and radius are admissible.
pub fn circle_average_periodic(field: &GridField, z: [f64; 2], r: f64) -> Result<CircleAverage> {
    check_radius(field, r)?;
    Ok(circle_average_impl(field, z, r, true))
}

fn circle_average_impl(field: &GridField, z: [f64; 2], r: f64, periodic: bool) -> CircleAverage {
    let m = circle_sample_count(r, field.spacing());
    let sum: f64 = (0..m)
        .map(|k| {
            let theta = 2.0 * PI * k as f64 / m as f64;
            field.sample_bilinear(z[0] + r * theta.cos(), z[1] + r * theta.sin(), periodic)
        })
        .sum();
    CircleAverage {
        center: z,
        radius: r,
        value: sum / m as f64,
        sample_count: m,
    }
}

/// Circle averages at radius `r` about every vertex, with periodic wrap.
///
/// Uses the same quadrature as [`circle_average`]: for vertex centres the
/// bilinear weights form a fixed stencil, applied by FFT convolution.
pub fn circle_average_map(field: &GridField, r: f64) -> Result<Vec<f64>> {
    FieldSpectrum::new(field).circle_average_map(r)
}

/// Heat-kernel mollification `h * p_{ε²/2}` on the torus.
pub fn mollify(field: &GridField, eps: f64) -> Result<GridField> {
    FieldSpectrum::new(field).mollify(eps)
}

/// Cached Fourier transform of a field, for repeated periodic convolutions.
pub struct FieldSpectrum<'a> {
    field: &'a GridField,
    fft: Fft2,
    spectrum: Vec<Complex64>,
}

impl<'a> FieldSpectrum<'a> {
    pub fn new(field: &'a GridField) -> Self {
        let fft = Fft2::new(field.n());
        let mut spectrum: Vec<Complex64> = field.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft.forward(&mut spectrum);
        FieldSpectrum { field, fft, spectrum }
    }

    pub fn field(&self) -> &GridField {
        self.field
    }

    /// `out[v] = Σ w · field[v + offset]`, offsets in lattice units, periodic.
    fn correlate(&self, taps: &BTreeMap<(i64, i64), f64>) -> Vec<f64> {
        let n = self.field.n();
        let ni = n as i64;
        let mut kernel = vec![Complex64::new(0.0, 0.0); n * n];
        for (&(dr, dc), &w) in taps {
            let r = (-dr).rem_euclid(ni) as usize;
            let c = (-dc).rem_euclid(ni) as usize;
            kernel[r * n + c] += w;
        }
        self.fft.forward(&mut kernel);
        for (k, s) in kernel.iter_mut().zip(&self.spectrum) {
            *k *= s;
        }
        self.fft.inverse(&mut kernel);
        let norm = 1.0 / (n * n) as f64;
        kernel.iter().map(|z| z.re * norm).collect()
    }

    pub fn mollify(&self, eps: f64) -> Result<GridField> {
        let s = self.field.spacing();
        if !(eps.is_finite() && eps >= 2.0 * s * (1.0 - 1e-12)) {
            return Err(Error::Resolution(format!(
                "mollifier scale {eps} must be at least twice the spacing {s}"
            )));
        }
        let reach = (KERNEL_CUTOFF * eps / s).floor() as i64;
        let mut taps = BTreeMap::new();
        let mut total = 0.0;
        for dr in -reach..=reach {
            for dc in -reach..=reach {
                let d2 = ((dr * dr + dc * dc) as f64) * s * s;
                if d2 > (KERNEL_CUTOFF * eps).powi(2) {
                    continue;
                }
                let w = (-d2 / (eps * eps)).exp();
                total += w;
                taps.insert((dr, dc), w);
            }
        }
        for w in taps.values_mut() {
            *w /= total;
        }
        let values = self.correlate(&taps);
        Ok(GridField {
            geometry: self.field.geometry,
            kind: FieldKind::Mollified,
            values,
        })
    }

    pub fn circle_average_map(&self, r: f64) -> Result<Vec<f64>> {
        check_radius(self.field, r)?;
        let s = self.field.spacing();
        let m = circle_sample_count(r, s);
        let mut taps: BTreeMap<(i64, i64), f64> = BTreeMap::new();
        let w = 1.0 / m as f64;
        for k in 0..m {
            let theta = 2.0 * PI * k as f64 / m as f64;
            let dx = r * theta.cos() / s;
            let dy = r * theta.sin() / s;
            let (fx, fy) = (dx.floor(), dy.floor());
            let (tx, ty) = (dx - fx, dy - fy);
            let (c0, r0) = (fx as i64, fy as i64);
            *taps.entry((r0, c0)).or_default() += w * (1.0 - tx) * (1.0 - ty);
            *taps.entry((r0, c0 + 1)).or_default() += w * tx * (1.0 - ty);
            *taps.entry((r0 + 1, c0)).or_default() += w * (1.0 - tx) * ty;
            *taps.entry((r0 + 1, c0 + 1)).or_default() += w * tx * ty;
        }
        Ok(self.correlate(&taps))
    }
}

/// Approximate whole-plane GFF on the `n × n` torus of period `side`,
/// normalized so that its radius-1 circle average about the centre is zero.
pub fn sample_gff(n: usize, side: f64, seed: u64) -> Result<GridField> {
    if n < 64 || !n.is_power_of_two() {
        return Err(Error::Config(format!("GFF side count must be a power of two ≥ 64, got {n}")));
    }
    if !(side > 0.0 && side.is_finite()) {
        return Err(Error::Config(format!("physical side length must be positive, got {side}")));
    }
    let geometry = Geometry::centered_torus(n, side)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut buf: Vec<Complex64> = (0..n * n)
        .map(|_| Complex64::new(StandardNormal.sample(&mut rng), 0.0))
        .collect();
    let fft = Fft2::new(n);
    fft.forward(&mut buf);
    // E|a_k|² = 2π / (L² |k|²) with k = 2π m / L, i.e. 1 / (2π |m|²);
    // white noise has E|Ŵ_m|² = n².
    for r in 0..n {
        let my = signed_freq(r, n);
        for c in 0..n {
            let mx = signed_freq(c, n);
            let m2 = mx * mx + my * my;
            let amp = if m2 == 0.0 {
                0.0
            } else {
                (1.0 / (2.0 * PI * m2)).sqrt() / n as f64
            };
            buf[r * n + c] *= amp;
        }
    }
    fft.inverse(&mut buf);
    let values: Vec<f64> = buf.iter().map(|z| z.re).collect();
    let mut field = GridField {
        geometry,
        kind: FieldKind::Gff,
        values,
    };
    let shift = circle_average_periodic(&field, geometry.center(), 1.0)?.value;
    for v in &mut field.values {
        *v -= shift;
    }
    Ok(field)
}

/// Entrywise sum of two fields on the same lattice.
pub fn add_fields(a: &GridField, b: &GridField) -> Result<GridField> {
    if !a.geometry.same_as(&b.geometry) {
        return Err(Error::Config("cannot add fields with different lattice geometry".into()));
    }
    let kind = if a.kind == FieldKind::Deterministic || b.kind == FieldKind::Deterministic {
        FieldKind::Deterministic
    } else if a.kind == b.kind {
        a.kind
    } else {
        FieldKind::Mollified
    };
    let values = a.values.iter().zip(&b.values).map(|(x, y)| x + y).collect();
    Ok(GridField {
        geometry: a.geometry,
        kind,
        values,
    })
}
