//! Numerical laboratory for Liouville first passage percolation (LFPP).
//!
//! The crate samples approximate whole-plane Gaussian free fields on a periodic
//! lattice, turns them into exponentially weighted lattice metrics, and runs
//! distance, exponent, thick-point, metric-ball and KPZ experiments on top of
//! them. Every random quantity is a deterministic function of a 64-bit seed.
//!
//! Module map:
//!
//! * [`field`]: GFF synthesis, circle averages, heat-kernel mollification.
//! * [`metric`]: weight grids, shortest paths, annulus distances, metric balls.
//! * [`multiscale`]: dyadic squares, square annuli, hashes, distance events.
//! * [`fractal`]: thick/singular points, box and KPZ dimension estimators.
//! * [`experiments`]: seeded Monte Carlo orchestration and result files.
//! * [`io`]: configuration, run manifests, the command surface, parameter conversion.

pub mod error;
pub mod experiments;
pub mod fft;
pub mod field;
pub mod fit;
pub mod fractal;
pub mod grid;
pub mod io;
pub mod metric;
pub mod multiscale;

pub use error::{Error, Result};
pub use field::{FieldKind, GridField};
pub use fit::ScalingFit;
pub use grid::{Geometry, Vertex};
pub use metric::{DistanceResult, RegionMask, Stencil, WeightGrid};
