//! Square 2-D FFTs on row-major buffers.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub struct Fft2 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Unnormalized forward transform, in place.
    pub fn forward(&self, buf: &mut [Complex64]) {
        self.run(&*self.forward, buf);
    }

    /// Unnormalized inverse transform, in place (no 1/n² factor).
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.run(&*self.inverse, buf);
    }

    fn run(&self, fft: &dyn Fft<f64>, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.n * self.n);
        fft.process(buf);
        transpose(buf, self.n);
        fft.process(buf);
        transpose(buf, self.n);
    }
}

fn transpose(buf: &mut [Complex64], n: usize) {
    for r in 0..n {
        for c in (r + 1)..n {
            buf.swap(r * n + c, c * n + r);
        }
    }
}

/// Signed frequency index of FFT bin `m` on a length-`n` axis.
pub fn signed_freq(m: usize, n: usize) -> f64 {
    if m < n.div_ceil(2) {
        m as f64
    } else {
        m as f64 - n as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_recovers_input() {
        let n = 8;
        let plan = Fft2::new(n);
        let orig: Vec<Complex64> = (0..n * n)
            .map(|i| Complex64::new((i as f64).sin(), (i as f64 * 0.3).cos()))
            .collect();
        let mut buf = orig.clone();
        plan.forward(&mut buf);
        plan.inverse(&mut buf);
        for (a, b) in buf.iter().zip(&orig) {
            assert!((a / (n * n) as f64 - b).norm() < 1e-12);
        }
    }

    #[test]
    fn transform_of_delta_is_flat() {
        let n = 4;
        let plan = Fft2::new(n);
        let mut buf = vec![Complex64::new(0.0, 0.0); n * n];
        buf[0] = Complex64::new(1.0, 0.0);
        plan.forward(&mut buf);
        assert!(buf.iter().all(|z| (z - Complex64::new(1.0, 0.0)).norm() < 1e-15));
    }
}
