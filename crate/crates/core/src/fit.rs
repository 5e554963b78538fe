//! Least-squares scaling fits and small order statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordinary least-squares line through `(x, y)` samples, kept together with
/// the samples so the fit can be redone downstream.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub stderr_slope: f64,
    pub x_values: Vec<f64>,
    pub y_values: Vec<f64>,
}

impl ScalingFit {
    pub fn fit(x: &[f64], y: &[f64]) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::Config("fit needs equally many x and y values".into()));
        }
        if x.len() < 3 {
            return Err(Error::Config(format!("fit needs at least 3 points, got {}", x.len())));
        }
        if x.iter().chain(y).any(|v| !v.is_finite()) {
            return Err(Error::Domain("fit received non-finite samples".into()));
        }
        let n = x.len() as f64;
        let mx = x.iter().sum::<f64>() / n;
        let my = y.iter().sum::<f64>() / n;
        let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
        if sxx == 0.0 {
            return Err(Error::Config("fit needs at least two distinct x values".into()));
        }
        let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let ssr: f64 = x
            .iter()
            .zip(y)
            .map(|(a, b)| (b - intercept - slope * a).powi(2))
            .sum();
        let r2 = if syy == 0.0 { 1.0 } else { (1.0 - ssr / syy).clamp(0.0, 1.0) };
        let stderr_slope = (ssr / (n - 2.0) / sxx).sqrt();
        Ok(ScalingFit {
            slope,
            intercept,
            r2,
            stderr_slope,
            x_values: x.to_vec(),
            y_values: y.to_vec(),
        })
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Median; the mean of the two middle values for even lengths.
pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Empirical quantile: the smallest sample `x` with at least `⌈q·n⌉`
/// samples `≤ x`.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    if v.is_empty() {
        return f64::NAN;
    }
    let k = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len());
    v[k - 1]
}

/// Large-sample standard error of the median, `√(π/2) · sd / √n`; zero for
/// fewer than two samples.
pub fn median_se(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    (std::f64::consts::PI / 2.0).sqrt() * (variance(xs) / xs.len() as f64).sqrt()
}

/// Combined standard error of a difference of two independent estimates.
pub fn pooled_se(a: f64, b: f64) -> f64 {
    (a * a + b * b).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line_has_unit_r2_and_zero_stderr() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 2.5 * v - 1.0).collect();
        let f = ScalingFit::fit(&x, &y).unwrap();
        assert!((f.slope - 2.5).abs() < 1e-12);
        assert!((f.intercept + 1.0).abs() < 1e-12);
        assert!((f.r2 - 1.0).abs() < 1e-12);
        assert!(f.stderr_slope < 1e-12);
    }

    #[test]
    fn stderr_matches_textbook_example() {
        // residuals ±0.1 alternate: ssr = 0.04, sxx = 5 → se = sqrt(0.04/2/5)
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [0.1, 0.9, 2.1, 2.9];
        let f = ScalingFit::fit(&x, &y).unwrap();
        let resid: f64 = x.iter().zip(&y).map(|(a, b)| (b - f.intercept - f.slope * a).powi(2)).sum();
        assert!((f.stderr_slope - (resid / 2.0 / 5.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn rejects_degenerate_inputs() {
        assert!(ScalingFit::fit(&[1.0, 2.0], &[1.0, 2.0]).is_err());
        assert!(ScalingFit::fit(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
        assert!(ScalingFit::fit(&[1.0, 2.0, 3.0], &[1.0, f64::INFINITY, 3.0]).is_err());
    }

    #[test]
    fn order_statistics() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(quantile(&[1.0, 2.0, 3.0, 4.0], 0.5), 2.0);
        assert_eq!(quantile(&[1.0, 2.0, 3.0, 4.0], 0.95), 4.0);
        assert!((variance(&[1.0, 2.0, 3.0]) - 1.0).abs() < 1e-15);
    }
}
