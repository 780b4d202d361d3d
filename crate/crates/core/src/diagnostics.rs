//! Checks on the filter residuals: constant variance (two-half F test),
//! normality (probability-plot coordinates), and an independent noise
//! estimate from global polynomial fits of increasing degree.

use std::ops::RangeInclusive;

use crate::error::{Error, Result};
use crate::linalg::{householder_lstsq, Matrix};
use crate::noise::NoiseEstimate;
use crate::special::{f_cdf, normal_quantile};

/// Two-half variance-ratio test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceTest {
    /// Sample variance of the first half over that of the second half.
    pub ratio: f64,
    pub n1: usize,
    pub n2: usize,
    /// Two-sided p-value under `F(n1 - 1, n2 - 1)`.
    pub p_value: f64,
    pub pass_95: bool,
}

fn sample_variance(xs: &[f64]) -> f64 {
    let k = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / k;
    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0)
}

/// Splits into the first `floor(q/2)` and the remaining samples and compares
/// their unbiased sample variances.
pub fn variance_ratio_test(residuals: &[f64]) -> Result<VarianceTest> {
    let q = residuals.len();
    if q < 8 {
        return Err(Error::SeriesTooShort { len: q, min: 8 });
    }
    let (first, second) = residuals.split_at(q / 2);
    let (v1, v2) = (sample_variance(first), sample_variance(second));
    if v1 == 0.0 || v2 == 0.0 {
        return Err(Error::Degenerate("zero residual variance in one half".into()));
    }
    let ratio = v1 / v2;
    let (d1, d2) = ((first.len() - 1) as f64, (second.len() - 1) as f64);
    let cdf = f_cdf(ratio, d1, d2);
    let p_value = (2.0 * cdf.min(1.0 - cdf)).clamp(0.0, 1.0);
    Ok(VarianceTest { ratio, n1: first.len(), n2: second.len(), p_value, pass_95: p_value >= 0.05 })
}

/// Coordinates of a normal probability plot.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityPlotData {
    /// Sorted residuals divided by the noise SD.
    pub sample: Vec<f64>,
    /// Normal quantiles at plotting positions `(i - 0.5)/q`.
    pub theoretical: Vec<f64>,
}

impl ProbabilityPlotData {
    /// Largest vertical distance from the line `y = x`.
    pub fn max_abs_deviation(&self) -> f64 {
        self.sample
            .iter()
            .zip(&self.theoretical)
            .map(|(s, t)| (s - t).abs())
            .fold(0.0, f64::max)
    }
}

pub fn normal_plot_data(residuals: &[f64], sd: &NoiseEstimate) -> Result<ProbabilityPlotData> {
    let q = residuals.len();
    if q < 3 {
        return Err(Error::SeriesTooShort { len: q, min: 3 });
    }
    if !(sd.sd > 0.0) {
        return Err(Error::InvalidArgument(format!("noise SD must be positive, got {}", sd.sd)));
    }
    let mut sample: Vec<f64> = residuals.iter().map(|r| r / sd.sd).collect();
    sample.sort_by(f64::total_cmp);
    let theoretical = (1..=q).map(|i| normal_quantile((i as f64 - 0.5) / q as f64)).collect();
    Ok(ProbabilityPlotData { sample, theoretical })
}

/// Largest acceptable `‖Aᵀr‖∞ / (‖A‖₁ ‖y‖₂)` after a global fit.
pub const MAX_NORMAL_RESIDUAL: f64 = 1e-6;

/// A global least-squares polynomial fit over the whole series.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialFit {
    pub degree: usize,
    pub fitted: Vec<f64>,
    /// `sqrt(SSR / (q - degree - 1))`
    pub sd_unbiased: f64,
}

/// Legendre basis on the sample positions rescaled to `[-1, 1]`.
fn legendre_design(q: usize, degree: usize) -> Matrix {
    let mut a = Matrix::zeros(q, degree + 1);
    for i in 0..q {
        let x = if q == 1 { 0.0 } else { 2.0 * i as f64 / (q - 1) as f64 - 1.0 };
        let (mut prev, mut cur) = (1.0, x);
        a.set(i, 0, 1.0);
        if degree >= 1 {
            a.set(i, 1, x);
        }
        for k in 1..degree {
            let k_f = k as f64;
            let next = ((2.0 * k_f + 1.0) * x * cur - k_f * prev) / (k_f + 1.0);
            prev = cur;
            cur = next;
            a.set(i, k + 1, cur);
        }
    }
    a
}

pub fn fit_polynomial(y: &[f64], degree: usize) -> Result<PolynomialFit> {
    let q = y.len();
    if degree + 1 >= q {
        return Err(Error::SeriesTooShort { len: q, min: degree + 2 });
    }
    let a = legendre_design(q, degree);
    let coef = householder_lstsq(&a, y).ok_or(Error::IllConditionedFit { degree, residual: f64::INFINITY })?;
    let fitted: Vec<f64> = (0..q).map(|i| a.row(i).iter().zip(&coef).map(|(x, c)| x * c).sum()).collect();
    let resid: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
    let y_norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    if y_norm > 0.0 {
        let atr = (0..=degree)
            .map(|j| (0..q).map(|i| a.get(i, j) * resid[i]).sum::<f64>().abs())
            .fold(0.0, f64::max);
        let rel = atr / (a.norm_one() * y_norm);
        if !(rel <= MAX_NORMAL_RESIDUAL) {
            return Err(Error::IllConditionedFit { degree, residual: rel });
        }
    }
    let ssr: f64 = resid.iter().map(|r| r * r).sum();
    Ok(PolynomialFit { degree, fitted, sd_unbiased: (ssr / (q - degree - 1) as f64).sqrt() })
}

/// Unbiased residual SD versus global polynomial degree.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialNoiseCurve {
    pub points: Vec<(usize, f64)>,
}

impl PolynomialNoiseCurve {
    /// `(degree, sd)` with the smallest SD; the lower degree wins ties.
    pub fn minimum(&self) -> Option<(usize, f64)> {
        self.points
            .iter()
            .copied()
            .fold(None, |best, p| match best {
                Some(b) if b.1 <= p.1 => Some(b),
                _ => Some(p),
            })
    }
}

pub fn polynomial_noise_oracle(y: &[f64], degrees: RangeInclusive<usize>) -> Result<PolynomialNoiseCurve> {
    if degrees.is_empty() {
        return Err(Error::InvalidArgument("empty degree range".into()));
    }
    if degrees.end() + 1 >= y.len() {
        return Err(Error::InvalidArgument(format!(
            "maximum degree {} needs more than {} samples",
            degrees.end(),
            degrees.end() + 1
        )));
    }
    let points = degrees
        .map(|d| fit_polynomial(y, d).map(|f| (d, f.sd_unbiased)))
        .collect::<Result<_>>()?;
    Ok(PolynomialNoiseCurve { points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn equal_halves_give_unit_ratio() {
        let half = [0.3, -0.1, 0.5, -0.7, 0.2, 0.0];
        let r: Vec<f64> = half.iter().chain(half.iter()).copied().collect();
        let t = variance_ratio_test(&r).unwrap();
        assert_relative_eq!(t.ratio, 1.0, epsilon = 1e-14);
        assert!(t.p_value > 0.999);
        assert!(t.pass_95);
        assert_eq!((t.n1, t.n2), (6, 6));
    }

    #[test]
    fn odd_length_split() {
        let r: Vec<f64> = (0..67).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
        let t = variance_ratio_test(&r).unwrap();
        assert_eq!((t.n1, t.n2), (33, 34));
    }

    #[test]
    fn degenerate_half() {
        let mut r = vec![1.0; 5];
        r.extend([1.0, 2.0, 3.0, 4.0, 5.0]);
        assert!(matches!(variance_ratio_test(&r), Err(Error::Degenerate(_))));
        assert!(variance_ratio_test(&[1.0; 7]).is_err());
    }

    #[test]
    fn three_point_plot() {
        let d = normal_plot_data(&[1.0, -1.0, 0.0], &NoiseEstimate::known(1.0)).unwrap();
        assert_eq!(d.sample, vec![-1.0, 0.0, 1.0]);
        assert_relative_eq!(d.theoretical[0], -0.9674215661017, epsilon = 1e-12);
        assert_eq!(d.theoretical[1], 0.0);
        assert_relative_eq!(d.theoretical[2], 0.9674215661017, epsilon = 1e-12);
    }

    #[test]
    fn plot_fixed_point() {
        let q = 25;
        let r: Vec<f64> = (1..=q).rev().map(|i| normal_quantile((i as f64 - 0.5) / q as f64)).collect();
        let d = normal_plot_data(&r, &NoiseEstimate::known(1.0)).unwrap();
        assert!(d.max_abs_deviation() < 1e-9);
    }

    #[test]
    fn plot_rejects_zero_sd() {
        assert!(normal_plot_data(&[1.0, 2.0, 3.0], &NoiseEstimate::known(0.0)).is_err());
    }

    #[test]
    fn exact_quintic_has_zero_sd() {
        let y: Vec<f64> = (0..40)
            .map(|i| {
                let t = i as f64 / 4.0;
                1.0 - 2.0 * t + 0.3 * t.powi(3) - 0.01 * t.powi(5)
            })
            .collect();
        let curve = polynomial_noise_oracle(&y, 2..=12).unwrap();
        let scale = y.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for (d, sd) in curve.points {
            if d >= 5 {
                assert!(sd < 1e-10 * scale, "degree {d}: {sd}");
            }
        }
    }

    #[test]
    fn oracle_range_checked() {
        assert!(polynomial_noise_oracle(&[1.0; 10], 2..=9).is_err());
        assert!(polynomial_noise_oracle(&[1.0; 10], 2..=8).is_ok());
    }
}
