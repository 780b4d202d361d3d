//! Confidence intervals for the filter output.
//!
//! Every output sample is a linear combination of `2m + 1` inputs, so with
//! i.i.d. input noise of variance `σ²` its variance is `σ² Σ c_i²` over the
//! coefficient row actually used at that sample (centre row in the interior,
//! edge rows in the tails). The same holds for the derivative rows.

use crate::error::{Error, Result};
use crate::filter::{build_coefficient_bank, CoefficientBank, FilterSpec, FilteredSeries};
use crate::noise::{Bias, NoiseEstimate};
use crate::parallel::Execution;
use crate::rng::NormalStream;
use crate::special::two_sided_z;

/// Default coverage of the confidence bands.
pub const DEFAULT_LEVEL: f64 = 0.95;

/// Per-sample standard deviations of the smoothed values and derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputSd {
    pub syf: Vec<f64>,
    pub sdyf: Vec<f64>,
}

/// Propagates the input noise SD through the coefficient rows.
///
/// Only unbiased estimates are accepted.
pub fn output_sd(bank: &CoefficientBank, sigma_e: &NoiseEstimate, q: usize) -> Result<OutputSd> {
    if sigma_e.bias != Bias::Unbiased {
        return Err(Error::BiasedEstimate);
    }
    if !(sigma_e.sd >= 0.0) || !sigma_e.sd.is_finite() {
        return Err(Error::InvalidArgument(format!("noise SD must be finite and >= 0, got {}", sigma_e.sd)));
    }
    let w = bank.spec().window();
    if q < w {
        return Err(Error::SeriesTooShort { len: q, min: w });
    }
    let smooth = bank.smooth_sum_squares();
    let deriv = bank.deriv_sum_squares();
    let (syf, sdyf) = (0..q)
        .map(|t| {
            let (j, _) = bank.placement(t, q);
            (sigma_e.sd * smooth[j].sqrt(), sigma_e.sd * deriv[j].sqrt())
        })
        .unzip();
    Ok(OutputSd { syf, sdyf })
}

/// Symmetric normal-theory bands around the smoothed values and derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceBands {
    pub level: f64,
    pub z: f64,
    pub syf: Vec<f64>,
    pub sdyf: Vec<f64>,
    pub yf_lo: Vec<f64>,
    pub yf_hi: Vec<f64>,
    pub dyf_lo: Vec<f64>,
    pub dyf_hi: Vec<f64>,
}

pub fn bands(series: &FilteredSeries, sds: &OutputSd, level: f64) -> Result<ConfidenceBands> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidArgument(format!("confidence level must lie in (0, 1), got {level}")));
    }
    let q = series.len();
    if sds.syf.len() != q || sds.sdyf.len() != q {
        return Err(Error::LengthMismatch { left: q, right: sds.syf.len() });
    }
    let z = two_sided_z(level);
    let lo_hi = |v: &[f64], s: &[f64]| -> (Vec<f64>, Vec<f64>) {
        v.iter().zip(s).map(|(v, s)| (v - z * s, v + z * s)).unzip()
    };
    let (yf_lo, yf_hi) = lo_hi(&series.yf, &sds.syf);
    let (dyf_lo, dyf_hi) = lo_hi(&series.dyf, &sds.sdyf);
    Ok(ConfidenceBands {
        level,
        z,
        syf: sds.syf.clone(),
        sdyf: sds.sdyf.clone(),
        yf_lo,
        yf_hi,
        dyf_lo,
        dyf_hi,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloConfig {
    pub trials: usize,
    pub seed: u64,
    /// Band level used for the empirical coverage count.
    pub level: f64,
    pub execution: Execution,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self { trials: 1000, seed: 0, level: DEFAULT_LEVEL, execution: Execution::default() }
    }
}

/// Empirical versus analytic output spread.
#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloReport {
    pub trials: usize,
    pub seed: u64,
    pub sigma: f64,
    pub level: f64,
    /// Empirical SD of `yf(noisy) - yf(signal)` per sample.
    pub empirical_syf: Vec<f64>,
    /// Empirical SD of `dyf(noisy) - dyf(signal)` per sample.
    pub empirical_sdyf: Vec<f64>,
    pub analytic: OutputSd,
    /// Fraction of trials whose smoothed value lies within `z·syf` of the noiseless output.
    pub coverage_yf: Vec<f64>,
    pub coverage_dyf: Vec<f64>,
}

impl MonteCarloReport {
    /// Largest `|empirical/analytic - 1|` over the samples, for the derivative.
    pub fn max_relative_deviation_dyf(&self) -> f64 {
        max_rel(&self.empirical_sdyf, &self.analytic.sdyf)
    }

    pub fn max_relative_deviation_yf(&self) -> f64 {
        max_rel(&self.empirical_syf, &self.analytic.syf)
    }
}

fn max_rel(emp: &[f64], ana: &[f64]) -> f64 {
    emp.iter()
        .zip(ana)
        .map(|(e, a)| if *a == 0.0 { if *e == 0.0 { 0.0 } else { f64::INFINITY } } else { (e / a - 1.0).abs() })
        .fold(0.0, f64::max)
}

/// Treats `signal` as truth, adds seeded i.i.d. normal noise of SD `sigma`
/// in each trial, filters, and measures the spread of the output errors.
pub fn monte_carlo_validate(
    spec: &FilterSpec,
    signal: &[f64],
    sigma: f64,
    trials: usize,
    seed: u64,
) -> Result<MonteCarloReport> {
    let config = MonteCarloConfig { trials, seed, ..MonteCarloConfig::default() };
    monte_carlo_validate_with(spec, signal, sigma, &config)
}

pub fn monte_carlo_validate_with(
    spec: &FilterSpec,
    signal: &[f64],
    sigma: f64,
    config: &MonteCarloConfig,
) -> Result<MonteCarloReport> {
    if config.trials < 100 {
        return Err(Error::InvalidArgument(format!("at least 100 trials required, got {}", config.trials)));
    }
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidArgument(format!("noise SD must be finite and >= 0, got {sigma}")));
    }
    if !(config.level > 0.0 && config.level < 1.0) {
        return Err(Error::InvalidArgument(format!("confidence level must lie in (0, 1), got {}", config.level)));
    }
    let bank = build_coefficient_bank(spec)?;
    let reference = bank.apply(signal)?;
    let q = signal.len();
    let analytic = output_sd(&bank, &NoiseEstimate::known(sigma), q)?;

    let per_trial = config.execution.map_indexed(config.trials, |trial| {
        let mut noisy = vec![0.0; q];
        NormalStream::new(config.seed, trial as u64).fill(sigma, &mut noisy);
        for (v, s) in noisy.iter_mut().zip(signal) {
            *v += s;
        }
        let out = bank.apply(&noisy).expect("length and finiteness already checked");
        let e_yf: Vec<f64> = out.yf.iter().zip(&reference.yf).map(|(a, b)| a - b).collect();
        let e_dyf: Vec<f64> = out.dyf.iter().zip(&reference.dyf).map(|(a, b)| a - b).collect();
        (e_yf, e_dyf)
    });

    let z = two_sided_z(config.level);
    let trials = config.trials as f64;
    let mut mean_yf = vec![0.0; q];
    let mut mean_dyf = vec![0.0; q];
    let mut hits_yf = vec![0usize; q];
    let mut hits_dyf = vec![0usize; q];
    for (e_yf, e_dyf) in &per_trial {
        for t in 0..q {
            mean_yf[t] += e_yf[t];
            mean_dyf[t] += e_dyf[t];
            hits_yf[t] += usize::from(e_yf[t].abs() <= z * analytic.syf[t]);
            hits_dyf[t] += usize::from(e_dyf[t].abs() <= z * analytic.sdyf[t]);
        }
    }
    mean_yf.iter_mut().chain(mean_dyf.iter_mut()).for_each(|v| *v /= trials);
    let mut ss_yf = vec![0.0; q];
    let mut ss_dyf = vec![0.0; q];
    for (e_yf, e_dyf) in &per_trial {
        for t in 0..q {
            ss_yf[t] += (e_yf[t] - mean_yf[t]).powi(2);
            ss_dyf[t] += (e_dyf[t] - mean_dyf[t]).powi(2);
        }
    }
    let sd = |ss: Vec<f64>| ss.into_iter().map(|s| (s / (trials - 1.0)).sqrt()).collect();
    let frac = |h: Vec<usize>| h.into_iter().map(|c| c as f64 / trials).collect();
    Ok(MonteCarloReport {
        trials: config.trials,
        seed: config.seed,
        sigma,
        level: config.level,
        empirical_syf: sd(ss_yf),
        empirical_sdyf: sd(ss_dyf),
        analytic,
        coverage_yf: frac(hits_yf),
        coverage_dyf: frac(hits_dyf),
    })
}
