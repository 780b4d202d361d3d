//! Growth of the CO2 excess over a pre-industrial baseline.
//!
//! The default method filters `z = ln(y - baseline)` directly, so the
//! fractional rate `d z / dt` is a linear statistic of `z` and its SD follows
//! from the coefficient norms with the noise SD estimated on `z`. The
//! alternative filters `y` and forms `dyf / (yf - baseline)`, with a
//! first-order delta-method SD.

use savgol_ci::noise::{residual_sd, unbias};
use savgol_ci::{build_coefficient_bank, output_sd, FilterSpec, NoiseEstimate};

use crate::data::AnnualSeries;
use crate::error::{Error, Result, Stage, StageExt};

/// Pre-industrial CO2 concentration, ppm.
pub const DEFAULT_BASELINE: f64 = 280.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RateMethod {
    /// Filter the log excess.
    #[default]
    LogTransform,
    /// Filter the concentration, then divide the derivative by the excess.
    DeltaMethod,
}

impl RateMethod {
    pub fn name(self) -> &'static str {
        match self {
            RateMethod::LogTransform => "log-transform",
            RateMethod::DeltaMethod => "delta-method",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnthropogenicSeries {
    pub baseline: f64,
    pub method: RateMethod,
    /// `log2` of the smoothed excess.
    pub log2_excess: Vec<f64>,
    /// Per year.
    pub frac_rate: Vec<f64>,
    pub frac_rate_sd: Vec<f64>,
    /// Unbiased noise SD in the domain that was filtered (`z` or `y`).
    pub noise: NoiseEstimate,
    pub mean_frac_rate: f64,
    /// `ln 2 / mean_frac_rate`, years.
    pub doubling_period: f64,
}

pub fn anthropogenic_analysis(series: &AnnualSeries, spec: &FilterSpec, baseline: f64) -> Result<AnthropogenicSeries> {
    anthropogenic_analysis_with(series, spec, baseline, RateMethod::LogTransform)
}

pub fn anthropogenic_analysis_with(
    series: &AnnualSeries,
    spec: &FilterSpec,
    baseline: f64,
    method: RateMethod,
) -> Result<AnthropogenicSeries> {
    let y = series.values();
    if let Some((year, value)) = series.years().iter().zip(y).find(|(_, v)| **v <= baseline) {
        return Err(Error::Domain { year: *year, value: *value, baseline });
    }
    let bank = build_coefficient_bank(spec).at(Stage::Anthropogenic)?;
    let q = y.len();

    let (log2_excess, frac_rate, frac_rate_sd, noise) = match method {
        RateMethod::LogTransform => {
            let z: Vec<f64> = y.iter().map(|v| (v - baseline).ln()).collect();
            let out = bank.apply(&z).at(Stage::Anthropogenic)?;
            let noise = unbias(&residual_sd(&z, &out.yf).at(Stage::Anthropogenic)?.with_spec(*spec))
                .at(Stage::Anthropogenic)?;
            let sds = output_sd(&bank, &noise, q).at(Stage::Anthropogenic)?;
            let log2 = out.yf.iter().map(|v| v / std::f64::consts::LN_2).collect();
            (log2, out.dyf, sds.sdyf, noise)
        }
        RateMethod::DeltaMethod => {
            let out = bank.apply(y).at(Stage::Anthropogenic)?;
            let noise = unbias(&residual_sd(y, &out.yf).at(Stage::Anthropogenic)?.with_spec(*spec))
                .at(Stage::Anthropogenic)?;
            let mut log2 = Vec::with_capacity(q);
            let mut rate = Vec::with_capacity(q);
            let mut sd = Vec::with_capacity(q);
            for t in 0..q {
                let u = out.yf[t] - baseline;
                if u <= 0.0 {
                    return Err(Error::Domain { year: series.years()[t], value: out.yf[t], baseline });
                }
                let (j, _) = bank.placement(t, q);
                let (c, d) = (bank.smooth_row(j), bank.deriv_row(j));
                let var_s: f64 = c.iter().map(|v| v * v).sum();
                let var_d: f64 = d.iter().map(|v| v * v).sum();
                let cov: f64 = c.iter().zip(d).map(|(a, b)| a * b).sum();
                let r = out.dyf[t] / u;
                // gradient of dyf / (yf - b) is (1/u, -r/u) in (dyf, yf)
                let var = (var_d - 2.0 * r * cov + r * r * var_s) / (u * u);
                log2.push(u.log2());
                rate.push(r);
                sd.push(noise.sd * var.max(0.0).sqrt());
            }
            (log2, rate, sd, noise)
        }
    };

    let mean_frac_rate = frac_rate.iter().sum::<f64>() / q as f64;
    Ok(AnthropogenicSeries {
        baseline,
        method,
        log2_excess,
        frac_rate,
        frac_rate_sd,
        noise,
        mean_frac_rate,
        doubling_period: std::f64::consts::LN_2 / mean_frac_rate,
    })
}
