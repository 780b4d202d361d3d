//! End-to-end analysis of an annual series.

use std::ops::RangeInclusive;

use log::warn;
use savgol_ci::noise::{estimate_noise_floor_with, find_plateau, sweep_residual_sd_with, Plateau};
use savgol_ci::{
    bands, build_coefficient_bank, differenced_sd, monte_carlo_validate_with,
    normal_plot_data, output_sd, polynomial_noise_oracle, residual_sd, select_m, unbias, ConfidenceBands,
    Execution, FilterSpec, FilteredSeries, MonteCarloConfig, MonteCarloReport, NoiseEstimate, PlateauConfig,
    PolynomialNoiseCurve, ProbabilityPlotData, SweepTable, VarianceTest,
};

use crate::anthropogenic::{anthropogenic_analysis_with, AnthropogenicSeries, RateMethod, DEFAULT_BASELINE};
use crate::data::AnnualSeries;
use crate::error::{Result, Stage, StageExt};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Parameter counts to sweep.
    pub candidates: Vec<usize>,
    /// Largest half-window in the sweep.
    pub max_m: usize,
    pub level: f64,
    pub seed: u64,
    pub trials: usize,
    pub baseline: f64,
    /// Parameter count of the reported filter.
    pub report_n: usize,
    /// Overrides the selected half-window of the reported filter.
    pub m_override: Option<usize>,
    pub rate_method: RateMethod,
    pub poly_degrees: RangeInclusive<usize>,
    pub plateau: PlateauConfig,
    pub execution: Execution,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            candidates: vec![3, 5, 7],
            max_m: 25,
            level: 0.95,
            seed: 0,
            trials: 1000,
            baseline: DEFAULT_BASELINE,
            report_n: 5,
            m_override: None,
            rate_method: RateMethod::LogTransform,
            poly_degrees: 2..=20,
            plateau: PlateauConfig::default(),
            execution: Execution::default(),
        }
    }
}

/// Sweep, noise floor and chosen half-window for one parameter count.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub n: usize,
    pub table: SweepTable,
    pub plateau: Plateau,
    pub floor: NoiseEstimate,
    pub m: usize,
}

/// Everything the figures are drawn from.
#[derive(Debug, Clone)]
pub struct Bundle {
    pub series: AnnualSeries,
    pub config: PipelineConfig,
    /// Half-window limit actually used.
    pub max_m: usize,
    pub warnings: Vec<String>,
    pub selections: Vec<Selection>,
    pub spec: FilterSpec,
    pub filtered: FilteredSeries,
    pub residuals: Vec<f64>,
    pub biased: NoiseEstimate,
    pub differenced: NoiseEstimate,
    pub unbiased: NoiseEstimate,
    pub bands: ConfidenceBands,
    pub variance_test: VarianceTest,
    pub normal_plot: ProbabilityPlotData,
    pub poly_degrees: RangeInclusive<usize>,
    pub polynomial: PolynomialNoiseCurve,
    pub monte_carlo: MonteCarloReport,
    pub anthropogenic: AnthropogenicSeries,
}

impl Bundle {
    pub fn selection(&self, n: usize) -> Option<&Selection> {
        self.selections.iter().find(|s| s.n == n)
    }
}

/// Clamps `requested` to the largest half-window a series of `q` samples allows.
pub fn feasible_max_m(requested: usize, q: usize, warnings: &mut Vec<String>) -> usize {
    let limit = q.saturating_sub(1) / 2;
    if requested <= limit {
        return requested;
    }
    let msg = format!("max half-window reduced from {requested} to {limit} for a series of {q} values");
    warn!("{msg}");
    warnings.push(msg);
    limit
}

pub fn select(
    n: usize,
    max_m: usize,
    y: &[f64],
    plateau: &PlateauConfig,
    execution: Execution,
) -> Result<Selection> {
    let table = sweep_residual_sd_with(n, max_m, y, execution).at(Stage::Sweep)?;
    let found = find_plateau(&table, plateau).at(Stage::NoiseFloor)?;
    let floor = estimate_noise_floor_with(&table, plateau).at(Stage::NoiseFloor)?;
    let m = select_m(&table, &floor).at(Stage::Select)?;
    Ok(Selection { n, table, plateau: found, floor, m })
}

/// Biased, differenced and unbiased noise SDs of `y` under `spec`.
pub fn noise_estimates(
    spec: &FilterSpec,
    y: &[f64],
    filtered: &FilteredSeries,
) -> Result<(NoiseEstimate, NoiseEstimate, NoiseEstimate)> {
    let biased = residual_sd(y, &filtered.yf).at(Stage::NoiseEstimate)?.with_spec(*spec);
    let differenced = differenced_sd(y, &filtered.yf).at(Stage::NoiseEstimate)?.with_spec(*spec);
    let unbiased = unbias(&biased).at(Stage::NoiseEstimate)?;
    Ok((biased, differenced, unbiased))
}

/// Confidence bands from an unbiased noise estimate.
pub fn confidence_bands(
    spec: &FilterSpec,
    filtered: &FilteredSeries,
    noise: &NoiseEstimate,
    level: f64,
) -> Result<ConfidenceBands> {
    let bank = build_coefficient_bank(spec).at(Stage::Filter)?;
    let sds = output_sd(&bank, noise, filtered.len()).at(Stage::Bands)?;
    bands(filtered, &sds, level).at(Stage::Bands)
}

/// Degree range clamped so every fit keeps at least one residual degree of freedom.
pub fn feasible_degrees(requested: &RangeInclusive<usize>, q: usize, warnings: &mut Vec<String>) -> RangeInclusive<usize> {
    let hi = (*requested.end()).min(q.saturating_sub(2));
    if hi < *requested.end() {
        let msg = format!("polynomial degrees capped at {hi} for a series of {q} values");
        warn!("{msg}");
        warnings.push(msg);
    }
    *requested.start()..=hi
}

pub fn run_pipeline(series: &AnnualSeries, config: &PipelineConfig) -> Result<Bundle> {
    let y = series.values();
    let q = y.len();
    let mut warnings = Vec::new();
    let max_m = feasible_max_m(config.max_m, q, &mut warnings);

    let mut selections = Vec::with_capacity(config.candidates.len() + 1);
    for &n in &config.candidates {
        selections.push(select(n, max_m, y, &config.plateau, config.execution)?);
    }
    let report_m = match config.m_override {
        Some(m) => m,
        None => match selections.iter().find(|s| s.n == config.report_n) {
            Some(s) => s.m,
            None => {
                let s = select(config.report_n, max_m, y, &config.plateau, config.execution)?;
                let m = s.m;
                selections.push(s);
                m
            }
        },
    };
    let spec = FilterSpec::new(config.report_n, report_m).at(Stage::Filter)?;
    if let Some(msg) = spec.advisory() {
        warn!("{msg}");
        warnings.push(msg);
    }

    let filtered = build_coefficient_bank(&spec).at(Stage::Filter)?.apply(y).at(Stage::Filter)?;
    let residuals = filtered.residuals(y);
    let (biased, differenced, unbiased) = noise_estimates(&spec, y, &filtered)?;
    let bands = confidence_bands(&spec, &filtered, &unbiased, config.level)?;

    let variance_test = savgol_ci::variance_ratio_test(&residuals).at(Stage::VarianceTest)?;
    let normal_plot = normal_plot_data(&residuals, &unbiased).at(Stage::NormalPlot)?;
    let poly_degrees = feasible_degrees(&config.poly_degrees, q, &mut warnings);
    let polynomial = polynomial_noise_oracle(y, poly_degrees.clone()).at(Stage::PolynomialOracle)?;

    let mc_config =
        MonteCarloConfig { trials: config.trials, seed: config.seed, level: config.level, execution: config.execution };
    let monte_carlo = monte_carlo_validate_with(&spec, y, unbiased.sd, &mc_config).at(Stage::MonteCarlo)?;

    let anthropogenic = anthropogenic_analysis_with(series, &spec, config.baseline, config.rate_method)?;

    Ok(Bundle {
        series: series.clone(),
        config: config.clone(),
        max_m,
        warnings,
        selections,
        spec,
        filtered,
        residuals,
        biased,
        differenced,
        unbiased,
        bands,
        variance_test,
        normal_plot,
        poly_degrees,
        polynomial,
        monte_carlo,
        anthropogenic,
    })
}
