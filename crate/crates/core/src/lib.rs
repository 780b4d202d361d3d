//! Weighted Savitzky-Golay smoothing and differentiation with a defensible
//! noise-variance estimate, data-driven choice of the half-window, and
//! confidence intervals on both the smoothed signal and its derivative.
//!
//! ```
//! use savgol_ci::{apply_filter, FilterSpec};
//!
//! let y: Vec<f64> = (0..40).map(|t| 0.01 * (t as f64).powi(2)).collect();
//! let out = apply_filter(&FilterSpec::new(3, 5).unwrap(), &y).unwrap();
//! assert!((out.yf[0] - y[0]).abs() < 1e-9);
//! ```

pub mod diagnostics;
pub mod error;
pub mod filter;
pub mod linalg;
pub mod noise;
pub mod parallel;
pub mod rng;
pub mod special;
pub mod uncertainty;

pub use diagnostics::{
    fit_polynomial, normal_plot_data, polynomial_noise_oracle, variance_ratio_test, PolynomialNoiseCurve,
    ProbabilityPlotData, VarianceTest,
};
pub use error::{Error, Result};
pub use filter::{
    apply_filter, build_coefficient_bank, build_design, build_weights, CoefficientBank, DesignMatrices,
    FilterSpec, FilteredSeries, Weighting,
};
pub use noise::{
    differenced_sd, estimate_noise_floor, residual_sd, select_m, sweep_residual_sd, unbias, Bias, Method,
    NoiseEstimate, PlateauConfig, SweepRow, SweepTable,
};
pub use parallel::Execution;
pub use uncertainty::{
    bands, monte_carlo_validate, monte_carlo_validate_with, output_sd, ConfidenceBands, MonteCarloConfig,
    MonteCarloReport, OutputSd,
};
