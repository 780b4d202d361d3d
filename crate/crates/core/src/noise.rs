//! Input-noise estimation from filter residuals.
//!
//! Two biased estimators are provided: the plain residual variance and the
//! differenced-residual variance, which compares first differences of the
//! input with first differences of the filter output and is far less
//! sensitive to under-fitting. Sweeping `m` for fixed `n` and reading the
//! plateau of the differenced estimator gives the noise floor; `m` is then
//! chosen so that the plain residual SD lands closest to it.

use crate::error::{Error, Result};
use crate::filter::{apply_filter, FilterSpec};
use crate::parallel::Execution;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// `(1/q) Σ (y - ŷ)²`
    ResidualVariance,
    /// `(1/(2(q-1))) Σ (Δy - Δŷ)²`
    DifferencedResidualVariance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bias {
    Biased,
    Unbiased,
}

/// A standard-deviation estimate of the input noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseEstimate {
    pub sd: f64,
    pub method: Method,
    pub bias: Bias,
    /// Filter that produced the residuals, when known. Required for [`unbias`].
    pub spec: Option<FilterSpec>,
}

impl NoiseEstimate {
    pub fn variance(&self) -> f64 {
        self.sd * self.sd
    }

    pub fn with_spec(mut self, spec: FilterSpec) -> Self {
        self.spec = Some(spec);
        self
    }

    /// An externally supplied, already-unbiased noise SD (e.g. a known
    /// instrument precision).
    pub fn known(sd: f64) -> Self {
        Self { sd, method: Method::ResidualVariance, bias: Bias::Unbiased, spec: None }
    }
}

fn check_lengths(y: &[f64], yf: &[f64], min: usize) -> Result<()> {
    if y.len() != yf.len() {
        return Err(Error::LengthMismatch { left: y.len(), right: yf.len() });
    }
    if y.len() < min {
        return Err(Error::SeriesTooShort { len: y.len(), min });
    }
    Ok(())
}

/// Biased residual SD, normalised by the full series length.
pub fn residual_sd(y: &[f64], yf: &[f64]) -> Result<NoiseEstimate> {
    check_lengths(y, yf, 2)?;
    let ss: f64 = y.iter().zip(yf).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(NoiseEstimate {
        sd: (ss / y.len() as f64).sqrt(),
        method: Method::ResidualVariance,
        bias: Bias::Biased,
        spec: None,
    })
}

/// Biased differenced-residual SD. The factor 2 compensates for the doubled
/// variance of a difference of independent noise terms.
pub fn differenced_sd(y: &[f64], yf: &[f64]) -> Result<NoiseEstimate> {
    check_lengths(y, yf, 3)?;
    let q = y.len();
    let ss: f64 = (0..q - 1)
        .map(|i| {
            let d = (y[i + 1] - y[i]) - (yf[i + 1] - yf[i]);
            d * d
        })
        .sum();
    Ok(NoiseEstimate {
        sd: (ss / (2.0 * (q - 1) as f64)).sqrt(),
        method: Method::DifferencedResidualVariance,
        bias: Bias::Biased,
        spec: None,
    })
}

/// `(2m+1)/(2m+1-n)` variance correction.
pub fn correction_factor(spec: &FilterSpec) -> f64 {
    spec.window() as f64 / spec.dof() as f64
}

/// Applies the degrees-of-freedom correction to a biased estimate.
pub fn unbias(e: &NoiseEstimate) -> Result<NoiseEstimate> {
    if e.bias == Bias::Unbiased {
        return Err(Error::AlreadyUnbiased);
    }
    let spec = e
        .spec
        .ok_or_else(|| Error::InvalidArgument("bias correction needs the filter spec".into()))?;
    Ok(NoiseEstimate {
        sd: e.sd * correction_factor(&spec).sqrt(),
        bias: Bias::Unbiased,
        ..*e
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub m: usize,
    /// Biased residual SD.
    pub sd_a: f64,
    /// Biased differenced-residual SD.
    pub sd_b: f64,
}

/// Residual SDs versus `m` for a fixed `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub n: usize,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn ms(&self) -> impl Iterator<Item = usize> + '_ {
        self.rows.iter().map(|r| r.m)
    }
}

/// Runs the filter for every admissible `m` up to `p` and records both
/// biased SDs. No degrees-of-freedom correction is applied: both columns
/// carry the same factor for a given `m`, so the selection is unaffected.
pub fn sweep_residual_sd(n: usize, p: usize, y: &[f64]) -> Result<SweepTable> {
    sweep_residual_sd_with(n, p, y, Execution::default())
}

pub fn sweep_residual_sd_with(n: usize, p: usize, y: &[f64], exec: Execution) -> Result<SweepTable> {
    let m_min = FilterSpec::min_half_window(n);
    if n < 1 {
        return Err(Error::InvalidSpec("n >= 1 violated (n = 0)".into()));
    }
    if p < m_min {
        return Err(Error::InvalidArgument(format!(
            "maximum half-window p = {p} is below the smallest admissible m = {m_min} for n = {n}"
        )));
    }
    if y.len() < 2 * p + 1 {
        return Err(Error::SweepRange {
            requested: p,
            max_feasible: y.len().saturating_sub(1) / 2,
            len: y.len(),
        });
    }
    let rows = exec.map_indexed(p - m_min + 1, |k| -> Result<SweepRow> {
        let m = m_min + k;
        let spec = FilterSpec::new(n, m)?;
        let out = apply_filter(&spec, y)?;
        Ok(SweepRow {
            m,
            sd_a: residual_sd(y, &out.yf)?.sd,
            sd_b: differenced_sd(y, &out.yf)?.sd,
        })
    });
    Ok(SweepTable { n, rows: rows.into_iter().collect::<Result<_>>()? })
}

/// Plateau detection settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlateauConfig {
    /// Largest relative change between successive `sd_b` values inside a run.
    pub threshold: f64,
    /// Minimum number of rows in an accepted run.
    pub min_run: usize,
}

impl Default for PlateauConfig {
    fn default() -> Self {
        Self { threshold: 0.02, min_run: 3 }
    }
}

/// The stable run located by [`find_plateau`], as row indices `start..end`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plateau {
    pub start: usize,
    pub end: usize,
    pub level: f64,
}

fn relative_change(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (b - a).abs() / scale
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let k = values.len();
    if k % 2 == 1 {
        values[k / 2]
    } else {
        0.5 * (values[k / 2 - 1] + values[k / 2])
    }
}

/// Longest run of rows whose successive `sd_b` values change by less than
/// the threshold; earliest run wins ties. The small-`m` dropoff has large
/// steps and so never joins a run.
pub fn find_plateau(table: &SweepTable, config: &PlateauConfig) -> Result<Plateau> {
    if table.rows.len() < 5 {
        return Err(Error::InvalidArgument(format!(
            "noise-floor estimation needs at least 5 sweep rows, got {}",
            table.rows.len()
        )));
    }
    let sd: Vec<f64> = table.rows.iter().map(|r| r.sd_b).collect();
    let mut best = (0usize, 1usize);
    let mut start = 0;
    for i in 1..=sd.len() {
        let breaks = i == sd.len() || relative_change(sd[i - 1], sd[i]) >= config.threshold;
        if breaks {
            if i - start > best.1 - best.0 {
                best = (start, i);
            }
            start = i;
        }
    }
    if best.1 - best.0 < config.min_run.max(2) {
        return Err(Error::NoPlateau { threshold: config.threshold, min_run: config.min_run });
    }
    let mut run = sd[best.0..best.1].to_vec();
    Ok(Plateau { start: best.0, end: best.1, level: median(&mut run) })
}

/// Biased noise-floor estimate: the median `sd_b` over the plateau.
pub fn estimate_noise_floor(table: &SweepTable) -> Result<NoiseEstimate> {
    estimate_noise_floor_with(table, &PlateauConfig::default())
}

pub fn estimate_noise_floor_with(table: &SweepTable, config: &PlateauConfig) -> Result<NoiseEstimate> {
    let plateau = find_plateau(table, config)?;
    Ok(NoiseEstimate {
        sd: plateau.level,
        method: Method::DifferencedResidualVariance,
        bias: Bias::Biased,
        spec: None,
    })
}

/// The `m` whose residual SD is closest to the noise floor. Ties go to the
/// smaller `m`.
pub fn select_m(table: &SweepTable, floor: &NoiseEstimate) -> Result<usize> {
    if floor.bias != Bias::Biased {
        return Err(Error::InvalidArgument(
            "select_m compares biased sweep values and needs the biased noise floor".into(),
        ));
    }
    table
        .rows
        .iter()
        .map(|r| (r.m, (r.sd_a - floor.sd).abs()))
        .fold(None, |best: Option<(usize, f64)>, (m, d)| match best {
            Some((_, bd)) if bd <= d => best,
            _ => Some((m, d)),
        })
        .map(|(m, _)| m)
        .ok_or_else(|| Error::InvalidArgument("empty sweep table".into()))
}
