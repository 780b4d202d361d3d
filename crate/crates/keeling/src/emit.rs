//! Figure-ready tables and their CSV / JSON encodings.
//!
//! Every table is a list of named columns and rows of scalar cells. CSV files
//! carry a single header row; JSON files wrap the same rows with run metadata
//! and column documentation (see `schema/dataset.schema.json`). Nothing
//! time- or host-dependent is written, so identical inputs give identical
//! bytes.

use std::fs;
use std::path::{Path, PathBuf};

use savgol_ci::special::two_sided_z;
use savgol_ci::{ConfidenceBands, FilterSpec, FilteredSeries, MonteCarloReport, Weighting};
use serde::ser::{Serialize, Serializer};
use serde::Serialize as DeriveSerialize;

use crate::anthropogenic::AnthropogenicSeries;
use crate::data::AnnualSeries;
use crate::error::{Error, Result};
use crate::pipeline::{Bundle, Selection};

pub const TOOL: &str = env!("CARGO_PKG_NAME");
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Null,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Null => String::new(),
        }
    }
}

impl Serialize for Cell {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Cell::Int(v) => s.serialize_i64(*v),
            Cell::Float(v) if v.is_finite() => s.serialize_f64(*v),
            Cell::Text(v) => s.serialize_str(v),
            Cell::Float(_) | Cell::Null => s.serialize_none(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<i32> for Cell {
    fn from(v: i32) -> Self {
        Cell::Int(v.into())
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Null, Cell::Float)
    }
}

#[derive(Debug, Clone, PartialEq, DeriveSerialize)]
pub struct Column {
    pub name: &'static str,
    pub unit: &'static str,
    pub description: &'static str,
}

const fn col(name: &'static str, unit: &'static str, description: &'static str) -> Column {
    Column { name, unit, description }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: &'static str,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
}

impl Dataset {
    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let i = self.columns.iter().position(|c| c.name == name)?;
        Some(self.rows.iter().map(|r| &r[i]).collect())
    }
}

#[derive(Debug, Clone, PartialEq, DeriveSerialize)]
pub struct SpecMeta {
    pub n: usize,
    pub m: usize,
    pub weighting: &'static str,
}

impl From<&FilterSpec> for SpecMeta {
    fn from(spec: &FilterSpec) -> Self {
        let weighting = match spec.weighting() {
            Weighting::OptimalQuadratic => "optimal-quadratic",
            Weighting::Uniform => "uniform",
        };
        Self { n: spec.n(), m: spec.m(), weighting }
    }
}

#[derive(Debug, Clone, PartialEq, DeriveSerialize)]
pub struct Metadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub seed: Option<u64>,
    pub spec: Option<SpecMeta>,
    pub source: String,
    pub level: Option<f64>,
}

impl Metadata {
    pub fn new(source: &str) -> Self {
        Self { tool: TOOL, version: VERSION, seed: None, spec: None, source: source.to_string(), level: None }
    }

    pub fn for_bundle(bundle: &Bundle) -> Self {
        Self {
            seed: Some(bundle.config.seed),
            spec: Some((&bundle.spec).into()),
            level: Some(bundle.config.level),
            ..Self::new(bundle.series.source_metadata())
        }
    }
}

#[derive(DeriveSerialize)]
struct JsonDocument<'a> {
    dataset: &'a str,
    metadata: &'a Metadata,
    columns: &'a [Column],
    rows: &'a [Vec<Cell>],
}

pub fn render(dataset: &Dataset, meta: &Metadata, format: Format) -> Result<String> {
    match format {
        Format::Csv => {
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
            let encode = |e: csv::Error| Error::Encode(e.to_string());
            w.write_record(dataset.columns.iter().map(|c| c.name)).map_err(encode)?;
            for row in &dataset.rows {
                w.write_record(row.iter().map(Cell::csv)).map_err(encode)?;
            }
            let bytes = w.into_inner().map_err(|e| Error::Encode(e.to_string()))?;
            String::from_utf8(bytes).map_err(|e| Error::Encode(e.to_string()))
        }
        Format::Json => {
            let doc = JsonDocument { dataset: dataset.name, metadata: meta, columns: &dataset.columns, rows: &dataset.rows };
            let mut s = serde_json::to_string_pretty(&doc).map_err(|e| Error::Encode(e.to_string()))?;
            s.push('\n');
            Ok(s)
        }
    }
}

/// `out` names a directory when it exists as one or ends in a separator;
/// otherwise it is a file-name prefix.
pub fn output_path(out: &Path, name: &str, format: Format) -> PathBuf {
    let file = format!("{name}.{}", format.extension());
    let as_str = out.as_os_str().to_string_lossy();
    if out.is_dir() || as_str.ends_with('/') || as_str.ends_with(std::path::MAIN_SEPARATOR) {
        out.join(file)
    } else {
        PathBuf::from(format!("{as_str}{file}"))
    }
}

pub fn write_all(datasets: &[Dataset], meta: &Metadata, format: Format, out: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::with_capacity(datasets.len());
    for d in datasets {
        let path = output_path(out, d.name, format);
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(|source| Error::Io { path: parent.display().to_string(), source })?;
        }
        let text = render(d, meta, format)?;
        fs::write(&path, text).map_err(|source| Error::Io { path: path.display().to_string(), source })?;
        written.push(path);
    }
    Ok(written)
}

pub fn series_table(series: &AnnualSeries) -> Dataset {
    Dataset {
        name: "fig1a_series",
        columns: vec![col("year", "yr", "calendar year"), col("co2", "ppm", "annual mean concentration")],
        rows: series.years().iter().zip(series.values()).map(|(y, v)| vec![(*y).into(), (*v).into()]).collect(),
    }
}

pub fn difference_table(series: &AnnualSeries) -> Dataset {
    Dataset {
        name: "fig1b_diff",
        columns: vec![
            col("year", "yr", "first year of the pair"),
            col("dy", "ppm/yr", "next year's value minus this year's"),
        ],
        rows: series.years().iter().zip(series.first_differences()).map(|(y, d)| vec![(*y).into(), d.into()]).collect(),
    }
}

fn sweep_table(name: &'static str, selections: &[Selection], differenced: bool) -> Dataset {
    let (col_name, description) = if differenced {
        ("sd_b", "biased SD of the differenced residuals")
    } else {
        ("sd_a", "biased SD of the residuals")
    };
    let rows = selections
        .iter()
        .flat_map(|s| {
            s.table.rows.iter().map(move |r| {
                vec![s.n.into(), r.m.into(), if differenced { r.sd_b } else { r.sd_a }.into()]
            })
        })
        .collect();
    Dataset {
        name,
        columns: vec![col("n", "", "polynomial parameter count"), col("m", "", "half-window"), col(col_name, "ppm", description)],
        rows,
    }
}

pub fn sweep_residual_table(selections: &[Selection]) -> Dataset {
    sweep_table("fig2a_sweep", selections, false)
}

pub fn sweep_differenced_table(selections: &[Selection]) -> Dataset {
    sweep_table("fig2b_sweep", selections, true)
}

pub fn filtered_table(series: &AnnualSeries, filtered: &FilteredSeries, bands: &ConfidenceBands) -> Dataset {
    let rows = (0..series.len())
        .map(|t| {
            vec![
                series.years()[t].into(),
                series.values()[t].into(),
                filtered.yf[t].into(),
                bands.yf_lo[t].into(),
                bands.yf_hi[t].into(),
            ]
        })
        .collect();
    Dataset {
        name: "fig3a_filtered",
        columns: vec![
            col("year", "yr", "calendar year"),
            col("y", "ppm", "input"),
            col("yf", "ppm", "smoothed value"),
            col("lo", "ppm", "lower confidence bound on yf"),
            col("hi", "ppm", "upper confidence bound on yf"),
        ],
        rows,
    }
}

pub fn residual_table(series: &AnnualSeries, residuals: &[f64]) -> Dataset {
    Dataset {
        name: "fig3b_residuals",
        columns: vec![col("year", "yr", "calendar year"), col("residual", "ppm", "y - yf")],
        rows: series.years().iter().zip(residuals).map(|(y, r)| vec![(*y).into(), (*r).into()]).collect(),
    }
}

pub fn normal_plot_table(plot: &savgol_ci::ProbabilityPlotData) -> Dataset {
    Dataset {
        name: "fig4a_qq",
        columns: vec![
            col("theoretical", "", "standard normal quantile at (i - 0.5)/q"),
            col("sample", "", "sorted residual over the unbiased noise SD"),
        ],
        rows: plot.theoretical.iter().zip(&plot.sample).map(|(t, s)| vec![(*t).into(), (*s).into()]).collect(),
    }
}

pub fn polynomial_table(curve: &savgol_ci::PolynomialNoiseCurve) -> Dataset {
    Dataset {
        name: "fig4b_polysweep",
        columns: vec![
            col("degree", "", "global polynomial degree"),
            col("sd_unbiased", "ppm", "residual SD with q - degree - 1 degrees of freedom"),
        ],
        rows: curve.points.iter().map(|(d, s)| vec![(*d).into(), (*s).into()]).collect(),
    }
}

pub fn derivative_table(series: &AnnualSeries, filtered: &FilteredSeries, bands: &ConfidenceBands) -> Dataset {
    let dy = series.first_differences();
    let rows = (0..series.len())
        .map(|t| {
            vec![
                series.years()[t].into(),
                filtered.dyf[t].into(),
                bands.dyf_lo[t].into(),
                bands.dyf_hi[t].into(),
                dy.get(t).copied().into(),
            ]
        })
        .collect();
    Dataset {
        name: "fig5_derivative_ci",
        columns: vec![
            col("year", "yr", "calendar year"),
            col("dyf", "ppm/yr", "filtered derivative"),
            col("lo", "ppm/yr", "lower confidence bound on dyf"),
            col("hi", "ppm/yr", "upper confidence bound on dyf"),
            col("dy_raw", "ppm/yr", "next year's value minus this year's; empty in the last year"),
        ],
        rows,
    }
}

pub fn monte_carlo_table(series: &AnnualSeries, report: &MonteCarloReport) -> Dataset {
    let rows = (0..series.len())
        .map(|t| {
            vec![
                series.years()[t].into(),
                report.analytic.sdyf[t].into(),
                report.empirical_sdyf[t].into(),
                report.analytic.syf[t].into(),
                report.empirical_syf[t].into(),
                report.coverage_dyf[t].into(),
                report.coverage_yf[t].into(),
            ]
        })
        .collect();
    Dataset {
        name: "fig6_mc",
        columns: vec![
            col("year", "yr", "calendar year"),
            col("sdyf_analytic", "ppm/yr", "propagated SD of dyf"),
            col("sdyf_empirical", "ppm/yr", "Monte Carlo SD of the dyf error"),
            col("syf_analytic", "ppm", "propagated SD of yf"),
            col("syf_empirical", "ppm", "Monte Carlo SD of the yf error"),
            col("coverage_dyf", "", "fraction of trials inside the dyf band"),
            col("coverage_yf", "", "fraction of trials inside the yf band"),
        ],
        rows,
    }
}

pub fn log2_table(series: &AnnualSeries, a: &AnthropogenicSeries) -> Dataset {
    Dataset {
        name: "fig7_log2",
        columns: vec![
            col("year", "yr", "calendar year"),
            col("log2_excess", "", "log2 of the smoothed excess over the baseline"),
        ],
        rows: series.years().iter().zip(&a.log2_excess).map(|(y, v)| vec![(*y).into(), (*v).into()]).collect(),
    }
}

pub fn frac_rate_table(series: &AnnualSeries, a: &AnthropogenicSeries, level: f64) -> Dataset {
    let z = two_sided_z(level);
    let rows = (0..series.len())
        .map(|t| {
            let (r, s) = (a.frac_rate[t], a.frac_rate_sd[t]);
            vec![series.years()[t].into(), r.into(), (r - z * s).into(), (r + z * s).into(), s.into()]
        })
        .collect();
    Dataset {
        name: "fig8_fracrate",
        columns: vec![
            col("year", "yr", "calendar year"),
            col("frac_rate", "1/yr", "fractional growth rate of the excess"),
            col("lo", "1/yr", "lower confidence bound"),
            col("hi", "1/yr", "upper confidence bound"),
            col("sd", "1/yr", "propagated SD of frac_rate"),
        ],
        rows,
    }
}

pub fn summary_table(b: &Bundle) -> Dataset {
    let mut rows: Vec<(String, Cell)> = vec![
        ("q".into(), b.series.len().into()),
        ("first_year".into(), b.series.years()[0].into()),
        ("last_year".into(), b.series.years()[b.series.len() - 1].into()),
        ("max_m".into(), b.max_m.into()),
    ];
    for s in &b.selections {
        rows.push((format!("floor_n{}", s.n), s.floor.sd.into()));
        rows.push((format!("plateau_m_start_n{}", s.n), s.table.rows[s.plateau.start].m.into()));
        rows.push((format!("plateau_m_end_n{}", s.n), s.table.rows[s.plateau.end - 1].m.into()));
        rows.push((format!("selected_m_n{}", s.n), s.m.into()));
    }
    let poly_min = b.polynomial.minimum();
    rows.extend([
        ("n".into(), b.spec.n().into()),
        ("m".into(), b.spec.m().into()),
        ("sd_residual_biased".into(), b.biased.sd.into()),
        ("sd_differenced_biased".into(), b.differenced.sd.into()),
        ("sd_unbiased".into(), b.unbiased.sd.into()),
        ("z".into(), b.bands.z.into()),
        ("f_ratio".into(), b.variance_test.ratio.into()),
        ("f_n1".into(), b.variance_test.n1.into()),
        ("f_n2".into(), b.variance_test.n2.into()),
        ("f_p_value".into(), b.variance_test.p_value.into()),
        ("f_pass_95".into(), usize::from(b.variance_test.pass_95).into()),
        ("qq_max_abs_deviation".into(), b.normal_plot.max_abs_deviation().into()),
        ("poly_min_degree".into(), poly_min.map_or(Cell::Null, |p| p.0.into())),
        ("poly_min_sd".into(), poly_min.map(|p| p.1).into()),
        ("mc_trials".into(), b.monte_carlo.trials.into()),
        ("mc_max_rel_dev_dyf".into(), b.monte_carlo.max_relative_deviation_dyf().into()),
        ("mc_max_rel_dev_yf".into(), b.monte_carlo.max_relative_deviation_yf().into()),
        ("baseline".into(), b.anthropogenic.baseline.into()),
        ("rate_method".into(), Cell::Text(b.anthropogenic.method.name().into())),
        ("log_noise_sd_unbiased".into(), b.anthropogenic.noise.sd.into()),
        ("mean_frac_rate".into(), b.anthropogenic.mean_frac_rate.into()),
        ("doubling_period".into(), b.anthropogenic.doubling_period.into()),
    ]);
    Dataset {
        name: "summary",
        columns: vec![col("quantity", "", "name of the reported quantity"), col("value", "", "value")],
        rows: rows.into_iter().map(|(k, v)| vec![Cell::Text(k), v]).collect(),
    }
}

/// All tables for a pipeline run, in file order.
pub fn datasets(b: &Bundle) -> Vec<Dataset> {
    vec![
        series_table(&b.series),
        difference_table(&b.series),
        sweep_residual_table(&b.selections),
        sweep_differenced_table(&b.selections),
        filtered_table(&b.series, &b.filtered, &b.bands),
        residual_table(&b.series, &b.residuals),
        normal_plot_table(&b.normal_plot),
        polynomial_table(&b.polynomial),
        derivative_table(&b.series, &b.filtered, &b.bands),
        monte_carlo_table(&b.series, &b.monte_carlo),
        log2_table(&b.series, &b.anthropogenic),
        frac_rate_table(&b.series, &b.anthropogenic, b.config.level),
        summary_table(b),
    ]
}
