use std::fmt;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Pipeline stage attached to numerical errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Sweep,
    NoiseFloor,
    Select,
    Filter,
    NoiseEstimate,
    Bands,
    VarianceTest,
    NormalPlot,
    PolynomialOracle,
    MonteCarlo,
    Anthropogenic,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Sweep => "sweep",
            Stage::NoiseFloor => "noise-floor",
            Stage::Select => "select",
            Stage::Filter => "filter",
            Stage::NoiseEstimate => "noise-estimate",
            Stage::Bands => "bands",
            Stage::VarianceTest => "f-test",
            Stage::NormalPlot => "normal-plot",
            Stage::PolynomialOracle => "polynomial-oracle",
            Stage::MonteCarlo => "monte-carlo",
            Stage::Anthropogenic => "anthropogenic",
        })
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("[parse] line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("[parse] years are not consecutive; missing {}", format_years(.missing))]
    Gap { missing: Vec<i32> },

    #[error("[parse] no data rows found")]
    Empty,

    #[error("[parse] {0}")]
    InvalidSeries(String),

    #[error("[anthropogenic] {value} ppm in {year} is not above the {baseline} ppm baseline")]
    Domain { year: i32, value: f64, baseline: f64 },

    #[error("[{stage}] {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: savgol_ci::Error,
    },

    #[error("[fetch] {url}: {message}")]
    Fetch { url: String, message: String },

    #[error("[emit] {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("[emit] {0}")]
    Encode(String),
}

fn format_years(years: &[i32]) -> String {
    years.iter().map(i32::to_string).collect::<Vec<_>>().join(", ")
}

/// Tags a core-library result with the stage that produced it.
pub(crate) trait StageExt<T> {
    fn at(self, stage: Stage) -> Result<T>;
}

impl<T> StageExt<T> for savgol_ci::Result<T> {
    fn at(self, stage: Stage) -> Result<T> {
        self.map_err(|source| Error::Stage { stage, source })
    }
}
