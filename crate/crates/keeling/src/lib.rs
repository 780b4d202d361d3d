//! Keeling-curve analysis: ingest the Mauna Loa annual means, choose a
//! smoothing filter from the data, attach confidence bands to the smoothed
//! curve and its growth rate, and emit plot-ready tables.

pub mod anthropogenic;
pub mod data;
pub mod emit;
pub mod error;
pub mod pipeline;

pub use anthropogenic::{anthropogenic_analysis, anthropogenic_analysis_with, AnthropogenicSeries, RateMethod};
pub use data::{parse_noaa_csv, snapshot, AnnualSeries};
pub use emit::{datasets, write_all, Dataset, Format, Metadata};
pub use error::{Error, Result, Stage};
pub use pipeline::{run_pipeline, Bundle, PipelineConfig, Selection};
