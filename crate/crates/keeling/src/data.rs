//! Annual-mean CO2 ingestion.

use crate::error::{Error, Result};

/// Published NOAA GML annual means for Mauna Loa.
pub const NOAA_ANNUAL_URL: &str = "https://gml.noaa.gov/webdata/ccgg/trends/co2/co2_annmean_mlo.csv";

/// Vendored copy of the NOAA file, 1958-2024.
pub const SNAPSHOT: &str = include_str!("../data/co2_annmean_mlo.csv");

/// Evenly spaced annual record.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnualSeries {
    years: Vec<i32>,
    values: Vec<f64>,
    source_metadata: String,
}

impl AnnualSeries {
    pub fn new(years: Vec<i32>, values: Vec<f64>, source_metadata: impl Into<String>) -> Result<Self> {
        if years.len() != values.len() {
            return Err(Error::InvalidSeries(format!("{} years but {} values", years.len(), values.len())));
        }
        if years.is_empty() {
            return Err(Error::Empty);
        }
        for w in years.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::InvalidSeries(format!("year {} follows {}", w[1], w[0])));
            }
        }
        let missing: Vec<i32> = years.windows(2).flat_map(|w| (w[0] + 1)..w[1]).collect();
        if !missing.is_empty() {
            return Err(Error::Gap { missing });
        }
        if years.len() < 3 {
            return Err(Error::InvalidSeries(format!("need at least 3 annual values, got {}", years.len())));
        }
        if let Some((y, v)) = years.iter().zip(&values).find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidSeries(format!("value {v} in {y} is not a positive finite number")));
        }
        Ok(Self { years, values, source_metadata: source_metadata.into() })
    }

    pub fn years(&self) -> &[i32] {
        &self.years
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn source_metadata(&self) -> &str {
        &self.source_metadata
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `y[i+1] - y[i]`, one shorter than the series.
    pub fn first_differences(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

/// Parses the NOAA annual-mean layout: `#` comment lines, an optional
/// `year,mean,unc` header, then comma- or whitespace-separated rows.
/// Only the first two columns are read. Comment text becomes the source
/// metadata.
pub fn parse_noaa_csv(bytes: &[u8]) -> Result<AnnualSeries> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Parse {
        line: 1 + bytes[..e.valid_up_to()].iter().filter(|b| **b == b'\n').count(),
        message: "input is not valid UTF-8".into(),
    })?;

    let mut comments = Vec::new();
    let (mut years, mut values) = (Vec::new(), Vec::new());
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let lineno = idx + 1;
        if line.is_empty() {
            continue;
        }
        if let Some(c) = line.strip_prefix('#') {
            let c = c.trim();
            if !c.is_empty() {
                comments.push(c.to_string());
            }
            continue;
        }
        let mut fields = line.split(|ch: char| ch == ',' || ch.is_whitespace()).filter(|f| !f.is_empty());
        let first = fields.next().unwrap_or_default();
        if years.is_empty() && first.eq_ignore_ascii_case("year") {
            continue;
        }
        let year: i32 = first
            .parse()
            .map_err(|_| Error::Parse { line: lineno, message: format!("cannot read year from {first:?}") })?;
        let field = fields
            .next()
            .ok_or_else(|| Error::Parse { line: lineno, message: "missing the mean column".into() })?;
        let value: f64 = field
            .parse()
            .map_err(|_| Error::Parse { line: lineno, message: format!("cannot read a value from {field:?}") })?;
        years.push(year);
        values.push(value);
    }
    if years.is_empty() {
        return Err(Error::Empty);
    }
    AnnualSeries::new(years, values, comments.join("\n"))
}

/// The vendored snapshot.
pub fn snapshot() -> AnnualSeries {
    parse_noaa_csv(SNAPSHOT.as_bytes()).expect("vendored snapshot parses")
}

/// Plain HTTPS GET of a NOAA-format file.
pub fn fetch(url: &str) -> Result<AnnualSeries> {
    let fail = |message: String| Error::Fetch { url: url.to_string(), message };
    let body = ureq::get(url).call().map_err(|e| fail(e.to_string()))?.into_string().map_err(|e| fail(e.to_string()))?;
    let mut series = parse_noaa_csv(body.as_bytes())?;
    series.source_metadata = format!("fetched from {url}\n{}", series.source_metadata);
    Ok(series)
}
