use std::collections::BTreeMap;
use std::path::Path;

use chrono::NaiveDate;
use rayon::prelude::*;

use super::{diagram_norm, LandscapeConfig};
use crate::embedding::{window_clouds, EmbeddingParams};
use crate::error::{Error, Result};
use crate::market_data::PriceSeries;
use crate::persistence::{cloud_diagram, ThresholdPolicy};

pub const NORM_CSV_HEADER: [&str; 3] = ["symbol", "date", "l2_norm"];
pub const DIFF_CSV_HEADER: [&str; 3] = ["symbol", "date", "diff_l2"];

/// Landscape norm per embedding window, dated by the window's last sample.
#[derive(Debug, Clone, PartialEq)]
pub struct NormSeries {
    pub symbol: String,
    pub observations: Vec<(NaiveDate, f64)>,
}

/// First differences of a [`NormSeries`].
#[derive(Debug, Clone, PartialEq)]
pub struct DiffSeries {
    pub symbol: String,
    pub observations: Vec<(NaiveDate, f64)>,
}

impl DiffSeries {
    /// Differences dated on or before `until`.
    pub fn until(&self, until: NaiveDate) -> &[(NaiveDate, f64)] {
        let end = self.observations.partition_point(|&(d, _)| d <= until);
        &self.observations[..end]
    }
}

/// Embed, build Rips persistence and take the landscape norm of every
/// window of `series`. Windows are processed in parallel.
pub fn norm_series(
    series: &PriceSeries,
    params: &EmbeddingParams,
    threshold: ThresholdPolicy,
    landscape: &LandscapeConfig,
) -> Result<NormSeries> {
    let clouds = window_clouds(series, params)?;
    let observations = clouds
        .par_iter()
        .map(|cloud| {
            let diagram = cloud_diagram(cloud, threshold)?;
            Ok((cloud.window_end_date, diagram_norm(&diagram, landscape)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NormSeries {
        symbol: series.symbol().to_string(),
        observations,
    })
}

pub fn diff_series(norms: &NormSeries) -> Result<DiffSeries> {
    if norms.observations.len() < 2 {
        return Err(Error::insufficient(
            "norm differences",
            2,
            norms.observations.len(),
        ));
    }
    let observations = norms
        .observations
        .windows(2)
        .map(|w| (w[1].0, w[1].1 - w[0].1))
        .collect();
    Ok(DiffSeries {
        symbol: norms.symbol.clone(),
        observations,
    })
}

fn write_series<'a>(
    path: &Path,
    header: [&str; 3],
    rows: impl Iterator<Item = (&'a str, &'a [(NaiveDate, f64)])>,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record(header).map_err(|e| Error::csv(path, e))?;
    for (symbol, obs) in rows {
        for (date, value) in obs {
            w.write_record([symbol, &date.to_string(), &value.to_string()])
                .map_err(|e| Error::csv(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_norm_csv(path: impl AsRef<Path>, series: &[NormSeries]) -> Result<()> {
    write_series(
        path.as_ref(),
        NORM_CSV_HEADER,
        series
            .iter()
            .map(|s| (s.symbol.as_str(), s.observations.as_slice())),
    )
}

pub fn write_diff_csv(path: impl AsRef<Path>, series: &[DiffSeries]) -> Result<()> {
    write_series(
        path.as_ref(),
        DIFF_CSV_HEADER,
        series
            .iter()
            .map(|s| (s.symbol.as_str(), s.observations.as_slice())),
    )
}

/// Read a `symbol,date,value` file written by [`write_norm_csv`] or
/// [`write_diff_csv`], grouped by symbol.
pub fn read_series_csv(path: impl AsRef<Path>) -> Result<BTreeMap<String, Vec<(NaiveDate, f64)>>> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let mut out: BTreeMap<String, Vec<(NaiveDate, f64)>> = BTreeMap::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::csv(path, e))?;
        let bad = || Error::IngestRow {
            path: path.to_path_buf(),
            row: i + 2,
            message: "malformed series row".into(),
        };
        let symbol = record.get(0).ok_or_else(bad)?;
        let date = record
            .get(1)
            .and_then(|d| d.parse::<NaiveDate>().ok())
            .ok_or_else(bad)?;
        let value = record
            .get(2)
            .and_then(|v| v.parse::<f64>().ok())
            .ok_or_else(bad)?;
        out.entry(symbol.to_string()).or_default().push((date, value));
    }
    Ok(out)
}
