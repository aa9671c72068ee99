//! Recency/Frequency/Monetary features of the norm-difference series,
//! cross-sectional min-max scores, and the allocation built from them.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::landscape::DiffSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecencyMode {
    /// Sum the normalized recency as is.
    Literal,
    /// Use `1 - R^z`, so a recent positive difference raises the score.
    #[default]
    Inverted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrequencyVariant {
    /// Number of positive differences in the lookback.
    #[default]
    Count,
    /// Sum of the non-negative differences in the lookback.
    Magnitude,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AllocationMode {
    /// `score / #{score >= 0}`; the unallocated remainder is cash.
    PaperLiteral,
    /// `score / Σ score`.
    #[default]
    Normalized,
}

macro_rules! str_enum {
    ($ty:ident { $($variant:ident => $name:literal),+ $(,)? }) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $($ty::$variant => $name),+ })
            }
        }

        impl FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($name => Ok($ty::$variant),)+
                    other => Err(Error::Parameter(format!(
                        concat!("unknown ", stringify!($ty), " `{}`"), other
                    ))),
                }
            }
        }
    };
}

str_enum!(RecencyMode { Literal => "literal", Inverted => "inverted" });
str_enum!(FrequencyVariant { Count => "count", Magnitude => "magnitude" });
str_enum!(AllocationMode { PaperLiteral => "paper_literal", Normalized => "normalized" });

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RfmConfig {
    pub lookback: usize,
    pub recency: RecencyMode,
    pub frequency: FrequencyVariant,
}

impl Default for RfmConfig {
    fn default() -> Self {
        Self {
            lookback: 30,
            recency: RecencyMode::Inverted,
            frequency: FrequencyVariant::Count,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RfmFeatures {
    pub symbol: String,
    pub as_of: NaiveDate,
    /// Days since the last positive difference, `lookback + 1` if there was
    /// none in the lookback.
    pub recency: u32,
    pub frequency: f64,
    pub monetary: f64,
}

/// RFM features of every eligible currency on one day.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub as_of: NaiveDate,
    pub rows: Vec<RfmFeatures>,
}

/// Features plus their normalized components and the composite score.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredRow {
    pub features: RfmFeatures,
    /// Recency component as it enters the score (inverted when requested).
    pub r_z: f64,
    pub f_z: f64,
    pub m_z: f64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AllocationVector {
    pub as_of: NaiveDate,
    pub weights: Vec<(String, f64)>,
    pub mode: AllocationMode,
}

impl AllocationVector {
    pub fn invested(&self) -> f64 {
        self.weights.iter().map(|(_, w)| w).sum()
    }

    pub fn weight(&self, symbol: &str) -> f64 {
        self.weights
            .iter()
            .find(|(s, _)| s == symbol)
            .map_or(0.0, |(_, w)| *w)
    }
}

fn lookback_window(diffs: &DiffSeries, as_of: NaiveDate, lookback: usize) -> &[(NaiveDate, f64)] {
    let upto = diffs.until(as_of);
    let first_day = as_of - chrono::Days::new(lookback.saturating_sub(1) as u64);
    let start = upto.partition_point(|&(d, _)| d < first_day);
    &upto[start..]
}

/// Features over the `lookback` days ending at `as_of`. `None` when no
/// difference falls inside that window.
pub fn rfm_features(
    diffs: &DiffSeries,
    as_of: NaiveDate,
    config: &RfmConfig,
) -> Option<RfmFeatures> {
    let window = lookback_window(diffs, as_of, config.lookback);
    if window.is_empty() {
        return None;
    }
    let recency = window
        .iter()
        .rev()
        .find(|&&(_, d)| d > 0.0)
        .map_or(config.lookback as u32 + 1, |&(date, _)| {
            (as_of - date).num_days() as u32
        });
    let frequency = match config.frequency {
        FrequencyVariant::Count => window.iter().filter(|&&(_, d)| d > 0.0).count() as f64,
        FrequencyVariant::Magnitude => window
            .iter()
            .filter(|&&(_, d)| d >= 0.0)
            .map(|&(_, d)| d.abs())
            .sum(),
    };
    Some(RfmFeatures {
        symbol: diffs.symbol.clone(),
        as_of,
        recency,
        frequency,
        monetary: window.iter().map(|&(_, d)| d).sum(),
    })
}

/// Features of every currency whose differences cover the full lookback
/// ending exactly at `as_of`.
pub fn feature_matrix<'a>(
    diffs: impl IntoIterator<Item = &'a DiffSeries>,
    as_of: NaiveDate,
    config: &RfmConfig,
) -> FeatureMatrix {
    let rows = diffs
        .into_iter()
        .filter(|d| {
            let w = lookback_window(d, as_of, config.lookback);
            w.len() == config.lookback && w.last().is_some_and(|&(date, _)| date == as_of)
        })
        .filter_map(|d| rfm_features(d, as_of, config))
        .collect();
    FeatureMatrix { as_of, rows }
}

/// `(x - min) / (max - min)`; all zeros when every value is the same.
pub fn normalize_minmax(values: &[f64]) -> Vec<f64> {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max <= min {
        return vec![0.0; values.len()];
    }
    let span = max - min;
    values
        .iter()
        .map(|&x| ((x - min) / span).clamp(0.0, 1.0))
        .collect()
}

pub fn composite_score(matrix: &FeatureMatrix, recency: RecencyMode) -> Vec<ScoredRow> {
    let column = |f: fn(&RfmFeatures) -> f64| -> Vec<f64> {
        normalize_minmax(&matrix.rows.iter().map(f).collect::<Vec<_>>())
    };
    let r = column(|row| f64::from(row.recency));
    let f = column(|row| row.frequency);
    let m = column(|row| row.monetary);
    matrix
        .rows
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let r_z = match recency {
                RecencyMode::Literal => r[i],
                RecencyMode::Inverted if matrix.rows.len() > 1 && r.iter().any(|&x| x > 0.0) => {
                    1.0 - r[i]
                }
                // a degenerate column carries no information either way
                RecencyMode::Inverted => 0.0,
            };
            ScoredRow {
                features: row.clone(),
                r_z,
                f_z: f[i],
                m_z: m[i],
                score: r_z + f[i] + m[i],
            }
        })
        .collect()
}

pub fn allocate(scores: &[(String, f64)], mode: AllocationMode, as_of: NaiveDate) -> AllocationVector {
    let eligible = scores.iter().filter(|(_, s)| *s >= 0.0);
    let divisor = match mode {
        AllocationMode::PaperLiteral => eligible.count() as f64,
        AllocationMode::Normalized => eligible.map(|(_, s)| s).sum(),
    };
    let weights = scores
        .iter()
        .map(|(sym, s)| {
            let w = if divisor > 0.0 && *s > 0.0 { s / divisor } else { 0.0 };
            (sym.clone(), w)
        })
        .collect();
    AllocationVector {
        as_of,
        weights,
        mode,
    }
}

/// Everything the TDA strategy computes for one rebalance date.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredDay {
    pub rows: Vec<ScoredRow>,
    pub allocation: AllocationVector,
}

pub fn score_day<'a>(
    diffs: impl IntoIterator<Item = &'a DiffSeries>,
    as_of: NaiveDate,
    rfm: &RfmConfig,
    mode: AllocationMode,
) -> ScoredDay {
    let matrix = feature_matrix(diffs, as_of, rfm);
    let rows = composite_score(&matrix, rfm.recency);
    let scores: Vec<(String, f64)> = rows
        .iter()
        .map(|r| (r.features.symbol.clone(), r.score))
        .collect();
    ScoredDay {
        allocation: allocate(&scores, mode, as_of),
        rows,
    }
}

pub const SCORES_CSV_HEADER: &str = "date,symbol,recency,frequency,monetary,r_z,f_z,m_z,score";
pub const WEIGHTS_CSV_HEADER: &str = "date,symbol,weight,mode";

pub fn write_score_rows<W: Write>(rows: &[ScoredRow], out: &mut W) -> std::io::Result<()> {
    for r in rows {
        let f = &r.features;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            f.as_of, f.symbol, f.recency, f.frequency, f.monetary, r.r_z, r.f_z, r.m_z, r.score
        )?;
    }
    Ok(())
}

pub fn write_weight_rows<W: Write>(alloc: &AllocationVector, out: &mut W) -> std::io::Result<()> {
    for (symbol, w) in &alloc.weights {
        writeln!(out, "{},{symbol},{w},{}", alloc.as_of, alloc.mode)?;
    }
    Ok(())
}

/// Diff series keyed by symbol, as produced by the norms stage.
pub type DiffTable = BTreeMap<String, DiffSeries>;
