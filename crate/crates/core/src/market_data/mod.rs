//! Daily price series, the universe that holds them, and the descriptive
//! statistics (log returns, rolling volatility, rolling Sharpe) computed on
//! top of them.

mod fetch;
mod ingest;
mod stats;

use std::collections::BTreeMap;

use chrono::NaiveDate;

use crate::error::{Error, Result};

pub use fetch::{cache_path_for, fetch_dataset};
pub use ingest::{
    ingest_csv, read_rejections, write_rejections, write_universe, CsvSchema, Ingested, Rejection,
};
pub use stats::{log_returns, rolling_sharpe, rolling_volatility, ANNUALIZATION_DAYS};

/// One day's closing price in USD.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub date: NaiveDate,
    pub close: f64,
}

/// A single currency's dated daily closes.
///
/// Dates are strictly increasing and every close is finite and strictly
/// positive; [`PriceSeries::new`] refuses anything else.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    symbol: String,
    observations: Vec<Observation>,
}

impl PriceSeries {
    pub fn new(symbol: impl Into<String>, observations: Vec<Observation>) -> Result<Self> {
        let symbol = symbol.into();
        if symbol.trim().is_empty() {
            return Err(Error::Parameter("empty symbol".into()));
        }
        for obs in &observations {
            if !(obs.close.is_finite() && obs.close > 0.0) {
                return Err(Error::Parameter(format!(
                    "{symbol}: close {} on {} is not a positive finite price",
                    obs.close, obs.date
                )));
            }
        }
        if let Some(w) = observations.windows(2).find(|w| w[0].date >= w[1].date) {
            return Err(Error::Parameter(format!(
                "{symbol}: dates not strictly increasing at {}",
                w[1].date
            )));
        }
        Ok(Self {
            symbol,
            observations,
        })
    }

    /// Convenience constructor for consecutive daily closes starting at `start`.
    pub fn daily(symbol: impl Into<String>, start: NaiveDate, closes: &[f64]) -> Result<Self> {
        let observations = closes
            .iter()
            .zip(start.iter_days())
            .map(|(&close, date)| Observation { date, close })
            .collect();
        Self::new(symbol, observations)
    }

    pub fn symbol(&self) -> &str {
        &self.symbol
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn first_date(&self) -> Option<NaiveDate> {
        self.observations.first().map(|o| o.date)
    }

    pub fn last_date(&self) -> Option<NaiveDate> {
        self.observations.last().map(|o| o.date)
    }

    pub fn closes(&self) -> impl Iterator<Item = f64> + '_ {
        self.observations.iter().map(|o| o.close)
    }

    pub fn close_on(&self, date: NaiveDate) -> Option<f64> {
        self.observations
            .binary_search_by_key(&date, |o| o.date)
            .ok()
            .map(|i| self.observations[i].close)
    }

    /// Observations dated on or before `until`.
    pub fn truncated(&self, until: NaiveDate) -> PriceSeries {
        let end = self.observations.partition_point(|o| o.date <= until);
        PriceSeries {
            symbol: self.symbol.clone(),
            observations: self.observations[..end].to_vec(),
        }
    }

    /// Fill gaps of at most `max_fill` missing days with the previous close,
    /// split on longer gaps and keep the longest contiguous run (the latest
    /// one on ties). The result has one observation per calendar day.
    pub fn regularized(&self, max_fill: u32) -> PriceSeries {
        let mut best: Vec<Observation> = Vec::new();
        let mut current: Vec<Observation> = Vec::new();
        for obs in &self.observations {
            if let Some(prev) = current.last().copied() {
                let missing = (obs.date - prev.date).num_days() - 1;
                if missing > i64::from(max_fill) {
                    if current.len() >= best.len() {
                        best = std::mem::take(&mut current);
                    } else {
                        current.clear();
                    }
                } else {
                    for date in prev.date.iter_days().skip(1).take(missing as usize) {
                        current.push(Observation {
                            date,
                            close: prev.close,
                        });
                    }
                }
            }
            current.push(*obs);
        }
        if current.len() >= best.len() {
            best = current;
        }
        PriceSeries {
            symbol: self.symbol.clone(),
            observations: best,
        }
    }
}

/// Per-day log returns of one currency.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    pub symbol: String,
    pub observations: Vec<(NaiveDate, f64)>,
}

impl ReturnSeries {
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.observations.iter().map(|&(_, r)| r)
    }
}

/// All currencies of the dataset, keyed by symbol.
///
/// Immutable once built; share it by reference across workers.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MarketUniverse {
    series: BTreeMap<String, PriceSeries>,
}

impl MarketUniverse {
    pub fn new(series: impl IntoIterator<Item = PriceSeries>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for s in series {
            let symbol = s.symbol.clone();
            if map.insert(symbol.clone(), s).is_some() {
                return Err(Error::Parameter(format!("duplicate symbol {symbol}")));
            }
        }
        Ok(Self { series: map })
    }

    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }

    pub fn get(&self, symbol: &str) -> Option<&PriceSeries> {
        self.series.get(symbol)
    }

    /// Series in symbol order.
    pub fn iter(&self) -> impl Iterator<Item = &PriceSeries> {
        self.series.values()
    }

    pub fn symbols(&self) -> impl Iterator<Item = &str> {
        self.series.keys().map(String::as_str)
    }

    /// First and last covered day across all member series.
    pub fn date_range(&self) -> Option<(NaiveDate, NaiveDate)> {
        let first = self.series.values().filter_map(|s| s.first_date()).min()?;
        let last = self.series.values().filter_map(|s| s.last_date()).max()?;
        Some((first, last))
    }

    pub fn observation_count(&self) -> usize {
        self.series.values().map(PriceSeries::len).sum()
    }

    /// Symbols with a close on `date`, in symbol order.
    pub fn priced_on(&self, date: NaiveDate) -> impl Iterator<Item = (&str, f64)> {
        self.series
            .iter()
            .filter_map(move |(sym, s)| s.close_on(date).map(|c| (sym.as_str(), c)))
    }

    pub fn truncated(&self, until: NaiveDate) -> MarketUniverse {
        let series = self
            .series
            .iter()
            .map(|(k, s)| (k.clone(), s.truncated(until)))
            .filter(|(_, s)| !s.is_empty())
            .collect();
        MarketUniverse { series }
    }

    pub fn regularized(&self, max_fill: u32) -> MarketUniverse {
        let series = self
            .series
            .iter()
            .map(|(k, s)| (k.clone(), s.regularized(max_fill)))
            .collect();
        MarketUniverse { series }
    }

    /// The `n` currencies with the most observations (ties broken by symbol).
    pub fn largest_history(&self, n: usize) -> MarketUniverse {
        let mut ranked: Vec<&PriceSeries> = self.series.values().collect();
        ranked.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.symbol.cmp(&b.symbol)));
        let series = ranked
            .into_iter()
            .take(n)
            .map(|s| (s.symbol.clone(), s.clone()))
            .collect();
        MarketUniverse { series }
    }

    /// Number of priced currencies per day over the covered range.
    pub fn coverage(&self) -> Vec<(NaiveDate, usize)> {
        let Some((first, last)) = self.date_range() else {
            return Vec::new();
        };
        let days = (last - first).num_days() as usize + 1;
        let mut counts = vec![0usize; days];
        for s in self.series.values() {
            for o in s.observations() {
                counts[(o.date - first).num_days() as usize] += 1;
            }
        }
        first.iter_days().zip(counts).collect()
    }
}
