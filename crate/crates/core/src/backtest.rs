//! Daily portfolio accounting for the TDA strategy and the 1/N benchmark.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market_data::MarketUniverse;
use crate::scoring::{score_day, AllocationMode, AllocationVector, DiffTable, RfmConfig, ScoredDay};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RebalanceFrequency {
    #[default]
    Daily,
    Weekly,
    Monthly,
}

impl fmt::Display for RebalanceFrequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RebalanceFrequency::Daily => "daily",
            RebalanceFrequency::Weekly => "weekly",
            RebalanceFrequency::Monthly => "monthly",
        })
    }
}

impl FromStr for RebalanceFrequency {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "daily" => Ok(Self::Daily),
            "weekly" => Ok(Self::Weekly),
            "monthly" => Ok(Self::Monthly),
            other => Err(Error::Parameter(format!("unknown schedule `{other}`"))),
        }
    }
}

/// Days on which the strategy is asked for a fresh allocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RebalanceSchedule {
    dates: Vec<NaiveDate>,
    pub frequency: RebalanceFrequency,
}

impl RebalanceSchedule {
    /// Rebalance dates in `[start, end)`: every day, every seventh day from
    /// `start`, or `start` and then the first day of each month.
    pub fn new(start: NaiveDate, end: NaiveDate, frequency: RebalanceFrequency) -> Self {
        let dates = start
            .iter_days()
            .take_while(|d| *d < end)
            .filter(|d| match frequency {
                RebalanceFrequency::Daily => true,
                RebalanceFrequency::Weekly => (*d - start).num_days() % 7 == 0,
                RebalanceFrequency::Monthly => *d == start || d.day() == 1,
            })
            .collect();
        Self { dates, frequency }
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.dates.binary_search(&date).is_ok()
    }
}

/// Read access to the universe as it was known at the close of `as_of`.
#[derive(Debug, Clone, Copy)]
pub struct MarketView<'a> {
    universe: &'a MarketUniverse,
    as_of: NaiveDate,
}

impl<'a> MarketView<'a> {
    pub fn new(universe: &'a MarketUniverse, as_of: NaiveDate) -> Self {
        Self { universe, as_of }
    }

    pub fn as_of(&self) -> NaiveDate {
        self.as_of
    }

    /// Close of `symbol` on `date`; asking about the future is an error.
    pub fn close(&self, symbol: &str, date: NaiveDate) -> Result<Option<f64>> {
        if date > self.as_of {
            return Err(Error::LookAhead {
                as_of: self.as_of,
                requested: date,
            });
        }
        Ok(self.universe.get(symbol).and_then(|s| s.close_on(date)))
    }

    /// Symbols with a close on `as_of`.
    pub fn priced(&self) -> Vec<&'a str> {
        self.universe.priced_on(self.as_of).map(|(s, _)| s).collect()
    }
}

/// Produces an allocation from what is known at the close of a day.
pub trait Strategy {
    fn name(&self) -> &str;
    fn allocate(&mut self, view: &MarketView<'_>) -> Result<AllocationVector>;
}

/// `1/N` over every currency priced on `date`.
pub fn naive_allocate(universe: &MarketUniverse, date: NaiveDate) -> Result<AllocationVector> {
    let priced: Vec<&str> = universe.priced_on(date).map(|(s, _)| s).collect();
    if priced.is_empty() {
        return Err(Error::EmptyUniverse(date));
    }
    let w = 1.0 / priced.len() as f64;
    Ok(AllocationVector {
        as_of: date,
        weights: priced.into_iter().map(|s| (s.to_string(), w)).collect(),
        mode: AllocationMode::Normalized,
    })
}

#[derive(Debug, Default)]
pub struct NaiveStrategy;

impl Strategy for NaiveStrategy {
    fn name(&self) -> &str {
        "naive"
    }

    fn allocate(&mut self, view: &MarketView<'_>) -> Result<AllocationVector> {
        let priced = view.priced();
        if priced.is_empty() {
            return Err(Error::EmptyUniverse(view.as_of()));
        }
        let w = 1.0 / priced.len() as f64;
        Ok(AllocationVector {
            as_of: view.as_of(),
            weights: priced.into_iter().map(|s| (s.to_string(), w)).collect(),
            mode: AllocationMode::Normalized,
        })
    }
}

/// RFM scores of the norm-difference series turned into weights. Every
/// scored day is kept for reporting.
#[derive(Debug)]
pub struct TdaStrategy {
    diffs: DiffTable,
    rfm: RfmConfig,
    mode: AllocationMode,
    pub history: Vec<ScoredDay>,
}

impl TdaStrategy {
    pub fn new(diffs: DiffTable, rfm: RfmConfig, mode: AllocationMode) -> Self {
        Self {
            diffs,
            rfm,
            mode,
            history: Vec::new(),
        }
    }
}

impl Strategy for TdaStrategy {
    fn name(&self) -> &str {
        "tda"
    }

    fn allocate(&mut self, view: &MarketView<'_>) -> Result<AllocationVector> {
        let as_of = view.as_of();
        let mut day = score_day(self.diffs.values(), as_of, &self.rfm, self.mode);
        if day.rows.is_empty() {
            log::warn!("{as_of}: no eligible currency, holding cash");
        }
        for (symbol, w) in &mut day.allocation.weights {
            if view.close(symbol, as_of)?.is_none() {
                *w = 0.0;
            }
        }
        let allocation = day.allocation.clone();
        self.history.push(day);
        Ok(allocation)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BacktestResult {
    pub strategy: String,
    /// Portfolio log return per day; the first day of the range is the
    /// formation day and carries 0.
    pub daily: Vec<(NaiveDate, f64)>,
    pub cumulative: Vec<(NaiveDate, f64)>,
    /// Uninvested fraction at each close, after any rebalance.
    pub cash_weight: Vec<(NaiveDate, f64)>,
}

impl BacktestResult {
    pub fn total_log_return(&self) -> f64 {
        self.cumulative.last().map_or(0.0, |&(_, c)| c)
    }
}

/// Proportional cost charged on one-way turnover at each rebalance.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CostModel {
    pub rate: f64,
}

pub fn run_backtest(
    universe: &MarketUniverse,
    strategy: &mut dyn Strategy,
    schedule: &RebalanceSchedule,
    range: (NaiveDate, NaiveDate),
    costs: CostModel,
) -> Result<BacktestResult> {
    let (start, end) = range;
    let (first, last) = universe
        .date_range()
        .ok_or_else(|| Error::RangeMismatch("empty universe".into()))?;
    if start > end || start < first || end > last {
        return Err(Error::RangeMismatch(format!(
            "backtest range {start}..{end} outside data range {first}..{last}"
        )));
    }

    let mut holdings: BTreeMap<String, f64> = BTreeMap::new();
    let mut cash = 1.0;
    let mut daily = Vec::new();
    let mut cumulative = Vec::new();
    let mut cash_weight = Vec::new();
    let mut total = 0.0;

    for today in start.iter_days().take_while(|d| *d <= end) {
        let mut log_return = 0.0;
        if today > start {
            let yesterday = today.pred_opt().expect("date after start has a predecessor");
            let mut simple = 0.0;
            let mut grown: Vec<(String, f64)> = Vec::with_capacity(holdings.len());
            for (symbol, &w) in &holdings {
                let series = universe.get(symbol);
                let prev = series.and_then(|s| s.close_on(yesterday));
                let now = series.and_then(|s| s.close_on(today));
                match (prev, now) {
                    (Some(p), Some(n)) => {
                        let r = n / p - 1.0;
                        simple += w * r;
                        grown.push((symbol.clone(), w * (1.0 + r)));
                    }
                    // no price today: sold at the last close
                    _ => cash += w,
                }
            }
            let growth = 1.0 + simple;
            holdings = grown.into_iter().map(|(s, v)| (s, v / growth)).collect();
            cash /= growth;
            log_return = growth.ln();
        }

        if schedule.contains(today) {
            let view = MarketView::new(universe, today);
            let allocation = match strategy.allocate(&view) {
                Ok(a) => a,
                Err(Error::EmptyUniverse(_)) => {
                    log::warn!("{today}: {} has nothing to hold, moving to cash", strategy.name());
                    AllocationVector {
                        as_of: today,
                        weights: Vec::new(),
                        mode: AllocationMode::Normalized,
                    }
                }
                Err(e) => return Err(e),
            };
            let mut target: BTreeMap<String, f64> = BTreeMap::new();
            for (symbol, w) in allocation.weights {
                if !(w.is_finite() && w >= 0.0) {
                    return Err(Error::Parameter(format!(
                        "{}: invalid weight {w} for {symbol}",
                        strategy.name()
                    )));
                }
                if w > 0.0 && view.close(&symbol, today)?.is_some() {
                    *target.entry(symbol).or_default() += w;
                }
            }
            let invested: f64 = target.values().sum();
            if invested > 1.0 {
                // no leverage: scale down to fully invested
                target.values_mut().for_each(|w| *w /= invested);
            }
            let turnover: f64 = target
                .keys()
                .chain(holdings.keys())
                .collect::<std::collections::BTreeSet<_>>()
                .into_iter()
                .map(|s| {
                    (target.get(s).copied().unwrap_or(0.0) - holdings.get(s).copied().unwrap_or(0.0))
                        .abs()
                })
                .sum();
            holdings = target;
            cash = (1.0 - holdings.values().sum::<f64>()).max(0.0);
            if costs.rate > 0.0 {
                log_return += (1.0 - costs.rate * turnover).ln();
            }
        }

        total += log_return;
        daily.push((today, log_return));
        cumulative.push((today, total));
        cash_weight.push((today, cash.clamp(0.0, 1.0)));
    }

    Ok(BacktestResult {
        strategy: strategy.name().to_string(),
        daily,
        cumulative,
        cash_weight,
    })
}

/// Percent monthly log return of both strategies, one row per month.
#[derive(Debug, Clone, PartialEq)]
pub struct MonthlyTable {
    pub rows: Vec<(String, f64, f64)>,
}

impl MonthlyTable {
    /// Months where the TDA portfolio did at least as well as the benchmark.
    pub fn months_won(&self) -> usize {
        self.rows.iter().filter(|(_, t, n)| t >= n).count()
    }
}

fn monthly_sums(result: &BacktestResult) -> Vec<(String, f64)> {
    let mut out: Vec<(String, f64)> = Vec::new();
    for &(date, r) in &result.daily {
        let month = format!("{:04}-{:02}", date.year(), date.month());
        match out.last_mut() {
            Some((m, sum)) if *m == month => *sum += r,
            _ => out.push((month, r)),
        }
    }
    out
}

pub fn monthly_table(tda: &BacktestResult, naive: &BacktestResult) -> Result<MonthlyTable> {
    let dates = |r: &BacktestResult| r.daily.iter().map(|&(d, _)| d).collect::<Vec<_>>();
    if dates(tda) != dates(naive) {
        return Err(Error::RangeMismatch(
            "strategies cover different date ranges".into(),
        ));
    }
    let rows = monthly_sums(tda)
        .into_iter()
        .zip(monthly_sums(naive))
        .map(|((month, t), (_, n))| (month, 100.0 * t, 100.0 * n))
        .collect();
    Ok(MonthlyTable { rows })
}

pub const RETURNS_CSV_HEADER: &str =
    "date,strategy,daily_log_return,cumulative_log_return,cash_weight";
pub const MONTHLY_CSV_HEADER: &str = "month,tda,naive";

pub fn write_returns<W: Write>(results: &[&BacktestResult], out: &mut W) -> std::io::Result<()> {
    writeln!(out, "{RETURNS_CSV_HEADER}")?;
    for r in results {
        for ((&(date, d), &(_, c)), &(_, cash)) in
            r.daily.iter().zip(&r.cumulative).zip(&r.cash_weight)
        {
            writeln!(out, "{date},{},{d},{c},{cash}", r.strategy)?;
        }
    }
    Ok(())
}

pub fn write_monthly<W: Write>(table: &MonthlyTable, out: &mut W) -> std::io::Result<()> {
    writeln!(out, "{MONTHLY_CSV_HEADER}")?;
    for (month, t, n) in &table.rows {
        writeln!(out, "{month},{t},{n}")?;
    }
    Ok(())
}
