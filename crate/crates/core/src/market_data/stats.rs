use chrono::NaiveDate;

use super::{PriceSeries, ReturnSeries};
use crate::error::{Error, Result};

/// Crypto markets trade every calendar day.
pub const ANNUALIZATION_DAYS: f64 = 365.0;

pub fn log_returns(series: &PriceSeries) -> Result<ReturnSeries> {
    let obs = series.observations();
    if obs.len() < 2 {
        return Err(Error::insufficient("log returns", 2, obs.len()));
    }
    let observations = obs
        .windows(2)
        .map(|w| (w[1].date, w[1].close.ln() - w[0].close.ln()))
        .collect();
    Ok(ReturnSeries {
        symbol: series.symbol().to_string(),
        observations,
    })
}

/// Mean and sample standard deviation. Windows of identical values have
/// exactly zero deviation.
fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.iter().all(|&v| v == values[0]) {
        return (values[0], 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

fn check_window(window: usize) -> Result<()> {
    if window < 2 {
        return Err(Error::Parameter(format!(
            "rolling window must be at least 2, got {window}"
        )));
    }
    Ok(())
}

fn rolling<T>(
    returns: &ReturnSeries,
    window: usize,
    f: impl Fn(f64, f64) -> T,
) -> Result<Vec<(NaiveDate, T)>> {
    check_window(window)?;
    let values: Vec<f64> = returns.values().collect();
    if values.len() < window {
        return Ok(Vec::new());
    }
    Ok(values
        .windows(window)
        .zip(&returns.observations[window - 1..])
        .map(|(w, &(date, _))| {
            let (mean, std) = mean_std(w);
            (date, f(mean, std))
        })
        .collect())
}

/// Annualized sample standard deviation of log returns over each full window,
/// dated by the window's last return.
pub fn rolling_volatility(returns: &ReturnSeries, window: usize) -> Result<Vec<(NaiveDate, f64)>> {
    rolling(returns, window, |_, std| std * ANNUALIZATION_DAYS.sqrt())
}

/// Annualized Sharpe ratio (zero risk-free rate) over each full window.
/// Windows with zero deviation yield `None`.
pub fn rolling_sharpe(
    returns: &ReturnSeries,
    window: usize,
) -> Result<Vec<(NaiveDate, Option<f64>)>> {
    rolling(returns, window, |mean, std| {
        (std > 0.0).then(|| mean / std * ANNUALIZATION_DAYS.sqrt())
    })
}
