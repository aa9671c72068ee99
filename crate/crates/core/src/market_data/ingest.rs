use std::collections::BTreeMap;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{MarketUniverse, Observation, PriceSeries};
use crate::error::{Error, Result};

/// Header names of the three required input columns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CsvSchema {
    pub date: String,
    pub symbol: String,
    pub close: String,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            date: "date".into(),
            symbol: "symbol".into(),
            close: "close".into(),
        }
    }
}

/// A data row that was read but not admitted into the universe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rejection {
    /// Line number in the source file (the header is line 1).
    pub row: usize,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub universe: MarketUniverse,
    pub rejections: Vec<Rejection>,
    /// Data rows read, excluding the header.
    pub rows: usize,
}

fn column(headers: &csv::StringRecord, name: &str, path: &Path) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim().eq_ignore_ascii_case(name))
        .ok_or_else(|| Error::Ingest {
            path: path.to_path_buf(),
            message: format!("missing required column `{name}`"),
        })
}

/// Load a long-format `date,symbol,close` CSV into a [`MarketUniverse`].
///
/// Rows breaking a price-series invariant end up in
/// [`Ingested::rejections`]; an unparseable date aborts the load.
pub fn ingest_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Ingested> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(std::io::BufReader::new(file));

    let headers = reader.headers().map_err(|e| Error::csv(path, e))?.clone();
    let date_col = column(&headers, &schema.date, path)?;
    let symbol_col = column(&headers, &schema.symbol, path)?;
    let close_col = column(&headers, &schema.close, path)?;

    // symbol -> (date, close, line)
    let mut raw: BTreeMap<String, Vec<(NaiveDate, f64, usize)>> = BTreeMap::new();
    let mut rejections = Vec::new();
    let mut rows = 0usize;

    for record in reader.records() {
        let record = record.map_err(|e| Error::csv(path, e))?;
        rows += 1;
        let line = record.position().map_or(rows + 1, |p| p.line() as usize);
        let field = |i: usize| record.get(i).unwrap_or("");

        let date = NaiveDate::parse_from_str(field(date_col), "%Y-%m-%d").map_err(|_| {
            Error::IngestRow {
                path: path.to_path_buf(),
                row: line,
                message: format!("unparseable date `{}`", field(date_col)),
            }
        })?;
        let symbol = field(symbol_col);
        if symbol.is_empty() {
            rejections.push(Rejection {
                row: line,
                reason: "empty symbol".into(),
            });
            continue;
        }
        let close = match field(close_col).parse::<f64>() {
            Ok(c) => c,
            Err(_) => {
                rejections.push(Rejection {
                    row: line,
                    reason: format!("unparseable close `{}`", field(close_col)),
                });
                continue;
            }
        };
        if !close.is_finite() {
            rejections.push(Rejection {
                row: line,
                reason: "non-finite close".into(),
            });
            continue;
        }
        if close <= 0.0 {
            rejections.push(Rejection {
                row: line,
                reason: "non-positive close".into(),
            });
            continue;
        }
        raw.entry(symbol.to_string())
            .or_default()
            .push((date, close, line));
    }

    let mut series = Vec::with_capacity(raw.len());
    for (symbol, mut rows_for_symbol) in raw {
        rows_for_symbol.sort_by_key(|&(date, _, line)| (date, line));
        let mut observations: Vec<Observation> = Vec::with_capacity(rows_for_symbol.len());
        for (date, close, line) in rows_for_symbol {
            if observations.last().is_some_and(|o| o.date == date) {
                rejections.push(Rejection {
                    row: line,
                    reason: format!("duplicate date {date} for {symbol}"),
                });
                continue;
            }
            observations.push(Observation { date, close });
        }
        series.push(PriceSeries::new(symbol, observations)?);
    }
    rejections.sort_by_key(|r| r.row);

    Ok(Ingested {
        universe: MarketUniverse::new(series)?,
        rejections,
        rows,
    })
}

pub fn write_rejections(path: impl AsRef<Path>, rejections: &[Rejection]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record(["row", "reason"])
        .map_err(|e| Error::csv(path, e))?;
    for r in rejections {
        w.write_record([r.row.to_string(), r.reason.clone()])
            .map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_rejections(path: impl AsRef<Path>) -> Result<Vec<Rejection>> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::csv(path, e))?;
        let row = record
            .get(0)
            .and_then(|r| r.parse().ok())
            .ok_or_else(|| Error::Ingest {
                path: path.to_path_buf(),
                message: "malformed rejection row".into(),
            })?;
        out.push(Rejection {
            row,
            reason: record.get(1).unwrap_or_default().to_string(),
        });
    }
    Ok(out)
}

/// Write a universe in the same `date,symbol,close` layout [`ingest_csv`]
/// reads, ordered by symbol then date.
pub fn write_universe(path: impl AsRef<Path>, universe: &MarketUniverse) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record(["date", "symbol", "close"])
        .map_err(|e| Error::csv(path, e))?;
    for s in universe.iter() {
        for o in s.observations() {
            w.write_record([o.date.to_string(), s.symbol().to_string(), o.close.to_string()])
                .map_err(|e| Error::csv(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_three_rows() {
        let f = write_tmp(
            "date,symbol,close\n2018-01-01,BTC,100\n2018-01-02,BTC,101\n2018-01-03,BTC,99.5\n",
        );
        let got = ingest_csv(f.path(), &CsvSchema::default()).unwrap();
        assert_eq!(got.universe.len(), 1);
        assert_eq!(got.universe.get("BTC").unwrap().len(), 3);
        assert!(got.rejections.is_empty());
    }

    #[test]
    fn non_positive_close_is_rejected_not_dropped() {
        let f = write_tmp(
            "date,symbol,close\n2018-01-01,BTC,100\n2018-01-02,BTC,0\n2018-01-03,BTC,99.5\n",
        );
        let got = ingest_csv(f.path(), &CsvSchema::default()).unwrap();
        assert_eq!(got.universe.get("BTC").unwrap().len(), 2);
        assert_eq!(got.rejections.len(), 1);
        assert_eq!(got.rejections[0].row, 3);
        assert_eq!(got.rows, got.universe.observation_count() + got.rejections.len());
    }

    #[test]
    fn duplicates_and_garbage_are_reported() {
        let f = write_tmp(
            "date,symbol,close\n\
             2018-01-02,ETH,10\n\
             2018-01-01,ETH,9\n\
             2018-01-01,ETH,9.5\n\
             2018-01-01,,9.5\n\
             2018-01-01,XRP,abc\n\
             2018-01-01,XRP,inf\n\
             2018-01-01,XRP,-1\n",
        );
        let got = ingest_csv(f.path(), &CsvSchema::default()).unwrap();
        assert_eq!(got.universe.len(), 1);
        assert_eq!(got.universe.get("ETH").unwrap().len(), 2);
        let rows: Vec<usize> = got.rejections.iter().map(|r| r.row).collect();
        assert_eq!(rows, vec![4, 5, 6, 7, 8]);
        assert_eq!(got.rows, 7);
    }

    #[test]
    fn bad_date_names_row() {
        let f = write_tmp("date,symbol,close\n2018-01-01,BTC,1\n01/02/2018,BTC,2\n");
        let err = ingest_csv(f.path(), &CsvSchema::default()).unwrap_err();
        assert!(matches!(err, Error::IngestRow { row: 3, .. }), "{err}");
    }

    #[test]
    fn missing_column_and_file() {
        let f = write_tmp("date,ticker,close\n2018-01-01,BTC,1\n");
        let err = ingest_csv(f.path(), &CsvSchema::default()).unwrap_err();
        assert!(err.to_string().contains("`symbol`"));

        let schema = CsvSchema {
            symbol: "Ticker".into(),
            ..CsvSchema::default()
        };
        assert_eq!(ingest_csv(f.path(), &schema).unwrap().universe.len(), 1);

        assert!(matches!(
            ingest_csv("/nonexistent/prices.csv", &CsvSchema::default()),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn universe_round_trips_through_cache_layout() {
        let f = write_tmp(
            "date,symbol,close\n2018-01-02,B,2\n2018-01-01,A,1.25\n2018-01-02,A,1e-7\n",
        );
        let got = ingest_csv(f.path(), &CsvSchema::default()).unwrap();
        let out = tempfile::NamedTempFile::new().unwrap();
        write_universe(out.path(), &got.universe).unwrap();
        let again = ingest_csv(out.path(), &CsvSchema::default()).unwrap();
        assert_eq!(again.universe, got.universe);
    }
}
