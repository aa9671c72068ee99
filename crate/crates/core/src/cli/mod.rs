//! The five pipeline stages behind the `tda-portfolio` binary. Each stage
//! reads the previous stage's files from the output directory, writes its own
//! and records a [`RunManifest`].

mod manifest;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use rayon::prelude::*;

pub use manifest::{sha256_file, OutputFile, RunManifest, StageTiming};

use crate::backtest::{
    monthly_table, run_backtest, write_monthly, write_returns, CostModel, MarketView,
    NaiveStrategy, RebalanceSchedule, Strategy, TdaStrategy,
};
use crate::config::PipelineConfig;
use crate::embedding::window_clouds;
use crate::error::{Error, Result};
use crate::landscape::{
    diff_series, norm_series, read_series_csv, write_diff_csv, write_norm_csv, DiffSeries,
    NormSeries,
};
use crate::market_data::{
    fetch_dataset, ingest_csv, log_returns, rolling_sharpe, rolling_volatility, write_rejections,
    write_universe, CsvSchema, MarketUniverse,
};
use crate::persistence::{cloud_diagram, DIAGRAM_CSV_HEADER};
use crate::scoring::{
    write_score_rows, write_weight_rows, AllocationMode, DiffTable, RecencyMode,
    SCORES_CSV_HEADER, WEIGHTS_CSV_HEADER,
};

pub const UNIVERSE_FILE: &str = "universe.csv";
pub const REJECTIONS_FILE: &str = "rejections.csv";
pub const NORMS_FILE: &str = "norms.csv";
pub const DIFFS_FILE: &str = "diffs.csv";
pub const SKIPPED_FILE: &str = "skipped.csv";
pub const DIAGRAMS_FILE: &str = "diagrams.csv";
pub const SCORES_FILE: &str = "scores.csv";
pub const WEIGHTS_FILE: &str = "weights.csv";
pub const RETURNS_FILE: &str = "returns.csv";
pub const MONTHLY_FILE: &str = "monthly.csv";
pub const SUMMARY_FILE: &str = "summary.txt";

/// Command-line values that take precedence over the configuration file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub subset: Option<usize>,
    pub mode: Option<AllocationMode>,
    pub recency: Option<RecencyMode>,
    pub from: Option<NaiveDate>,
    pub to: Option<NaiveDate>,
    pub out: Option<PathBuf>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut PipelineConfig) {
        if let Some(n) = self.subset {
            cfg.run.subset = Some(n);
        }
        if let Some(m) = self.mode {
            cfg.allocation.mode = m;
        }
        if let Some(r) = self.recency {
            cfg.rfm.recency = r;
        }
        if let Some(d) = self.from {
            cfg.backtest.from = d;
        }
        if let Some(d) = self.to {
            cfg.backtest.to = d;
        }
        if let Some(out) = &self.out {
            cfg.run.out = out.clone();
        }
    }
}

/// Process exit code for an error: 2 configuration, 3 data, 4 internal.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Parameter(_) => 2,
        Error::InsufficientData { .. }
        | Error::Io { .. }
        | Error::Ingest { .. }
        | Error::IngestRow { .. }
        | Error::Fetch { .. }
        | Error::EmptyUniverse(_)
        | Error::RangeMismatch(_)
        | Error::Csv { .. } => 3,
        Error::LookAhead { .. } | Error::OracleTooLarge { .. } => 4,
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn finish(path: &Path, mut w: BufWriter<File>) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

fn out_dir(cfg: &PipelineConfig) -> Result<&Path> {
    let dir = cfg.run.out.as_path();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    Ok(dir)
}

fn require(path: &Path, producer: &str) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::Ingest {
            path: path.to_path_buf(),
            message: format!("not found; run `tda-portfolio {producer}` with the same output directory first"),
        })
    }
}

/// The ingested universe after gap filling and the optional subset, plus the
/// checksum of the cache it came from.
pub fn load_universe(cfg: &PipelineConfig) -> Result<(MarketUniverse, String)> {
    let path = cfg.run.out.join(UNIVERSE_FILE);
    require(&path, "ingest")?;
    let ingested = ingest_csv(&path, &CsvSchema::default())?;
    let mut universe = ingested.universe.regularized(cfg.data.max_fill_days);
    if let Some(n) = cfg.run.subset {
        universe = universe.largest_history(n);
    }
    Ok((universe, sha256_file(&path)?))
}

pub fn load_diffs(cfg: &PipelineConfig, universe: &MarketUniverse) -> Result<DiffTable> {
    let path = cfg.run.out.join(DIFFS_FILE);
    require(&path, "norms")?;
    let table: DiffTable = read_series_csv(&path)?
        .into_iter()
        .map(|(symbol, observations)| {
            let s = DiffSeries {
                symbol: symbol.clone(),
                observations,
            };
            (symbol, s)
        })
        .collect();
    if let Some(stray) = table.keys().find(|s| universe.get(s).is_none()) {
        return Err(Error::RangeMismatch(format!(
            "{} lists {stray}, which is not in the current universe; rerun `tda-portfolio norms`",
            path.display()
        )));
    }
    Ok(table)
}

pub fn cmd_ingest(cfg: &PipelineConfig) -> Result<RunManifest> {
    cfg.validate()?;
    let mut manifest = RunManifest::new("ingest", cfg);
    let out = out_dir(cfg)?;

    let source = if cfg.data.is_remote() {
        manifest.time("fetch", || fetch_dataset(&cfg.data.source, &cfg.data.cache_dir))?
    } else {
        PathBuf::from(&cfg.data.source)
    };
    manifest.dataset_sha256 = sha256_file(&source)?;
    let ingested = manifest.time("ingest", || ingest_csv(&source, &cfg.data.columns))?;

    let universe_path = out.join(UNIVERSE_FILE);
    let rejections_path = out.join(REJECTIONS_FILE);
    manifest.time("write", || {
        write_universe(&universe_path, &ingested.universe)?;
        write_rejections(&rejections_path, &ingested.rejections)
    })?;
    let admitted = ingested.universe.observation_count();
    manifest.record_output(&universe_path, admitted)?;
    manifest.record_output(&rejections_path, ingested.rejections.len())?;

    manifest.note(format!(
        "read {} rows: {} admitted, {} rejected",
        ingested.rows,
        admitted,
        ingested.rejections.len()
    ));
    if let Some((first, last)) = ingested.universe.date_range() {
        manifest.note(format!(
            "{} currencies, {first} to {last}",
            ingested.universe.len()
        ));
    }
    manifest.write(out)?;
    Ok(manifest)
}

enum NormOutcome {
    Computed(NormSeries),
    Skipped { observations: usize, reason: String },
}

#[derive(Debug, Clone, Copy, Default)]
pub struct NormsOptions {
    /// Also write every persistence diagram to `diagrams.csv`.
    pub dump_diagrams: bool,
}

pub fn cmd_norms(cfg: &PipelineConfig, opts: NormsOptions) -> Result<RunManifest> {
    cfg.validate()?;
    let mut manifest = RunManifest::new("norms", cfg);
    let out = out_dir(cfg)?;
    let (universe, checksum) = manifest.time("load", || load_universe(cfg))?;
    manifest.dataset_sha256 = checksum;

    let series: Vec<_> = universe.iter().collect();
    let outcomes = manifest.time("landscapes", || {
        series
            .par_iter()
            .map(|s| {
                let required = cfg.embedding.min_series_len();
                if s.len() < required {
                    return Ok(NormOutcome::Skipped {
                        observations: s.len(),
                        reason: format!("needs {required} observations"),
                    });
                }
                norm_series(s, &cfg.embedding, cfg.persistence.threshold, &cfg.landscape)
                    .map(NormOutcome::Computed)
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let mut norms = Vec::new();
    let mut diffs = Vec::new();
    let mut skipped = Vec::new();
    for (s, outcome) in series.iter().zip(outcomes) {
        match outcome {
            NormOutcome::Computed(n) => {
                match diff_series(&n) {
                    Ok(d) => diffs.push(d),
                    Err(_) => skipped.push((s.symbol(), s.len(), "single window, no differences".to_string())),
                }
                norms.push(n);
            }
            NormOutcome::Skipped {
                observations,
                reason,
            } => skipped.push((s.symbol(), observations, reason)),
        }
    }

    let norms_path = out.join(NORMS_FILE);
    let diffs_path = out.join(DIFFS_FILE);
    let skipped_path = out.join(SKIPPED_FILE);
    manifest.time("write", || {
        write_norm_csv(&norms_path, &norms)?;
        write_diff_csv(&diffs_path, &diffs)?;
        let mut w = create(&skipped_path)?;
        writeln!(w, "symbol,observations,reason").map_err(|e| Error::io(&skipped_path, e))?;
        for (symbol, n, reason) in &skipped {
            writeln!(w, "{symbol},{n},{reason}").map_err(|e| Error::io(&skipped_path, e))?;
        }
        finish(&skipped_path, w)
    })?;
    let norm_rows = norms.iter().map(|n| n.observations.len()).sum();
    let diff_rows = diffs.iter().map(|d| d.observations.len()).sum();
    manifest.record_output(&norms_path, norm_rows)?;
    manifest.record_output(&diffs_path, diff_rows)?;
    manifest.record_output(&skipped_path, skipped.len())?;

    if opts.dump_diagrams {
        let path = out.join(DIAGRAMS_FILE);
        let rows = manifest.time("diagrams", || dump_diagrams(cfg, &universe, &path))?;
        manifest.record_output(&path, rows)?;
    }

    manifest.note(format!(
        "{} currencies embedded, {} skipped, {norm_rows} norms",
        norms.len(),
        skipped.len()
    ));
    manifest.write(out)?;
    Ok(manifest)
}

fn dump_diagrams(cfg: &PipelineConfig, universe: &MarketUniverse, path: &Path) -> Result<usize> {
    let mut w = create(path)?;
    writeln!(w, "{DIAGRAM_CSV_HEADER}").map_err(|e| Error::io(path, e))?;
    let mut rows = 0;
    for s in universe.iter() {
        if s.len() < cfg.embedding.min_series_len() {
            continue;
        }
        let diagrams = window_clouds(s, &cfg.embedding)?
            .par_iter()
            .map(|c| cloud_diagram(c, cfg.persistence.threshold))
            .collect::<Result<Vec<_>>>()?;
        for d in &diagrams {
            d.write_csv_rows(s.symbol(), &mut w)
                .map_err(|e| Error::io(path, e))?;
            rows += d.pairs().len();
        }
    }
    finish(path, w)?;
    Ok(rows)
}

fn schedule(cfg: &PipelineConfig) -> RebalanceSchedule {
    RebalanceSchedule::new(cfg.backtest.from, cfg.backtest.to, cfg.backtest.schedule)
}

pub fn cmd_score(cfg: &PipelineConfig) -> Result<RunManifest> {
    cfg.validate()?;
    let mut manifest = RunManifest::new("score", cfg);
    let out = out_dir(cfg)?;
    let (universe, checksum) = manifest.time("load", || load_universe(cfg))?;
    manifest.dataset_sha256 = checksum;
    let diffs = manifest.time("load diffs", || load_diffs(cfg, &universe))?;

    let mut strategy = TdaStrategy::new(diffs, cfg.rfm, cfg.allocation.mode);
    manifest.time("score", || {
        for &date in schedule(cfg).dates() {
            strategy.allocate(&MarketView::new(&universe, date))?;
        }
        Ok(())
    })?;

    let scores_path = out.join(SCORES_FILE);
    let weights_path = out.join(WEIGHTS_FILE);
    let (mut score_rows, mut weight_rows) = (0, 0);
    manifest.time("write", || {
        let mut s = create(&scores_path)?;
        let mut w = create(&weights_path)?;
        writeln!(s, "{SCORES_CSV_HEADER}").map_err(|e| Error::io(&scores_path, e))?;
        writeln!(w, "{WEIGHTS_CSV_HEADER}").map_err(|e| Error::io(&weights_path, e))?;
        for day in &strategy.history {
            write_score_rows(&day.rows, &mut s).map_err(|e| Error::io(&scores_path, e))?;
            write_weight_rows(&day.allocation, &mut w).map_err(|e| Error::io(&weights_path, e))?;
            score_rows += day.rows.len();
            weight_rows += day.allocation.weights.len();
        }
        finish(&scores_path, s)?;
        finish(&weights_path, w)
    })?;
    manifest.record_output(&scores_path, score_rows)?;
    manifest.record_output(&weights_path, weight_rows)?;

    let days = strategy.history.len();
    let cash_days = strategy
        .history
        .iter()
        .filter(|d| d.allocation.invested() == 0.0)
        .count();
    manifest.note(format!(
        "{days} rebalance dates scored, {cash_days} fully in cash"
    ));
    manifest.write(out)?;
    Ok(manifest)
}

pub fn cmd_backtest(cfg: &PipelineConfig) -> Result<RunManifest> {
    cfg.validate()?;
    let mut manifest = RunManifest::new("backtest", cfg);
    let out = out_dir(cfg)?;
    let (universe, checksum) = manifest.time("load", || load_universe(cfg))?;
    manifest.dataset_sha256 = checksum;
    let diffs = manifest.time("load diffs", || load_diffs(cfg, &universe))?;

    let range = (cfg.backtest.from, cfg.backtest.to);
    let schedule = schedule(cfg);
    let costs = CostModel {
        rate: cfg.backtest.cost_rate,
    };
    let mut tda = TdaStrategy::new(diffs, cfg.rfm, cfg.allocation.mode);
    let tda_result = manifest.time("tda", || {
        run_backtest(&universe, &mut tda, &schedule, range, costs)
    })?;
    let naive_result = manifest.time("naive", || {
        run_backtest(&universe, &mut NaiveStrategy, &schedule, range, costs)
    })?;
    let table = monthly_table(&tda_result, &naive_result)?;

    let returns_path = out.join(RETURNS_FILE);
    let monthly_path = out.join(MONTHLY_FILE);
    let summary_path = out.join(SUMMARY_FILE);
    let tda_total = tda_result.total_log_return();
    let naive_total = naive_result.total_log_return();
    let won = table.months_won();
    let mean_cash = tda_result.cash_weight.iter().map(|&(_, c)| c).sum::<f64>()
        / tda_result.cash_weight.len().max(1) as f64;
    let summary = vec![
        format!("range: {} to {}", range.0, range.1),
        format!(
            "allocation: {}, recency: {}, schedule: {}",
            cfg.allocation.mode, cfg.rfm.recency, cfg.backtest.schedule
        ),
        format!("tda cumulative log return: {tda_total:.6}"),
        format!("naive cumulative log return: {naive_total:.6}"),
        format!("months tda >= naive: {won} of {}", table.rows.len()),
        format!("mean tda cash weight: {mean_cash:.4}"),
    ];

    manifest.time("write", || {
        let mut w = create(&returns_path)?;
        write_returns(&[&tda_result, &naive_result], &mut w)
            .map_err(|e| Error::io(&returns_path, e))?;
        finish(&returns_path, w)?;
        let mut w = create(&monthly_path)?;
        write_monthly(&table, &mut w).map_err(|e| Error::io(&monthly_path, e))?;
        finish(&monthly_path, w)?;
        let mut w = create(&summary_path)?;
        for line in &summary {
            writeln!(w, "{line}").map_err(|e| Error::io(&summary_path, e))?;
        }
        finish(&summary_path, w)
    })?;
    manifest.record_output(&returns_path, tda_result.daily.len() + naive_result.daily.len())?;
    manifest.record_output(&monthly_path, table.rows.len())?;
    manifest.record_output(&summary_path, summary.len())?;

    summary.into_iter().for_each(|l| manifest.note(l));
    manifest.write(out)?;
    Ok(manifest)
}

pub const COVERAGE_FILE: &str = "coverage.csv";
pub const LOG_RETURNS_FILE: &str = "log_returns.csv";
pub const VOLATILITY_FILE: &str = "volatility.csv";
pub const SHARPE_FILE: &str = "sharpe.csv";
pub const MARKET_FILE: &str = "market.csv";

/// Descriptive statistics of the universe: coverage, log returns, rolling
/// volatility and Sharpe ratios, and their cross-sectional means.
pub fn cmd_report(cfg: &PipelineConfig) -> Result<RunManifest> {
    cfg.validate()?;
    let mut manifest = RunManifest::new("report", cfg);
    let out = out_dir(cfg)?;
    let (universe, checksum) = manifest.time("load", || load_universe(cfg))?;
    manifest.dataset_sha256 = checksum;

    let selected: Vec<_> = if cfg.report.symbols.is_empty() {
        universe.iter().collect()
    } else {
        cfg.report
            .symbols
            .iter()
            .map(|s| {
                universe
                    .get(s)
                    .ok_or_else(|| Error::Config(format!("report.symbols: unknown currency {s}")))
            })
            .collect::<Result<_>>()?
    };

    type Stats = (
        String,
        Vec<(NaiveDate, f64)>,
        Vec<(NaiveDate, f64)>,
        Vec<(NaiveDate, Option<f64>)>,
    );
    let stats: Vec<Stats> = manifest.time("statistics", || {
        selected
            .par_iter()
            .filter(|s| s.len() >= 2)
            .map(|s| {
                let r = log_returns(s)?;
                let vol = rolling_volatility(&r, cfg.report.volatility_window)?;
                let sharpe = rolling_sharpe(&r, cfg.report.sharpe_window)?;
                Ok((s.symbol().to_string(), r.observations, vol, sharpe))
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let coverage = universe.coverage();
    let mut market: std::collections::BTreeMap<NaiveDate, (usize, f64, usize, f64)> =
        std::collections::BTreeMap::new();
    for (_, returns, vol, _) in &stats {
        for &(d, r) in returns {
            let e = market.entry(d).or_default();
            e.0 += 1;
            e.1 += r;
        }
        for &(d, v) in vol {
            let e = market.entry(d).or_default();
            e.2 += 1;
            e.3 += v;
        }
    }

    let paths = [COVERAGE_FILE, LOG_RETURNS_FILE, VOLATILITY_FILE, SHARPE_FILE, MARKET_FILE]
        .map(|f| out.join(f));
    let rows = manifest.time("write", || {
        let mut rows = [0usize; 5];
        let io = |i: usize| {
            let p = paths[i].clone();
            move |e| Error::io(p, e)
        };

        let mut w = create(&paths[0])?;
        writeln!(w, "date,currencies").map_err(io(0))?;
        for (d, n) in &coverage {
            writeln!(w, "{d},{n}").map_err(io(0))?;
        }
        rows[0] = coverage.len();
        finish(&paths[0], w)?;

        let mut lr = create(&paths[1])?;
        let mut vo = create(&paths[2])?;
        let mut sh = create(&paths[3])?;
        writeln!(lr, "symbol,date,log_return").map_err(io(1))?;
        writeln!(vo, "symbol,date,volatility").map_err(io(2))?;
        writeln!(sh, "symbol,date,sharpe").map_err(io(3))?;
        for (symbol, returns, vol, sharpe) in &stats {
            for (d, r) in returns {
                writeln!(lr, "{symbol},{d},{r}").map_err(io(1))?;
            }
            for (d, v) in vol {
                writeln!(vo, "{symbol},{d},{v}").map_err(io(2))?;
            }
            for (d, s) in sharpe {
                match s {
                    Some(s) => writeln!(sh, "{symbol},{d},{s}"),
                    None => writeln!(sh, "{symbol},{d},"),
                }
                .map_err(io(3))?;
            }
            rows[1] += returns.len();
            rows[2] += vol.len();
            rows[3] += sharpe.len();
        }
        finish(&paths[1], lr)?;
        finish(&paths[2], vo)?;
        finish(&paths[3], sh)?;

        let mut w = create(&paths[4])?;
        writeln!(w, "date,currencies,mean_log_return,mean_volatility").map_err(io(4))?;
        for (d, (n, sum_r, nv, sum_v)) in &market {
            let mean_r = if *n > 0 { sum_r / *n as f64 } else { f64::NAN };
            let mean_v = if *nv > 0 {
                (sum_v / *nv as f64).to_string()
            } else {
                String::new()
            };
            writeln!(w, "{d},{n},{mean_r},{mean_v}").map_err(io(4))?;
        }
        rows[4] = market.len();
        finish(&paths[4], w)?;
        Ok(rows)
    })?;
    for (p, n) in paths.iter().zip(rows) {
        manifest.record_output(p, n)?;
    }

    manifest.note(format!(
        "{} currencies summarised over {} days",
        stats.len(),
        coverage.len()
    ));
    manifest.write(out)?;
    Ok(manifest)
}
