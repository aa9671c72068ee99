mod common;

use std::path::Path;

use tda_portfolio::backtest::{MarketView, Strategy, TdaStrategy};
use tda_portfolio::cli::{self, NormsOptions, Overrides, RunManifest};
use tda_portfolio::landscape::{diff_series, norm_series};
use tda_portfolio::scoring::{score_day, DiffTable};
use tda_portfolio::{EmbeddingParams, Error, PipelineConfig, Transform};

use common::*;

fn small_config(dir: &Path) -> PipelineConfig {
    let mut cfg = PipelineConfig::default();
    cfg.data.source = dir.join("prices.csv").display().to_string();
    cfg.run.out = dir.join("out");
    cfg.embedding = EmbeddingParams::new(3, 10, Transform::LogPrice).unwrap();
    cfg.rfm.lookback = 10;
    cfg.backtest.from = date(2018, 3, 1);
    cfg.backtest.to = date(2018, 5, 31);
    cfg
}

fn run_all(cfg: &PipelineConfig) -> Vec<RunManifest> {
    vec![
        cli::cmd_ingest(cfg).unwrap(),
        cli::cmd_norms(cfg, NormsOptions::default()).unwrap(),
        cli::cmd_score(cfg).unwrap(),
        cli::cmd_backtest(cfg).unwrap(),
        cli::cmd_report(cfg).unwrap(),
    ]
}

fn rows(manifest: &RunManifest, file: &str) -> usize {
    manifest.output(file).unwrap().rows
}

fn csv_lines(path: &Path) -> usize {
    std::fs::read_to_string(path).unwrap().lines().count() - 1
}

#[test]
fn stages_agree_on_row_counts() {
    let dir = tempfile::tempdir().unwrap();
    SyntheticMarket::small(1).write(&dir.path().join("prices.csv"));
    let cfg = small_config(dir.path());
    let m = run_all(&cfg);
    let out = &cfg.run.out;

    let (universe, _) = cli::load_universe(&cfg).unwrap();
    let per_symbol: Vec<usize> = universe
        .iter()
        .map(|s| s.len().saturating_sub(cfg.embedding.dimension + cfg.embedding.window - 2))
        .collect();
    let expected_norms: usize = per_symbol.iter().sum();
    let expected_diffs: usize = per_symbol.iter().filter(|&&n| n >= 2).map(|n| n - 1).sum();
    assert_eq!(rows(&m[1], "norms.csv"), expected_norms);
    assert_eq!(rows(&m[1], "diffs.csv"), expected_diffs);

    for (manifest, files) in [
        (&m[0], &["universe.csv", "rejections.csv"][..]),
        (&m[1], &["norms.csv", "diffs.csv", "skipped.csv"]),
        (&m[2], &["scores.csv", "weights.csv"]),
        (&m[3], &["returns.csv", "monthly.csv"]),
        (&m[4], &["coverage.csv", "log_returns.csv", "volatility.csv", "sharpe.csv", "market.csv"]),
    ] {
        for f in files {
            assert_eq!(rows(manifest, f), csv_lines(&out.join(f)), "{f}");
        }
        assert!(RunManifest::path_in(out, &manifest.command).is_file());
    }

    let days = (cfg.backtest.to - cfg.backtest.from).num_days() as usize + 1;
    assert_eq!(rows(&m[3], "returns.csv"), 2 * days);
    assert_eq!(rows(&m[3], "monthly.csv"), 3);
    assert_eq!(rows(&m[2], "scores.csv"), rows(&m[2], "weights.csv"));
    let returns: usize = universe.iter().map(|s| s.len() - 1).sum();
    assert_eq!(rows(&m[4], "log_returns.csv"), returns);

    let raw_rows = std::fs::read_to_string(dir.path().join("prices.csv"))
        .unwrap()
        .lines()
        .count()
        - 1;
    assert_eq!(rows(&m[0], "universe.csv") + rows(&m[0], "rejections.csv"), raw_rows);
    assert_eq!(m[1].dataset_sha256, m[3].dataset_sha256);
}

#[test]
fn identical_runs_write_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    SyntheticMarket::small(2).write(&dir.path().join("prices.csv"));
    let mut cfg = small_config(dir.path());
    run_all(&cfg);
    let first = csv_files(&cfg.run.out);
    cfg.run.out = dir.path().join("again");
    run_all(&cfg);
    let second = csv_files(&cfg.run.out);
    assert_eq!(first.keys().collect::<Vec<_>>(), second.keys().collect::<Vec<_>>());
    for (name, bytes) in &first {
        assert!(bytes == &second[name], "{name} differs between runs");
    }
}

#[test]
fn weights_only_depend_on_the_past() {
    let dir = tempfile::tempdir().unwrap();
    SyntheticMarket::small(3).write(&dir.path().join("prices.csv"));
    let cfg = small_config(dir.path());
    cli::cmd_ingest(&cfg).unwrap();
    cli::cmd_norms(&cfg, NormsOptions::default()).unwrap();
    let (universe, _) = cli::load_universe(&cfg).unwrap();
    let diffs = cli::load_diffs(&cfg, &universe).unwrap();

    let mut full = TdaStrategy::new(diffs, cfg.rfm, cfg.allocation.mode);
    for t in [date(2018, 3, 1), date(2018, 4, 10), date(2018, 5, 31)] {
        let expected = full.allocate(&MarketView::new(&universe, t)).unwrap();

        let past = universe.truncated(t);
        let table: DiffTable = past
            .iter()
            .filter(|s| s.len() >= cfg.embedding.min_series_len())
            .filter_map(|s| {
                let n = norm_series(s, &cfg.embedding, cfg.persistence.threshold, &cfg.landscape)
                    .unwrap();
                diff_series(&n).ok().map(|d| (d.symbol.clone(), d))
            })
            .collect();
        let mut replay = TdaStrategy::new(table, cfg.rfm, cfg.allocation.mode);
        let got = replay.allocate(&MarketView::new(&past, t)).unwrap();
        assert_eq!(got, expected, "{t}");
        assert!(expected.weights.iter().all(|(_, w)| w.is_finite()));
    }
}

#[test]
fn normalized_weights_sum_to_one_when_any_score_is_positive() {
    let dir = tempfile::tempdir().unwrap();
    SyntheticMarket::small(4).write(&dir.path().join("prices.csv"));
    let cfg = small_config(dir.path());
    cli::cmd_ingest(&cfg).unwrap();
    cli::cmd_norms(&cfg, NormsOptions::default()).unwrap();
    let (universe, _) = cli::load_universe(&cfg).unwrap();
    let diffs = cli::load_diffs(&cfg, &universe).unwrap();
    let mut checked = 0;
    for t in cfg.backtest.from.iter_days().take_while(|d| *d <= cfg.backtest.to) {
        let day = score_day(diffs.values(), t, &cfg.rfm, cfg.allocation.mode);
        if day.rows.iter().any(|r| r.score > 0.0) {
            assert!((day.allocation.invested() - 1.0).abs() <= 1e-9);
            checked += 1;
        }
    }
    assert!(checked > 0);
}

#[test]
fn subset_keeps_the_longest_histories() {
    let dir = tempfile::tempdir().unwrap();
    SyntheticMarket::small(5).write(&dir.path().join("prices.csv"));
    let mut cfg = small_config(dir.path());
    cli::cmd_ingest(&cfg).unwrap();
    let (all, _) = cli::load_universe(&cfg).unwrap();
    cfg.run.subset = Some(2);
    let (sub, _) = cli::load_universe(&cfg).unwrap();
    assert_eq!(sub.len(), 2);
    let shortest_kept = sub.iter().map(|s| s.len()).min().unwrap();
    let dropped_longest = all
        .iter()
        .filter(|s| sub.get(s.symbol()).is_none())
        .map(|s| s.len())
        .max()
        .unwrap();
    assert!(shortest_kept >= dropped_longest);
}

#[test]
fn later_stages_explain_missing_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    match cli::cmd_norms(&cfg, NormsOptions::default()) {
        Err(e @ Error::Ingest { .. }) => {
            assert!(e.to_string().contains("universe.csv"));
            assert!(e.to_string().contains("tda-portfolio ingest"));
            assert_eq!(cli::exit_code(&e), 3);
        }
        other => panic!("unexpected {other:?}"),
    }
    match cli::cmd_ingest(&cfg) {
        Err(e @ Error::Io { .. }) => assert!(e.to_string().contains("prices.csv")),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn stale_diffs_are_detected() {
    let dir = tempfile::tempdir().unwrap();
    SyntheticMarket::small(6).write(&dir.path().join("prices.csv"));
    let mut cfg = small_config(dir.path());
    cli::cmd_ingest(&cfg).unwrap();
    cli::cmd_norms(&cfg, NormsOptions::default()).unwrap();
    cfg.run.subset = Some(1);
    assert!(matches!(cli::cmd_backtest(&cfg), Err(Error::RangeMismatch(_))));
}

#[test]
fn diagram_dump_is_optional() {
    let dir = tempfile::tempdir().unwrap();
    SyntheticMarket::small(7).write(&dir.path().join("prices.csv"));
    let mut cfg = small_config(dir.path());
    cfg.run.subset = Some(1);
    cli::cmd_ingest(&cfg).unwrap();
    let plain = cli::cmd_norms(&cfg, NormsOptions::default()).unwrap();
    assert!(plain.output("diagrams.csv").is_none());
    let dumped = cli::cmd_norms(&cfg, NormsOptions { dump_diagrams: true }).unwrap();
    let text = std::fs::read_to_string(cfg.run.out.join("diagrams.csv")).unwrap();
    assert!(text.starts_with("symbol,date,dim,birth,death\n"));
    assert!(text.contains(",inf\n"));
    assert_eq!(dumped.output("diagrams.csv").unwrap().rows, text.lines().count() - 1);
}

#[test]
fn command_line_overrides_the_file() {
    let mut cfg = PipelineConfig::from_toml(
        r#"
        allocation.mode = "paper_literal"
        rfm.recency = "literal"
        run.subset = 10
        "#,
    )
    .unwrap();
    Overrides {
        subset: Some(50),
        to: Some(date(2019, 1, 1)),
        ..Overrides::default()
    }
    .apply(&mut cfg);
    assert_eq!(cfg.run.subset, Some(50));
    assert_eq!(cfg.backtest.to, date(2019, 1, 1));
    assert_eq!(cfg.allocation.mode.to_string(), "paper_literal");
    assert_eq!(cfg.rfm.recency.to_string(), "literal");
    assert_eq!(cfg.backtest.from, date(2017, 12, 17));
}

#[test]
fn paper_literal_mode_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    SyntheticMarket::small(8).write(&dir.path().join("prices.csv"));
    let mut cfg = small_config(dir.path());
    cfg.allocation.mode = "paper_literal".parse().unwrap();
    let m = run_all(&cfg);
    let weights = std::fs::read_to_string(cfg.run.out.join("weights.csv")).unwrap();
    assert!(weights.lines().skip(1).all(|l| l.ends_with(",paper_literal")));
    assert!(m[3].notes.iter().any(|n| n.starts_with("months tda >= naive")));
}
