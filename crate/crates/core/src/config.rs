//! Pipeline configuration: a TOML key-value file layered under command-line
//! overrides, validated in full before any stage runs.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::backtest::RebalanceFrequency;
use crate::embedding::EmbeddingParams;
use crate::error::{Error, Result};
use crate::landscape::LandscapeConfig;
use crate::market_data::CsvSchema;
use crate::persistence::ThresholdPolicy;
use crate::scoring::{AllocationMode, RfmConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    /// Local CSV path or an http(s) URL.
    pub source: String,
    pub cache_dir: PathBuf,
    /// Longest gap (in days) that is forward-filled.
    pub max_fill_days: u32,
    pub columns: CsvSchema,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            source: "data/prices.csv".into(),
            cache_dir: PathBuf::from(".cache"),
            max_fill_days: 3,
            columns: CsvSchema::default(),
        }
    }
}

impl DataConfig {
    pub fn is_remote(&self) -> bool {
        self.source.starts_with("http://") || self.source.starts_with("https://")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PersistenceConfig {
    pub threshold: ThresholdPolicy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AllocationConfig {
    pub mode: AllocationMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BacktestConfig {
    pub schedule: RebalanceFrequency,
    pub from: NaiveDate,
    pub to: NaiveDate,
    /// Cost per unit of one-way turnover.
    pub cost_rate: f64,
}

impl Default for BacktestConfig {
    fn default() -> Self {
        Self {
            schedule: RebalanceFrequency::Daily,
            from: NaiveDate::from_ymd_opt(2017, 12, 17).expect("valid date"),
            to: NaiveDate::from_ymd_opt(2019, 7, 5).expect("valid date"),
            cost_rate: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReportConfig {
    pub volatility_window: usize,
    pub sharpe_window: usize,
    /// Currencies to emit per-symbol statistics for; empty means all.
    pub symbols: Vec<String>,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self {
            volatility_window: 30,
            sharpe_window: 60,
            symbols: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub out: PathBuf,
    /// Restrict every stage to the currencies with the longest history.
    pub subset: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            out: PathBuf::from("out"),
            subset: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub data: DataConfig,
    pub embedding: EmbeddingParams,
    pub persistence: PersistenceConfig,
    pub landscape: LandscapeConfig,
    pub rfm: RfmConfig,
    pub allocation: AllocationConfig,
    pub backtest: BacktestConfig,
    pub report: ReportConfig,
    pub run: RunConfig,
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        self.embedding
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        if !(self.landscape.p >= 1.0 && self.landscape.p.is_finite()) {
            return bad(format!("landscape.p must be >= 1, got {}", self.landscape.p));
        }
        if self.rfm.lookback == 0 {
            return bad("rfm.lookback must be positive".into());
        }
        if self.backtest.from >= self.backtest.to {
            return bad(format!(
                "backtest.from ({}) must precede backtest.to ({})",
                self.backtest.from, self.backtest.to
            ));
        }
        if !(0.0..1.0).contains(&self.backtest.cost_rate) {
            return bad(format!("backtest.cost_rate must be in [0, 1), got {}", self.backtest.cost_rate));
        }
        if self.report.volatility_window < 2 || self.report.sharpe_window < 2 {
            return bad("report windows must be at least 2".into());
        }
        if self.run.subset == Some(0) {
            return bad("run.subset must be positive".into());
        }
        if self.data.source.trim().is_empty() {
            return bad("data.source is empty".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::Transform;
    use crate::scoring::RecencyMode;

    #[test]
    fn defaults_are_valid() {
        let cfg = PipelineConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.embedding.window, 30);
        assert_eq!(cfg.embedding.dimension, 4);
        assert_eq!(cfg.landscape.p, 2.0);
        assert_eq!(cfg.rfm.lookback, 30);
        assert_eq!(cfg.backtest.from.to_string(), "2017-12-17");
        assert_eq!(cfg.backtest.to.to_string(), "2019-07-05");
    }

    #[test]
    fn dotted_keys_parse() {
        let cfg = PipelineConfig::from_toml(
            r#"
            embedding.d = 3
            embedding.transform = "log_return"
            rfm.recency = "literal"
            persistence.threshold = 2.5
            data.columns.symbol = "ticker"
            "#,
        )
        .unwrap();
        assert_eq!(cfg.embedding.dimension, 3);
        assert_eq!(cfg.embedding.transform, Transform::LogReturn);
        assert_eq!(cfg.rfm.recency, RecencyMode::Literal);
        assert_eq!(cfg.persistence.threshold, ThresholdPolicy::Fixed(2.5));
        assert_eq!(cfg.data.columns.symbol, "ticker");
        assert_eq!(cfg.embedding.window, 30);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for text in ["embedding.delay = 2", "colour = 1", "[rfm]\nlookbak = 3"] {
            assert!(matches!(
                PipelineConfig::from_toml(text),
                Err(Error::Config(_))
            ));
        }
    }

    #[test]
    fn invalid_values_fail_validation() {
        let mut cfg = PipelineConfig::default();
        cfg.embedding.dimension = 20;
        assert!(cfg.validate().is_err());
        let mut cfg = PipelineConfig::default();
        cfg.landscape.p = 0.5;
        assert!(cfg.validate().is_err());
        let mut cfg = PipelineConfig::default();
        cfg.backtest.to = cfg.backtest.from;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn snapshot_round_trips() {
        let mut cfg = PipelineConfig::default();
        cfg.run.subset = Some(50);
        cfg.persistence.threshold = ThresholdPolicy::Fixed(0.25);
        assert_eq!(PipelineConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }
}
