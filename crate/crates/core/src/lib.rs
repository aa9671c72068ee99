//! Topological features of cryptocurrency price histories and a daily
//! portfolio strategy built on them.
//!
//! Prices are delay-embedded in sliding windows, each window's Vietoris-Rips
//! persistence is summarised by the Lp norm of its persistence landscape, and
//! the day-to-day changes in that norm are scored with a recency, frequency
//! and monetary model that sets portfolio weights.

pub mod backtest;
pub mod cli;
pub mod config;
pub mod embedding;
pub mod error;
pub mod landscape;
pub mod market_data;
pub mod persistence;
pub mod scoring;

pub use config::PipelineConfig;
pub use embedding::{EmbeddingParams, PointCloud, Transform};
pub use error::{Error, Result};
pub use landscape::{LandscapeConfig, PersistenceLandscape};
pub use market_data::{MarketUniverse, PriceSeries};
pub use persistence::{PersistenceDiagram, PersistencePair, ThresholdPolicy};
pub use scoring::{AllocationMode, AllocationVector, RecencyMode, RfmConfig};
