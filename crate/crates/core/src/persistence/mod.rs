//! Vietoris-Rips filtrations and their 0- and 1-dimensional persistence
//! diagrams over GF(2).

mod oracle;
mod reduction;
mod rips;

use std::cmp::Ordering;
use std::fmt;
use std::io::Write;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::embedding::PointCloud;
use crate::error::{Error, Result};

pub use oracle::{oracle_persistence, ORACLE_MAX_POINTS};
pub use reduction::compute_persistence;
pub use rips::{build_rips, RipsFiltration, Simplex};

/// Symmetric matrix of pairwise Euclidean distances with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl DistanceMatrix {
    /// Build from a row-major `n * n` buffer, checking symmetry, a zero
    /// diagonal and finite non-negative entries.
    pub fn from_entries(n: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::Parameter(format!(
                "distance matrix needs {} entries, got {}",
                n * n,
                entries.len()
            )));
        }
        for i in 0..n {
            if entries[i * n + i] != 0.0 {
                return Err(Error::Parameter(format!("nonzero diagonal at {i}")));
            }
            for j in 0..i {
                let v = entries[i * n + j];
                if !(v.is_finite() && v >= 0.0) || v != entries[j * n + i] {
                    return Err(Error::Parameter(format!(
                        "entry ({i}, {j}) is not a symmetric finite distance"
                    )));
                }
            }
        }
        Ok(Self { n, entries })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn max_distance(&self) -> f64 {
        self.entries.iter().copied().fold(0.0, f64::max)
    }

    pub fn scaled(&self, c: f64) -> DistanceMatrix {
        DistanceMatrix {
            n: self.n,
            entries: self.entries.iter().map(|v| v * c).collect(),
        }
    }
}

pub fn distance_matrix(cloud: &PointCloud) -> Result<DistanceMatrix> {
    let n = cloud.len();
    if n == 0 {
        return Err(Error::Parameter("empty point cloud".into()));
    }
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        let p = cloud.point(i);
        for j in 0..i {
            let d = p
                .iter()
                .zip(cloud.point(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            entries[i * n + j] = d;
            entries[j * n + i] = d;
        }
    }
    Ok(DistanceMatrix { n, entries })
}

/// How far the filtration is grown.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum ThresholdPolicy {
    /// The largest pairwise distance: every simplex up to dimension 2 enters.
    #[default]
    Enclosing,
    Fixed(f64),
}

impl Serialize for ThresholdPolicy {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match *self {
            ThresholdPolicy::Enclosing => s.serialize_str("enclosing"),
            ThresholdPolicy::Fixed(t) => s.serialize_f64(t),
        }
    }
}

impl<'de> Deserialize<'de> for ThresholdPolicy {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Name(String),
            Value(f64),
        }
        match Raw::deserialize(d)? {
            Raw::Name(s) if s == "enclosing" => Ok(ThresholdPolicy::Enclosing),
            Raw::Name(s) => Err(serde::de::Error::custom(format!(
                "expected \"enclosing\" or a number, got \"{s}\""
            ))),
            Raw::Value(t) if t.is_finite() && t >= 0.0 => Ok(ThresholdPolicy::Fixed(t)),
            Raw::Value(t) => Err(serde::de::Error::custom(format!(
                "threshold must be a non-negative number, got {t}"
            ))),
        }
    }
}

impl ThresholdPolicy {
    pub fn resolve(&self, dm: &DistanceMatrix) -> f64 {
        match *self {
            ThresholdPolicy::Enclosing => dm.max_distance(),
            ThresholdPolicy::Fixed(t) => t,
        }
    }
}

/// A (birth, death) point of dimension 0 or 1. `death` is `f64::INFINITY`
/// for classes still alive at the threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PersistencePair {
    pub dimension: usize,
    pub birth: f64,
    pub death: f64,
}

impl PersistencePair {
    pub fn is_essential(&self) -> bool {
        self.death.is_infinite()
    }

    pub fn persistence(&self) -> f64 {
        self.death - self.birth
    }

    fn canonical_cmp(&self, other: &Self) -> Ordering {
        self.dimension
            .cmp(&other.dimension)
            .then(self.birth.total_cmp(&other.birth))
            .then(self.death.total_cmp(&other.death))
    }
}

impl fmt::Display for PersistencePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "H{}({}, {})", self.dimension, self.birth, fmt_death(self.death))
    }
}

fn fmt_death(death: f64) -> String {
    if death.is_infinite() {
        "inf".to_string()
    } else {
        death.to_string()
    }
}

/// Multiset of persistence pairs, kept sorted by (dimension, birth, death)
/// so that equality is multiset equality.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PersistenceDiagram {
    pairs: Vec<PersistencePair>,
    pub date: Option<NaiveDate>,
}

impl PersistenceDiagram {
    /// Drops zero-length pairs and sorts the rest.
    pub fn from_pairs(pairs: impl IntoIterator<Item = PersistencePair>) -> Self {
        let mut pairs: Vec<PersistencePair> =
            pairs.into_iter().filter(|p| p.birth < p.death).collect();
        pairs.sort_by(PersistencePair::canonical_cmp);
        Self { pairs, date: None }
    }

    pub fn with_date(mut self, date: NaiveDate) -> Self {
        self.date = Some(date);
        self
    }

    pub fn pairs(&self) -> &[PersistencePair] {
        &self.pairs
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn dimension(&self, k: usize) -> impl Iterator<Item = &PersistencePair> {
        self.pairs.iter().filter(move |p| p.dimension == k)
    }

    /// Finite (birth, death) pairs of dimension `k`.
    pub fn finite_intervals(&self, k: usize) -> Vec<(f64, f64)> {
        self.dimension(k)
            .filter(|p| !p.is_essential())
            .map(|p| (p.birth, p.death))
            .collect()
    }

    /// Write `symbol,date,dim,birth,death` rows (no header).
    pub fn write_csv_rows<W: Write>(&self, symbol: &str, out: &mut W) -> std::io::Result<()> {
        let date = self.date.map(|d| d.to_string()).unwrap_or_default();
        for p in &self.pairs {
            writeln!(
                out,
                "{symbol},{date},{},{},{}",
                p.dimension,
                p.birth,
                fmt_death(p.death)
            )?;
        }
        Ok(())
    }
}

pub const DIAGRAM_CSV_HEADER: &str = "symbol,date,dim,birth,death";

/// Distance matrix, Rips filtration and persistence for one cloud.
pub fn cloud_diagram(cloud: &PointCloud, threshold: ThresholdPolicy) -> Result<PersistenceDiagram> {
    let dm = distance_matrix(cloud)?;
    let filtration = build_rips(&dm, threshold.resolve(&dm))?;
    Ok(compute_persistence(&filtration).with_date(cloud.window_end_date))
}
