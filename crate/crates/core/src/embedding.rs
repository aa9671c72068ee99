//! Sliding-window time-delay embedding of a price series into point clouds.

use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market_data::PriceSeries;

/// Scalar series that gets embedded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    #[default]
    LogPrice,
    RawPrice,
    LogReturn,
}

impl fmt::Display for Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Transform::LogPrice => "log_price",
            Transform::RawPrice => "raw_price",
            Transform::LogReturn => "log_return",
        })
    }
}

impl FromStr for Transform {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "log_price" => Ok(Transform::LogPrice),
            "raw_price" => Ok(Transform::RawPrice),
            "log_return" => Ok(Transform::LogReturn),
            other => Err(Error::Parameter(format!("unknown transform `{other}`"))),
        }
    }
}

/// Delay dimension, points per cloud and input transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmbeddingParams {
    #[serde(rename = "d")]
    pub dimension: usize,
    #[serde(rename = "w")]
    pub window: usize,
    pub transform: Transform,
}

impl Default for EmbeddingParams {
    fn default() -> Self {
        Self {
            dimension: 4,
            window: 30,
            transform: Transform::LogPrice,
        }
    }
}

impl EmbeddingParams {
    pub fn new(dimension: usize, window: usize, transform: Transform) -> Result<Self> {
        let params = Self {
            dimension,
            window,
            transform,
        };
        params.validate()?;
        Ok(params)
    }

    /// `d >= 2`, `w >= d + 1` and `d <= w / 2`.
    pub fn validate(&self) -> Result<()> {
        let (d, w) = (self.dimension, self.window);
        if d < 2 {
            return Err(Error::Parameter(format!("embedding.d must be >= 2, got {d}")));
        }
        if w < d + 1 || 2 * d > w {
            return Err(Error::Parameter(format!(
                "embedding.w = {w} too small for embedding.d = {d} (need d <= w/2)"
            )));
        }
        Ok(())
    }

    /// Length of the transformed series needed for one cloud.
    pub fn min_transformed_len(&self) -> usize {
        self.dimension + self.window - 1
    }

    /// Raw price observations needed for one cloud.
    pub fn min_series_len(&self) -> usize {
        self.min_transformed_len() + usize::from(self.transform == Transform::LogReturn)
    }
}

/// `w` delay vectors of dimension `d`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    coords: Vec<f64>,
    dim: usize,
    pub window_end_date: NaiveDate,
}

impl PointCloud {
    pub fn new(points: &[Vec<f64>], window_end_date: NaiveDate) -> Result<Self> {
        let dim = points.first().map_or(0, Vec::len);
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::Parameter("points of mixed dimension".into()));
        }
        Self::from_flat(points.concat(), dim, window_end_date)
    }

    pub fn from_flat(coords: Vec<f64>, dim: usize, window_end_date: NaiveDate) -> Result<Self> {
        if dim == 0 && !coords.is_empty() || dim > 0 && !coords.len().is_multiple_of(dim) {
            return Err(Error::Parameter("coordinate count not a multiple of dim".into()));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::Parameter("non-finite coordinate in point cloud".into()));
        }
        Ok(Self {
            coords,
            dim,
            window_end_date,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim.max(1))
    }
}

/// `(x_i, …, x_{i+d-1})` for every start `i`; `N - d + 1` vectors.
pub fn delay_vectors(values: &[f64], dimension: usize) -> Result<Vec<Vec<f64>>> {
    if dimension == 0 {
        return Err(Error::Parameter("delay dimension must be positive".into()));
    }
    if values.len() < dimension {
        return Err(Error::insufficient("delay vectors", dimension, values.len()));
    }
    Ok(values.windows(dimension).map(<[f64]>::to_vec).collect())
}

/// The transformed scalar series together with the date of each value.
pub fn transformed(series: &PriceSeries, transform: Transform) -> (Vec<NaiveDate>, Vec<f64>) {
    let obs = series.observations();
    match transform {
        Transform::LogPrice => (
            obs.iter().map(|o| o.date).collect(),
            obs.iter().map(|o| o.close.ln()).collect(),
        ),
        Transform::RawPrice => (
            obs.iter().map(|o| o.date).collect(),
            obs.iter().map(|o| o.close).collect(),
        ),
        Transform::LogReturn => (
            obs.iter().skip(1).map(|o| o.date).collect(),
            obs.windows(2)
                .map(|w| w[1].close.ln() - w[0].close.ln())
                .collect(),
        ),
    }
}

/// One cloud per window start, each holding `w` consecutive delay vectors
/// and dated by the most recent sample it contains.
pub fn window_clouds(series: &PriceSeries, params: &EmbeddingParams) -> Result<Vec<PointCloud>> {
    params.validate()?;
    let (dates, values) = transformed(series, params.transform);
    let (d, w) = (params.dimension, params.window);
    let n = values.len();
    if n < params.min_transformed_len() {
        return Err(Error::insufficient(
            "window clouds",
            params.min_series_len(),
            series.len(),
        ));
    }
    // delay vector i is values[i..i + d]; the flattened layout makes cloud j
    // the contiguous slice of vectors j..j + w
    let flat: Vec<f64> = values.windows(d).flatten().copied().collect();
    (0..n + 2 - d - w)
        .map(|j| {
            PointCloud::from_flat(
                flat[j * d..(j + w) * d].to_vec(),
                d,
                dates[j + d + w - 2],
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn start() -> NaiveDate {
        NaiveDate::from_ymd_opt(2018, 1, 1).unwrap()
    }

    #[test]
    fn delay_vector_examples() {
        assert_eq!(
            delay_vectors(&[1.0, 2.0, 3.0, 4.0, 5.0], 2).unwrap(),
            vec![vec![1.0, 2.0], vec![2.0, 3.0], vec![3.0, 4.0], vec![4.0, 5.0]]
        );
        assert_eq!(delay_vectors(&[7.0], 1).unwrap(), vec![vec![7.0]]);
        assert_eq!(
            delay_vectors(&[1.0, 2.0, 3.0], 3).unwrap(),
            vec![vec![1.0, 2.0, 3.0]]
        );
        assert!(matches!(
            delay_vectors(&[1.0, 2.0], 3),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn params_validation() {
        assert!(EmbeddingParams::new(4, 30, Transform::LogPrice).is_ok());
        assert!(EmbeddingParams::new(1, 30, Transform::LogPrice).is_err());
        assert!(EmbeddingParams::new(16, 30, Transform::LogPrice).is_err());
        assert!(EmbeddingParams::new(15, 30, Transform::LogPrice).is_ok());
        assert!(EmbeddingParams::new(2, 4, Transform::LogPrice).is_ok());
        assert!(EmbeddingParams::new(2, 3, Transform::LogPrice).is_err());
    }

    #[test]
    fn cloud_counts_and_dates() {
        let closes: Vec<f64> = (1..=35).map(f64::from).collect();
        let series = PriceSeries::daily("X", start(), &closes).unwrap();
        let params = EmbeddingParams::new(2, 30, Transform::RawPrice).unwrap();
        let clouds = window_clouds(&series, &params).unwrap();
        assert_eq!(clouds.len(), 5);
        assert_eq!(clouds[0].len(), 30);
        assert_eq!(clouds[0].point(0), &[1.0, 2.0]);
        assert_eq!(clouds[0].point(29), &[30.0, 31.0]);
        // dated by x_{j+d+w-2}: the newest sample in the cloud
        assert_eq!(clouds[0].window_end_date, series.observations()[30].date);
        assert_eq!(clouds[4].window_end_date, series.last_date().unwrap());

        let exact = PriceSeries::daily("X", start(), &closes[..31]).unwrap();
        assert_eq!(window_clouds(&exact, &params).unwrap().len(), 1);
        let short = PriceSeries::daily("X", start(), &closes[..30]).unwrap();
        let err = window_clouds(&short, &params).unwrap_err();
        assert!(err.to_string().contains("at least 31"), "{err}");
    }

    #[test]
    fn log_return_transform_needs_one_extra_price() {
        let closes: Vec<f64> = (1..=32).map(f64::from).collect();
        let params = EmbeddingParams::new(2, 30, Transform::LogReturn).unwrap();
        assert_eq!(params.min_series_len(), 32);
        let series = PriceSeries::daily("X", start(), &closes).unwrap();
        let clouds = window_clouds(&series, &params).unwrap();
        assert_eq!(clouds.len(), 1);
        assert_eq!(clouds[0].window_end_date, series.last_date().unwrap());
    }

    #[test]
    fn constant_series_gives_identical_points() {
        let series = PriceSeries::daily("X", start(), &[3.5; 40]).unwrap();
        for cloud in window_clouds(&series, &EmbeddingParams::default()).unwrap() {
            let first = cloud.point(0).to_vec();
            assert!(cloud.points().all(|p| p == first.as_slice()));
        }
    }

    #[test]
    fn cloud_count_exhaustive() {
        for n in 1..40usize {
            for d in 2..8 {
                for w in (d + 1).max(2 * d)..20 {
                    let closes: Vec<f64> = (0..n).map(|i| 1.0 + i as f64).collect();
                    let series = PriceSeries::daily("X", start(), &closes).unwrap();
                    let params = EmbeddingParams::new(d, w, Transform::RawPrice).unwrap();
                    match window_clouds(&series, &params) {
                        Ok(clouds) => assert_eq!(clouds.len(), n + 2 - d - w),
                        Err(_) => assert!(n < d + w - 1),
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn consecutive_clouds_share_all_but_one_point(
            closes in prop::collection::vec(0.1f64..100.0, 40..60),
        ) {
            let series = PriceSeries::daily("X", start(), &closes).unwrap();
            let params = EmbeddingParams::default();
            let clouds = window_clouds(&series, &params).unwrap();
            for pair in clouds.windows(2) {
                for i in 1..params.window {
                    prop_assert_eq!(pair[0].point(i), pair[1].point(i - 1));
                }
            }
        }

        #[test]
        fn log_price_scaling_translates_clouds(
            closes in prop::collection::vec(0.1f64..100.0, 33..45),
            scale in 1e-3f64..1e3,
        ) {
            let params = EmbeddingParams::default();
            let a = window_clouds(&PriceSeries::daily("X", start(), &closes).unwrap(), &params).unwrap();
            let scaled: Vec<f64> = closes.iter().map(|c| c * scale).collect();
            let b = window_clouds(&PriceSeries::daily("X", start(), &scaled).unwrap(), &params).unwrap();
            let shift = scale.ln();
            for (ca, cb) in a.iter().zip(&b) {
                for (pa, pb) in ca.points().zip(cb.points()) {
                    for (x, y) in pa.iter().zip(pb) {
                        prop_assert!((y - x - shift).abs() <= 1e-12);
                    }
                }
                for i in 0..ca.len() {
                    for j in 0..ca.len() {
                        let da: f64 = ca.point(i).iter().zip(ca.point(j)).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
                        let db: f64 = cb.point(i).iter().zip(cb.point(j)).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
                        prop_assert!((da - db).abs() <= 1e-12);
                    }
                }
            }
        }
    }
}
