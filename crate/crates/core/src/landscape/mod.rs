//! Persistence landscapes stored exactly as piecewise-linear functions, their
//! Lp norms, and the per-currency norm and norm-difference series.

mod series;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::persistence::PersistenceDiagram;

pub use series::{
    diff_series, norm_series, read_series_csv, write_diff_csv, write_norm_csv, DiffSeries,
    NormSeries, DIFF_CSV_HEADER, NORM_CSV_HEADER,
};

/// Which diagram points feed the landscape and which norm is taken.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LandscapeConfig {
    pub p: f64,
    /// Add the landscape of the finite H0 pairs to the H1 one.
    pub include_h0: bool,
}

impl Default for LandscapeConfig {
    fn default() -> Self {
        Self {
            p: 2.0,
            include_h0: false,
        }
    }
}

/// Tent function `max(0, min(x - b, d - x))`.
#[inline]
pub fn tent(birth: f64, death: f64, x: f64) -> f64 {
    (x - birth).min(death - x).max(0.0)
}

/// Sequence of levels `λ_1 ≥ λ_2 ≥ …`, each a list of `(x, value)`
/// breakpoints, linear in between and zero outside the first and last
/// breakpoint.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PersistenceLandscape {
    levels: Vec<Vec<(f64, f64)>>,
}

impl PersistenceLandscape {
    /// Exact landscape of a set of finite intervals. Intervals with
    /// `death <= birth` contribute nothing.
    pub fn from_intervals(intervals: &[(f64, f64)]) -> Self {
        let tents: Vec<(f64, f64)> = intervals
            .iter()
            .copied()
            .filter(|&(b, d)| b.is_finite() && d.is_finite() && d > b)
            .collect();
        if tents.is_empty() {
            return Self::default();
        }

        // Every tent is linear between these points and no two tents swap
        // order between them: kinks sit at b, (b+d)/2 and d, and a rising
        // edge x - b_i meets a falling edge d_j - x only at (b_i + d_j)/2.
        let mut xs = Vec::with_capacity(3 * tents.len());
        for &(b, d) in &tents {
            xs.extend([b, 0.5 * (b + d), d]);
        }
        for &(bi, di) in &tents {
            let peak_i = 0.5 * (bi + di);
            for &(bj, dj) in &tents {
                let x = 0.5 * (bi + dj);
                if x > bi && x < peak_i && x > 0.5 * (bj + dj) && x < dj {
                    xs.push(x);
                }
            }
        }
        xs.sort_by(f64::total_cmp);
        xs.dedup();

        let mut columns: Vec<Vec<f64>> = Vec::with_capacity(xs.len());
        let mut depth = 0;
        for &x in &xs {
            let mut values: Vec<f64> = tents
                .iter()
                .map(|&(b, d)| tent(b, d, x))
                .filter(|&v| v > 0.0)
                .collect();
            values.sort_by(|a, b| b.total_cmp(a));
            depth = depth.max(values.len());
            columns.push(values);
        }

        let levels = (0..depth)
            .map(|k| {
                let raw: Vec<(f64, f64)> = xs
                    .iter()
                    .zip(&columns)
                    .map(|(&x, vals)| (x, vals.get(k).copied().unwrap_or(0.0)))
                    .collect();
                compress_zeros(raw)
            })
            .collect();
        Self { levels }
    }

    pub fn levels(&self) -> &[Vec<(f64, f64)>] {
        &self.levels
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn is_zero(&self) -> bool {
        self.levels.is_empty()
    }

    /// `λ_k(x)` with `k` counted from 1.
    pub fn eval(&self, k: usize, x: f64) -> f64 {
        match k.checked_sub(1).and_then(|i| self.levels.get(i)) {
            Some(points) => eval_piecewise(points, x),
            None => 0.0,
        }
    }
}

/// Trim leading and trailing zeros to a single boundary point and collapse
/// interior zero runs to their endpoints.
fn compress_zeros(points: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    let first = points.iter().position(|p| p.1 > 0.0);
    let last = points.iter().rposition(|p| p.1 > 0.0);
    let (Some(first), Some(last)) = (first, last) else {
        return Vec::new();
    };
    let lo = first.saturating_sub(1);
    let hi = (last + 1).min(points.len() - 1);
    let slice = &points[lo..=hi];
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(slice.len());
    for (i, &p) in slice.iter().enumerate() {
        let interior_zero = p.1 == 0.0
            && i > 0
            && i + 1 < slice.len()
            && slice[i - 1].1 == 0.0
            && slice[i + 1].1 == 0.0;
        if !interior_zero {
            out.push(p);
        }
    }
    out
}

fn eval_piecewise(points: &[(f64, f64)], x: f64) -> f64 {
    let (Some(&(x0, _)), Some(&(xn, _))) = (points.first(), points.last()) else {
        return 0.0;
    };
    if x < x0 || x > xn {
        return 0.0;
    }
    let i = points.partition_point(|p| p.0 <= x);
    if i == points.len() {
        return points[i - 1].1;
    }
    let (xa, ya) = points[i - 1];
    let (xb, yb) = points[i];
    ya + (yb - ya) * (x - xa) / (xb - xa)
}

/// Landscape of the finite pairs of homology dimension `k`.
pub fn landscape_from_diagram(diagram: &PersistenceDiagram, k: usize) -> PersistenceLandscape {
    PersistenceLandscape::from_intervals(&diagram.finite_intervals(k))
}

/// `∫ y^p` over a linear piece from `(x0, y0)` to `(x1, y1)`, `y >= 0`.
fn segment_integral(x0: f64, y0: f64, x1: f64, y1: f64, p: f64) -> f64 {
    let h = x1 - x0;
    if p == p.trunc() && p <= 64.0 {
        // (y1^(p+1) - y0^(p+1)) / ((p+1)(y1 - y0)) expanded as a geometric sum
        let p = p as i32;
        let sum: f64 = (0..=p).map(|i| y0.powi(i) * y1.powi(p - i)).sum();
        h * sum / f64::from(p + 1)
    } else if y0 == y1 {
        h * y0.powf(p)
    } else {
        h * (y1.powf(p + 1.0) - y0.powf(p + 1.0)) / ((p + 1.0) * (y1 - y0))
    }
}

/// `‖λ‖_p = (Σ_k ∫ λ_k^p)^(1/p)`, integrated exactly segment by segment.
pub fn lp_norm(landscape: &PersistenceLandscape, p: f64) -> Result<f64> {
    Ok(lp_norm_pow(landscape, p)?.powf(1.0 / p))
}

/// `Σ_k ∫ λ_k^p` without the final root.
pub fn lp_norm_pow(landscape: &PersistenceLandscape, p: f64) -> Result<f64> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::Parameter(format!("norm exponent must be >= 1, got {p}")));
    }
    Ok(landscape
        .levels
        .iter()
        .flat_map(|level| level.windows(2))
        .map(|w| segment_integral(w[0].0, w[0].1, w[1].0, w[1].1, p))
        .sum())
}

/// Norm of a diagram's landscape under `config`.
pub fn diagram_norm(diagram: &PersistenceDiagram, config: &LandscapeConfig) -> Result<f64> {
    let mut total = lp_norm_pow(&landscape_from_diagram(diagram, 1), config.p)?;
    if config.include_h0 {
        total += lp_norm_pow(&landscape_from_diagram(diagram, 0), config.p)?;
    }
    Ok(total.powf(1.0 / config.p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn single_tent() {
        let l = PersistenceLandscape::from_intervals(&[(0.0, 2.0)]);
        assert_eq!(l.depth(), 1);
        assert_eq!(l.eval(1, 1.0), 1.0);
        assert_eq!(l.eval(1, 0.5), 0.5);
        assert_eq!(l.eval(1, 3.0), 0.0);
        assert_eq!(l.eval(2, 1.0), 0.0);
        assert_eq!(l.levels()[0], vec![(0.0, 0.0), (1.0, 1.0), (2.0, 0.0)]);
    }

    #[test]
    fn two_overlapping_tents() {
        // hand evaluation: f1 = tent(0,2), f2 = tent(1,3)
        // x = 1.5: f1 = 0.5, f2 = 0.5; x = 2: f1 = 0, f2 = 1
        let l = PersistenceLandscape::from_intervals(&[(0.0, 2.0), (1.0, 3.0)]);
        assert_eq!(l.depth(), 2);
        assert_abs_diff_eq!(l.eval(1, 1.5), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(l.eval(2, 1.5), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(l.eval(1, 2.0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(l.eval(2, 2.0), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(l.eval(1, 1.25), 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(l.eval(2, 1.25), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn empty_landscape() {
        let l = PersistenceLandscape::from_intervals(&[]);
        assert!(l.is_zero());
        assert_eq!(l.eval(1, 0.0), 0.0);
        for p in [1.0, 2.0, 3.5] {
            assert_eq!(lp_norm(&l, p).unwrap(), 0.0);
        }
        let degenerate = PersistenceLandscape::from_intervals(&[(1.0, 1.0), (2.0, 1.0)]);
        assert!(degenerate.is_zero());
    }

    #[test]
    fn single_tent_norms() {
        let l = PersistenceLandscape::from_intervals(&[(0.0, 2.0)]);
        // ∫ tent^2 = 2 ∫_0^1 t^2 dt = 2/3
        assert_abs_diff_eq!(lp_norm(&l, 2.0).unwrap(), (2.0f64 / 3.0).sqrt(), epsilon = 1e-15);
        // ∫ tent = 1
        assert_abs_diff_eq!(lp_norm(&l, 1.0).unwrap(), 1.0, epsilon = 1e-15);
        // ∫ tent^1.5 = 2 / 2.5
        assert_abs_diff_eq!(
            lp_norm(&l, 1.5).unwrap(),
            (2.0f64 / 2.5).powf(1.0 / 1.5),
            epsilon = 1e-14
        );
        assert!(lp_norm(&l, 0.5).is_err());
        assert!(lp_norm(&l, f64::NAN).is_err());
    }

    #[test]
    fn disjoint_tents_leave_zero_gap() {
        let l = PersistenceLandscape::from_intervals(&[(0.0, 1.0), (3.0, 5.0)]);
        assert_eq!(l.depth(), 1);
        assert_eq!(l.eval(1, 2.0), 0.0);
        assert_eq!(l.eval(1, 4.0), 1.0);
        assert_abs_diff_eq!(
            lp_norm(&l, 1.0).unwrap(),
            0.25 + 1.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn scaling_diagram_scales_l2_by_three_halves_power() {
        let pairs = [(0.1, 0.9), (0.3, 1.4), (0.35, 0.6)];
        let base = lp_norm(&PersistenceLandscape::from_intervals(&pairs), 2.0).unwrap();
        for c in [0.5, 2.0, 7.0] {
            let scaled: Vec<(f64, f64)> = pairs.iter().map(|&(b, d)| (b * c, d * c)).collect();
            let got = lp_norm(&PersistenceLandscape::from_intervals(&scaled), 2.0).unwrap();
            assert_abs_diff_eq!(got, base * c.powf(1.5), epsilon = 1e-12);
        }
    }

    fn intervals() -> impl Strategy<Value = Vec<(f64, f64)>> {
        prop::collection::vec((0.0f64..5.0, 0.01f64..3.0), 0..12)
            .prop_map(|v| v.into_iter().map(|(b, l)| (b, b + l)).collect())
    }

    proptest! {
        #[test]
        fn levels_are_ordered_and_supported(pairs in intervals(), xs in prop::collection::vec(-1.0f64..9.0, 20)) {
            let l = PersistenceLandscape::from_intervals(&pairs);
            let lo = pairs.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
            let hi = pairs.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
            for &x in &xs {
                for k in 1..=l.depth() {
                    prop_assert!(l.eval(k, x) + 1e-12 >= l.eval(k + 1, x));
                    prop_assert!(l.eval(k, x) >= 0.0);
                    if x < lo || x > hi {
                        prop_assert_eq!(l.eval(k, x), 0.0);
                    }
                }
            }
        }

        #[test]
        fn matches_direct_kth_max(pairs in intervals(), xs in prop::collection::vec(-1.0f64..9.0, 20)) {
            let l = PersistenceLandscape::from_intervals(&pairs);
            for &x in &xs {
                let mut vals: Vec<f64> = pairs.iter().map(|&(b, d)| tent(b, d, x)).collect();
                vals.sort_by(|a, b| b.total_cmp(a));
                for (k, v) in vals.iter().enumerate() {
                    prop_assert!((l.eval(k + 1, x) - v).abs() <= 1e-12);
                }
            }
        }

        #[test]
        fn pair_order_is_irrelevant(mut pairs in intervals(), seed in any::<u64>()) {
            let a = PersistenceLandscape::from_intervals(&pairs);
            let n = pairs.len().max(1);
            pairs.rotate_left((seed as usize) % n);
            pairs.reverse();
            let b = PersistenceLandscape::from_intervals(&pairs);
            prop_assert_eq!(&a, &b);
            prop_assert_eq!(lp_norm(&a, 2.0).unwrap(), lp_norm(&b, 2.0).unwrap());
        }
    }
}
