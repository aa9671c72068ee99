//! Fixtures and independent reference routines shared by the integration
//! tests.
#![allow(dead_code)]

use std::io::Write;
use std::path::Path;

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use tda_portfolio::PointCloud;

pub fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_cloud(rng: &mut impl Rng, n: usize, dim: usize) -> PointCloud {
    let coords: Vec<f64> = (0..n * dim).map(|_| rng.gen::<f64>()).collect();
    PointCloud::from_flat(coords, dim, date(2018, 1, 1)).unwrap()
}

/// Random finite persistence intervals with births in `[0, 1)` and lengths in
/// `(0, 1]`.
pub fn random_intervals(rng: &mut impl Rng, n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|_| {
            let b = rng.gen::<f64>();
            (b, b + 1.0 - rng.gen::<f64>())
        })
        .collect()
}

/// Prim's algorithm on the complete Euclidean graph; edge weights in no
/// particular order.
pub fn mst_weights(cloud: &PointCloud) -> Vec<f64> {
    let n = cloud.len();
    let dist = |i: usize, j: usize| -> f64 {
        cloud
            .point(i)
            .iter()
            .zip(cloud.point(j))
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    };
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut weights = Vec::with_capacity(n.saturating_sub(1));
    if n == 0 {
        return weights;
    }
    best[0] = 0.0;
    for step in 0..n {
        let u = (0..n)
            .filter(|&i| !in_tree[i])
            .min_by(|&a, &b| best[a].total_cmp(&best[b]))
            .unwrap();
        in_tree[u] = true;
        if step > 0 {
            weights.push(best[u]);
        }
        for v in 0..n {
            if !in_tree[v] {
                best[v] = best[v].min(dist(u, v));
            }
        }
    }
    weights
}

pub fn tent(b: f64, d: f64, x: f64) -> f64 {
    (x - b).min(d - x).max(0.0)
}

/// k-th largest tent value at `x`, k from 1.
pub fn kth_tent(intervals: &[(f64, f64)], k: usize, x: f64) -> f64 {
    let mut v: Vec<f64> = intervals.iter().map(|&(b, d)| tent(b, d, x)).collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v.get(k - 1).copied().unwrap_or(0.0)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        adaptive(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + adaptive(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
}

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = simpson(a, b, fa, fm, fb);
    adaptive(f, a, b, fa, fm, fb, whole, tol, 40)
}

/// `Σ_k ∫ λ_k^p` by quadrature of the direct k-max, split at every point
/// where two tents can cross or bend.
pub fn quadrature_norm_pow(intervals: &[(f64, f64)], p: f64) -> f64 {
    let mut cuts: Vec<f64> = Vec::new();
    for &(b, d) in intervals {
        cuts.extend([b, d, 0.5 * (b + d)]);
        for &(b2, d2) in intervals {
            cuts.push(0.5 * (b + d2));
            cuts.push(0.5 * (b2 + d));
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    (1..=intervals.len())
        .map(|k| {
            let f = move |x: f64| kth_tent(intervals, k, x).powf(p);
            cuts.windows(2)
                .map(|w| integrate(&f, w[0], w[1], 1e-13))
                .sum::<f64>()
        })
        .sum()
}

/// Shape of a generated long-format price file.
#[derive(Debug, Clone)]
pub struct SyntheticMarket {
    pub symbols: usize,
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub seed: u64,
    /// Every `late_every`-th currency lists at a random later date.
    pub late_every: usize,
    /// Chance that a given day is missing from a currency's history.
    pub gap_probability: f64,
}

impl SyntheticMarket {
    pub fn small(seed: u64) -> Self {
        Self {
            symbols: 6,
            start: date(2018, 1, 1),
            end: date(2018, 5, 31),
            seed,
            late_every: 3,
            gap_probability: 0.02,
        }
    }

    /// Log-normal random walks with per-currency drift and volatility, rows
    /// shuffled across symbols by date.
    pub fn write(&self, path: &Path) {
        let mut rng = rng(self.seed);
        let days: Vec<NaiveDate> = self
            .start
            .iter_days()
            .take_while(|d| *d <= self.end)
            .collect();
        let mut rows: Vec<(NaiveDate, String, f64)> = Vec::new();
        for i in 0..self.symbols {
            let symbol = format!("C{i:03}");
            let first = if self.late_every > 0 && i % self.late_every == self.late_every - 1 {
                rng.gen_range(0..days.len() / 2)
            } else {
                0
            };
            let mu = rng.gen_range(-0.003..0.003);
            let sigma = rng.gen_range(0.01..0.08);
            let noise = Normal::new(mu, sigma).unwrap();
            let mut price: f64 = rng.gen_range(0.01..1000.0);
            for &day in &days[first..] {
                price *= f64::exp(noise.sample(&mut rng));
                if rng.gen::<f64>() < self.gap_probability {
                    continue;
                }
                rows.push((day, symbol.clone(), price));
            }
        }
        rows.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
        let mut out = std::io::BufWriter::new(std::fs::File::create(path).unwrap());
        writeln!(out, "date,symbol,close").unwrap();
        for (d, s, p) in rows {
            writeln!(out, "{d},{s},{p}").unwrap();
        }
    }
}

/// Contents of every `.csv` file in `dir`, by file name.
pub fn csv_files(dir: &Path) -> std::collections::BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect()
}

/// `sup_x |λ_k(x) − μ_k(x)|`, checked at every breakpoint of either
/// function (both are piecewise linear).
pub fn landscape_sup_distance(
    a: &tda_portfolio::PersistenceLandscape,
    b: &tda_portfolio::PersistenceLandscape,
    k: usize,
) -> f64 {
    let xs = [a, b]
        .into_iter()
        .filter_map(|l| l.levels().get(k - 1))
        .flat_map(|level| level.iter().map(|&(x, _)| x));
    xs.map(|x| (a.eval(k, x) - b.eval(k, x)).abs())
        .fold(0.0, f64::max)
}
