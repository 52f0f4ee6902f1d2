//! Empirical gap and dependence measures on paired samples of the actual loss
//! `X` and the payout `Y`.

use crate::error::{Error, Result};
use crate::stats;
use serde::{Deserialize, Serialize};

/// Estimates resting on fewer exceedances than this are flagged as noisy.
pub const LOW_COUNT: usize = 100;

/// `n` joint draws of the loss `x` and the payout `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSample {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub seed: u64,
    pub label: String,
}

impl PairedSample {
    pub fn new(x: Vec<f64>, y: Vec<f64>, seed: u64, label: impl Into<String>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::domain(format!(
                "paired sample needs equal lengths, got {} and {}",
                x.len(),
                y.len()
            )));
        }
        if x.is_empty() {
            return Err(Error::domain("paired sample is empty"));
        }
        if let Some(i) = x.iter().chain(&y).position(|v| !v.is_finite()) {
            return Err(Error::domain(format!("non-finite entry at position {i}")));
        }
        Ok(Self {
            x,
            y,
            seed,
            label: label.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Differences `z = x − y`.
    pub fn differences(&self) -> Vec<f64> {
        self.x.iter().zip(&self.y).map(|(a, b)| a - b).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// `E[X − Y | X ≥ s]`
    Mean,
    /// `E[(X − Y)² | X ≥ s]`
    Square,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Mean => "mean",
            Metric::Square => "square",
        }
    }

    #[inline]
    fn apply(self, diff: f64) -> f64 {
        match self {
            Metric::Mean => diff,
            Metric::Square => diff * diff,
        }
    }
}

/// A conditional expectation estimated over `{x ≥ s}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExcessEstimate {
    pub s: f64,
    pub estimate: f64,
    /// Plug-in standard error; `None` when fewer than two points exceed `s`.
    pub std_error: Option<f64>,
    pub n_exceed: usize,
}

impl ExcessEstimate {
    pub fn is_low_count(&self) -> bool {
        self.n_exceed < LOW_COUNT
    }

    fn from_moments(s: f64, n: usize, mean: f64, m2: f64) -> Self {
        let std_error = (n >= 2).then(|| (m2 / (n - 1) as f64).sqrt() / (n as f64).sqrt());
        Self {
            s,
            estimate: mean,
            std_error,
            n_exceed: n,
        }
    }
}

fn conditional_metric(sample: &PairedSample, s: f64, metric: Metric) -> Result<ExcessEstimate> {
    let values: Vec<f64> = sample
        .x
        .iter()
        .zip(&sample.y)
        .filter(|(x, _)| **x >= s)
        .map(|(x, y)| metric.apply(x - y))
        .collect();
    if values.is_empty() {
        return Err(Error::EmptyEstimate(format!("x >= {s}")));
    }
    let n = values.len();
    let mean = stats::mean(&values);
    let m2: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    Ok(ExcessEstimate::from_moments(s, n, mean, m2))
}

/// `E[X − Y | X ≥ s]` with standard error `sd/√n_exceed`.
pub fn conditional_mean_diff(sample: &PairedSample, s: f64) -> Result<ExcessEstimate> {
    conditional_metric(sample, s, Metric::Mean)
}

/// `E[(X − Y)² | X ≥ s]` with standard error `sd/√n_exceed`.
pub fn conditional_sq_diff(sample: &PairedSample, s: f64) -> Result<ExcessEstimate> {
    conditional_metric(sample, s, Metric::Square)
}

/// How the thresholds of a curve are chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdGrid {
    /// Empirical quantile levels of `x`.
    Quantiles(Vec<f64>),
    /// Thresholds in the units of `x`.
    Values(Vec<f64>),
}

impl ThresholdGrid {
    /// Levels 0.50, 0.55, …, 0.95 and 0.99.
    pub fn default_quantiles() -> Self {
        let mut levels: Vec<f64> = (0..10).map(|i| 0.50 + 0.05 * i as f64).collect();
        levels.push(0.99);
        ThresholdGrid::Quantiles(levels)
    }

    /// `count` evenly spaced levels from `lo` to `hi` inclusive.
    pub fn quantile_range(lo: f64, hi: f64, count: usize) -> Self {
        assert!(count >= 2);
        let step = (hi - lo) / (count - 1) as f64;
        ThresholdGrid::Quantiles((0..count).map(|i| lo + step * i as f64).collect())
    }

    fn raw(&self) -> &[f64] {
        match self {
            ThresholdGrid::Quantiles(v) | ThresholdGrid::Values(v) => v,
        }
    }

    fn describe(&self) -> String {
        let raw = self.raw();
        match self {
            ThresholdGrid::Quantiles(_) => format!(
                "empirical quantiles of x at {} levels in [{}, {}]",
                raw.len(),
                raw[0],
                raw[raw.len() - 1]
            ),
            ThresholdGrid::Values(_) => format!("{} fixed thresholds", raw.len()),
        }
    }
}

/// One grid point of a curve; `estimate` is `None` when nothing exceeds `s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub level: Option<f64>,
    pub s: f64,
    pub estimate: Option<ExcessEstimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcessCurve {
    pub metric: Metric,
    pub points: Vec<CurvePoint>,
    pub grid_rule: String,
}

impl ExcessCurve {
    pub fn thresholds(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.s).collect()
    }
}

/// Resolve a grid to `(level, threshold)` pairs with strictly increasing
/// thresholds (quantile levels that collapse onto a tied value are dropped).
fn resolve_grid(sorted_x: &[f64], grid: &ThresholdGrid) -> Result<Vec<(Option<f64>, f64)>> {
    let raw = grid.raw();
    if raw.is_empty() {
        return Err(Error::domain("threshold grid is empty"));
    }
    if raw.windows(2).any(|w| w[1] <= w[0]) || raw.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("threshold grid must be finite and strictly increasing"));
    }
    let mut out: Vec<(Option<f64>, f64)> = Vec::with_capacity(raw.len());
    for &g in raw {
        let point = match grid {
            ThresholdGrid::Quantiles(_) => {
                if !(0.0..=1.0).contains(&g) {
                    return Err(Error::domain(format!("quantile level {g} outside [0, 1]")));
                }
                (Some(g), stats::quantile_sorted(sorted_x, g))
            }
            ThresholdGrid::Values(_) => (None, g),
        };
        if out.last().is_none_or(|last| point.1 > last.1) {
            out.push(point);
        }
    }
    Ok(out)
}

/// Gap-measure curves over a threshold grid for several metrics at once.
///
/// Observations are visited once in decreasing order of `x` with running
/// (Welford) moments, so each grid point costs a binary search.
pub fn excess_curves(
    sample: &PairedSample,
    grid: &ThresholdGrid,
    metrics: &[Metric],
) -> Result<Vec<ExcessCurve>> {
    let mut order: Vec<usize> = (0..sample.len()).collect();
    order.sort_by(|&a, &b| sample.x[b].total_cmp(&sample.x[a]));
    let sorted_desc: Vec<f64> = order.iter().map(|&i| sample.x[i]).collect();
    let sorted_asc: Vec<f64> = sorted_desc.iter().rev().copied().collect();
    let points = resolve_grid(&sorted_asc, grid)?;

    // Number of observations with x >= s for each grid point.
    let counts: Vec<usize> = points
        .iter()
        .map(|&(_, s)| sorted_desc.partition_point(|&v| v >= s))
        .collect();

    let mut curves = Vec::with_capacity(metrics.len());
    for &metric in metrics {
        // Checkpoints sorted by count; grid thresholds increase so counts decrease.
        let mut state = vec![(0.0, 0.0); points.len()];
        let mut pending: Vec<usize> = (0..points.len()).collect();
        let (mut n, mut mean, mut m2) = (0usize, 0.0f64, 0.0f64);
        let mut idx = 0usize;
        while let Some(&p) = pending.last() {
            if counts[p] == n {
                state[p] = (mean, m2);
                pending.pop();
                continue;
            }
            let i = order[idx];
            idx += 1;
            let v = metric.apply(sample.x[i] - sample.y[i]);
            n += 1;
            let delta = v - mean;
            mean += delta / n as f64;
            m2 += delta * (v - mean);
        }
        let curve_points = points
            .iter()
            .enumerate()
            .map(|(p, &(level, s))| CurvePoint {
                level,
                s,
                estimate: (counts[p] > 0)
                    .then(|| ExcessEstimate::from_moments(s, counts[p], state[p].0, state[p].1)),
            })
            .collect();
        curves.push(ExcessCurve {
            metric,
            points: curve_points,
            grid_rule: grid.describe(),
        });
    }
    Ok(curves)
}

/// One gap-measure curve over a threshold grid.
pub fn excess_curve(sample: &PairedSample, grid: &ThresholdGrid, metric: Metric) -> Result<ExcessCurve> {
    Ok(excess_curves(sample, grid, &[metric])?.remove(0))
}

/// Pair counts behind Kendall's tau-b.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KendallCounts {
    /// `n(n−1)/2`.
    pub pairs: u64,
    /// Pairs tied in `x` (including joint ties).
    pub ties_x: u64,
    /// Pairs tied in `y` (including joint ties).
    pub ties_y: u64,
    /// Concordant minus discordant pairs.
    pub concordance: i64,
}

impl KendallCounts {
    /// Tau-b: `(C − D) / √((n₀ − n₁)(n₀ − n₂))`.
    pub fn tau_b(&self) -> Result<f64> {
        let dx = (self.pairs - self.ties_x) as f64;
        let dy = (self.pairs - self.ties_y) as f64;
        if dx == 0.0 || dy == 0.0 {
            return Err(Error::domain("kendall tau undefined: a coordinate is constant"));
        }
        Ok(self.concordance as f64 / (dx * dy).sqrt())
    }
}

fn tied_pairs(run: u64) -> u64 {
    run * run.saturating_sub(1) / 2
}

/// Sum of `t(t−1)/2` over runs of equal keys in a sorted sequence.
fn tie_count<T: PartialEq>(sorted: &[T]) -> u64 {
    let mut total = 0;
    let mut run = 1u64;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            total += tied_pairs(run);
            run = 1;
        }
    }
    total + tied_pairs(run)
}

/// Merge sort counting strict inversions.
fn sort_counting_inversions(values: &mut [f64], buffer: &mut [f64]) -> u64 {
    let n = values.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = {
        let (left, right) = values.split_at_mut(mid);
        let (bl, br) = buffer.split_at_mut(mid);
        sort_counting_inversions(left, bl) + sort_counting_inversions(right, br)
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if values[j] < values[i] {
            buffer[k] = values[j];
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            buffer[k] = values[i];
            i += 1;
        }
        k += 1;
    }
    buffer[k..k + mid - i].copy_from_slice(&values[i..mid]);
    k += mid - i;
    buffer[k..k + n - j].copy_from_slice(&values[j..n]);
    values.copy_from_slice(&buffer[..n]);
    swaps
}

/// Kendall pair counts in O(n log n) (Knight's merge-sort algorithm).
pub fn kendall_counts(x: &[f64], y: &[f64]) -> Result<KendallCounts> {
    if x.len() != y.len() {
        return Err(Error::domain("kendall tau needs equal-length inputs"));
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::domain("kendall tau needs at least two observations"));
    }
    let mut pairs: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let ties_x = tie_count(&xs);
    let joint_ties = tie_count(&pairs);
    let mut ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let mut buffer = vec![0.0; n];
    let discordant = sort_counting_inversions(&mut ys, &mut buffer);
    let ties_y = tie_count(&ys);
    let total = (n as u64) * (n as u64 - 1) / 2;
    let concordance =
        total as i64 - ties_x as i64 - ties_y as i64 + joint_ties as i64 - 2 * discordant as i64;
    Ok(KendallCounts {
        pairs: total,
        ties_x,
        ties_y,
        concordance,
    })
}

/// Kendall's tau-b of the sample.
pub fn kendall_tau(sample: &PairedSample) -> Result<f64> {
    kendall_counts(&sample.x, &sample.y)?.tau_b()
}

/// Kendall's tau-b of a list of pairs.
pub fn kendall_tau_pairs(pairs: &[(f64, f64)]) -> Result<f64> {
    let (x, y): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
    kendall_counts(&x, &y)?.tau_b()
}

/// A conditional relative frequency with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProportionEstimate {
    pub probability: f64,
    pub std_error: f64,
    pub n_conditioning: usize,
}

fn proportion(hits: usize, total: usize, what: &str) -> Result<ProportionEstimate> {
    if total == 0 {
        return Err(Error::EmptyEstimate(what.to_string()));
    }
    let p = hits as f64 / total as f64;
    Ok(ProportionEstimate {
        probability: p,
        std_error: (p * (1.0 - p) / total as f64).sqrt(),
        n_conditioning: total,
    })
}

/// Empirical `π₊ = P(θ ≥ t₀ | X ≥ x₀)`.
///
/// The trigger threshold `t0` is expressed on the `y` scale; because the payout
/// is an increasing function of θ, `{y ≥ φ(t₀)}` is the trigger event.
pub fn pi_plus_empirical(sample: &PairedSample, t0: f64, x0: f64) -> Result<ProportionEstimate> {
    let (mut total, mut hits) = (0usize, 0usize);
    for (&x, &y) in sample.x.iter().zip(&sample.y) {
        if x >= x0 {
            total += 1;
            hits += usize::from(y >= t0);
        }
    }
    proportion(hits, total, &format!("x >= {x0}"))
}

/// Empirical `π₋ = P(θ < t₀ | X < x₀)`, with `t0` on the `y` scale.
pub fn pi_minus_empirical(sample: &PairedSample, t0: f64, x0: f64) -> Result<ProportionEstimate> {
    let (mut total, mut hits) = (0usize, 0usize);
    for (&x, &y) in sample.x.iter().zip(&sample.y) {
        if x < x0 {
            total += 1;
            hits += usize::from(y < t0);
        }
    }
    proportion(hits, total, &format!("x < {x0}"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailDependenceEstimate {
    pub level: f64,
    pub lambda: f64,
    pub n_joint: usize,
    /// `n·u < 50`: too few tail points for a stable estimate.
    pub high_variance: bool,
}

fn upper_quantile(values: &[f64], level: f64) -> f64 {
    let mut copy = values.to_vec();
    let pos = level * (copy.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let frac = pos - lo as f64;
    let (_, &mut a, rest) = copy.select_nth_unstable_by(lo, f64::total_cmp);
    if frac == 0.0 || rest.is_empty() {
        return a;
    }
    let b = rest.iter().copied().fold(f64::INFINITY, f64::min);
    a + frac * (b - a)
}

/// `λ̂(u) = #{x > q_x(1−u), y > q_y(1−u)} / (n u)`.
pub fn upper_tail_dep_empirical(sample: &PairedSample, u: f64) -> Result<TailDependenceEstimate> {
    if !(u > 0.0 && u <= 0.5) {
        return Err(Error::domain(format!("tail level must lie in (0, 0.5], got {u}")));
    }
    let n = sample.len();
    let qx = upper_quantile(&sample.x, 1.0 - u);
    let qy = upper_quantile(&sample.y, 1.0 - u);
    let n_joint = sample
        .x
        .iter()
        .zip(&sample.y)
        .filter(|(x, y)| **x > qx && **y > qy)
        .count();
    Ok(TailDependenceEstimate {
        level: u,
        lambda: n_joint as f64 / (n as f64 * u),
        n_joint,
        high_variance: (n as f64) * u < 50.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionBin {
    pub x_lower: f64,
    pub x_upper: f64,
    /// Mean of `x` inside the bin.
    pub center: f64,
    pub mean_y: f64,
    pub std_error: f64,
    pub n: usize,
}

/// Binned estimate of `ψ(x) = E[Y | X = x]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinnedRegression {
    pub bins: Vec<RegressionBin>,
}

impl BinnedRegression {
    /// Piecewise-linear interpolation between bin centers, flat outside.
    pub fn eval(&self, x: f64) -> f64 {
        let bins = &self.bins;
        if x <= bins[0].center {
            return bins[0].mean_y;
        }
        let last = bins[bins.len() - 1];
        if x >= last.center {
            return last.mean_y;
        }
        let k = bins.partition_point(|b| b.center <= x);
        let (a, b) = (bins[k - 1], bins[k]);
        let t = (x - a.center) / (b.center - a.center);
        a.mean_y + t * (b.mean_y - a.mean_y)
    }
}

/// Equal-count quantile bins of `x` with the mean of `y` in each; bins with
/// fewer than two points are merged into their neighbor.
pub fn conditional_mean_regression(sample: &PairedSample, n_bins: usize) -> Result<BinnedRegression> {
    if n_bins < 2 {
        return Err(Error::domain("need at least two bins"));
    }
    let n = sample.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| sample.x[a].total_cmp(&sample.x[b]));
    let mut ranges: Vec<(usize, usize)> = (0..n_bins)
        .map(|b| (b * n / n_bins, (b + 1) * n / n_bins))
        .filter(|(lo, hi)| hi > lo)
        .collect();
    // Merge undersized bins into the following (or, for the last, preceding) one.
    let mut i = 0;
    while i < ranges.len() {
        if ranges[i].1 - ranges[i].0 < 2 && ranges.len() > 1 {
            if i + 1 < ranges.len() {
                ranges[i + 1].0 = ranges[i].0;
            } else {
                ranges[i - 1].1 = ranges[i].1;
            }
            ranges.remove(i);
        } else {
            i += 1;
        }
    }
    if ranges.len() == 1 && ranges[0].1 - ranges[0].0 < 2 {
        return Err(Error::domain("need at least two observations"));
    }
    let bins = ranges
        .into_iter()
        .map(|(lo, hi)| {
            let idx = &order[lo..hi];
            let xs: Vec<f64> = idx.iter().map(|&i| sample.x[i]).collect();
            let ys: Vec<f64> = idx.iter().map(|&i| sample.y[i]).collect();
            let m = ys.len();
            RegressionBin {
                x_lower: xs[0],
                x_upper: xs[m - 1],
                center: stats::mean(&xs),
                mean_y: stats::mean(&ys),
                std_error: (stats::variance(&ys) / m as f64).sqrt(),
                n: m,
            }
        })
        .collect();
    Ok(BinnedRegression { bins })
}
