//! Simulation experiments: the heavy-tailed main setting, the three
//! benchmarks and the figure tables built from them.
//!
//! Every experiment cell draws from its own sub-stream, derived from the
//! master seed and a cell label, and large samples are generated in
//! fixed-size chunks with one stream per chunk. Output is therefore identical
//! for any thread count.

use crate::copulas::{self, CopulaSpec, Family};
use crate::error::{Error, Result};
use crate::gaussian_oracle::{sample_bivariate_gaussian, GaussianPairSpec};
use crate::margins::{Moment, ParetoSpec, PayoffTransform, TransformedParetoSpec};
use crate::rng::{self, StreamRng};
use crate::special;
use crate::stats;
use crate::tail_metrics::{excess_curves, ExcessCurve, Metric, PairedSample, ThresholdGrid};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

const CHUNK: usize = 1 << 18;

/// Smallest sample the experiments accept.
pub const MIN_SAMPLE: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MainSettingConfig {
    /// Pareto scale `u` shared by both parameters θ and θ′.
    pub scale: f64,
    /// Pareto shape `b` of the payout parameter θ.
    pub shape: f64,
    /// Payout transform `Y = e^α θ^β`.
    pub alpha: f64,
    pub beta: f64,
    /// Pareto shape of the loss parameter θ′.
    pub loss_shape: f64,
    /// Loss transform `X = e^α′ θ′^β′`.
    pub loss_alpha: f64,
    pub loss_beta: f64,
    pub family: Family,
    pub tau: f64,
    pub n: usize,
    pub seed: u64,
}

impl Default for MainSettingConfig {
    fn default() -> Self {
        Self {
            scale: 7e4,
            shape: 0.7,
            alpha: 9.59,
            beta: 0.5,
            loss_shape: 1.3,
            loss_alpha: 9.59,
            loss_beta: 0.5,
            family: Family::Frank,
            tau: 0.3,
            n: 1_000_000,
            seed: 1,
        }
    }
}

impl MainSettingConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("scale", self.scale),
            ("shape", self.shape),
            ("beta", self.beta),
            ("loss_shape", self.loss_shape),
            ("loss_beta", self.loss_beta),
        ];
        for (field, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::config(field, format!("must be positive, got {value}")));
            }
        }
        for (field, value) in [("alpha", self.alpha), ("loss_alpha", self.loss_alpha)] {
            if !value.is_finite() {
                return Err(Error::config(field, "must be finite"));
            }
        }
        if self.family.has_parameter() && !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::config("tau", format!("must lie in (0, 1), got {}", self.tau)));
        }
        if self.n < MIN_SAMPLE {
            return Err(Error::config("n", format!("must be at least {MIN_SAMPLE}, got {}", self.n)));
        }
        if self.loss_shape >= self.shape / self.beta {
            return Err(Error::config(
                "loss_shape",
                format!(
                    "must be below shape/beta = {}, got {}",
                    self.shape / self.beta,
                    self.loss_shape
                ),
            ));
        }
        Ok(())
    }

    pub fn payout(&self) -> TransformedParetoSpec {
        TransformedParetoSpec {
            base: ParetoSpec {
                scale: self.scale,
                shape: self.shape,
            },
            transform: PayoffTransform {
                intercept: self.alpha,
                exponent: self.beta,
            },
        }
    }

    pub fn loss(&self) -> TransformedParetoSpec {
        TransformedParetoSpec {
            base: ParetoSpec {
                scale: self.scale,
                shape: self.loss_shape,
            },
            transform: PayoffTransform {
                intercept: self.loss_alpha,
                exponent: self.loss_beta,
            },
        }
    }

    pub fn copula(&self) -> Result<CopulaSpec> {
        if self.family.has_parameter() {
            CopulaSpec::from_tau(self.family, self.tau)
        } else {
            CopulaSpec::new(self.family, None)
        }
    }

    pub fn label(&self) -> String {
        if self.family.has_parameter() {
            format!("main/{}/tau={}", self.family, self.tau)
        } else {
            format!("main/{}", self.family)
        }
    }

    fn describe(&self) -> String {
        format!(
            "u={}, b={}, alpha={}, beta={}, loss_shape={}, loss_beta={}",
            self.scale, self.shape, self.alpha, self.beta, self.loss_shape, self.loss_beta
        )
    }
}

/// Fill `n` draws in chunks, each from its own sub-stream of `(seed, label)`,
/// in parallel. `draw` produces one chunk of the requested length.
fn chunked<T, F>(n: usize, seed: u64, label: &str, draw: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &mut StreamRng) -> Result<Vec<T>> + Sync,
{
    let chunks = n.div_ceil(CHUNK);
    let parts: Result<Vec<Vec<T>>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let len = CHUNK.min(n - c * CHUNK);
            let mut rng = rng::stream(seed, rng::stream_id_for(&format!("{label}#{c}")));
            draw(len, &mut rng)
        })
        .collect();
    Ok(parts?.into_iter().flatten().collect())
}

/// Loss/payout pairs of the main setting: `(θ, θ′)` are linked by the copula,
/// `Y = e^α θ^β` and `X = e^α′ θ′^β′`.
pub fn run_main_setting(cfg: &MainSettingConfig) -> Result<PairedSample> {
    cfg.validate()?;
    let copula = cfg.copula()?;
    let label = cfg.label();
    let (payout, loss) = (cfg.payout(), cfg.loss());
    let pairs = chunked(cfg.n, cfg.seed, &label, |len, rng| {
        let uv = copulas::sample_copula_with(&copula, len, rng)?;
        Ok(uv
            .into_iter()
            .map(|(u, v)| {
                let theta = payout.base.quantile_unchecked(u);
                let theta_loss = loss.base.quantile_unchecked(v);
                (
                    loss.transform.apply_unchecked(theta_loss),
                    payout.transform.apply_unchecked(theta),
                )
            })
            .collect())
    })?;
    let (x, y) = pairs.into_iter().unzip();
    PairedSample::new(x, y, cfg.seed, label)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Benchmark {
    /// `X = Y + ε`, Gaussian ε.
    B1,
    /// `log X = log Y + ε`, Gaussian ε.
    B2,
    /// `(X, Y)` bivariate Gaussian.
    B3,
}

impl Benchmark {
    pub const ALL: [Benchmark; 3] = [Benchmark::B1, Benchmark::B2, Benchmark::B3];
}

impl fmt::Display for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Benchmark::B1 => "B1",
            Benchmark::B2 => "B2",
            Benchmark::B3 => "B3",
        })
    }
}

impl FromStr for Benchmark {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "B1" => Ok(Benchmark::B1),
            "B2" => Ok(Benchmark::B2),
            "B3" => Ok(Benchmark::B3),
            _ => Err(Error::config("benchmark", format!("unknown setting {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub setting: Benchmark,
    /// Correlation for B3.
    pub rho: Option<f64>,
    /// Noise variance for B1/B2; matched to the main setting when `None`.
    pub noise_variance: Option<f64>,
    pub n: usize,
    pub seed: u64,
}

fn finite_moment(m: Moment, what: &str, base: &MainSettingConfig) -> Result<f64> {
    m.finite().ok_or_else(|| {
        Error::InfiniteMoment(format!("{what} is infinite for the main setting ({})", base.describe()))
    })
}

/// Analytic mean and variance of `(X, Y)` in the main setting.
pub fn main_moments(base: &MainSettingConfig) -> Result<((f64, f64), (f64, f64))> {
    let loss = base.loss();
    let payout = base.payout();
    let mx = finite_moment(loss.mean(), "E[X]", base)?;
    let vx = finite_moment(loss.variance(), "Var(X)", base)?;
    let my = finite_moment(payout.mean(), "E[Y]", base)?;
    let vy = finite_moment(payout.variance(), "Var(Y)", base)?;
    Ok(((mx, vx), (my, vy)))
}

/// `σ₁²` with `Var(Y) + σ₁² = Var(X_main)`.
pub fn b1_noise_variance(base: &MainSettingConfig) -> Result<f64> {
    let ((_, vx), (_, vy)) = main_moments(base)?;
    let s2 = vx - vy;
    if !(s2 > 0.0) {
        return Err(Error::config(
            "benchmark",
            format!("B1 needs Var(X) > Var(Y), got {vx:e} and {vy:e}"),
        ));
    }
    Ok(s2)
}

/// `σ₂²` with `E[Y²]e^{2σ²} − E[Y]²e^{σ²} = Var(X_main)`.
pub fn b2_noise_variance(base: &MainSettingConfig) -> Result<f64> {
    let ((_, vx), (my, vy)) = main_moments(base)?;
    let m2 = vy + my * my;
    // Relative form keeps the root finder on an O(1) scale.
    let f = |s2: f64| (m2 * (2.0 * s2).exp() - my * my * s2.exp()) / vx - 1.0;
    if f(0.0) >= 0.0 {
        return Err(Error::config(
            "benchmark",
            format!("B2 needs Var(X) > Var(Y), got {vx:e} and {vy:e}"),
        ));
    }
    if f(10.0) < 0.0 {
        return Err(Error::Numerical("B2 noise variance exceeds 10".into()));
    }
    special::find_root(f, 0.0, 10.0, 1e-10)
}

/// Draw one of the benchmark settings calibrated to `base`.
pub fn run_benchmark(cfg: &BenchmarkConfig, base: &MainSettingConfig) -> Result<PairedSample> {
    if cfg.n < MIN_SAMPLE {
        return Err(Error::config("n", format!("must be at least {MIN_SAMPLE}, got {}", cfg.n)));
    }
    let label = match cfg.setting {
        Benchmark::B3 => format!("{}/rho={}", cfg.setting, cfg.rho.unwrap_or(f64::NAN)),
        _ => cfg.setting.to_string(),
    };
    let payout = base.payout();
    let (x, y): (Vec<f64>, Vec<f64>) = match cfg.setting {
        Benchmark::B1 | Benchmark::B2 => {
            let variance = match cfg.noise_variance {
                Some(v) if v >= 0.0 && v.is_finite() => v,
                Some(v) => {
                    return Err(Error::config("noise_variance", format!("must be >= 0, got {v}")))
                }
                None if cfg.setting == Benchmark::B1 => b1_noise_variance(base)?,
                None => b2_noise_variance(base)?,
            };
            let sd = variance.sqrt();
            let additive = cfg.setting == Benchmark::B1;
            chunked(cfg.n, cfg.seed, &label, |len, rng| {
                Ok((0..len)
                    .map(|_| {
                        let theta = payout.base.quantile_unchecked(rng::open01(rng));
                        let y = payout.transform.apply_unchecked(theta);
                        let eps: f64 = StandardNormal.sample(rng);
                        let x = if additive { y + sd * eps } else { y * (sd * eps).exp() };
                        (x, y)
                    })
                    .collect())
            })?
            .into_iter()
            .unzip()
        }
        Benchmark::B3 => {
            let rho = cfg
                .rho
                .ok_or_else(|| Error::config("rho", "B3 needs a correlation"))?;
            let ((mx, vx), (my, vy)) = main_moments(base)?;
            let spec = GaussianPairSpec::new(mx, my, vx.sqrt(), vy.sqrt(), rho)?;
            let seed = cfg.seed ^ rng::stream_id_for(&label);
            let sample = sample_bivariate_gaussian(&spec, cfg.n, seed)?;
            (sample.x, sample.y)
        }
    };
    PairedSample::new(x, y, cfg.seed, label)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioPoint {
    pub level: Option<f64>,
    pub s_model: f64,
    pub s_benchmark: f64,
    /// Model over benchmark; `None` where the benchmark point is missing, zero
    /// or rests on too few exceedances.
    pub ratio: Option<f64>,
    /// Delta-method standard error of the ratio.
    pub std_error: Option<f64>,
    pub n_exceed: usize,
}

/// Pointwise ratio of two curves computed on the same quantile grid.
pub fn ratio_curves(model: &ExcessCurve, benchmark: &ExcessCurve) -> Result<Vec<RatioPoint>> {
    let same_grid = model.points.len() == benchmark.points.len()
        && model
            .points
            .iter()
            .zip(&benchmark.points)
            .all(|(a, b)| a.level.is_some() && a.level == b.level);
    if !same_grid {
        return Err(Error::domain("ratio needs curves on the same quantile grid"));
    }
    Ok(model
        .points
        .iter()
        .zip(&benchmark.points)
        .map(|(m, b)| {
            let usable = |p: &Option<crate::tail_metrics::ExcessEstimate>| {
                p.filter(|e| !e.is_low_count() && e.estimate != 0.0)
            };
            let (ratio, std_error) = match (m.estimate, usable(&b.estimate)) {
                (Some(me), Some(be)) => {
                    let r = me.estimate / be.estimate;
                    let se = match (me.std_error, be.std_error) {
                        (Some(sm), Some(sb)) if me.estimate != 0.0 => {
                            Some(r.abs() * ((sm / me.estimate).powi(2) + (sb / be.estimate).powi(2)).sqrt())
                        }
                        _ => None,
                    };
                    (Some(r), se)
                }
                _ => (None, None),
            };
            RatioPoint {
                level: m.level,
                s_model: m.s,
                s_benchmark: b.s,
                ratio,
                std_error,
                n_exceed: m.estimate.map_or(0, |e| e.n_exceed),
            }
        })
        .collect())
}

/// Least-squares slope of a curve's estimates against its thresholds.
pub fn curve_slope(curve: &ExcessCurve) -> Result<f64> {
    let (s, e): (Vec<f64>, Vec<f64>) = curve
        .points
        .iter()
        .filter_map(|p| p.estimate.map(|e| (p.s, e.estimate)))
        .unzip();
    if s.len() < 2 {
        return Err(Error::domain("slope needs at least two estimated points"));
    }
    Ok(stats::ols(&s, &e).1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Figure {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
}

impl Figure {
    pub const ALL: [Figure; 4] = [Figure::Fig1, Figure::Fig2, Figure::Fig3, Figure::Fig4];

    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig1 => "fig1",
            Figure::Fig2 => "fig2",
            Figure::Fig3 => "fig3",
            Figure::Fig4 => "fig4",
        }
    }

    /// The model family compared against the benchmarks.
    fn ratio_family(self) -> Option<Family> {
        match self {
            Figure::Fig1 => None,
            Figure::Fig2 => Some(Family::ClaytonSurvival),
            Figure::Fig3 => Some(Family::Gumbel),
            Figure::Fig4 => Some(Family::Frank),
        }
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Figure::ALL
            .into_iter()
            .find(|fig| fig.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::config("figure", format!("unknown figure {s:?}, expected fig1..fig4")))
    }
}

/// Dependence levels shared by the figures: τ for copulas, ρ for B3.
pub const FIGURE_LEVELS: [f64; 3] = [0.3, 0.5, 0.7];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureRow {
    pub family: String,
    pub tau_or_rho: f64,
    pub quantile: Option<f64>,
    pub s: f64,
    pub estimate: Option<f64>,
    pub std_error: Option<f64>,
    pub n_exceed: usize,
}

/// One panel of a figure, keyed by name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureTable {
    pub name: String,
    pub rows: Vec<FigureRow>,
}

fn curve_rows(family: &str, level: f64, curve: &ExcessCurve) -> Vec<FigureRow> {
    curve
        .points
        .iter()
        .map(|p| FigureRow {
            family: family.to_string(),
            tau_or_rho: level,
            quantile: p.level,
            s: p.s,
            estimate: p.estimate.map(|e| e.estimate),
            std_error: p.estimate.and_then(|e| e.std_error),
            n_exceed: p.estimate.map_or(0, |e| e.n_exceed),
        })
        .collect()
}

/// Every table a figure needs, with `base` supplying the margins, `n` and the
/// master seed (its family and τ are overridden per cell).
pub fn figure_suite(which: Figure, base: &MainSettingConfig, grid: &ThresholdGrid) -> Result<Vec<FigureTable>> {
    let metrics = [Metric::Mean, Metric::Square];
    type Cells = Vec<(f64, Vec<ExcessCurve>)>;
    let model_curves = |family: Family| -> Result<Cells> {
        FIGURE_LEVELS
            .par_iter()
            .map(|&tau| {
                let cfg = MainSettingConfig {
                    family,
                    tau,
                    ..base.clone()
                };
                let sample = run_main_setting(&cfg)?;
                Ok((tau, excess_curves(&sample, grid, &metrics)?))
            })
            .collect()
    };

    let mut tables: Vec<FigureTable> = metrics
        .iter()
        .map(|m| FigureTable {
            name: format!("{which}_{}", m.name()),
            rows: Vec::new(),
        })
        .collect();

    match which.ratio_family() {
        None => {
            let per_family: Vec<(Family, Cells)> = Family::STUDY
                .par_iter()
                .map(|&f| Ok((f, model_curves(f)?)))
                .collect::<Result<_>>()?;
            for (family, cells) in per_family {
                for (tau, curves) in cells {
                    for (table, curve) in tables.iter_mut().zip(&curves) {
                        table.rows.extend(curve_rows(family.name(), tau, curve));
                    }
                }
            }
        }
        Some(family) => {
            main_moments(base)?;
            let models = model_curves(family)?;
            let benchmark_cell = |setting: Benchmark, rho: Option<f64>| -> Result<Vec<ExcessCurve>> {
                let cfg = BenchmarkConfig {
                    setting,
                    rho,
                    noise_variance: None,
                    n: base.n,
                    seed: base.seed,
                };
                excess_curves(&run_benchmark(&cfg, base)?, grid, &metrics)
            };
            let jobs: Vec<(Benchmark, Option<f64>)> = [(Benchmark::B1, None), (Benchmark::B2, None)]
                .into_iter()
                .chain(FIGURE_LEVELS.iter().map(|&r| (Benchmark::B3, Some(r))))
                .collect();
            let benchmarks: Vec<Vec<ExcessCurve>> = jobs
                .par_iter()
                .map(|&(setting, rho)| benchmark_cell(setting, rho))
                .collect::<Result<_>>()?;
            for (tau, model) in &models {
                for ((setting, rho), bench) in jobs.iter().zip(&benchmarks) {
                    // B3 is compared at ρ equal to the model's τ.
                    if rho.is_some_and(|r| r != *tau) {
                        continue;
                    }
                    let label = format!("{}/{}", family.name(), setting);
                    for (k, table) in tables.iter_mut().enumerate() {
                        let ratios = ratio_curves(&model[k], &bench[k])?;
                        table.rows.extend(ratios.into_iter().map(|r| FigureRow {
                            family: label.clone(),
                            tau_or_rho: *tau,
                            quantile: r.level,
                            s: r.s_model,
                            estimate: r.ratio,
                            std_error: r.std_error,
                            n_exceed: r.n_exceed,
                        }));
                    }
                }
            }
        }
    }
    Ok(tables)
}
