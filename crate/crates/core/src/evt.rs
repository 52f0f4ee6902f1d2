//! Peaks over threshold: generalized Pareto fitting and diagnostics.

use crate::error::{Error, Result};
use crate::rng;
use crate::stats;
use crate::tail_metrics::PairedSample;
use serde::{Deserialize, Serialize};

/// Fits are refused below this many excesses.
pub const MIN_EXCESSES: usize = 30;

const GOLDEN_TOL: f64 = 1e-10;
const GOLDEN_MAX_ITER: usize = 500;
// Coarse scan of the profile variable before golden-section refinement.
const SCAN_RANGE: (f64, f64) = (-25.0, 25.0);
const SCAN_STEP: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpdFit {
    pub threshold: f64,
    pub gamma: f64,
    pub sigma: f64,
    pub n_excess: usize,
    pub log_likelihood: f64,
    /// Observed-information standard errors of `(γ̂, σ̂)`; `None` when the
    /// information matrix is not positive definite at the optimum.
    pub std_errors: Option<(f64, f64)>,
}

/// `log1p(γy)/γ`, continuous through `γ = 0`.
#[inline]
fn log1p_over(gamma: f64, y: f64) -> f64 {
    let t = gamma * y;
    if t.abs() < 1e-10 {
        y * (1.0 - 0.5 * t)
    } else {
        t.ln_1p() / gamma
    }
}

/// GPD survival `(1 + γx/σ)^(−1/γ)`, or `exp(−x/σ)` at `γ = 0`.
pub fn gpd_survival(x: f64, gamma: f64, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) || !x.is_finite() || !gamma.is_finite() {
        return Err(Error::domain(format!("invalid GPD arguments x={x}, γ={gamma}, σ={sigma}")));
    }
    if x < 0.0 {
        return Err(Error::domain(format!("GPD excess must be non-negative, got {x}")));
    }
    if gamma < 0.0 && x >= -sigma / gamma {
        return Err(Error::domain(format!("x = {x} beyond the GPD endpoint {}", -sigma / gamma)));
    }
    Ok((-log1p_over(gamma, x / sigma)).exp())
}

/// GPD quantile of the excess distribution.
pub fn gpd_quantile(p: f64, gamma: f64, sigma: f64) -> f64 {
    let tail = (1.0 - p).ln();
    if gamma.abs() < 1e-12 {
        -sigma * tail
    } else {
        sigma * (-gamma * tail).exp_m1() / gamma
    }
}

/// `n` GPD excesses by inversion from stream 0 of `seed`.
pub fn sample_gpd(n: usize, gamma: f64, sigma: f64, seed: u64) -> Result<Vec<f64>> {
    if n == 0 || !(sigma > 0.0) || !gamma.is_finite() {
        return Err(Error::domain("sample_gpd needs n > 0, σ > 0 and finite γ"));
    }
    let mut rng = rng::stream(seed, 0);
    Ok((0..n)
        .map(|_| gpd_quantile(rng::open01(&mut rng), gamma, sigma))
        .collect())
}

/// GPD log-likelihood of the excesses; `−∞` outside the support.
pub fn gpd_log_likelihood(excesses: &[f64], gamma: f64, sigma: f64) -> f64 {
    if !(sigma > 0.0) {
        return f64::NEG_INFINITY;
    }
    let mut total = 0.0;
    for &x in excesses {
        let y = x / sigma;
        if 1.0 + gamma * y <= 0.0 {
            return f64::NEG_INFINITY;
        }
        // (1 + 1/γ) log1p(γy) = log1p(γy)/γ + log1p(γy)
        total -= log1p_over(gamma, y) + (gamma * y).ln_1p();
    }
    total - excesses.len() as f64 * sigma.ln()
}

/// Profile likelihood in the Grimshaw variable `θ = γ/σ`, which the search
/// reaches through `φ = ln(1 + θ·max)` so that the whole real line is feasible.
struct Profile<'a> {
    excesses: &'a [f64],
    max: f64,
}

impl Profile<'_> {
    fn theta(&self, phi: f64) -> f64 {
        phi.exp_m1() / self.max
    }

    /// Returns `(γ(θ), σ(θ), profile log-likelihood)`.
    fn eval(&self, phi: f64) -> (f64, f64, f64) {
        let theta = self.theta(phi);
        let n = self.excesses.len() as f64;
        // γ(θ) = mean log(1 + θx); σ(θ) = γ/θ = mean log1p(θx)/θ.
        let sigma = self.excesses.iter().map(|&x| log1p_over(theta, x)).sum::<f64>() / n;
        let gamma = sigma * theta;
        // Likelihoods beyond γ = −1 are unbounded; exclude that region.
        let value = if gamma < -1.0 || !(sigma > 0.0) {
            f64::NEG_INFINITY
        } else {
            -n * (sigma.ln() + gamma + 1.0)
        };
        (gamma, sigma, value)
    }
}

fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> Result<f64> {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..GOLDEN_MAX_ITER {
        if (b - a).abs() < GOLDEN_TOL {
            return Ok(0.5 * (a + b));
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    Err(Error::Numerical(format!(
        "golden section did not converge: bracket [{a}, {b}] after {GOLDEN_MAX_ITER} iterations"
    )))
}

/// Observed information by central differences, inverted for standard errors.
fn observed_std_errors(excesses: &[f64], gamma: f64, sigma: f64) -> Option<(f64, f64)> {
    let f = |g: f64, s: f64| gpd_log_likelihood(excesses, g, s);
    let hg = 1e-4 * gamma.abs().max(0.1);
    let hs = 1e-4 * sigma;
    let f0 = f(gamma, sigma);
    let gg = (f(gamma + hg, sigma) - 2.0 * f0 + f(gamma - hg, sigma)) / (hg * hg);
    let ss = (f(gamma, sigma + hs) - 2.0 * f0 + f(gamma, sigma - hs)) / (hs * hs);
    let gs = (f(gamma + hg, sigma + hs) - f(gamma + hg, sigma - hs) - f(gamma - hg, sigma + hs)
        + f(gamma - hg, sigma - hs))
        / (4.0 * hg * hs);
    // Information = −Hessian.
    let (a, b, c) = (-gg, -gs, -ss);
    let det = a * c - b * b;
    if !(a > 0.0 && det > 0.0) || !det.is_finite() {
        return None;
    }
    Some(((c / det).sqrt(), (a / det).sqrt()))
}

/// Maximum-likelihood GPD fit to positive excesses (threshold reported as 0).
pub fn fit_gpd(excesses: &[f64]) -> Result<GpdFit> {
    if excesses.len() < MIN_EXCESSES {
        return Err(Error::domain(format!(
            "need at least {MIN_EXCESSES} excesses, got {}",
            excesses.len()
        )));
    }
    if let Some(bad) = excesses.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
        return Err(Error::domain(format!("excesses must be positive and finite, got {bad}")));
    }
    let min = excesses.iter().copied().fold(f64::INFINITY, f64::min);
    let max = excesses.iter().copied().fold(0.0, f64::max);
    if max == min {
        return Err(Error::Degenerate(format!("all {} excesses equal {max}", excesses.len())));
    }
    let profile = Profile { excesses, max };

    let steps = ((SCAN_RANGE.1 - SCAN_RANGE.0) / SCAN_STEP).round() as usize;
    let (mut best_phi, mut best_value) = (0.0, f64::NEG_INFINITY);
    for i in 0..=steps {
        let phi = SCAN_RANGE.0 + i as f64 * SCAN_STEP;
        let value = profile.eval(phi).2;
        if value > best_value {
            best_value = value;
            best_phi = phi;
        }
    }
    if !best_value.is_finite() {
        return Err(Error::Numerical("profile likelihood is not finite anywhere on the scan".into()));
    }
    let phi = golden_max(|p| profile.eval(p).2, best_phi - SCAN_STEP, best_phi + SCAN_STEP)?;
    let (gamma, sigma, _) = profile.eval(phi);
    if !(gamma.is_finite() && sigma > 0.0) {
        return Err(Error::Numerical(format!(
            "fit left the admissible region: γ={gamma}, σ={sigma}, profile variable {phi}"
        )));
    }
    let log_likelihood = gpd_log_likelihood(excesses, gamma, sigma);
    Ok(GpdFit {
        threshold: 0.0,
        gamma,
        sigma,
        n_excess: excesses.len(),
        log_likelihood,
        std_errors: observed_std_errors(excesses, gamma, sigma),
    })
}

fn fit_above(values: &[f64], threshold: f64) -> Result<GpdFit> {
    let excesses: Vec<f64> = values
        .iter()
        .filter(|&&v| v > threshold)
        .map(|&v| v - threshold)
        .collect();
    let mut fit = fit_gpd(&excesses)?;
    fit.threshold = threshold;
    Ok(fit)
}

/// GPD fit to the excesses over the empirical `quantile_level` quantile.
pub fn pot_fit(values: &[f64], quantile_level: f64) -> Result<GpdFit> {
    if !(quantile_level > 0.5 && quantile_level < 1.0) {
        return Err(Error::domain(format!(
            "quantile level must lie in (0.5, 1), got {quantile_level}"
        )));
    }
    if values.is_empty() {
        return Err(Error::domain("no values to fit"));
    }
    fit_above(values, stats::quantile(values, quantile_level))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QqPoint {
    pub theoretical: f64,
    pub empirical: f64,
}

/// Sorted excesses against exponential quantiles `−x̄ log(1 − i/(n+1))`.
pub fn qq_exponential(excesses: &[f64]) -> Result<Vec<QqPoint>> {
    if excesses.len() < 2 {
        return Err(Error::domain("QQ plot needs at least two excesses"));
    }
    let sorted = stats::sorted_copy(excesses);
    let mean = stats::mean(&sorted);
    let n = sorted.len() as f64;
    Ok(sorted
        .iter()
        .enumerate()
        .map(|(i, &e)| QqPoint {
            theoretical: -mean * (-((i + 1) as f64) / (n + 1.0)).ln_1p(),
            empirical: e,
        })
        .collect())
}

/// POT fit on `z = x − y`. The threshold is the empirical quantile of `z`,
/// floored at zero so that only the positive part of the gap enters.
pub fn tail_index_of_difference(sample: &PairedSample, quantile_level: f64) -> Result<GpdFit> {
    if !(quantile_level > 0.5 && quantile_level < 1.0) {
        return Err(Error::domain(format!(
            "quantile level must lie in (0.5, 1), got {quantile_level}"
        )));
    }
    let z = sample.differences();
    fit_above(&z, stats::quantile(&z, quantile_level).max(0.0))
}
