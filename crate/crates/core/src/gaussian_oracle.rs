//! Closed-form gap measures for a bivariate Gaussian loss/payout pair.
//!
//! With `k = ρσ_Y/σ_X`, the regression of the payout on the loss is
//! `Y = μ_Y + k(X − μ_X) + ε` where `ε ~ N(0, σ_Y²(1−ρ²))` is independent of
//! `X`. Every conditional moment on `{X ≥ s}` follows from the truncated
//! moments of `X`, which only need the standard normal hazard.

use crate::error::{Error, Result};
use crate::rng;
use crate::special;
use crate::tail_metrics::PairedSample;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianPairSpec {
    pub mu_x: f64,
    pub mu_y: f64,
    pub sigma_x: f64,
    pub sigma_y: f64,
    /// Correlation; `±1` is accepted for the degenerate (perfectly linked) pair.
    pub rho: f64,
}

impl GaussianPairSpec {
    pub fn new(mu_x: f64, mu_y: f64, sigma_x: f64, sigma_y: f64, rho: f64) -> Result<Self> {
        let spec = Self {
            mu_x,
            mu_y,
            sigma_x,
            sigma_y,
            rho,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if ![self.mu_x, self.mu_y, self.sigma_x, self.sigma_y, self.rho]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(Error::domain("gaussian pair parameters must be finite"));
        }
        if self.sigma_x <= 0.0 || self.sigma_y <= 0.0 {
            return Err(Error::domain("standard deviations must be positive"));
        }
        if self.rho.abs() > 1.0 {
            return Err(Error::domain(format!("correlation {} outside [-1, 1]", self.rho)));
        }
        Ok(())
    }

    /// Regression slope `k = ρσ_Y/σ_X` of the payout on the loss.
    pub fn slope(&self) -> f64 {
        self.rho * self.sigma_y / self.sigma_x
    }

    fn standardized(&self, s: f64) -> f64 {
        (s - self.mu_x) / self.sigma_x
    }

    fn residual_variance(&self) -> f64 {
        self.sigma_y * self.sigma_y * (1.0 - self.rho * self.rho)
    }
}

/// Hazard rate `φ(z)/(σ Φ̄(z))` with `z = (s−μ)/σ` of `N(μ, σ²)` at `s`.
pub fn gaussian_hazard(s: f64, mu: f64, variance: f64) -> f64 {
    let sigma = variance.sqrt();
    special::inverse_mills((s - mu) / sigma) / sigma
}

/// `E[X | X ≥ s] = μ_X + σ_X² h(s)`.
pub fn cond_first_moment(spec: &GaussianPairSpec, s: f64) -> f64 {
    spec.mu_x + spec.sigma_x * special::inverse_mills(spec.standardized(s))
}

/// `E[X² | X ≥ s] = σ_X² + μ_X² + σ_X² h(s)(s + μ_X)`.
pub fn cond_second_moment(spec: &GaussianPairSpec, s: f64) -> f64 {
    let lambda = special::inverse_mills(spec.standardized(s));
    spec.sigma_x * spec.sigma_x + spec.mu_x * spec.mu_x + spec.sigma_x * lambda * (s + spec.mu_x)
}

/// `E[XY | X ≥ s] = c·m₁(s) + k·m₂(s)` with `c = μ_Y − kμ_X`.
pub fn cond_cross_moment(spec: &GaussianPairSpec, s: f64) -> f64 {
    let k = spec.slope();
    let c = spec.mu_y - k * spec.mu_x;
    c * cond_first_moment(spec, s) + k * cond_second_moment(spec, s)
}

/// `E[Y² | X ≥ s] = σ_Y²(1−ρ²) + c² + k²m₂(s) + 2kc·m₁(s)`.
pub fn cond_payout_second_moment(spec: &GaussianPairSpec, s: f64) -> f64 {
    let k = spec.slope();
    let c = spec.mu_y - k * spec.mu_x;
    spec.residual_variance()
        + c * c
        + k * k * cond_second_moment(spec, s)
        + 2.0 * k * c * cond_first_moment(spec, s)
}

/// Exact `E[X − Y | X ≥ s] = (μ_X − μ_Y) + (1 − k) σ_X² h(s)`.
pub fn cond_mean_diff_exact(spec: &GaussianPairSpec, s: f64) -> f64 {
    let lambda = special::inverse_mills(spec.standardized(s));
    (spec.mu_x - spec.mu_y) + (1.0 - spec.slope()) * spec.sigma_x * lambda
}

/// Leading behaviour `(μ_X − μ_Y) + (1 − k)(s − μ_X)` as `s → ∞`.
pub fn cond_mean_diff_asymptotic(spec: &GaussianPairSpec, s: f64) -> f64 {
    (spec.mu_x - spec.mu_y) + (1.0 - spec.slope()) * (s - spec.mu_x)
}

/// Exact `E[(X − Y)² | X ≥ s]`.
///
/// Equal to `m₂ + E[Y²|X≥s] − 2E[XY|X≥s]`, but assembled from the centered
/// decomposition `X − Y = d + (1−k)(X − μ_X) − ε` to avoid cancelling large
/// terms: `d² + 2d(1−k)σ_Xλ + (1−k)²σ_X²(1 + zλ) + σ_Y²(1−ρ²)`.
pub fn cond_sq_diff_exact(spec: &GaussianPairSpec, s: f64) -> f64 {
    let z = spec.standardized(s);
    let lambda = special::inverse_mills(z);
    let d = spec.mu_x - spec.mu_y;
    let a = 1.0 - spec.slope();
    let sx = spec.sigma_x;
    d * d + 2.0 * d * a * sx * lambda + a * a * sx * sx * (1.0 + z * lambda) + spec.residual_variance()
}

/// Leading term `(1 − k)² s²` as `s → ∞`.
pub fn cond_sq_diff_asymptotic(spec: &GaussianPairSpec, s: f64) -> f64 {
    let a = 1.0 - spec.slope();
    a * a * s * s
}

/// `n` draws of `(X, Y)` through the Cholesky factor of the covariance.
pub fn sample_bivariate_gaussian(spec: &GaussianPairSpec, n: usize, seed: u64) -> Result<PairedSample> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::domain("sample size must be positive"));
    }
    let mut rng = rng::stream(seed, rng::stream_id_for("bivariate_gaussian"));
    let tail = (1.0 - spec.rho * spec.rho).max(0.0).sqrt();
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let z1: f64 = StandardNormal.sample(&mut rng);
        let z2: f64 = StandardNormal.sample(&mut rng);
        x.push(spec.mu_x + spec.sigma_x * z1);
        y.push(spec.mu_y + spec.sigma_y * (spec.rho * z1 + tail * z2));
    }
    PairedSample::new(x, y, seed, "bivariate_gaussian")
}
