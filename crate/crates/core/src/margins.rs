//! Univariate margins for the parameter θ and the losses, and the log-linear
//! payoff `log Y = α + β log θ` linking them.

use crate::error::{Error, Result};
use crate::rng;
use crate::special;
use serde::{Deserialize, Serialize};

/// Pareto law with survival `(u/t)^b` on `[u, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParetoSpec {
    /// Lower end of the support `u`.
    pub scale: f64,
    /// Shape `b`; the tail index is `1/b`.
    pub shape: f64,
}

impl ParetoSpec {
    pub fn new(scale: f64, shape: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::config("scale", format!("must be > 0, got {scale}")));
        }
        if !(shape.is_finite() && shape > 0.0) {
            return Err(Error::config("shape", format!("must be > 0, got {shape}")));
        }
        Ok(Self { scale, shape })
    }

    pub fn tail_index(&self) -> f64 {
        1.0 / self.shape
    }

    pub fn survival(&self, t: f64) -> Result<f64> {
        pareto_survival(t, self)
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        pareto_quantile(p, self)
    }

    /// Quantile without the range check, for samplers that feed open-interval
    /// uniforms.
    #[inline]
    pub(crate) fn quantile_unchecked(&self, p: f64) -> f64 {
        self.scale * (-(-p).ln_1p() / self.shape).exp()
    }

    /// `E[T^k]`, `None` when the moment is infinite.
    pub fn moment(&self, k: f64) -> Option<f64> {
        (self.shape > k).then(|| self.shape * self.scale.powf(k) / (self.shape - k))
    }
}

/// `P(T ≥ t) = (u/t)^b` for `t ≥ u`.
pub fn pareto_survival(t: f64, spec: &ParetoSpec) -> Result<f64> {
    if t.is_nan() || t < spec.scale {
        return Err(Error::domain(format!(
            "pareto survival needs t >= u = {}, got {t}",
            spec.scale
        )));
    }
    Ok((spec.scale / t).powf(spec.shape))
}

/// Lower-tail quantile `u (1−p)^{−1/b}` for `p ∈ [0, 1)`.
pub fn pareto_quantile(p: f64, spec: &ParetoSpec) -> Result<f64> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::domain(format!(
            "pareto quantile needs p in [0, 1), got {p}"
        )));
    }
    Ok(spec.quantile_unchecked(p))
}

/// `n` i.i.d. Pareto draws by inverse transform from stream 0 of `seed`.
pub fn sample_pareto(n: usize, spec: &ParetoSpec, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::domain("sample size must be positive"));
    }
    let mut rng = rng::stream(seed, 0);
    Ok((0..n)
        .map(|_| spec.quantile_unchecked(rng::open01(&mut rng)))
        .collect())
}

/// `log Y = intercept + exponent · log θ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PayoffTransform {
    /// α, in log-dollars.
    pub intercept: f64,
    /// β > 0.
    pub exponent: f64,
}

impl PayoffTransform {
    pub fn new(intercept: f64, exponent: f64) -> Result<Self> {
        if !intercept.is_finite() {
            return Err(Error::config("alpha", "must be finite"));
        }
        if !(exponent.is_finite() && exponent > 0.0) {
            return Err(Error::config(
                "beta",
                format!("must be > 0, got {exponent}"),
            ));
        }
        Ok(Self {
            intercept,
            exponent,
        })
    }

    pub fn apply(&self, theta: f64) -> Result<f64> {
        payoff_transform(theta, self)
    }

    #[inline]
    pub(crate) fn apply_unchecked(&self, theta: f64) -> f64 {
        (self.intercept + self.exponent * theta.ln()).exp()
    }
}

/// `exp(α) θ^β`.
pub fn payoff_transform(theta: f64, t: &PayoffTransform) -> Result<f64> {
    if theta.is_nan() || theta <= 0.0 {
        return Err(Error::domain(format!(
            "payoff transform needs theta > 0, got {theta}"
        )));
    }
    Ok(t.apply_unchecked(theta))
}

/// A Pareto parameter pushed through a payoff transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformedParetoSpec {
    pub base: ParetoSpec,
    pub transform: PayoffTransform,
}

impl TransformedParetoSpec {
    /// The law of `exp(α) θ^β`: Pareto with scale `u^β e^α` and shape `b/β`.
    pub fn implied_pareto(&self) -> ParetoSpec {
        let beta = self.transform.exponent;
        ParetoSpec {
            scale: self.base.scale.powf(beta) * self.transform.intercept.exp(),
            shape: self.base.shape / beta,
        }
    }

    /// Tail index `β/b` of the transformed variable.
    pub fn tail_index(&self) -> f64 {
        self.transform.exponent / self.base.shape
    }

    pub fn moment(&self, k: u32) -> Moment {
        transformed_moment(self, k)
    }

    pub fn mean(&self) -> Moment {
        self.moment(1)
    }

    pub fn variance(&self) -> Moment {
        match (self.moment(1), self.moment(2)) {
            (Moment::Finite(m1), Moment::Finite(m2)) => Moment::Finite(m2 - m1 * m1),
            _ => Moment::Infinite,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Moment {
    Finite(f64),
    Infinite,
}

impl Moment {
    pub fn finite(self) -> Option<f64> {
        match self {
            Moment::Finite(v) => Some(v),
            Moment::Infinite => None,
        }
    }
}

/// `E[Y^k]` for `Y = e^α θ^β`, `θ ~ Pareto(u, b)`: `e^{kα} b u^{kβ} / (b − kβ)`
/// when `b > kβ`.
pub fn transformed_moment(spec: &TransformedParetoSpec, k: u32) -> Moment {
    assert!(k >= 1, "moment order must be >= 1");
    let k = f64::from(k);
    let (alpha, beta) = (spec.transform.intercept, spec.transform.exponent);
    let (u, b) = (spec.base.scale, spec.base.shape);
    if b <= k * beta {
        return Moment::Infinite;
    }
    Moment::Finite((k * alpha).exp() * b * u.powf(k * beta) / (b - k * beta))
}

/// Distribution descriptor for a univariate loss or parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MarginSpec {
    Pareto(ParetoSpec),
    TransformedPareto(TransformedParetoSpec),
    Gaussian { mean: f64, sd: f64 },
}

impl MarginSpec {
    /// `P(V ≥ t)`; zero below the support is not an error here (margins are
    /// total functions on the real line).
    pub fn survival(&self, t: f64) -> f64 {
        match self {
            MarginSpec::Pareto(p) => pareto_sf_total(p, t),
            MarginSpec::TransformedPareto(tp) => pareto_sf_total(&tp.implied_pareto(), t),
            MarginSpec::Gaussian { mean, sd } => special::norm_sf((t - mean) / sd),
        }
    }

    pub fn cdf(&self, t: f64) -> f64 {
        1.0 - self.survival(t)
    }

    /// Lower-tail quantile.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        match self {
            MarginSpec::Pareto(spec) => pareto_quantile(p, spec),
            MarginSpec::TransformedPareto(tp) => pareto_quantile(p, &tp.implied_pareto()),
            MarginSpec::Gaussian { mean, sd } => {
                if !(p > 0.0 && p < 1.0) {
                    return Err(Error::domain(format!("gaussian quantile needs p in (0,1), got {p}")));
                }
                Ok(mean + sd * special::norm_quantile(p))
            }
        }
    }
}

fn pareto_sf_total(spec: &ParetoSpec, t: f64) -> f64 {
    if t <= spec.scale {
        1.0
    } else {
        (spec.scale / t).powf(spec.shape)
    }
}
