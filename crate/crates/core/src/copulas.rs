//! Bivariate copulas for the dependence between the parameter and the loss
//! driver.
//!
//! Families: survival Clayton, Gumbel, Frank, Gaussian, plus the independence
//! and comonotone limits. Each family provides its distribution function, the
//! survival copula `C*(v, w) = v + w − 1 + C(1−v, 1−w)`, a sampler, Kendall's
//! tau and the upper tail dependence `λ_U = lim_{u→0} C*(u, u)/u`.

use crate::error::{Error, Result};
use crate::margins::MarginSpec;
use crate::rng::{self, StreamRng};
use crate::special;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    ClaytonSurvival,
    Gumbel,
    Frank,
    Gaussian,
    Independence,
    Comonotone,
}

impl Family {
    /// The three families compared in the simulation study.
    pub const STUDY: [Family; 3] = [Family::Frank, Family::Gumbel, Family::ClaytonSurvival];

    pub fn name(self) -> &'static str {
        match self {
            Family::ClaytonSurvival => "clayton_survival",
            Family::Gumbel => "gumbel",
            Family::Frank => "frank",
            Family::Gaussian => "gaussian",
            Family::Independence => "independence",
            Family::Comonotone => "comonotone",
        }
    }

    pub fn has_parameter(self) -> bool {
        !matches!(self, Family::Independence | Family::Comonotone)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "clayton_survival" | "clayton" | "survival_clayton" => Ok(Family::ClaytonSurvival),
            "gumbel" => Ok(Family::Gumbel),
            "frank" => Ok(Family::Frank),
            "gaussian" | "normal" => Ok(Family::Gaussian),
            "independence" | "independent" => Ok(Family::Independence),
            "comonotone" | "comonotonic" => Ok(Family::Comonotone),
            other => Err(Error::config(
                "family",
                format!(
                    "unknown copula family `{other}` (expected clayton_survival, gumbel, frank, gaussian, independence or comonotone)"
                ),
            )),
        }
    }
}

/// A copula family with its parameter (δ, or ρ for the Gaussian family).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CopulaSpec {
    pub family: Family,
    pub param: Option<f64>,
}

fn check_param(family: Family, param: f64) -> Result<()> {
    let ok = param.is_finite()
        && match family {
            Family::ClaytonSurvival => param >= -1.0 && param != 0.0,
            Family::Gumbel => param >= 1.0,
            Family::Frank => param != 0.0,
            Family::Gaussian => param > -1.0 && param < 1.0,
            Family::Independence | Family::Comonotone => true,
        };
    if ok {
        Ok(())
    } else {
        let range = match family {
            Family::ClaytonSurvival => "δ >= -1 and δ != 0",
            Family::Gumbel => "δ >= 1",
            Family::Frank => "δ != 0",
            Family::Gaussian => "-1 < ρ < 1",
            _ => "",
        };
        Err(Error::domain(format!(
            "{family} parameter {param} outside {range}"
        )))
    }
}

impl CopulaSpec {
    pub fn new(family: Family, param: Option<f64>) -> Result<Self> {
        match (family.has_parameter(), param) {
            (true, Some(p)) => check_param(family, p)?,
            (true, None) => {
                return Err(Error::domain(format!("{family} copula needs a parameter")))
            }
            (false, Some(_)) => {
                return Err(Error::domain(format!("{family} copula takes no parameter")))
            }
            (false, None) => {}
        }
        Ok(Self { family, param })
    }

    pub fn clayton_survival(delta: f64) -> Result<Self> {
        Self::new(Family::ClaytonSurvival, Some(delta))
    }

    pub fn gumbel(delta: f64) -> Result<Self> {
        Self::new(Family::Gumbel, Some(delta))
    }

    pub fn frank(delta: f64) -> Result<Self> {
        Self::new(Family::Frank, Some(delta))
    }

    pub fn gaussian(rho: f64) -> Result<Self> {
        Self::new(Family::Gaussian, Some(rho))
    }

    pub fn independence() -> Self {
        Self {
            family: Family::Independence,
            param: None,
        }
    }

    pub fn comonotone() -> Self {
        Self {
            family: Family::Comonotone,
            param: None,
        }
    }

    /// The member of `family` with Kendall's tau equal to `tau`.
    pub fn from_tau(family: Family, tau: f64) -> Result<Self> {
        Self::new(family, Some(tau_to_param(family, tau)?))
    }

    fn validate(&self) -> Result<()> {
        Self::new(self.family, self.param).map(|_| ())
    }

    fn p(&self) -> f64 {
        self.param.unwrap_or(f64::NAN)
    }

    pub fn cdf(&self, v: f64, w: f64) -> Result<f64> {
        copula_value(self, v, w)
    }

    pub fn survival(&self, v: f64, w: f64) -> Result<f64> {
        survival_copula_value(self, v, w)
    }

    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<(f64, f64)>> {
        sample_copula(self, n, seed)
    }

    pub fn kendall_tau(&self) -> Result<f64> {
        match self.family {
            Family::Independence => Ok(0.0),
            Family::Comonotone => Ok(1.0),
            f => param_to_tau(f, self.p()),
        }
    }

    pub fn upper_tail_dependence(&self) -> f64 {
        upper_tail_dependence(self)
    }
}

fn check_unit(v: f64, w: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) && (0.0..=1.0).contains(&w) {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "copula arguments must lie in [0, 1], got ({v}, {w})"
        )))
    }
}

/// Standard Clayton `max(a^{−δ} + b^{−δ} − 1, 0)^{−1/δ}`.
fn clayton_cdf(delta: f64, a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        return 0.0;
    }
    let inner = (a.powf(-delta) + b.powf(-delta) - 1.0).max(0.0);
    if inner == 0.0 {
        return 0.0;
    }
    inner.powf(-1.0 / delta).clamp(0.0, a.min(b))
}

fn gumbel_exponent(delta: f64, log_v: f64, log_w: f64) -> f64 {
    ((-log_v).powf(delta) + (-log_w).powf(delta)).powf(1.0 / delta)
}

fn frank_cdf(delta: f64, v: f64, w: f64) -> f64 {
    let num = (-delta * v).exp_m1() * (-delta * w).exp_m1();
    -(num / (-delta).exp_m1()).ln_1p() / delta
}

/// Bivariate normal distribution function `Φ₂(a, b; ρ)` through the
/// integral `Φ(a)Φ(b) + (1/2π) ∫₀^ρ exp(−(a²−2rab+b²)/(2(1−r²))) / √(1−r²) dr`.
fn bivariate_normal_cdf(a: f64, b: f64, rho: f64) -> f64 {
    let base = special::norm_cdf(a) * special::norm_cdf(b);
    if rho == 0.0 {
        return base;
    }
    let integrand = |r: f64| {
        let one_minus = 1.0 - r * r;
        (-(a * a - 2.0 * r * a * b + b * b) / (2.0 * one_minus)).exp() / one_minus.sqrt()
    };
    let extra = special::integrate(integrand, 0.0, rho, 1e-13).unwrap_or(f64::NAN);
    base + extra / (2.0 * std::f64::consts::PI)
}

/// Joint distribution function `C(v, w)`.
pub fn copula_value(spec: &CopulaSpec, v: f64, w: f64) -> Result<f64> {
    spec.validate()?;
    check_unit(v, w)?;
    if v == 0.0 || w == 0.0 {
        return Ok(0.0);
    }
    if v == 1.0 {
        return Ok(w);
    }
    if w == 1.0 {
        return Ok(v);
    }
    let d = spec.p();
    let value = match spec.family {
        Family::Independence => v * w,
        Family::Comonotone => v.min(w),
        Family::ClaytonSurvival => {
            // v + w − 1 + C_clayton(1−v, 1−w), regrouped to keep it inside
            // the Fréchet bounds in floating point.
            let c = clayton_cdf(d, 1.0 - v, 1.0 - w);
            (v + w - 1.0 + c).clamp((v + w - 1.0).max(0.0), v.min(w))
        }
        Family::Gumbel => (-gumbel_exponent(d, v.ln(), w.ln())).exp(),
        Family::Frank => frank_cdf(d, v, w),
        Family::Gaussian => bivariate_normal_cdf(
            special::norm_quantile(v),
            special::norm_quantile(w),
            d,
        ),
    };
    Ok(value.clamp((v + w - 1.0).max(0.0), v.min(w)))
}

/// Survival copula `C*(v, w) = v + w − 1 + C(1−v, 1−w)`, the probability
/// `P(U ≥ 1−v, W ≥ 1−w)` for `(U, W) ~ C`.
pub fn survival_copula_value(spec: &CopulaSpec, v: f64, w: f64) -> Result<f64> {
    spec.validate()?;
    check_unit(v, w)?;
    if v == 0.0 || w == 0.0 {
        return Ok(0.0);
    }
    if v == 1.0 {
        return Ok(w);
    }
    if w == 1.0 {
        return Ok(v);
    }
    let d = spec.p();
    let value = match spec.family {
        // Radially symmetric families.
        Family::Independence | Family::Comonotone | Family::Frank | Family::Gaussian => {
            return copula_value(spec, v, w)
        }
        // The survival of the survival Clayton is the standard Clayton.
        Family::ClaytonSurvival => clayton_cdf(d, v, w),
        // v + w + (C(1−v, 1−w) − 1), with the bracket evaluated by expm1.
        Family::Gumbel => {
            let a = gumbel_exponent(d, (-v).ln_1p(), (-w).ln_1p());
            v + w + (-a).exp_m1()
        }
    };
    Ok(value.clamp((v + w - 1.0).max(0.0), v.min(w)))
}

fn std_exponential(rng: &mut StreamRng) -> f64 {
    -rng::open01(rng).ln()
}

/// Positive stable variable with Laplace transform `exp(−t^α)`, `0 < α < 1`
/// (Kanter's representation).
fn positive_stable(alpha: f64, rng: &mut StreamRng) -> f64 {
    let theta = std::f64::consts::PI * rng::open01(rng);
    let w = std_exponential(rng);
    let a = (alpha * theta).sin() / theta.sin().powf(1.0 / alpha);
    let b = ((1.0 - alpha) * theta).sin() / w;
    a * b.powf((1.0 - alpha) / alpha)
}

/// Draw one pair from `spec`; `gamma` is the frailty law for Clayton with δ > 0.
fn draw_pair(spec: &CopulaSpec, gamma: Option<&Gamma<f64>>, rng: &mut StreamRng) -> (f64, f64) {
    let d = spec.p();
    match spec.family {
        Family::Independence => (rng::open01(rng), rng::open01(rng)),
        Family::Comonotone => {
            let u = rng::open01(rng);
            (u, u)
        }
        Family::Frank => {
            let u = rng::open01(rng);
            let p = rng::open01(rng);
            let v = -(p * (-d).exp_m1() / (p + (1.0 - p) * (-d * u).exp())).ln_1p() / d;
            (u, v.clamp(0.0, 1.0))
        }
        Family::Gumbel => {
            if d == 1.0 {
                return (rng::open01(rng), rng::open01(rng));
            }
            let alpha = 1.0 / d;
            let s = positive_stable(alpha, rng);
            let e1 = std_exponential(rng);
            let e2 = std_exponential(rng);
            ((-(e1 / s).powf(alpha)).exp(), (-(e2 / s).powf(alpha)).exp())
        }
        Family::ClaytonSurvival => {
            if d > 0.0 {
                // Standard Clayton via gamma frailty, U = (1 + E/G)^{−1/δ};
                // the survival flip 1 − U is formed without cancellation.
                let g = gamma.expect("gamma frailty").sample(rng);
                let e1 = std_exponential(rng);
                let e2 = std_exponential(rng);
                let flip = |e: f64| -(-(e / g).ln_1p() / d).exp_m1();
                (flip(e1), flip(e2))
            } else if d == -1.0 {
                let u = rng::open01(rng);
                (1.0 - u, u)
            } else {
                // Conditional inversion of the standard Clayton for −1 < δ < 0.
                let u = rng::open01(rng);
                let p = rng::open01(rng);
                let inner = (p.powf(-d / (1.0 + d)) - 1.0) * u.powf(-d) + 1.0;
                let w = inner.max(0.0).powf(-1.0 / d).clamp(0.0, 1.0);
                (1.0 - u, 1.0 - w)
            }
        }
        Family::Gaussian => {
            let z1: f64 = StandardNormal.sample(rng);
            let e: f64 = StandardNormal.sample(rng);
            let z2 = d * z1 + (1.0 - d * d).sqrt() * e;
            (special::norm_cdf(z1), special::norm_cdf(z2))
        }
    }
}

/// Sampler over an explicit generator, for callers that manage sub-streams.
pub fn sample_copula_with(spec: &CopulaSpec, n: usize, rng: &mut StreamRng) -> Result<Vec<(f64, f64)>> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::domain("sample size must be positive"));
    }
    let gamma = match (spec.family, spec.param) {
        (Family::ClaytonSurvival, Some(d)) if d > 0.0 => Some(
            Gamma::new(1.0 / d, 1.0)
                .map_err(|e| Error::domain(format!("gamma frailty: {e}")))?,
        ),
        _ => None,
    };
    Ok((0..n).map(|_| draw_pair(spec, gamma.as_ref(), rng)).collect())
}

/// `n` i.i.d. pairs with uniform margins and copula `spec`, from stream 0 of
/// `seed`.
pub fn sample_copula(spec: &CopulaSpec, n: usize, seed: u64) -> Result<Vec<(f64, f64)>> {
    sample_copula_with(spec, n, &mut rng::stream(seed, 0))
}

/// Kendall's tau of the Frank copula, `1 − (4/δ)(1 − D₁(δ))`.
fn frank_tau(delta: f64) -> Result<f64> {
    if delta.abs() < 1e-2 {
        let d2 = delta * delta;
        return Ok(delta / 9.0 - delta * d2 / 900.0 + delta * d2 * d2 / 52_920.0);
    }
    Ok(1.0 - 4.0 / delta * (1.0 - special::debye1(delta)?))
}

/// Bracket for the Frank root search.
pub const FRANK_DELTA_RANGE: (f64, f64) = (1e-6, 50.0);

/// Kendall's tau of the family member with parameter `param`.
pub fn param_to_tau(family: Family, param: f64) -> Result<f64> {
    match family {
        Family::Independence => Ok(0.0),
        Family::Comonotone => Ok(1.0),
        _ => {
            check_param(family, param)?;
            match family {
                Family::ClaytonSurvival => Ok(param / (param + 2.0)),
                Family::Gumbel => Ok((param - 1.0) / param),
                Family::Frank => frank_tau(param),
                Family::Gaussian => Ok(2.0 / std::f64::consts::PI * param.asin()),
                _ => unreachable!(),
            }
        }
    }
}

/// Parameter of the family member with Kendall's tau equal to `tau`.
pub fn tau_to_param(family: Family, tau: f64) -> Result<f64> {
    let out_of_range = || {
        Error::config(
            "tau",
            format!("{tau} is outside the attainable range for the {family} family"),
        )
    };
    if !tau.is_finite() {
        return Err(out_of_range());
    }
    match family {
        Family::ClaytonSurvival => {
            if !(tau > 0.0 && tau < 1.0) {
                return Err(out_of_range());
            }
            Ok(2.0 * tau / (1.0 - tau))
        }
        Family::Gumbel => {
            if !(tau > 0.0 && tau < 1.0) {
                return Err(out_of_range());
            }
            Ok(1.0 / (1.0 - tau))
        }
        Family::Gaussian => {
            if !(tau > -1.0 && tau < 1.0) {
                return Err(out_of_range());
            }
            Ok((std::f64::consts::FRAC_PI_2 * tau).sin())
        }
        Family::Frank => {
            if !(tau > -1.0 && tau < 1.0) || tau == 0.0 {
                return Err(out_of_range());
            }
            // τ(−δ) = −τ(δ).
            let target = tau.abs();
            let (lo, hi) = FRANK_DELTA_RANGE;
            let f = |d: f64| frank_tau(d).unwrap_or(f64::NAN) - target;
            if f(lo) > 0.0 || f(hi) < 0.0 {
                return Err(out_of_range());
            }
            let root = special::find_root(f, lo, hi, 1e-14)?;
            Ok(root * tau.signum())
        }
        Family::Independence | Family::Comonotone => Err(Error::domain(format!(
            "the {family} copula has no parameter to solve for"
        ))),
    }
}

/// Upper tail dependence `λ_U` from the closed forms.
pub fn upper_tail_dependence(spec: &CopulaSpec) -> f64 {
    let d = spec.p();
    match spec.family {
        Family::Gumbel => 2.0 - 2f64.powf(1.0 / d),
        Family::ClaytonSurvival => {
            if d > 0.0 {
                2f64.powf(-1.0 / d)
            } else {
                0.0
            }
        }
        Family::Frank | Family::Independence => 0.0,
        Family::Gaussian => 0.0,
        Family::Comonotone => 1.0,
    }
}

/// `π₊(t₀, x₀) = P(θ ≥ t₀ | X ≥ x₀) = C*(S_θ(t₀), S_X(x₀)) / S_X(x₀)`.
pub fn pi_plus_analytic(
    spec: &CopulaSpec,
    margin_theta: &MarginSpec,
    margin_x: &MarginSpec,
    t0: f64,
    x0: f64,
) -> Result<f64> {
    let s_theta = margin_theta.survival(t0);
    let s_x = margin_x.survival(x0);
    if s_x <= 0.0 {
        return Err(Error::domain(format!("S_X({x0}) = 0: conditioning event is null")));
    }
    Ok(survival_copula_value(spec, s_theta, s_x)? / s_x)
}

/// The displayed trigger formula `(S_θ(t₀) − S(t₀, x₀)) / F_X(x₀)` with
/// `S(t₀, x₀) = C*(S_θ(t₀), S_X(x₀))`. This is `P(θ ≥ t₀ | X < x₀)`, the rate of
/// payouts on claims below the deductible.
pub fn pi_minus_analytic(
    spec: &CopulaSpec,
    margin_theta: &MarginSpec,
    margin_x: &MarginSpec,
    t0: f64,
    x0: f64,
) -> Result<f64> {
    let s_theta = margin_theta.survival(t0);
    let s_x = margin_x.survival(x0);
    let f_x = margin_x.cdf(x0);
    if f_x <= 0.0 {
        return Err(Error::domain(format!("F_X({x0}) = 0: conditioning event is null")));
    }
    let joint = survival_copula_value(spec, s_theta, s_x)?;
    Ok(((s_theta - joint) / f_x).clamp(0.0, 1.0))
}

/// `P(θ < t₀ | X < x₀)`, the complement of [`pi_minus_analytic`].
pub fn pi_minus_complement_analytic(
    spec: &CopulaSpec,
    margin_theta: &MarginSpec,
    margin_x: &MarginSpec,
    t0: f64,
    x0: f64,
) -> Result<f64> {
    Ok(1.0 - pi_minus_analytic(spec, margin_theta, margin_x, t0, x0)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::margins::ParetoSpec;

    fn study_specs() -> Vec<CopulaSpec> {
        let mut specs = vec![
            CopulaSpec::independence(),
            CopulaSpec::comonotone(),
            CopulaSpec::gaussian(0.6).unwrap(),
            CopulaSpec::gaussian(-0.4).unwrap(),
            CopulaSpec::clayton_survival(-0.5).unwrap(),
            CopulaSpec::frank(-3.0).unwrap(),
        ];
        for tau in [0.3, 0.5, 0.7] {
            for family in Family::STUDY {
                specs.push(CopulaSpec::from_tau(family, tau).unwrap());
            }
        }
        specs
    }

    #[test]
    fn independence_and_margins() {
        let ind = CopulaSpec::independence();
        assert!((copula_value(&ind, 0.3, 0.5).unwrap() - 0.15).abs() < 1e-15);
        for spec in study_specs() {
            for v in [0.0, 0.1, 0.37, 0.9, 1.0] {
                assert!((copula_value(&spec, v, 1.0).unwrap() - v).abs() < 1e-12);
                assert!((copula_value(&spec, 1.0, v).unwrap() - v).abs() < 1e-12);
                assert_eq!(copula_value(&spec, v, 0.0).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn frank_matches_table_formula() {
        let d: f64 = 5.0;
        let expected = -(1.0 / d) * (1.0 + ((-d / 2.0).exp() - 1.0).powi(2) / ((-d).exp() - 1.0)).ln();
        let got = copula_value(&CopulaSpec::frank(d).unwrap(), 0.5, 0.5).unwrap();
        assert!((got - expected).abs() < 1e-14);
    }

    #[test]
    fn frank_cdf_matches_empirical() {
        let spec = CopulaSpec::frank(5.0).unwrap();
        let pairs = sample_copula(&spec, 1_000_000, 21).unwrap();
        let hits = pairs.iter().filter(|(u, v)| *u <= 0.5 && *v <= 0.5).count() as f64;
        let p = hits / pairs.len() as f64;
        let se = (p * (1.0 - p) / pairs.len() as f64).sqrt();
        let exact = copula_value(&spec, 0.5, 0.5).unwrap();
        assert!((p - exact).abs() < 4.0 * se, "{p} vs {exact}");
    }

    #[test]
    fn survival_examples() {
        let u = 0.2;
        let ind = CopulaSpec::independence();
        assert!((survival_copula_value(&ind, u, u).unwrap() - u * u).abs() < 1e-15);
        let com = CopulaSpec::comonotone();
        assert_eq!(survival_copula_value(&com, u, u).unwrap(), u);
        let g = CopulaSpec::gumbel(2.0).unwrap();
        let ratio = survival_copula_value(&g, 0.01, 0.01).unwrap() / 0.01;
        assert!((ratio - 0.59).abs() < 0.005, "{ratio}");
    }

    #[test]
    fn survival_matches_generic_definition() {
        for spec in study_specs() {
            for &(v, w) in &[(0.1, 0.2), (0.5, 0.5), (0.93, 0.4), (0.02, 0.9)] {
                let generic = v + w - 1.0 + copula_value(&spec, 1.0 - v, 1.0 - w).unwrap();
                let direct = survival_copula_value(&spec, v, w).unwrap();
                assert!((generic - direct).abs() < 1e-10, "{spec:?} ({v},{w}) {generic} vs {direct}");
            }
        }
    }

    #[test]
    fn frechet_bounds_and_two_increasing() {
        let grid: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        for spec in study_specs() {
            let mut values = vec![vec![0.0; 101]; 101];
            for (i, &v) in grid.iter().enumerate() {
                for (j, &w) in grid.iter().enumerate() {
                    let c = copula_value(&spec, v, w).unwrap();
                    assert!(c >= (v + w - 1.0).max(0.0) - 1e-12 && c <= v.min(w) + 1e-12);
                    values[i][j] = c;
                }
            }
            for i in 0..100 {
                for j in 0..100 {
                    let mass = values[i + 1][j + 1] - values[i][j + 1] - values[i + 1][j] + values[i][j];
                    assert!(mass >= -1e-10, "{spec:?} rectangle ({i},{j}) mass {mass}");
                }
            }
        }
    }

    #[test]
    fn parameter_ranges() {
        assert!(CopulaSpec::clayton_survival(0.0).is_err());
        assert!(CopulaSpec::clayton_survival(-1.5).is_err());
        assert!(CopulaSpec::gumbel(0.9).is_err());
        assert!(CopulaSpec::frank(0.0).is_err());
        assert!(CopulaSpec::gaussian(1.0).is_err());
        assert!(CopulaSpec::new(Family::Independence, Some(1.0)).is_err());
        let bad = CopulaSpec {
            family: Family::Gumbel,
            param: Some(0.5),
        };
        assert!(copula_value(&bad, 0.2, 0.2).is_err());
        assert!(sample_copula(&bad, 10, 1).is_err());
    }

    #[test]
    fn tau_conversions() {
        assert!((tau_to_param(Family::ClaytonSurvival, 0.5).unwrap() - 2.0).abs() < 1e-15);
        assert!((tau_to_param(Family::Gumbel, 0.5).unwrap() - 2.0).abs() < 1e-15);
        let frank = tau_to_param(Family::Frank, 0.5).unwrap();
        assert!((frank - 5.736).abs() < 1e-3, "{frank}");
        assert!((param_to_tau(Family::ClaytonSurvival, 2.0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(param_to_tau(Family::Gumbel, 1.0).unwrap(), 0.0);
        assert!((param_to_tau(Family::Frank, 5.736).unwrap() - 0.5).abs() < 1e-4);
        for tau in [0.3, 0.5, 0.7] {
            for family in Family::STUDY {
                let back = param_to_tau(family, tau_to_param(family, tau).unwrap()).unwrap();
                assert!((back - tau).abs() < 1e-8, "{family} {tau} -> {back}");
            }
        }
        let neg = tau_to_param(Family::Frank, -0.3).unwrap();
        assert!((param_to_tau(Family::Frank, neg).unwrap() + 0.3).abs() < 1e-8);
        assert!(tau_to_param(Family::Frank, 1.2).is_err());
        assert!(tau_to_param(Family::Frank, 0.0).is_err());
        assert!(tau_to_param(Family::Gumbel, -0.2).is_err());
        assert!(tau_to_param(Family::Frank, 0.99).is_err());
    }

    #[test]
    fn frank_tau_matches_quadrature_of_copula_density_identity() {
        // τ = 4 E[C(U, V)] − 1; estimate the expectation on a fine midpoint grid
        // using the copula density from finite differences of C.
        let spec = CopulaSpec::frank(5.736_282_707).unwrap();
        let m = 400;
        let h = 1.0 / m as f64;
        let mut acc = 0.0;
        for i in 0..m {
            for j in 0..m {
                let (v0, w0) = (i as f64 * h, j as f64 * h);
                let c = |a: f64, b: f64| copula_value(&spec, a, b).unwrap();
                let mass = c(v0 + h, w0 + h) - c(v0, w0 + h) - c(v0 + h, w0) + c(v0, w0);
                acc += mass * c(v0 + 0.5 * h, w0 + 0.5 * h);
            }
        }
        let tau = 4.0 * acc - 1.0;
        assert!((tau - 0.5).abs() < 2e-3, "{tau}");
    }

    #[test]
    fn tail_dependence_closed_forms() {
        assert_eq!(upper_tail_dependence(&CopulaSpec::frank(3.0).unwrap()), 0.0);
        assert_eq!(upper_tail_dependence(&CopulaSpec::gumbel(1.0).unwrap()), 0.0);
        let g2 = upper_tail_dependence(&CopulaSpec::gumbel(2.0).unwrap());
        assert!((g2 - (2.0 - 2f64.sqrt())).abs() < 1e-15);
        let u = 1e-6;
        // The Gaussian ratio decays only logarithmically, so it is excluded here.
        for spec in study_specs().into_iter().filter(|s| s.family != Family::Gaussian) {
            let numeric = survival_copula_value(&spec, u, u).unwrap() / u;
            let closed = upper_tail_dependence(&spec);
            assert!((numeric - closed).abs() < 1e-3, "{spec:?}: {numeric} vs {closed}");
        }
    }

    #[test]
    fn samplers_hit_target_tau() {
        use crate::tail_metrics::kendall_tau_pairs;
        let ind = sample_copula(&CopulaSpec::independence(), 100_000, 3).unwrap();
        assert!(kendall_tau_pairs(&ind).unwrap().abs() < 0.01);
        for spec in [
            CopulaSpec::gumbel(2.0).unwrap(),
            CopulaSpec::clayton_survival(2.0).unwrap(),
            CopulaSpec::frank(tau_to_param(Family::Frank, 0.5).unwrap()).unwrap(),
        ] {
            let pairs = sample_copula(&spec, 100_000, 4).unwrap();
            let tau = kendall_tau_pairs(&pairs).unwrap();
            assert!((tau - 0.5).abs() < 0.01, "{spec:?}: {tau}");
        }
        for (family, tau) in [(Family::Gaussian, 0.4), (Family::ClaytonSurvival, -0.2), (Family::Frank, -0.4)] {
            let spec = match family {
                Family::ClaytonSurvival => CopulaSpec::clayton_survival(2.0 * tau / (1.0 - tau)).unwrap(),
                Family::Frank => CopulaSpec::frank(tau_to_param(family, tau).unwrap()).unwrap(),
                _ => CopulaSpec::from_tau(family, tau).unwrap(),
            };
            let pairs = sample_copula(&spec, 100_000, 5).unwrap();
            let got = kendall_tau_pairs(&pairs).unwrap();
            assert!((got - tau).abs() < 0.01, "{spec:?}: {got}");
        }
    }

    #[test]
    fn sampler_margins_are_uniform() {
        use crate::stats::ks_one_sample;
        for spec in study_specs() {
            let pairs = sample_copula(&spec, 100_000, 8).unwrap();
            let u: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let v: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            for (name, coord) in [("u", &u), ("v", &v)] {
                let (_, p) = ks_one_sample(coord, |t| t.clamp(0.0, 1.0));
                // Bonferroni-style level over the ~30 margins checked.
                assert!(p > 1e-4, "{spec:?} {name}: p = {p}");
            }
        }
    }

    #[test]
    fn sampler_is_deterministic() {
        let spec = CopulaSpec::gumbel(3.0).unwrap();
        assert_eq!(sample_copula(&spec, 1000, 9).unwrap(), sample_copula(&spec, 1000, 9).unwrap());
    }

    fn uniform_margin() -> MarginSpec {
        // Pareto(1, 1) has S(t) = 1/t, so thresholds map directly to levels.
        MarginSpec::Pareto(ParetoSpec::new(1.0, 1.0).unwrap())
    }

    #[test]
    fn trigger_probabilities() {
        let m = uniform_margin();
        let level = 0.05;
        let t0 = 1.0 / level;
        let ind = CopulaSpec::independence();
        assert!((pi_plus_analytic(&ind, &m, &m, t0, 1.0 / 0.3).unwrap() - level).abs() < 1e-14);
        assert!((pi_minus_analytic(&ind, &m, &m, t0, 1.0 / 0.3).unwrap() - level).abs() < 1e-14);
        let com = CopulaSpec::comonotone();
        assert!((pi_plus_analytic(&com, &m, &m, t0, t0).unwrap() - 1.0).abs() < 1e-14);
        assert!(pi_minus_analytic(&com, &m, &m, t0, t0).unwrap().abs() < 1e-14);
        assert!((pi_minus_complement_analytic(&com, &m, &m, t0, t0).unwrap() - 1.0).abs() < 1e-14);
        let g = CopulaSpec::gumbel(2.0).unwrap();
        let p = pi_plus_analytic(&g, &m, &m, 100.0, 100.0).unwrap();
        assert!((p - 0.59).abs() < 0.005, "{p}");
        // S_X(x0) = 0 cannot happen for Pareto, but F_X(x0) = 0 does at the support.
        assert!(pi_minus_analytic(&g, &m, &m, 100.0, 1.0).is_err());
    }

    #[test]
    fn pi_minus_matches_monte_carlo() {
        let m = uniform_margin();
        let spec = CopulaSpec::frank(5.736).unwrap();
        let (t0, x0) = (1.0 / 0.2, 1.0 / 0.2);
        let exact = pi_minus_analytic(&spec, &m, &m, t0, x0).unwrap();
        // θ ≥ t0 ⇔ U_θ ≥ 0.8 with S = 1 − U; X < x0 ⇔ U_X < 0.8.
        let pairs = sample_copula(&spec, 1_000_000, 13).unwrap();
        let cond: Vec<_> = pairs.iter().filter(|p| p.1 < 0.8).collect();
        let hits = cond.iter().filter(|p| p.0 >= 0.8).count() as f64;
        let freq = hits / cond.len() as f64;
        let se = (freq * (1.0 - freq) / cond.len() as f64).sqrt();
        assert!((freq - exact).abs() < 3.0 * se, "{freq} vs {exact} (se {se})");
    }
}
