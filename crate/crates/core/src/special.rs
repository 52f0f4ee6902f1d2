//! Special functions and small numerical kernels: the standard normal with a
//! deep-tail Mills ratio, adaptive Gauss–Kronrod quadrature, a safeguarded
//! secant root finder and the first Debye function.

use crate::error::{Error, Result};
use libm::erfc;
use statrs::function::erf::erfc_inv;

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Beyond this standardized point the survival function is evaluated through the
/// Mills-ratio continued fraction instead of `erfc`.
pub const MILLS_SWITCH: f64 = 8.0;

pub fn norm_pdf(z: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * z * z).exp()
}

pub fn norm_cdf(z: f64) -> f64 {
    norm_sf(-z)
}

/// Standard normal survival function Φ̄(z).
pub fn norm_sf(z: f64) -> f64 {
    if z > MILLS_SWITCH {
        mills_ratio(z) * norm_pdf(z)
    } else {
        0.5 * erfc(z / std::f64::consts::SQRT_2)
    }
}

/// Mills ratio Φ̄(z)/φ(z).
///
/// For `z > 8` uses the Laplace continued fraction
/// `1/(z + 1/(z + 2/(z + 3/(z + …))))`, which stays accurate where both
/// numerator and denominator underflow.
pub fn mills_ratio(z: f64) -> f64 {
    if z > MILLS_SWITCH {
        let mut t = z;
        for k in (1..=120).rev() {
            t = z + k as f64 / t;
        }
        1.0 / t
    } else {
        norm_sf(z) / norm_pdf(z)
    }
}

/// Inverse Mills ratio φ(z)/Φ̄(z), the hazard of the standard normal.
pub fn inverse_mills(z: f64) -> f64 {
    if z > MILLS_SWITCH {
        1.0 / mills_ratio(z)
    } else {
        let sf = norm_sf(z);
        if sf == 0.0 {
            return f64::INFINITY;
        }
        norm_pdf(z) / sf
    }
}

/// Standard normal quantile Φ⁻¹(p).
pub fn norm_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        f64::NEG_INFINITY
    } else if p >= 1.0 {
        f64::INFINITY
    } else {
        let z = -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p);
        // One Newton step against the accurate CDF.
        let density = norm_pdf(z);
        if density > 0.0 {
            z - (norm_cdf(z) - p) / density
        } else {
            z
        }
    }
}

// Gauss–Kronrod 7/15 nodes on [-1, 1] (non-negative half) and weights.
const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_KRONROD_W: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5, 7).
const GK_GAUSS_W: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = GK_KRONROD_W[7] * fc;
    let mut gauss = GK_GAUSS_W[3] * fc;
    for i in 0..7 {
        let dx = half * GK_NODES[i];
        let pair = f(center - dx) + f(center + dx);
        kronrod += GK_KRONROD_W[i] * pair;
        if i % 2 == 1 {
            gauss += GK_GAUSS_W[i / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Adaptive Gauss–Kronrod (G7/K15) quadrature of `f` over `[a, b]` to absolute
/// tolerance `abs_tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let mut pending = vec![(a, b, abs_tol, 0u32)];
    let mut total = 0.0;
    while let Some((lo, hi, tol, depth)) = pending.pop() {
        let (value, err) = gk15(&f, lo, hi);
        if !value.is_finite() {
            return Err(Error::Numerical(format!(
                "non-finite integrand on [{lo}, {hi}]"
            )));
        }
        if err <= tol || depth >= 50 {
            if depth >= 50 && err > tol {
                return Err(Error::Numerical(format!(
                    "quadrature did not reach tolerance {abs_tol} (error estimate {err})"
                )));
            }
            total += value;
        } else {
            let mid = 0.5 * (lo + hi);
            pending.push((lo, mid, 0.5 * tol, depth + 1));
            pending.push((mid, hi, 0.5 * tol, depth + 1));
        }
    }
    Ok(total)
}

/// Root of `f` in `[lo, hi]` by secant steps, falling back to bisection when a
/// step leaves the bracket or stalls. Requires a sign change on the bracket.
pub fn find_root<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Numerical(format!(
            "no sign change on [{lo}, {hi}]: f = {fa}, {fb}"
        )));
    }
    let mut last_width = b - a;
    for _ in 0..500 {
        let width = b - a;
        let mut x = b - fb * (b - a) / (fb - fa);
        // Bisect when the secant leaves the interior or the bracket shrinks slowly.
        if !x.is_finite() || x <= a || x >= b || width > 0.5 * last_width {
            x = 0.5 * (a + b);
        }
        last_width = width;
        let fx = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx.signum() == fa.signum() {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }
        if (b - a).abs() <= tol * (1.0 + x.abs()) {
            return Ok(if fa.abs() < fb.abs() { a } else { b });
        }
    }
    Err(Error::Numerical(format!(
        "root finder exhausted 500 iterations on [{lo}, {hi}]"
    )))
}

/// First Debye function `D₁(x) = (1/x) ∫₀ˣ t/(eᵗ−1) dt`, valid for any real `x`.
pub fn debye1(x: f64) -> Result<f64> {
    if x.abs() < 1e-2 {
        let x2 = x * x;
        return Ok(1.0 - x / 4.0 + x2 / 36.0 - x2 * x2 / 3600.0 + x2 * x2 * x2 / 211_680.0);
    }
    let integrand = |t: f64| if t == 0.0 { 1.0 } else { t / t.exp_m1() };
    Ok(integrate(integrand, 0.0, x, 1e-12)? / x)
}
