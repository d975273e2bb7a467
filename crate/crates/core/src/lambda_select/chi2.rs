// SPDX-License-Identifier: MIT OR Apache-2.0

//! χ² distribution function and quantiles through the regularized lower
//! incomplete gamma function `P(a, x)`.

use libm::{exp, fabs, lgamma, log, sqrt};

const EPS: f64 = 1e-16;
const MAX_TERMS: usize = 10_000;

/// Regularized lower incomplete gamma `P(a, x)` for `a > 0`, `x >= 0`.
pub fn regularized_gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        gamma_series(a, x)
    } else {
        1.0 - gamma_continued_fraction(a, x)
    }
}

/// Series for `P(a, x)`, convergent for `x < a + 1`.
fn gamma_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..MAX_TERMS {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if fabs(term) < fabs(sum) * EPS {
            break;
        }
    }
    sum * exp(-x + a * log(x) - lgamma(a))
}

/// Lentz continued fraction for `Q(a, x) = 1 - P(a, x)`, used for `x >= a + 1`.
fn gamma_continued_fraction(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_TERMS {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if fabs(d) < TINY {
            d = TINY;
        }
        c = b + an / c;
        if fabs(c) < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if fabs(delta - 1.0) < EPS {
            break;
        }
    }
    exp(-x + a * log(x) - lgamma(a)) * h
}

pub fn chi2_cdf(x: f64, df: u32) -> f64 {
    regularized_gamma_p(0.5 * df as f64, 0.5 * x)
}

pub fn chi2_pdf(x: f64, df: u32) -> f64 {
    if x <= 0.0 {
        return if df == 2 { 0.5 } else { 0.0 };
    }
    let k = 0.5 * df as f64;
    exp((k - 1.0) * log(x) - 0.5 * x - k * core::f64::consts::LN_2 - lgamma(k))
}

/// Inverse χ²(df) distribution function for `p ∈ (0, 1)`.
///
/// Newton iterations on the CDF, safeguarded by a bisection bracket, starting
/// from the Wilson–Hilferty approximation.
///
/// # Panics
/// When `p` is outside `(0, 1)` or `df == 0`.
pub fn chi2_quantile(p: f64, df: u32) -> f64 {
    assert!(p > 0.0 && p < 1.0, "probability must lie in (0, 1)");
    assert!(df > 0, "degrees of freedom must be positive");
    let k = df as f64;

    let mut lo = 0.0;
    let mut hi = k.max(1.0);
    while chi2_cdf(hi, df) < p {
        lo = hi;
        hi *= 2.0;
    }

    let z = normal_quantile(p);
    let c = 2.0 / (9.0 * k);
    let base = 1.0 - c + z * sqrt(c);
    let wh = k * base * base * base;
    let mut x = if wh > lo && wh < hi {
        wh
    } else {
        0.5 * (lo + hi)
    };

    for _ in 0..200 {
        let f = chi2_cdf(x, df) - p;
        if f < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let density = chi2_pdf(x, df);
        let newton = if density > 0.0 {
            x - f / density
        } else {
            f64::NAN
        };
        let next = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if fabs(next - x) <= 1e-13 * x.max(1.0) || hi - lo <= 1e-13 * x.max(1.0) {
            return next;
        }
        x = next;
    }
    x
}

/// Acklam's rational approximation; only used as a starting point.
fn normal_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e1,
        2.209460984245205e2,
        -2.759285104469687e2,
        1.38357751867269e2,
        -3.066479806614716e1,
        2.506628277459239,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e1,
        1.615858368580409e2,
        -1.556989798598866e2,
        6.680131188771972e1,
        -1.328068155288572e1,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-3,
        -3.223964580411365e-1,
        -2.400758277161838,
        -2.549732539343734,
        4.374664141464968,
        2.938163982698783,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-3,
        3.224671290700398e-1,
        2.445134137142996,
        3.754408661907416,
    ];
    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    if p < 0.02425 {
        tail(sqrt(-2.0 * log(p)))
    } else if p > 1.0 - 0.02425 {
        -tail(sqrt(-2.0 * log(1.0 - p)))
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}
