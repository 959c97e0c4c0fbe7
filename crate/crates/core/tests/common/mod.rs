//! Oracles shared by the integration tests. Nothing here calls the library's
//! quadrature, special functions or closed forms.
#![allow(dead_code)]

use std::f64::consts::{PI, SQRT_2};

/// Adaptive Simpson quadrature on `[a, b]`.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    refine(f, a, b, fa, fm, fb, whole, tol, 40)
}

#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    // integrands like exp(-50) carry ~1e-14 relative noise, so also stop at that
    // scale; otherwise tiny tolerances recurse to the depth cap
    if depth == 0 || delta.abs() <= 15.0 * tol || delta.abs() <= 1e-13 * (left + right).abs() {
        return left + right + delta / 15.0;
    }
    refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Integral of `f` over `[a, b]` split into pieces of at most `step`.
pub fn piecewise<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, step: f64, tol: f64) -> f64 {
    let n = ((b - a) / step).ceil().max(1.0) as usize;
    let h = (b - a) / n as f64;
    (0..n).map(|i| simpson(f, a + h * i as f64, a + h * (i + 1) as f64, tol / n as f64)).sum()
}

/// Standard normal upper tail.
pub fn norm_sf(z: f64) -> f64 {
    0.5 * libm::erfc(z / SQRT_2)
}

pub fn norm_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / SQRT_2)
}

/// Posterior quantile of `r` under a `RG(0, prior_var)` prior, from the law
/// `1/T`, `T ~ Normal(mu, tau^2)` truncated to `T > 0`, solved by bisection
/// on the closed-form cdf.
pub fn rg_posterior_quantile(omega: f64, sigma: f64, prior_var: f64, p: f64) -> f64 {
    let s2 = sigma * sigma;
    let tau2 = 1.0 / (1.0 / s2 + 1.0 / prior_var);
    let mu = tau2 * omega / s2;
    let tau = tau2.sqrt();
    let z0 = norm_sf(-mu / tau);
    // P(r <= q) = P(T >= 1/q | T > 0)
    let cdf = |q: f64| norm_sf((1.0 / q - mu) / tau) / z0;
    let (mut lo, mut hi) = (-60.0f64, 60.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid.exp()) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (0.5 * (lo + hi)).exp()
}

/// Total mass of a density on `r > 0` given by its log, integrated in `ln r`.
pub fn mass_in_log_r<F: Fn(f64) -> f64>(ln_density: F, r_upper: Option<f64>) -> f64 {
    let hi = r_upper.map_or(80.0, f64::ln);
    let g = |x: f64| {
        let v = ln_density(x.exp()) + x;
        if v.is_finite() {
            v.exp()
        } else {
            0.0
        }
    };
    piecewise(&g, -80.0, hi, 0.5, 1e-13)
}

/// `(8(f(x+h)-f(x-h)) - (f(x+2h)-f(x-2h))) / 12h`.
pub fn five_point<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (8.0 * (f(x + h) - f(x - h)) - (f(x + 2.0 * h) - f(x - 2.0 * h))) / (12.0 * h)
}

pub fn half_cauchy_ln_density(r: f64) -> f64 {
    (2.0 / PI).ln() - r.mul_add(r, 1.0).ln()
}
