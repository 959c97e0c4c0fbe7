//! Standard-normal helpers with usable accuracy deep in the tails.

use libm::erfc;
use statrs::function::erf::erfc_inv;

pub use statrs::function::gamma::ln_gamma;

pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const SQRT_2: f64 = std::f64::consts::SQRT_2;

pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

/// Upper tail `1 - Phi(z)`, computed without cancellation.
pub fn std_normal_sf(z: f64) -> f64 {
    0.5 * erfc(z / SQRT_2)
}

pub fn ln_std_normal_pdf(z: f64) -> f64 {
    -0.5 * z * z - LN_SQRT_2PI
}

/// `ln Phi(z)`; switches to the Mills-ratio series once `erfc` would underflow.
pub fn ln_std_normal_cdf(z: f64) -> f64 {
    if z > -30.0 {
        let c = std_normal_cdf(z);
        if z > 0.0 {
            // ln(1 - sf) keeps precision when sf is tiny
            (-std_normal_sf(z)).ln_1p()
        } else {
            c.ln()
        }
    } else {
        // asymptotic series 1 - 1/z^2 + 3/z^4 - 15/z^6 + ..., truncated below 1e-16 for z <= -30
        let w = 1.0 / (z * z);
        let series = w * (-1.0 + w * (3.0 + w * (-15.0 + w * (105.0 + w * (-945.0 + w * 10395.0)))));
        ln_std_normal_pdf(z) - (-z).ln() + series.ln_1p()
    }
}

/// `ln(1 - Phi(z))`.
pub fn ln_std_normal_sf(z: f64) -> f64 {
    ln_std_normal_cdf(-z)
}

/// Inverse of [`std_normal_cdf`].
pub fn std_normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    if p < 0.5 {
        let mut z = -SQRT_2 * erfc_inv(2.0 * p);
        // Newton steps on ln Phi(z) = ln p polish the erfc_inv estimate
        for _ in 0..2 {
            let lc = ln_std_normal_cdf(z);
            z -= (lc - p.ln()) / (ln_std_normal_pdf(z) - lc).exp();
        }
        z
    } else {
        let mut z = SQRT_2 * erfc_inv(2.0 * (1.0 - p));
        for _ in 0..2 {
            z -= (std_normal_cdf(z) - p) / ln_std_normal_pdf(z).exp();
        }
        z
    }
}

/// Inverse of [`std_normal_sf`]: the `z` with upper-tail mass `q`.
pub fn std_normal_isf(q: f64) -> f64 {
    if q <= 0.0 {
        return f64::INFINITY;
    }
    if q >= 1.0 {
        return f64::NEG_INFINITY;
    }
    -std_normal_quantile(q)
}
