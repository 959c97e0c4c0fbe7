//! The single-observation measurement model: `omega | r ~ Normal(1/r, sigma_omega^2)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::LN_SQRT_2PI;

/// One parallax observation in arcseconds with its known noise scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    omega: f64,
    sigma_omega: f64,
}

impl Measurement {
    /// `omega` may be zero or negative; `sigma_omega` must be positive and finite.
    pub fn new(omega: f64, sigma_omega: f64) -> Result<Self> {
        if !omega.is_finite() {
            return Err(Error::Domain { what: "parallax must be finite", value: omega });
        }
        if !(sigma_omega > 0.0 && sigma_omega.is_finite()) {
            return Err(Error::Domain {
                what: "parallax noise must be positive and finite",
                value: sigma_omega,
            });
        }
        Ok(Self { omega, sigma_omega })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn sigma_omega(&self) -> f64 {
        self.sigma_omega
    }

    /// `A = 1 / (2 sigma_omega^2)`.
    pub fn precision_half(&self) -> f64 {
        0.5 / (self.sigma_omega * self.sigma_omega)
    }
}

fn require_positive(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain { what: "distance must be positive", value: r })
    }
}

/// Normalized log density of the observed parallax given distance `r`.
pub fn log_likelihood(m: &Measurement, r: f64) -> Result<f64> {
    require_positive(r)?;
    Ok(log_likelihood_unchecked(m, r))
}

pub(crate) fn log_likelihood_unchecked(m: &Measurement, r: f64) -> f64 {
    let d = (m.omega - 1.0 / r) / m.sigma_omega;
    -LN_SQRT_2PI - m.sigma_omega.ln() - 0.5 * d * d
}

/// Log likelihood as a function of `x = ln r`; well defined for every finite `x`.
pub fn log_likelihood_x(m: &Measurement, x: f64) -> f64 {
    let d = (m.omega - (-x).exp()) / m.sigma_omega;
    -LN_SQRT_2PI - m.sigma_omega.ln() - 0.5 * d * d
}

/// Derivative of the log likelihood with respect to `x = ln r`.
pub fn log_likelihood_grad(m: &Measurement, x: f64) -> f64 {
    let t = (-x).exp();
    -(m.omega - t) * t / (m.sigma_omega * m.sigma_omega)
}

/// Expected Fisher information for `r`: `1 / (sigma_omega^2 r^4)`.
pub fn fisher_information(m: &Measurement, r: f64) -> Result<f64> {
    require_positive(r)?;
    Ok(1.0 / (m.sigma_omega * m.sigma_omega * r.powi(4)))
}

/// Naive inverse-parallax distance; `None` when the parallax is not positive.
pub fn mle_distance(m: &Measurement) -> Option<f64> {
    (m.omega > 0.0).then(|| 1.0 / m.omega)
}

/// Minimum-expected-loss estimator of `1/mean` under quadratic loss.
/// Defined for every parallax; non-positive parallaxes give non-positive values.
pub fn melo_distance(m: &Measurement) -> f64 {
    m.omega / (m.omega * m.omega + m.sigma_omega * m.sigma_omega)
}

/// `f = sigma_omega * r_true`.
pub fn fractional_parallax_error(m: &Measurement, r_true: f64) -> Result<f64> {
    require_positive(r_true)?;
    Ok(m.sigma_omega * r_true)
}
