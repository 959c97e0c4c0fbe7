use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Measurement;
use crate::priors::{log_prior_density, PriorSpec};
use crate::quad::integrate;

/// Consecutive non-shrinking doubling increments that signal divergence.
const DIVERGENCE_RUN: usize = 3;
/// Largest upper limit tried before giving up.
const R_CAP: f64 = 1e250;

/// Value of the unnormalized squared-error risk integral, or the evidence
/// that it diverges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RiskOutcome {
    Finite {
        value: f64,
        /// Natural log of `value`, usable when `value` overflows.
        ln_value: f64,
        /// Upper distance limit at which the integral was declared converged.
        upper: f64,
    },
    Divergent {
        /// Integral mass added by the last doublings of the upper limit, oldest first.
        increments: Vec<f64>,
        upper: f64,
    },
}

impl RiskOutcome {
    pub fn value(&self) -> Option<f64> {
        match self {
            RiskOutcome::Finite { value, .. } => Some(*value),
            RiskOutcome::Divergent { .. } => None,
        }
    }

    pub fn is_divergent(&self) -> bool {
        matches!(self, RiskOutcome::Divergent { .. })
    }
}

/// Integrand of the risk in `x = ln r`, divided by `exp(A omega^2)`.
struct Integrand {
    prior: PriorSpec,
    a: f64,
    omega: f64,
    r0: f64,
}

impl Integrand {
    fn new(p: &PriorSpec, m: &Measurement, r0: f64) -> Result<Self> {
        if !(r0 > 0.0 && r0.is_finite()) {
            return Err(Error::Domain { what: "reference distance must be positive", value: r0 });
        }
        if !p.is_proper() {
            return Err(Error::NotNormalizable(p.name()));
        }
        Ok(Integrand { prior: *p, a: m.precision_half(), omega: m.omega(), r0 })
    }

    fn eval(&self, x: f64) -> f64 {
        let r = x.exp();
        let t = 1.0 / r;
        let d = t - self.omega;
        let ln_w = self.prior.ln_density_x(x) - self.a * d * d + x;
        if ln_w == f64::NEG_INFINITY {
            return 0.0;
        }
        (r - self.r0).powi(2) * ln_w.exp()
    }

    /// `A omega^2`, the factor pulled out of the exponent.
    fn ln_shift(&self) -> f64 {
        self.a * self.omega * self.omega
    }

    /// Below this `x` the exponent is under `-750` and the integrand vanishes.
    fn x_low(&self) -> f64 {
        -(self.omega.max(0.0) + (750.0 / self.a).sqrt()).ln()
    }

    fn x_high(&self) -> f64 {
        self.prior.support_upper().map_or(f64::INFINITY, f64::ln)
    }

    fn segment(&self, a: f64, b: f64) -> f64 {
        integrate(|x| self.eval(x), a, b, 0.0, 1e-12, 2000).value
    }
}

fn finite(value_scaled: f64, ln_shift: f64, upper: f64) -> RiskOutcome {
    let ln_value = value_scaled.ln() + ln_shift;
    RiskOutcome::Finite { value: ln_value.exp(), ln_value, upper }
}

/// Squared-error posterior risk `I(r0, A) = int (r - r0)^2 pi(r) exp(-A/r^2 + 2 omega A/r) dr`
/// with `A = 1 / (2 sigma_omega^2)`, left unnormalized.
///
/// The upper limit is doubled until the added mass is negligible. When three
/// consecutive doublings add non-shrinking mass at a stable growth rate the
/// integral is reported as divergent.
pub fn posterior_risk(p: &PriorSpec, m: &Measurement, r0: f64) -> Result<RiskOutcome> {
    let f = Integrand::new(p, m, r0)?;
    let omega_scale = if m.omega() > 0.0 { 1.0 / m.omega() } else { 1.0 };
    let mut upper = 4.0 * r0.max(1.0).max(omega_scale);
    let x_high = f.x_high();
    let x_low = f.x_low().min(upper.ln() - 1.0);
    if x_high <= upper.ln() {
        let value = f.segment(x_low, x_high);
        return Ok(finite(value, f.ln_shift(), x_high.exp()));
    }
    let mut total = f.segment(x_low, upper.ln());
    let mut increments: Vec<f64> = Vec::new();
    let mut run = 0usize;
    while upper < R_CAP {
        let (a, b) = (upper.ln(), (2.0 * upper).ln().min(x_high));
        let inc = f.segment(a, b);
        total += inc;
        upper = b.exp();
        if b >= x_high || inc <= 1e-14 * total {
            return Ok(finite(total, f.ln_shift(), upper));
        }
        let n = increments.len();
        let growing = n >= 1 && inc >= 0.999 * increments[n - 1];
        let stable = n >= 2 && {
            let now = (inc / increments[n - 1]).ln();
            let before = (increments[n - 1] / increments[n - 2]).ln();
            (now - before).abs() < 0.05
        };
        run = if growing && stable { run + 1 } else { 0 };
        increments.push(inc);
        if run >= DIVERGENCE_RUN {
            let keep = increments.len().saturating_sub(DIVERGENCE_RUN + 1);
            return Ok(RiskOutcome::Divergent { increments: increments.split_off(keep), upper });
        }
    }
    Err(Error::TailNotCaptured { max_nodes: increments.len() })
}

/// The risk integral restricted to `r <= r_max` (always finite).
pub fn posterior_risk_window(p: &PriorSpec, m: &Measurement, r0: f64, r_max: f64) -> Result<f64> {
    let f = Integrand::new(p, m, r0)?;
    if !(r_max > 0.0 && r_max.is_finite()) {
        return Err(Error::Domain { what: "window limit must be positive", value: r_max });
    }
    let b = r_max.ln().min(f.x_high());
    let a = f.x_low().min(b - 1.0);
    // split at powers of two so each piece is smooth on the GK15 scale
    let mut value = 0.0;
    let mut lo = a;
    while lo < b {
        let hi = (lo + std::f64::consts::LN_2).min(b);
        value += f.segment(lo, hi);
        lo = hi;
    }
    Ok((value.ln() + f.ln_shift()).exp())
}

/// Lower bound `(e^{-1/4} / 4) (int_1^2 pi) r0^2` on the risk at `A = omega = 1`.
pub fn risk_lower_bound(p: &PriorSpec, r0: f64) -> Result<f64> {
    if !(r0 > 0.0 && r0.is_finite()) {
        return Err(Error::Domain { what: "reference distance must be positive", value: r0 });
    }
    if !p.is_proper() {
        return Err(Error::NotNormalizable(p.name()));
    }
    let mass = integrate(|r| log_prior_density(p, r).map_or(0.0, f64::exp), 1.0, 2.0, 0.0, 1e-13, 200).value;
    Ok((-0.25f64).exp() / 4.0 * mass * r0 * r0)
}
