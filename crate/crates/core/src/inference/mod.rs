//! Posterior computation for a single parallax: a deterministic quadrature
//! engine, a NUTS sampler, summaries, risk integrals, convergence diagnostics
//! and posterior predictive replication.
//!
//! Both engines work in `x = ln r`, where the target is
//! `ln prior(e^x) + ln likelihood(e^x) + x`.

mod diagnostics;
mod nuts;
mod ppc;
mod quadrature;
mod risk;
mod summary;

pub use diagnostics::{diagnostics, effective_sample_size, mcse_quantile, sample_quantile, split_rhat, Diagnostics};
pub use nuts::{mcmc_sample, ChainSet, ChainStats, McmcConfig};
pub use ppc::ppc_replicates;
pub use quadrature::{quadrature_posterior, GridConfig, PosteriorGrid};
pub use risk::{posterior_risk, posterior_risk_window, risk_lower_bound, RiskOutcome};
pub use summary::{summarize, tail_probability, PosteriorSummary, DEFAULT_QUANTILES};

use crate::error::{Error, Result};
use crate::model::{log_likelihood_grad, log_likelihood_x, Measurement};
use crate::priors::PriorSpec;

/// Which posterior engine a caller asks for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Quadrature,
    Mcmc,
}

impl std::str::FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "quadrature" | "quad" => Ok(Engine::Quadrature),
            "mcmc" | "nuts" => Ok(Engine::Mcmc),
            other => Err(Error::Config(format!("unknown engine `{other}` (expected quadrature or mcmc)"))),
        }
    }
}

impl std::fmt::Display for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Engine::Quadrature => "quadrature",
            Engine::Mcmc => "mcmc",
        })
    }
}

/// Per-stream seed derived from a base seed and a stream index (splitmix64).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed.wrapping_add(stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Unnormalized log posterior in `x = ln r`, Jacobian included.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Target {
    prior: PriorSpec,
    m: Measurement,
    x_max: f64,
}

impl Target {
    pub(crate) fn new(prior: &PriorSpec, m: &Measurement) -> Result<Self> {
        if !prior.is_proper() {
            return Err(Error::ImproperPosterior(prior.name()));
        }
        let x_max = prior.support_upper().map_or(f64::INFINITY, f64::ln);
        Ok(Target { prior: *prior, m: *m, x_max })
    }

    pub(crate) fn x_max(&self) -> f64 {
        self.x_max
    }

    pub(crate) fn ln(&self, x: f64) -> f64 {
        if x > self.x_max {
            return f64::NEG_INFINITY;
        }
        self.prior.ln_density_x(x) + log_likelihood_x(&self.m, x) + x
    }

    /// `None` outside the prior support.
    pub(crate) fn grad(&self, x: f64) -> Option<f64> {
        self.prior.grad_x(x).map(|g| g + log_likelihood_grad(&self.m, x) + 1.0)
    }

    /// Approximate global maximizer of [`Target::ln`] and the local width
    /// `1 / sqrt(-ln'')` there.
    pub(crate) fn locate_mode(&self) -> (f64, f64) {
        const STEP: f64 = 0.02;
        let mut best = (f64::NAN, f64::NEG_INFINITY);
        let mut consider = |x: f64| {
            let v = self.ln(x);
            if v > best.1 {
                best = (x, v);
            }
        };
        let hi = self.x_max.min(60.0);
        let n = ((hi + 60.0) / STEP).ceil() as usize;
        for i in 0..=n {
            consider((-60.0 + i as f64 * STEP).min(hi));
        }
        let (w, s) = (self.m.omega(), self.m.sigma_omega());
        if w - 10.0 * s > 0.0 {
            let (a, b) = (-(w + 10.0 * s).ln(), -(w - 10.0 * s).ln());
            for i in 0..=400 {
                consider(a + (b - a) * i as f64 / 400.0);
            }
        }
        let (x0, _) = best;
        let step = if w - 10.0 * s > 0.0 { (s / w).min(STEP) } else { STEP };
        let (mut lo, mut hi) = (x0 - 2.0 * step, (x0 + 2.0 * step).min(self.x_max));
        // golden-section refinement
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..80 {
            let c = hi - phi * (hi - lo);
            let d = lo + phi * (hi - lo);
            if self.ln(c) >= self.ln(d) {
                hi = d;
            } else {
                lo = c;
            }
        }
        let mut mode = 0.5 * (lo + hi);
        if self.ln(x0) > self.ln(mode) {
            mode = x0;
        }
        let h = 1e-4 * step;
        let (xl, xr) = (mode - h, (mode + h).min(self.x_max));
        let curvature = match (self.grad(xl), self.grad(xr)) {
            (Some(a), Some(b)) => -(b - a) / (xr - xl),
            _ => f64::NAN,
        };
        let width = if curvature > 0.0 && curvature.is_finite() { 1.0 / curvature.sqrt() } else { 0.1 };
        (mode, width.clamp(1e-9, 10.0))
    }
}
