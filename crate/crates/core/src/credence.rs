//! Tail algebra built on p-credence tuples.
//!
//! A [`PCredence`] stores the tail `x^(-alpha) * (ln x)^(-beta) * exp(-delta * x^gamma)`,
//! i.e. polynomial and logarithmic exponents are stored with the sign flipped
//! relative to the generalized exponential power (GEP) density in
//! [`GepParams`]. [`pcred_to_gep`] is the only conversion between the two.
//!
//! Dominance follows "the heavier tail dominates": a density with a slower
//! decaying tail is bounded below by a multiple of a lighter one.

use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PCredence {
    pub gamma: f64,
    pub delta: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl PCredence {
    /// `gamma = +inf` is accepted and denotes a compactly supported density
    /// (no tail at all), which is lighter than every finite tuple.
    pub fn new(gamma: f64, delta: f64, alpha: f64, beta: f64) -> Result<Self> {
        if [gamma, delta, alpha, beta].iter().any(|v| v.is_nan()) || !delta.is_finite() {
            return Err(Error::Domain { what: "p-credence entries must be numbers", value: f64::NAN });
        }
        if gamma < 0.0 {
            return Err(Error::Domain { what: "p-credence gamma must be >= 0", value: gamma });
        }
        if gamma > 0.0 && delta <= 0.0 {
            return Err(Error::Domain { what: "p-credence delta must be > 0 when gamma > 0", value: delta });
        }
        if delta < 0.0 {
            return Err(Error::Domain { what: "p-credence delta must be >= 0", value: delta });
        }
        Ok(Self { gamma, delta, alpha, beta })
    }

    pub(crate) const fn raw(gamma: f64, delta: f64, alpha: f64, beta: f64) -> Self {
        Self { gamma, delta, alpha, beta }
    }

    /// Tail of a compactly supported density.
    pub const COMPACT: PCredence = PCredence::raw(f64::INFINITY, 1.0, 0.0, 0.0);

    /// p-credence of a normal likelihood with standard deviation `sigma`.
    pub fn normal(sigma: f64) -> Self {
        Self::raw(2.0, 0.5 / (sigma * sigma), 0.0, 0.0)
    }

    /// Whether a density with this tail can be normalized.
    pub fn is_proper(&self) -> bool {
        self.gamma > 0.0 || self.alpha > 1.0 || (self.alpha == 1.0 && self.beta > 1.0)
    }

    fn key(&self) -> [f64; 4] {
        [self.gamma, self.delta, self.alpha, self.beta]
    }
}

/// Native parameters of the GEP reference density
/// `max(|z|,z0)^alpha * ln(max(|z|,z0))^beta * exp(-delta * max(|z|,z0)^gamma)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GepParams {
    gamma: f64,
    delta: f64,
    alpha: f64,
    beta: f64,
    z0: f64,
}

impl GepParams {
    pub fn new(gamma: f64, delta: f64, alpha: f64, beta: f64, z0: f64) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidGep(msg));
        if [gamma, delta, alpha, beta, z0].iter().any(|v| !v.is_finite()) {
            return bad("all parameters must be finite".into());
        }
        if gamma < 0.0 || delta < 0.0 {
            return bad(format!("gamma ({gamma}) and delta ({delta}) must be non-negative"));
        }
        if z0 <= 0.0 {
            return bad(format!("z0 must be positive, got {z0}"));
        }
        if beta != 0.0 && z0 <= 1.0 {
            return bad(format!("z0 must exceed 1 when beta != 0, got {z0}"));
        }
        let log_term = if beta == 0.0 { 0.0 } else { beta / z0.ln() };
        if alpha + log_term > delta * gamma * z0.powf(gamma) {
            return bad(format!(
                "alpha + beta/ln(z0) = {} exceeds delta*gamma*z0^gamma = {}",
                alpha + log_term,
                delta * gamma * z0.powf(gamma)
            ));
        }
        if gamma == 0.0 && alpha > -1.0 {
            return bad(format!("alpha must be <= -1 when gamma = 0, got {alpha}"));
        }
        if gamma == 0.0 && alpha == -1.0 && beta >= -1.0 {
            return bad(format!("beta must be < -1 when gamma = 0 and alpha = -1, got {beta}"));
        }
        Ok(Self { gamma, delta, alpha, beta, z0 })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn z0(&self) -> f64 {
        self.z0
    }
}

/// Unnormalized log density of the GEP family at `z`.
pub fn gep_log_density(g: &GepParams, z: f64) -> f64 {
    let m = z.abs().max(g.z0);
    let lm = m.ln();
    let mut v = g.alpha * lm - g.delta * m.powf(g.gamma);
    if g.beta != 0.0 {
        v += g.beta * lm.ln();
    }
    v
}

/// Default cutoff: the smallest simple value satisfying the GEP cutoff rule.
pub fn default_z0(p: &PCredence) -> f64 {
    if p.beta != 0.0 {
        2.0
    } else {
        1.0
    }
}

/// Flips the polynomial and logarithmic exponents into GEP form.
pub fn pcred_to_gep(p: &PCredence, z0: Option<f64>) -> Result<GepParams> {
    let z0 = z0.unwrap_or_else(|| default_z0(p));
    GepParams::new(p.gamma, p.delta, -p.alpha, -p.beta, z0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Dominance {
    FirstDominates,
    SecondDominates,
    Equivalent,
}

impl std::fmt::Display for Dominance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Dominance::FirstDominates => "FIRST_DOMINATES",
            Dominance::SecondDominates => "SECOND_DOMINATES",
            Dominance::Equivalent => "EQUIVALENT",
        })
    }
}

/// Lexicographic comparison on `(gamma, delta, alpha, beta)`; the smaller
/// tuple has the heavier tail and dominates.
pub fn dominance(f: &PCredence, g: &PCredence) -> Dominance {
    for (a, b) in f.key().iter().zip(g.key().iter()) {
        match a.partial_cmp(b) {
            Some(Ordering::Less) => return Dominance::FirstDominates,
            Some(Ordering::Greater) => return Dominance::SecondDominates,
            _ => {}
        }
    }
    Dominance::Equivalent
}

/// Tail of the posterior for a prior without exponential decay combined with a
/// likelihood that has one: exponents of the likelihood, polynomial and
/// logarithmic parts added.
pub fn posterior_pcredence(likelihood: &PCredence, prior: &PCredence) -> Result<PCredence> {
    if prior.gamma != 0.0 {
        return Err(Error::HypothesisViolated(format!(
            "prior must have gamma = 0, got {}",
            prior.gamma
        )));
    }
    if !(likelihood.gamma > 0.0) {
        return Err(Error::HypothesisViolated(format!(
            "likelihood must have gamma > 0, got {}",
            likelihood.gamma
        )));
    }
    Ok(PCredence::raw(
        likelihood.gamma,
        likelihood.delta,
        prior.alpha + likelihood.alpha,
        prior.beta + likelihood.beta,
    ))
}

/// Whether the `k`-th absolute moment of a density with this tail is finite.
pub fn moment_finiteness(tail: &PCredence, k: u32) -> bool {
    let need = k as f64 + 1.0;
    tail.gamma > 0.0 || tail.alpha > need || (tail.alpha == need && tail.beta > 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceBounds {
    pub k_lower: f64,
    pub k_upper: f64,
    pub argmin: f64,
    pub argmax: f64,
}

/// Smallest and largest ratio `exp(target(z) - gep(z))` on a uniform grid of
/// `n` points over `range`. Both finite and positive means the target and the
/// reference are equivalent on that range.
pub fn empirical_equivalence_bounds<F>(
    target_logdensity: F,
    g: &GepParams,
    range: (f64, f64),
    n: usize,
) -> Result<EquivalenceBounds>
where
    F: Fn(f64) -> f64,
{
    let (lo, hi) = range;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::Domain { what: "range must be a finite, non-empty interval", value: hi - lo });
    }
    if n < 100 {
        return Err(Error::Domain { what: "grid size must be at least 100", value: n as f64 });
    }
    let mut out = EquivalenceBounds {
        k_lower: f64::INFINITY,
        k_upper: f64::NEG_INFINITY,
        argmin: lo,
        argmax: lo,
    };
    for i in 0..n {
        let z = lo + (hi - lo) * i as f64 / (n - 1) as f64;
        let log_ratio = target_logdensity(z) - gep_log_density(g, z);
        if !log_ratio.is_finite() {
            return Err(Error::UnboundedRatio { t: z });
        }
        let ratio = log_ratio.exp();
        if ratio == 0.0 || !ratio.is_finite() {
            return Err(Error::UnboundedRatio { t: z });
        }
        if ratio < out.k_lower {
            out.k_lower = ratio;
            out.argmin = z;
        }
        if ratio > out.k_upper {
            out.k_upper = ratio;
            out.argmax = z;
        }
    }
    Ok(out)
}
