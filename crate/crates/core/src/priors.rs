//! Prior catalog over distance `r > 0`, with tail metadata and the conjugate
//! reciprocal-Gaussian update.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::credence::PCredence;
use crate::error::{Error, Result};
use crate::model::Measurement;
use crate::special::{
    ln_gamma, ln_std_normal_cdf, ln_std_normal_pdf, ln_std_normal_sf, std_normal_cdf, std_normal_isf,
    std_normal_quantile, std_normal_sf,
};

/// Width of the window around `r = scale` where the product half-Cauchy uses
/// its series expansion instead of `ln u / (u^2 - 1)`.
const PHC_SERIES_RADIUS: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum PriorSpec {
    /// `Gamma(shape, rate)`; the exponentially decreasing volume density prior is `Gamma(3, 1/L)`.
    Gamma { shape: f64, rate: f64 },
    ProperUniform { r_lim: f64 },
    /// Density proportional to `r^2` on `(0, r_lim]`.
    ConstantVolume { r_lim: f64 },
    /// `shape / scale` parameterization: density `scale^a / Gamma(a) r^(-a-1) exp(-scale/r)`.
    InverseGamma { shape: f64, scale: f64 },
    /// Law of `1/T` with `T ~ Normal(location, scale2)` truncated to `(0, inf)`.
    ReciprocalGaussian { location: f64, scale2: f64 },
    Weibull { shape: f64, scale: f64 },
    HalfCauchy { scale: f64 },
    /// Law of the product of two independent half-Cauchy variables, times `scale`.
    ProductHalfCauchy { scale: f64 },
    ImproperUniform,
}

/// Result of a log-prior gradient: a number inside the support, or a
/// rejection signal for points outside a compact support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PriorGrad {
    Value(f64),
    Reject,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecayClass {
    Exponential,
    Polynomial,
    LogPolynomial,
    Compact,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailMetadata {
    pub pcred: PCredence,
    pub reciprocal_invariant: bool,
    pub satisfies_c1: bool,
    pub satisfies_c2: bool,
    pub satisfies_c3: bool,
    pub decay_class: DecayClass,
}

fn positive(what: &'static str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Domain { what, value: v })
    }
}

impl PriorSpec {
    pub fn gamma(shape: f64, rate: f64) -> Result<Self> {
        Ok(Self::Gamma { shape: positive("gamma shape", shape)?, rate: positive("gamma rate", rate)? })
    }

    /// Exponentially decreasing volume density prior with length scale `l`.
    pub fn exp_decreasing(l: f64) -> Result<Self> {
        Self::gamma(3.0, 1.0 / positive("length scale", l)?)
    }

    pub fn proper_uniform(r_lim: f64) -> Result<Self> {
        Ok(Self::ProperUniform { r_lim: positive("r_lim", r_lim)? })
    }

    pub fn constant_volume(r_lim: f64) -> Result<Self> {
        Ok(Self::ConstantVolume { r_lim: positive("r_lim", r_lim)? })
    }

    pub fn inverse_gamma(shape: f64, scale: f64) -> Result<Self> {
        Ok(Self::InverseGamma {
            shape: positive("inverse-gamma shape", shape)?,
            scale: positive("inverse-gamma scale", scale)?,
        })
    }

    pub fn reciprocal_gaussian(location: f64, scale2: f64) -> Result<Self> {
        if !location.is_finite() {
            return Err(Error::Domain { what: "reciprocal-Gaussian location", value: location });
        }
        Ok(Self::ReciprocalGaussian { location, scale2: positive("reciprocal-Gaussian scale^2", scale2)? })
    }

    pub fn weibull(shape: f64, scale: f64) -> Result<Self> {
        Ok(Self::Weibull { shape: positive("weibull shape", shape)?, scale: positive("weibull scale", scale)? })
    }

    pub fn half_cauchy(scale: f64) -> Result<Self> {
        Ok(Self::HalfCauchy { scale: positive("half-Cauchy scale", scale)? })
    }

    pub fn product_half_cauchy(scale: f64) -> Result<Self> {
        Ok(Self::ProductHalfCauchy { scale: positive("product half-Cauchy scale", scale)? })
    }

    /// The six priors compared in the simulation study, at their default parameters.
    pub fn simulation_catalog() -> Vec<PriorSpec> {
        vec![
            PriorSpec::Gamma { shape: 3.0, rate: 10.0 },
            PriorSpec::InverseGamma { shape: 4.0, scale: 1.0 },
            PriorSpec::ReciprocalGaussian { location: 0.0, scale2: 10.0 },
            PriorSpec::Weibull { shape: 0.5, scale: 1.0 },
            PriorSpec::HalfCauchy { scale: 1.0 },
            PriorSpec::ProductHalfCauchy { scale: 1.0 },
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            PriorSpec::Gamma { .. } => "gamma",
            PriorSpec::ProperUniform { .. } => "proper_uniform",
            PriorSpec::ConstantVolume { .. } => "constant_volume",
            PriorSpec::InverseGamma { .. } => "inverse_gamma",
            PriorSpec::ReciprocalGaussian { .. } => "reciprocal_gaussian",
            PriorSpec::Weibull { .. } => "weibull",
            PriorSpec::HalfCauchy { .. } => "half_cauchy",
            PriorSpec::ProductHalfCauchy { .. } => "product_half_cauchy",
            PriorSpec::ImproperUniform => "improper_uniform",
        }
    }

    /// Builds a prior from a family name and a parameter map.
    ///
    /// Every family understands `scale` as a distance scale `L` (see
    /// [`PriorSpec::with_scale`]); family-specific keys override it. When the
    /// map carries no scale-like key and `default_scale` is given, that scale
    /// is applied.
    pub fn from_params(name: &str, params: &BTreeMap<String, f64>, default_scale: Option<f64>) -> Result<Self> {
        let get = |k: &str| params.get(k).copied();
        let known: &[&str] = match name {
            "gamma" => &["shape", "rate", "scale"],
            "proper_uniform" | "constant_volume" => &["r_lim", "scale"],
            "inverse_gamma" => &["shape", "scale"],
            "reciprocal_gaussian" => &["location", "scale2", "scale"],
            "weibull" => &["shape", "scale"],
            "half_cauchy" | "product_half_cauchy" => &["scale"],
            "improper_uniform" => &[],
            other => return Err(Error::Config(format!("unknown prior `{other}`"))),
        };
        if let Some(k) = params.keys().find(|k| !known.contains(&k.as_str())) {
            return Err(Error::Config(format!("prior `{name}` has no parameter `{k}`")));
        }
        let has_scale_key = ["scale", "rate", "r_lim", "scale2"].iter().any(|k| params.contains_key(*k));
        let mut spec = match name {
            "gamma" => {
                let shape = get("shape").unwrap_or(3.0);
                match (get("rate"), get("scale")) {
                    (Some(rate), _) => Self::gamma(shape, rate)?,
                    (None, Some(l)) => Self::gamma(shape, 1.0 / positive("scale", l)?)?,
                    (None, None) => Self::gamma(shape, 10.0)?,
                }
            }
            "proper_uniform" => Self::proper_uniform(get("r_lim").or(get("scale")).unwrap_or(1000.0))?,
            "constant_volume" => Self::constant_volume(get("r_lim").or(get("scale")).unwrap_or(1000.0))?,
            "inverse_gamma" => Self::inverse_gamma(get("shape").unwrap_or(4.0), get("scale").unwrap_or(1.0))?,
            "reciprocal_gaussian" => {
                let location = get("location").unwrap_or(0.0);
                match (get("scale2"), get("scale")) {
                    (Some(s2), _) => Self::reciprocal_gaussian(location, s2)?,
                    (None, Some(l)) => Self::reciprocal_gaussian(location, 1.0 / (l * l))?,
                    (None, None) => Self::reciprocal_gaussian(location, 10.0)?,
                }
            }
            "weibull" => Self::weibull(get("shape").unwrap_or(0.5), get("scale").unwrap_or(1.0))?,
            "half_cauchy" => Self::half_cauchy(get("scale").unwrap_or(1.0))?,
            "product_half_cauchy" => Self::product_half_cauchy(get("scale").unwrap_or(1.0))?,
            _ => PriorSpec::ImproperUniform,
        };
        if let (false, Some(l)) = (has_scale_key, default_scale) {
            spec = spec.with_scale(l)?;
        }
        Ok(spec)
    }

    /// Parameter map accepted back by [`PriorSpec::from_params`].
    pub fn params(&self) -> BTreeMap<String, f64> {
        let pairs: Vec<(&str, f64)> = match *self {
            PriorSpec::Gamma { shape, rate } => vec![("shape", shape), ("rate", rate)],
            PriorSpec::ProperUniform { r_lim } | PriorSpec::ConstantVolume { r_lim } => vec![("r_lim", r_lim)],
            PriorSpec::InverseGamma { shape, scale } | PriorSpec::Weibull { shape, scale } => {
                vec![("shape", shape), ("scale", scale)]
            }
            PriorSpec::ReciprocalGaussian { location, scale2 } => vec![("location", location), ("scale2", scale2)],
            PriorSpec::HalfCauchy { scale } | PriorSpec::ProductHalfCauchy { scale } => vec![("scale", scale)],
            PriorSpec::ImproperUniform => vec![],
        };
        pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    /// Puts the prior on distance scale `l`: the law of `l * R` where `R` is the
    /// unit-scale member of the family (shape parameters are kept).
    pub fn with_scale(&self, l: f64) -> Result<Self> {
        let l = positive("scale", l)?;
        Ok(match *self {
            PriorSpec::Gamma { shape, .. } => PriorSpec::Gamma { shape, rate: 1.0 / l },
            PriorSpec::ProperUniform { .. } => PriorSpec::ProperUniform { r_lim: l },
            PriorSpec::ConstantVolume { .. } => PriorSpec::ConstantVolume { r_lim: l },
            PriorSpec::InverseGamma { shape, .. } => PriorSpec::InverseGamma { shape, scale: l },
            PriorSpec::ReciprocalGaussian { location, .. } => {
                PriorSpec::ReciprocalGaussian { location: location / l, scale2: 1.0 / (l * l) }
            }
            PriorSpec::Weibull { shape, .. } => PriorSpec::Weibull { shape, scale: l },
            PriorSpec::HalfCauchy { .. } => PriorSpec::HalfCauchy { scale: l },
            PriorSpec::ProductHalfCauchy { .. } => PriorSpec::ProductHalfCauchy { scale: l },
            PriorSpec::ImproperUniform => PriorSpec::ImproperUniform,
        })
    }

    pub fn is_proper(&self) -> bool {
        !matches!(self, PriorSpec::ImproperUniform)
    }

    /// Upper end of the support, `None` when unbounded.
    pub fn support_upper(&self) -> Option<f64> {
        match *self {
            PriorSpec::ProperUniform { r_lim } | PriorSpec::ConstantVolume { r_lim } => Some(r_lim),
            _ => None,
        }
    }

    /// Log density at `x = ln r`, without the Jacobian. `-inf` outside a compact
    /// support. The improper uniform returns `0` (its unnormalized density).
    pub(crate) fn ln_density_x(&self, x: f64) -> f64 {
        match *self {
            PriorSpec::Gamma { shape, rate } => {
                shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * x - rate * x.exp()
            }
            PriorSpec::ProperUniform { r_lim } => {
                if x <= r_lim.ln() {
                    -r_lim.ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            PriorSpec::ConstantVolume { r_lim } => {
                if x <= r_lim.ln() {
                    3f64.ln() + 2.0 * x - 3.0 * r_lim.ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            PriorSpec::InverseGamma { shape, scale } => {
                shape * scale.ln() - ln_gamma(shape) - (shape + 1.0) * x - scale * (-x).exp()
            }
            PriorSpec::ReciprocalGaussian { location, scale2 } => {
                let s = scale2.sqrt();
                let z = ((-x).exp() - location) / s;
                ln_std_normal_pdf(z) - s.ln() - ln_std_normal_cdf(location / s) - 2.0 * x
            }
            PriorSpec::Weibull { shape, scale } => {
                let lu = x - scale.ln();
                shape.ln() - scale.ln() + (shape - 1.0) * lu - (shape * lu).exp()
            }
            PriorSpec::HalfCauchy { scale } => {
                let lu = x - scale.ln();
                (2.0 / PI).ln() - scale.ln() - ln_one_plus_exp(2.0 * lu)
            }
            PriorSpec::ProductHalfCauchy { scale } => {
                (4.0 / (PI * PI)).ln() - scale.ln() + ln_phc_kernel(x - scale.ln())
            }
            PriorSpec::ImproperUniform => 0.0,
        }
    }

    /// d/dx of [`Self::ln_density_x`]; `None` outside a compact support.
    pub(crate) fn grad_x(&self, x: f64) -> Option<f64> {
        Some(match *self {
            PriorSpec::Gamma { shape, rate } => shape - 1.0 - rate * x.exp(),
            PriorSpec::ProperUniform { r_lim } => {
                if x > r_lim.ln() {
                    return None;
                }
                0.0
            }
            PriorSpec::ConstantVolume { r_lim } => {
                if x > r_lim.ln() {
                    return None;
                }
                2.0
            }
            PriorSpec::InverseGamma { shape, scale } => -(shape + 1.0) + scale * (-x).exp(),
            PriorSpec::ReciprocalGaussian { location, scale2 } => {
                let t = (-x).exp();
                (t - location) * t / scale2 - 2.0
            }
            PriorSpec::Weibull { shape, scale } => {
                let lu = x - scale.ln();
                shape - 1.0 - shape * (shape * lu).exp()
            }
            PriorSpec::HalfCauchy { scale } => {
                let lu = x - scale.ln();
                // -2 u^2 / (1 + u^2), written to avoid overflow
                -2.0 / (1.0 + (-2.0 * lu).exp())
            }
            PriorSpec::ProductHalfCauchy { scale } => phc_kernel_grad(x - scale.ln()),
            PriorSpec::ImproperUniform => 0.0,
        })
    }

    pub fn tail_metadata(&self) -> TailMetadata {
        tail_metadata(self)
    }
}

fn ln_one_plus_exp(v: f64) -> f64 {
    if v > 0.0 {
        v + (-v).exp().ln_1p()
    } else {
        v.exp().ln_1p()
    }
}

/// `ln( ln u / (u^2 - 1) )` as a function of `y = ln u`, including the
/// removable singularity at `u = 1`.
fn ln_phc_kernel(y: f64) -> f64 {
    let e = y.exp_m1(); // u - 1
    if e.abs() < PHC_SERIES_RADIUS {
        // ln u / (u^2 - 1) = (1 - e + 5 e^2 / 6) / 2 + O(e^3)
        return (0.5 * (1.0 - e + 5.0 / 6.0 * e * e)).ln();
    }
    // ln|y| - ln|u^2 - 1|, with u^2 - 1 = expm1(2y)
    let ln_den = if y > 0.0 {
        if y > 20.0 {
            2.0 * y + (-(-2.0 * y).exp()).ln_1p()
        } else {
            (2.0 * y).exp_m1().ln()
        }
    } else {
        (-(2.0 * y).exp_m1()).ln()
    };
    y.abs().ln() - ln_den
}

/// d/dy of [`ln_phc_kernel`]: `1/y - 2 / (1 - e^{-2y})`.
fn phc_kernel_grad(y: f64) -> f64 {
    if y.abs() < 1e-3 {
        return -1.0 - y / 3.0 + y * y * y / 45.0;
    }
    1.0 / y - 2.0 / (-(-2.0 * y).exp_m1())
}

/// Normalized log prior density at distance `r`.
pub fn log_prior_density(p: &PriorSpec, r: f64) -> Result<f64> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Domain { what: "distance must be positive", value: r });
    }
    if !p.is_proper() {
        return Err(Error::NotNormalizable(p.name()));
    }
    if let Some(lim) = p.support_upper() {
        if r > lim {
            return Ok(f64::NEG_INFINITY);
        }
    }
    Ok(p.ln_density_x(r.ln()))
}

/// d/dx of `log_prior_density(p, e^x)`, or [`PriorGrad::Reject`] outside a compact support.
pub fn log_prior_grad(p: &PriorSpec, x: f64) -> Result<PriorGrad> {
    if !p.is_proper() {
        return Err(Error::NotNormalizable(p.name()));
    }
    if !x.is_finite() {
        return Err(Error::Domain { what: "log-distance must be finite", value: x });
    }
    Ok(match p.grad_x(x) {
        Some(g) => PriorGrad::Value(g),
        None => PriorGrad::Reject,
    })
}

pub fn tail_metadata(p: &PriorSpec) -> TailMetadata {
    let poly = |alpha: f64, beta: f64| PCredence::new(0.0, 0.0, alpha, beta).expect("valid tuple");
    let (pcred, decay_class) = match *p {
        PriorSpec::Gamma { shape, rate } => {
            (PCredence::new(1.0, rate, 1.0 - shape, 0.0).expect("valid tuple"), DecayClass::Exponential)
        }
        PriorSpec::Weibull { shape, scale } => (
            PCredence::new(shape, scale.powf(-shape), 1.0 - shape, 0.0).expect("valid tuple"),
            DecayClass::Exponential,
        ),
        PriorSpec::InverseGamma { shape, .. } => (poly(shape + 1.0, 0.0), DecayClass::Polynomial),
        PriorSpec::ReciprocalGaussian { .. } | PriorSpec::HalfCauchy { .. } => (poly(2.0, 0.0), DecayClass::Polynomial),
        PriorSpec::ProductHalfCauchy { .. } => (poly(2.0, -1.0), DecayClass::LogPolynomial),
        PriorSpec::ProperUniform { .. } | PriorSpec::ConstantVolume { .. } => (PCredence::COMPACT, DecayClass::Compact),
        PriorSpec::ImproperUniform => (poly(0.0, 0.0), DecayClass::Polynomial),
    };
    let reciprocal_invariant = match *p {
        PriorSpec::HalfCauchy { scale } | PriorSpec::ProductHalfCauchy { scale } => scale == 1.0,
        _ => false,
    };
    // location shifts wash out in the right tail unless the decay is exponential or faster
    let satisfies_c1 = match *p {
        PriorSpec::Weibull { shape, .. } => shape < 1.0,
        PriorSpec::InverseGamma { .. }
        | PriorSpec::ReciprocalGaussian { .. }
        | PriorSpec::HalfCauchy { .. }
        | PriorSpec::ProductHalfCauchy { .. } => true,
        _ => false,
    };
    let c2_c3 = matches!(
        p,
        PriorSpec::InverseGamma { .. }
            | PriorSpec::ReciprocalGaussian { .. }
            | PriorSpec::HalfCauchy { .. }
            | PriorSpec::ProductHalfCauchy { .. }
    );
    TailMetadata {
        pcred,
        reciprocal_invariant,
        satisfies_c1,
        satisfies_c2: c2_c3,
        satisfies_c3: c2_c3,
        decay_class,
    }
}

/// Largest `|f(x) - x^-2 f(1/x)|` over the grid.
pub fn check_reciprocal_invariance(p: &PriorSpec, grid: &[f64]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &x in grid {
        let f = log_prior_density(p, x)?.exp();
        let g = log_prior_density(p, 1.0 / x)?.exp() / (x * x);
        worst = worst.max((f - g).abs());
    }
    Ok(worst)
}

/// Scans `z` on a log grid from `1e-2` to `1e6` (20 points per decade) and
/// returns the first grid point from which `pi(z + theta) / pi(z)` stays within
/// `[1 - eps, 1 + eps]` for every sampled `|theta| <= theta_bound`.
pub fn check_c1(p: &PriorSpec, theta_bound: f64, eps: f64) -> Result<Option<f64>> {
    positive("theta bound", theta_bound)?;
    positive("tolerance", eps)?;
    if !p.is_proper() || p.support_upper().is_some() {
        return Err(Error::NotApplicable(format!("prior `{}` has no unbounded proper tail", p.name())));
    }
    const PER_DECADE: usize = 20;
    const THETAS: usize = 41;
    let zs: Vec<f64> = (0..=8 * PER_DECADE).map(|i| 10f64.powf(-2.0 + i as f64 / PER_DECADE as f64)).collect();
    let in_band = |z: f64| {
        let lz = log_prior_density(p, z).expect("z > 0");
        (0..THETAS).all(|j| {
            let theta = -theta_bound + 2.0 * theta_bound * j as f64 / (THETAS - 1) as f64;
            let zt = z + theta;
            let ratio = if zt <= 0.0 {
                0.0
            } else {
                (log_prior_density(p, zt).expect("zt > 0") - lz).exp()
            };
            (1.0 - eps..=1.0 + eps).contains(&ratio)
        })
    };
    let mut first_ok = None;
    for &z in &zs {
        if in_band(z) {
            first_ok.get_or_insert(z);
        } else {
            first_ok = None;
        }
    }
    Ok(first_ok)
}

/// Parameters `(location, scale2)` of a reciprocal-Gaussian law: `1/T` with
/// `T ~ Normal(location, scale2)` truncated to `(0, inf)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RgParams {
    pub location: f64,
    pub scale2: f64,
}

impl RgParams {
    fn scale(&self) -> f64 {
        self.scale2.sqrt()
    }

    /// Standardized truncation point of `T`.
    fn a(&self) -> f64 {
        -self.location / self.scale()
    }

    /// Quantile of `T` at lower-tail probability `p`.
    pub fn t_quantile(&self, p: f64) -> f64 {
        let a = self.a();
        let z = if a > 0.0 {
            std_normal_isf((1.0 - p) * std_normal_sf(a))
        } else {
            std_normal_quantile(std_normal_cdf(a) + p * std_normal_sf(a))
        };
        self.location + self.scale() * z
    }

    /// Quantile of the distance `r = 1/T`.
    pub fn quantile(&self, p: f64) -> f64 {
        1.0 / self.t_quantile(1.0 - p)
    }

    /// `P(r <= x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let z = (1.0 / x - self.location) / self.scale();
        (ln_std_normal_sf(z) - ln_std_normal_sf(self.a())).exp()
    }

    /// `E[T] = E[1/r]`, the mean of a replicated parallax.
    pub fn mean_inverse(&self) -> f64 {
        let a = self.a();
        self.location + self.scale() * (ln_std_normal_pdf(a) - ln_std_normal_sf(a)).exp()
    }

    pub fn as_prior(&self) -> PriorSpec {
        PriorSpec::ReciprocalGaussian { location: self.location, scale2: self.scale2 }
    }
}

/// Conjugate update of a `RG(0, prior_scale2)` prior by one parallax.
pub fn conjugate_rg_posterior(prior_scale2: f64, m: &Measurement) -> Result<RgParams> {
    positive("prior scale^2", prior_scale2)?;
    let s2 = m.sigma_omega() * m.sigma_omega();
    let tau2 = 1.0 / (1.0 / s2 + 1.0 / prior_scale2);
    Ok(RgParams { location: tau2 * m.omega() / s2, scale2: tau2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate;

    fn all_defaults() -> Vec<PriorSpec> {
        let mut v = PriorSpec::simulation_catalog();
        v.push(PriorSpec::ProperUniform { r_lim: 1000.0 });
        v.push(PriorSpec::ConstantVolume { r_lim: 1000.0 });
        v
    }

    #[test]
    fn density_examples() {
        let hc = PriorSpec::half_cauchy(1.0).unwrap();
        assert!((log_prior_density(&hc, 1.0).unwrap() - (1.0 / PI).ln()).abs() < 1e-15);
        let phc = PriorSpec::product_half_cauchy(1.0).unwrap();
        assert!((log_prior_density(&phc, 1.0).unwrap() - (2.0 / (PI * PI)).ln()).abs() < 1e-15);
    }

    #[test]
    fn phc_series_matches_direct_formula_near_one() {
        // direct evaluation a bit outside the series window versus the series just inside
        for &e in &[2e-4, 5e-4, -3e-4] {
            let u: f64 = 1.0 + e;
            let direct = (u.ln() / (u * u - 1.0)).ln();
            let series = (0.5 * (1.0 - e + 5.0 / 6.0 * e * e)).ln();
            assert!((direct - series).abs() < 1e-10, "e={e}");
            assert!((ln_phc_kernel(u.ln()) - direct).abs() < 1e-12);
        }
        let lo = ln_phc_kernel((1.0 - 0.99e-4f64).ln());
        let hi = ln_phc_kernel((1.0 - 1.01e-4f64).ln());
        assert!((lo - hi).abs() < 1e-5);
    }

    #[test]
    fn improper_uniform_is_rejected() {
        assert_eq!(log_prior_density(&PriorSpec::ImproperUniform, 1.0), Err(Error::NotNormalizable("improper_uniform")));
        assert!(log_prior_grad(&PriorSpec::ImproperUniform, 0.0).is_err());
        assert!(log_prior_density(&PriorSpec::half_cauchy(1.0).unwrap(), 0.0).is_err());
    }

    #[test]
    fn compact_support_outside_is_log_zero_and_grad_rejects() {
        let u = PriorSpec::proper_uniform(10.0).unwrap();
        assert_eq!(log_prior_density(&u, 11.0).unwrap(), f64::NEG_INFINITY);
        assert_eq!(log_prior_grad(&u, 11f64.ln()).unwrap(), PriorGrad::Reject);
        assert_eq!(log_prior_grad(&u, 1.0).unwrap(), PriorGrad::Value(0.0));
    }

    #[test]
    fn grad_examples() {
        let hc = PriorSpec::half_cauchy(1.0).unwrap();
        assert_eq!(log_prior_grad(&hc, 0.0).unwrap(), PriorGrad::Value(-1.0));
        let g = PriorSpec::gamma(3.0, 10.0).unwrap();
        // d/dx [ln Gamma(e^x)] = (3 - 1) - 10 e^x; the Jacobian term is added by the sampler
        assert_eq!(log_prior_grad(&g, 0.0).unwrap(), PriorGrad::Value(2.0 - 10.0));
    }

    #[test]
    fn constructors_validate() {
        assert!(PriorSpec::gamma(0.0, 1.0).is_err());
        assert!(PriorSpec::half_cauchy(-1.0).is_err());
        assert!(PriorSpec::proper_uniform(0.0).is_err());
        assert!(PriorSpec::reciprocal_gaussian(f64::NAN, 1.0).is_err());
        assert_eq!(PriorSpec::exp_decreasing(1000.0).unwrap(), PriorSpec::Gamma { shape: 3.0, rate: 1e-3 });
    }

    #[test]
    fn rg_prior_matches_closed_form_at_zero_location() {
        let s2: f64 = 10.0;
        let p = PriorSpec::reciprocal_gaussian(0.0, s2).unwrap();
        for &r in &[0.05, 0.3, 1.0, 7.0] {
            let s = s2.sqrt();
            let closed = (2.0 / PI).sqrt() / (s * r * r) * (-1.0 / (2.0 * s2 * r * r)).exp();
            assert!((log_prior_density(&p, r).unwrap() - closed.ln()).abs() < 1e-13);
        }
    }

    #[test]
    fn metadata_examples() {
        let g = tail_metadata(&PriorSpec::gamma(3.0, 10.0).unwrap());
        assert_eq!(g.pcred, PCredence::new(1.0, 10.0, -2.0, 0.0).unwrap());
        let phc = tail_metadata(&PriorSpec::product_half_cauchy(1.0).unwrap());
        assert_eq!(phc.pcred, PCredence::new(0.0, 0.0, 2.0, -1.0).unwrap());
        assert!(phc.reciprocal_invariant);
        let rg = tail_metadata(&PriorSpec::reciprocal_gaussian(0.0, 10.0).unwrap());
        assert!(!rg.reciprocal_invariant);
        for p in all_defaults() {
            let md = tail_metadata(&p);
            assert_eq!(md.decay_class == DecayClass::Compact, p.support_upper().is_some(), "{p:?}");
        }
    }

    #[test]
    fn rg_functional_equation_gives_half_normal() {
        // (1/x^2) f(1/x) for RG+(0, s2) is the half-normal density with variance s2
        let s2: f64 = 10.0;
        let p = PriorSpec::reciprocal_gaussian(0.0, s2).unwrap();
        for &x in &[0.1, 1.0, 3.0] {
            let lhs = log_prior_density(&p, 1.0 / x).unwrap().exp() / (x * x);
            let half_normal = 2.0 * (-x * x / (2.0 * s2)).exp() / (2.0 * PI * s2).sqrt();
            assert!((lhs - half_normal).abs() < 1e-14);
        }
    }

    fn log_grid() -> Vec<f64> {
        (0..=600).map(|i| 10f64.powf(-3.0 + i as f64 / 100.0)).collect()
    }

    #[test]
    fn reciprocal_invariance_examples() {
        let grid = log_grid();
        let hc = check_reciprocal_invariance(&PriorSpec::half_cauchy(1.0).unwrap(), &grid).unwrap();
        assert!(hc < 1e-12, "{hc}");
        let phc = check_reciprocal_invariance(&PriorSpec::product_half_cauchy(1.0).unwrap(), &grid).unwrap();
        assert!(phc < 1e-10, "{phc}");
        let g = check_reciprocal_invariance(&PriorSpec::gamma(3.0, 10.0).unwrap(), &grid).unwrap();
        assert!(g > 0.1);
        for p in all_defaults() {
            let dev = check_reciprocal_invariance(&p, &grid).unwrap();
            assert_eq!(dev < 1e-10, tail_metadata(&p).reciprocal_invariant, "{p:?}: {dev}");
            if !tail_metadata(&p).reciprocal_invariant {
                assert!(dev > 1e-2, "{p:?}: {dev}");
            }
        }
    }

    #[test]
    fn c1_examples() {
        let hc = PriorSpec::half_cauchy(1.0).unwrap();
        let a1 = check_c1(&hc, 1.0, 0.05).unwrap();
        assert!(a1.is_some_and(|z| z.is_finite()));
        let g = PriorSpec::gamma(3.0, 10.0).unwrap();
        assert_eq!(check_c1(&g, 1.0, 0.05).unwrap(), None);
        // with eps = 2 the half-Cauchy ratio never leaves [-1, 3]
        assert_eq!(check_c1(&hc, 1.0, 2.0).unwrap(), Some(1e-2));
        assert!(matches!(check_c1(&PriorSpec::proper_uniform(5.0).unwrap(), 1.0, 0.1), Err(Error::NotApplicable(_))));
    }

    #[test]
    fn c1_flag_agrees_with_scan() {
        for p in PriorSpec::simulation_catalog() {
            let found = check_c1(&p, 1.0, 0.05).unwrap().is_some();
            assert_eq!(found, tail_metadata(&p).satisfies_c1, "{p:?}");
        }
    }

    #[test]
    fn conjugate_update_examples() {
        let m = Measurement::new(2.0, 1.0).unwrap();
        let post = conjugate_rg_posterior(1.0, &m).unwrap();
        assert_eq!((post.scale2, post.location), (0.5, 1.0));
        let flat = conjugate_rg_posterior(1e12, &m).unwrap();
        assert!((flat.scale2 - 1.0).abs() < 1e-11 && (flat.location - 2.0).abs() < 1e-11);
        let neg = conjugate_rg_posterior(1.0, &Measurement::new(-1.0, 1.0).unwrap()).unwrap();
        assert_eq!(neg.location, -0.5);
        // truncated-normal mass of T above zero: Phi(location / tau)
        let mass = std_normal_cdf(neg.location / neg.scale2.sqrt());
        assert!(mass > 0.0 && mass < 0.5);
        assert!((neg.cdf(1e300) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rg_quantile_inverts_cdf_and_handles_deep_truncation() {
        for post in [
            RgParams { location: 1.0, scale2: 0.5 },
            RgParams { location: -0.98, scale2: 0.0098 },
            RgParams { location: 40.0, scale2: 1.0 },
        ] {
            for &p in &[0.01, 0.25, 0.5, 0.75, 0.99] {
                let r = post.quantile(p);
                assert!(r > 0.0);
                assert!((post.cdf(r) - p).abs() < 1e-12, "{post:?} p={p}");
            }
        }
    }

    #[test]
    fn rg_mean_inverse_matches_quadrature() {
        let post = RgParams { location: -0.5, scale2: 0.5 };
        let s = post.scale2.sqrt();
        let num = integrate(|t| t * (-(t - post.location).powi(2) / (2.0 * post.scale2)).exp(), 0.0, 20.0, 1e-15, 1e-13, 200);
        let den = integrate(|t| (-(t - post.location).powi(2) / (2.0 * post.scale2)).exp(), 0.0, 20.0, 1e-15, 1e-13, 200);
        assert!((post.mean_inverse() - num.value / den.value).abs() < 1e-10 * s);
    }

    #[test]
    fn params_round_trip_through_names() {
        for p in all_defaults() {
            let back = PriorSpec::from_params(p.name(), &p.params(), None).unwrap();
            assert_eq!(back, p);
        }
        let mut m = BTreeMap::new();
        m.insert("bogus".to_string(), 1.0);
        assert!(PriorSpec::from_params("half_cauchy", &m, None).is_err());
        assert!(PriorSpec::from_params("nope", &BTreeMap::new(), None).is_err());
    }

    #[test]
    fn default_scale_applies_only_when_no_scale_given() {
        let p = PriorSpec::from_params("half_cauchy", &BTreeMap::new(), Some(1000.0)).unwrap();
        assert_eq!(p, PriorSpec::HalfCauchy { scale: 1000.0 });
        let g = PriorSpec::from_params("gamma", &BTreeMap::new(), Some(1000.0)).unwrap();
        assert_eq!(g, PriorSpec::Gamma { shape: 3.0, rate: 1e-3 });
        let mut m = BTreeMap::new();
        m.insert("scale".to_string(), 2.0);
        let p = PriorSpec::from_params("half_cauchy", &m, Some(1000.0)).unwrap();
        assert_eq!(p, PriorSpec::HalfCauchy { scale: 2.0 });
    }

    #[test]
    fn with_scale_is_a_change_of_units() {
        // density of L*R at r equals f_R(r/L)/L
        let l = 7.5;
        for p in PriorSpec::simulation_catalog() {
            let scaled = p.with_scale(l).unwrap();
            let unit = p.with_scale(1.0).unwrap();
            for &r in &[0.3, 2.0, 40.0] {
                let a = log_prior_density(&scaled, r).unwrap();
                let b = log_prior_density(&unit, r / l).unwrap() - l.ln();
                assert!((a - b).abs() < 1e-11, "{p:?} r={r}: {a} vs {b}");
            }
        }
    }
}
