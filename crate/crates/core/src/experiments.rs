//! Scripted reproductions: the squared-error sweep over fractional parallax
//! error, the vanishing-tail sweep for reciprocal-invariant priors, the risk
//! sweep, a diagnostics summary and estimator comparisons.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{
    derive_seed, diagnostics, mcmc_sample, posterior_risk, quadrature_posterior, risk_lower_bound, sample_quantile,
    summarize, tail_probability, Engine, GridConfig, McmcConfig, RiskOutcome,
};
use crate::model::{melo_distance, mle_distance, Measurement};
use crate::priors::PriorSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub j: usize,
    pub omega_min: f64,
    pub omega_max: f64,
    pub sigma_omega: f64,
    pub priors: Vec<PriorSpec>,
    pub engine: Engine,
    pub mcmc: McmcConfig,
    pub grid: GridConfig,
    pub seed: u64,
    /// Observe `omega ~ Normal(1/r_true, sigma_omega^2)` instead of the noiseless `1/r_true`.
    pub noisy: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            j: 500,
            omega_min: 0.045,
            omega_max: 8.0,
            sigma_omega: 0.045,
            priors: PriorSpec::simulation_catalog(),
            engine: Engine::Quadrature,
            mcmc: McmcConfig::default(),
            grid: GridConfig::default(),
            seed: 0,
            noisy: false,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.j < 2 {
            return Err(Error::Config(format!("sweep needs J >= 2, got {}", self.j)));
        }
        if !(self.omega_min > 0.0 && self.omega_min < self.omega_max && self.omega_max.is_finite()) {
            return Err(Error::Config(format!(
                "sweep needs 0 < omega_min < omega_max, got [{}, {}]",
                self.omega_min, self.omega_max
            )));
        }
        if !(self.sigma_omega > 0.0 && self.sigma_omega.is_finite()) {
            return Err(Error::Config(format!("sigma_omega must be positive, got {}", self.sigma_omega)));
        }
        if self.priors.is_empty() {
            return Err(Error::Config("sweep needs at least one prior".into()));
        }
        Ok(())
    }

    /// Uniformly spaced design parallaxes from `omega_min` to `omega_max`.
    pub fn omegas(&self) -> Vec<f64> {
        let step = (self.omega_max - self.omega_min) / (self.j - 1) as f64;
        (0..self.j).map(|i| if i + 1 == self.j { self.omega_max } else { self.omega_min + step * i as f64 }).collect()
    }
}

/// One (design point, prior) outcome of the squared-error sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub index: usize,
    pub omega: f64,
    pub omega_obs: f64,
    pub r_true: f64,
    pub f: f64,
    pub prior: String,
    pub r_hat: Option<f64>,
    pub sq_err: Option<f64>,
    pub rhat: Option<f64>,
    pub ess: Option<f64>,
    pub error: Option<String>,
}

struct PointEstimate {
    median: f64,
    rhat: Option<f64>,
    ess: Option<f64>,
}

fn estimate(p: &PriorSpec, m: &Measurement, engine: Engine, grid: &GridConfig, mcmc: &McmcConfig) -> Result<PointEstimate> {
    match engine {
        Engine::Quadrature => {
            let g = quadrature_posterior(p, m, grid)?;
            Ok(PointEstimate { median: g.quantile(0.5), rhat: None, ess: None })
        }
        Engine::Mcmc => {
            let cs = mcmc_sample(p, m, mcmc)?;
            cs.ensure_stable()?;
            let median = sample_quantile(&cs.distances(), 0.5);
            let d = diagnostics(&cs, |x| x).ok();
            Ok(PointEstimate { median, rhat: d.map(|d| d.rhat), ess: d.map(|d| d.ess) })
        }
    }
}

/// Squared error of the posterior median over a grid of true distances.
/// Failures at individual points are recorded in the row.
pub fn run_parallax_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRecord>> {
    cfg.validate()?;
    let omegas = cfg.omegas();
    let rows: Vec<Vec<SweepRecord>> = omegas
        .par_iter()
        .enumerate()
        .map(|(index, &omega)| {
            let point_seed = derive_seed(cfg.seed, index as u64);
            let omega_obs = if cfg.noisy {
                let z: f64 = ChaCha8Rng::seed_from_u64(point_seed).sample(StandardNormal);
                omega + cfg.sigma_omega * z
            } else {
                omega
            };
            let r_true = 1.0 / omega;
            let f = cfg.sigma_omega / omega;
            let mcmc = McmcConfig { seed: point_seed, ..cfg.mcmc };
            cfg.priors
                .iter()
                .map(|p| {
                    let outcome = Measurement::new(omega_obs, cfg.sigma_omega)
                        .and_then(|m| estimate(p, &m, cfg.engine, &cfg.grid, &mcmc));
                    let (r_hat, rhat, ess, error) = match outcome {
                        Ok(e) => (Some(e.median), e.rhat, e.ess, None),
                        Err(e) => (None, None, None, Some(e.to_string())),
                    };
                    SweepRecord {
                        index,
                        omega,
                        omega_obs,
                        r_true,
                        f,
                        prior: p.name().to_string(),
                        r_hat,
                        sq_err: r_hat.map(|r| (r - r_true).powi(2)),
                        rhat,
                        ess,
                        error,
                    }
                })
                .collect()
        })
        .collect();
    Ok(rows.into_iter().flatten().collect())
}

/// Mean squared error per bin of `f` for one prior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FBin {
    pub f_lo: f64,
    pub f_hi: f64,
    pub mean_sq_err: f64,
    pub count: usize,
}

/// Bins the rows of `prior` by `f` into half-open bins `[k w, (k+1) w)`;
/// empty bins are omitted and failed rows skipped.
pub fn bin_by_f(records: &[SweepRecord], prior: &str, width: f64) -> Vec<FBin> {
    let mut bins: std::collections::BTreeMap<i64, (f64, usize)> = std::collections::BTreeMap::new();
    for r in records.iter().filter(|r| r.prior == prior) {
        if let Some(e) = r.sq_err {
            // guard against f = k*w landing one bin low through rounding
            let k = (r.f / width + 1e-9).floor() as i64;
            let slot = bins.entry(k).or_insert((0.0, 0));
            slot.0 += e;
            slot.1 += 1;
        }
    }
    bins.into_iter()
        .map(|(k, (sum, count))| FBin {
            f_lo: k as f64 * width,
            f_hi: (k + 1) as f64 * width,
            mean_sq_err: sum / count as f64,
            count,
        })
        .collect()
}

/// Mean squared error of `prior` over the design points with the largest 10% of `f`.
pub fn top_decile_mean_sq_err(records: &[SweepRecord], prior: &str) -> Option<f64> {
    let mut rows: Vec<&SweepRecord> = records.iter().filter(|r| r.prior == prior).collect();
    rows.sort_by(|a, b| b.f.total_cmp(&a.f));
    let take = rows.len().div_ceil(10);
    let errs: Vec<f64> = rows.iter().take(take).filter_map(|r| r.sq_err).collect();
    (errs.len() == take && take > 0).then(|| errs.iter().sum::<f64>() / take as f64)
}

/// Threshold growth `c(omega)` for the vanishing-tail sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Growth {
    InverseSquare,
    InverseCube,
}

impl Growth {
    pub fn threshold(&self, omega: f64) -> f64 {
        match self {
            Growth::InverseSquare => omega.powi(-2),
            Growth::InverseCube => omega.powi(-3),
        }
    }
}

impl std::str::FromStr for Growth {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "inverse_square" => Ok(Growth::InverseSquare),
            "inverse_cube" => Ok(Growth::InverseCube),
            _ => Err(Error::Config(format!("unknown growth `{s}` (inverse_square or inverse_cube)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub omega: f64,
    pub threshold: f64,
    pub tail_probability: f64,
}

/// `P(r > c(omega) | omega)` along a decreasing list of parallaxes.
pub fn run_tail_sweep(p: &PriorSpec, growth: Growth, omegas: &[f64], sigma_omega: f64) -> Result<Vec<TailRow>> {
    if !p.tail_metadata().reciprocal_invariant {
        log::warn!("prior `{}` is not reciprocal-invariant; the vanishing-tail guarantee does not apply", p.name());
    }
    if omegas.iter().any(|&w| !(w > 0.0)) {
        return Err(Error::Config("tail sweep needs positive parallaxes".into()));
    }
    omegas
        .par_iter()
        .map(|&omega| {
            let g = quadrature_posterior(p, &Measurement::new(omega, sigma_omega)?, &GridConfig::default())?;
            let threshold = growth.threshold(omega);
            Ok(TailRow { omega, threshold, tail_probability: tail_probability(&g, threshold) })
        })
        .collect()
}

/// `count` log-spaced values from `hi` down to `lo`.
pub fn log_spaced_desc(hi: f64, lo: f64, count: usize) -> Vec<f64> {
    let (a, b) = (hi.ln(), lo.ln());
    (0..count).map(|i| (a + (b - a) * i as f64 / (count - 1).max(1) as f64).exp()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskRow {
    pub r0: f64,
    pub risk: RiskOutcome,
    /// Analytic lower bound, available when `A = omega = 1`.
    pub lower_bound: Option<f64>,
}

/// Risk integral at each reference distance for fixed `A = 1/(2 sigma_omega^2)` and `omega`.
pub fn run_risk_sweep(p: &PriorSpec, r0s: &[f64], a: f64, omega: f64) -> Result<Vec<RiskRow>> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::Domain { what: "A must be positive", value: a });
    }
    let m = Measurement::new(omega, (0.5 / a).sqrt())?;
    let unit = (a - 1.0).abs() < 1e-12 && (omega - 1.0).abs() < 1e-12;
    r0s.par_iter()
        .map(|&r0| {
            Ok(RiskRow {
                r0,
                risk: posterior_risk(p, &m, r0)?,
                lower_bound: if unit { Some(risk_lower_bound(p, r0)?) } else { None },
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRow {
    pub prior: String,
    pub mean_ess: f64,
    pub mean_rhat: f64,
    pub points: usize,
    /// Points whose chains were degenerate or failed, excluded from the means.
    pub excluded: usize,
}

/// Split-R-hat and ESS of `ln r` averaged over the sweep's design points, per prior.
pub fn run_diagnostics_summary(cfg: &SweepConfig) -> Result<Vec<DiagnosticsRow>> {
    cfg.validate()?;
    if cfg.mcmc.n_chains < 2 {
        return Err(Error::Config(format!("diagnostics need at least 2 chains, got {}", cfg.mcmc.n_chains)));
    }
    let omegas = cfg.omegas();
    cfg.priors
        .iter()
        .map(|p| {
            let per_point: Vec<Option<(f64, f64)>> = omegas
                .par_iter()
                .enumerate()
                .map(|(i, &omega)| {
                    let m = Measurement::new(omega, cfg.sigma_omega).ok()?;
                    let mc = McmcConfig { seed: derive_seed(cfg.seed, i as u64), ..cfg.mcmc };
                    let cs = mcmc_sample(p, &m, &mc).ok()?;
                    let d = diagnostics(&cs, |x| x).ok()?;
                    Some((d.ess, d.rhat))
                })
                .collect();
            let ok: Vec<(f64, f64)> = per_point.iter().flatten().copied().collect();
            if ok.is_empty() {
                return Err(Error::DegenerateChain);
            }
            let n = ok.len() as f64;
            Ok(DiagnosticsRow {
                prior: p.name().to_string(),
                mean_ess: ok.iter().map(|v| v.0).sum::<f64>() / n,
                mean_rhat: ok.iter().map(|v| v.1).sum::<f64>() / n,
                points: ok.len(),
                excluded: per_point.len() - ok.len(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorComparison {
    pub mle: Option<f64>,
    pub melo: f64,
    pub posterior_median: f64,
    pub posterior_mode: f64,
}

pub fn compare_estimators(m: &Measurement, p: &PriorSpec) -> Result<EstimatorComparison> {
    let g = quadrature_posterior(p, m, &GridConfig::default())?;
    let s = summarize(&g, &p.tail_metadata().pcred);
    Ok(EstimatorComparison {
        mle: mle_distance(m),
        melo: melo_distance(m),
        posterior_median: s.median,
        posterior_mode: s.mode,
    })
}
