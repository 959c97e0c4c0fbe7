use serde::{Deserialize, Serialize};

use super::ChainSet;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub rhat: f64,
    pub ess: f64,
}

/// Split-R-hat and ESS of one scalar quantity.
pub fn diagnostics(cs: &ChainSet, transform: impl Fn(f64) -> f64) -> Result<Diagnostics> {
    Ok(Diagnostics { rhat: split_rhat(cs, &transform)?, ess: effective_sample_size(cs, &transform)? })
}

/// Each chain cut in half (odd middle draw dropped), transformed.
fn halves(cs: &ChainSet, transform: impl Fn(f64) -> f64) -> Vec<Vec<f64>> {
    let n = cs.len() / 2;
    cs.chains()
        .iter()
        .flat_map(|c| {
            let off = c.len() - n;
            [c[..n].iter().map(|&v| transform(v)).collect::<Vec<_>>(), c[off..].iter().map(|&v| transform(v)).collect()]
        })
        .collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn variance(v: &[f64]) -> f64 {
    let mu = mean(v);
    v.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (v.len() - 1) as f64
}

/// `(W, B / n)`: mean within-chain variance and variance of chain means.
fn between_within(parts: &[Vec<f64>]) -> Result<(f64, f64)> {
    let w = parts.iter().map(|c| variance(c)).sum::<f64>() / parts.len() as f64;
    if !(w > 0.0) {
        return Err(Error::DegenerateChain);
    }
    let means: Vec<f64> = parts.iter().map(|c| mean(c)).collect();
    Ok((w, variance(&means)))
}

/// Split-R-hat `sqrt((n-1)/n + B/(n W))` over the half-chains.
pub fn split_rhat(cs: &ChainSet, transform: impl Fn(f64) -> f64) -> Result<f64> {
    if cs.len() < 4 {
        return Err(Error::InsufficientDraws(format!("split-R-hat needs at least 4 draws per chain, got {}", cs.len())));
    }
    let parts = halves(cs, transform);
    let n = parts[0].len() as f64;
    let (w, b_over_n) = between_within(&parts)?;
    Ok(((n - 1.0) / n + b_over_n / w).sqrt())
}

/// Biased autocovariance of `v` at `lag`.
fn autocov(v: &[f64], mu: f64, lag: usize) -> f64 {
    let n = v.len();
    (0..n - lag).map(|i| (v[i] - mu) * (v[i + lag] - mu)).sum::<f64>() / n as f64
}

/// Multi-chain ESS on split chains with Geyer's initial monotone sequence.
pub fn effective_sample_size(cs: &ChainSet, transform: impl Fn(f64) -> f64) -> Result<f64> {
    if cs.len() < 8 {
        return Err(Error::InsufficientDraws(format!("ESS needs at least 8 draws per chain, got {}", cs.len())));
    }
    let parts = halves(cs, transform);
    let m = parts.len() as f64;
    let n = parts[0].len();
    let nf = n as f64;
    let (w, b_over_n) = between_within(&parts)?;
    let var_plus = (nf - 1.0) / nf * w + b_over_n;
    let means: Vec<f64> = parts.iter().map(|c| mean(c)).collect();
    let rho = |lag: usize| {
        let acov = parts.iter().zip(&means).map(|(c, &mu)| autocov(c, mu, lag)).sum::<f64>() / m;
        1.0 - (w - acov * nf / (nf - 1.0)) / var_plus
    };
    let mut tau = -1.0;
    let mut prev_pair = f64::INFINITY;
    let mut k = 0;
    while 2 * k + 1 < n {
        let pair = if k == 0 { 1.0 + rho(1) } else { rho(2 * k) + rho(2 * k + 1) };
        if pair < 0.0 {
            break;
        }
        let pair = pair.min(prev_pair);
        tau += 2.0 * pair;
        prev_pair = pair;
        k += 1;
    }
    let total = m * nf;
    Ok((total / tau.max(f64::MIN_POSITIVE)).min(total))
}

/// Empirical quantile with linear interpolation between order statistics.
pub fn sample_quantile(draws: &[f64], p: f64) -> f64 {
    let mut v = draws.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, p)
}

fn quantile_sorted(v: &[f64], p: f64) -> f64 {
    let h = (v.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let (i, frac) = (h.floor() as usize, h - h.floor());
    if i + 1 < v.len() {
        v[i] + frac * (v[i + 1] - v[i])
    } else {
        v[i]
    }
}

/// Monte-Carlo standard error of the `p`-quantile of `transform(draws)`,
/// from the ESS of the indicator `draw <= quantile`.
pub fn mcse_quantile(cs: &ChainSet, p: f64, transform: impl Fn(f64) -> f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain { what: "quantile probability", value: p });
    }
    let mut all: Vec<f64> = cs.chains().iter().flatten().map(|&v| transform(v)).collect();
    all.sort_by(f64::total_cmp);
    let q = quantile_sorted(&all, p);
    let ess = effective_sample_size(cs, |v| if transform(v) <= q { 1.0 } else { 0.0 })?;
    let se = (p * (1.0 - p) / ess).sqrt();
    let lo = quantile_sorted(&all, (p - se).max(0.0));
    let hi = quantile_sorted(&all, (p + se).min(1.0));
    Ok(0.5 * (hi - lo))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn noise(seed: u64, n: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.sample(StandardNormal)).collect()
    }

    fn ar1(seed: u64, n: usize, phi: f64) -> Vec<f64> {
        let e = noise(seed, n);
        let mut v = Vec::with_capacity(n);
        let mut x = e[0] / (1.0 - phi * phi).sqrt();
        for z in e {
            x = phi * x + z;
            v.push(x);
        }
        v
    }

    #[test]
    fn white_noise_ess_near_draw_count() {
        let cs = ChainSet::from_draws((0..4).map(|c| noise(c, 5000)).collect(), 0, 0).unwrap();
        let ess = effective_sample_size(&cs, |v| v).unwrap();
        assert!((ess / 20000.0 - 1.0).abs() < 0.2, "{ess}");
        let rhat = split_rhat(&cs, |v| v).unwrap();
        assert!((0.99..1.01).contains(&rhat));
    }

    #[test]
    fn ar1_ess_matches_analytic_value() {
        let n = 50_000;
        let cs = ChainSet::from_draws(vec![ar1(5, n, 0.9)], 0, 0).unwrap();
        let ess = effective_sample_size(&cs, |v| v).unwrap();
        let expected = n as f64 * 0.1 / 1.9;
        assert!((ess / expected - 1.0).abs() < 0.3, "{ess} vs {expected}");
    }

    #[test]
    fn offset_chains_have_large_rhat() {
        let a = noise(1, 1000);
        let b: Vec<f64> = noise(2, 1000).iter().map(|v| v + 10.0).collect();
        let cs = ChainSet::from_draws(vec![a, b], 0, 0).unwrap();
        assert!(split_rhat(&cs, |v| v).unwrap() > 1.5);
    }

    #[test]
    fn constant_chain_is_degenerate() {
        let cs = ChainSet::from_draws(vec![vec![1.0; 100], vec![1.0; 100]], 0, 0).unwrap();
        assert_eq!(split_rhat(&cs, |v| v), Err(Error::DegenerateChain));
        assert_eq!(effective_sample_size(&cs, |v| v), Err(Error::DegenerateChain));
    }

    #[test]
    fn rhat_floor_and_ess_cap() {
        let cs = ChainSet::from_draws((10..12).map(|c| noise(c, 400)).collect(), 0, 0).unwrap();
        let n: f64 = 200.0;
        assert!(split_rhat(&cs, |v| v).unwrap() >= ((n - 1.0) / n).sqrt() - 1e-12);
        let ess = effective_sample_size(&cs, |v| v).unwrap();
        assert!(ess > 0.0 && ess <= 800.0);
    }

    #[test]
    fn mcse_of_median_for_iid_normal() {
        let cs = ChainSet::from_draws((20..24).map(|c| noise(c, 2500)).collect(), 0, 0).unwrap();
        let se = mcse_quantile(&cs, 0.5, |v| v).unwrap();
        // asymptotic sd of the median of N(0,1): sqrt(pi/2) / sqrt(n)
        let expected = (std::f64::consts::PI / 2.0).sqrt() / (10000f64).sqrt();
        assert!((se / expected - 1.0).abs() < 0.25, "{se} vs {expected}");
    }

    #[test]
    fn short_chains_are_rejected() {
        let cs = ChainSet::from_draws(vec![vec![0.0, 1.0, 2.0]], 0, 0).unwrap();
        assert!(matches!(split_rhat(&cs, |v| v), Err(Error::InsufficientDraws(_))));
        assert!(matches!(effective_sample_size(&cs, |v| v), Err(Error::InsufficientDraws(_))));
    }
}
