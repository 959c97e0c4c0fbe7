use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::ChainSet;
use crate::model::Measurement;

/// Replicated parallaxes `omega_rep ~ Normal(1/r*, sigma_omega^2)` for
/// `n_rep` posterior draws `r*` picked uniformly (with replacement) from the
/// chain set.
pub fn ppc_replicates(m: &Measurement, cs: &ChainSet, n_rep: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<f64> = cs.chains().iter().flatten().copied().collect();
    (0..n_rep)
        .map(|_| {
            let x = draws[rng.random_range(0..draws.len())];
            let z: f64 = rng.sample(StandardNormal);
            (-x).exp() + m.sigma_omega() * z
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::{mcmc_sample, McmcConfig};
    use crate::priors::{conjugate_rg_posterior, PriorSpec};

    #[test]
    fn conjugate_replicate_mean_matches_predictive_mean() {
        let m = Measurement::new(1.0, 0.5).unwrap();
        let p = PriorSpec::reciprocal_gaussian(0.0, 2.0).unwrap();
        let cfg = McmcConfig { n_draws: 3000, n_warmup: 1000, n_chains: 4, seed: 9, ..McmcConfig::default() };
        let cs = mcmc_sample(&p, &m, &cfg).unwrap();
        let reps = ppc_replicates(&m, &cs, 20_000, 4);
        let mean = reps.iter().sum::<f64>() / reps.len() as f64;
        let var = reps.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (reps.len() - 1) as f64;
        // replicate draws reuse posterior draws, so allow for their autocorrelation with a generous SE
        let se = (var / 2000.0).sqrt();
        let exact = conjugate_rg_posterior(2.0, &m).unwrap().mean_inverse();
        assert!((mean - exact).abs() < 3.0 * se, "{mean} vs {exact} (se {se})");
    }

    #[test]
    fn tiny_noise_concentrates_near_inverse_median() {
        let m = Measurement::new(2.0, 1e-6).unwrap();
        let p = PriorSpec::half_cauchy(1.0).unwrap();
        let cfg = McmcConfig { n_draws: 600, n_warmup: 300, n_chains: 1, seed: 2, ..McmcConfig::default() };
        let cs = mcmc_sample(&p, &m, &cfg).unwrap();
        let reps = ppc_replicates(&m, &cs, 500, 1);
        assert!(reps.iter().all(|w| (w - 2.0).abs() < 1e-4));
    }

    #[test]
    fn replicates_are_deterministic() {
        let cs = ChainSet::from_draws(vec![vec![0.0, 0.5, 1.0, -0.3]], 0, 0).unwrap();
        let m = Measurement::new(1.0, 0.1).unwrap();
        assert_eq!(ppc_replicates(&m, &cs, 50, 3), ppc_replicates(&m, &cs, 50, 3));
        assert_ne!(ppc_replicates(&m, &cs, 50, 3), ppc_replicates(&m, &cs, 50, 4));
        assert!(ppc_replicates(&m, &cs, 0, 3).is_empty());
    }
}
