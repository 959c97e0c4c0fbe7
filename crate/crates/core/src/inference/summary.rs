use serde::{Deserialize, Serialize};

use super::PosteriorGrid;
use crate::credence::{moment_finiteness, PCredence};

pub const DEFAULT_QUANTILES: [f64; 7] = [0.025, 0.16, 0.25, 0.5, 0.75, 0.84, 0.975];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub median: f64,
    pub mode: f64,
    /// `(probability, distance)` pairs in increasing probability.
    pub quantiles: Vec<(f64, f64)>,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
}

impl PosteriorSummary {
    pub fn quantile(&self, p: f64) -> Option<f64> {
        self.quantiles.iter().find(|(q, _)| *q == p).map(|&(_, v)| v)
    }
}

/// Mode of the distance density `pi(r)`, i.e. the maximizer of `log_density(x) - x`.
fn mode_r(g: &PosteriorGrid) -> f64 {
    let (xs, ld, dl) = (g.nodes(), g.log_density(), g.dlog());
    let score = |i: usize| ld[i] - xs[i];
    let i = (0..xs.len()).max_by(|&a, &b| score(a).total_cmp(&score(b))).expect("non-empty grid");
    // the r-density slope in x is dlog - 1; find its sign change next to the argmax
    let slope = |j: usize| dl[j] - 1.0;
    let root_in = |j: usize| {
        let (s0, s1) = (slope(j), slope(j + 1));
        (s0 >= 0.0 && s1 <= 0.0 && s0 > s1).then(|| xs[j] + s0 / (s0 - s1) * (xs[j + 1] - xs[j]))
    };
    let x = (i > 0)
        .then(|| root_in(i - 1))
        .flatten()
        .or_else(|| (i + 1 < xs.len()).then(|| root_in(i)).flatten())
        .unwrap_or(xs[i]);
    x.exp()
}

/// Point summaries of a grid posterior. `tail` describes the distance tail of
/// the posterior (the prior's tail, since the likelihood flattens as `r`
/// grows) and gates the mean and standard deviation.
pub fn summarize(g: &PosteriorGrid, tail: &PCredence) -> PosteriorSummary {
    let quantiles: Vec<(f64, f64)> = DEFAULT_QUANTILES.iter().map(|&p| (p, g.quantile(p))).collect();
    let mean = moment_finiteness(tail, 1).then(|| g.integrate_weighted(1.0));
    let sd = match mean {
        Some(mu) if moment_finiteness(tail, 2) => Some((g.integrate_weighted(2.0) - mu * mu).max(0.0).sqrt()),
        _ => None,
    };
    PosteriorSummary { median: g.quantile(0.5), mode: mode_r(g), quantiles, mean, sd }
}

/// `P(r > c)` under the grid posterior.
pub fn tail_probability(g: &PosteriorGrid, c: f64) -> f64 {
    if c <= 0.0 {
        return 1.0;
    }
    g.sf_at(c.ln()).clamp(0.0, 1.0)
}
