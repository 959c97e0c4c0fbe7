use serde::{Deserialize, Serialize};

use super::Target;
use crate::error::{Error, Result};
use crate::model::Measurement;
use crate::priors::PriorSpec;

/// Log-density drop below the maximum at which the grid is cut.
const CUT: f64 = 36.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    /// Half-width of the initial likelihood window in units of `sigma_omega`.
    pub span_multiplier: f64,
    /// Relative integration tolerance driving cell bisection.
    pub tolerance: f64,
    pub max_nodes: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { span_multiplier: 10.0, tolerance: 1e-12, max_nodes: 200_000 }
    }
}

/// Normalized posterior over `x = ln r`, represented on an adaptive grid.
///
/// Between nodes the density is the cubic Hermite interpolant of its values
/// and slopes; `cdf` holds the exact integrals of that interpolant.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorGrid {
    nodes: Vec<f64>,
    log_density: Vec<f64>,
    dlog: Vec<f64>,
    log_norm: f64,
    cdf: Vec<f64>,
    sf: Vec<f64>,
}

/// Integral over `[0, h]` of the cubic Hermite interpolant.
fn hermite_cell(h: f64, f0: f64, d0: f64, f1: f64, d1: f64) -> f64 {
    h * (0.5 * (f0 + f1) + h * (d0 - d1) / 12.0)
}

/// Integral over `[0, t h]` of the same interpolant, `t` in `[0, 1]`.
fn hermite_partial(h: f64, t: f64, f0: f64, d0: f64, f1: f64, d1: f64) -> f64 {
    let (t2, t3, t4) = (t * t, t * t * t, t * t * t * t);
    let i00 = t4 / 2.0 - t3 + t;
    let i10 = t4 / 4.0 - 2.0 * t3 / 3.0 + t2 / 2.0;
    let i01 = -t4 / 2.0 + t3;
    let i11 = t4 / 4.0 - t3 / 3.0;
    h * (f0 * i00 + h * d0 * i10 + f1 * i01 + h * d1 * i11)
}

fn hermite_value(h: f64, t: f64, f0: f64, d0: f64, f1: f64, d1: f64) -> f64 {
    let (t2, t3) = (t * t, t * t * t);
    f0 * (2.0 * t3 - 3.0 * t2 + 1.0) + h * d0 * (t3 - 2.0 * t2 + t) + f1 * (-2.0 * t3 + 3.0 * t2) + h * d1 * (t3 - t2)
}

struct Node {
    x: f64,
    ln: f64,
    g: f64,
}

impl Node {
    fn eval(t: &Target, x: f64) -> Result<Node> {
        let ln = t.ln(x);
        let g = t.grad(x).unwrap_or(f64::NAN);
        if ln.is_nan() || (ln.is_finite() && !g.is_finite()) {
            return Err(Error::NonFiniteGradient { prior: t.prior.name(), x });
        }
        Ok(Node { x, ln, g })
    }

    /// Density and slope relative to `exp(shift)`.
    fn fd(&self, shift: f64) -> (f64, f64) {
        if self.ln == f64::NEG_INFINITY {
            return (0.0, 0.0);
        }
        let f = (self.ln - shift).exp();
        (f, f * self.g)
    }
}

fn cell_integral(a: &Node, b: &Node, shift: f64) -> f64 {
    let (f0, d0) = a.fd(shift);
    let (f1, d1) = b.fd(shift);
    hermite_cell(b.x - a.x, f0, d0, f1, d1)
}

/// Moves outward from `start` in direction `dir` until the log density is
/// `CUT` below `ln_max` and the remaining tail mass, estimated from the local
/// slope, is negligible against `ln_max + ln(width)`.
fn expand(t: &Target, start: f64, dir: f64, ln_max: f64, width: f64) -> Result<f64> {
    let mut step = width;
    let mut x = start;
    for _ in 0..200 {
        if dir > 0.0 && x >= t.x_max() {
            return Ok(t.x_max());
        }
        let ln = t.ln(x);
        let g = t.grad(x).unwrap_or(f64::NAN) * dir;
        let small = ln < ln_max - CUT;
        let decaying = g < 0.0 && ln - (-g).ln() < ln_max + width.ln() - CUT;
        if ln == f64::NEG_INFINITY || (small && decaying) {
            return Ok(x);
        }
        x += dir * step;
        if dir > 0.0 {
            x = x.min(t.x_max());
        }
        step *= 1.5;
        if x.abs() > 700.0 {
            break;
        }
    }
    Err(Error::TailNotCaptured { max_nodes: 0 })
}

/// Builds the normalized posterior of `r` given one parallax on an adaptive grid in `ln r`.
pub fn quadrature_posterior(p: &PriorSpec, m: &Measurement, cfg: &GridConfig) -> Result<PosteriorGrid> {
    if !(cfg.span_multiplier > 0.0 && cfg.tolerance > 0.0 && cfg.max_nodes >= 16) {
        return Err(Error::Config("grid config needs positive span, positive tolerance and at least 16 nodes".into()));
    }
    let t = Target::new(p, m)?;
    let (mode, width) = t.locate_mode();
    let ln_max = t.ln(mode);
    if !ln_max.is_finite() {
        return Err(Error::NonFiniteGradient { prior: p.name(), x: mode });
    }

    // start from the likelihood bulk when it is resolvable, otherwise from the mode
    let (w, s, k) = (m.omega(), m.sigma_omega(), cfg.span_multiplier);
    let (mut lo, mut hi) = (mode - width, (mode + width).min(t.x_max()));
    if w - k * s > 0.0 {
        lo = lo.min(-(w + k * s).ln());
        hi = hi.max(-(w - k * s).ln()).min(t.x_max());
    }
    let lo = expand(&t, lo, -1.0, ln_max, width).map_err(|_| Error::TailNotCaptured { max_nodes: cfg.max_nodes })?;
    let hi = expand(&t, hi, 1.0, ln_max, width).map_err(|_| Error::TailNotCaptured { max_nodes: cfg.max_nodes })?;

    let mut xs: Vec<f64> = (0..=256).map(|i| lo + (hi - lo) * i as f64 / 256.0).collect();
    for j in -16..=16 {
        let x = mode + width * j as f64 * 0.5;
        if x > lo && x < hi {
            xs.push(x);
        }
    }
    xs.sort_by(f64::total_cmp);
    xs.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + b.abs()));
    let seed: Vec<Node> = xs.iter().map(|&x| Node::eval(&t, x)).collect::<Result<_>>()?;
    let rough: f64 = seed.windows(2).map(|c| cell_integral(&c[0], &c[1], ln_max)).sum();
    let per_length = cfg.tolerance * rough / (hi - lo);

    let mut nodes: Vec<Node> = Vec::with_capacity(4 * seed.len());
    let mut seed = seed.into_iter();
    let first = seed.next().expect("grid has nodes");
    let mut count = seed.len() + 1;
    let mut left = first;
    for right in seed {
        // depth-first bisection of [left, right]; `stack` holds pending right ends
        let mut stack = vec![right];
        while let Some(r) = stack.pop() {
            let mid = Node::eval(&t, 0.5 * (left.x + r.x))?;
            let coarse = cell_integral(&left, &r, ln_max);
            let fine = cell_integral(&left, &mid, ln_max) + cell_integral(&mid, &r, ln_max);
            let h = r.x - left.x;
            count += 1;
            if count > cfg.max_nodes {
                return Err(Error::TailNotCaptured { max_nodes: cfg.max_nodes });
            }
            if (coarse - fine).abs() <= per_length * h || h < 1e-13 * (1.0 + left.x.abs()) {
                nodes.push(std::mem::replace(&mut left, r));
                nodes.push(mid);
            } else {
                stack.push(r);
                stack.push(mid);
            }
        }
    }
    nodes.push(left);
    Ok(finish(nodes, ln_max))
}

fn finish(nodes: Vec<Node>, shift: f64) -> PosteriorGrid {
    let n = nodes.len();
    let cells: Vec<f64> = nodes.windows(2).map(|c| cell_integral(&c[0], &c[1], shift).max(0.0)).collect();
    let mut cum = Vec::with_capacity(n);
    cum.push(0.0);
    for c in &cells {
        cum.push(cum.last().unwrap() + c);
    }
    let mut rev = vec![0.0; n];
    for i in (0..n - 1).rev() {
        rev[i] = rev[i + 1] + cells[i];
    }
    let total = cum[n - 1];
    PosteriorGrid {
        cdf: cum.iter().map(|c| c / total).collect(),
        sf: rev.iter().map(|c| c / total).collect(),
        log_norm: shift + total.ln(),
        nodes: nodes.iter().map(|nd| nd.x).collect(),
        log_density: nodes.iter().map(|nd| nd.ln).collect(),
        dlog: nodes.iter().map(|nd| nd.g).collect(),
    }
}

impl PosteriorGrid {
    /// Grid nodes in `x = ln r`, strictly increasing.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Unnormalized log posterior density in `x` at the nodes.
    pub fn log_density(&self) -> &[f64] {
        &self.log_density
    }

    /// Derivative of [`PosteriorGrid::log_density`] at the nodes.
    pub fn dlog(&self) -> &[f64] {
        &self.dlog
    }

    /// Log of the normalizing integral (the log marginal likelihood).
    pub fn log_norm(&self) -> f64 {
        self.log_norm
    }

    pub fn cdf(&self) -> &[f64] {
        &self.cdf
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Normalized density in `x` at node `i`, with its derivative.
    fn fd(&self, i: usize) -> (f64, f64) {
        if self.log_density[i] == f64::NEG_INFINITY {
            return (0.0, 0.0);
        }
        let f = (self.log_density[i] - self.log_norm).exp();
        (f, f * self.dlog[i])
    }

    /// Hermite-rule integral of the normalized density (1 up to rounding).
    pub fn total_mass(&self) -> f64 {
        self.integrate_weighted(0.0)
    }

    /// `E[r^k]` on the grid, computed with the same Hermite rule.
    pub(crate) fn integrate_weighted(&self, k: f64) -> f64 {
        (0..self.len() - 1)
            .map(|i| {
                let (f0, d0) = self.fd(i);
                let (f1, d1) = self.fd(i + 1);
                let (x0, x1) = (self.nodes[i], self.nodes[i + 1]);
                let (w0, w1) = ((k * x0).exp(), (k * x1).exp());
                hermite_cell(x1 - x0, f0 * w0, w0 * (d0 + k * f0), f1 * w1, w1 * (d1 + k * f1))
            })
            .sum()
    }

    /// Plain trapezoid integral of the normalized density over the nodes.
    pub fn trapezoid_mass(&self) -> f64 {
        (0..self.len() - 1)
            .map(|i| 0.5 * (self.nodes[i + 1] - self.nodes[i]) * (self.fd(i).0 + self.fd(i + 1).0))
            .sum()
    }

    fn cell_parts(&self, i: usize) -> (f64, f64, f64, f64, f64) {
        let (f0, d0) = self.fd(i);
        let (f1, d1) = self.fd(i + 1);
        (self.nodes[i + 1] - self.nodes[i], f0, d0, f1, d1)
    }

    /// Mass of the interpolant on `[nodes[i], x]`, clamped to the cell's total.
    fn partial(&self, i: usize, x: f64) -> f64 {
        let (h, f0, d0, f1, d1) = self.cell_parts(i);
        let t = ((x - self.nodes[i]) / h).clamp(0.0, 1.0);
        hermite_partial(h, t, f0, d0, f1, d1).clamp(0.0, self.cdf[i + 1] - self.cdf[i])
    }

    /// `P(ln r <= x)`.
    pub fn cdf_at(&self, x: f64) -> f64 {
        let n = self.len();
        if x <= self.nodes[0] {
            return 0.0;
        }
        if x >= self.nodes[n - 1] {
            return 1.0;
        }
        let i = self.nodes.partition_point(|&v| v <= x) - 1;
        (self.cdf[i] + self.partial(i, x)).min(1.0)
    }

    /// `P(ln r > x)`, accurate in the far upper tail.
    pub fn sf_at(&self, x: f64) -> f64 {
        let n = self.len();
        if x <= self.nodes[0] {
            return 1.0;
        }
        if x >= self.nodes[n - 1] {
            return 0.0;
        }
        let i = self.nodes.partition_point(|&v| v <= x) - 1;
        (self.sf[i] - self.partial(i, x)).max(0.0)
    }

    /// Quantile of `ln r` at probability `p`.
    pub fn quantile_x(&self, p: f64) -> f64 {
        let n = self.len();
        if p <= 0.0 {
            return self.nodes[0];
        }
        if p >= 1.0 {
            return self.nodes[n - 1];
        }
        let i = (self.cdf.partition_point(|&c| c <= p).max(1) - 1).min(n - 2);
        let target = p - self.cdf[i];
        let (h, f0, d0, f1, d1) = self.cell_parts(i);
        let (mut a, mut b) = (0.0, 1.0);
        let mut t = 0.5;
        for _ in 0..100 {
            let resid = hermite_partial(h, t, f0, d0, f1, d1) - target;
            if resid.abs() <= 1e-17 * p.max(1e-300) {
                break;
            }
            if resid > 0.0 {
                b = t;
            } else {
                a = t;
            }
            if b - a < 1e-15 {
                break;
            }
            let slope = h * hermite_value(h, t, f0, d0, f1, d1);
            let newton = t - resid / slope;
            t = if slope > 0.0 && newton > a && newton < b { newton } else { 0.5 * (a + b) };
        }
        self.nodes[i] + t * h
    }

    /// Quantile of the distance `r` at probability `p`.
    pub fn quantile(&self, p: f64) -> f64 {
        self.quantile_x(p).exp()
    }
}
