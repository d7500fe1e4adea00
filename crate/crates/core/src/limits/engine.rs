//! Exponent integrals `∫ P{y ∈ E(Z)} μ(dy)` estimated from a bank of draws.
//!
//! For every limit law handled here the event set `E(Z)` of one draw is a
//! finite union of intervals, so the outer integral can be taken exactly per
//! draw or with composite Gauss–Legendre over a truncated window, where the
//! inner probability at each node is the bank fraction covering it.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::numerics::quad::composite;
use crate::rng::{par_chunked, SimRng, StreamKey};

/// How the outer integral over `y` is taken.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OuterRule {
    /// Exact measure of each draw's event set; no truncation.
    Exact,
    /// Composite Gauss–Legendre on the truncated window.
    GaussLegendre { panels: usize, order: usize },
}

impl OuterRule {
    /// 16 panels of 16 nodes.
    pub const QUADRATURE: OuterRule = OuterRule::GaussLegendre { panels: 16, order: 16 };
}

/// Monte Carlo and quadrature budget for one evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Budget {
    /// Size of the draw bank.
    pub paths: usize,
    /// Batches for the batch-means standard error.
    pub batches: usize,
    pub rule: OuterRule,
    /// Total truncation mass allowed when windowing the outer integral.
    pub eps: f64,
    pub seed: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Self {
            paths: 200_000,
            batches: 32,
            rule: OuterRule::Exact,
            eps: 1e-6,
            seed: 0x6c69_6d69_7473,
        }
    }
}

impl Budget {
    pub fn with_paths(mut self, paths: usize) -> Self {
        self.paths = paths;
        self
    }

    pub fn with_rule(mut self, rule: OuterRule) -> Self {
        self.rule = rule;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn key(&self) -> StreamKey {
        StreamKey::new(self.seed)
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.batches < 2 || self.paths < self.batches {
            return Err(invalid("budget needs at least 2 batches and one path per batch"));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(invalid("eps must lie in (0, 1)"));
        }
        if let OuterRule::GaussLegendre { panels, order } = self.rule {
            if panels == 0 || order == 0 {
                return Err(invalid("quadrature needs at least one panel and one node"));
            }
        }
        Ok(())
    }
}

/// Value of a limit-law evaluation with its error components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitEstimate {
    pub value: f64,
    pub mc_std_err: f64,
    pub quad_trunc_bound: f64,
    pub node_count: usize,
    pub mc_paths: usize,
}

impl LimitEstimate {
    /// A value known in closed form.
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            mc_std_err: 0.0,
            quad_trunc_bound: 0.0,
            node_count: 0,
            mc_paths: 0,
        }
    }

    /// `3·mc_std_err + quad_trunc_bound`.
    pub fn combined_error(&self) -> f64 {
        3.0 * self.mc_std_err + self.quad_trunc_bound
    }

    /// Builds `exp(−I)` from an exponent estimate.
    pub(crate) fn from_exponent(e: &Exponent) -> Self {
        let value = (-e.mean).exp().clamp(0.0, 1.0);
        Self {
            value,
            mc_std_err: value * e.std_err,
            quad_trunc_bound: value * e.trunc,
            node_count: e.nodes,
            mc_paths: e.paths,
        }
    }
}

/// Outer measure of the integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Measure {
    Lebesgue,
    /// `e^{−y} dy`.
    ExpNeg,
}

impl Measure {
    fn mass(self, a: f64, b: f64) -> f64 {
        match self {
            Measure::Lebesgue => b - a,
            Measure::ExpNeg => (-a).exp() - (-b).exp(),
        }
    }

    fn density(self, y: f64) -> f64 {
        match self {
            Measure::Lebesgue => 1.0,
            Measure::ExpNeg => (-y).exp(),
        }
    }
}

/// Estimate of an exponent integral `I`.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Exponent {
    pub mean: f64,
    pub std_err: f64,
    /// Upper bound on the mass lost by windowing (0 for exact integration).
    pub trunc: f64,
    pub nodes: usize,
    pub paths: usize,
}

/// A bank of `paths` rows of width `width`.
pub(crate) struct Bank {
    pub width: usize,
    pub rows: Vec<f64>,
}

impl Bank {
    pub fn draw<F>(paths: usize, width: usize, key: StreamKey, f: F) -> Self
    where
        F: Fn(&mut SimRng, &mut [f64]) + Sync,
    {
        let rows = par_chunked(paths, width, key, |rng, _range, out| {
            for row in out.chunks_exact_mut(width) {
                f(rng, row);
            }
        });
        Self { width, rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len() / self.width
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.width..(i + 1) * self.width]
    }
}

/// One integration problem over a bank.
pub(crate) struct Problem {
    pub measure: Measure,
    /// Window used by quadrature.
    pub window: (f64, f64),
    /// Bound on the windowing loss, used by quadrature only.
    pub trunc: f64,
    /// Known mean of the per-draw control value, if one is supplied.
    pub control_mean: Option<f64>,
}

/// Per-batch contributions of one problem (before combination).
pub(crate) struct BatchSums {
    pub means: Vec<f64>,
    pub trunc: f64,
    pub nodes: usize,
    pub paths: usize,
}

impl BatchSums {
    pub fn finish(&self) -> Exponent {
        let b = self.means.len() as f64;
        let mean = self.means.iter().sum::<f64>() / b;
        let var = self.means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (b - 1.0);
        Exponent {
            mean,
            std_err: (var / b).sqrt(),
            trunc: self.trunc,
            nodes: self.nodes,
            paths: self.paths,
        }
    }

    /// `Σ sign_i · I_i` for independent problems with the same batch count.
    pub fn combine(parts: &[(f64, BatchSums)]) -> Exponent {
        let nb = parts[0].1.means.len();
        let means: Vec<f64> = (0..nb).map(|b| parts.iter().map(|(s, p)| s * p.means[b]).sum()).collect();
        let sums = BatchSums {
            means,
            trunc: parts.iter().map(|(_, p)| p.trunc).sum(),
            nodes: parts.iter().map(|(_, p)| p.nodes).max().unwrap_or(0),
            paths: parts.iter().map(|(_, p)| p.paths).sum(),
        };
        sums.finish()
    }
}

/// Merges intervals in place into a sorted disjoint union.
fn merge(iv: &mut Vec<(f64, f64)>) {
    iv.retain(|(a, b)| b > a);
    if iv.len() < 2 {
        return;
    }
    iv.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut w = 0;
    for r in 1..iv.len() {
        if iv[r].0 <= iv[w].1 {
            iv[w].1 = iv[w].1.max(iv[r].1);
        } else {
            w += 1;
            iv[w] = iv[r];
        }
    }
    iv.truncate(w + 1);
}

/// Integrates the event sets produced by `events(row, intervals) -> control`
/// over the bank, batch by batch.
pub(crate) fn integrate<F>(bank: &Bank, problem: &Problem, budget: &Budget, events: F) -> BatchSums
where
    F: Fn(&[f64], &mut Vec<(f64, f64)>) -> f64 + Sync,
{
    let n = bank.len();
    let nb = budget.batches;
    let bounds: Vec<(usize, usize)> = (0..nb).map(|b| (b * n / nb, (b + 1) * n / nb)).collect();
    match budget.rule {
        OuterRule::Exact => {
            // per-draw contributions, then an optional control-variate fit
            let mut c = vec![0.0; n];
            let mut g = vec![0.0; n];
            c.par_chunks_mut(4096)
                .zip(g.par_chunks_mut(4096))
                .enumerate()
                .for_each(|(ci, (cc, gg))| {
                    let mut iv = Vec::new();
                    for (o, (cv, gv)) in cc.iter_mut().zip(gg.iter_mut()).enumerate() {
                        iv.clear();
                        *gv = events(bank.row(ci * 4096 + o), &mut iv);
                        merge(&mut iv);
                        *cv = iv.iter().map(|&(a, b)| problem.measure.mass(a, b)).sum();
                    }
                });
            let beta = problem.control_mean.map(|_| cv_coefficient(&c, &g)).unwrap_or(0.0);
            let mu = problem.control_mean.unwrap_or(0.0);
            let means = bounds
                .iter()
                .map(|&(lo, hi)| {
                    let len = (hi - lo) as f64;
                    let mc = c[lo..hi].iter().sum::<f64>() / len;
                    let mg = g[lo..hi].iter().sum::<f64>() / len;
                    mc - beta * (mg - mu)
                })
                .collect();
            BatchSums {
                means,
                trunc: 0.0,
                nodes: 0,
                paths: n,
            }
        }
        OuterRule::GaussLegendre { panels, order } => {
            let (lo, hi) = problem.window;
            let (nodes, weights) = composite(lo, hi, panels, order);
            let wd: Vec<f64> = nodes.iter().zip(&weights).map(|(y, w)| w * problem.measure.density(*y)).collect();
            let means = bounds
                .par_iter()
                .map(|&(s, e)| {
                    let mut iv = Vec::new();
                    let mut ev: Vec<(f64, i32)> = Vec::with_capacity(4 * (e - s));
                    for i in s..e {
                        iv.clear();
                        events(bank.row(i), &mut iv);
                        merge(&mut iv);
                        for &(a, b) in &iv {
                            ev.push((a, 1));
                            ev.push((b, -1));
                        }
                    }
                    ev.sort_by(|x, y| x.0.total_cmp(&y.0));
                    // nodes ascend, so a single sweep counts the covering draws
                    let (mut j, mut active, mut acc) = (0usize, 0i64, 0.0);
                    for (y, w) in nodes.iter().zip(&wd) {
                        while j < ev.len() && ev[j].0 <= *y {
                            active += ev[j].1 as i64;
                            j += 1;
                        }
                        acc += w * active as f64;
                    }
                    acc / (e - s) as f64
                })
                .collect();
            BatchSums {
                means,
                trunc: problem.trunc,
                nodes: nodes.len(),
                paths: n,
            }
        }
    }
}

fn cv_coefficient(c: &[f64], g: &[f64]) -> f64 {
    let n = c.len() as f64;
    let mc = c.iter().sum::<f64>() / n;
    let mg = g.iter().sum::<f64>() / n;
    let (mut sgg, mut scg) = (0.0, 0.0);
    for (cv, gv) in c.iter().zip(g) {
        sgg += (gv - mg).powi(2);
        scg += (cv - mc) * (gv - mg);
    }
    if sgg > 0.0 {
        scg / sgg
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_unions() {
        let mut v = vec![(3.0, 4.0), (0.0, 1.0), (0.5, 2.0), (5.0, 5.0)];
        merge(&mut v);
        assert_eq!(v, vec![(0.0, 2.0), (3.0, 4.0)]);
    }

    #[test]
    fn exact_and_quadrature_agree_on_shifted_intervals() {
        // E|[U−1, U+1]| = 2 for any U
        let bank = Bank::draw(20_000, 1, StreamKey::new(1), |rng, row| {
            row[0] = rand::Rng::random::<f64>(rng) * 4.0 - 2.0;
        });
        let p = Problem {
            measure: Measure::Lebesgue,
            window: (-3.0, 3.0),
            trunc: 0.0,
            control_mean: None,
        };
        for rule in [OuterRule::Exact, OuterRule::GaussLegendre { panels: 64, order: 16 }] {
            let b = Budget::default().with_rule(rule);
            let e = integrate(&bank, &p, &b, |r, iv| {
                iv.push((r[0] - 1.0, r[0] + 1.0));
                0.0
            })
            .finish();
            assert!((e.mean - 2.0).abs() < 1e-3, "{rule:?} {}", e.mean);
        }
    }
}
