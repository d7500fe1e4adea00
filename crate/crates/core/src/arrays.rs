//! Covariance schedules and block extremes of elliptical triangular arrays.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::norming::{gumbel_norming, min_norming, weibull_norming, CnRule, MarginalLaw, NormingPair};
use crate::numerics::linalg::{cholesky_pd, clip_eigenvalues, eigen_range, is_psd, RANK_REL_TOL};
use crate::rng::{par_chunked, StreamKey};
use crate::samplers::{EllipticalSampler, GaussianKernel, RadialLaw, ScaleLaw};

/// Incremental variance matrix `Γ` with `γ_ij = Var{Z_i − Z_j}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Variogram {
    m: DMatrix<f64>,
}

impl Serialize for Variogram {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = (0..self.k()).map(|i| (0..self.k()).map(|j| self.m[(i, j)]).collect()).collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Variogram {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        Variogram::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

impl Variogram {
    /// Symmetric, zero diagonal, positive finite off-diagonal entries.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        let k = m.nrows();
        if k == 0 || m.ncols() != k {
            return Err(Error::InvalidDimension("variogram must be a non-empty square matrix".into()));
        }
        for i in 0..k {
            if m[(i, i)] != 0.0 {
                return Err(Error::InvalidVariogram(format!("diagonal entry {i} is {}", m[(i, i)])));
            }
            for j in 0..i {
                let (a, b) = (m[(i, j)], m[(j, i)]);
                if (a - b).abs() > 1e-12 * a.abs().max(1.0) {
                    return Err(Error::InvalidVariogram("matrix is not symmetric".into()));
                }
                if !(a > 0.0 && a.is_finite()) {
                    return Err(Error::InvalidVariogram(format!("entry ({i},{j}) = {a} must lie in (0, inf)")));
                }
            }
        }
        Ok(Self { m })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.len();
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::InvalidDimension("variogram rows must form a square matrix".into()));
        }
        Self::new(DMatrix::from_fn(k, k, |i, j| rows[i][j]))
    }

    /// Two-point variogram with `γ₁₂ = g`.
    pub fn pair(g: f64) -> Result<Self> {
        Self::new(DMatrix::from_row_slice(2, 2, &[0.0, g, g, 0.0]))
    }

    /// All off-diagonal entries equal to `g`.
    pub fn constant(k: usize, g: f64) -> Result<Self> {
        Self::new(DMatrix::from_fn(k, k, |i, j| if i == j { 0.0 } else { g }))
    }

    /// `γ_ij = C_ii + C_jj − 2C_ij`.
    pub fn from_covariance(c: &DMatrix<f64>) -> Result<Self> {
        let k = c.nrows();
        Self::new(DMatrix::from_fn(k, k, |i, j| if i == j { 0.0 } else { c[(i, i)] + c[(j, j)] - 2.0 * c[(i, j)] }))
    }

    pub fn from_kernel(kernel: &GaussianKernel, grid: &[f64]) -> Result<Self> {
        Self::new(kernel.gamma_matrix(grid))
    }

    pub fn k(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    pub fn max_entry(&self) -> f64 {
        self.m.iter().cloned().fold(0.0, f64::max)
    }

    /// Checks that some Gaussian vector has these incremental variances:
    /// `M_ij = (γ_i1 + γ_j1 − γ_ij)/2`, `i, j ≥ 2`, must be PSD.
    pub fn check_valid(&self) -> Result<()> {
        let k = self.k();
        if k == 1 {
            return Ok(());
        }
        let m = DMatrix::from_fn(k - 1, k - 1, |i, j| 0.5 * (self.m[(i + 1, 0)] + self.m[(j + 1, 0)] - self.m[(i + 1, j + 1)]));
        if is_psd(&m) {
            Ok(())
        } else {
            Err(Error::InvalidVariogram(format!(
                "no Gaussian vector has these increments (anchored matrix eigenvalue {:e})",
                eigen_range(&m).0
            )))
        }
    }

    /// `θ_i = max_j γ_ij` (1 when the row is zero) when that makes
    /// `(θ1ᵀ + 1θᵀ − Γ)/2` PSD. Otherwise `θ_i = γ_i1 + c` with
    /// `c = max γ_ij`: the covariance of `W − W_1` plus `c·11ᵀ`, PSD for every
    /// valid `Γ`.
    pub fn default_theta(&self) -> Vec<f64> {
        let k = self.k();
        let row_max: Vec<f64> = (0..k)
            .map(|i| {
                let m = (0..k).map(|j| self.m[(i, j)]).fold(0.0, f64::max);
                if m > 0.0 {
                    m
                } else {
                    1.0
                }
            })
            .collect();
        if k <= 2 || self.to_covariance(&row_max).is_ok() {
            return row_max;
        }
        let c = if self.max_entry() > 0.0 { self.max_entry() } else { 1.0 };
        (0..k).map(|i| self.m[(i, 0)] + c).collect()
    }

    /// `(θ1ᵀ + 1θᵀ − Γ)/2`.
    pub fn to_covariance(&self, theta: &[f64]) -> Result<DMatrix<f64>> {
        let k = self.k();
        if theta.len() != k {
            return Err(Error::InvalidDimension(format!("theta has length {}, expected {k}", theta.len())));
        }
        if theta.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(invalid("theta entries must be positive"));
        }
        let c = DMatrix::from_fn(k, k, |i, j| 0.5 * (theta[i] + theta[j] - self.m[(i, j)]));
        if !is_psd(&c) {
            return Err(Error::InvalidVariogram(format!(
                "covariance from theta has smallest eigenvalue {:e}",
                eigen_range(&c).0
            )));
        }
        Ok(c)
    }
}

/// Result of inverting the schedule `c_n(11ᵀ − Σ_n) = Γ`.
#[derive(Debug, Clone)]
pub struct Schedule {
    pub sigma: DMatrix<f64>,
    pub c_n: f64,
    pub min_eigenvalue: f64,
    /// True when eigenvalues were clipped to make `Σ_n` positive definite.
    pub clipped: bool,
}

/// Eigenvalue floor used by the opt-in clipping of early schedules.
pub const CLIP_FLOOR: f64 = 1e-10;

/// `Σ_n = 11ᵀ − Γ/c_n`. Not positive definite is a hard error unless
/// `clip` is set, in which case eigenvalues are raised to [`CLIP_FLOOR`]
/// and the diagonal is renormalized to 1.
pub fn sigma_from_gamma(gamma: &Variogram, c_n: f64, clip: bool) -> Result<Schedule> {
    if !(c_n > 0.0 && c_n.is_finite()) {
        return Err(invalid(format!("c_n must be positive, got {c_n}")));
    }
    let k = gamma.k();
    let sigma = DMatrix::from_fn(k, k, |i, j| 1.0 - gamma.get(i, j) / c_n);
    for v in sigma.iter() {
        if *v <= -1.0 {
            return Err(invalid(format!(
                "c_n = {c_n} is too small: correlation {v} outside (-1, 1)"
            )));
        }
    }
    let (lo, hi) = eigen_range(&sigma);
    if lo > RANK_REL_TOL * hi {
        return Ok(Schedule {
            sigma,
            c_n,
            min_eigenvalue: lo,
            clipped: false,
        });
    }
    if !clip {
        return Err(Error::ScheduleTooEarly { c_n, min_eigenvalue: lo });
    }
    let fixed = clip_eigenvalues(&sigma, CLIP_FLOOR);
    let d: Vec<f64> = (0..k).map(|i| fixed[(i, i)].sqrt()).collect();
    let s = DMatrix::from_fn(k, k, |i, j| if i == j { 1.0 } else { fixed[(i, j)] / (d[i] * d[j]) });
    let min_eigenvalue = eigen_range(&s).0;
    Ok(Schedule {
        sigma: s,
        c_n,
        min_eigenvalue,
        clipped: true,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtremeMode {
    /// Componentwise minimum of absolute values.
    MinAbs,
    /// Componentwise maximum.
    Max,
}

/// Scaling function used for Gumbel norming of array maxima.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GumbelScaling {
    /// The family's declared `w` (for the normal law, `w(x) = x`).
    #[default]
    Declared,
    /// The hazard rate `g/(1 − G)`.
    Hazard,
}

#[derive(Debug, Clone)]
pub enum Dependence {
    /// `Σ_n = 11ᵀ − Γ/c_n`.
    Schedule(Variogram),
    /// A correlation matrix that does not change with `n`.
    Fixed(DMatrix<f64>),
}

/// Full description of a triangular array.
#[derive(Debug, Clone)]
pub struct ArraySpec {
    pub k: usize,
    pub dependence: Dependence,
    pub radial: RadialLaw,
    pub scale: Option<ScaleLaw>,
    pub mode: ExtremeMode,
    pub cn_rule: CnRule,
    pub gumbel_scaling: GumbelScaling,
    pub clip_eigenvalues: bool,
}

impl ArraySpec {
    /// Gaussian array (`R ~ χ_k`) with the schedule given by `Γ`.
    pub fn gaussian(gamma: Variogram, mode: ExtremeMode) -> Result<Self> {
        let k = gamma.k();
        let rule = match mode {
            ExtremeMode::MinAbs => CnRule::Minima,
            ExtremeMode::Max => CnRule::Gumbel,
        };
        let s = Self {
            k,
            dependence: Dependence::Schedule(gamma),
            radial: RadialLaw::chi(k as f64),
            scale: None,
            mode,
            cn_rule: rule,
            gumbel_scaling: GumbelScaling::Declared,
            clip_eigenvalues: false,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidDimension("k must be at least 1".into()));
        }
        match &self.dependence {
            Dependence::Schedule(g) if g.k() != self.k => {
                return Err(Error::InvalidDimension(format!("variogram is {0}x{0}, k = {1}", g.k(), self.k)));
            }
            Dependence::Fixed(s) if s.nrows() != self.k || s.ncols() != self.k => {
                return Err(Error::InvalidDimension("fixed sigma has the wrong size".into()));
            }
            _ => {}
        }
        self.radial.validate()?;
        if let Some(s) = &self.scale {
            s.validate()?;
        }
        match (self.mode, self.cn_rule) {
            (ExtremeMode::MinAbs, CnRule::Minima) | (ExtremeMode::Max, CnRule::Gumbel) | (ExtremeMode::Max, CnRule::Weibull) => {}
            (m, r) => return Err(invalid(format!("mode {m:?} is inconsistent with c_n rule {r:?}"))),
        }
        if self.mode == ExtremeMode::MinAbs {
            if let Some(g) = self.marginal().ok().and_then(|g| g.rv_index_at_zero) {
                if !(g > 0.0 && g <= 1.0) {
                    return Err(invalid(format!("|X| must be regularly varying at 0 with index in (0,1], got {g}")));
                }
            }
        }
        Ok(())
    }

    /// Law of one coordinate `X₁₁`.
    pub fn marginal(&self) -> Result<MarginalLaw> {
        let g = match &self.scale {
            None => MarginalLaw::from_radial(&self.radial, self.k)?,
            Some(s) => match &self.radial {
                RadialLaw::Chi { k } if *k == self.k as f64 => MarginalLaw::scale_mixture(s.clone())?,
                _ => {
                    return Err(Error::UnsupportedLaw(
                        "exact norming with a scale law needs a Gaussian radial part".into(),
                    ))
                }
            },
        };
        Ok(match (self.mode, self.gumbel_scaling) {
            (ExtremeMode::Max, GumbelScaling::Hazard) => g.with_hazard_scaling(),
            _ => g,
        })
    }

    /// Index γ of `|X₁₁|` at 0: analytic when known, otherwise estimated
    /// from `10⁵` pilot draws. The flag is true for an estimate.
    pub fn min_index(&self, key: StreamKey) -> Result<(f64, bool)> {
        if let Some(g) = self.marginal().ok().and_then(|g| g.rv_index_at_zero) {
            return Ok((g, false));
        }
        let sampler = self.sampler(&DMatrix::identity(self.k, self.k))?;
        let mut rng = key.substream(u64::MAX).rng();
        let mut scratch = vec![0.0; self.k];
        let mut out = vec![0.0; self.k];
        let draws: Vec<f64> = (0..100_000)
            .map(|_| {
                sampler.draw(&mut rng, &mut scratch, &mut out);
                out[0].abs()
            })
            .collect();
        Ok((rv_index_at_zero(&draws, 0.05)?.gamma, true))
    }

    /// Norming constants at block size `n` under the array's `c_n` rule.
    pub fn norming(&self, n: u64) -> Result<NormingPair> {
        let g = self.marginal()?;
        match self.cn_rule {
            CnRule::Minima => min_norming(&g, n),
            CnRule::Gumbel => gumbel_norming(&g, n),
            CnRule::Weibull => weibull_norming(&g, n),
        }
    }

    /// Correlation matrix for block size `n` given `c_n`.
    pub fn schedule(&self, c_n: f64) -> Result<Schedule> {
        match &self.dependence {
            Dependence::Schedule(g) => sigma_from_gamma(g, c_n, self.clip_eigenvalues),
            Dependence::Fixed(s) => {
                let (lo, _) = eigen_range(s);
                Ok(Schedule {
                    sigma: s.clone(),
                    c_n,
                    min_eigenvalue: lo,
                    clipped: false,
                })
            }
        }
    }

    fn sampler(&self, sigma: &DMatrix<f64>) -> Result<EllipticalSampler> {
        let f = cholesky_pd(sigma)?;
        Ok(EllipticalSampler::from_factor(self.k, f, self.radial.clone(), self.scale.clone()))
    }
}

/// Normalized block extremes, one row of width `k` per replication.
#[derive(Debug, Clone, Serialize)]
pub struct BlockExtremes {
    pub k: usize,
    pub n: u64,
    pub reps: usize,
    pub values: Vec<f64>,
    pub norming: NormingPair,
    pub sigma_min_eigenvalue: f64,
    pub clipped: bool,
    pub seed: u64,
    pub stream: u64,
}

impl BlockExtremes {
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.chunks_exact(self.k).map(|r| r[j]).collect()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.k..(i + 1) * self.k]
    }
}

/// Simulates `reps` blocks of `n` vectors and returns normalized
/// componentwise extremes (`a_n·min|X|` for minima, `(max X − b_n)/a_n` for
/// maxima, with `b_n = 1` under the Weibull rule).
pub fn simulate_block_extremes(spec: &ArraySpec, n: u64, reps: usize, key: StreamKey) -> Result<BlockExtremes> {
    spec.validate()?;
    let norming = spec.norming(n)?;
    let sched = spec.schedule(norming.c_n)?;
    simulate_with(spec, n, reps, norming, &sched, key)
}

/// As [`simulate_block_extremes`] with explicit norming constants and
/// correlation matrix.
pub fn simulate_block_extremes_with(
    spec: &ArraySpec,
    n: u64,
    reps: usize,
    norming: NormingPair,
    sigma: &DMatrix<f64>,
    key: StreamKey,
) -> Result<BlockExtremes> {
    let (lo, _) = eigen_range(sigma);
    let sched = Schedule {
        sigma: sigma.clone(),
        c_n: norming.c_n,
        min_eigenvalue: lo,
        clipped: false,
    };
    simulate_with(spec, n, reps, norming, &sched, key)
}

fn simulate_with(
    spec: &ArraySpec,
    n: u64,
    reps: usize,
    norming: NormingPair,
    sched: &Schedule,
    key: StreamKey,
) -> Result<BlockExtremes> {
    if n == 0 || reps == 0 {
        return Err(invalid("n and reps must be positive"));
    }
    if !(norming.a_n > 0.0) {
        return Err(invalid("a_n must be positive"));
    }
    let sampler = spec.sampler(&sched.sigma)?;
    let k = spec.k;
    let (a, b) = (norming.a_n, norming.b_n);
    let mode = spec.mode;
    let values = par_chunked(reps, k, key, |rng, range, out| {
        let mut scratch = vec![0.0; k];
        let mut x = vec![0.0; k];
        let mut ext = vec![0.0; k];
        for (r, row) in range.zip(out.chunks_exact_mut(k)) {
            let _ = r;
            block(&sampler, mode, n, rng, &mut scratch, &mut x, &mut ext);
            for j in 0..k {
                row[j] = match mode {
                    ExtremeMode::MinAbs => a * ext[j],
                    ExtremeMode::Max => (ext[j] - b) / a,
                };
            }
        }
    });
    Ok(BlockExtremes {
        k,
        n,
        reps,
        values,
        norming,
        sigma_min_eigenvalue: sched.min_eigenvalue,
        clipped: sched.clipped,
        seed: key.seed,
        stream: key.stream,
    })
}

#[inline]
fn block<R: Rng + ?Sized>(
    s: &EllipticalSampler,
    mode: ExtremeMode,
    n: u64,
    rng: &mut R,
    scratch: &mut [f64],
    x: &mut [f64],
    ext: &mut [f64],
) {
    match mode {
        ExtremeMode::MinAbs => ext.iter_mut().for_each(|v| *v = f64::INFINITY),
        ExtremeMode::Max => ext.iter_mut().for_each(|v| *v = f64::NEG_INFINITY),
    }
    for _ in 0..n {
        s.draw(rng, scratch, x);
        match mode {
            ExtremeMode::MinAbs => {
                for (e, v) in ext.iter_mut().zip(x.iter()) {
                    *e = e.min(v.abs());
                }
            }
            ExtremeMode::Max => {
                for (e, v) in ext.iter_mut().zip(x.iter()) {
                    *e = e.max(*v);
                }
            }
        }
    }
}

/// Estimate of the index of regular variation at 0.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RvIndexEstimate {
    pub gamma: f64,
    pub std_err: f64,
    pub fitted: usize,
}

const BOOTSTRAP_REPS: usize = 200;

/// Least-squares fit of the log-log empirical CDF over the lowest
/// `fit_fraction` of the sample, with a bootstrap standard error.
///
/// The fit regresses `ln x₍ᵢ₎` on `ln F_n` with weights `i`, the inverse
/// variance of `ln x₍ᵢ₎`, and returns the reciprocal slope. Putting the
/// noisy order statistics in the response avoids the attenuation that the
/// regression of `ln F_n` on `ln x` suffers from the lowest few points.
pub fn rv_index_at_zero(samples: &[f64], fit_fraction: f64) -> Result<RvIndexEstimate> {
    if samples.len() < 1000 {
        return Err(invalid(format!("need at least 1000 samples, got {}", samples.len())));
    }
    if !(fit_fraction > 0.0 && fit_fraction <= 0.2) {
        return Err(invalid("fit fraction must lie in (0, 0.2]"));
    }
    if samples.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(invalid("samples must be positive and finite"));
    }
    let n = samples.len();
    let m = ((fit_fraction * n as f64) as usize).max(10);
    let mut s = samples.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let gamma = slope(&s[..m], n);
    // bootstrap on the lower tail: only draws below a generous threshold matter
    let cut = s[(3 * m).min(n - 1)];
    let mut rng = StreamKey::new(0x7276_5f69_6478).rng();
    let mut boot = Vec::with_capacity(BOOTSTRAP_REPS);
    let mut low = Vec::with_capacity(4 * m);
    for _ in 0..BOOTSTRAP_REPS {
        low.clear();
        for _ in 0..n {
            let v = samples[rng.random_range(0..n)];
            if v <= cut {
                low.push(v);
            }
        }
        if low.len() < m {
            continue;
        }
        low.sort_by(|a, b| a.total_cmp(b));
        boot.push(slope(&low[..m], n));
    }
    let mean = boot.iter().sum::<f64>() / boot.len().max(1) as f64;
    let var = boot.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / (boot.len().max(2) - 1) as f64;
    Ok(RvIndexEstimate {
        gamma,
        std_err: var.sqrt(),
        fitted: m,
    })
}

fn slope(lowest: &[f64], n: usize) -> f64 {
    let (mut sw, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (i, v) in lowest.iter().enumerate() {
        let w = (i + 1) as f64;
        let x = ((i as f64 + 0.5) / n as f64).ln();
        let y = v.ln();
        sw += w;
        sx += w * x;
        sy += w * y;
        sxx += w * x * x;
        sxy += w * x * y;
    }
    (sw * sxx - sx * sx) / (sw * sxy - sx * sy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::stats::{ks_statistic, two_sample_ks};
    use rand_distr::StandardNormal;

    #[test]
    fn schedule_examples() {
        let g = Variogram::pair(1.0).unwrap();
        let s = sigma_from_gamma(&g, 100.0, false).unwrap();
        assert_eq!(s.sigma, DMatrix::from_row_slice(2, 2, &[1.0, 0.99, 0.99, 1.0]));
        let g3 = Variogram::constant(3, 2.0).unwrap();
        for c in [10.0, 1e3, 1e6] {
            let s = sigma_from_gamma(&g3, c, false).unwrap();
            assert!(s.min_eigenvalue > 0.0);
        }
        let bad = Variogram::from_rows(&[vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 10.0], vec![1.0, 10.0, 0.0]]).unwrap();
        assert!(bad.check_valid().is_err());
        assert!(matches!(sigma_from_gamma(&bad, 6.0, false), Err(Error::ScheduleTooEarly { .. })));
        let clipped = sigma_from_gamma(&bad, 6.0, true).unwrap();
        assert!(clipped.clipped && clipped.min_eigenvalue > 0.0);
        assert!(sigma_from_gamma(&g, 0.4, false).is_err());
    }

    #[test]
    fn round_trip_and_covariance() {
        let g = Variogram::from_rows(&[vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.5], vec![2.0, 1.5, 0.0]]).unwrap();
        let c = 37.0;
        let s = sigma_from_gamma(&g, c, false).unwrap();
        let back = (DMatrix::from_element(3, 3, 1.0) - &s.sigma) * c;
        assert!((back - g.matrix()).amax() < 1e-12);
        let cov = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let v = Variogram::from_covariance(&cov).unwrap();
        assert_eq!(v.get(0, 1), 2.0);
        assert!((v.to_covariance(&[2.0, 1.0]).unwrap() - cov).amax() < 1e-15);
    }

    #[test]
    fn identity_block() {
        let spec = ArraySpec::gaussian(Variogram::pair(1.0).unwrap(), ExtremeMode::Max).unwrap();
        let pair = NormingPair { n: 1, a_n: 1.0, b_n: 0.0, c_n: 1.0, rule: CnRule::Gumbel };
        let sigma = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 1.0]);
        let out = simulate_block_extremes_with(&spec, 1, 5000, pair, &sigma, StreamKey::new(3)).unwrap();
        let col = out.column(0);
        assert!(ks_statistic(&col, crate::numerics::special::norm_cdf) < 1.628 / (col.len() as f64).sqrt());
    }

    #[test]
    fn deterministic_under_seed() {
        let spec = ArraySpec::gaussian(Variogram::pair(1.0).unwrap(), ExtremeMode::MinAbs).unwrap();
        let a = simulate_block_extremes(&spec, 50, 3000, StreamKey::new(8)).unwrap();
        let b = simulate_block_extremes(&spec, 50, 3000, StreamKey::new(8)).unwrap();
        assert_eq!(a.values, b.values);
        let c = simulate_block_extremes(&spec, 50, 3000, StreamKey::new(9)).unwrap();
        assert_ne!(a.values, c.values);
    }

    #[test]
    fn minima_marginals_approach_exponential() {
        let spec = ArraySpec::gaussian(Variogram::pair(1.0).unwrap(), ExtremeMode::MinAbs).unwrap();
        let out = simulate_block_extremes(&spec, 1000, 20_000, StreamKey::new(5)).unwrap();
        for j in 0..2 {
            let d = ks_statistic(&out.column(j), |x| 1.0 - (-2.0 * x).exp());
            assert!(d < 0.02, "{d}");
        }
    }

    #[test]
    fn dependence_depends_on_gamma() {
        let run = |g: f64, seed| {
            let spec = ArraySpec::gaussian(Variogram::pair(g).unwrap(), ExtremeMode::MinAbs).unwrap();
            let out = simulate_block_extremes(&spec, 500, 20_000, StreamKey::new(seed)).unwrap();
            out.values.chunks_exact(2).map(|r| (r[0] - r[1]).abs()).collect::<Vec<f64>>()
        };
        let (a, b) = (run(0.5, 1), run(4.0, 2));
        assert!(two_sample_ks(&a, &b).p_value < 0.01);
    }

    #[test]
    fn inconsistent_rule_rejected() {
        let mut spec = ArraySpec::gaussian(Variogram::pair(1.0).unwrap(), ExtremeMode::MinAbs).unwrap();
        spec.cn_rule = CnRule::Weibull;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn rv_index_examples() {
        let mut rng = StreamKey::new(77).rng();
        let n = 100_000;
        let half_normal: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal).abs()).collect();
        let e = rv_index_at_zero(&half_normal, 0.05).unwrap();
        assert!((0.9..=1.1).contains(&e.gamma), "{e:?}");
        assert!(e.std_err > 0.0 && e.std_err < 0.1);
        let u: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let e = rv_index_at_zero(&u, 0.05).unwrap();
        assert!((0.95..=1.05).contains(&e.gamma), "{e:?}");
        let sq: Vec<f64> = u.iter().map(|v| v * v).collect();
        let e = rv_index_at_zero(&sq, 0.05).unwrap();
        assert!((0.45..=0.55).contains(&e.gamma), "{e:?}");
        assert!(rv_index_at_zero(&u[..10], 0.01).is_err());
        assert!(rv_index_at_zero(&u, 0.5).is_err());
        let mut neg = u.clone();
        neg[0] = -1.0;
        assert!(rv_index_at_zero(&neg, 0.01).is_err());
    }
}
