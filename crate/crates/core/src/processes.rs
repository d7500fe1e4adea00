//! Brown–Resnick and Penrose–Kabluchko processes on a finite grid, built
//! from truncated Poisson cascades.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Exp1, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numerics::linalg::{psd_factor, Factor};
use crate::numerics::special::norm_isf;
use crate::rng::{par_chunked, StreamKey};
use crate::samplers::{fill_standard_normal, variogram_to_covariance, GaussianKernel, ScaleMode};

/// Intensity of a Poisson stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Intensity {
    /// `e^{−x}dx` on ℝ, first `count` points in decreasing order.
    Gumbel { count: usize },
    /// Lebesgue measure restricted to `[−window, window]`.
    Lebesgue { window: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoissonStream {
    pub intensity: Intensity,
    pub points: Vec<f64>,
}

impl PoissonStream {
    pub fn count(&self) -> usize {
        self.points.len()
    }
}

/// Gumbel streams are `−ln(E₁ + … + E_i)`; Lebesgue streams have a
/// `Poisson(2W)` count of uniform points.
pub fn make_poisson_stream<R: Rng + ?Sized>(intensity: Intensity, rng: &mut R) -> Result<PoissonStream> {
    let points = match intensity {
        Intensity::Gumbel { count } => {
            if count == 0 {
                return Err(invalid("a Gumbel stream needs at least one point"));
            }
            let mut s = 0.0;
            (0..count)
                .map(|_| {
                    s += <Exp1 as Distribution<f64>>::sample(&Exp1, rng);
                    -s.ln()
                })
                .collect()
        }
        Intensity::Lebesgue { window } => {
            if !(window > 0.0 && window.is_finite()) {
                return Err(invalid(format!("window {window} must be positive")));
            }
            let n = Poisson::new(2.0 * window).map_err(|e| invalid(e.to_string()))?.sample(rng) as usize;
            (0..n).map(|_| rng.random_range(-window..window)).collect()
        }
    };
    Ok(PoissonStream { intensity, points })
}

/// One path on a grid with per-point truncation flags.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Path {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub flags: Vec<bool>,
}

/// Many paths on one grid, stored row-major.
#[derive(Debug, Clone, Serialize)]
pub struct PathSet {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub flags: Vec<bool>,
    /// Cascade size (Brown–Resnick) or window half-width (Penrose–Kabluchko).
    pub truncation: f64,
    pub seed: u64,
    pub stream: u64,
}

impl PathSet {
    pub fn len(&self) -> usize {
        self.values.len() / self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        let k = self.grid.len();
        self.values.chunks_exact(k).map(|r| r[j]).collect()
    }

    pub fn path(&self, i: usize) -> Path {
        let k = self.grid.len();
        Path {
            grid: self.grid.clone(),
            values: self.values[i * k..(i + 1) * k].to_vec(),
            flags: self.flags[i * k..(i + 1) * k].to_vec(),
        }
    }

    /// Fraction of paths with at least one flagged grid point.
    pub fn flag_rate(&self) -> f64 {
        let k = self.grid.len();
        let n = self.flags.chunks_exact(k).filter(|f| f.iter().any(|b| *b)).count();
        n as f64 / self.len().max(1) as f64
    }
}

/// Gaussian paths on a grid. Grid points at zero variogram distance with
/// equal variance carry identical values, so they are sampled once.
#[derive(Debug, Clone)]
struct PathSampler {
    k: usize,
    variance: Vec<f64>,
    alias: Vec<usize>,
    unique: Vec<usize>,
    factor: Factor,
}

impl PathSampler {
    fn new(kernel: &GaussianKernel, grid: &[f64]) -> Result<Self> {
        let cov = variogram_to_covariance(kernel, grid)?;
        let k = grid.len();
        let variance: Vec<f64> = (0..k).map(|i| cov[(i, i)]).collect();
        let mut alias = vec![0; k];
        let mut unique = Vec::new();
        for i in 0..k {
            let twin = unique
                .iter()
                .position(|&u: &usize| kernel.gamma(grid[u], grid[i]) == 0.0 && variance[u] == variance[i]);
            match twin {
                Some(p) => alias[i] = p,
                None => {
                    alias[i] = unique.len();
                    unique.push(i);
                }
            }
        }
        let m = unique.len();
        let sub = DMatrix::from_fn(m, m, |a, b| cov[(unique[a], unique[b])]);
        let factor = psd_factor(&sub).map_err(|_| Error::InvalidVariogram("grid covariance is not PSD".into()))?;
        Ok(Self {
            k,
            variance,
            alias,
            unique,
            factor,
        })
    }

    /// `scratch` needs `2·unique` entries.
    #[inline]
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R, scratch: &mut [f64], out: &mut [f64]) {
        let m = self.unique.len();
        let (n, z) = scratch.split_at_mut(m);
        fill_standard_normal(rng, n);
        self.factor.apply(n, &mut z[..m]);
        for i in 0..self.k {
            out[i] = z[self.alias[i]];
        }
    }

    fn scratch(&self) -> Vec<f64> {
        vec![0.0; 2 * self.unique.len()]
    }
}

/// Empirical `p`-quantile by linear interpolation of order statistics.
fn quantile(mut v: Vec<f64>, p: f64) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let h = p * (v.len() - 1) as f64;
    let (i, f) = (h.floor() as usize, h - h.floor());
    if i + 1 < v.len() {
        v[i] * (1.0 - f) + v[i + 1] * f
    } else {
        v[v.len() - 1]
    }
}

const PILOT_PATHS: usize = 1000;
const PILOT_LEVEL: f64 = 0.9999;

/// Union bound on the `PILOT_LEVEL` quantile of `max_t (Z(t) + shift(σ²(t)))`
/// (or of `max_t |Z(t)|` when `two_sided`). A thousand pilot paths cannot
/// resolve a 10⁻⁴ tail on their own, so the pilot quantile is raised to this.
fn union_quantile(variance: &[f64], two_sided: bool, shift: impl Fn(f64) -> f64) -> f64 {
    let k = variance.len() as f64;
    let tail = (1.0 - PILOT_LEVEL) / k / if two_sided { 2.0 } else { 1.0 };
    let z = norm_isf(tail);
    variance.iter().map(|&v| shift(v) + v.sqrt() * z).fold(f64::NEG_INFINITY, f64::max)
}

/// Options of the Brown–Resnick simulator.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BrOptions {
    /// Cascade size; default `10·⌈e^q⌉` capped at `10⁴`, `q` the pilot
    /// 0.9999-quantile of `max_t ξ(t)`.
    pub n_points: Option<usize>,
}

/// Brown–Resnick process state for one grid.
pub struct BrownResnick {
    grid: Vec<f64>,
    sampler: PathSampler,
    /// 0.9999-quantile of `max_t ξ(t)` from the pilot.
    pub q: f64,
    pub n_points: usize,
}

impl BrownResnick {
    pub fn new(kernel: &GaussianKernel, grid: &[f64], opts: BrOptions, key: StreamKey) -> Result<Self> {
        let sampler = PathSampler::new(kernel, grid)?;
        let mut rng = key.substream(u64::MAX).rng();
        let mut scratch = sampler.scratch();
        let mut z = vec![0.0; grid.len()];
        let sup: Vec<f64> = (0..PILOT_PATHS)
            .map(|_| {
                sampler.sample(&mut rng, &mut scratch, &mut z);
                z.iter().zip(&sampler.variance).map(|(a, v)| a - v / 2.0).fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        let q = quantile(sup, PILOT_LEVEL).max(union_quantile(&sampler.variance, false, |v| -v / 2.0));
        let n_points = match opts.n_points {
            Some(0) => return Err(invalid("n_points must be at least 1")),
            Some(n) => n,
            None => (10.0 * q.exp().ceil()).clamp(10.0, 1e4) as usize,
        };
        Ok(Self {
            grid: grid.to_vec(),
            sampler,
            q,
            n_points,
        })
    }

    /// `β(t) = max_{i ≤ n} Υ_i + Z_i(t) − σ²(t)/2`; a grid point is flagged
    /// when `Υ_n + q` exceeds its value.
    pub fn path<R: Rng + ?Sized>(&self, rng: &mut R, values: &mut [f64], flags: &mut [bool]) {
        let k = self.grid.len();
        let mut scratch = self.sampler.scratch();
        let mut z = vec![0.0; k];
        values.iter_mut().for_each(|v| *v = f64::NEG_INFINITY);
        let mut e = 0.0;
        let mut last = 0.0;
        for _ in 0..self.n_points {
            e += <Exp1 as Distribution<f64>>::sample(&Exp1, rng);
            last = -e.ln();
            self.sampler.sample(rng, &mut scratch, &mut z);
            for t in 0..k {
                values[t] = values[t].max(last + z[t] - self.sampler.variance[t] / 2.0);
            }
        }
        for t in 0..k {
            flags[t] = last + self.q > values[t];
        }
    }

    pub fn simulate(&self, reps: usize, key: StreamKey) -> PathSet {
        let k = self.grid.len();
        let raw = par_chunked(reps, 2 * k, key, |rng, _r, out| {
            let mut flags = vec![false; k];
            for row in out.chunks_exact_mut(2 * k) {
                let (v, f) = row.split_at_mut(k);
                self.path(rng, v, &mut flags);
                for t in 0..k {
                    f[t] = if flags[t] { 1.0 } else { 0.0 };
                }
            }
        });
        split(raw, &self.grid, self.n_points as f64, key)
    }
}

fn split(raw: Vec<f64>, grid: &[f64], truncation: f64, key: StreamKey) -> PathSet {
    let k = grid.len();
    let mut values = Vec::with_capacity(raw.len() / 2);
    let mut flags = Vec::with_capacity(raw.len() / 2);
    for row in raw.chunks_exact(2 * k) {
        values.extend_from_slice(&row[..k]);
        flags.extend(row[k..].iter().map(|f| *f != 0.0));
    }
    PathSet {
        grid: grid.to_vec(),
        values,
        flags,
        truncation,
        seed: key.seed,
        stream: key.stream,
    }
}

/// `reps` Brown–Resnick paths on `grid`.
pub fn simulate_brown_resnick(
    kernel: &GaussianKernel,
    grid: &[f64],
    reps: usize,
    opts: BrOptions,
    key: StreamKey,
) -> Result<PathSet> {
    if reps == 0 {
        return Err(invalid("reps must be positive"));
    }
    Ok(BrownResnick::new(kernel, grid, opts, key)?.simulate(reps, key))
}

/// Options of the Penrose–Kabluchko simulator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PkOptions {
    /// Window half-width; default `x_range/κ + q + 2`, `q` the pilot
    /// 0.9999-quantile of `max_t |Z(t)|`.
    pub window: Option<f64>,
    /// Largest value of `ζ` of interest.
    pub x_range: f64,
    /// Accept `κ = 0` (scales with a finite negative moment). The window and
    /// flags then use the scale's 10⁻⁴-quantile in place of κ.
    pub moment_override: bool,
}

impl Default for PkOptions {
    fn default() -> Self {
        Self {
            window: None,
            x_range: 5.0,
            moment_override: false,
        }
    }
}

/// Penrose–Kabluchko process state for one grid.
pub struct PenroseKabluchko {
    grid: Vec<f64>,
    sampler: PathSampler,
    scale: ScaleMode,
    kappa: f64,
    /// 0.9999-quantile of `max_t |Z(t)|` from the pilot.
    pub q: f64,
    pub window: f64,
}

impl PenroseKabluchko {
    pub fn new(kernel: &GaussianKernel, scale: ScaleMode, grid: &[f64], opts: PkOptions, key: StreamKey) -> Result<Self> {
        let sampler = PathSampler::new(kernel, grid)?;
        let mut kappa = scale.lower_bound();
        if !(kappa > 0.0) {
            if !opts.moment_override {
                return Err(Error::UnsupportedLaw("scale lower bound κ must be positive".into()));
            }
            kappa = match &scale {
                ScaleMode::Scalar(s) | ScaleMode::Independent(s) => s.quantile(1e-4),
                ScaleMode::Path(_) => {
                    return Err(Error::UnsupportedLaw("path scales need a positive lower bound".into()))
                }
            };
        }
        if !(opts.x_range > 0.0) {
            return Err(invalid("x_range must be positive"));
        }
        let mut rng = key.substream(u64::MAX).rng();
        let mut scratch = sampler.scratch();
        let mut z = vec![0.0; grid.len()];
        let sup: Vec<f64> = (0..PILOT_PATHS)
            .map(|_| {
                sampler.sample(&mut rng, &mut scratch, &mut z);
                z.iter().fold(0.0, |m: f64, v| m.max(v.abs()))
            })
            .collect();
        let q = quantile(sup, PILOT_LEVEL).max(union_quantile(&sampler.variance, true, |_| 0.0));
        let window = match opts.window {
            Some(w) if !(w > 0.0 && w.is_finite()) => return Err(invalid(format!("window {w} must be positive"))),
            Some(w) => w,
            None => opts.x_range / kappa + q + 2.0,
        };
        Ok(Self {
            grid: grid.to_vec(),
            sampler,
            scale,
            kappa,
            q,
            window,
        })
    }

    /// `ζ(t) = min_i S_i(t)|Υ_i + Z_i(t)|` over a Lebesgue stream on the
    /// window; a grid point is flagged unless `κ(W − q)` exceeds its value.
    pub fn path<R: Rng>(&self, rng: &mut R, values: &mut [f64], flags: &mut [bool]) {
        let k = self.grid.len();
        let mut scratch = self.sampler.scratch();
        let mut z = vec![0.0; k];
        let mut s = vec![0.0; k];
        values.iter_mut().for_each(|v| *v = f64::INFINITY);
        let w = self.window;
        // Poisson(2W) is valid by construction
        let n = Poisson::new(2.0 * w).unwrap().sample(rng) as usize;
        for _ in 0..n {
            let y = rng.random_range(-w..w);
            self.sampler.sample(rng, &mut scratch, &mut z);
            self.scale.sample_path(rng, &self.grid, &mut s);
            for t in 0..k {
                values[t] = values[t].min(s[t] * (y + z[t]).abs());
            }
        }
        let safe = self.kappa * (w - self.q);
        for t in 0..k {
            flags[t] = !(safe > values[t]);
        }
    }

    pub fn simulate(&self, reps: usize, key: StreamKey) -> PathSet {
        let k = self.grid.len();
        let raw = par_chunked(reps, 2 * k, key, |rng, _r, out| {
            let mut flags = vec![false; k];
            for row in out.chunks_exact_mut(2 * k) {
                let (v, f) = row.split_at_mut(k);
                self.path(rng, v, &mut flags);
                for t in 0..k {
                    f[t] = if flags[t] { 1.0 } else { 0.0 };
                }
            }
        });
        split(raw, &self.grid, self.window, key)
    }
}

/// `reps` Penrose–Kabluchko paths on `grid`.
pub fn simulate_penrose_kabluchko(
    kernel: &GaussianKernel,
    scale: ScaleMode,
    grid: &[f64],
    reps: usize,
    opts: PkOptions,
    key: StreamKey,
) -> Result<PathSet> {
    if reps == 0 {
        return Err(invalid("reps must be positive"));
    }
    Ok(PenroseKabluchko::new(kernel, scale, grid, opts, key)?.simulate(reps, key))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::stats::{ks_statistic, two_sample_ks};
    use crate::samplers::{ScaleLaw, VarianceFn, VariogramKernel};

    fn brownian(offset: f64) -> GaussianKernel {
        GaussianKernel::new(VariogramKernel::Brownian { scale: 1.0 }, VarianceFn::Linear { slope: 1.0, offset })
    }

    #[test]
    fn gumbel_stream() {
        let mut rng = StreamKey::new(1).rng();
        let first: Vec<f64> = (0..100_000)
            .map(|_| {
                let s = make_poisson_stream(Intensity::Gumbel { count: 5 }, &mut rng).unwrap();
                assert!(s.points.windows(2).all(|w| w[0] > w[1]));
                s.points[0]
            })
            .collect();
        assert!(ks_statistic(&first, |x| (-(-x).exp()).exp()) <= 0.01);
        assert!(make_poisson_stream(Intensity::Gumbel { count: 0 }, &mut rng).is_err());
    }

    #[test]
    fn lebesgue_stream_count() {
        let mut rng = StreamKey::new(2).rng();
        let n = 10_000;
        let total: usize = (0..n)
            .map(|_| make_poisson_stream(Intensity::Lebesgue { window: 1.0 }, &mut rng).unwrap().count())
            .sum();
        assert!((total as f64 / n as f64 - 2.0).abs() < 0.05);
        assert!(make_poisson_stream(Intensity::Lebesgue { window: 0.0 }, &mut rng).is_err());
    }

    #[test]
    fn br_single_point_is_gumbel() {
        let k = GaussianKernel::new(VariogramKernel::Brownian { scale: 1.0 }, VarianceFn::Constant { value: 2.0 });
        let p = simulate_brown_resnick(&k, &[0.0], 100_000, BrOptions::default(), StreamKey::new(3)).unwrap();
        assert!(ks_statistic(&p.column(0), |x| (-(-x).exp()).exp()) <= 0.01);
        assert!(p.flag_rate() < 1e-3);
    }

    #[test]
    fn br_degenerate_kernel_gives_equal_coordinates() {
        let k = GaussianKernel::new(VariogramKernel::Constant { value: 0.0 }, VarianceFn::Constant { value: 0.0 });
        let p = simulate_brown_resnick(&k, &[0.0, 1.0], 2000, BrOptions::default(), StreamKey::new(4)).unwrap();
        assert!(p.values.chunks_exact(2).all(|r| r[0] == r[1]));
    }

    #[test]
    fn br_law_ignores_variance_function() {
        let grid = [0.5, 1.5];
        let a = simulate_brown_resnick(&brownian(0.0), &grid, 30_000, BrOptions::default(), StreamKey::new(5)).unwrap();
        let b = simulate_brown_resnick(&brownian(3.0), &grid, 30_000, BrOptions::default(), StreamKey::new(6)).unwrap();
        for j in 0..2 {
            assert!(two_sample_ks(&a.column(j), &b.column(j)).p_value > 0.01);
        }
    }

    #[test]
    fn pk_marginal_and_scaling() {
        let k = brownian(1.0);
        let one = ScaleMode::Scalar(ScaleLaw::constant(1.0));
        let p = simulate_penrose_kabluchko(&k, one.clone(), &[0.0], 100_000, PkOptions::default(), StreamKey::new(7)).unwrap();
        assert!(ks_statistic(&p.column(0), |x| 1.0 - (-2.0 * x).exp()) <= 0.01);
        assert!(p.flag_rate() < 1e-3);
        let c = ScaleMode::Scalar(ScaleLaw::constant(2.5));
        let grid = [0.0, 1.0];
        let a = simulate_penrose_kabluchko(&k, one, &grid, 20_000, PkOptions::default(), StreamKey::new(8)).unwrap();
        let b = simulate_penrose_kabluchko(&k, c, &grid, 20_000, PkOptions::default(), StreamKey::new(9)).unwrap();
        for j in 0..2 {
            let scaled: Vec<f64> = a.column(j).iter().map(|v| v * 2.5).collect();
            assert!(two_sample_ks(&scaled, &b.column(j)).p_value > 0.01);
        }
    }

    #[test]
    fn pk_degenerate_kernel_gives_equal_coordinates() {
        let k = GaussianKernel::new(VariogramKernel::Constant { value: 0.0 }, VarianceFn::Constant { value: 1.0 });
        let one = ScaleMode::Scalar(ScaleLaw::constant(1.0));
        let p = simulate_penrose_kabluchko(&k, one, &[0.0, 1.0], 2000, PkOptions::default(), StreamKey::new(10)).unwrap();
        assert!(p.values.chunks_exact(2).all(|r| r[0] == r[1]));
    }

    #[test]
    fn pk_requires_lower_bound() {
        let a = ScaleMode::Scalar(ScaleLaw::model_a(1.0, 0.5, 2.0).unwrap());
        assert!(matches!(
            PenroseKabluchko::new(&brownian(1.0), a.clone(), &[0.0], PkOptions::default(), StreamKey::new(1)),
            Err(Error::UnsupportedLaw(_))
        ));
        let opts = PkOptions {
            moment_override: true,
            ..Default::default()
        };
        assert!(PenroseKabluchko::new(&brownian(1.0), a, &[0.0], opts, StreamKey::new(1)).is_ok());
    }
}
