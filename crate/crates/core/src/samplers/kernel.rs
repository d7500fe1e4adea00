use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::scale::ScaleLaw;
use super::sphere::fill_standard_normal;
use crate::error::{invalid, Error, Result};
use crate::numerics::linalg::{is_psd, min_eigenvalue, psd_factor, Factor};

/// Variogram kernels `Γ(s, t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum VariogramKernel {
    /// `scale·|s − t|`
    Brownian {
        #[serde(default = "one")]
        scale: f64,
    },
    /// `scale·|s − t|^(2H)`
    Fbm {
        hurst: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    /// `value·1{s ≠ t}`
    Constant { value: f64 },
}

/// Variance functions `σ²(t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum VarianceFn {
    Constant { value: f64 },
    /// `slope·t + offset`
    Linear { slope: f64, offset: f64 },
    /// `Γ(0, t)`, the variance of a process pinned at the origin.
    Origin,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianKernel {
    pub variogram: VariogramKernel,
    pub variance: VarianceFn,
}

impl VariogramKernel {
    pub fn eval(&self, s: f64, t: f64) -> f64 {
        match self {
            VariogramKernel::Brownian { scale } => scale * (s - t).abs(),
            VariogramKernel::Fbm { hurst, scale } => scale * (s - t).abs().powf(2.0 * hurst),
            VariogramKernel::Constant { value } => {
                if s == t {
                    0.0
                } else {
                    *value
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            VariogramKernel::Brownian { scale } if !(*scale > 0.0) => Err(invalid("brownian scale must be positive")),
            VariogramKernel::Fbm { hurst, scale } if !(*hurst > 0.0 && *hurst <= 1.0 && *scale > 0.0) => {
                Err(invalid("fbm needs 0 < hurst <= 1 and scale > 0"))
            }
            VariogramKernel::Constant { value } if !(*value >= 0.0) => Err(invalid("constant variogram must be >= 0")),
            _ => Ok(()),
        }
    }
}

impl GaussianKernel {
    pub fn new(variogram: VariogramKernel, variance: VarianceFn) -> Self {
        Self { variogram, variance }
    }

    /// Brownian variogram `|s − t|` with a constant variance.
    pub fn brownian(variance: f64) -> Self {
        Self::new(VariogramKernel::Brownian { scale: 1.0 }, VarianceFn::Constant { value: variance })
    }

    pub fn gamma(&self, s: f64, t: f64) -> f64 {
        self.variogram.eval(s, t)
    }

    pub fn variance_at(&self, t: f64) -> f64 {
        match &self.variance {
            VarianceFn::Constant { value } => *value,
            VarianceFn::Linear { slope, offset } => slope * t + offset,
            VarianceFn::Origin => self.variogram.eval(0.0, t),
        }
    }

    pub fn gamma_matrix(&self, grid: &[f64]) -> DMatrix<f64> {
        let k = grid.len();
        DMatrix::from_fn(k, k, |i, j| self.gamma(grid[i], grid[j]))
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidDimension("grid must not be empty".into()));
    }
    if grid.iter().any(|t| !t.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("grid must be finite and strictly increasing"));
    }
    Ok(())
}

/// Covariance `C_ij = (σ²(t_i) + σ²(t_j) − Γ(t_i, t_j))/2` on the grid.
pub fn variogram_to_covariance(kernel: &GaussianKernel, grid: &[f64]) -> Result<DMatrix<f64>> {
    check_grid(grid)?;
    kernel.variogram.validate()?;
    let var: Vec<f64> = grid.iter().map(|&t| kernel.variance_at(t)).collect();
    if let Some((i, v)) = var.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
        return Err(invalid(format!("variance {v} at grid point {} is negative", grid[i])));
    }
    let k = grid.len();
    let c = DMatrix::from_fn(k, k, |i, j| 0.5 * (var[i] + var[j] - kernel.gamma(grid[i], grid[j])));
    if !is_psd(&c) {
        return Err(Error::InvalidVariogram(format!(
            "implied covariance has smallest eigenvalue {:e}",
            min_eigenvalue(&c)
        )));
    }
    Ok(c)
}

/// Gaussian path sampler on a fixed grid with one shared factorization.
#[derive(Debug, Clone)]
pub struct GridSampler {
    pub grid: Vec<f64>,
    pub covariance: DMatrix<f64>,
    pub variance: Vec<f64>,
    pub factor: Factor,
}

impl GridSampler {
    pub fn new(kernel: &GaussianKernel, grid: &[f64]) -> Result<Self> {
        let covariance = variogram_to_covariance(kernel, grid)?;
        let factor = psd_factor(&covariance).map_err(|_| Error::InvalidVariogram("covariance is not PSD".into()))?;
        Ok(Self {
            grid: grid.to_vec(),
            variance: (0..grid.len()).map(|i| covariance[(i, i)]).collect(),
            covariance,
            factor,
        })
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Writes one centred Gaussian path into `out`; `scratch` has grid length.
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, scratch: &mut [f64], out: &mut [f64]) {
        fill_standard_normal(rng, scratch);
        self.factor.apply(scratch, out);
    }
}

/// Sampler of a positive scale process `S(t)` on a grid.
pub trait ScalePathSampler: Send + Sync {
    /// Almost-sure lower bound κ of the process.
    fn lower_bound(&self) -> f64;
    fn sample_path(&self, rng: &mut dyn RngCore, grid: &[f64], out: &mut [f64]);
}

/// How the scale multiplies a Gaussian path.
#[derive(Clone)]
pub enum ScaleMode {
    /// One scale draw for the whole path: `X(t) = S·Y(t)`.
    Scalar(ScaleLaw),
    /// Independent scale draws at every grid point.
    Independent(ScaleLaw),
    /// A user-supplied scale process.
    Path(Arc<dyn ScalePathSampler>),
}

impl fmt::Debug for ScaleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScaleMode::Scalar(s) => f.debug_tuple("Scalar").field(s).finish(),
            ScaleMode::Independent(s) => f.debug_tuple("Independent").field(s).finish(),
            ScaleMode::Path(p) => write!(f, "Path(lower_bound = {})", p.lower_bound()),
        }
    }
}

impl ScaleMode {
    pub fn lower_bound(&self) -> f64 {
        match self {
            ScaleMode::Scalar(s) | ScaleMode::Independent(s) => s.lower_bound(),
            ScaleMode::Path(p) => p.lower_bound(),
        }
    }

    pub fn constant(&self) -> Option<f64> {
        match self {
            ScaleMode::Scalar(s) | ScaleMode::Independent(s) => s.is_degenerate(),
            ScaleMode::Path(_) => None,
        }
    }

    pub fn sample_path<R: Rng>(&self, rng: &mut R, grid: &[f64], out: &mut [f64]) {
        match self {
            ScaleMode::Scalar(s) => {
                let v = s.sample(rng);
                out.iter_mut().for_each(|o| *o = v);
            }
            ScaleMode::Independent(s) => out.iter_mut().for_each(|o| *o = s.sample(rng)),
            ScaleMode::Path(p) => p.sample_path(rng, grid, out),
        }
    }
}

/// One path `X(t_j) = S(t_j)·Y(t_j)` of a spherical process with a
/// unit-variance Gaussian part `Y`.
pub fn sample_spherical_process<R: Rng>(
    kernel: &GaussianKernel,
    grid: &[f64],
    mode: &ScaleMode,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let g = GridSampler::new(kernel, grid)?;
    if g.variance.iter().any(|v| (v - 1.0).abs() > 1e-12) {
        return Err(invalid("the Gaussian part of a spherical process must have unit variance"));
    }
    let k = grid.len();
    let mut scratch = vec![0.0; k];
    let mut y = vec![0.0; k];
    let mut s = vec![0.0; k];
    g.sample(rng, &mut scratch, &mut y);
    mode.sample_path(rng, grid, &mut s);
    Ok(y.iter().zip(&s).map(|(a, b)| a * b).collect())
}
