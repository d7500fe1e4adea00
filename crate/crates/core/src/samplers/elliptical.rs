use nalgebra::DMatrix;
use rand::Rng;

use super::radial::RadialLaw;
use super::scale::ScaleLaw;
use super::sphere::{fill_standard_normal, sample_unit_sphere_into};
use crate::error::{invalid, Error, Result};
use crate::numerics::linalg::{cholesky_pd, Factor};

/// An elliptical law `R·A·U` with correlation matrix `Σ = A Aᵀ`.
#[derive(Debug, Clone)]
pub struct EllipticalSpec {
    pub k: usize,
    pub sigma: DMatrix<f64>,
    pub radial: RadialLaw,
}

impl EllipticalSpec {
    pub fn new(sigma: DMatrix<f64>, radial: RadialLaw) -> Result<Self> {
        let k = sigma.nrows();
        if k == 0 || sigma.ncols() != k {
            return Err(Error::InvalidDimension(format!(
                "sigma must be square and non-empty, got {}x{}",
                sigma.nrows(),
                sigma.ncols()
            )));
        }
        for i in 0..k {
            if (sigma[(i, i)] - 1.0).abs() > 1e-12 {
                return Err(invalid(format!("sigma[{i},{i}] = {} is not 1", sigma[(i, i)])));
            }
            for j in 0..i {
                if (sigma[(i, j)] - sigma[(j, i)]).abs() > 1e-12 {
                    return Err(invalid("sigma is not symmetric"));
                }
            }
        }
        radial.validate()?;
        Ok(Self { k, sigma, radial })
    }

    pub fn gaussian(sigma: DMatrix<f64>) -> Result<Self> {
        let k = sigma.nrows() as f64;
        Self::new(sigma, RadialLaw::chi(k))
    }
}

/// Pre-factored sampler for an elliptical law, optionally multiplied by an
/// independent scale `S`.
#[derive(Debug, Clone)]
pub struct EllipticalSampler {
    pub k: usize,
    pub factor: Factor,
    pub radial: RadialLaw,
    pub scale: Option<ScaleLaw>,
    gaussian: bool,
}

impl EllipticalSampler {
    pub fn new(spec: &EllipticalSpec, scale: Option<ScaleLaw>) -> Result<Self> {
        let factor = cholesky_pd(&spec.sigma)?;
        Ok(Self::from_factor(spec.k, factor, spec.radial.clone(), scale))
    }

    pub fn from_factor(k: usize, factor: Factor, radial: RadialLaw, scale: Option<ScaleLaw>) -> Self {
        let gaussian = matches!(radial, RadialLaw::Chi { k: nu } if nu == k as f64);
        Self {
            k,
            factor,
            radial,
            scale,
            gaussian,
        }
    }

    /// True when draws take the direct Gaussian route `A·N`.
    pub fn is_gaussian(&self) -> bool {
        self.gaussian
    }

    /// One draw into `out`; `scratch` must have length `k`.
    #[inline]
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R, scratch: &mut [f64], out: &mut [f64]) {
        if self.gaussian {
            fill_standard_normal(rng, scratch);
        } else {
            sample_unit_sphere_into(rng, scratch);
            let r = self.radial.sample(rng);
            scratch.iter_mut().for_each(|v| *v *= r);
        }
        self.factor.apply(scratch, out);
        if let Some(s) = &self.scale {
            let s = s.sample(rng);
            out.iter_mut().for_each(|v| *v *= s);
        }
    }

    /// Same law as [`draw`](Self::draw) but always through `R·A·U`.
    pub fn draw_generic<R: Rng + ?Sized>(&self, rng: &mut R, scratch: &mut [f64], out: &mut [f64]) {
        sample_unit_sphere_into(rng, scratch);
        let r = self.radial.sample(rng);
        scratch.iter_mut().for_each(|v| *v *= r);
        self.factor.apply(scratch, out);
        if let Some(s) = &self.scale {
            let s = s.sample(rng);
            out.iter_mut().for_each(|v| *v *= s);
        }
    }
}

/// `n` independent draws `R·A·U`, one row per draw.
pub fn sample_elliptical<R: Rng + ?Sized>(spec: &EllipticalSpec, n: usize, rng: &mut R) -> Result<Vec<Vec<f64>>> {
    let s = EllipticalSampler::new(spec, None)?;
    let mut scratch = vec![0.0; spec.k];
    Ok((0..n)
        .map(|_| {
            let mut out = vec![0.0; spec.k];
            s.draw(rng, &mut scratch, &mut out);
            out
        })
        .collect())
}
