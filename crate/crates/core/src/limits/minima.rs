//! Limits of normalized componentwise minima of absolute values.

use serde::{Deserialize, Serialize};

use super::engine::{integrate, Bank, BatchSums, Budget, LimitEstimate, Measure, Problem};
use crate::arrays::Variogram;
use crate::error::{invalid, Error, Result};
use crate::numerics::linalg::psd_factor;
use crate::numerics::special::{norm_isf, norm_sf};
use crate::samplers::{fill_standard_normal, kh_law, marginal_radial, EllipticalSampler, RadialLaw, ScaleMode};

/// `𝒢_γ(x) = 1 − exp(−2x^γ)`.
pub fn g_gamma_cdf(gamma: f64, x: f64) -> Result<f64> {
    check_index(gamma)?;
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("x = {x} must be nonnegative")));
    }
    Ok(-(-2.0 * x.powf(gamma)).exp_m1())
}

fn check_index(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma <= 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("index gamma = {gamma} must lie in (0, 1]")))
    }
}

fn check_positive(x: &[f64], k: usize) -> Result<()> {
    if x.len() != k {
        return Err(Error::InvalidDimension(format!("point has {} coordinates, expected {k}", x.len())));
    }
    if x.iter().any(|v| !(*v > 0.0) || v.is_nan()) {
        return Err(Error::Domain("points must lie in (0, inf)^k".into()));
    }
    Ok(())
}

/// `v ↦ sign(v)|v|^γ`, the inverse of `y ↦ sign(y)|y|^{1/γ}`.
#[inline]
fn power_sign(v: f64, gamma: f64) -> f64 {
    if gamma == 1.0 {
        v
    } else {
        v.signum() * v.abs().powf(gamma)
    }
}

/// Boundary case `Γ = 0`: all coordinates of `𝓛` coincide, so
/// `P{𝓛 > x} = 1 − 𝒢_γ(max x_i)`.
pub fn min_limit_survival_zero(gamma: f64, x: &[f64]) -> Result<f64> {
    check_positive(x, x.len())?;
    let m = x.iter().cloned().fold(0.0, f64::max);
    Ok(1.0 - g_gamma_cdf(gamma, m)?)
}

fn elliptical_bank(k: usize, cov: &nalgebra::DMatrix<f64>, radial: &RadialLaw, budget: &Budget, stream: u64) -> Result<Bank> {
    let factor = psd_factor(cov).map_err(|_| Error::InvalidVariogram("implied scale matrix is not PSD".into()))?;
    let sampler = EllipticalSampler::from_factor(k, factor, radial.clone(), None);
    Ok(Bank::draw(budget.paths, k, budget.key().substream(stream), move |rng, row| {
        let mut scratch = vec![0.0; k];
        sampler.draw(rng, &mut scratch, row);
    }))
}

/// Law of `|Z_i|/σ_i` for `Z = R·B·U` in `k` dimensions.
fn coordinate_law(radial: &RadialLaw, k: usize) -> Result<RadialLaw> {
    if k == 1 {
        Ok(radial.clone())
    } else {
        marginal_radial(radial, k, 1)
    }
}

/// Limit of `a_n L_n` as a single integral over one elliptical vector `Z`.
#[derive(Debug, Clone)]
pub struct MinLimitSpec {
    pub gamma: Variogram,
    /// Index of regular variation of `|X₁₁|` at 0.
    pub index: f64,
    /// Radial law of `Z` in `k` dimensions, i.e. `𝒦H_k`.
    pub radial: RadialLaw,
    pub theta: Vec<f64>,
}

impl MinLimitSpec {
    pub fn new(gamma: Variogram, index: f64, radial: RadialLaw, theta: Option<Vec<f64>>) -> Result<Self> {
        check_index(index)?;
        gamma.check_valid()?;
        radial.validate()?;
        let theta = theta.unwrap_or_else(|| gamma.default_theta());
        gamma.to_covariance(&theta)?;
        Ok(Self { gamma, index, radial, theta })
    }

    /// Gaussian arrays: `Z` is Gaussian.
    pub fn gaussian(gamma: Variogram, index: f64) -> Result<Self> {
        let k = gamma.k() as f64;
        Self::new(gamma, index, RadialLaw::chi(k), None)
    }

    /// `Z` built from the radius `R_{k+1}` of a `(k+1)`-dimensional
    /// extension of the array.
    pub fn from_extension(gamma: Variogram, index: f64, next: &RadialLaw) -> Result<Self> {
        Self::new(gamma, index, kh_law(next)?, None)
    }

    /// As [`from_extension`](Self::from_extension) for radial laws whose
    /// `(k+1)`-dimensional extension is canonical (`χ_k`, `S·χ_k`).
    pub fn for_array_radial(gamma: Variogram, index: f64, h: &RadialLaw) -> Result<Self> {
        let k = gamma.k() as f64;
        let next = match h {
            RadialLaw::Chi { k: nu } if *nu == k => RadialLaw::chi(k + 1.0),
            RadialLaw::ScaledChi { scale, k: nu } if *nu == k => RadialLaw::scaled_chi(scale.clone(), k + 1.0),
            other => {
                return Err(Error::UnsupportedLaw(format!(
                    "no canonical (k+1)-dimensional extension of {}",
                    other.name()
                )))
            }
        };
        Self::from_extension(gamma, index, &next)
    }

    pub fn k(&self) -> usize {
        self.gamma.k()
    }
}

/// Evaluator of `P{𝓛 > x}` for a fixed [`MinLimitSpec`].
pub struct MinEvaluator {
    spec: MinLimitSpec,
    budget: Budget,
    bank: Bank,
    sigma: Vec<f64>,
    coord: RadialLaw,
}

impl MinEvaluator {
    pub fn new(spec: MinLimitSpec, budget: Budget) -> Result<Self> {
        budget.validate()?;
        let k = spec.k();
        let cov = spec.gamma.to_covariance(&spec.theta)?;
        let bank = elliptical_bank(k, &cov, &spec.radial, &budget, 1)?;
        let coord = coordinate_law(&spec.radial, k)?;
        let sigma = spec.theta.iter().map(|t| t.sqrt()).collect();
        Ok(Self {
            spec,
            budget,
            bank,
            sigma,
            coord,
        })
    }

    pub fn survival(&self, x: &[f64]) -> Result<LimitEstimate> {
        let k = self.spec.k();
        check_positive(x, k)?;
        let g = self.spec.index;
        let xmax = x.iter().cloned().fold(0.0, f64::max);
        let mass: f64 = x.iter().map(|v| 2.0 * v.powf(g)).sum();
        // |y| > Y needs some |Z_i| > Y^{1/γ} − x_i; each coordinate adds at most 2x_i^γ
        let q = self.coord.isf(self.budget.eps / (2.0 * k as f64 * mass.max(1.0)));
        let smax = self.sigma.iter().cloned().fold(0.0, f64::max);
        let y = (xmax + smax * q).powf(g);
        let trunc = x
            .iter()
            .zip(&self.sigma)
            .map(|(xi, s)| 2.0 * xi.powf(g) * 2.0 * self.coord.sf((y.powf(1.0 / g) - xi) / s).min(0.5))
            .sum();
        let p = Problem {
            measure: Measure::Lebesgue,
            window: (-y, y),
            trunc,
            control_mean: None,
        };
        let sums = integrate(&self.bank, &p, &self.budget, |z, iv| {
            for i in 0..k {
                iv.push((power_sign(-x[i] - z[i], g), power_sign(x[i] - z[i], g)));
            }
            0.0
        });
        Ok(LimitEstimate::from_exponent(&sums.finish()))
    }
}

/// `P{𝓛 > x} = exp(−∫ P{∃i: |sign(y)|y|^{1/γ} + Z_i| ≤ x_i} dy)`.
pub fn min_limit_survival(spec: &MinLimitSpec, x: &[f64], budget: &Budget) -> Result<LimitEstimate> {
    MinEvaluator::new(spec.clone(), *budget)?.survival(x)
}

/// Which index of a subset `K` anchors its inclusion–exclusion term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnchorRule {
    #[default]
    Smallest,
    Largest,
}

/// Inclusion–exclusion form of the min-limit, built from the radial chain
/// of the array.
#[derive(Debug, Clone)]
pub struct IeSpec {
    pub gamma: Variogram,
    pub index: f64,
    /// Radial law `H_k` of the array.
    pub radial: RadialLaw,
    pub anchor: AnchorRule,
}

/// Largest dimension accepted by the inclusion–exclusion evaluator.
pub const IE_MAX_DIM: usize = 6;

impl IeSpec {
    pub fn new(gamma: Variogram, index: f64, radial: RadialLaw) -> Result<Self> {
        check_index(index)?;
        if gamma.k() > IE_MAX_DIM {
            return Err(Error::TooLarge(format!(
                "inclusion-exclusion enumerates 2^k subsets; k = {} exceeds {IE_MAX_DIM}",
                gamma.k()
            )));
        }
        gamma.check_valid()?;
        radial.validate()?;
        Ok(Self {
            gamma,
            index,
            radial,
            anchor: AnchorRule::Smallest,
        })
    }

    pub fn gaussian(gamma: Variogram, index: f64) -> Result<Self> {
        let k = gamma.k() as f64;
        Self::new(gamma, index, RadialLaw::chi(k))
    }

    pub fn with_anchor(mut self, anchor: AnchorRule) -> Self {
        self.anchor = anchor;
        self
    }
}

struct SubsetTerm {
    anchor: usize,
    others: Vec<usize>,
    bank: Bank,
}

/// Evaluator of the inclusion–exclusion formula; one bank per subset.
pub struct IeEvaluator {
    spec: IeSpec,
    budget: Budget,
    terms: Vec<SubsetTerm>,
}

impl IeEvaluator {
    pub fn new(spec: IeSpec, budget: Budget) -> Result<Self> {
        budget.validate()?;
        let k = spec.gamma.k();
        let mut terms = Vec::new();
        for mask in 1u64..(1 << k) {
            let members: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).collect();
            let m = members.len();
            if m < 2 {
                continue;
            }
            let anchor = match spec.anchor {
                AnchorRule::Smallest => members[0],
                AnchorRule::Largest => members[m - 1],
            };
            let others: Vec<usize> = members.iter().cloned().filter(|&i| i != anchor).collect();
            let g = &spec.gamma;
            let cov = nalgebra::DMatrix::from_fn(m - 1, m - 1, |a, b| {
                let (i, l) = (others[a], others[b]);
                0.5 * (g.get(i, anchor) + g.get(l, anchor) - g.get(i, l))
            });
            let hm = if m == k { spec.radial.clone() } else { marginal_radial(&spec.radial, k, m)? };
            let radial = kh_law(&hm)?;
            let bank = elliptical_bank(m - 1, &cov, &radial, &budget, mask)?;
            terms.push(SubsetTerm { anchor, others, bank });
        }
        Ok(Self { spec, budget, terms })
    }

    pub fn survival(&self, x: &[f64]) -> Result<LimitEstimate> {
        let k = self.spec.gamma.k();
        check_positive(x, k)?;
        let g = self.spec.index;
        let nb = self.budget.batches;
        // −log P = Σ_K (−1)^{|K|+1} T_K, singletons T_{j} = 2x_j^γ
        let single: f64 = x.iter().map(|v| 2.0 * v.powf(g)).sum();
        let mut parts = vec![(
            1.0,
            BatchSums {
                means: vec![single; nb],
                trunc: 0.0,
                nodes: 0,
                paths: 0,
            },
        )];
        for t in &self.terms {
            let h = x[t.anchor].powf(g);
            let p = Problem {
                measure: Measure::Lebesgue,
                window: (-h, h),
                trunc: 0.0,
                control_mean: None,
            };
            let sums = integrate(&t.bank, &p, &self.budget, |z, iv| {
                let (mut lo, mut hi) = (-h, h);
                for (a, &i) in t.others.iter().enumerate() {
                    lo = lo.max(power_sign(-x[i] - z[a], g));
                    hi = hi.min(power_sign(x[i] - z[a], g));
                }
                iv.push((lo, hi));
                0.0
            });
            let sign = if t.others.len() % 2 == 1 { -1.0 } else { 1.0 };
            parts.push((sign, sums));
        }
        Ok(LimitEstimate::from_exponent(&BatchSums::combine(&parts)))
    }
}

/// Inclusion–exclusion evaluation of `P{𝓛 > x}` (`k ≤ 6`).
pub fn min_limit_survival_ie(spec: &IeSpec, x: &[f64], budget: &Budget) -> Result<LimitEstimate> {
    IeEvaluator::new(spec.clone(), *budget)?.survival(x)
}

/// Min-limit of spherical processes `S(t)·Y(t)` observed on a grid.
#[derive(Debug, Clone)]
pub struct PkSpec {
    pub gamma: Variogram,
    pub grid: Vec<f64>,
    pub scale: ScaleMode,
}

impl PkSpec {
    /// Grid defaults to `0, 1, …, k−1` (only used by path-valued scales).
    pub fn new(gamma: Variogram, scale: ScaleMode) -> Result<Self> {
        let grid = (0..gamma.k()).map(|i| i as f64).collect();
        Self::with_grid(gamma, grid, scale)
    }

    pub fn with_grid(gamma: Variogram, grid: Vec<f64>, scale: ScaleMode) -> Result<Self> {
        if grid.len() != gamma.k() {
            return Err(Error::InvalidDimension("grid and variogram sizes differ".into()));
        }
        gamma.check_valid()?;
        if let ScaleMode::Scalar(s) | ScaleMode::Independent(s) = &scale {
            s.validate()?;
        }
        let kappa = scale.lower_bound();
        if !(kappa > 0.0) {
            let moment = match &scale {
                ScaleMode::Scalar(s) | ScaleMode::Independent(s) => s.rv_index_at_zero().is_some_and(|g| g > 1.0),
                ScaleMode::Path(_) => false,
            };
            if !moment {
                return Err(Error::UnsupportedLaw(
                    "scale needs a positive lower bound or E{S^(-1-e)} < inf".into(),
                ));
            }
        }
        Ok(Self { gamma, grid, scale })
    }
}

/// Evaluator of `P{ζ(t_j) > x_j ∀j}`.
pub struct PkEvaluator {
    spec: PkSpec,
    budget: Budget,
    bank: Bank,
    sigma: Vec<f64>,
}

impl PkEvaluator {
    pub fn new(spec: PkSpec, budget: Budget) -> Result<Self> {
        budget.validate()?;
        let k = spec.gamma.k();
        let theta = spec.gamma.default_theta();
        let cov = spec.gamma.to_covariance(&theta)?;
        let factor = psd_factor(&cov)?;
        let (scale, grid) = (spec.scale.clone(), spec.grid.clone());
        let bank = Bank::draw(budget.paths, 2 * k, budget.key().substream(2), move |rng, row| {
            let mut n = vec![0.0; k];
            fill_standard_normal(rng, &mut n);
            let (z, s) = row.split_at_mut(k);
            factor.apply(&n, z);
            scale.sample_path(rng, &grid, s);
        });
        Ok(Self {
            spec,
            budget,
            bank,
            sigma: theta.iter().map(|t| t.sqrt()).collect(),
        })
    }

    pub fn survival(&self, x: &[f64]) -> Result<LimitEstimate> {
        let k = self.spec.gamma.k();
        check_positive(x, k)?;
        let (window, trunc) = self.window(x);
        let p = Problem {
            measure: Measure::Lebesgue,
            window,
            trunc,
            control_mean: None,
        };
        let sums = integrate(&self.bank, &p, &self.budget, |r, iv| {
            let (z, s) = r.split_at(k);
            for i in 0..k {
                let h = x[i] / s[i];
                iv.push((-z[i] - h, -z[i] + h));
            }
            0.0
        });
        Ok(LimitEstimate::from_exponent(&sums.finish()))
    }

    /// Window `|y| ≤ max x_i/κ + q` and a bound on the mass outside it.
    fn window(&self, x: &[f64]) -> ((f64, f64), f64) {
        let k = x.len() as f64;
        let eps = self.budget.eps;
        let xmax = x.iter().cloned().fold(0.0, f64::max);
        let smax = self.sigma.iter().cloned().fold(0.0, f64::max);
        let kappa = self.spec.scale.lower_bound();
        let (floor, inv_mean, low_mass) = if kappa > 0.0 {
            (kappa, 1.0 / kappa, 0.0)
        } else {
            let s = match &self.spec.scale {
                ScaleMode::Scalar(s) | ScaleMode::Independent(s) => s,
                ScaleMode::Path(_) => unreachable!("checked at construction"),
            };
            let floor = s.quantile(eps / (4.0 * k));
            let inv = s.mean_inverse();
            let low = s.expect(|v| if v < floor { 1.0 / v } else { 0.0 });
            (floor, inv, low)
        };
        let total = 2.0 * x.iter().sum::<f64>() * inv_mean;
        let q = norm_isf(eps / (4.0 * k * total.max(1.0)));
        let y = xmax / floor + smax * q;
        let trunc = x
            .iter()
            .zip(&self.sigma)
            .map(|(xi, s)| 2.0 * xi * (inv_mean * 2.0 * norm_sf((y - xi / floor) / s) + low_mass))
            .sum();
        ((-y, y), trunc)
    }
}

/// `P{ζ(t_j) > x_j ∀j} = exp(−∫ P{∃i: S_i|y + Z_i| ≤ x_i} dy)`.
pub fn pk_limit_survival(spec: &PkSpec, x: &[f64], budget: &Budget) -> Result<LimitEstimate> {
    PkEvaluator::new(spec.clone(), *budget)?.survival(x)
}
