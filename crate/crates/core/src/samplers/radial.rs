use std::sync::{Arc, OnceLock};

use rand::Rng;
use rand_distr::{ChiSquared, Distribution};
use serde::{Deserialize, Serialize};

use super::scale::ScaleLaw;
use super::sphere::beta_dist;
use crate::error::{invalid, Error, Result};
use crate::numerics::special::{beta_reg, gamma_isf, gamma_lr, gamma_quantile, gamma_ur, inv_beta_reg, ln_beta, ln_gamma};
use crate::numerics::{gauss_legendre, quad, solve_monotone, Pchip, RootOptions};

/// Max-domain-of-attraction class of a radial law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum MdaClass {
    Gumbel,
    Weibull { alpha: f64 },
    None,
}

/// Law of a positive radius `R`.
///
/// Built-in families cover the chi laws of Gaussian vectors, point masses,
/// square roots of beta variables (including the power laws `H(r) = r^γ` on
/// `(0,1)`) and scale mixtures `S·χ_k`. `Projected` is the law of
/// `R_from·√B` with `B ~ Beta(to/2, (from−to)/2)`, the radius of a
/// `to`-dimensional sub-vector. `Tabulated` holds a table-backed law
/// produced by [`kh_law`].
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum RadialLaw {
    Chi {
        k: f64,
    },
    PointMass {
        c: f64,
    },
    SqrtBeta {
        a: f64,
        b: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    ScaledChi {
        scale: ScaleLaw,
        k: f64,
    },
    Projected {
        base: Box<RadialLaw>,
        from: usize,
        to: usize,
        #[serde(skip)]
        cache: Arc<OnceLock<Vec<f64>>>,
    },
    #[serde(skip)]
    Tabulated(Arc<TabulatedLaw>),
}

fn one() -> f64 {
    1.0
}

const MIXTURE_PANELS: usize = 64;
const MIXTURE_ORDER: usize = 8;

impl RadialLaw {
    pub fn chi(k: f64) -> Self {
        RadialLaw::Chi { k }
    }

    pub fn point_mass(c: f64) -> Self {
        RadialLaw::PointMass { c }
    }

    /// `H(r) = r^γ` on `(0, 1)`.
    pub fn power(gamma: f64) -> Self {
        RadialLaw::SqrtBeta { a: gamma / 2.0, b: 1.0, scale: 1.0 }
    }

    /// `R = √B` with `B ~ Beta(a, b)`.
    pub fn sqrt_beta(a: f64, b: f64) -> Self {
        RadialLaw::SqrtBeta { a, b, scale: 1.0 }
    }

    pub fn scaled_chi(scale: ScaleLaw, k: f64) -> Self {
        RadialLaw::ScaledChi { scale, k }
    }

    fn projected(base: RadialLaw, from: usize, to: usize) -> Self {
        RadialLaw::Projected {
            base: Box::new(base),
            from,
            to,
            cache: Arc::new(OnceLock::new()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            RadialLaw::Chi { k } if !(*k > 0.0 && k.is_finite()) => Err(invalid("chi degrees of freedom must be positive")),
            RadialLaw::PointMass { c } if !(*c > 0.0 && c.is_finite()) => Err(invalid("point mass location must be positive")),
            RadialLaw::SqrtBeta { a, b, scale } if !(*a > 0.0 && *b > 0.0 && *scale > 0.0 && scale.is_finite()) => {
                Err(invalid("sqrt-beta law needs a, b, scale > 0"))
            }
            RadialLaw::ScaledChi { scale, k } => {
                if !(*k > 0.0) {
                    return Err(invalid("chi degrees of freedom must be positive"));
                }
                scale.validate()
            }
            RadialLaw::Projected { base, from, to, .. } => {
                if *to == 0 || to >= from {
                    return Err(Error::InvalidDimension(format!("cannot project dimension {from} to {to}")));
                }
                base.validate()
            }
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> String {
        match self {
            RadialLaw::Chi { k } => format!("chi({k})"),
            RadialLaw::PointMass { c } => format!("point_mass({c})"),
            RadialLaw::SqrtBeta { a, b, scale } => format!("sqrt_beta({a},{b})*{scale}"),
            RadialLaw::ScaledChi { k, .. } => format!("scaled_chi({k})"),
            RadialLaw::Projected { base, from, to, .. } => format!("projected({},{from}->{to})", base.name()),
            RadialLaw::Tabulated(t) => t.name.clone(),
        }
    }

    pub fn upper_endpoint(&self) -> f64 {
        match self {
            RadialLaw::Chi { .. } => f64::INFINITY,
            RadialLaw::PointMass { c } => *c,
            RadialLaw::SqrtBeta { scale, .. } => *scale,
            RadialLaw::ScaledChi { .. } => f64::INFINITY,
            RadialLaw::Projected { base, .. } => base.upper_endpoint(),
            RadialLaw::Tabulated(t) => t.upper_endpoint,
        }
    }

    /// Index γ of regular variation of `H` at 0; `None` when unknown and
    /// infinite when `R` is bounded away from 0.
    pub fn rv_index_at_zero(&self) -> Option<f64> {
        match self {
            RadialLaw::Chi { k } => Some(*k),
            RadialLaw::PointMass { .. } => Some(f64::INFINITY),
            RadialLaw::SqrtBeta { a, .. } => Some(2.0 * a),
            RadialLaw::ScaledChi { scale, k } => scale.rv_index_at_zero().map(|g| g.min(*k)),
            RadialLaw::Projected { base, to, .. } => base.rv_index_at_zero().map(|g| g.min(*to as f64)),
            RadialLaw::Tabulated(t) => t.rv_index_at_zero,
        }
    }

    pub fn mda_class(&self) -> MdaClass {
        match self {
            RadialLaw::Chi { .. } => MdaClass::Gumbel,
            RadialLaw::PointMass { .. } => MdaClass::None,
            RadialLaw::SqrtBeta { b, .. } => MdaClass::Weibull { alpha: *b },
            RadialLaw::ScaledChi { scale, .. } => match scale {
                ScaleLaw::Custom(c) if c.upper_endpoint.is_infinite() => MdaClass::None,
                _ => MdaClass::Gumbel,
            },
            RadialLaw::Projected { base, from, to, .. } => {
                let extra = (*from - *to) as f64 / 2.0;
                match base.mda_class() {
                    MdaClass::Gumbel => MdaClass::Gumbel,
                    MdaClass::Weibull { alpha } => MdaClass::Weibull { alpha: alpha + extra },
                    MdaClass::None => MdaClass::Weibull { alpha: extra },
                }
            }
            RadialLaw::Tabulated(t) => t.mda,
        }
    }

    /// `E{1/R}`, possibly infinite.
    pub fn mean_inverse(&self) -> f64 {
        match self {
            RadialLaw::Chi { k } => {
                if *k <= 1.0 {
                    f64::INFINITY
                } else {
                    (ln_gamma((k - 1.0) / 2.0) - ln_gamma(k / 2.0)).exp() / std::f64::consts::SQRT_2
                }
            }
            RadialLaw::PointMass { c } => 1.0 / c,
            RadialLaw::SqrtBeta { a, b, scale } => {
                if *a <= 0.5 {
                    f64::INFINITY
                } else {
                    (ln_beta(a - 0.5, *b) - ln_beta(*a, *b)).exp() / scale
                }
            }
            RadialLaw::ScaledChi { scale, k } => scale.mean_inverse() * RadialLaw::chi(*k).mean_inverse(),
            RadialLaw::Projected { base, from, to, .. } => {
                if *to <= 1 {
                    return f64::INFINITY;
                }
                let (p, q) = (*to as f64 / 2.0, (*from - *to) as f64 / 2.0);
                base.mean_inverse() * (ln_beta(p - 0.5, q) - ln_beta(p, q)).exp()
            }
            RadialLaw::Tabulated(t) => t.mean_inverse,
        }
    }

    /// Density of `R` when it is cheap to evaluate.
    pub fn density(&self, r: f64) -> Option<f64> {
        match self {
            RadialLaw::Chi { k } => Some(chi_pdf(*k, r)),
            RadialLaw::SqrtBeta { a, b, scale } => {
                let x = r / scale;
                Some(if x <= 0.0 || x >= 1.0 {
                    0.0
                } else {
                    let ln = (2.0 * x / scale).ln() + (a - 1.0) * (x * x).ln() + (b - 1.0) * ((1.0 - x) * (1.0 + x)).ln()
                        - ln_beta(*a, *b);
                    ln.exp()
                })
            }
            RadialLaw::Tabulated(t) => Some(t.density(r)),
            _ => None,
        }
    }

    pub fn cdf(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        match self {
            RadialLaw::Chi { k } => gamma_lr(k / 2.0, r * r / 2.0),
            RadialLaw::PointMass { c } => {
                if r >= *c {
                    1.0
                } else {
                    0.0
                }
            }
            RadialLaw::SqrtBeta { a, b, scale } => beta_reg(*a, *b, (r / scale).powi(2)),
            RadialLaw::ScaledChi { scale, k } => scale.expect(|s| gamma_lr(k / 2.0, r * r / (2.0 * s * s))),
            RadialLaw::Projected { .. } => self.projected_prob(r, false),
            RadialLaw::Tabulated(t) => t.cdf(r),
        }
    }

    pub fn sf(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 1.0;
        }
        match self {
            RadialLaw::Chi { k } => gamma_ur(k / 2.0, r * r / 2.0),
            RadialLaw::SqrtBeta { a, b, scale } => {
                let x = r / scale;
                if x >= 1.0 {
                    0.0
                } else {
                    beta_reg(*b, *a, (1.0 - x) * (1.0 + x))
                }
            }
            RadialLaw::ScaledChi { scale, k } => scale.expect(|s| gamma_ur(k / 2.0, r * r / (2.0 * s * s))),
            RadialLaw::Projected { .. } => self.projected_prob(r, true),
            _ => 1.0 - self.cdf(r),
        }
    }

    pub fn quantile(&self, p: f64) -> f64 {
        if p <= 0.0 {
            return 0.0;
        }
        if p >= 1.0 {
            return self.upper_endpoint();
        }
        match self {
            RadialLaw::Chi { k } => (2.0 * gamma_quantile(k / 2.0, p)).sqrt(),
            RadialLaw::PointMass { c } => *c,
            RadialLaw::SqrtBeta { a, b, scale } => scale * inv_beta_reg(*a, *b, p).sqrt(),
            RadialLaw::Tabulated(t) => t.quantile(p),
            _ => {
                if p > 0.5 {
                    return self.isf(1.0 - p);
                }
                let guess = self.median_guess();
                solve_monotone(|x| self.cdf(x), p, guess, 0.0, self.upper_endpoint(), RootOptions::default())
                    .unwrap_or(guess)
            }
        }
    }

    /// Upper quantile: `r` with `P{R > r} = q`.
    pub fn isf(&self, q: f64) -> f64 {
        if q >= 1.0 {
            return 0.0;
        }
        if q <= 0.0 {
            return self.upper_endpoint();
        }
        match self {
            RadialLaw::Chi { k } => (2.0 * gamma_isf(k / 2.0, q)).sqrt(),
            RadialLaw::SqrtBeta { a, b, scale } => {
                let y = inv_beta_reg(*b, *a, q);
                scale * (1.0 - y).max(0.0).sqrt()
            }
            RadialLaw::PointMass { c } => *c,
            RadialLaw::Tabulated(t) => t.quantile(1.0 - q),
            _ => {
                if q >= 0.5 {
                    return self.quantile(1.0 - q);
                }
                let guess = self.median_guess();
                solve_monotone(|x| -self.sf(x), -q, guess, 0.0, self.upper_endpoint(), RootOptions::default())
                    .unwrap_or(guess)
            }
        }
    }

    fn median_guess(&self) -> f64 {
        match self {
            RadialLaw::ScaledChi { scale, k } => scale.quantile(0.5) * k.sqrt(),
            RadialLaw::Projected { base, from, to, .. } => base.quantile(0.5) * (*to as f64 / *from as f64).sqrt(),
            _ => 1.0,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            RadialLaw::Chi { k } => ChiSquared::new(*k).expect("validated").sample(rng).sqrt(),
            RadialLaw::PointMass { c } => *c,
            RadialLaw::SqrtBeta { a, b, scale } => scale * beta_dist(*a, *b).expect("validated").sample(rng).sqrt(),
            RadialLaw::ScaledChi { scale, k } => scale.sample(rng) * ChiSquared::new(*k).expect("validated").sample(rng).sqrt(),
            RadialLaw::Projected { base, from, to, .. } => {
                let b = beta_dist(*to as f64 / 2.0, (*from - *to) as f64 / 2.0).expect("validated");
                base.sample(rng) * b.sample(rng).sqrt()
            }
            RadialLaw::Tabulated(t) => t.quantile(rng.random()),
        }
    }

    /// `P{R_from √B ≤ z}` (or `>` when `upper`) for the `Projected` variant.
    fn projected_prob(&self, z: f64, upper: bool) -> f64 {
        let RadialLaw::Projected { base, from, to, cache } = self else {
            unreachable!()
        };
        let (p, q) = (*to as f64 / 2.0, (*from - *to) as f64 / 2.0);
        let omega = base.upper_endpoint();
        if z >= omega {
            return if upper { 0.0 } else { 1.0 };
        }
        // Only radii above z contribute a fractional probability.
        let inner = |r: f64| {
            let i = beta_reg(p, q, (z / r).powi(2));
            if upper {
                1.0 - i
            } else {
                i
            }
        };
        let below = if upper { 0.0 } else { base.cdf(z) };
        if base.density(z.max(1e-300)).is_some() {
            let hi = if omega.is_finite() { omega } else { base.isf(1e-17).max(2.0 * z) };
            below + integrate_above(z, hi, omega.is_finite(), |r| inner(r) * base.density(r).unwrap())
        } else {
            let qs = cache.get_or_init(|| {
                let (u, _) = quad::composite(0.0, 1.0, 256, 8);
                u.iter().map(|&u| base.quantile(u)).collect()
            });
            let (_, w) = quad::composite(0.0, 1.0, 256, 8);
            qs.iter()
                .zip(&w)
                .map(|(&r, &w)| {
                    let pr = if r <= z {
                        if upper {
                            0.0
                        } else {
                            1.0
                        }
                    } else {
                        inner(r)
                    };
                    w * pr
                })
                .sum()
        }
    }
}

/// `∫_z^hi f(r) dr` for an integrand that may be singular at `hi` (finite
/// endpoint) or decay slowly; uses log-distance substitutions at both ends.
fn integrate_above(z: f64, hi: f64, finite_end: bool, f: impl Fn(f64) -> f64) -> f64 {
    if hi <= z {
        return 0.0;
    }
    let span = hi - z;
    let eps = span * 1e-14;
    if !finite_end {
        return quad::integrate(eps.ln(), span.ln(), MIXTURE_PANELS, MIXTURE_ORDER, |t| {
            let d = t.exp();
            f(z + d) * d
        });
    }
    let mid = 0.5 * span;
    let left = quad::integrate(eps.ln(), mid.ln(), MIXTURE_PANELS / 2, MIXTURE_ORDER, |t| {
        let d = t.exp();
        f(z + d) * d
    });
    let right = quad::integrate(eps.ln(), mid.ln(), MIXTURE_PANELS / 2, MIXTURE_ORDER, |t| {
        let d = t.exp();
        f(hi - d) * d
    });
    left + right
}

fn chi_pdf(k: f64, r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    ((k - 1.0) * r.ln() - 0.5 * r * r - (k / 2.0 - 1.0) * std::f64::consts::LN_2 - ln_gamma(k / 2.0)).exp()
}

/// Table-backed radial law with monotone cubic interpolation of the CDF and
/// of its inverse. Below the first node the CDF is extended as a power law.
#[derive(Debug, Clone)]
pub struct TabulatedLaw {
    pub name: String,
    forward: Pchip,
    inverse: Pchip,
    lower_power: f64,
    pub upper_endpoint: f64,
    pub rv_index_at_zero: Option<f64>,
    pub mda: MdaClass,
    pub mean_inverse: f64,
}

/// Number of table nodes used for derived radial laws.
pub const TABLE_NODES: usize = 4096;

impl TabulatedLaw {
    /// Builds the law `𝒦H` with CDF `∫_0^z r⁻¹ dH(r) / E{1/R}` from `H`.
    ///
    /// The integral is evaluated as `H(z)/z + ∫_0^z H(r)/r² dr`, which
    /// needs only the CDF of `H`.
    pub fn kh_of(h: &RadialLaw) -> Result<TabulatedLaw> {
        let mi = h.mean_inverse();
        if !mi.is_finite() {
            return Err(Error::UnsupportedLaw(format!("E{{1/R}} is infinite for {}", h.name())));
        }
        let omega = h.upper_endpoint();
        let r_lo = h.quantile(1e-14).max(1e-300);
        let r_hi = if omega.is_finite() { omega } else { h.isf(1e-16) };
        if !(r_hi > r_lo) {
            return Err(Error::UnsupportedLaw(format!("degenerate support for {}", h.name())));
        }
        let n = TABLE_NODES;
        let xs: Vec<f64> = if omega.is_finite() && r_lo < 0.5 * omega {
            // log-spaced near 0, log-spaced in the distance to ω near ω
            let n1 = 3 * n / 4;
            let n2 = n - n1;
            let mid = 0.5 * omega;
            let (llo, lmid) = (r_lo.ln(), mid.ln());
            let mut v: Vec<f64> = (0..n1).map(|i| (llo + (lmid - llo) * i as f64 / n1 as f64).exp()).collect();
            let (dhi, dlo) = (mid.ln(), (omega * 1e-13).ln());
            v.extend((0..n2 - 1).map(|i| omega - (dhi + (dlo - dhi) * i as f64 / (n2 - 2) as f64).exp()));
            v.push(omega);
            v
        } else {
            let (llo, lhi) = (r_lo.ln(), r_hi.ln());
            (0..n).map(|i| (llo + (lhi - llo) * i as f64 / (n - 1) as f64).exp()).collect()
        };
        let h_lo = h.cdf(r_lo);
        let g_local = match h.rv_index_at_zero() {
            Some(g) if g.is_finite() => g,
            _ => ((h.cdf(2.0 * r_lo) / h_lo).ln() / std::f64::consts::LN_2).max(1.0 + 1e-6),
        };
        if g_local <= 1.0 {
            return Err(Error::UnsupportedLaw(format!("E{{1/R}} is infinite for {}", h.name())));
        }
        let gl = gauss_legendre(4);
        let mut integral = h_lo / (r_lo * (g_local - 1.0));
        let mut j = Vec::with_capacity(n);
        j.push(h_lo / r_lo + integral);
        for i in 1..n {
            let (a, b) = (xs[i - 1].ln(), xs[i].ln());
            integral += gl.integrate(a, b, |t| h.cdf(t.exp()) * (-t).exp());
            let hz = if i == n - 1 && omega.is_finite() { 1.0 } else { h.cdf(xs[i]) };
            j.push(hz / xs[i] + integral);
        }
        let total = *j.last().unwrap() + if omega.is_finite() { 0.0 } else { h.sf(r_hi) / r_hi };
        let mut fs: Vec<f64> = j.iter().map(|v| (v / total).min(1.0)).collect();
        for i in 1..n {
            if fs[i] < fs[i - 1] {
                fs[i] = fs[i - 1];
            }
        }
        let lower_power = g_local - 1.0;
        let mean_inverse = {
            let mut s = fs[0] * lower_power / ((lower_power - 1.0) * xs[0]);
            if lower_power <= 1.0 {
                s = f64::INFINITY;
            }
            for i in 1..n {
                s += (fs[i] - fs[i - 1]) * 2.0 / (xs[i] + xs[i - 1]);
            }
            s
        };
        Ok(Self::from_table(
            format!("kh({})", h.name()),
            xs,
            fs,
            lower_power,
            omega,
            h.rv_index_at_zero().map(|g| g - 1.0),
            h.mda_class(),
            mean_inverse,
        ))
    }

    #[allow(clippy::too_many_arguments)]
    fn from_table(
        name: String,
        xs: Vec<f64>,
        fs: Vec<f64>,
        lower_power: f64,
        upper_endpoint: f64,
        rv_index_at_zero: Option<f64>,
        mda: MdaClass,
        mean_inverse: f64,
    ) -> Self {
        let mut ix = Vec::with_capacity(xs.len());
        let mut iy = Vec::with_capacity(xs.len());
        for (x, f) in xs.iter().zip(&fs) {
            if ix.last().is_none_or(|last: &f64| *f > *last) {
                ix.push(*f);
                iy.push(*x);
            }
        }
        TabulatedLaw {
            name,
            forward: Pchip::new(xs, fs),
            inverse: Pchip::new(ix, iy),
            lower_power,
            upper_endpoint,
            rv_index_at_zero,
            mda,
            mean_inverse,
        }
    }

    fn x0(&self) -> f64 {
        self.forward.xs()[0]
    }

    fn f0(&self) -> f64 {
        self.forward.ys()[0]
    }

    pub fn cdf(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        if r < self.x0() {
            return self.f0() * (r / self.x0()).powf(self.lower_power);
        }
        self.forward.eval(r).clamp(0.0, 1.0)
    }

    pub fn density(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        if r < self.x0() {
            return self.f0() * self.lower_power / r * (r / self.x0()).powf(self.lower_power);
        }
        self.forward.derivative(r).max(0.0)
    }

    pub fn quantile(&self, p: f64) -> f64 {
        if p <= 0.0 {
            return 0.0;
        }
        let (x0, f0) = (self.x0(), self.f0());
        if p <= f0 {
            return x0 * (p / f0).powf(1.0 / self.lower_power);
        }
        let xs = self.forward.xs();
        let (lo, hi) = (xs[0], xs[xs.len() - 1]);
        let mut x = self.inverse.eval(p).clamp(lo, hi);
        // polish against the forward interpolant
        for _ in 0..4 {
            let r = self.forward.eval(x) - p;
            let d = self.forward.derivative(x);
            if r.abs() < 1e-13 || d <= 0.0 {
                break;
            }
            x = (x - r / d).clamp(lo, hi);
        }
        x
    }
}

/// Law of the radius `R_m` of an `m`-dimensional sub-vector of `R_k U`,
/// i.e. `R_m² = R_k² B` with `B ~ Beta(m/2, (k−m)/2)`.
pub fn marginal_radial(h: &RadialLaw, k: usize, m: usize) -> Result<RadialLaw> {
    if m == 0 || m >= k {
        return Err(Error::InvalidDimension(format!(
            "target dimension {m} must satisfy 1 <= m < k = {k}"
        )));
    }
    h.validate()?;
    let (mf, kf) = (m as f64, k as f64);
    Ok(match h {
        RadialLaw::Chi { k: nu } if *nu == kf => RadialLaw::chi(mf),
        RadialLaw::PointMass { c } => RadialLaw::SqrtBeta {
            a: mf / 2.0,
            b: (kf - mf) / 2.0,
            scale: *c,
        },
        RadialLaw::SqrtBeta { a, b, scale } if *a == kf / 2.0 => RadialLaw::SqrtBeta {
            a: mf / 2.0,
            b: b + (kf - mf) / 2.0,
            scale: *scale,
        },
        RadialLaw::ScaledChi { scale, k: nu } if *nu == kf => RadialLaw::scaled_chi(scale.clone(), mf),
        RadialLaw::Projected { base, from, to, .. } if *to == k => RadialLaw::projected((**base).clone(), *from, m),
        other => RadialLaw::projected(other.clone(), k, m),
    })
}

/// The law `𝒦H` with `d𝒦H(r) = r⁻¹ dH(r) / E{1/R}`.
///
/// Closed forms are used for the chi, point-mass and sqrt-beta families and
/// for `S·χ_k` when the tilted scale stays in its family; all other laws are
/// tabulated on [`TABLE_NODES`] nodes.
pub fn kh_law(h: &RadialLaw) -> Result<RadialLaw> {
    h.validate()?;
    if !h.mean_inverse().is_finite() {
        return Err(Error::UnsupportedLaw(format!(
            "E{{1/R}} is infinite for {}; the tilted law does not exist",
            h.name()
        )));
    }
    Ok(match h {
        RadialLaw::Chi { k } => RadialLaw::chi(k - 1.0),
        RadialLaw::PointMass { c } => RadialLaw::point_mass(*c),
        RadialLaw::SqrtBeta { a, b, scale } => RadialLaw::SqrtBeta {
            a: a - 0.5,
            b: *b,
            scale: *scale,
        },
        RadialLaw::ScaledChi { scale, k } if scale.tilt_inverse().is_some() => {
            RadialLaw::scaled_chi(scale.tilt_inverse().unwrap(), k - 1.0)
        }
        other => RadialLaw::Tabulated(Arc::new(TabulatedLaw::kh_of(other)?)),
    })
}
