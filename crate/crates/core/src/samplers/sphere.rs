use rand::Rng;
use rand_distr::{Beta, Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};

#[inline]
pub fn fill_standard_normal<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    for v in out.iter_mut() {
        *v = rng.sample(StandardNormal);
    }
}

/// Uniform draw from the unit sphere in ℝᵏ, written into `out` (length k ≥ 1).
#[inline]
pub fn sample_unit_sphere_into<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    loop {
        fill_standard_normal(rng, out);
        let norm = out.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 && norm.is_finite() {
            out.iter_mut().for_each(|v| *v /= norm);
            return;
        }
    }
}

/// Uniform draw from the unit sphere in ℝᵏ.
pub fn sample_unit_sphere<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::InvalidDimension("sphere dimension must be at least 1".into()));
    }
    let mut u = vec![0.0; k];
    sample_unit_sphere_into(rng, &mut u);
    Ok(u)
}

/// One Beta(a, b) draw.
pub fn sample_beta<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> Result<f64> {
    let d = beta_dist(a, b)?;
    Ok(d.sample(rng))
}

pub(crate) fn beta_dist(a: f64, b: f64) -> Result<Beta<f64>> {
    if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
        return Err(invalid(format!("beta shapes must be positive, got ({a}, {b})")));
    }
    Beta::new(a, b).map_err(|e| invalid(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamKey;

    #[test]
    fn sphere_has_unit_norm() {
        let mut rng = StreamKey::new(1).rng();
        for k in 1..8 {
            for _ in 0..100 {
                let u = sample_unit_sphere(k, &mut rng).unwrap();
                let n: f64 = u.iter().map(|v| v * v).sum();
                assert!((n - 1.0).abs() < 1e-14);
            }
        }
        assert!(matches!(sample_unit_sphere(0, &mut rng), Err(Error::InvalidDimension(_))));
    }

    #[test]
    fn zero_sphere_is_a_fair_sign() {
        let mut rng = StreamKey::new(2).rng();
        let n = 100_000;
        let plus = (0..n)
            .filter(|_| {
                let u = sample_unit_sphere(1, &mut rng).unwrap()[0];
                assert!(u == 1.0 || u == -1.0);
                u > 0.0
            })
            .count();
        let p = plus as f64 / n as f64;
        assert!((p - 0.5).abs() < 3.0 * (0.25 / n as f64).sqrt() + 1e-3);
    }

    #[test]
    fn sphere_moments() {
        let mut rng = StreamKey::new(3).rng();
        let n = 100_000;
        let mut mean = [0.0; 3];
        for _ in 0..n {
            let u = sample_unit_sphere(3, &mut rng).unwrap();
            for i in 0..3 {
                mean[i] += u[i] / n as f64;
            }
        }
        // Var U_i = 1/3
        let sd = (1.0 / 3.0 / n as f64).sqrt();
        assert!(mean.iter().all(|m| m.abs() < 3.0 * sd));
        let mut e2 = 0.0;
        for _ in 0..n {
            let u = sample_unit_sphere(4, &mut rng).unwrap();
            e2 += u[0] * u[0] / n as f64;
        }
        assert!((e2 - 0.25).abs() < 0.01);
    }

    #[test]
    fn beta_means() {
        let mut rng = StreamKey::new(4).rng();
        for (a, b, m) in [(1.0, 1.0, 0.5), (0.5, 0.5, 0.5), (0.5, 1.5, 0.25)] {
            let n = 100_000;
            let s: f64 = (0..n).map(|_| sample_beta(a, b, &mut rng).unwrap()).sum::<f64>() / n as f64;
            assert!((s - m).abs() < 0.01, "{a} {b} {s}");
        }
        assert!(sample_beta(0.0, 1.0, &mut rng).is_err());
        assert!(sample_beta(1.0, -2.0, &mut rng).is_err());
    }
}
