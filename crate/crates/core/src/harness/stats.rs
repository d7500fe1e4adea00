//! Empirical distribution functions and Kolmogorov–Smirnov machinery.

use crate::error::{Error, Result};

fn sorted(samples: &[f64]) -> Vec<f64> {
    let mut s = samples.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    s
}

/// Right-continuous empirical CDF of `samples` evaluated on `grid`.
pub fn ecdf(samples: &[f64], grid: &[f64]) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("ecdf needs at least one sample".into()));
    }
    let s = sorted(samples);
    let n = s.len() as f64;
    Ok(grid.iter().map(|&x| s.partition_point(|v| *v <= x) as f64 / n).collect())
}

/// `sup_x |F_n(x) − F(x)|` over the jump points of the empirical CDF.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("ks distance needs at least one sample".into()));
    }
    Ok(ks_statistic(samples, cdf))
}

/// Same as [`ks_distance`] without the emptiness check (returns 0 for an
/// empty sample).
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let s = sorted(samples);
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < s.len() {
        let x = s[i];
        let mut j = i;
        while j < s.len() && s[j] == x {
            j += 1;
        }
        let f = cdf(x);
        d = d.max((j as f64 / n - f).abs()).max((f - i as f64 / n).abs());
        i = j;
    }
    d
}

/// Asymptotic Kolmogorov survival function `P{K > λ}`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for j in 1..=100 {
        let t = 2.0 * (-2.0 * (j * j) as f64 * lambda * lambda).exp();
        s += if j % 2 == 1 { t } else { -t };
        if t < 1e-16 {
            break;
        }
    }
    s.clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy)]
pub struct KsTest {
    pub statistic: f64,
    pub p_value: f64,
}

/// One-sample KS test against `cdf`.
pub fn ks_test(samples: &[f64], cdf: impl Fn(f64) -> f64) -> KsTest {
    let d = ks_statistic(samples, cdf);
    let n = (samples.len() as f64).sqrt();
    KsTest {
        statistic: d,
        p_value: kolmogorov_sf((n + 0.12 + 0.11 / n) * d),
    }
}

/// Two-sample KS test.
pub fn two_sample_ks(a: &[f64], b: &[f64]) -> KsTest {
    let (sa, sb) = (sorted(a), sorted(b));
    let (na, nb) = (sa.len() as f64, sb.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < sa.len() && j < sb.len() {
        let x = sa[i].min(sb[j]);
        while i < sa.len() && sa[i] <= x {
            i += 1;
        }
        while j < sb.len() && sb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let ne = (na * nb / (na + nb)).sqrt();
    KsTest {
        statistic: d,
        p_value: kolmogorov_sf((ne + 0.12 + 0.11 / ne) * d),
    }
}

/// DKW radius `√(ln(2/α)/(2n))` at confidence `1 − α`.
pub fn dkw_radius(n: usize, alpha: f64) -> f64 {
    ((2.0 / alpha).ln() / (2.0 * n as f64)).sqrt()
}

/// Joint empirical CDF `P_n{X ≤ x}` of row-major samples of width `k`.
pub fn joint_ecdf(rows: &[f64], k: usize, points: &[Vec<f64>]) -> Vec<f64> {
    joint_count(rows, k, points, |v, x| v <= x)
}

/// Joint empirical survival `P_n{X > x}`.
pub fn joint_survival(rows: &[f64], k: usize, points: &[Vec<f64>]) -> Vec<f64> {
    joint_count(rows, k, points, |v, x| v > x)
}

fn joint_count(rows: &[f64], k: usize, points: &[Vec<f64>], pred: impl Fn(f64, f64) -> bool) -> Vec<f64> {
    let n = rows.len() / k.max(1);
    let mut counts = vec![0usize; points.len()];
    for r in rows.chunks_exact(k) {
        for (c, p) in counts.iter_mut().zip(points) {
            if r.iter().zip(p).all(|(v, x)| pred(*v, *x)) {
                *c += 1;
            }
        }
    }
    counts.iter().map(|c| *c as f64 / n.max(1) as f64).collect()
}
