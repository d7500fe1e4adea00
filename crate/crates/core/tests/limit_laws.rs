//! Structural identities of the limit laws.

use extremal_arrays::arrays::Variogram;
use extremal_arrays::limits::{
    g_gamma_cdf, Budget, HrEvaluator, HrSpec, IeEvaluator, IeSpec, MinEvaluator, MinLimitSpec,
};

fn three_points() -> Variogram {
    Variogram::from_rows(&[vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.0], vec![2.0, 1.0, 0.0]]).unwrap()
}

#[test]
fn hr_margins_are_gumbel() {
    let ev = HrEvaluator::new(HrSpec::new(three_points(), None).unwrap(), Budget::default().with_seed(1)).unwrap();
    for (j, x) in [(0, -1.0), (1, 0.5), (2, 2.0)] {
        let mut p = vec![1e3; 3];
        p[j] = x;
        let v = ev.cdf(&p).unwrap();
        assert!((v.value - (-(-x).exp()).exp()).abs() < 1e-3, "{j}: {v:?}");
    }
}

#[test]
fn hr_is_max_stable() {
    let g = Variogram::pair(1.5).unwrap();
    let ev = HrEvaluator::new(HrSpec::new(g, None).unwrap(), Budget::default().with_seed(2)).unwrap();
    for x in [[0.0, 0.5], [-0.5, 1.0]] {
        let q = ev.cdf(&x).unwrap();
        for m in [2.0f64, 3.0] {
            let s = ev.cdf(&[x[0] + m.ln(), x[1] + m.ln()]).unwrap();
            let lhs = s.value.powf(m);
            let err = q.combined_error() + m * s.value.powf(m - 1.0) * s.combined_error();
            assert!((lhs - q.value).abs() <= 3.0 * err.max(1e-12), "m={m}: {lhs} vs {q:?}");
        }
    }
}

#[test]
fn hr_theta_choices_agree() {
    let g = three_points();
    let b = Budget::default().with_seed(3);
    let a = HrEvaluator::new(HrSpec::new(g.clone(), None).unwrap(), b).unwrap();
    let c = HrEvaluator::new(HrSpec::centered(g).unwrap(), b.with_seed(4)).unwrap();
    for x in [[0.0, 0.0, 0.0], [1.0, -0.5, 0.3]] {
        let (p, q) = (a.cdf(&x).unwrap(), c.cdf(&x).unwrap());
        assert!((p.value - q.value).abs() <= 3.0 * (p.combined_error() + q.combined_error()), "{p:?} {q:?}");
    }
}

#[test]
fn min_forms_agree_in_one_dimension() {
    let g = Variogram::from_rows(&[vec![0.0]]).unwrap();
    let b = Budget::default().with_paths(20_000);
    let direct = MinEvaluator::new(MinLimitSpec::gaussian(g.clone(), 1.0).unwrap(), b).unwrap();
    let ie = IeEvaluator::new(IeSpec::gaussian(g, 1.0).unwrap(), b).unwrap();
    for x in [0.05, 0.4, 1.5] {
        let want = 1.0 - g_gamma_cdf(1.0, x).unwrap();
        let (p, q) = (direct.survival(&[x]).unwrap(), ie.survival(&[x]).unwrap());
        assert!((p.value - want).abs() <= 3.0 * p.combined_error() + 1e-12);
        assert!((q.value - want).abs() < 1e-12);
    }
}

#[test]
fn min_survival_marginal_is_g_gamma() {
    // a huge coordinate removes the other constraints
    let ev = MinEvaluator::new(MinLimitSpec::gaussian(three_points(), 1.0).unwrap(), Budget::default().with_seed(5)).unwrap();
    for x in [0.1, 0.3, 0.8] {
        let v = ev.survival(&[x, 1e-9, 1e-9]).unwrap();
        let want = 1.0 - g_gamma_cdf(1.0, x).unwrap();
        assert!((v.value - want).abs() <= 3.0 * v.combined_error() + 1e-6, "{v:?} vs {want}");
    }
}
