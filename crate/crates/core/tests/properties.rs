//! Property tests for invariants that hold for every input.

use extremal_arrays::arrays::{sigma_from_gamma, Variogram};
use extremal_arrays::harness::config::parse_config;
use extremal_arrays::harness::{ecdf, joint_ecdf};
use extremal_arrays::limits::{
    g_gamma_cdf, hr_bivariate_closed_form, weibull_marginal_cdf, Budget, HrEvaluator, HrSpec, MinEvaluator, MinLimitSpec,
    WeibullEvaluator, WeibullSpec,
};
use extremal_arrays::samplers::{sample_unit_sphere, variogram_to_covariance, GaussianKernel, VarianceFn, VariogramKernel};
use extremal_arrays::{Error, StreamKey};
use nalgebra::DMatrix;
use proptest::prelude::*;

/// Random valid variogram `Γ_ij = |t_i − t_j|^(2H)` from distinct points.
fn variogram(k: usize) -> impl Strategy<Value = Variogram> {
    (prop::collection::vec(0.1f64..3.0, k), 0.2f64..1.0).prop_map(move |(gaps, h)| {
        let mut t = vec![0.0];
        for g in gaps.iter().take(k - 1) {
            t.push(t.last().unwrap() + g);
        }
        let kernel = GaussianKernel::new(VariogramKernel::Fbm { hurst: h, scale: 1.0 }, VarianceFn::Origin);
        Variogram::from_kernel(&kernel, &t).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sphere_draws_have_unit_norm(k in 1usize..12, seed in any::<u64>()) {
        let mut rng = StreamKey::new(seed).rng();
        let u = sample_unit_sphere(k, &mut rng).unwrap();
        let n: f64 = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!((n - 1.0).abs() < 1e-14);
    }

    #[test]
    fn sigma_round_trip(g in (2usize..6).prop_flat_map(variogram), scale in 1.0f64..100.0) {
        let c = scale * 100.0 * g.max_entry();
        let s = match sigma_from_gamma(&g, c, false) {
            Ok(s) => s,
            // nearly degenerate variograms need a later schedule
            Err(Error::ScheduleTooEarly { .. }) => return Err(TestCaseError::reject("schedule too early")),
            Err(e) => panic!("{e}"),
        };
        let k = g.k();
        let back = (DMatrix::from_element(k, k, 1.0) - &s.sigma) * c;
        prop_assert!((back - g.matrix()).amax() <= 1e-12 * c);
    }

    #[test]
    fn covariance_round_trip(points in prop::collection::vec(-3.0f64..3.0, 2..6)) {
        let mut t = points.clone();
        t.sort_by(f64::total_cmp);
        t.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
        prop_assume!(t.len() >= 2);
        // Brownian motion started at t₀ − 1: C_ij = min(t_i, t_j) − t₀ + 1
        let t0 = t[0] - 1.0;
        let c = DMatrix::from_fn(t.len(), t.len(), |i, j| t[i].min(t[j]) - t0);
        let kernel = GaussianKernel::new(
            VariogramKernel::Brownian { scale: 1.0 },
            VarianceFn::Linear { slope: 1.0, offset: -t0 },
        );
        let got = variogram_to_covariance(&kernel, &t).unwrap();
        prop_assert!((got - c).amax() < 1e-12);
    }

    #[test]
    fn ecdf_is_a_monotone_probability(samples in prop::collection::vec(-10.0f64..10.0, 1..200),
                                      grid in prop::collection::vec(-12.0f64..12.0, 1..40)) {
        let mut g = grid.clone();
        g.sort_by(f64::total_cmp);
        let v = ecdf(&samples, &g).unwrap();
        prop_assert!(v.iter().all(|p| (0.0..=1.0).contains(p)));
        prop_assert!(v.windows(2).all(|w| w[0] <= w[1]));
        let k = 1;
        let joint = joint_ecdf(&samples, k, &g.iter().map(|x| vec![*x]).collect::<Vec<_>>());
        prop_assert_eq!(joint, v);
    }

    #[test]
    fn g_gamma_is_a_cdf(gamma in 0.05f64..=1.0, a in 0.0f64..5.0, b in 0.0f64..5.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (p, q) = (g_gamma_cdf(gamma, lo).unwrap(), g_gamma_cdf(gamma, hi).unwrap());
        prop_assert!((0.0..=1.0).contains(&p) && p <= q);
    }

    #[test]
    fn bivariate_hr_is_monotone_with_gumbel_margins(g in 0.01f64..20.0, x1 in -3.0f64..5.0, x2 in -3.0f64..5.0, d in 0.0f64..2.0) {
        let v = hr_bivariate_closed_form(g, x1, x2).unwrap();
        prop_assert!(v <= hr_bivariate_closed_form(g, x1 + d, x2).unwrap() + 1e-15);
        prop_assert!(v <= hr_bivariate_closed_form(g, x1, x2 + d).unwrap() + 1e-15);
        let margin = hr_bivariate_closed_form(g, x1, 1e3).unwrap();
        prop_assert!((margin - (-(-x1).exp()).exp()).abs() < 1e-12);
    }

    #[test]
    fn parser_never_panics(text in "\\PC{0,200}") {
        let _ = parse_config(&text);
    }

    #[test]
    fn parser_rejects_short_runs(reps in 0usize..1000) {
        let text = format!(
            r#"{{"kind": "min-convergence", "array": {{"gamma": [[0, 1], [1, 0]]}}, "n_schedule": [10], "reps": {reps}}}"#
        );
        prop_assert!(parse_config(&text).is_err());
    }
}

/// Random chains `x ≤ x + δ₁ ≤ x + δ₁ + δ₂ ≤ …` (componentwise).
fn chain(k: usize, lo: f64, hi: f64) -> impl Strategy<Value = Vec<Vec<f64>>> {
    (
        prop::collection::vec(lo..hi, k),
        prop::collection::vec(prop::collection::vec(0.0f64..0.4, k), 3),
    )
        .prop_map(|(start, steps)| {
            let mut out = vec![start];
            for s in steps {
                let last = out.last().unwrap();
                out.push(last.iter().zip(&s).map(|(a, b)| a + b).collect());
            }
            out
        })
}

fn budget() -> Budget {
    Budget::default().with_paths(4000)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn hr_cdf_is_nondecreasing(g in variogram(3), xs in chain(3, -2.0, 2.0)) {
        let ev = HrEvaluator::new(HrSpec::new(g, None).unwrap(), budget()).unwrap();
        let v: Vec<_> = xs.iter().map(|x| ev.cdf(x).unwrap()).collect();
        for w in v.windows(2) {
            prop_assert!(w[1].value >= w[0].value - (w[0].combined_error() + w[1].combined_error()));
        }
    }

    #[test]
    fn min_survival_is_nonincreasing(g in variogram(3), xs in chain(3, 0.01, 1.0)) {
        let ev = MinEvaluator::new(MinLimitSpec::gaussian(g, 1.0).unwrap(), budget()).unwrap();
        let v: Vec<_> = xs.iter().map(|x| ev.survival(x).unwrap()).collect();
        for w in v.windows(2) {
            prop_assert!(w[1].value <= w[0].value + (w[0].combined_error() + w[1].combined_error()));
        }
    }

    #[test]
    fn weibull_cdf_is_nondecreasing(g in variogram(2), alpha in 0.6f64..3.0, xs in chain(2, -2.5, -1.3)) {
        let ev = WeibullEvaluator::new(WeibullSpec::new(g, alpha, None).unwrap(), budget()).unwrap();
        let v: Vec<_> = xs.iter().map(|x| ev.cdf(x).unwrap()).collect();
        for w in v.windows(2) {
            prop_assert!(w[1].value >= w[0].value - (w[0].combined_error() + w[1].combined_error()));
        }
        // bounded by each marginal
        let beta = alpha + 0.5;
        for (x, e) in xs.iter().zip(&v) {
            prop_assert!(e.value <= weibull_marginal_cdf(beta, x[0]) + e.combined_error() + 1e-12);
        }
    }
}
