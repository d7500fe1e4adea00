//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use extremal_arrays::arrays::{rv_index_at_zero, simulate_block_extremes, ArraySpec, ExtremeMode, Variogram};
use extremal_arrays::harness::config::parse_config;
use extremal_arrays::harness::convergence::{quantile_grid, run_convergence_experiment};
use extremal_arrays::harness::{joint_ecdf, ks_distance, two_sample_ks};
use extremal_arrays::limits::{
    hr_bivariate_closed_form, pk_limit_survival, weibull_marginal_cdf, Budget, HrEvaluator, HrSpec, IeEvaluator, IeSpec,
    MinEvaluator, MinLimitSpec, OuterRule, PkSpec, WeibullEvaluator, WeibullSpec,
};
use extremal_arrays::norming::{gumbel_norming, min_norming, model_a_constants, model_b_constants, MarginalLaw};
use extremal_arrays::processes::{simulate_brown_resnick, simulate_penrose_kabluchko, BrOptions, PkOptions};
use extremal_arrays::samplers::{GaussianKernel, ScaleLaw, ScaleMode, VarianceFn, VariogramKernel};
use extremal_arrays::{Result, StreamKey};
use rand::Rng;

type Check = Result<(bool, String)>;

fn gumbel_q(p: f64) -> f64 {
    -(-p.ln()).ln()
}

fn marginal_min_limit() -> Check {
    let spec = ArraySpec::gaussian(Variogram::pair(1.0)?, ExtremeMode::MinAbs)?;
    let t = Instant::now();
    let ex = simulate_block_extremes(&spec, 10_000, 100_000, StreamKey::new(101))?;
    let secs = t.elapsed().as_secs_f64();
    let d = (0..2)
        .map(|j| ks_distance(&ex.column(j), |x| -(-2.0 * x).exp_m1()))
        .collect::<Result<Vec<_>>>()?;
    let worst = d.iter().cloned().fold(0.0, f64::max);
    Ok((worst <= 0.02, format!("sup distance {worst:.4} <= 0.02, simulation {secs:.0}s")))
}

fn hr_oracle() -> Check {
    let budget = Budget::default().with_rule(OuterRule::QUADRATURE).with_seed(102);
    let mut ok = true;
    let mut worst = 0.0f64;
    for g in [0.5, 1.0, 4.0] {
        let ev = HrEvaluator::new(HrSpec::new(Variogram::pair(g)?, None)?, budget)?;
        for x in [[0.0, 0.0], [1.0, -1.0], [2.0, 2.0]] {
            let e = ev.cdf(&x)?;
            let exact = hr_bivariate_closed_form(g, x[0], x[1])?;
            let diff = (e.value - exact).abs();
            ok &= diff <= 1e-3 + 3.0 * e.mc_std_err;
            worst = worst.max(diff / (1e-3 + 3.0 * e.mc_std_err));
        }
    }
    Ok((ok, format!("9 points, worst |diff| / (1e-3 + 3 se) = {worst:.3}")))
}

fn maxima_to_hr() -> Check {
    let c = parse_config(
        r#"{"kind": "max-gumbel-convergence",
            "array": {"gamma": [[0, 1], [1, 0]], "gumbel_scaling": "hazard"},
            "n_schedule": [100, 1000, 10000], "reps": 100000, "seed": 103}"#,
    )?;
    let r = run_convergence_experiment(&c)?;
    let d: Vec<f64> = r.rows.iter().map(|r| r.sup_distance).collect();
    let decreasing = d.windows(2).all(|w| w[1] < w[0]);
    let last = *d.last().unwrap();
    Ok((decreasing && last <= 0.02, format!("distances {d:.4?}, decreasing and last <= 0.02")))
}

fn brown_resnick_fdd() -> Check {
    let kernel = GaussianKernel::new(VariogramKernel::Brownian { scale: 1.0 }, VarianceFn::Origin);
    let paths = simulate_brown_resnick(&kernel, &[0.0, 1.0], 100_000, BrOptions::default(), StreamKey::new(104))?;
    let points = quantile_grid(2, |_, p| gumbel_q(p));
    let emp = joint_ecdf(&paths.values, 2, &points);
    let ev = HrEvaluator::new(HrSpec::new(Variogram::pair(1.0)?, None)?, Budget::default().with_seed(104))?;
    let mut sup = 0.0f64;
    for (x, e) in points.iter().zip(&emp) {
        sup = sup.max((ev.cdf(x)?.value - e).abs());
    }
    let rate = paths.flag_rate();
    Ok((
        sup <= 0.015 && rate < 1e-3,
        format!("sup {sup:.4} <= 0.015, flag rate {rate:.1e} < 1e-3"),
    ))
}

fn variance_invariance() -> Check {
    let grid = [0.0, 1.0];
    let a = GaussianKernel::new(VariogramKernel::Brownian { scale: 1.0 }, VarianceFn::Linear { slope: 1.0, offset: 0.0 });
    let b = GaussianKernel::new(VariogramKernel::Brownian { scale: 1.0 }, VarianceFn::Linear { slope: 1.0, offset: 5.0 });
    let pa = simulate_brown_resnick(&a, &grid, 20_000, BrOptions::default(), StreamKey::new(105))?;
    let pb = simulate_brown_resnick(&b, &grid, 20_000, BrOptions::default(), StreamKey::new(205))?;
    let p: Vec<f64> = (0..2).map(|j| two_sample_ks(&pa.column(j), &pb.column(j)).p_value).collect();
    Ok((p.iter().all(|v| *v > 0.01), format!("two-sample KS p-values {p:.3?} > 0.01")))
}

fn pk_marginal() -> Check {
    let kernel = GaussianKernel::new(VariogramKernel::Brownian { scale: 1.0 }, VarianceFn::Constant { value: 1.0 });
    let one = ScaleMode::Scalar(ScaleLaw::constant(1.0));
    let paths = simulate_penrose_kabluchko(&kernel, one.clone(), &[0.0, 1.0], 100_000, PkOptions::default(), StreamKey::new(106))?;
    let ks = (0..2)
        .map(|j| ks_distance(&paths.column(j), |x| if x <= 0.0 { 0.0 } else { -(-2.0 * x).exp_m1() }))
        .collect::<Result<Vec<_>>>()?;
    let worst_ks = ks.iter().cloned().fold(0.0, f64::max);
    let spec = PkSpec::new(Variogram::from_rows(&[vec![0.0]])?, one)?;
    let mut worst = 0.0f64;
    for x in [0.05, 0.2, 0.5, 1.0, 2.0, 4.0] {
        let v = pk_limit_survival(&spec, &[x], &Budget::default().with_seed(106))?;
        worst = worst.max((v.value - (-2.0 * x).exp()).abs());
    }
    Ok((
        worst_ks <= 0.01 && worst <= 1e-4,
        format!("KS {worst_ks:.4} <= 0.01, |limit - e^(-2x)| {worst:.1e} <= 1e-4"),
    ))
}

fn weibull_properties() -> Check {
    let g = Variogram::pair(1.0)?;
    let budget = Budget::default().with_seed(107);
    let ev = WeibullEvaluator::new(WeibullSpec::new(g.clone(), 1.0, None)?, budget)?;
    let beta = 1.5;
    // (a) marginal: the second coordinate at its upper endpoint
    let mut a_ok = true;
    let mut a_worst = 0.0f64;
    for x in [-0.2, -0.6, -1.0, -1.5] {
        let e = ev.cdf(&[x, -1e-12])?;
        let diff = (e.value - weibull_marginal_cdf(beta, x)).abs();
        a_ok &= diff <= 1e-3 + 3.0 * e.mc_std_err;
        a_worst = a_worst.max(diff);
    }
    // (b) θ-invariance
    let other = WeibullEvaluator::new(WeibullSpec::new(g, 1.0, Some(vec![2.0, 3.0]))?, budget.with_seed(207))?;
    let mut b_ok = true;
    for x in [[-0.5, -0.8], [-1.0, -1.0], [-0.2, -0.3]] {
        let (p, q) = (ev.cdf(&x)?, other.cdf(&x)?);
        b_ok &= (p.value - q.value).abs() <= p.combined_error() + q.combined_error();
    }
    // (c) max-stability fails at x = (−1, −1), m = 2
    let x = [-1.0, -1.0];
    let s = 2f64.powf(-1.0 / beta);
    let (q, qs) = (ev.cdf(&x)?, ev.cdf(&[x[0] * s, x[1] * s])?);
    let stable = qs.value * qs.value;
    let err = q.combined_error() + 2.0 * qs.value * qs.combined_error();
    let c_ok = (q.value - stable).abs() > err;
    Ok((
        a_ok && b_ok && c_ok,
        format!(
            "(a) marginal |diff| {a_worst:.1e} {a_ok}; (b) theta-invariance {b_ok}; (c) Q(-1,-1) = {:.4} vs Q(x 2^(-2/3))^2 = {stable:.4} (err {err:.4}) {c_ok}",
            q.value
        ),
    ))
}

fn ie_vs_direct() -> Check {
    let budget = Budget::default().with_seed(108);
    let gammas = [
        Variogram::pair(1.0)?,
        Variogram::from_rows(&[vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.0], vec![2.0, 1.0, 0.0]])?,
    ];
    let mut ok = true;
    let mut worst = 0.0f64;
    for g in gammas {
        let k = g.k();
        let direct = MinEvaluator::new(MinLimitSpec::gaussian(g.clone(), 1.0)?, budget)?;
        let ie = IeEvaluator::new(IeSpec::gaussian(g, 1.0)?, budget.with_seed(208))?;
        for x in [0.1, 0.3, 0.6] {
            let p = vec![x; k];
            let (a, b) = (direct.survival(&p)?, ie.survival(&p)?);
            let tol = 3.0 * (a.combined_error() + b.combined_error());
            ok &= (a.value - b.value).abs() <= tol;
            worst = worst.max((a.value - b.value).abs() / tol);
        }
    }
    Ok((ok, format!("k in {{2,3}}, worst |diff| / tolerance = {worst:.3}")))
}

fn norming_sanity() -> Check {
    let normal = MarginalLaw::normal();
    let a = min_norming(&normal, 1000)?.a_n;
    let target = 1000.0 / (2.0 * std::f64::consts::PI).sqrt();
    let a_ok = (a - target).abs() <= 0.5;
    let m = model_a_constants(1.0, 0.0, 0.5, 2.0, 1000)?;
    let b_ok = m.a == 1.0 && m.b == 1.0;
    let mut c_worst = 0.0f64;
    for n in [100u64, 1000, 10_000, 1_000_000] {
        let p = gumbel_norming(&normal, n)?;
        c_worst = c_worst.max((n as f64 * normal.sf(p.b_n) - 1.0).abs());
    }
    let c_ok = c_worst <= 1e-8;
    Ok((
        a_ok && b_ok && c_ok,
        format!("(a) a_n = {a:.3} vs {target:.3}; (b) A = {}, B = {}; (c) max |n(1-G(b_n)) - 1| = {c_worst:.1e}", m.a, m.b),
    ))
}

fn rv_index() -> Check {
    let mut rng = StreamKey::new(110).rng();
    let normal: Vec<f64> = (0..100_000)
        .map(|_| rand_distr::Distribution::<f64>::sample(&rand_distr::StandardNormal, &mut rng).abs())
        .collect();
    let squares: Vec<f64> = (0..100_000).map(|_| rng.random::<f64>().powi(2)).collect();
    let a = rv_index_at_zero(&normal, 0.05)?.gamma;
    let b = rv_index_at_zero(&squares, 0.05)?.gamma;
    Ok((
        (0.9..=1.1).contains(&a) && (0.45..=0.55).contains(&b),
        format!("|N(0,1)|: {a:.3} in [0.9, 1.1]; V^2: {b:.3} in [0.45, 0.55]"),
    ))
}

fn independence() -> Check {
    let c = parse_config(
        r#"{"kind": "independence-check",
            "array": {"sigma": [[1, 0.5], [0.5, 1]]},
            "n_schedule": [10000], "reps": 100000, "seed": 111}"#,
    )?;
    let r = run_convergence_experiment(&c)?;
    let d = r.rows[0].sup_distance;
    let mut model_b = 0.0f64;
    for n in [10u64, 1000, 1_000_000, 1_000_000_000_000] {
        let p = model_b_constants(n)?;
        model_b = model_b.max((p.a_n * p.b_n - 1.0).abs());
    }
    Ok((
        d <= 0.02 && model_b == 0.0,
        format!("factorization error {d:.4} <= 0.02; max |a_n b_n - 1| = {model_b:.1e}"),
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 11] = [
        ("marginal min-limit of Gaussian array minima", marginal_min_limit),
        ("Husler-Reiss evaluator vs bivariate closed form", hr_oracle),
        ("array maxima converge to Husler-Reiss", maxima_to_hr),
        ("Brown-Resnick finite-dimensional law", brown_resnick_fdd),
        ("Brown-Resnick law ignores the variance function", variance_invariance),
        ("Penrose-Kabluchko exponential marginal", pk_marginal),
        ("Weibull limit: marginal, theta-invariance, not max-stable", weibull_properties),
        ("inclusion-exclusion vs direct min-limit", ie_vs_direct),
        ("norming constants", norming_sanity),
        ("regular-variation index at zero", rv_index),
        ("independence regime and Model B constants", independence),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (ok, detail) = match check() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {:>2} {}: {name}: {detail} [{:.1}s]",
            i + 1,
            if ok { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
