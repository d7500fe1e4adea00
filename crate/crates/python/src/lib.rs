//! Python bindings. Configs are passed as dicts and validated by the same
//! parsers the command-line tool uses.

use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde_json::Value;

use extremal::arrays::{self, simulate_block_extremes};
use extremal::harness::cli::{self, describe, RunOptions, Subcommand};
use extremal::harness::config::{parse_array, parse_config, parse_process, parse_scale_mode, Node};
use extremal::harness::run_convergence_experiment;
use extremal::limits::{self, Budget, OuterRule};
use extremal::norming::{self, MarginalLaw};
use extremal::processes::{simulate_brown_resnick, simulate_penrose_kabluchko, PathSet};
use extremal::{Error, StreamKey};

create_exception!(extremal_arrays, ExtremalError, PyException, "Invalid input or failed computation.");

fn err(e: Error) -> PyErr {
    ExtremalError::new_err(describe(&e))
}

fn to_value(py: Python<'_>, obj: &Bound<'_, PyAny>) -> PyResult<Value> {
    let text: String = py.import("json")?.call_method1("dumps", (obj,))?.extract()?;
    serde_json::from_str(&text).map_err(|e| ExtremalError::new_err(e.to_string()))
}

fn to_py(py: Python<'_>, v: &impl serde::Serialize) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| ExtremalError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn budget(paths: usize, seed: u64, quadrature: bool) -> Budget {
    let b = Budget::default().with_paths(paths).with_seed(seed);
    if quadrature {
        b.with_rule(OuterRule::QUADRATURE)
    } else {
        b
    }
}

/// Conditionally negative definite matrix `Γ` with zero diagonal.
#[pyclass(frozen, skip_from_py_object, module = "extremal_arrays")]
#[derive(Clone)]
struct Variogram {
    inner: arrays::Variogram,
}

#[pymethods]
impl Variogram {
    #[new]
    fn new(rows: Vec<Vec<f64>>) -> PyResult<Self> {
        Ok(Self {
            inner: arrays::Variogram::from_rows(&rows).map_err(err)?,
        })
    }

    /// The two-point variogram with off-diagonal entry `g`.
    #[staticmethod]
    fn pair(g: f64) -> PyResult<Self> {
        Ok(Self {
            inner: arrays::Variogram::pair(g).map_err(err)?,
        })
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k()
    }

    fn rows(&self) -> Vec<Vec<f64>> {
        let k = self.inner.k();
        (0..k).map(|i| (0..k).map(|j| self.inner.get(i, j)).collect()).collect()
    }

    fn default_theta(&self) -> Vec<f64> {
        self.inner.default_theta()
    }

    /// `θ_i + θ_j − Γ_ij`, rejected unless positive semidefinite.
    fn to_covariance(&self, theta: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
        let c = self.inner.to_covariance(&theta).map_err(err)?;
        Ok((0..c.nrows()).map(|i| c.row(i).iter().copied().collect()).collect())
    }

    fn __repr__(&self) -> String {
        format!("Variogram({:?})", self.rows())
    }
}

/// A limit-law value with its Monte Carlo and truncation errors.
#[pyclass(frozen, get_all, module = "extremal_arrays")]
struct LimitEstimate {
    value: f64,
    mc_std_err: f64,
    quad_trunc_bound: f64,
    node_count: usize,
    mc_paths: usize,
}

#[pymethods]
impl LimitEstimate {
    /// `3·mc_std_err + quad_trunc_bound`.
    fn combined_error(&self) -> f64 {
        3.0 * self.mc_std_err + self.quad_trunc_bound
    }

    fn __float__(&self) -> f64 {
        self.value
    }

    fn __repr__(&self) -> String {
        format!(
            "LimitEstimate(value={}, mc_std_err={:.3e}, quad_trunc_bound={:.3e})",
            self.value, self.mc_std_err, self.quad_trunc_bound
        )
    }
}

impl From<limits::LimitEstimate> for LimitEstimate {
    fn from(e: limits::LimitEstimate) -> Self {
        Self {
            value: e.value,
            mc_std_err: e.mc_std_err,
            quad_trunc_bound: e.quad_trunc_bound,
            node_count: e.node_count,
            mc_paths: e.mc_paths,
        }
    }
}

type Estimates = Vec<LimitEstimate>;

fn eval_points<E: Send + Sync>(
    py: Python<'_>,
    ev: E,
    points: Vec<Vec<f64>>,
    f: impl Fn(&E, &[f64]) -> extremal::Result<limits::LimitEstimate> + Send + Sync,
) -> PyResult<Estimates> {
    py.detach(|| points.iter().map(|x| f(&ev, x).map(LimitEstimate::from)).collect::<Result<Vec<_>, _>>())
        .map_err(err)
}

#[pyfunction]
fn g_gamma_cdf(index: f64, x: f64) -> PyResult<f64> {
    limits::g_gamma_cdf(index, x).map_err(err)
}

#[pyfunction]
fn hr_bivariate_cdf(gamma12: f64, x1: f64, x2: f64) -> PyResult<f64> {
    limits::hr_bivariate_closed_form(gamma12, x1, x2).map_err(err)
}

/// Hüsler–Reiss distribution function at each point.
#[pyfunction]
#[pyo3(signature = (gamma, points, theta=None, paths=200_000, seed=0, quadrature=false))]
fn hr_cdf(
    py: Python<'_>,
    gamma: &Variogram,
    points: Vec<Vec<f64>>,
    theta: Option<Vec<f64>>,
    paths: usize,
    seed: u64,
    quadrature: bool,
) -> PyResult<Estimates> {
    let spec = limits::HrSpec::new(gamma.inner.clone(), theta).map_err(err)?;
    let ev = limits::HrEvaluator::new(spec, budget(paths, seed, quadrature)).map_err(err)?;
    eval_points(py, ev, points, |e, x| e.cdf(x))
}

/// Distribution function of the Weibull-domain max limit with index `alpha`.
#[pyfunction]
#[pyo3(signature = (gamma, alpha, points, theta=None, paths=200_000, seed=0))]
fn weibull_cdf(
    py: Python<'_>,
    gamma: &Variogram,
    alpha: f64,
    points: Vec<Vec<f64>>,
    theta: Option<Vec<f64>>,
    paths: usize,
    seed: u64,
) -> PyResult<Estimates> {
    let spec = limits::WeibullSpec::new(gamma.inner.clone(), alpha, theta).map_err(err)?;
    let ev = limits::WeibullEvaluator::new(spec, budget(paths, seed, false)).map_err(err)?;
    eval_points(py, ev, points, |e, x| e.cdf(x))
}

/// Joint survival function of the Gaussian-array min limit.
#[pyfunction]
#[pyo3(signature = (gamma, points, index=1.0, paths=200_000, seed=0, quadrature=false))]
fn min_survival(
    py: Python<'_>,
    gamma: &Variogram,
    points: Vec<Vec<f64>>,
    index: f64,
    paths: usize,
    seed: u64,
    quadrature: bool,
) -> PyResult<Estimates> {
    let spec = limits::MinLimitSpec::gaussian(gamma.inner.clone(), index).map_err(err)?;
    let ev = limits::MinEvaluator::new(spec, budget(paths, seed, quadrature)).map_err(err)?;
    eval_points(py, ev, points, |e, x| e.survival(x))
}

/// The same survival function through inclusion–exclusion over subsets.
#[pyfunction]
#[pyo3(signature = (gamma, points, index=1.0, paths=200_000, seed=0))]
fn min_survival_ie(
    py: Python<'_>,
    gamma: &Variogram,
    points: Vec<Vec<f64>>,
    index: f64,
    paths: usize,
    seed: u64,
) -> PyResult<Estimates> {
    let spec = limits::IeSpec::gaussian(gamma.inner.clone(), index).map_err(err)?;
    let ev = limits::IeEvaluator::new(spec, budget(paths, seed, false)).map_err(err)?;
    eval_points(py, ev, points, |e, x| e.survival(x))
}

/// Survival function of the Penrose–Kabluchko min-stable law. `scale` takes
/// the config form `{"mode": ..., "law": {...}}`; the default is `S ≡ 1`.
#[pyfunction]
#[pyo3(signature = (gamma, points, scale=None, paths=200_000, seed=0))]
fn pk_survival(
    py: Python<'_>,
    gamma: &Variogram,
    points: Vec<Vec<f64>>,
    scale: Option<&Bound<'_, PyAny>>,
    paths: usize,
    seed: u64,
) -> PyResult<Estimates> {
    let scale = scale.map(|s| to_value(py, s)).transpose()?;
    let mode = parse_scale_mode(scale.as_ref().map(Node::root)).map_err(err)?;
    let spec = limits::PkSpec::new(gamma.inner.clone(), mode).map_err(err)?;
    let ev = limits::PkEvaluator::new(spec, budget(paths, seed, false)).map_err(err)?;
    eval_points(py, ev, points, |e, x| e.survival(x))
}

fn marginal(law: &str) -> PyResult<MarginalLaw> {
    match law {
        "normal" => Ok(MarginalLaw::normal()),
        "uniform" => Ok(MarginalLaw::uniform()),
        other => Err(ExtremalError::new_err(format!("unknown marginal law {other:?}; expected normal or uniform"))),
    }
}

/// Norming constants for block minima of `|X|`: a dict with `a_n`, `b_n`, `c_n`.
#[pyfunction]
fn min_norming(py: Python<'_>, law: &str, n: u64) -> PyResult<Py<PyAny>> {
    to_py(py, &norming::min_norming(&marginal(law)?, n).map_err(err)?)
}

/// Gumbel norming constants for block maxima; `hazard` swaps the declared
/// scaling function for the hazard rate.
#[pyfunction]
#[pyo3(signature = (law, n, hazard=false))]
fn gumbel_norming(py: Python<'_>, law: &str, n: u64, hazard: bool) -> PyResult<Py<PyAny>> {
    let g = marginal(law)?;
    let g = if hazard { g.with_hazard_scaling() } else { g };
    to_py(py, &norming::gumbel_norming(&g, n).map_err(err)?)
}

/// Least-squares estimate of the regular-variation index at zero:
/// `(gamma, std_err)`.
#[pyfunction]
#[pyo3(signature = (samples, fit_fraction=0.05))]
fn rv_index_at_zero(samples: Vec<f64>, fit_fraction: f64) -> PyResult<(f64, f64)> {
    let e = arrays::rv_index_at_zero(&samples, fit_fraction).map_err(err)?;
    Ok((e.gamma, e.std_err))
}

/// Normalized block extremes of an array given in config form. Returns a
/// dict with `values` (one row per replication) and the norming used.
#[pyfunction]
#[pyo3(signature = (array, n, reps, seed=0))]
fn simulate_array(py: Python<'_>, array: &Bound<'_, PyAny>, n: u64, reps: usize, seed: u64) -> PyResult<Py<PyAny>> {
    let v = to_value(py, array)?;
    let spec = parse_array(Node::root(&v), None, None).map_err(err)?;
    let ex = py.detach(|| simulate_block_extremes(&spec, n, reps, StreamKey::new(seed))).map_err(err)?;
    let rows: Vec<&[f64]> = (0..ex.reps).map(|i| ex.row(i)).collect();
    to_py(
        py,
        &serde_json::json!({
            "values": rows,
            "norming": ex.norming,
            "sigma_min_eigenvalue": ex.sigma_min_eigenvalue,
            "clipped": ex.clipped,
        }),
    )
}

fn paths_dict(py: Python<'_>, p: &PathSet) -> PyResult<Py<PyAny>> {
    let k = p.grid.len();
    let values: Vec<&[f64]> = p.values.chunks_exact(k).collect();
    let flags: Vec<&[bool]> = p.flags.chunks_exact(k).collect();
    to_py(
        py,
        &serde_json::json!({
            "grid": p.grid,
            "values": values,
            "flags": flags,
            "flag_rate": p.flag_rate(),
            "truncation": p.truncation,
        }),
    )
}

/// Brown–Resnick paths; `process` has the `simulate-br` config fields.
#[pyfunction]
#[pyo3(signature = (process, reps, seed=0))]
fn simulate_br(py: Python<'_>, process: &Bound<'_, PyAny>, reps: usize, seed: u64) -> PyResult<Py<PyAny>> {
    let v = to_value(py, process)?;
    let c = parse_process(Node::root(&v), &[]).map_err(err)?;
    let p = py
        .detach(|| simulate_brown_resnick(&c.kernel, &c.grid, reps, c.br, StreamKey::new(seed)))
        .map_err(err)?;
    paths_dict(py, &p)
}

/// Penrose–Kabluchko paths; `process` has the `simulate-pk` config fields.
#[pyfunction]
#[pyo3(signature = (process, reps, seed=0))]
fn simulate_pk(py: Python<'_>, process: &Bound<'_, PyAny>, reps: usize, seed: u64) -> PyResult<Py<PyAny>> {
    let v = to_value(py, process)?;
    let c = parse_process(Node::root(&v), &[]).map_err(err)?;
    let p = py
        .detach(|| simulate_penrose_kabluchko(&c.kernel, c.scale, &c.grid, reps, c.pk, StreamKey::new(seed)))
        .map_err(err)?;
    paths_dict(py, &p)
}

/// Runs a convergence experiment and returns its report as a dict.
#[pyfunction]
#[pyo3(signature = (config, seed=None))]
fn run_convergence(py: Python<'_>, config: &Bound<'_, PyAny>, seed: Option<u64>) -> PyResult<Py<PyAny>> {
    let text = to_value(py, config)?.to_string();
    let mut cfg = parse_config(&text).map_err(err)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let report = py.detach(|| run_convergence_experiment(&cfg)).map_err(err)?;
    to_py(py, &report)
}

/// Runs a command-line subcommand, writing its CSV and metadata into `out`.
/// Returns `(pass, csv_path, meta_path)` with `pathlib.Path` paths.
#[pyfunction]
#[pyo3(signature = (subcommand, config, out, seed=None))]
fn run_cli(
    py: Python<'_>,
    subcommand: &str,
    config: &Bound<'_, PyDict>,
    out: PathBuf,
    seed: Option<u64>,
) -> PyResult<(bool, PathBuf, PathBuf)> {
    let cmd = Subcommand::ALL
        .iter()
        .copied()
        .find(|c| c.name() == subcommand)
        .ok_or_else(|| ExtremalError::new_err(format!("unknown subcommand {subcommand:?}")))?;
    let text = to_value(py, config.as_any())?.to_string();
    let r = py.detach(|| cli::run(cmd, &text, &RunOptions { seed, out })).map_err(err)?;
    Ok((r.pass, r.csv, r.meta))
}

#[pymodule]
fn extremal_arrays(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("ExtremalError", m.py().get_type::<ExtremalError>())?;
    m.add_class::<Variogram>()?;
    m.add_class::<LimitEstimate>()?;
    m.add_function(wrap_pyfunction!(g_gamma_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(hr_bivariate_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(hr_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(weibull_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(min_survival, m)?)?;
    m.add_function(wrap_pyfunction!(min_survival_ie, m)?)?;
    m.add_function(wrap_pyfunction!(pk_survival, m)?)?;
    m.add_function(wrap_pyfunction!(min_norming, m)?)?;
    m.add_function(wrap_pyfunction!(gumbel_norming, m)?)?;
    m.add_function(wrap_pyfunction!(rv_index_at_zero, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_array, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_br, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_pk, m)?)?;
    m.add_function(wrap_pyfunction!(run_convergence, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    Ok(())
}
