//! JSON configuration for experiments and CLI subcommands.
//!
//! Parsing goes through [`Node`], which tracks the field path so that every
//! failure is reported as [`Error::Config`] with a stable code and the path
//! of the offending field.

use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::arrays::{ArraySpec, Dependence, ExtremeMode, GumbelScaling, Variogram};
use crate::error::{ConfigErrorCode, Error, Result};
use crate::limits::{AnchorRule, Budget};
use crate::norming::CnRule;
use crate::processes::{BrOptions, PkOptions};
use crate::samplers::{GaussianKernel, RadialLaw, ScaleLaw, ScaleMode, VarianceFn};

pub const MIN_REPS: usize = 1000;

fn cfg(code: ConfigErrorCode, path: &str, message: impl Into<String>) -> Error {
    Error::Config {
        code,
        path: if path.is_empty() { "$".into() } else { path.into() },
        message: message.into(),
    }
}

/// A JSON value with its path from the document root.
#[derive(Clone, Copy)]
pub struct Node<'a> {
    value: &'a Value,
    path: &'a str,
}

/// Owned child node (the path string must outlive the borrow).
pub struct Child<'a> {
    value: &'a Value,
    path: String,
}

impl<'a> Child<'a> {
    pub fn node(&self) -> Node<'_> {
        Node {
            value: self.value,
            path: &self.path,
        }
    }
}

impl<'a> Node<'a> {
    pub fn root(value: &'a Value) -> Self {
        Node { value, path: "" }
    }

    pub fn path(&self) -> &str {
        self.path
    }

    fn join(&self, key: &str) -> String {
        if self.path.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.path)
        }
    }

    fn object(&self) -> Result<&'a Map<String, Value>> {
        self.value
            .as_object()
            .ok_or_else(|| cfg(ConfigErrorCode::InvalidValue, self.path, "expected an object"))
    }

    /// Rejects fields outside `allowed`.
    pub fn only(&self, allowed: &[&str]) -> Result<()> {
        for k in self.object()?.keys() {
            if !allowed.contains(&k.as_str()) {
                return Err(cfg(
                    ConfigErrorCode::InvalidValue,
                    &self.join(k),
                    format!("unknown field; expected one of {allowed:?}"),
                ));
            }
        }
        Ok(())
    }

    pub fn opt(&self, key: &str) -> Result<Option<Child<'a>>> {
        Ok(self.object()?.get(key).filter(|v| !v.is_null()).map(|value| Child {
            value,
            path: self.join(key),
        }))
    }

    pub fn req(&self, key: &str) -> Result<Child<'a>> {
        self.opt(key)?
            .ok_or_else(|| cfg(ConfigErrorCode::MissingField, &self.join(key), "required field is missing"))
    }

    pub fn parse<T: DeserializeOwned>(&self) -> Result<T> {
        T::deserialize(self.value).map_err(|e| {
            let msg = e.to_string();
            let code = if msg.contains("unknown variant") {
                ConfigErrorCode::UnknownKind
            } else if msg.contains("missing field") {
                ConfigErrorCode::MissingField
            } else {
                ConfigErrorCode::InvalidValue
            };
            cfg(code, self.path, msg)
        })
    }

    pub fn field<T: DeserializeOwned>(&self, key: &str) -> Result<T> {
        self.req(key)?.node().parse()
    }

    pub fn field_or<T: DeserializeOwned>(&self, key: &str, default: T) -> Result<T> {
        match self.opt(key)? {
            Some(c) => c.node().parse(),
            None => Ok(default),
        }
    }

    pub fn invariant(&self, message: impl Into<String>) -> Error {
        cfg(ConfigErrorCode::Invariant, self.path, message)
    }

    /// Wraps a library error as an invariant violation at this node.
    pub fn wrap<T>(&self, r: Result<T>) -> Result<T> {
        r.map_err(|e| match e {
            e @ Error::Config { .. } => e,
            other => self.invariant(other.to_string()),
        })
    }
}

/// Parses JSON text, mapping syntax errors to `E_SYNTAX`.
pub fn parse_json(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| cfg(ConfigErrorCode::Syntax, "", e.to_string()))
}

fn matrix(node: Node) -> Result<DMatrix<f64>> {
    let rows: Vec<Vec<f64>> = node.parse()?;
    let k = rows.len();
    if k == 0 || rows.iter().any(|r| r.len() != k) {
        return Err(cfg(ConfigErrorCode::InvalidValue, node.path(), "expected a non-empty square matrix"));
    }
    Ok(DMatrix::from_fn(k, k, |i, j| rows[i][j]))
}

pub fn parse_variogram(node: Node) -> Result<Variogram> {
    let m = matrix(node)?;
    node.wrap(Variogram::new(m))
}

/// `{"mode": "scalar"|"independent", "law": ScaleLaw}`, default `S ≡ 1`.
pub fn parse_scale_mode(node: Option<Node>) -> Result<ScaleMode> {
    let Some(node) = node else {
        return Ok(ScaleMode::Scalar(ScaleLaw::constant(1.0)));
    };
    node.only(&["mode", "law"])?;
    let law: ScaleLaw = node.field("law")?;
    node.wrap(law.validate())?;
    let mode: String = node.field_or("mode", "scalar".to_string())?;
    match mode.as_str() {
        "scalar" => Ok(ScaleMode::Scalar(law)),
        "independent" => Ok(ScaleMode::Independent(law)),
        other => Err(cfg(
            ConfigErrorCode::UnknownKind,
            &format!("{}.mode", node.path()),
            format!("unknown scale mode `{other}`"),
        )),
    }
}

/// Array description; `kind_mode` is the mode implied by the experiment.
pub fn parse_array(node: Node, kind_mode: Option<ExtremeMode>, kind_rule: Option<CnRule>) -> Result<ArraySpec> {
    node.only(&["gamma", "sigma", "radial", "scale", "mode", "cn_rule", "gumbel_scaling", "clip_eigenvalues"])?;
    let dependence = match (node.opt("gamma")?, node.opt("sigma")?) {
        (Some(g), None) => Dependence::Schedule(parse_variogram(g.node())?),
        (None, Some(s)) => Dependence::Fixed(matrix(s.node())?),
        (Some(_), Some(_)) => return Err(node.invariant("give exactly one of `gamma` and `sigma`")),
        (None, None) => {
            return Err(cfg(
                ConfigErrorCode::MissingField,
                &format!("{}.gamma", node.path()),
                "one of `gamma` (schedule) or `sigma` (fixed) is required",
            ))
        }
    };
    let k = match &dependence {
        Dependence::Schedule(g) => g.k(),
        Dependence::Fixed(s) => s.nrows(),
    };
    let radial: RadialLaw = node.field_or("radial", RadialLaw::chi(k as f64))?;
    let scale: Option<ScaleLaw> = node.field_or("scale", None)?;
    let mode = match (node.opt("mode")?, kind_mode) {
        (Some(m), implied) => {
            let m: ExtremeMode = m.node().parse()?;
            if implied.is_some_and(|i| i != m) {
                return Err(cfg(
                    ConfigErrorCode::Invariant,
                    &format!("{}.mode", node.path()),
                    format!("mode {m:?} does not match the experiment kind"),
                ));
            }
            m
        }
        (None, Some(i)) => i,
        (None, None) => node.field("mode")?,
    };
    let default_rule = kind_rule.unwrap_or(match mode {
        ExtremeMode::MinAbs => CnRule::Minima,
        ExtremeMode::Max => CnRule::Gumbel,
    });
    let cn_rule: CnRule = node.field_or("cn_rule", default_rule)?;
    if kind_rule.is_some_and(|r| r != cn_rule) {
        return Err(cfg(
            ConfigErrorCode::Invariant,
            &format!("{}.cn_rule", node.path()),
            format!("c_n rule {cn_rule:?} does not match the experiment kind"),
        ));
    }
    let spec = ArraySpec {
        k,
        dependence,
        radial,
        scale,
        mode,
        cn_rule,
        gumbel_scaling: node.field_or("gumbel_scaling", GumbelScaling::Declared)?,
        clip_eigenvalues: node.field_or("clip_eigenvalues", false)?,
    };
    node.wrap(spec.validate())?;
    Ok(spec)
}

/// Gaussian process part of a process experiment.
#[derive(Debug, Clone)]
pub struct ProcessConfig {
    pub kernel: GaussianKernel,
    pub grid: Vec<f64>,
    pub scale: ScaleMode,
    pub br: BrOptions,
    pub pk: PkOptions,
}

pub fn parse_process(node: Node, extra: &[&str]) -> Result<ProcessConfig> {
    let mut allowed = vec!["kernel", "grid", "scale", "n_points", "window", "x_range", "moment_override"];
    allowed.extend_from_slice(extra);
    node.only(&allowed)?;
    let kn = node.req("kernel")?;
    let kn = kn.node();
    kn.only(&["variogram", "variance"])?;
    let kernel = GaussianKernel::new(kn.field("variogram")?, kn.field_or("variance", VarianceFn::Origin)?);
    kn.wrap(kernel.variogram.validate())?;
    let grid: Vec<f64> = node.field("grid")?;
    if grid.is_empty() || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(cfg(
            ConfigErrorCode::Invariant,
            &format!("{}.grid", node.path()),
            "grid must be non-empty and strictly increasing",
        ));
    }
    kn.wrap(crate::samplers::variogram_to_covariance(&kernel, &grid))?;
    let scale_child = node.opt("scale")?;
    let scale = parse_scale_mode(scale_child.as_ref().map(|c| c.node()))?;
    let defaults = PkOptions::default();
    Ok(ProcessConfig {
        kernel,
        grid,
        scale,
        br: BrOptions {
            n_points: node.field_or("n_points", None)?,
        },
        pk: PkOptions {
            window: node.field_or("window", None)?,
            x_range: node.field_or("x_range", defaults.x_range)?,
            moment_override: node.field_or("moment_override", false)?,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    MinConvergence,
    MaxGumbelConvergence,
    MaxWeibullConvergence,
    BrFddCheck,
    PkFddCheck,
    IndependenceCheck,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::MinConvergence,
        ExperimentKind::MaxGumbelConvergence,
        ExperimentKind::MaxWeibullConvergence,
        ExperimentKind::BrFddCheck,
        ExperimentKind::PkFddCheck,
        ExperimentKind::IndependenceCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::MinConvergence => "min-convergence",
            ExperimentKind::MaxGumbelConvergence => "max-gumbel-convergence",
            ExperimentKind::MaxWeibullConvergence => "max-weibull-convergence",
            ExperimentKind::BrFddCheck => "br-fdd-check",
            ExperimentKind::PkFddCheck => "pk-fdd-check",
            ExperimentKind::IndependenceCheck => "independence-check",
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    fn implied(self) -> (Option<ExtremeMode>, Option<CnRule>) {
        match self {
            ExperimentKind::MinConvergence | ExperimentKind::IndependenceCheck => {
                (Some(ExtremeMode::MinAbs), Some(CnRule::Minima))
            }
            ExperimentKind::MaxGumbelConvergence => (Some(ExtremeMode::Max), Some(CnRule::Gumbel)),
            ExperimentKind::MaxWeibullConvergence => (Some(ExtremeMode::Max), Some(CnRule::Weibull)),
            _ => (None, None),
        }
    }

    pub fn is_process(self) -> bool {
        matches!(self, ExperimentKind::BrFddCheck | ExperimentKind::PkFddCheck)
    }
}

#[derive(Debug, Clone)]
pub enum Target {
    Array(ArraySpec),
    Process(ProcessConfig),
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputPaths {
    pub rows: String,
    pub meta: String,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub target: Target,
    /// Block sizes (arrays) or cascade sizes (Brown–Resnick).
    pub n_schedule: Vec<u64>,
    pub reps: usize,
    pub x_grid: Option<Vec<Vec<f64>>>,
    pub seed: u64,
    pub budget: Budget,
    /// Finite-n allowance added to the verdict tolerance.
    pub finite_n_allowance: f64,
    pub output: OutputPaths,
}

impl ExperimentConfig {
    pub fn dim(&self) -> usize {
        match &self.target {
            Target::Array(a) => a.k,
            Target::Process(p) => p.grid.len(),
        }
    }
}

/// Parses and validates an experiment configuration.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let value = parse_json(text)?;
    let root = Node::root(&value);
    root.only(&[
        "kind",
        "array",
        "process",
        "n_schedule",
        "reps",
        "x_grid",
        "seed",
        "budget",
        "finite_n_allowance",
        "output",
    ])?;
    let kind_name: String = root.field("kind")?;
    let kind = ExperimentKind::from_name(&kind_name).ok_or_else(|| {
        cfg(
            ConfigErrorCode::UnknownKind,
            "kind",
            format!(
                "unknown experiment kind `{kind_name}`; expected one of {:?}",
                ExperimentKind::ALL.map(|k| k.name())
            ),
        )
    })?;
    let target = if kind.is_process() {
        if root.opt("array")?.is_some() {
            return Err(cfg(ConfigErrorCode::Invariant, "array", "process experiments take `process`, not `array`"));
        }
        Target::Process(parse_process(root.req("process")?.node(), &[])?)
    } else {
        if root.opt("process")?.is_some() {
            return Err(cfg(ConfigErrorCode::Invariant, "process", "array experiments take `array`, not `process`"));
        }
        let (m, r) = kind.implied();
        let spec = parse_array(root.req("array")?.node(), m, r)?;
        if kind == ExperimentKind::IndependenceCheck && !matches!(spec.dependence, Dependence::Fixed(_)) {
            return Err(cfg(ConfigErrorCode::Invariant, "array.sigma", "independence-check needs a fixed `sigma`"));
        }
        Target::Array(spec)
    };
    let n_schedule: Vec<u64> = match (root.opt("n_schedule")?, kind) {
        (Some(c), _) => c.node().parse()?,
        (None, ExperimentKind::BrFddCheck | ExperimentKind::PkFddCheck) => Vec::new(),
        (None, _) => return Err(cfg(ConfigErrorCode::MissingField, "n_schedule", "required field is missing")),
    };
    if n_schedule.windows(2).any(|w| w[1] <= w[0]) {
        return Err(cfg(ConfigErrorCode::Invariant, "n_schedule", "n_schedule must be strictly increasing"));
    }
    if !kind.is_process() && (n_schedule.is_empty() || n_schedule[0] < 2) {
        return Err(cfg(ConfigErrorCode::Invariant, "n_schedule", "n_schedule needs block sizes >= 2"));
    }
    if kind == ExperimentKind::PkFddCheck && !n_schedule.is_empty() {
        return Err(cfg(ConfigErrorCode::Invariant, "n_schedule", "pk-fdd-check has no schedule; set process.window"));
    }
    let reps: usize = root.field("reps")?;
    if reps < MIN_REPS {
        return Err(cfg(ConfigErrorCode::Invariant, "reps", format!("reps >= {MIN_REPS} required, got {reps}")));
    }
    let x_grid: Option<Vec<Vec<f64>>> = root.field_or("x_grid", None)?;
    if let Some(g) = &x_grid {
        let k = match &target {
            Target::Array(a) => a.k,
            Target::Process(p) => p.grid.len(),
        };
        if g.is_empty() || g.iter().any(|p| p.len() != k) {
            return Err(cfg(ConfigErrorCode::Invariant, "x_grid", format!("x_grid needs points with {k} coordinates")));
        }
    }
    let budget: Budget = root.field_or("budget", Budget::default())?;
    if let Some(b) = root.opt("budget")? {
        b.node().wrap(budget.validate())?;
    }
    let allowance: f64 = root.field_or("finite_n_allowance", 0.01)?;
    if !(allowance >= 0.0) {
        return Err(cfg(ConfigErrorCode::Invariant, "finite_n_allowance", "must be nonnegative"));
    }
    let output = match root.opt("output")? {
        Some(o) => {
            let o = o.node();
            o.only(&["rows", "meta"])?;
            OutputPaths {
                rows: o.field_or("rows", "convergence.csv".to_string())?,
                meta: o.field_or("meta", "convergence.json".to_string())?,
            }
        }
        None => OutputPaths {
            rows: "convergence.csv".into(),
            meta: "convergence.json".into(),
        },
    };
    Ok(ExperimentConfig {
        kind,
        target,
        n_schedule,
        reps,
        x_grid,
        seed: root.field_or("seed", 0)?,
        budget,
        finite_n_allowance: allowance,
        output,
    })
}

/// Anchor rule for the inclusion-exclusion evaluator, default smallest.
pub fn parse_anchor(node: Option<Node>) -> Result<AnchorRule> {
    match node {
        Some(n) => n.parse(),
        None => Ok(AnchorRule::Smallest),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn code(r: Result<ExperimentConfig>) -> (ConfigErrorCode, String) {
        match r {
            Err(Error::Config { code, path, .. }) => (code, path),
            Err(e) => panic!("unexpected error {e}"),
            Ok(_) => panic!("expected an error"),
        }
    }

    const MINIMAL: &str = r#"{
        "kind": "min-convergence",
        "array": {"gamma": [[0, 1], [1, 0]]},
        "n_schedule": [100, 1000],
        "reps": 2000
    }"#;

    #[test]
    fn minimal_config_fills_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.kind, ExperimentKind::MinConvergence);
        let Target::Array(a) = &c.target else { panic!() };
        assert_eq!(a.mode, ExtremeMode::MinAbs);
        assert_eq!(a.cn_rule, CnRule::Minima);
        assert!(matches!(a.radial, RadialLaw::Chi { k } if k == 2.0));
        assert_eq!(c.budget, Budget::default());
        assert_eq!(c.finite_n_allowance, 0.01);
        assert_eq!(c.output.rows, "convergence.csv");
    }

    #[test]
    fn schema_errors_name_their_field() {
        let dec = MINIMAL.replace("[100, 1000]", "[1000, 100]");
        assert_eq!(code(parse_config(&dec)), (ConfigErrorCode::Invariant, "n_schedule".into()));
        let few = MINIMAL.replace("2000", "10");
        match parse_config(&few) {
            Err(Error::Config { code, path, message }) => {
                assert_eq!((code, path.as_str()), (ConfigErrorCode::Invariant, "reps"));
                assert!(message.contains("reps >= 1000"));
            }
            _ => panic!(),
        }
        let kind = MINIMAL.replace("min-convergence", "nope");
        assert_eq!(code(parse_config(&kind)).0, ConfigErrorCode::UnknownKind);
        let missing = MINIMAL.replace(r#""reps": 2000"#, r#""seed": 1"#);
        assert_eq!(code(parse_config(&missing)), (ConfigErrorCode::MissingField, "reps".into()));
        assert_eq!(code(parse_config("{")).0, ConfigErrorCode::Syntax);
        let family = MINIMAL.replace(r#""gamma""#, r#""radial": {"family": "cauchy"}, "gamma""#);
        assert_eq!(code(parse_config(&family)), (ConfigErrorCode::UnknownKind, "array.radial".into()));
        let extra = MINIMAL.replace(r#""reps""#, r#""rep": 1, "reps""#);
        assert_eq!(code(parse_config(&extra)), (ConfigErrorCode::InvalidValue, "rep".into()));
    }

    #[test]
    fn kind_and_array_must_agree() {
        let bad = MINIMAL.replace(r#""gamma""#, r#""mode": "max", "gamma""#);
        assert_eq!(code(parse_config(&bad)), (ConfigErrorCode::Invariant, "array.mode".into()));
        let rule = MINIMAL.replace(r#""gamma""#, r#""cn_rule": "weibull", "gamma""#);
        assert_eq!(code(parse_config(&rule)).0, ConfigErrorCode::Invariant);
        let indep = MINIMAL.replace("min-convergence", "independence-check");
        assert_eq!(code(parse_config(&indep)).1, "array.sigma");
    }

    #[test]
    fn process_config() {
        let text = r#"{
            "kind": "br-fdd-check",
            "process": {"kernel": {"variogram": {"kind": "brownian"}}, "grid": [0, 1]},
            "reps": 5000
        }"#;
        let c = parse_config(text).unwrap();
        let Target::Process(p) = &c.target else { panic!() };
        assert_eq!(p.kernel.variance, VarianceFn::Origin);
        assert!(c.n_schedule.is_empty());
        let bad = text.replace("[0, 1]", "[1, 0]");
        assert_eq!(code(parse_config(&bad)), (ConfigErrorCode::Invariant, "process.grid".into()));
    }
}
