//! Subcommand runners behind the `extremal-arrays` binary.
//!
//! Every runner reads a JSON config, writes one CSV file and one JSON
//! metadata file into the output directory and reports whether the run
//! passed (only `convergence` can fail on statistical grounds).

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use super::config::{parse_anchor, parse_array, parse_config, parse_json, parse_process, parse_scale_mode, parse_variogram, Node};
use super::convergence::{run_convergence_experiment, ConvergenceReport};
use crate::arrays::simulate_block_extremes;
use crate::error::{ConfigErrorCode, Error, Result};
use crate::limits::{
    g_gamma_cdf, hr_bivariate_closed_form, Budget, HrEvaluator, HrSpec, IeEvaluator, IeSpec, LimitEstimate, MinEvaluator,
    MinLimitSpec, PkEvaluator, PkSpec, WeibullEvaluator, WeibullSpec,
};
use crate::norming::{gumbel_norming, min_norming, weibull_norming, CnRule, MarginalLaw, NormingPair};
use crate::processes::{simulate_brown_resnick, simulate_penrose_kabluchko, PathSet};
use crate::rng::StreamKey;
use crate::samplers::{RadialLaw, ScaleLaw};

/// Version of every CSV layout written by the CLI.
pub const CSV_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Norming,
    SimulateArray,
    EvalLimit,
    SimulateBr,
    SimulatePk,
    Convergence,
}

impl Subcommand {
    pub const ALL: [Subcommand; 6] = [
        Subcommand::Norming,
        Subcommand::SimulateArray,
        Subcommand::EvalLimit,
        Subcommand::SimulateBr,
        Subcommand::SimulatePk,
        Subcommand::Convergence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Norming => "norming",
            Subcommand::SimulateArray => "simulate-array",
            Subcommand::EvalLimit => "eval-limit",
            Subcommand::SimulateBr => "simulate-br",
            Subcommand::SimulatePk => "simulate-pk",
            Subcommand::Convergence => "convergence",
        }
    }

    fn stem(self) -> &'static str {
        match self {
            Subcommand::Norming => "norming",
            Subcommand::SimulateArray => "extremes",
            Subcommand::EvalLimit => "limit",
            Subcommand::SimulateBr => "br_paths",
            Subcommand::SimulatePk => "pk_paths",
            Subcommand::Convergence => "convergence",
        }
    }
}

/// Options shared by every subcommand.
#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Overrides the config's `seed` when given.
    pub seed: Option<u64>,
    pub out: PathBuf,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub pass: bool,
    pub csv: PathBuf,
    pub meta: PathBuf,
}

/// Runs `cmd` on the config text.
pub fn run(cmd: Subcommand, config_text: &str, opts: &RunOptions) -> Result<RunOutcome> {
    fs::create_dir_all(&opts.out)?;
    if cmd == Subcommand::Convergence {
        let mut config = parse_config(config_text)?;
        if let Some(s) = opts.seed {
            config.seed = s;
        }
        let report = run_convergence_experiment(&config)?;
        let csv = opts.out.join(&config.output.rows);
        let meta = opts.out.join(&config.output.meta);
        write_convergence(&report, &csv, &meta, &parse_json(config_text)?)?;
        return Ok(RunOutcome {
            pass: report.pass,
            csv,
            meta,
        });
    }
    let value = parse_json(config_text)?;
    let root = Node::root(&value);
    let seed = match opts.seed {
        Some(s) => s,
        None => root.field_or("seed", 0u64)?,
    };
    let csv = opts.out.join(format!("{}.csv", cmd.stem()));
    let meta = opts.out.join(format!("{}.json", cmd.stem()));
    let table = match cmd {
        Subcommand::Norming => norming(root)?,
        Subcommand::SimulateArray => simulate_array(root, seed)?,
        Subcommand::EvalLimit => eval_limit(root, seed)?,
        Subcommand::SimulateBr => simulate_br(root, seed)?,
        Subcommand::SimulatePk => simulate_pk(root, seed)?,
        Subcommand::Convergence => unreachable!(),
    };
    write_csv(&csv, &table.header, &table.rows)?;
    let meta_value = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "csv_version": CSV_VERSION,
        "subcommand": cmd.name(),
        "seed": seed,
        "config": value,
        "result": table.meta,
    });
    write_json(&meta, &meta_value)?;
    Ok(RunOutcome { pass: true, csv, meta })
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
    meta: Value,
}

fn num(v: f64) -> String {
    format!("{v:?}")
}

fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

fn write_json(path: &Path, v: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(v)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn write_convergence(report: &ConvergenceReport, csv: &Path, meta: &Path, config: &Value) -> Result<()> {
    let header: Vec<String> = [
        "n",
        "reps",
        "sup_distance",
        "dkw_radius",
        "limit_mc_std_err",
        "limit_trunc_bound",
        "tolerance",
        "pass",
        "a_n",
        "b_n",
        "c_n",
        "sigma_min_eigenvalue",
        "clipped",
        "flag_rate",
    ]
    .map(String::from)
    .to_vec();
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            vec![
                r.n.to_string(),
                r.reps.to_string(),
                num(r.sup_distance),
                num(r.dkw_radius),
                num(r.limit_mc_std_err),
                num(r.limit_trunc_bound),
                num(r.tolerance),
                r.pass.to_string(),
                num(r.a_n),
                num(r.b_n),
                num(r.c_n),
                num(r.sigma_min_eigenvalue),
                r.clipped.to_string(),
                num(r.flag_rate),
            ]
        })
        .collect();
    write_csv(csv, &header, &rows)?;
    let v = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "csv_version": CSV_VERSION,
        "subcommand": "convergence",
        "seed": report.seed,
        "config": config,
        "report": report,
    });
    write_json(meta, &v)
}

fn parse_marginal(node: Node) -> Result<MarginalLaw> {
    node.only(&["family", "radial", "k", "scale", "scaling"])?;
    let family: String = node.field("family")?;
    let law = match family.as_str() {
        "normal" => MarginalLaw::normal(),
        "uniform" => MarginalLaw::uniform(),
        "radial" => {
            let h: RadialLaw = node.field("radial")?;
            let k: usize = node.field("k")?;
            node.wrap(MarginalLaw::from_radial(&h, k))?
        }
        "scale_mixture" => {
            let s: ScaleLaw = node.field("scale")?;
            node.wrap(MarginalLaw::scale_mixture(s))?
        }
        other => {
            return Err(Error::Config {
                code: ConfigErrorCode::UnknownKind,
                path: format!("{}.family", node.path()),
                message: format!("unknown marginal family `{other}`"),
            })
        }
    };
    let scaling: String = node.field_or("scaling", "declared".to_string())?;
    match scaling.as_str() {
        "declared" => Ok(law),
        "hazard" => Ok(law.with_hazard_scaling()),
        other => Err(Error::Config {
            code: ConfigErrorCode::UnknownKind,
            path: format!("{}.scaling", node.path()),
            message: format!("unknown scaling `{other}`"),
        }),
    }
}

fn norming(root: Node) -> Result<Table> {
    root.only(&["law", "rule", "n", "seed"])?;
    let law = parse_marginal(root.req("law")?.node())?;
    let rule: CnRule = root.field("rule")?;
    let ns: Vec<u64> = root.field("n")?;
    let pairs: Vec<NormingPair> = ns
        .iter()
        .map(|&n| match rule {
            CnRule::Minima => min_norming(&law, n),
            CnRule::Gumbel => gumbel_norming(&law, n),
            CnRule::Weibull => weibull_norming(&law, n),
        })
        .collect::<Result<_>>()?;
    let rows = pairs
        .iter()
        .map(|p| vec![p.n.to_string(), num(p.a_n), num(p.b_n), num(p.c_n)])
        .collect();
    Ok(Table {
        header: ["n", "a_n", "b_n", "c_n"].map(String::from).to_vec(),
        rows,
        meta: json!({ "rule": rule, "law": format!("{:?}", law.source) }),
    })
}

fn simulate_array(root: Node, seed: u64) -> Result<Table> {
    root.only(&["array", "n", "reps", "seed"])?;
    let spec = parse_array(root.req("array")?.node(), None, None)?;
    let n: u64 = root.field("n")?;
    let reps: usize = root.field("reps")?;
    let ex = simulate_block_extremes(&spec, n, reps, StreamKey::new(seed))?;
    let mut header = vec!["rep".to_string()];
    header.extend((1..=spec.k).map(|j| format!("x{j}")));
    let rows = (0..ex.reps)
        .map(|i| {
            let mut r = vec![i.to_string()];
            r.extend(ex.row(i).iter().map(|v| num(*v)));
            r
        })
        .collect();
    Ok(Table {
        header,
        rows,
        meta: json!({
            "k": ex.k,
            "n": ex.n,
            "reps": ex.reps,
            "norming": ex.norming,
            "sigma_min_eigenvalue": ex.sigma_min_eigenvalue,
            "clipped": ex.clipped,
            "mode": spec.mode,
        }),
    })
}

fn eval_limit(root: Node, seed: u64) -> Result<Table> {
    root.only(&["law", "params", "points", "budget", "seed"])?;
    let law: String = root.field("law")?;
    let params = root.req("params")?;
    let p = params.node();
    let points: Vec<Vec<f64>> = root.field("points")?;
    let budget: Budget = root.field_or("budget", Budget::default())?;
    let budget = if root.opt("budget")?.is_some_and(|b| b.node().opt("seed").ok().flatten().is_some()) {
        budget
    } else {
        budget.with_seed(seed)
    };
    root.wrap(budget.validate())?;
    let at = |i: usize| format!("points[{i}]");
    let values: Vec<LimitEstimate> = match law.as_str() {
        "g_gamma" => {
            p.only(&["index"])?;
            let g: f64 = p.field("index")?;
            points
                .iter()
                .map(|x| match x.as_slice() {
                    [v] => g_gamma_cdf(g, *v).map(LimitEstimate::exact),
                    _ => Err(Error::InvalidDimension("g_gamma points have one coordinate".into())),
                })
                .collect::<Result<_>>()?
        }
        "min" => {
            p.only(&["gamma", "index", "radial", "z_radial", "theta"])?;
            let g = parse_variogram(p.req("gamma")?.node())?;
            let k = g.k();
            let index: f64 = p.field_or("index", 1.0)?;
            let theta: Option<Vec<f64>> = p.field_or("theta", None)?;
            let spec = match p.opt("z_radial")? {
                Some(z) => p.wrap(MinLimitSpec::new(g, index, z.node().parse()?, theta))?,
                None => {
                    let h: RadialLaw = p.field_or("radial", RadialLaw::chi(k as f64))?;
                    let s = p.wrap(MinLimitSpec::for_array_radial(g, index, &h))?;
                    match theta {
                        Some(t) => p.wrap(MinLimitSpec::new(s.gamma, index, s.radial, Some(t)))?,
                        None => s,
                    }
                }
            };
            let ev = p.wrap(MinEvaluator::new(spec, budget))?;
            points.iter().map(|x| ev.survival(x)).collect::<Result<_>>()?
        }
        "min_ie" => {
            p.only(&["gamma", "index", "radial", "anchor"])?;
            let g = parse_variogram(p.req("gamma")?.node())?;
            let k = g.k();
            let h: RadialLaw = p.field_or("radial", RadialLaw::chi(k as f64))?;
            let anchor_child = p.opt("anchor")?;
            let anchor = parse_anchor(anchor_child.as_ref().map(|c| c.node()))?;
            let spec = p.wrap(IeSpec::new(g, p.field_or("index", 1.0)?, h))?.with_anchor(anchor);
            let ev = p.wrap(IeEvaluator::new(spec, budget))?;
            points.iter().map(|x| ev.survival(x)).collect::<Result<_>>()?
        }
        "hr" => {
            p.only(&["gamma", "theta", "centered"])?;
            let g = parse_variogram(p.req("gamma")?.node())?;
            let spec = if p.field_or("centered", false)? {
                p.wrap(HrSpec::centered(g))?
            } else {
                p.wrap(HrSpec::new(g, p.field_or("theta", None)?))?
            };
            let ev = p.wrap(HrEvaluator::new(spec, budget))?;
            points.iter().map(|x| ev.cdf(x)).collect::<Result<_>>()?
        }
        "hr2" => {
            p.only(&["gamma12"])?;
            let g12: f64 = p.field("gamma12")?;
            points
                .iter()
                .enumerate()
                .map(|(i, x)| match x.as_slice() {
                    [a, b] => hr_bivariate_closed_form(g12, *a, *b).map(LimitEstimate::exact),
                    _ => Err(Error::Config {
                        code: ConfigErrorCode::InvalidValue,
                        path: at(i),
                        message: "hr2 points have two coordinates".into(),
                    }),
                })
                .collect::<Result<_>>()?
        }
        "weibull" => {
            p.only(&["gamma", "alpha", "theta"])?;
            let g = parse_variogram(p.req("gamma")?.node())?;
            let spec = p.wrap(WeibullSpec::new(g, p.field("alpha")?, p.field_or("theta", None)?))?;
            let ev = p.wrap(WeibullEvaluator::new(spec, budget))?;
            points.iter().map(|x| ev.cdf(x)).collect::<Result<_>>()?
        }
        "pk" => {
            p.only(&["gamma", "scale", "grid"])?;
            let g = parse_variogram(p.req("gamma")?.node())?;
            let scale_child = p.opt("scale")?;
            let scale = parse_scale_mode(scale_child.as_ref().map(|c| c.node()))?;
            let spec = match p.opt("grid")? {
                Some(grid) => p.wrap(PkSpec::with_grid(g, grid.node().parse()?, scale))?,
                None => p.wrap(PkSpec::new(g, scale))?,
            };
            let ev = p.wrap(PkEvaluator::new(spec, budget))?;
            points.iter().map(|x| ev.survival(x)).collect::<Result<_>>()?
        }
        other => {
            return Err(Error::Config {
                code: ConfigErrorCode::UnknownKind,
                path: "law".into(),
                message: format!("unknown limit law `{other}`; expected g_gamma, min, min_ie, hr, hr2, weibull or pk"),
            })
        }
    };
    let width = points.iter().map(Vec::len).max().unwrap_or(0);
    let mut header = vec!["point".to_string()];
    header.extend((1..=width).map(|j| format!("x{j}")));
    header.extend(["value", "mc_std_err", "quad_trunc_bound", "node_count", "mc_paths"].map(String::from));
    let rows = points
        .iter()
        .zip(&values)
        .enumerate()
        .map(|(i, (x, e))| {
            let mut r = vec![i.to_string()];
            r.extend((0..width).map(|j| x.get(j).map(|v| num(*v)).unwrap_or_default()));
            r.extend([
                num(e.value),
                num(e.mc_std_err),
                num(e.quad_trunc_bound),
                e.node_count.to_string(),
                e.mc_paths.to_string(),
            ]);
            r
        })
        .collect();
    Ok(Table {
        header,
        rows,
        meta: json!({ "law": law, "budget": budget }),
    })
}

fn path_table(paths: &PathSet) -> Table {
    let k = paths.grid.len();
    let mut rows = Vec::with_capacity(paths.values.len());
    for i in 0..paths.len() {
        for j in 0..k {
            rows.push(vec![
                i.to_string(),
                num(paths.grid[j]),
                num(paths.values[i * k + j]),
                paths.flags[i * k + j].to_string(),
            ]);
        }
    }
    Table {
        header: ["path", "t", "value", "flagged"].map(String::from).to_vec(),
        rows,
        meta: json!({
            "grid": paths.grid,
            "paths": paths.len(),
            "truncation": paths.truncation,
            "flag_rate": paths.flag_rate(),
        }),
    }
}

fn simulate_br(root: Node, seed: u64) -> Result<Table> {
    let reps: usize = root.field("reps")?;
    let proc = parse_process(root, &["reps", "seed"])?;
    Ok(path_table(&simulate_brown_resnick(
        &proc.kernel,
        &proc.grid,
        reps,
        proc.br,
        StreamKey::new(seed),
    )?))
}

fn simulate_pk(root: Node, seed: u64) -> Result<Table> {
    let reps: usize = root.field("reps")?;
    let proc = parse_process(root, &["reps", "seed"])?;
    Ok(path_table(&simulate_penrose_kabluchko(
        &proc.kernel,
        proc.scale,
        &proc.grid,
        reps,
        proc.pk,
        StreamKey::new(seed),
    )?))
}

/// One-line description of an error for stderr.
pub fn describe(e: &Error) -> String {
    match e {
        Error::Config { code, path, message } => format!("{} at `{path}`: {message}", code.as_str()),
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(dir: &Path) -> RunOptions {
        RunOptions {
            seed: Some(7),
            out: dir.to_path_buf(),
        }
    }

    #[test]
    fn norming_table() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = r#"{"law": {"family": "normal"}, "rule": "gumbel", "n": [100, 1000]}"#;
        let out = run(Subcommand::Norming, cfg, &opts(dir.path())).unwrap();
        let text = fs::read_to_string(out.csv).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "n,a_n,b_n,c_n");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("100,0.4"));
    }

    #[test]
    fn eval_limit_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = r#"{"law": "hr2", "params": {"gamma12": 1}, "points": [[0, 0], [1, -1]]}"#;
        let out = run(Subcommand::EvalLimit, cfg, &opts(dir.path())).unwrap();
        let text = fs::read_to_string(out.csv).unwrap();
        assert!(text.starts_with("point,x1,x2,value,mc_std_err"));
        let bad = r#"{"law": "cauchy", "params": {}, "points": []}"#;
        match run(Subcommand::EvalLimit, bad, &opts(dir.path())) {
            Err(e @ Error::Config { .. }) => assert!(describe(&e).starts_with("E_UNKNOWN_KIND")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn simulations_are_reproducible() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let cfg = r#"{"kernel": {"variogram": {"kind": "brownian"}}, "grid": [0, 0.5, 1], "reps": 50}"#;
        let ra = run(Subcommand::SimulateBr, cfg, &opts(a.path())).unwrap();
        let rb = run(Subcommand::SimulateBr, cfg, &opts(b.path())).unwrap();
        assert_eq!(fs::read(&ra.csv).unwrap(), fs::read(&rb.csv).unwrap());
        assert_eq!(fs::read(&ra.meta).unwrap(), fs::read(&rb.meta).unwrap());
        let arr = r#"{"array": {"gamma": [[0, 1], [1, 0]], "mode": "min_abs"}, "n": 100, "reps": 20}"#;
        let r = run(Subcommand::SimulateArray, arr, &opts(a.path())).unwrap();
        assert_eq!(fs::read_to_string(r.csv).unwrap().lines().count(), 21);
    }
}
