//! Command-line driver: `solve`, `integrate`, `check` and `project`.
//!
//! Exit codes: 0 success, 1 configuration error, 2 iteration budget
//! exhausted, 3 breakdown (including an empty Haugazeau intersection).

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::diagnostics::{
    all_passed, check_c_star, check_field, check_pds_conditions, convergence_report, sample_cap,
    AssumptionReport, CheckConfig,
};
use crate::dynamics::{fmt_f64, integrate_field, solve_field, Mode, StopCriteria, Termination, Trajectory};
use crate::error::{Error, Result};
use crate::geometry::{haugazeau_projection, DEFAULT_GEOM_TOL};
use crate::problems::{builtin, builtin_tags, load_instance, InstanceBody, NamedInstance};
use crate::space::Vector;
use crate::splitting::build_field;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_MAX_ITER: i32 = 2;
pub const EXIT_BREAKDOWN: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "mflow", version, about = "Best-approximation dynamics for primal-dual monotone inclusions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the discrete scheme or an Euler discretization to convergence.
    Solve(RunArgs),
    /// Euler trajectories for a list of step sizes, with an order table.
    Integrate(RunArgs),
    /// Sampled checks of the standing assumptions.
    Check(RunArgs),
    /// Haugazeau projection `Q(w, b, c)` of three JSON arrays.
    Project(ProjectArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    #[default]
    Discrete,
    Euler,
}

#[derive(Debug, Args, Default)]
pub struct RunArgs {
    /// Built-in tag or path to a JSON instance file.
    #[arg(long)]
    pub instance: Option<String>,
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeName>,
    /// Comma-separated Euler step sizes in (0, 1].
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub lambda: Option<Vec<f64>>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub tol_residual: Option<f64>,
    #[arg(long)]
    pub tol_step: Option<f64>,
    /// Geometric tolerance for degenerate cuts.
    #[arg(long)]
    pub geom_tol: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub samples: Option<usize>,
    /// Time horizon for `integrate`.
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProjectArgs {
    /// Anchor `w` as a JSON array.
    pub w: String,
    pub b: String,
    pub c: String,
    #[arg(long)]
    pub geom_tol: Option<f64>,
}

/// Everything a run needs; loaded from `--config` and patched by flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub instance: Option<String>,
    pub mode: ModeName,
    pub lambda: Vec<f64>,
    pub stop: StopCriteria,
    pub geom_tol: f64,
    pub seed: u64,
    pub samples: usize,
    pub horizon: f64,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            instance: None,
            mode: ModeName::Discrete,
            lambda: Vec::new(),
            stop: StopCriteria::default(),
            geom_tol: DEFAULT_GEOM_TOL,
            seed: 0,
            samples: CheckConfig::default().samples,
            horizon: 1.0,
            out: PathBuf::from("mflow-out"),
        }
    }
}

impl RunConfig {
    /// Parses a config file; errors name the line and column.
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| {
            Error::Config(format!("config line {} column {}: {e}", e.line(), e.column()))
        })
    }

    pub fn resolve(args: &RunArgs) -> Result<Self> {
        let mut cfg = match &args.config {
            Some(path) => RunConfig::from_json(&read(path)?)?,
            None => RunConfig::default(),
        };
        if let Some(v) = &args.instance {
            cfg.instance = Some(v.clone());
        }
        if let Some(v) = args.mode {
            cfg.mode = v;
        }
        if let Some(v) = &args.lambda {
            cfg.lambda = v.clone();
        }
        if let Some(v) = args.max_iter {
            cfg.stop.max_iter = v;
        }
        if let Some(v) = args.tol_residual {
            cfg.stop.tol_residual = v;
        }
        if let Some(v) = args.tol_step {
            cfg.stop.tol_step = v;
        }
        if let Some(v) = args.geom_tol {
            cfg.geom_tol = v;
        }
        if let Some(v) = args.seed {
            cfg.seed = v;
        }
        if let Some(v) = args.samples {
            cfg.samples = v;
        }
        if let Some(v) = args.horizon {
            cfg.horizon = v;
        }
        if let Some(v) = &args.out {
            cfg.out = v.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.stop.validate().map_err(|e| Error::Config(e.to_string()))?;
        if let Some(bad) = self.lambda.iter().find(|l| !(**l > 0.0 && **l <= 1.0)) {
            return Err(Error::Config(format!("lambda values must lie in (0, 1], got {bad}")));
        }
        if !(self.geom_tol > 0.0) || self.samples == 0 || !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::Config("geom_tol, samples and horizon must be positive".into()));
        }
        Ok(())
    }

    fn instance(&self) -> Result<NamedInstance> {
        let name = self
            .instance
            .as_deref()
            .ok_or_else(|| Error::Config("no instance given (--instance or config \"instance\")".into()))?;
        let mut inst = resolve_instance(name)?;
        if let InstanceBody::PrimalDual(p) = &mut inst.body {
            *p = p.clone().with_tolerance(self.geom_tol);
        }
        Ok(inst)
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))
}

fn out_dir(cfg: &RunConfig) -> Result<&Path> {
    fs::create_dir_all(&cfg.out)
        .map_err(|e| Error::Config(format!("cannot create {}: {e}", cfg.out.display())))?;
    Ok(&cfg.out)
}

/// A built-in tag, or a path to an instance file.
pub fn resolve_instance(name: &str) -> Result<NamedInstance> {
    if builtin_tags().contains(&name) {
        return builtin(name);
    }
    let path = Path::new(name);
    if path.exists() {
        return load_instance(&read(path)?);
    }
    Err(Error::Config(format!(
        "'{name}' is neither a built-in ({}) nor an existing file",
        builtin_tags().join(", ")
    )))
}

fn termination_code(t: &Termination) -> i32 {
    match t {
        Termination::Residual | Termination::Step | Termination::Horizon => EXIT_OK,
        Termination::MaxIter => EXIT_MAX_ITER,
        Termination::Breakdown { .. } => EXIT_BREAKDOWN,
    }
}

fn error_code(e: &Error) -> i32 {
    match e {
        Error::EmptyIntersection(_) | Error::NonFinite(_) | Error::EmptyHalfSpace => EXIT_BREAKDOWN,
        _ => EXIT_CONFIG,
    }
}

fn csv_bytes(traj: &Trajectory) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    traj.write_csv(&mut buf).map_err(|e| Error::Config(e.to_string()))?;
    Ok(buf)
}

fn to_json<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut s = serde_json::to_vec_pretty(v).map_err(|e| Error::Config(e.to_string()))?;
    s.push(b'\n');
    Ok(s)
}

fn run_mode(cfg: &RunConfig) -> Result<Mode> {
    match cfg.mode {
        ModeName::Discrete => Ok(Mode::Discrete),
        ModeName::Euler => match cfg.lambda.as_slice() {
            [lambda] => Ok(Mode::Euler { lambda: *lambda }),
            _ => Err(Error::Config("euler mode needs exactly one --lambda value".into())),
        },
    }
}

/// Solves and writes `trajectory.csv` and `summary.json`.
pub fn cmd_solve(cfg: &RunConfig) -> Result<i32> {
    let named = cfg.instance()?;
    let inst = named
        .problem()
        .ok_or_else(|| Error::Config(format!("'{}' is a raw field; use integrate", named.tag)))?;
    let mode = run_mode(cfg)?;
    let field = build_field(inst)?;
    let traj = solve_field(&field, &inst.x0().flatten(), mode, cfg.stop, named.cap.as_ref())?;
    let dir = out_dir(cfg)?;
    write(&dir.join("trajectory.csv"), &csv_bytes(&traj)?)?;
    let last = traj.last();
    let convergence = match &named.oracle {
        Some(z) => Some(convergence_report(&traj, &named.w_bar(), z, 1e-4)?),
        None => None,
    };
    let summary = json!({
        "instance": named.tag,
        "mode": mode,
        "termination": traj.termination,
        "iterations": last.iteration,
        "final_point": last.x,
        "final_residual": last.residual,
        "final_error": named.oracle.as_ref().map(|z| last.x.dist(z)).transpose()?,
        "convergence": convergence,
    });
    write(&dir.join("summary.json"), &to_json(&summary)?)?;
    println!(
        "{}: {:?} after {} iterations, residual {}",
        named.tag,
        traj.termination,
        last.iteration,
        fmt_f64(last.residual)
    );
    Ok(termination_code(&traj.termination))
}

#[derive(Debug, Clone, Serialize)]
pub struct OrderRow {
    pub lambda: f64,
    pub steps: usize,
    /// Largest node error against the closed-form reference, if any.
    pub sup_error: Option<f64>,
    /// `sup_error` divided by the previous row's.
    pub ratio: Option<f64>,
    pub termination: Termination,
}

fn lambda_file(lambda: f64) -> String {
    format!("trajectory_lambda_{lambda}.csv")
}

/// One Euler trajectory per step size, run concurrently, plus `order.csv`.
pub fn cmd_integrate(cfg: &RunConfig) -> Result<i32> {
    if cfg.lambda.is_empty() {
        return Err(Error::Config("integrate needs at least one --lambda value".into()));
    }
    let named = cfg.instance()?;
    let runs: Vec<Result<Trajectory>> = std::thread::scope(|scope| {
        let handles: Vec<_> = cfg
            .lambda
            .iter()
            .map(|&lambda| {
                let named = &named;
                scope.spawn(move || integrate_one(named, cfg, lambda))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("integration thread panicked")).collect()
    });
    let dir = out_dir(cfg)?;
    let mut rows: Vec<OrderRow> = Vec::new();
    let mut code = EXIT_OK;
    for (&lambda, run) in cfg.lambda.iter().zip(runs) {
        let traj = run?;
        write(&dir.join(lambda_file(lambda)), &csv_bytes(&traj)?)?;
        let sup_error = match named.references.first() {
            Some(reference) => Some(
                traj.records
                    .iter()
                    .map(|r| r.x.dist(&(reference.eval)(r.time)))
                    .collect::<Result<Vec<_>>>()?
                    .into_iter()
                    .fold(0.0, f64::max),
            ),
            None => None,
        };
        let ratio = match (rows.last().and_then(|r| r.sup_error), sup_error) {
            (Some(prev), Some(cur)) if prev > 0.0 => Some(cur / prev),
            _ => None,
        };
        code = code.max(termination_code(&traj.termination));
        rows.push(OrderRow { lambda, steps: traj.iterations(), sup_error, ratio, termination: traj.termination });
    }
    let mut table = String::from("lambda,steps,sup_error,ratio\n");
    println!("{:>10} {:>8} {:>24} {:>10}", "lambda", "steps", "sup_error", "ratio");
    for r in &rows {
        let err = r.sup_error.map(fmt_f64).unwrap_or_else(|| "NaN".into());
        let ratio = r.ratio.map(fmt_f64).unwrap_or_else(|| "NaN".into());
        table.push_str(&format!("{},{},{err},{ratio}\n", r.lambda, r.steps));
        println!(
            "{:>10} {:>8} {:>24} {:>10}",
            r.lambda,
            r.steps,
            err,
            r.ratio.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into())
        );
    }
    write(&dir.join("order.csv"), table.as_bytes())?;
    Ok(code)
}

fn integrate_one(named: &NamedInstance, cfg: &RunConfig, lambda: f64) -> Result<Trajectory> {
    info!("integrating {} with lambda = {lambda}", named.tag);
    match &named.body {
        InstanceBody::Field { field, x0, w_bar } => {
            integrate_field(field.as_ref(), x0, lambda, cfg.horizon, w_bar, named.cap.as_ref())
        }
        InstanceBody::PrimalDual(inst) => {
            let field = build_field(inst)?;
            solve_field(&field, &inst.x0().flatten(), Mode::Euler { lambda }, cfg.stop, named.cap.as_ref())
        }
    }
}

/// Assumption checks; writes `check.json` and prints a table.
pub fn cmd_check(cfg: &RunConfig) -> Result<i32> {
    let named = cfg.instance()?;
    let cap = named
        .cap
        .clone()
        .ok_or_else(|| Error::Config(format!("'{}' has no oracle, so no cap to sample", named.tag)))?;
    let check = CheckConfig { samples: cfg.samples, seed: cfg.seed, ..CheckConfig::default() };
    let anchors = [named.x0(), cap.z_bar().clone()];
    let field = named.field()?;
    let mut reports = check_field(field.as_ref(), &cap, &anchors, &check)?;
    if let (Some(q), Some(inst)) = (named.q_field()?, named.problem()) {
        let samples = sample_cap(&cap, check.samples, check.seed, &anchors)?;
        reports.extend(check_pds_conditions(&q, &cap, &samples, check.tol));
        let traj = solve_field(&q, &inst.x0().flatten(), Mode::Discrete, cfg.stop, Some(&cap))?;
        let points: Vec<Vector> = traj.points().cloned().collect();
        reports.push(check_c_star(&q, &cap, &points, check.tol));
    }
    let passed = all_passed(&reports);
    print_reports(&named.tag, &reports);
    let dir = out_dir(cfg)?;
    let doc = json!({
        "instance": named.tag,
        "seed": check.seed,
        "samples": check.samples,
        "passed": passed,
        "reports": reports,
    });
    write(&dir.join("check.json"), &to_json(&doc)?)?;
    Ok(if passed { EXIT_OK } else { EXIT_CONFIG })
}

fn print_reports(tag: &str, reports: &[AssumptionReport]) {
    println!("{tag}: sampled assumption checks");
    for r in reports {
        let verdict = match (r.passed, r.gating) {
            (true, _) => "PASS",
            (false, true) => "FAIL",
            (false, false) => "INFO",
        };
        let witness = r
            .witness
            .as_ref()
            .map(|w| format!(" witness={:?}", w.as_slice()))
            .unwrap_or_default();
        println!(
            "  {:<3} {verdict}  worst={:+.3e} tol={:.1e} n={}{witness}",
            r.name, r.worst_violation, r.tolerance, r.sample_count
        );
    }
}

fn parse_vector(name: &str, text: &str) -> Result<Vector> {
    serde_json::from_str(text)
        .map_err(|e| Error::Config(format!("{name}: column {}: {e}", e.column())))
}

/// Prints `{"point": [...], "case": "i" | "ii" | "iii"}`.
pub fn cmd_project(args: &ProjectArgs) -> Result<i32> {
    let w = parse_vector("w", &args.w)?;
    let b = parse_vector("b", &args.b)?;
    let c = parse_vector("c", &args.c)?;
    let tol = args.geom_tol.unwrap_or(DEFAULT_GEOM_TOL);
    let p = haugazeau_projection(&w, &b, &c, tol)?;
    println!("{}", json!({ "point": p.point, "case": p.case }));
    Ok(EXIT_OK)
}

/// Installs the logger; `MFLOW_LOG` sets the filter, default `warn`.
pub fn init_logging() {
    let env = env_logger::Env::new().filter_or("MFLOW_LOG", "warn");
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}

/// Parses arguments and runs a command, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Project(args) => cmd_project(args),
        Command::Solve(args) => RunConfig::resolve(args).and_then(|c| cmd_solve(&c)),
        Command::Integrate(args) => RunConfig::resolve(args).and_then(|c| cmd_integrate(&c)),
        Command::Check(args) => RunConfig::resolve(args).and_then(|c| cmd_check(&c)),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            error_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults_and_overrides() {
        let cfg = RunConfig::from_json(r#"{"instance": "quadratic1d", "stop": {"max_iter": 5}}"#).unwrap();
        assert_eq!(cfg.stop.max_iter, 5);
        assert_eq!(cfg.stop.tol_residual, 1e-9);
        let args = RunArgs { max_iter: Some(7), lambda: Some(vec![0.5]), ..Default::default() };
        let resolved = RunConfig::resolve(&RunArgs { instance: Some("quadratic1d".into()), ..args }).unwrap();
        assert_eq!(resolved.stop.max_iter, 7);
        assert_eq!(resolved.lambda, vec![0.5]);
    }

    #[test]
    fn config_errors_carry_position() {
        let err = RunConfig::from_json("{\n  \"instance\": \"x\",\n  \"bogus\": 1\n}").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }

    #[test]
    fn invalid_lambda_rejected() {
        let args = RunArgs { lambda: Some(vec![0.5, 1.5]), ..Default::default() };
        assert!(matches!(RunConfig::resolve(&args), Err(Error::Config(_))));
    }

    #[test]
    fn unknown_instance() {
        assert!(matches!(resolve_instance("no_such_thing"), Err(Error::Config(_))));
    }
}
