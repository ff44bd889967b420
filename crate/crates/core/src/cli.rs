//! Command-line front end.
//!
//! Exit codes: 0 success, 1 computational failure, 2 usage or configuration
//! error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::bounds::{
    aw_bound, optimal_trial, vp1_upper, vp2_lower, vp4_lower, vp4s_value, zfk_bound, BoundResult, BoundsError, Principle,
    SForm, TrialFunction, TrialImage, TrialRole,
};
use crate::evolve::{evolve, spreading_speed, write_snapshots_csv, write_track_csv, EvolveParams, InitialCondition};
use crate::numerics::fmt12;
use crate::optimize::{bound_gap, optimize_bound, FamilyKind, TrialFamily};
use crate::oracle::{front_profile, minimal_speed, PhasePlaneSolution};
use crate::reaction::{make_reaction, ReactionError, ReactionSpec, ReactionTerm};
use crate::verify::{full_report, ReportOptions};

pub const DEFAULT_C_TOL: f64 = 1e-4;
pub const DEFAULT_QUAD_REL_TOL: f64 = 1e-8;
pub const DEFAULT_BUDGET: usize = 200;
pub const DEFAULT_WINDOW: f64 = 1.0 / 3.0;
const PROFILE_DELTA: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Compute(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Compute(_) => 1,
        }
    }
}

fn usage<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Usage(e.to_string())
}

fn compute<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Compute(e.to_string())
}

impl From<ReactionError> for CliError {
    fn from(e: ReactionError) -> Self {
        CliError::Usage(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandKind {
    Speed,
    Bound,
    Optimize,
    Verify,
    Evolve,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub c_tol: f64,
    pub quad_rel_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { c_tol: DEFAULT_C_TOL, quad_rel_tol: DEFAULT_QUAD_REL_TOL }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Text,
    Json,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub format: OutputFormat,
    /// Main file artifact: `u,p` CSV, report JSON or front-track CSV.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    /// `z,u,uz` profile CSV (`speed`) or `t,x,u` snapshots (`evolve`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extra_path: Option<PathBuf>,
}

/// Everything a run needs; `--config` files use this schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: CommandKind,
    pub reaction: ReactionSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub principle: Option<Principle>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trial: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilyKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evolve: Option<EvolveParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_fraction: Option<f64>,
    #[serde(default)]
    pub output: OutputSpec,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Usage(format!("invalid config: {e}")))
    }

    /// Pretty JSON with fields in declaration order.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

#[derive(Parser, Debug)]
#[command(name = "frontspeed", version, about = "Minimal front speeds of reaction-diffusion equations and variational bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// Reaction term, e.g. `fisher`, `hadeler_rothe(4)`, `bistable_cubic(a=0.3)`, `poly:1,-1`.
    #[arg(long)]
    reaction: Option<String>,
    /// JSON file with the run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Wrap the output in a JSON object.
    #[arg(long)]
    json: bool,
    #[arg(long)]
    c_tol: Option<f64>,
    #[arg(long)]
    quad_rel_tol: Option<f64>,
    /// Output file of the command's main artifact.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Minimal speed and decay branch.
    Speed {
        #[command(flatten)]
        common: Common,
        /// Write the profile as `z,u,uz` CSV.
        #[arg(long)]
        profile_output: Option<PathBuf>,
    },
    /// One bound for one trial function.
    Bound {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        principle: Option<String>,
        /// Trial, e.g. `g=1-u`, `g=((1-u)/u)^0.5`, `alpha=u`, `g=optimal`, `alpha=p`.
        #[arg(long)]
        trial: Option<String>,
    },
    /// Tightest bounds over the trial families.
    Optimize {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        family: Option<String>,
        #[arg(long)]
        principle: Option<String>,
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Full verification report as JSON.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// PDE run with front tracking.
    Evolve {
        #[command(flatten)]
        common: Common,
        /// `step` or `compact_bump`.
        #[arg(long)]
        ic: Option<String>,
        #[arg(long)]
        length: Option<f64>,
        #[arg(long)]
        dx: Option<f64>,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        width: Option<f64>,
        /// Final fraction of the run used for the speed fit.
        #[arg(long)]
        window: Option<f64>,
        /// Write snapshots as `t,x,u` CSV.
        #[arg(long)]
        snapshots: Option<PathBuf>,
    },
}

fn load_config(common: &Common, kind: CommandKind) -> Result<RunConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
            let cfg = RunConfig::from_json(&text)?;
            if cfg.command != kind {
                return Err(usage(format!("config is for `{:?}`, not this subcommand", cfg.command).to_lowercase()));
            }
            cfg
        }
        None => {
            let reaction = common.reaction.as_deref().ok_or_else(|| usage("--reaction or --config is required"))?;
            RunConfig {
                command: kind,
                reaction: reaction.parse()?,
                tolerances: Tolerances::default(),
                principle: None,
                trial: None,
                family: None,
                budget: None,
                jobs: None,
                evolve: None,
                window_fraction: None,
                output: OutputSpec::default(),
            }
        }
    };
    if common.config.is_some() {
        if let Some(r) = &common.reaction {
            cfg.reaction = r.parse()?;
        }
    }
    if let Some(v) = common.c_tol {
        cfg.tolerances.c_tol = v;
    }
    if let Some(v) = common.quad_rel_tol {
        cfg.tolerances.quad_rel_tol = v;
    }
    if common.json {
        cfg.output.format = OutputFormat::Json;
    }
    if let Some(p) = &common.output {
        cfg.output.path = Some(p.clone());
    }
    let t = cfg.tolerances;
    if !(t.c_tol > 0.0 && t.quad_rel_tol > 0.0 && t.quad_rel_tol < 1.0) {
        return Err(usage("tolerances must be positive"));
    }
    Ok(cfg)
}

fn parse_principle(s: &str) -> Result<Principle, CliError> {
    s.parse().map_err(|_| usage(format!("unknown principle `{s}` (expected VP1, VP2, VP4, VP4s, ZFK or AW)")))
}

/// Builds the configuration implied by `argv` without running it.
pub fn parse_config<I, T>(argv: I) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| usage(e.to_string()))?;
    config_from(cli.command)
}

fn config_from(command: Command) -> Result<RunConfig, CliError> {
    Ok(match command {
        Command::Speed { common, profile_output } => {
            let mut cfg = load_config(&common, CommandKind::Speed)?;
            if profile_output.is_some() {
                cfg.output.extra_path = profile_output;
            }
            cfg
        }
        Command::Bound { common, principle, trial } => {
            let mut cfg = load_config(&common, CommandKind::Bound)?;
            if let Some(p) = principle {
                cfg.principle = Some(parse_principle(&p)?);
            }
            if trial.is_some() {
                cfg.trial = trial;
            }
            cfg
        }
        Command::Optimize { common, family, principle, budget, jobs } => {
            let mut cfg = load_config(&common, CommandKind::Optimize)?;
            if let Some(f) = family {
                cfg.family = Some(f.parse().map_err(|_| usage(format!("unknown family `{f}`")))?);
            }
            if let Some(p) = principle {
                cfg.principle = Some(parse_principle(&p)?);
            }
            cfg.budget = budget.or(cfg.budget);
            cfg.jobs = jobs.or(cfg.jobs);
            cfg
        }
        Command::Verify { common, jobs } => {
            let mut cfg = load_config(&common, CommandKind::Verify)?;
            cfg.jobs = jobs.or(cfg.jobs);
            cfg
        }
        Command::Evolve { common, ic, length, dx, t_end, width, window, snapshots } => {
            let mut cfg = load_config(&common, CommandKind::Evolve)?;
            let mut p = cfg.evolve.unwrap_or_default();
            if let Some(ic) = ic {
                p.ic = ic.parse::<InitialCondition>().map_err(usage)?;
            }
            p.length = length.unwrap_or(p.length);
            p.dx = dx.unwrap_or(p.dx);
            p.t_end = t_end.unwrap_or(p.t_end);
            p.width = width.unwrap_or(p.width);
            cfg.evolve = Some(p);
            cfg.window_fraction = window.or(cfg.window_fraction);
            if snapshots.is_some() {
                cfg.output.extra_path = snapshots;
            }
            cfg
        }
    })
}

/// Rounds every float in `v` to 12 significant digits.
fn round_numbers(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(x) = n.as_f64().and_then(|x| fmt12(x).parse::<f64>().ok()) {
                if let Some(r) = serde_json::Number::from_f64(x) {
                    *n = r;
                }
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_numbers),
        Value::Object(o) => o.values_mut().for_each(round_numbers),
        _ => {}
    }
}

fn to_json<T: Serialize>(v: &T) -> Value {
    let mut value = serde_json::to_value(v).expect("result serializes");
    round_numbers(&mut value);
    value
}

/// A command's result: text lines and the JSON payload.
struct Output {
    lines: Vec<(String, String)>,
    json: Value,
}

impl Output {
    fn new(json: Value) -> Self {
        Output { lines: Vec::new(), json }
    }

    fn line(mut self, key: &str, value: impl Into<String>) -> Self {
        self.lines.push((key.to_string(), value.into()));
        self
    }

    fn num(self, key: &str, value: f64) -> Self {
        self.line(key, fmt12(value))
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| compute(format!("cannot write {}: {e}", path.display())))
}

fn csv_bytes<F>(header: &[&str], rows: F) -> Result<Vec<u8>, CliError>
where
    F: IntoIterator<Item = Vec<f64>>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(compute)?;
    for row in rows {
        w.write_record(row.iter().map(|&v| fmt12(v))).map_err(compute)?;
    }
    w.into_inner().map_err(compute)
}

fn resolve_trial(f: &ReactionTerm, spec: &str, c_tol: f64) -> Result<TrialFunction, CliError> {
    let compact: String = spec.chars().filter(|c| !c.is_whitespace()).collect();
    let needs_solution = |kind: &str| -> Result<PhasePlaneSolution, CliError> {
        minimal_speed(f, c_tol).map_err(|e| compute(format!("oracle for `{kind}` trial failed: {e}")))
    };
    match compact.as_str() {
        "g=optimal" => optimal_trial(&needs_solution("g=optimal")?).map_err(compute),
        "g=balanced" => TrialFunction::balanced(&needs_solution("g=balanced")?).map_err(compute),
        "alpha=p" => Ok(TrialFunction::alpha_phase(&needs_solution("alpha=p")?)),
        _ => compact.parse::<TrialFunction>().map_err(usage),
    }
}

fn bound_error(e: BoundsError) -> CliError {
    match e {
        BoundsError::WrongRole { .. } | BoundsError::NotMonostable { .. } | BoundsError::Parse(_) => usage(e),
        other => compute(other),
    }
}

fn run_speed(f: &ReactionTerm, cfg: &RunConfig) -> Result<Output, CliError> {
    let sol = minimal_speed(f, cfg.tolerances.c_tol).map_err(compute)?;
    if let Some(path) = &cfg.output.path {
        let rows = sol.u_grid.iter().zip(&sol.p).map(|(&u, &p)| vec![u, p]);
        write_file(path, &csv_bytes(&["u", "p"], rows)?)?;
    }
    if let Some(path) = &cfg.output.extra_path {
        let prof = front_profile(&sol, PROFILE_DELTA).map_err(compute)?;
        let rows = (0..prof.len()).map(|i| vec![prof.z[i], prof.u[i], prof.uz[i]]);
        write_file(path, &csv_bytes(&["z", "u", "uz"], rows)?)?;
    }
    let json = to_json(&json!({
        "reaction": f.name(),
        "c0": sol.c,
        "branch": sol.decay_branch,
        "mu1": sol.mu1,
    }));
    Ok(Output::new(json).num("c0", sol.c).line("branch", sol.decay_branch.to_string()))
}

fn bound_output(b: &BoundResult) -> Output {
    let mut out = Output::new(to_json(b))
        .line("principle", b.principle.to_string())
        .line("direction", format!("{:?}", b.direction).to_lowercase())
        .num("value", b.value);
    if let Some(sq) = b.squared {
        out = out.num("squared", sq);
    }
    out.line("trial", b.trial.clone()).num("quad_error", b.quad_error)
}

fn run_bound(f: &ReactionTerm, cfg: &RunConfig) -> Result<Output, CliError> {
    let principle = cfg.principle.ok_or_else(|| usage("--principle is required"))?;
    let tol = cfg.tolerances.quad_rel_tol;
    let trial = || -> Result<TrialFunction, CliError> {
        let spec = cfg.trial.as_deref().ok_or_else(|| usage(format!("--trial is required for {principle}")))?;
        resolve_trial(f, spec, cfg.tolerances.c_tol)
    };
    let result = match principle {
        Principle::VP1 => vp1_upper(f, &trial()?),
        Principle::VP2 => vp2_lower(f, &trial()?, tol),
        Principle::VP4 => vp4_lower(f, &trial()?, tol),
        Principle::VP4s => {
            let g = trial()?;
            if g.role() != TrialRole::G {
                return Err(usage("VP4s needs a g trial"));
            }
            let img = TrialImage::new(&g).map_err(bound_error)?;
            vp4s_value(f, &img, SForm::Corrected, tol).map(|sq| BoundResult {
                principle,
                direction: principle.direction(),
                value: sq.sqrt(),
                squared: Some(sq),
                trial: g.to_string(),
                quad_error: tol * sq.sqrt(),
            })
        }
        Principle::ZFK => zfk_bound(f),
        Principle::AW => aw_bound(f),
    }
    .map_err(bound_error)?;
    Ok(bound_output(&result))
}

fn with_jobs<T: Send>(jobs: Option<usize>, task: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match jobs {
        Some(0) => Err(usage("--jobs must be at least 1")),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build().map_err(compute)?;
            Ok(pool.install(task))
        }
        None => Ok(task()),
    }
}

fn run_optimize(f: &ReactionTerm, cfg: &RunConfig) -> Result<Output, CliError> {
    let budget = cfg.budget.unwrap_or(DEFAULT_BUDGET);
    let tol = cfg.tolerances.quad_rel_tol;
    if let Some(kind) = cfg.family {
        let principle = match (cfg.principle, kind.role()) {
            (Some(p), _) => p,
            (None, TrialRole::Alpha) => Principle::VP1,
            (None, TrialRole::G) => Principle::VP4,
        };
        let family = TrialFamily::new(kind, principle);
        let b = with_jobs(cfg.jobs, || optimize_bound(f, &family, principle, budget, tol))?.map_err(|e| match e {
            crate::optimize::OptimizeError::Budget(_) | crate::optimize::OptimizeError::RoleMismatch { .. } => usage(e),
            other => compute(other),
        })?;
        return Ok(bound_output(&b).line("family", kind.to_string()));
    }
    let gap = with_jobs(cfg.jobs, || bound_gap(f, budget, cfg.tolerances.c_tol, tol))?.map_err(|e| match e {
        crate::optimize::OptimizeError::Budget(_) => usage(e),
        other => compute(other),
    })?;
    let mut out = Output::new(to_json(&gap)).num("oracle_c", gap.oracle_c);
    out = match &gap.best_upper {
        Some(u) => out.num("best_upper", u.value).line("best_upper_trial", format!("{} {}", u.principle, u.trial)),
        None => out.line("best_upper", "none"),
    };
    out = out
        .num("best_lower", gap.best_lower.value)
        .line("best_lower_trial", format!("{} {}", gap.best_lower.principle, gap.best_lower.trial));
    Ok(match gap.gap {
        Some(g) => out.num("gap", g),
        None => out.line("gap", "none"),
    })
}

fn run_verify(f: &ReactionTerm, cfg: &RunConfig) -> Result<(Output, bool), CliError> {
    let opts = ReportOptions { c_tol: cfg.tolerances.c_tol, quad_rel_tol: cfg.tolerances.quad_rel_tol };
    let report = with_jobs(cfg.jobs, || full_report(f, opts))?.map_err(compute)?;
    let json = to_json(&report);
    let text = serde_json::to_string_pretty(&json).expect("report serializes") + "\n";
    if let Some(path) = &cfg.output.path {
        write_file(path, text.as_bytes())?;
    }
    let failed = report.checks.iter().filter(|c| !matches!(c.status, crate::verify::CheckStatus::Pass)).count();
    let out = Output::new(json)
        .num("c0", report.oracle.c0)
        .line("checks", report.checks.len().to_string())
        .line("not_passed", failed.to_string())
        .line("pass", report.pass.to_string());
    Ok((out, report.pass))
}

fn run_evolve(f: &ReactionTerm, cfg: &RunConfig) -> Result<Output, CliError> {
    let params = cfg.evolve.unwrap_or_default();
    let window = cfg.window_fraction.unwrap_or(DEFAULT_WINDOW);
    let ev = evolve(f, params).map_err(|e| match e {
        crate::evolve::EvolveError::Spacing(_)
        | crate::evolve::EvolveError::Length { .. }
        | crate::evolve::EvolveError::EndTime(_) => usage(e),
        other => compute(other),
    })?;
    if let Some(path) = &cfg.output.path {
        let mut buf = Vec::new();
        write_track_csv(&ev.front_track, &mut buf).map_err(compute)?;
        write_file(path, &buf)?;
    }
    if let Some(path) = &cfg.output.extra_path {
        let mut buf = Vec::new();
        write_snapshots_csv(&ev, &mut buf).map_err(compute)?;
        write_file(path, &buf)?;
    }
    let fit = spreading_speed(&ev.front_track, window).map_err(compute)?;
    let json = to_json(&json!({
        "reaction": f.name(),
        "params": params,
        "speed": fit.speed,
        "fit_residual": fit.fit_residual,
        "points": fit.points,
        "max_excursion": ev.max_excursion,
    }));
    Ok(Output::new(json)
        .num("speed", fit.speed)
        .num("fit_residual", fit.fit_residual)
        .line("points", fit.points.to_string()))
}

fn execute(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32, CliError> {
    let f = make_reaction(&cfg.reaction)?;
    let (output, code) = match cfg.command {
        CommandKind::Speed => (run_speed(&f, cfg)?, 0),
        CommandKind::Bound => (run_bound(&f, cfg)?, 0),
        CommandKind::Optimize => (run_optimize(&f, cfg)?, 0),
        CommandKind::Verify => {
            let (o, pass) = run_verify(&f, cfg)?;
            (o, if pass { 0 } else { 1 })
        }
        CommandKind::Evolve => (run_evolve(&f, cfg)?, 0),
    };
    let io = |e: std::io::Error| compute(format!("cannot write output: {e}"));
    match cfg.output.format {
        OutputFormat::Json => {
            let command = serde_json::to_value(cfg.command).expect("command serializes");
            let wrapped = json!({ "command": command, "result": output.json });
            writeln!(out, "{}", serde_json::to_string_pretty(&wrapped).expect("output serializes")).map_err(io)?;
        }
        OutputFormat::Text => {
            for (k, v) in &output.lines {
                writeln!(out, "{k} = {v}").map_err(io)?;
            }
        }
    }
    Ok(code)
}

/// Runs the command line `argv` (program name first) and returns the exit
/// code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    return 0;
                }
                _ => 2,
            };
            let _ = write!(err, "{e}");
            return code;
        }
    };
    match config_from(cli.command).and_then(|cfg| execute(&cfg, out)) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
