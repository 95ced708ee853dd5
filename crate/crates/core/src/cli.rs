//! Command implementations and the argument parser behind the `trident` binary.
//!
//! Each `cmd_*` function takes a validated [`RunConfig`], writes any files
//! into its output directory and returns what should go to stdout.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use thiserror::Error;

use crate::config::{ConfigError, Emit, Model, ModelSource, RunConfig};
use crate::io;
use crate::linalg::Matrix;
use crate::nilpotent::NilpotentApproximation;
use crate::privcoord::{verify_privileged, FrameError};
use crate::sim::{self, ComparisonReport, Experiment, InputKind, ModelTag, SimError};
use crate::trident::Configuration;
use crate::vfield::{fd_bracket, growth_vector, lie_bracket, FieldError, RANK_TOL};

/// Exact-model slip above this counts as a verification failure.
pub const SLIP_TOL: f64 = 1e-8;
/// Allowed gap between a symbolic bracket and its finite-difference estimate.
pub const FD_TOL: f64 = 1e-6;
const FD_STEP: f64 = 1e-5;

#[derive(Debug, Error)]
pub enum CommandError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
}

impl CommandError {
    /// Machine-readable form printed by `analyze`.
    pub fn to_json(&self) -> Value {
        let mut v = json!({ "error": self.kind(), "message": self.to_string() });
        match self {
            CommandError::Frame(FrameError::RankDeficient { achieved, required }) => {
                v["achieved_rank"] = json!(achieved);
                v["required_rank"] = json!(required);
            }
            CommandError::Field(FieldError::NotBracketGenerating { dims, .. })
            | CommandError::Frame(FrameError::Field(FieldError::NotBracketGenerating { dims, .. })) => {
                v["achieved_ranks"] = json!(dims);
            }
            CommandError::Config(ConfigError::Dsl { line, column, .. }) => {
                v["line"] = json!(line);
                v["column"] = json!(column);
            }
            _ => {}
        }
        v
    }

    fn kind(&self) -> &'static str {
        match self {
            CommandError::Config(ConfigError::Dsl { .. }) => "parse",
            CommandError::Config(_) => "config",
            CommandError::Frame(FrameError::RankDeficient { .. })
            | CommandError::Field(FieldError::NotBracketGenerating { .. })
            | CommandError::Frame(FrameError::Field(FieldError::NotBracketGenerating { .. })) => "non-regular-point",
            CommandError::Field(_) | CommandError::Frame(_) => "model",
            CommandError::Sim(_) => "simulation",
            CommandError::Write { .. } => "io",
        }
    }
}

/// Result of a command: text for stdout, files written, and whether every
/// verification it ran passed.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub stdout: String,
    pub files: Vec<PathBuf>,
    pub verified: bool,
}

struct Writer {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Writer {
    fn new(dir: PathBuf) -> Self {
        Writer { dir, files: Vec::new() }
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<(), CommandError> {
        fs::create_dir_all(&self.dir).map_err(|source| CommandError::Write {
            path: self.dir.clone(),
            source,
        })?;
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|source| CommandError::Write {
            path: path.clone(),
            source,
        })?;
        self.files.push(path);
        Ok(())
    }

    fn write_json(&mut self, name: &str, value: &Value) -> Result<(), CommandError> {
        let mut text = serde_json::to_string_pretty(value).expect("JSON values serialise");
        text.push('\n');
        self.write(name, &text)
    }
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("JSON values serialise") + "\n"
}

fn strings<T: ToString>(items: &[T]) -> Vec<String> {
    items.iter().map(ToString::to_string).collect()
}

/// The selected fields in DSL text, one per line.
pub fn cmd_model(config: &RunConfig) -> Result<Outcome, CommandError> {
    let model = config.load_model()?;
    let stdout = model.fields.iter().map(|f| format!("{f}\n")).collect();
    Ok(Outcome {
        stdout,
        files: Vec::new(),
        verified: true,
    })
}

/// Full analysis at `config.point` as a JSON document.
pub fn analysis(model: &Model, point: &[f64]) -> Result<(Value, bool), CommandError> {
    let fields = &model.fields;
    let flag = growth_vector(fields, point, RANK_TOL)?;
    let approx = NilpotentApproximation::at(fields, point)?;
    let coords = &approx.coords;
    let n = coords.dim();

    let mut brackets = Vec::new();
    let mut oracle_ok = true;
    for i in 0..fields.len() {
        for j in i + 1..fields.len() {
            let b = lie_bracket(&fields[i], &fields[j])?;
            let value = b.eval(point);
            let fd = fd_bracket(&fields[i], &fields[j], point, FD_STEP);
            let err = value.iter().zip(&fd).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            oracle_ok &= err <= FD_TOL;
            brackets.push(json!({
                "pair": [i + 1, j + 1],
                "field": b.to_string(),
                "value": value,
                "fd_error": err,
            }));
        }
    }

    let frame = &coords.frame;
    let residual = coords
        .transform
        .entries
        .mul(&frame.matrix.entries)
        .sub(&Matrix::identity(n))
        .norm_inf();
    let mut column_labels: Vec<String> = (1..=fields.len()).map(|i| format!("g{i}")).collect();
    column_labels.extend(frame.brackets.iter().map(|(i, j)| format!("[g{},g{}]", i + 1, j + 1)));

    let privileged = verify_privileged(&coords.transform, fields, point, coords.weights());
    let first_order = approx.first_order_reports()?;
    let nilpotent = approx.nilpotent_report()?;
    let pass = oracle_ok && privileged.pass && first_order.iter().all(|r| r.pass) && nilpotent.pass;

    let y_names: Vec<String> = (0..n)
        .map(|j| format!("y{} = {}", j + 1, coords.coordinate_function(j).display('x')))
        .collect();
    let doc = json!({
        "model": model.name,
        "point": point,
        "fields": strings(fields),
        "growth_vector": flag.dims,
        "degree_of_nonholonomy": flag.degree_of_nonholonomy,
        "weights": flag.weights,
        "brackets": brackets,
        "frame": { "columns": column_labels, "matrix": frame.matrix.entries.to_rows() },
        "privileged_transform": coords.transform.entries.to_rows(),
        "transform_residual": residual,
        "privileged_coordinates": y_names,
        "hat_fields_y": strings(&approx.hats_y()),
        "hat_fields_x": strings(&approx.hats_x),
        "reports": {
            "privileged": privileged,
            "first_order": first_order,
            "nilpotent": nilpotent,
        },
        "pass": pass,
    });
    Ok((doc, pass))
}

pub fn cmd_analyze(config: &RunConfig) -> Result<Outcome, CommandError> {
    let model = config.load_model()?;
    let (doc, pass) = analysis(&model, &config.point)?;
    Ok(Outcome {
        stdout: pretty(&doc),
        files: Vec::new(),
        verified: pass,
    })
}

/// One-period displacement for `config.input` against the symbolic bracket.
pub fn cmd_bracket(config: &RunConfig) -> Result<Outcome, CommandError> {
    let model = config.load_model()?;
    let kind = config.input;
    let (i, j) = kind.pair().expect("validated input kind");
    let d = sim::bracket_displacement(&model.fields, kind, config.amplitude, config.omega, config.steps)?;
    let fd = fd_bracket(&model.fields[i], &model.fields[j], &[0.0; 6], FD_STEP);
    let fd_error = d
        .bracket
        .iter()
        .zip(&fd)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let doc = json!({
        "kind": kind,
        "amplitude": config.amplitude,
        "omega": config.omega,
        "steps": config.steps,
        "bracket": lie_bracket(&model.fields[i], &model.fields[j])?.to_string(),
        "bracket_at_origin": d.bracket,
        "fd_error": fd_error,
        "endpoint": d.endpoint.to_array(),
        "direction_cosine": d.direction_cosine,
        "magnitude": d.magnitude,
    });
    Ok(Outcome {
        stdout: pretty(&doc),
        files: Vec::new(),
        verified: fd_error <= FD_TOL,
    })
}

fn experiment(config: &RunConfig, kind: InputKind, amplitude: f64) -> Experiment {
    Experiment {
        kind,
        amplitude,
        omega: config.omega,
        periods: config.periods,
        steps: config.steps,
        start: Configuration::from_array(config.point),
    }
}

/// Integrates one model and writes its trajectory and wheel paths.
pub fn cmd_simulate(config: &RunConfig) -> Result<Outcome, CommandError> {
    let model = config.load_model()?;
    let e = experiment(config, config.input, config.amplitude);
    let (fields, tag, suffix) = if config.nilpotent {
        (
            NilpotentApproximation::at(&model.fields, &config.point)?.hats_x,
            ModelTag::NilpotentX,
            "_nilpotent",
        )
    } else {
        (model.fields.clone(), ModelTag::Exact, "")
    };
    let u = e.input()?;
    let traj = sim::integrate(&fields, &u, e.start, e.duration(), e.total_steps())?.with_model(tag);
    let max_slip = sim::max_slip(&traj, &fields, &u, model.kinematics);

    let stem = format!("{}{suffix}", e.kind);
    let mut out = Writer::new(config.output_dir());
    if config.emit.csv() {
        out.write(&format!("trajectory_{stem}.csv"), &io::trajectory_csv(&traj))?;
        out.write(
            &format!("kinematics_{stem}.csv"),
            &io::kinematics_csv(&traj, model.kinematics),
        )?;
    }
    if config.emit.svg() {
        let poses = traj.poses(model.kinematics);
        out.write(
            &format!("trajectory_{stem}.svg"),
            &io::overlay_svg(&format!("input {}", e.kind), &poses, None),
        )?;
    }
    let doc = json!({
        "kind": e.kind,
        "model": tag,
        "amplitude": e.amplitude,
        "omega": e.omega,
        "periods": e.periods,
        "steps": e.total_steps(),
        "step": traj.meta.step,
        "integrator": traj.meta.integrator,
        "endpoint": traj.endpoint().to_array(),
        "max_slip": max_slip,
    });
    out.write_json(&format!("simulate_{stem}.json"), &doc)?;
    let verified = !(model.builtin && tag == ModelTag::Exact) || max_slip <= SLIP_TOL;
    Ok(Outcome {
        stdout: pretty(&doc),
        files: out.files,
        verified,
    })
}

fn approximation_passes(approx: &NilpotentApproximation) -> Result<bool, CommandError> {
    Ok(approx.first_order_reports()?.iter().all(|r| r.pass) && approx.nilpotent_report()?.pass)
}

/// Exact model against its nilpotent approximation under the same input.
pub fn cmd_compare(config: &RunConfig) -> Result<Outcome, CommandError> {
    let model = config.load_model()?;
    let approx = NilpotentApproximation::at(&model.fields, &config.point)?;
    let e = experiment(config, config.input, config.amplitude);
    let c = sim::compare(&model.fields, &approx.hats_x, &e, model.kinematics)?;

    let mut out = Writer::new(config.output_dir());
    if config.emit.csv() {
        out.write(
            &format!("compare_{}.csv", e.kind),
            &io::comparison_csv(&c.exact, &c.nilpotent),
        )?;
    }
    if config.emit.svg() {
        let title = format!("input {}: exact (solid), nilpotent (dashed)", e.kind);
        let svg = io::overlay_svg(
            &title,
            &c.exact.poses(model.kinematics),
            Some(&c.nilpotent.poses(model.kinematics)),
        );
        out.write(&format!("compare_{}.svg", e.kind), &svg)?;
    }
    let mut doc = serde_json::to_value(&c.report).expect("report serialises");
    doc["model"] = json!(model.name);
    out.write_json(&format!("compare_{}.json", e.kind), &doc)?;

    let slip_ok = !model.builtin || c.report.exact_max_slip <= SLIP_TOL;
    let verified = slip_ok && approximation_passes(&approx)?;
    Ok(Outcome {
        stdout: pretty(&doc),
        files: out.files,
        verified,
    })
}

/// Per-kind convergence checks over decreasing amplitudes.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SweepCheck {
    pub kind: InputKind,
    /// Endpoint deviation over displacement strictly decreases as the amplitude shrinks.
    pub relative_dev_decreasing: bool,
    /// Direction cosine does not decrease as the amplitude shrinks.
    pub cosine_non_decreasing: bool,
}

pub fn sweep_checks(reports: &[ComparisonReport]) -> Vec<SweepCheck> {
    InputKind::BUILT_IN
        .iter()
        .filter_map(|&kind| {
            let mut rs: Vec<&ComparisonReport> =
                reports.iter().filter(|r| r.kind == kind && r.amplitude > 0.0).collect();
            if rs.is_empty() {
                return None;
            }
            rs.sort_by(|a, b| b.amplitude.total_cmp(&a.amplitude));
            let rel: Vec<f64> = rs.iter().map(|r| r.endpoint_dev / r.magnitude).collect();
            Some(SweepCheck {
                kind,
                relative_dev_decreasing: rel.windows(2).all(|w| w[1] < w[0]),
                cosine_non_decreasing: rs.windows(2).all(|w| w[1].direction_cosine >= w[0].direction_cosine),
            })
        })
        .collect()
}

/// [`cmd_compare`] for every built-in input and every sweep amplitude.
pub fn cmd_sweep(config: &RunConfig) -> Result<Outcome, CommandError> {
    let model = config.load_model()?;
    let approx = NilpotentApproximation::at(&model.fields, &config.point)?;
    let experiments: Vec<Experiment> = InputKind::BUILT_IN
        .iter()
        .flat_map(|&k| config.amplitudes.iter().map(move |&a| (k, a)))
        .map(|(k, a)| experiment(config, k, a))
        .collect();
    let reports = sim::sweep(&model.fields, &approx.hats_x, &experiments, model.kinematics)?;
    let checks = sweep_checks(&reports);

    let slip_ok = !model.builtin || reports.iter().all(|r| r.exact_max_slip <= SLIP_TOL);
    let verified = slip_ok
        && checks
            .iter()
            .all(|c| c.relative_dev_decreasing && c.cosine_non_decreasing)
        && approximation_passes(&approx)?;

    let mut out = Writer::new(config.output_dir());
    if config.emit.csv() {
        out.write("sweep.csv", &io::sweep_csv(&reports))?;
    }
    let doc = json!({ "model": model.name, "reports": reports, "checks": checks, "pass": verified });
    out.write_json("sweep.json", &doc)?;
    Ok(Outcome {
        stdout: io::sweep_csv(&reports),
        files: out.files,
        verified,
    })
}

#[derive(Debug, Parser)]
#[command(
    name = "trident",
    version,
    about = "Nilpotent approximation of the trident snake robot"
)]
pub struct Cli {
    /// JSON run configuration; flags given on the command line take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Exit with status 2 when any verification fails.
    #[arg(long, global = true)]
    pub strict: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the control fields.
    Model(RunArgs),
    /// Growth vector, privileged coordinates, nilpotent approximation and certificates.
    Analyze(RunArgs),
    /// Net displacement of one periodic input against its bracket.
    Bracket(RunArgs),
    /// Integrate one model and write trajectory files.
    Simulate(RunArgs),
    /// Integrate the exact model and its approximation side by side.
    Compare(RunArgs),
    /// Compare every input over a list of amplitudes.
    Sweep(RunArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Which {
    Original,
    Transformed,
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Built-in control system.
    #[arg(long, value_enum, conflicts_with = "dsl")]
    pub which: Option<Which>,
    /// File with one vector field per line.
    #[arg(long)]
    pub dsl: Option<PathBuf>,
    /// Base point, six comma-separated numbers.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub point: Option<Vec<f64>>,
    /// Periodic input: 12, 13 or 23.
    #[arg(long)]
    pub input: Option<InputKind>,
    #[arg(long)]
    pub amplitude: Option<f64>,
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long)]
    pub periods: Option<usize>,
    /// Steps per period.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Amplitudes for `sweep`, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub amplitudes: Option<Vec<f64>>,
    #[arg(long, env = "TRIDENT_OUT_DIR")]
    pub out_dir: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub emit: Option<Emit>,
    /// Simulate the nilpotent approximation instead of the exact model.
    #[arg(long)]
    pub nilpotent: bool,
}

impl RunArgs {
    /// Overlays the flags that were given on `base`.
    pub fn apply(&self, mut base: RunConfig) -> Result<RunConfig, ConfigError> {
        match (self.which, &self.dsl) {
            (Some(Which::Original), _) => base.model = ModelSource::Original,
            (Some(Which::Transformed), _) => base.model = ModelSource::Transformed,
            (None, Some(path)) => base.model = ModelSource::Dsl(path.clone()),
            (None, None) => {}
        }
        if let Some(p) = &self.point {
            base.point = p
                .as_slice()
                .try_into()
                .map_err(|_| ConfigError::Invalid(format!("point needs 6 values, got {}", p.len())))?;
        }
        if let Some(v) = self.input {
            base.input = v;
        }
        if let Some(v) = self.amplitude {
            base.amplitude = v;
        }
        if let Some(v) = self.omega {
            base.omega = v;
        }
        if let Some(v) = self.periods {
            base.periods = v;
        }
        if let Some(v) = self.steps {
            base.steps = v;
        }
        if let Some(v) = &self.amplitudes {
            base.amplitudes = v.clone();
        }
        if let Some(v) = &self.out_dir {
            base.out_dir = Some(v.clone());
        }
        if let Some(v) = self.emit {
            base.emit = v;
        }
        base.nilpotent |= self.nilpotent;
        base.validate()?;
        Ok(base)
    }
}

fn resolve(config_path: Option<&Path>, args: &RunArgs) -> Result<RunConfig, ConfigError> {
    let base = match config_path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    args.apply(base)
}

type Handler = fn(&RunConfig) -> Result<Outcome, CommandError>;

/// Runs a parsed command line; stdout and stderr are written here.
pub fn run(cli: &Cli) -> ExitCode {
    let (args, cmd): (&RunArgs, Handler) = match &cli.command {
        Command::Model(a) => (a, cmd_model),
        Command::Analyze(a) => (a, cmd_analyze),
        Command::Bracket(a) => (a, cmd_bracket),
        Command::Simulate(a) => (a, cmd_simulate),
        Command::Compare(a) => (a, cmd_compare),
        Command::Sweep(a) => (a, cmd_sweep),
    };
    let result = resolve(cli.config.as_deref(), args)
        .map_err(CommandError::from)
        .and_then(|c| cmd(&c));
    match result {
        Ok(outcome) => {
            print!("{}", outcome.stdout);
            for f in &outcome.files {
                eprintln!("wrote {}", f.display());
            }
            if outcome.verified {
                ExitCode::SUCCESS
            } else if cli.strict {
                eprintln!("error: verification failed");
                ExitCode::from(2)
            } else {
                eprintln!("warning: verification failed");
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            if matches!(cli.command, Command::Analyze(_)) {
                print!("{}", pretty(&e.to_json()));
            }
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

pub fn main() -> ExitCode {
    run(&Cli::parse())
}
