//! The `tpm` command line.
//!
//! Geometry comes from a JSON parameter file (`--params`, defaulting to the
//! reference prototype); per-run values are positional arguments or flags.
//!
//! Exit codes: 0 success, 1 configuration or argument error, 2 no
//! solution, 3 singular input, 4 verification failure.

pub mod verify;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::error::Error;
use crate::fk::{self, FkSolution};
use crate::ik::{self, IkReport};
use crate::jacobian::{self, Thresholds};
use crate::params::{JointInputs, MechanismParams, Pose, Tolerances, ValidatedParams};
use crate::topology::{self, TopologyInput};
use crate::workspace::{self, Axis, AxisRange, ExportFormat, ScanSpec, WorkspaceSample};

use verify::{Status, VerifySettings};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NO_SOLUTION: i32 = 2;
pub const EXIT_SINGULAR: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AngleUnit {
    Rad,
    Deg,
}

impl AngleUnit {
    fn convert(self, rad: f64) -> f64 {
        match self {
            AngleUnit::Rad => rad,
            AngleUnit::Deg => rad.to_degrees(),
        }
    }

    fn name(self) -> &'static str {
        match self {
            AngleUnit::Rad => "rad",
            AngleUnit::Deg => "deg",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Parser)]
#[command(
    name = "tpm",
    version,
    about = "Kinematics of a 3-translational parallel mechanism with prismatic actuation",
    allow_negative_numbers = true
)]
pub struct Cli {
    /// Parameter file: JSON object with keys a, b, d, l1..l8 (mm).
    #[arg(long, global = true, value_name = "PATH")]
    pub params: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "rad")]
    pub angle_unit: AngleUnit,
    /// Closure tolerance for generated solutions, mm.
    #[arg(long, global = true, value_name = "MM")]
    pub tol_closure: Option<f64>,
    /// Tolerance against the 4-decimal reference tables, mm.
    #[arg(long, global = true, value_name = "MM")]
    pub tol_table: Option<f64>,
    /// Dimensionless threshold on normalized determinants.
    #[arg(long, global = true, value_name = "T")]
    pub singularity_threshold: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<OutputFormat>,
    /// Output file (workspace exports; other commands write stdout).
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Bounds {
    #[arg(long, num_args = 2, value_names = ["MIN", "MAX"], allow_negative_numbers = true)]
    pub x_range: Option<Vec<f64>>,
    #[arg(long, num_args = 2, value_names = ["MIN", "MAX"], allow_negative_numbers = true)]
    pub y_range: Option<Vec<f64>>,
    #[arg(long, num_args = 2, value_names = ["MIN", "MAX"], allow_negative_numbers = true)]
    pub z_range: Option<Vec<f64>>,
    /// Grid points per axis.
    #[arg(long, default_value_t = ScanSpec::DEFAULT_RESOLUTION)]
    pub resolution: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Direct kinematics: platform poses from prismatic positions.
    #[command(allow_negative_numbers = true)]
    Fk { ya1: f64, ya2: f64, ya3: f64 },
    /// Inverse kinematics: prismatic positions from a platform pose.
    #[command(allow_negative_numbers = true)]
    Ik { x: f64, y: f64, z: f64 },
    /// Grid workspace scan with singularity labels.
    Workspace {
        #[command(flatten)]
        bounds: Bounds,
    },
    /// One plane of the workspace grid.
    #[command(allow_negative_numbers = true)]
    Section {
        #[arg(long)]
        axis: Axis,
        #[arg(long, allow_negative_numbers = true)]
        value: f64,
        #[command(flatten)]
        bounds: Bounds,
    },
    /// Mobility and coupling degree of a loop decomposition.
    Topology {
        /// JSON `{"total_joint_dof_sum": .., "loops": [..]}`; defaults to
        /// the reference mechanism.
        #[arg(long, value_name = "PATH")]
        loops: Option<PathBuf>,
    },
    /// Reproduce the reference tables and spot-check the Jacobian.
    Verify {
        #[arg(long)]
        json: bool,
    },
}

/// Settings resolved from the global flags.
#[derive(Debug, Clone)]
pub struct CliConfig {
    pub params: ValidatedParams,
    pub tolerances: Tolerances,
    pub table_override: Option<f64>,
    pub angle_unit: AngleUnit,
    pub format: Option<OutputFormat>,
    pub out: Option<PathBuf>,
}

impl CliConfig {
    pub fn from_cli(cli: &Cli) -> Result<Self, String> {
        let raw = match &cli.params {
            Some(path) => MechanismParams::from_path(path).map_err(|e| e.to_string())?,
            None => MechanismParams::reference(),
        };
        let params = raw.validate().map_err(|e| e.to_string())?;
        let mut tolerances = Tolerances::default();
        for (flag, value, slot) in [
            ("--tol-closure", cli.tol_closure, &mut tolerances.closure),
            ("--tol-table", cli.tol_table, &mut tolerances.table),
            (
                "--singularity-threshold",
                cli.singularity_threshold,
                &mut tolerances.singularity,
            ),
        ] {
            if let Some(v) = value {
                if !(v.is_finite() && v > 0.0) {
                    return Err(format!("{flag} must be a positive number, got {v}"));
                }
                *slot = v;
            }
        }
        Ok(CliConfig {
            params,
            tolerances,
            table_override: cli.tol_table,
            angle_unit: cli.angle_unit,
            format: cli.format,
            out: cli.out.clone(),
        })
    }

    fn thresholds(&self) -> Thresholds {
        Thresholds::uniform(self.tolerances.singularity)
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_CONFIG,
            };
            let _ = write!(stderr, "{}", e.render());
            return code;
        }
    };
    let config = match CliConfig::from_cli(&cli) {
        Ok(c) => c,
        Err(msg) => {
            let _ = writeln!(stderr, "error: {msg}");
            return EXIT_CONFIG;
        }
    };
    let result = match &cli.command {
        Command::Fk { ya1, ya2, ya3 } => cmd_fk(&config, [*ya1, *ya2, *ya3], stdout, stderr),
        Command::Ik { x, y, z } => cmd_ik(&config, [*x, *y, *z], stdout, stderr),
        Command::Workspace { bounds } => cmd_workspace(&config, bounds, None, stdout, stderr),
        Command::Section {
            axis,
            value,
            bounds,
        } => cmd_workspace(&config, bounds, Some((*axis, *value)), stdout, stderr),
        Command::Topology { loops } => cmd_topology(&config, loops.as_ref(), stdout, stderr),
        Command::Verify { json } => cmd_verify(&config, *json, stdout, stderr),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_CONFIG
        }
    }
}

type CmdResult = Result<i32, Box<dyn std::error::Error>>;

#[derive(Serialize)]
struct FkRow {
    pose: Pose,
    branch: fk::FkBranch,
    gamma: f64,
    alpha: f64,
    beta: f64,
    cos_gamma: f64,
    sin_gamma: f64,
    a: f64,
    b: f64,
    t: f64,
    h1: f64,
    h2: f64,
    j1: f64,
    j2: f64,
    j3: f64,
    residual: f64,
}

impl FkRow {
    fn new(s: &FkSolution, unit: AngleUnit) -> Self {
        let m = &s.intermediates;
        FkRow {
            pose: s.pose,
            branch: s.branch,
            gamma: unit.convert(m.gamma),
            alpha: unit.convert(m.alpha),
            beta: unit.convert(m.beta),
            cos_gamma: m.cos_gamma,
            sin_gamma: m.sin_gamma,
            a: m.a,
            b: m.b,
            t: m.t,
            h1: m.h1,
            h2: m.h2,
            j1: m.j1,
            j2: m.j2,
            j3: m.j3,
            residual: s.residual,
        }
    }
}

pub fn cmd_fk(
    config: &CliConfig,
    v: [f64; 3],
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> CmdResult {
    let inputs = JointInputs::new(v[0], v[1], v[2])?;
    let sols = match fk::solve_with_tolerance(&inputs, &config.params, config.tolerances.closure) {
        Ok(s) => s,
        Err(e @ Error::IndeterminateGamma { .. }) => {
            writeln!(stderr, "singular input: {e}")?;
            return Ok(EXIT_SINGULAR);
        }
        Err(e) => return Err(e.into()),
    };
    let unit = config.angle_unit;
    let rows: Vec<FkRow> = sols.iter().map(|s| FkRow::new(s, unit)).collect();
    match config.format.unwrap_or(OutputFormat::Json) {
        OutputFormat::Json => {
            let doc = json!({
                "inputs": inputs,
                "angle_unit": unit.name(),
                "solutions": rows,
            });
            writeln!(stdout, "{}", serde_json::to_string_pretty(&doc)?)?;
        }
        OutputFormat::Csv => {
            writeln!(
                stdout,
                "x,y,z,sin_gamma_sign,t_sign,alpha_sign,gamma,alpha,beta,t,residual"
            )?;
            for r in &rows {
                writeln!(
                    stdout,
                    "{},{},{},{},{},{},{},{},{},{},{}",
                    r.pose.x,
                    r.pose.y,
                    r.pose.z,
                    r.branch.sin_gamma.value(),
                    r.branch.t.value(),
                    r.branch.alpha.value(),
                    r.gamma,
                    r.alpha,
                    r.beta,
                    r.t,
                    r.residual
                )?;
            }
        }
        OutputFormat::Text => {
            writeln!(stdout, "DIRECT SOLUTIONS for yA = {inputs}")?;
            writeln!(
                stdout,
                "{:>4} {:>12} {:>12} {:>12}  {:>6} {:>10} {:>10} {:>10} {:>10}",
                "No.", "x(mm)", "y(mm)", "z(mm)", "branch", "gamma", "alpha", "beta", "residual"
            )?;
            for (i, r) in rows.iter().enumerate() {
                writeln!(
                    stdout,
                    "{:>4} {:>12.4} {:>12.4} {:>12.4}  {:>6} {:>10.4} {:>10.4} {:>10.4} {:>10.2e}",
                    i + 1,
                    r.pose.x,
                    r.pose.y,
                    r.pose.z,
                    format!("{}{}{}", r.branch.sin_gamma, r.branch.t, r.branch.alpha),
                    r.gamma,
                    r.alpha,
                    r.beta,
                    r.residual
                )?;
            }
        }
    }
    if sols.is_empty() {
        writeln!(stderr, "no solution: no branch closes both loops")?;
        return Ok(EXIT_NO_SOLUTION);
    }
    Ok(EXIT_OK)
}

fn ik_json(config: &CliConfig, pose: &Pose, report: &IkReport) -> serde_json::Value {
    let unit = config.angle_unit;
    let p = &config.params;
    let thresholds = config.thresholds();
    let rows: Vec<serde_json::Value> = report
        .solutions
        .iter()
        .map(|s| {
            let singularity = match jacobian::build(pose, s, p) {
                Ok(pair) => json!({
                    "class": jacobian::classify(&pair, &thresholds),
                    "det_jp": pair.det_jp,
                    "det_jq": pair.det_jq,
                    "norm_det_jp": pair.norm_det_jp,
                    "norm_det_jq": pair.norm_det_jq,
                }),
                Err(e) => json!({ "error": e.to_string() }),
            };
            json!({
                "inputs": s.inputs,
                "branch": s.branch,
                "radicands": s.radicands,
                "alpha": unit.convert(s.alpha),
                "beta": unit.convert(s.beta),
                "round_trip": s.round_trip,
                "serial_boundary": s.is_serial_boundary(),
                "parallelogram_assembly": s.is_parallelogram_assembly(p),
                "singularity": singularity,
            })
        })
        .collect();
    json!({
        "pose": pose,
        "angle_unit": unit.name(),
        "theoretical_count": ik::THEORETICAL_COUNT,
        "real_count": report.solutions.len(),
        "complex_combinations": report.complex_combinations,
        "round_trip_failures": report.round_trip_failures,
        "solutions": rows,
    })
}

pub fn cmd_ik(
    config: &CliConfig,
    v: [f64; 3],
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> CmdResult {
    let pose = Pose::new(v[0], v[1], v[2])?;
    let report = match ik::solve_report(&pose, &config.params, config.tolerances.closure) {
        Ok(r) => r,
        Err(e @ Error::Unreachable { .. }) => {
            writeln!(stderr, "no solution: {e}")?;
            return Ok(EXIT_NO_SOLUTION);
        }
        Err(e) => return Err(e.into()),
    };
    let unit = config.angle_unit;
    match config.format.unwrap_or(OutputFormat::Json) {
        OutputFormat::Json => {
            let doc = ik_json(config, &pose, &report);
            writeln!(stdout, "{}", serde_json::to_string_pretty(&doc)?)?;
        }
        OutputFormat::Csv => {
            writeln!(stdout, "ya1,ya2,ya3,alpha,beta,m1,m2,m3,round_trip")?;
            for s in &report.solutions {
                writeln!(
                    stdout,
                    "{},{},{},{},{},{},{},{},{}",
                    s.inputs.ya1,
                    s.inputs.ya2,
                    s.inputs.ya3,
                    unit.convert(s.alpha),
                    unit.convert(s.beta),
                    s.radicands[0],
                    s.radicands[1],
                    s.radicands[2],
                    s.round_trip.is_consistent()
                )?;
            }
        }
        OutputFormat::Text => {
            writeln!(stdout, "INVERSE SOLUTIONS for O' = {pose}")?;
            writeln!(
                stdout,
                "{:>4} {:>12} {:>12} {:>12}  {:>10} {:>10}  round trip",
                "No.", "yA1", "yA2", "yA3", "alpha", "beta"
            )?;
            for (i, s) in report.solutions.iter().enumerate() {
                writeln!(
                    stdout,
                    "{:>4} {:>12.4} {:>12.4} {:>12.4}  {:>10.4} {:>10.4}  {}",
                    i + 1,
                    s.inputs.ya1,
                    s.inputs.ya2,
                    s.inputs.ya3,
                    unit.convert(s.alpha),
                    unit.convert(s.beta),
                    match s.round_trip {
                        ik::RoundTrip::Consistent { .. } => "ok",
                        ik::RoundTrip::PinnedGamma { .. } => "ok (B = 0, gamma pinned)",
                        ik::RoundTrip::Inconsistent { .. } => "FAILED",
                        ik::RoundTrip::Unchecked => "-",
                    }
                )?;
            }
            writeln!(
                stdout,
                "{} real of {} sign combinations; {} complex",
                report.solutions.len(),
                ik::THEORETICAL_COUNT,
                report.complex_combinations
            )?;
        }
    }
    if report.solutions.is_empty() {
        writeln!(
            stderr,
            "no solution: every sign combination has a negative radicand"
        )?;
        return Ok(EXIT_NO_SOLUTION);
    }
    Ok(EXIT_OK)
}

fn scan_spec(config: &CliConfig, bounds: &Bounds) -> Result<ScanSpec, String> {
    let mut spec = ScanSpec::reference(bounds.resolution);
    spec.thresholds = config.thresholds();
    for (range, slot) in [
        (&bounds.x_range, &mut spec.x),
        (&bounds.y_range, &mut spec.y),
        (&bounds.z_range, &mut spec.z),
    ] {
        if let Some(r) = range {
            *slot = AxisRange::new(r[0], r[1]);
        }
    }
    spec.validate().map_err(|e| e.to_string())?;
    Ok(spec)
}

fn cmd_workspace(
    config: &CliConfig,
    bounds: &Bounds,
    section: Option<(Axis, f64)>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> CmdResult {
    let spec = match scan_spec(config, bounds) {
        Ok(s) => s,
        Err(msg) => {
            writeln!(stderr, "error: {msg}")?;
            return Ok(EXIT_CONFIG);
        }
    };
    let samples: Vec<WorkspaceSample> = match section {
        None => workspace::scan(&spec, &config.params)?,
        Some((axis, value)) => workspace::cross_section(&spec, &config.params, axis, value)?,
    };
    let format = match config.format {
        Some(OutputFormat::Json) => ExportFormat::Json,
        Some(OutputFormat::Csv) | None => ExportFormat::Csv,
        Some(OutputFormat::Text) => {
            writeln!(stderr, "error: workspace exports are csv or json")?;
            return Ok(EXIT_CONFIG);
        }
    };
    let summary = workspace::summarize(&samples);
    let line = format!(
        "samples={} feasible={} regular={} serial={} parallel={} comprehensive={}",
        summary.total,
        summary.feasible,
        summary.regular,
        summary.serial,
        summary.parallel,
        summary.comprehensive
    );
    match &config.out {
        Some(path) => {
            workspace::export(&samples, format, path)?;
            writeln!(stdout, "{line}")?;
            writeln!(stdout, "wrote {} ({format})", path.display())?;
        }
        None => {
            match format {
                ExportFormat::Csv => workspace::write_csv(&samples, &mut *stdout)?,
                ExportFormat::Json => {
                    workspace::write_json(&samples, &mut *stdout)?;
                    writeln!(stdout)?;
                }
            }
            writeln!(stderr, "{line}")?;
        }
    }
    Ok(EXIT_OK)
}

fn cmd_topology(
    config: &CliConfig,
    loops: Option<&PathBuf>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> CmdResult {
    let input = match loops {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
                path: path.clone(),
                source,
            })?;
            serde_json::from_str::<TopologyInput>(&text).map_err(|source| Error::Json {
                context: path.display().to_string(),
                source,
            })?
        }
        None => TopologyInput::reference(),
    };
    let report = match topology::report(&input) {
        Ok(r) => r,
        Err(e) => {
            writeln!(stderr, "error: {e}")?;
            return Ok(EXIT_CONFIG);
        }
    };
    match config.format {
        Some(OutputFormat::Text) => {
            writeln!(stdout, "F = {}", report.dof)?;
            let deltas: Vec<String> = report.deltas.iter().map(|d| format!("{d:+}")).collect();
            writeln!(stdout, "Delta = ({})", deltas.join(", "))?;
            writeln!(stdout, "kappa = {}", report.kappa)?;
        }
        _ => {
            let doc = json!({ "input": input, "report": report });
            writeln!(stdout, "{}", serde_json::to_string_pretty(&doc)?)?;
        }
    }
    Ok(EXIT_OK)
}

fn cmd_verify(
    config: &CliConfig,
    json: bool,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> CmdResult {
    let settings = VerifySettings {
        closure_tol: config.tolerances.closure,
        table_tol: config.table_override,
        thresholds: config.thresholds(),
    };
    let checks = verify::run_checks(&config.params, &settings);
    if json || config.format == Some(OutputFormat::Json) {
        writeln!(stdout, "{}", serde_json::to_string_pretty(&checks)?)?;
    } else {
        for c in &checks {
            let status = match c.status {
                Status::Pass => "PASS",
                Status::Fail => "FAIL",
                Status::Info => "INFO",
            };
            let value = c
                .value
                .map_or_else(|| "-".to_string(), |v| format!("{v:.6e}"));
            let tol = c
                .tolerance
                .map_or_else(|| "-".to_string(), |v| format!("{v:.1e}"));
            writeln!(
                stdout,
                "{status}  {:<32} {:>14} {:>9}  {}",
                c.name, value, tol, c.detail
            )?;
        }
    }
    match checks.iter().find(|c| c.status == Status::Fail) {
        Some(first) => {
            writeln!(
                stderr,
                "verification failed: {} ({})",
                first.name, first.detail
            )?;
            Ok(EXIT_VERIFY)
        }
        None => Ok(EXIT_OK),
    }
}
