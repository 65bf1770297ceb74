//! Command-line interface.
//!
//! Exit status: 0 success, 2 usage error, 3 bad model or configuration,
//! 4 bad numerics, 5 computation failure, 6 output failure. On failure a
//! JSON error record is written to stderr.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::analytic::ConstantParams;
use crate::dynamics::{self, check_threshold_dynamics, run_batch, BatchItem, InitSpec};
use crate::error::{Error, Result};
use crate::io::{fmt_csv, write_json, Envelope, SCHEMA_VERSION};
use crate::model::config::ModelConfig;
use crate::model::{validate_model, HeterogeneityParams, ModelSpec, Species};
use crate::periodic::{find_periodic_orbit, logistic_orbit, write_orbit_csv};
use crate::sampling::{Discretized, Numerics};
use crate::solver::{simulate_full, simulate_modified, FullSystem, StateField, Trajectory};
use crate::spectral::{spectral_report, SpectralOptions, SpectralReport};
use crate::sweep::{run_sweep_with_metadata, write_table, Axis, Link, Output, SweepSpec};
use crate::verify::verify_constant;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_NUMERICS: i32 = 4;
pub const EXIT_COMPUTE: i32 = 5;
pub const EXIT_OUTPUT: i32 = 6;

/// Environment variable overriding the worker count of parallel commands.
pub const WORKERS_ENV: &str = "VHRD_WORKERS";

#[derive(Debug, Parser)]
#[command(
    name = "vhrd",
    version,
    about = "Periodic vector-host reaction-diffusion epidemic laboratory"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the full system and write the trajectory.
    Simulate(SimulateArgs),
    /// Extract a periodic orbit by iterating the period map.
    Periodic(PeriodicArgs),
    /// Principal eigenvalues zeta1, zeta2 and lambda.
    Eigen(ReportArgs),
    /// Reproduction numbers R01, R02 and R0.
    R0(ReportArgs),
    /// Numerical results next to the closed forms of the constant model.
    VerifyConstant(VerifyArgs),
    /// Reproduction-number table over a parameter lattice.
    Sweep(SweepArgs),
    /// Long-horizon check of the predicted threshold dynamics.
    DynamicsCheck(DynamicsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Section5,
    Constant,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Model configuration document (JSON).
    #[arg(long, conflicts_with = "family")]
    pub config: Option<PathBuf>,
    /// Inline model family.
    #[arg(long, value_enum)]
    pub family: Option<Family>,
    /// Birth-rate amplitudes p1,p2,p3,p4 (section5).
    #[arg(long, allow_hyphen_values = true)]
    pub p: Option<String>,
    /// Death-rate amplitudes q1,q2,q3,q4 (section5).
    #[arg(long, allow_hyphen_values = true)]
    pub q: Option<String>,
    /// Constant rates a1,b1,c1,l1,a2,b2,c2,l2 (constant).
    #[arg(long)]
    pub params: Option<String>,
    /// Diffusion rates d1,d2 (constant).
    #[arg(long)]
    pub diffusion: Option<String>,
    /// Domain length (constant).
    #[arg(long)]
    pub length: Option<f64>,
    /// Recovery rate of infected hosts (constant).
    #[arg(long)]
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct NumericsArgs {
    /// Grid intervals N [default 200].
    #[arg(long = "n")]
    pub intervals: Option<usize>,
    /// Time step; must divide the period [default T/1000].
    #[arg(long)]
    pub dt: Option<f64>,
    /// Periodic-orbit tolerance in sup norm.
    #[arg(long, default_value_t = 1e-8)]
    pub orbit_tol: f64,
    #[arg(long, default_value_t = 5000)]
    pub max_periods: usize,
    /// Power-iteration cap.
    #[arg(long, default_value_t = 10_000)]
    pub max_iter: usize,
    /// Relative tolerance of the reproduction-number root.
    #[arg(long, default_value_t = 1e-6)]
    pub root_tol: f64,
    /// Report single-resolution values instead of the dt-extrapolated ones.
    #[arg(long)]
    pub no_extrapolate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output file [default stdout].
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimSystem {
    Full,
    Modified,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub numerics: NumericsArgs,
    #[command(flatten)]
    pub out: OutputArgs,
    /// Initial data: "hu,hi,vu,vi" constants or "e1;e2;e3;e4" expressions in x.
    #[arg(long, allow_hyphen_values = true)]
    pub init: String,
    #[arg(long)]
    pub t_end: f64,
    #[arg(long, default_value_t = 1)]
    pub record_every: usize,
    #[arg(long, value_enum, default_value = "full")]
    pub system: SimSystem,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OrbitSystem {
    Full,
    Host,
    Vector,
}

#[derive(Debug, Clone, Args)]
pub struct PeriodicArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub numerics: NumericsArgs,
    #[command(flatten)]
    pub out: OutputArgs,
    #[arg(long, value_enum, default_value = "full")]
    pub system: OrbitSystem,
    /// Initial data for the full system.
    #[arg(long, allow_hyphen_values = true)]
    pub init: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub numerics: NumericsArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// a1,b1,c1,l1,a2,b2,c2,l2
    #[arg(long)]
    pub params: String,
    /// d1,d2; the constant-case quantities do not depend on them.
    #[arg(long, default_value = "0.1,0.2")]
    pub diffusion: String,
    #[command(flatten)]
    pub numerics: NumericsArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// Sweep specification document (JSON); replaces the inline flags.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Varied parameter "name:min:max[:samples]" (17 samples when omitted), repeatable.
    #[arg(long = "vary", allow_hyphen_values = true)]
    pub vary: Vec<String>,
    /// Linked parameter "target=source" or "target=-source", repeatable.
    #[arg(long = "link", allow_hyphen_values = true)]
    pub link: Vec<String>,
    /// Values of the parameters that are not varied: p1,p2,p3,p4.
    #[arg(long, allow_hyphen_values = true)]
    pub p: Option<String>,
    /// q1,q2,q3,q4.
    #[arg(long, allow_hyphen_values = true)]
    pub q: Option<String>,
    /// Comma-separated subset of R0,lambda,zeta1,zeta2,R01,R02.
    #[arg(long, default_value = "R0")]
    pub outputs: String,
    #[command(flatten)]
    pub numerics: NumericsArgs,
    /// CSV destination [default stdout].
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Metadata destination [default <output>.meta.json when writing a file].
    #[arg(long)]
    pub meta: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct DynamicsArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub numerics: NumericsArgs,
    #[command(flatten)]
    pub out: OutputArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub init: Option<String>,
    /// Simulated periods.
    #[arg(long, default_value_t = dynamics::DEFAULT_HORIZON)]
    pub horizon: usize,
    /// Pass/fail tolerance on the final-period gap.
    #[arg(long, default_value_t = dynamics::DEFAULT_TOL)]
    pub tol: f64,
    /// JSON list of checks to run concurrently.
    #[arg(long, conflicts_with_all = ["config", "family", "init"])]
    pub batch: Option<PathBuf>,
    /// CSV dump of the final simulated period.
    #[arg(long)]
    pub trajectory: Option<PathBuf>,
}

/// An error with its exit status.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub error: Error,
}

trait Stage<T> {
    fn stage(self, code: i32) -> std::result::Result<T, Failure>;
}

impl<T> Stage<T> for Result<T> {
    fn stage(self, code: i32) -> std::result::Result<T, Failure> {
        self.map_err(|error| Failure { code, error })
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

#[derive(Serialize)]
struct ErrorRecord<'a> {
    schema_version: u32,
    kind: &'static str,
    status: &'a str,
    exit_code: i32,
    message: String,
}

/// Parses `argv` (program name first), runs the command and returns the
/// exit status.
pub fn cmd_dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            if code == EXIT_OK {
                let _ = e.print();
            } else {
                let rec = ErrorRecord {
                    schema_version: SCHEMA_VERSION,
                    kind: "error",
                    status: "usage",
                    exit_code: code,
                    message: e.to_string(),
                };
                eprintln!("{}", serde_json::to_string(&rec).unwrap_or_default());
            }
            return code;
        }
    };
    match run(cli.command) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let rec = ErrorRecord {
                schema_version: SCHEMA_VERSION,
                kind: "error",
                status: f.error.kind(),
                exit_code: f.code,
                message: f.error.to_string(),
            };
            eprintln!("{}", serde_json::to_string(&rec).unwrap_or_default());
            f.code
        }
    }
}

pub fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Simulate(a) => simulate(a),
        Command::Periodic(a) => periodic(a),
        Command::Eigen(a) => report(a, false),
        Command::R0(a) => report(a, true),
        Command::VerifyConstant(a) => verify(a),
        Command::Sweep(a) => sweep(a),
        Command::DynamicsCheck(a) => dynamics_check(a),
    }
}

fn parse_list<const K: usize>(s: &str, what: &str) -> Result<[f64; K]> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Config(format!("{what}: {s:?} is not a list of numbers")))?;
    v.try_into()
        .map_err(|_| Error::Config(format!("{what}: expected {K} comma-separated numbers, got {s:?}")))
}

struct LoadedModel {
    spec: ModelSpec,
    config_numerics: Option<crate::model::config::NumericsConfig>,
}

fn load_model(m: &ModelArgs) -> Result<LoadedModel> {
    let (spec, config_numerics) = if let Some(path) = &m.config {
        let cfg = ModelConfig::load(path)?;
        (cfg.build()?, cfg.numerics)
    } else {
        match m.family {
            None => {
                return Err(Error::Config(
                    "no model given: use --config PATH or --family section5|constant".into(),
                ))
            }
            Some(Family::Section5) => {
                let (Some(p), Some(q)) = (&m.p, &m.q) else {
                    return Err(Error::Config("section5 needs both --p and --q".into()));
                };
                let params = HeterogeneityParams::new(parse_list(p, "--p")?, parse_list(q, "--q")?);
                (ModelSpec::section5(&params)?, None)
            }
            Some(Family::Constant) => {
                let (Some(params), Some(diff), Some(length)) = (&m.params, &m.diffusion, m.length) else {
                    return Err(Error::Config(
                        "constant family needs --params, --diffusion and --length".into(),
                    ));
                };
                let mut cp = ConstantParams::parse_list(params)?;
                cp.gamma = m.gamma;
                let [d1, d2] = parse_list(diff, "--diffusion")?;
                (ModelSpec::constant_neumann(&cp, d1, d2, length)?, None)
            }
        }
    };
    validate_model(&spec).into_result()?;
    Ok(LoadedModel { spec, config_numerics })
}

fn numerics_for(n: &NumericsArgs, model: &LoadedModel) -> Result<Numerics> {
    let cfg = model.config_numerics;
    let intervals = n
        .intervals
        .or(cfg.and_then(|c| c.intervals))
        .unwrap_or(Numerics::default().intervals);
    let num = match n.dt.or(cfg.and_then(|c| c.dt)) {
        Some(dt) => Numerics::with_dt(intervals, model.spec.period, dt)?,
        None => Numerics::new(intervals, Numerics::default().steps_per_period),
    };
    num.validate()?;
    Ok(num)
}

fn options_for(n: &NumericsArgs) -> Result<SpectralOptions> {
    let opts = SpectralOptions {
        orbit_tol: n.orbit_tol,
        max_periods: n.max_periods,
        max_iterations: n.max_iter,
        root_rel_tol: n.root_tol,
        extrapolate: !n.no_extrapolate,
        ..SpectralOptions::default()
    };
    opts.validate()?;
    Ok(opts)
}

fn workers() -> Option<usize> {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .filter(|w| *w > 0)
}

fn open_output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn emit_json<T: Serialize>(out: &OutputArgs, kind: &str, payload: T) -> CliResult<()> {
    let mut w = open_output(&out.output).stage(EXIT_OUTPUT)?;
    write_json(&Envelope::new(kind, payload), &mut w).stage(EXIT_OUTPUT)?;
    w.flush().map_err(Error::from).stage(EXIT_OUTPUT)
}

fn write_trajectory_csv<W: Write>(tr: &[StateField], nodes: &[f64], out: W) -> Result<()> {
    write_orbit_csv(tr, nodes, out)
}

fn simulate(a: SimulateArgs) -> CliResult<()> {
    let model = load_model(&a.model).stage(EXIT_CONFIG)?;
    let num = numerics_for(&a.numerics, &model).stage(EXIT_NUMERICS)?;
    if a.record_every == 0 || !(a.t_end > 0.0) {
        return Err(Failure {
            code: EXIT_NUMERICS,
            error: Error::Validation("--t-end must be positive and --record-every at least 1".into()),
        });
    }
    let disc = Discretized::new(&model.spec, num).stage(EXIT_COMPUTE)?;
    let init = InitSpec::parse(&a.init)
        .and_then(|i| i.sample(&disc.grid.nodes()))
        .stage(EXIT_CONFIG)?;
    let tr: Trajectory<StateField> = match a.system {
        SimSystem::Full => simulate_full(&disc, init, a.t_end, a.record_every),
        SimSystem::Modified => simulate_modified(&disc, init, a.t_end, a.record_every),
    }
    .stage(EXIT_COMPUTE)?;
    match a.out.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut w = open_output(&a.out.output).stage(EXIT_OUTPUT)?;
            write_trajectory_csv(&tr.snapshots, &disc.grid.nodes(), &mut w).stage(EXIT_OUTPUT)
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Payload<'a> {
                nodes: Vec<f64>,
                trajectory: &'a Trajectory<StateField>,
            }
            emit_json(
                &a.out,
                "trajectory",
                Payload {
                    nodes: disc.grid.nodes(),
                    trajectory: &tr,
                },
            )
        }
    }
}

fn periodic(a: PeriodicArgs) -> CliResult<()> {
    let model = load_model(&a.model).stage(EXIT_CONFIG)?;
    let num = numerics_for(&a.numerics, &model).stage(EXIT_NUMERICS)?;
    let opts = options_for(&a.numerics).stage(EXIT_NUMERICS)?;
    let disc = Discretized::new(&model.spec, num).stage(EXIT_COMPUTE)?;
    let nodes = disc.grid.nodes();
    #[derive(Serialize)]
    struct Summary<S> {
        nodes: Vec<f64>,
        system: &'static str,
        orbit: S,
    }
    let format = a.out.format.unwrap_or(Format::Csv);
    match a.system {
        OrbitSystem::Full => {
            let Some(init) = &a.init else {
                return Err(Failure {
                    code: EXIT_CONFIG,
                    error: Error::Config("the full system needs --init".into()),
                });
            };
            let init = InitSpec::parse(init)
                .and_then(|i| i.sample(&nodes))
                .stage(EXIT_CONFIG)?;
            let orbit = find_periodic_orbit(&mut FullSystem::new(&disc), init, opts.orbit_tol, opts.max_periods)
                .stage(EXIT_COMPUTE)?;
            match format {
                Format::Csv => {
                    let mut w = open_output(&a.out.output).stage(EXIT_OUTPUT)?;
                    write_orbit_csv(&orbit.snapshots, &nodes, &mut w).stage(EXIT_OUTPUT)
                }
                Format::Json => emit_json(
                    &a.out,
                    "periodic-orbit",
                    Summary {
                        nodes,
                        system: "full",
                        orbit,
                    },
                ),
            }
        }
        OrbitSystem::Host | OrbitSystem::Vector => {
            let (species, name) = if a.system == OrbitSystem::Host {
                (Species::Host, "host")
            } else {
                (Species::Vector, "vector")
            };
            let orbit = logistic_orbit(&disc, species, opts.orbit_tol, opts.max_periods).stage(EXIT_COMPUTE)?;
            match format {
                Format::Csv => {
                    let mut w = open_output(&a.out.output).stage(EXIT_OUTPUT)?;
                    write_orbit_csv(&orbit.snapshots, &nodes, &mut w).stage(EXIT_OUTPUT)
                }
                Format::Json => emit_json(
                    &a.out,
                    "periodic-orbit",
                    Summary {
                        nodes,
                        system: name,
                        orbit,
                    },
                ),
            }
        }
    }
}

#[derive(Serialize)]
struct EigenPayload<'a> {
    zeta1: f64,
    zeta2: f64,
    lambda: Option<f64>,
    diagnostics: &'a crate::spectral::Diagnostics,
}

#[derive(Serialize)]
struct R0Payload<'a> {
    #[serde(flatten)]
    report: &'a SpectralReport,
    sign_consistency: String,
}

fn sign_note(r: &SpectralReport) -> String {
    match (r.r0, r.lambda) {
        (Some(r0), Some(l)) => {
            let ok = r.sign_consistent();
            format!(
                "sign(R0 - 1) = {} and sign(-lambda) = {}: {}",
                sign_word(r0 - 1.0),
                sign_word(-l),
                if ok { "consistent" } else { "INCONSISTENT" }
            )
        }
        _ => r.diagnostics.note.clone().unwrap_or_else(|| "R0 undefined".into()),
    }
}

fn sign_word(v: f64) -> &'static str {
    if v > 0.0 {
        "+"
    } else if v < 0.0 {
        "-"
    } else {
        "0"
    }
}

fn report(a: ReportArgs, r0: bool) -> CliResult<()> {
    let model = load_model(&a.model).stage(EXIT_CONFIG)?;
    let num = numerics_for(&a.numerics, &model).stage(EXIT_NUMERICS)?;
    let opts = options_for(&a.numerics).stage(EXIT_NUMERICS)?;
    let rep = spectral_report(&model.spec, num, &opts).stage(EXIT_COMPUTE)?;
    let format = a.out.format.unwrap_or(Format::Json);
    if format == Format::Csv {
        let mut w = open_output(&a.out.output).stage(EXIT_OUTPUT)?;
        let cells: Vec<(&str, Option<f64>)> = if r0 {
            vec![("R01", Some(rep.r01)), ("R02", Some(rep.r02)), ("R0", rep.r0)]
        } else {
            vec![
                ("zeta1", Some(rep.zeta1)),
                ("zeta2", Some(rep.zeta2)),
                ("lambda", rep.lambda),
            ]
        };
        let mut csv = csv::Writer::from_writer(&mut w);
        let res: Result<()> = (|| {
            csv.write_record(cells.iter().map(|c| c.0))?;
            csv.write_record(cells.iter().map(|c| crate::io::fmt_csv_opt(c.1)))?;
            csv.flush()?;
            Ok(())
        })();
        return res.stage(EXIT_OUTPUT);
    }
    if r0 {
        emit_json(
            &a.out,
            "r0",
            R0Payload {
                report: &rep,
                sign_consistency: sign_note(&rep),
            },
        )
    } else {
        emit_json(
            &a.out,
            "eigen",
            EigenPayload {
                zeta1: rep.zeta1,
                zeta2: rep.zeta2,
                lambda: rep.lambda,
                diagnostics: &rep.diagnostics,
            },
        )
    }
}

fn verify(a: VerifyArgs) -> CliResult<()> {
    let params = ConstantParams::parse_list(&a.params).stage(EXIT_CONFIG)?;
    params.validate().stage(EXIT_CONFIG)?;
    let diffusion: [f64; 2] = parse_list(&a.diffusion, "--diffusion").stage(EXIT_CONFIG)?;
    let stub = LoadedModel {
        spec: ModelSpec::constant_neumann(&params, diffusion[0], diffusion[1], 1.0).stage(EXIT_CONFIG)?,
        config_numerics: None,
    };
    let num = numerics_for(&a.numerics, &stub).stage(EXIT_NUMERICS)?;
    let opts = options_for(&a.numerics).stage(EXIT_NUMERICS)?;
    let rep = verify_constant(&params, diffusion, num, &opts).stage(EXIT_COMPUTE)?;
    match a.out.format.unwrap_or(Format::Json) {
        Format::Json => emit_json(&a.out, "verify-constant", rep),
        Format::Csv => {
            let mut w = open_output(&a.out.output).stage(EXIT_OUTPUT)?;
            let res: Result<()> = (|| {
                let mut csv = csv::Writer::from_writer(&mut w);
                csv.write_record(["quantity", "numeric", "exact", "gap"])?;
                for r in &rep.rows {
                    csv.write_record([r.quantity.clone(), fmt_csv(r.numeric), fmt_csv(r.exact), fmt_csv(r.gap)])?;
                }
                csv.flush()?;
                Ok(())
            })();
            res.stage(EXIT_OUTPUT)
        }
    }
}

fn sweep_spec(a: &SweepArgs) -> CliResult<SweepSpec> {
    if let Some(path) = &a.spec {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
            .stage(EXIT_CONFIG)?;
        let spec: SweepSpec = serde_json::from_str(&text)
            .map_err(|e| Error::Config(e.to_string()))
            .stage(EXIT_CONFIG)?;
        return Ok(spec);
    }
    let inline = || -> Result<SweepSpec> {
        let (Some(p), Some(q)) = (&a.p, &a.q) else {
            return Err(Error::Config(
                "inline sweeps need --p and --q for the parameters that are not varied".into(),
            ));
        };
        let varied = a.vary.iter().map(|s| Axis::parse(s)).collect::<Result<Vec<_>>>()?;
        let linked = a.link.iter().map(|s| Link::parse(s)).collect::<Result<Vec<_>>>()?;
        let outputs = a.outputs.split(',').map(Output::parse).collect::<Result<Vec<_>>>()?;
        Ok(SweepSpec {
            varied,
            fixed: HeterogeneityParams::new(parse_list(p, "--p")?, parse_list(q, "--q")?),
            linked,
            numerics: Numerics::default(),
            outputs,
            options: SpectralOptions::default(),
        })
    };
    let mut spec = inline().stage(EXIT_CONFIG)?;
    let stub = LoadedModel {
        spec: ModelSpec::section5(&HeterogeneityParams::default()).stage(EXIT_CONFIG)?,
        config_numerics: None,
    };
    spec.numerics = numerics_for(&a.numerics, &stub).stage(EXIT_NUMERICS)?;
    spec.options = options_for(&a.numerics).stage(EXIT_NUMERICS)?;
    Ok(spec)
}

fn sweep(a: SweepArgs) -> CliResult<()> {
    let spec = sweep_spec(&a)?;
    if let Err(e) = spec.numerics.validate().and_then(|_| spec.options.validate()) {
        return Err(Failure {
            code: EXIT_NUMERICS,
            error: e,
        });
    }
    spec.validate().stage(EXIT_CONFIG)?;
    let (table, meta) = run_sweep_with_metadata(&spec, workers()).stage(EXIT_COMPUTE)?;
    let mut w = open_output(&a.output).stage(EXIT_OUTPUT)?;
    write_table(&table, &mut w).stage(EXIT_OUTPUT)?;
    w.flush().map_err(Error::from).stage(EXIT_OUTPUT)?;
    let meta_path = a.meta.clone().or_else(|| a.output.as_ref().map(|p| meta_path_for(p)));
    if let Some(p) = meta_path {
        let f = File::create(&p).map_err(Error::from).stage(EXIT_OUTPUT)?;
        write_json(&meta, BufWriter::new(f)).stage(EXIT_OUTPUT)?;
    }
    Ok(())
}

/// `table.csv` -> `table.csv.meta.json`.
pub fn meta_path_for(p: &Path) -> PathBuf {
    let mut s = p.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

fn dynamics_check(a: DynamicsArgs) -> CliResult<()> {
    if !(a.tol > 0.0) || a.horizon == 0 {
        return Err(Failure {
            code: EXIT_NUMERICS,
            error: Error::Validation("--tol must be positive and --horizon at least 1".into()),
        });
    }
    if let Some(batch) = &a.batch {
        let text = std::fs::read_to_string(batch)
            .map_err(|e| Error::Config(format!("{}: {e}", batch.display())))
            .stage(EXIT_CONFIG)?;
        let items: Vec<BatchItem> = serde_json::from_str(&text)
            .map_err(|e| Error::Config(e.to_string()))
            .stage(EXIT_CONFIG)?;
        let stub = LoadedModel {
            spec: ModelSpec::section5(&HeterogeneityParams::default()).stage(EXIT_CONFIG)?,
            config_numerics: None,
        };
        let num = numerics_for(&a.numerics, &stub).stage(EXIT_NUMERICS)?;
        let opts = options_for(&a.numerics).stage(EXIT_NUMERICS)?;
        let results = run_batch(&items, num, &opts, workers()).stage(EXIT_COMPUTE)?;
        return emit_json(&a.out, "dynamics-batch", serde_json::json!({ "results": results }));
    }
    let model = load_model(&a.model).stage(EXIT_CONFIG)?;
    let num = numerics_for(&a.numerics, &model).stage(EXIT_NUMERICS)?;
    let opts = options_for(&a.numerics).stage(EXIT_NUMERICS)?;
    let disc = Discretized::new(&model.spec, num).stage(EXIT_COMPUTE)?;
    let Some(init) = &a.init else {
        return Err(Failure {
            code: EXIT_CONFIG,
            error: Error::Config("dynamics-check needs --init or --batch".into()),
        });
    };
    let init = InitSpec::parse(init)
        .and_then(|i| i.sample(&disc.grid.nodes()))
        .stage(EXIT_CONFIG)?;
    let rep = check_threshold_dynamics(&model.spec, init.clone(), a.horizon, a.tol, num, &opts).stage(EXIT_COMPUTE)?;
    if let Some(path) = &a.trajectory {
        let last = dynamics::final_period(&disc, init, a.horizon).stage(EXIT_COMPUTE)?;
        let f = File::create(path).map_err(Error::from).stage(EXIT_OUTPUT)?;
        write_orbit_csv(&last, &disc.grid.nodes(), BufWriter::new(f)).stage(EXIT_OUTPUT)?;
    }
    emit_json(&a.out, "dynamics-check", rep)
}
