//! polarflow command line: polar factorizations, single-trajectory flow
//! traces, and the ensemble experiment.
//!
//! Matrix files are JSON arrays of rows, e.g. `[[0,-2],[1,0]]`. Exit codes:
//! 0 success, 1 usage or parse error, 2 numerical failure, 3 i/o failure.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use polarflow::{
    emit_csv, integrate_with_reference, polar_oracle, polar_via_flow, tol, verify_decomposition,
    Error, ExperimentConfig, FlowOptions, MongeInstance, SpdMatrix, SquareMatrix,
};

/// Polar decomposition of invertible matrices through the vertical gradient
/// flow of the Gaussian Monge problem.
#[derive(Parser)]
#[command(name = "polarflow", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Factor A = PQ and verify the result.
    Polar(PolarArgs),
    /// Trace one flow trajectory to CSV.
    Flow(FlowArgs),
    /// Run the ensemble study described by a config file.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct PolarArgs {
    /// Matrix to factor (JSON array of rows).
    #[arg(long)]
    input: PathBuf,
    /// Source covariance (JSON array of rows); identity when omitted.
    #[arg(long)]
    sigma0: Option<PathBuf>,
    /// How to compute the factors.
    #[arg(long, value_enum, default_value_t = MethodArg::Flow)]
    method: MethodArg,
    /// Step size of the flow method.
    #[arg(long, default_value_t = 0.1)]
    h: f64,
    /// Step budget of the flow method.
    #[arg(long, default_value_t = 300)]
    max_steps: usize,
    /// Gradient-norm stopping tolerance of the flow method.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Where to write the factors and the verification report (JSON).
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct FlowArgs {
    /// Starting matrix (JSON array of rows).
    #[arg(long)]
    input: PathBuf,
    /// Source covariance (JSON array of rows); identity when omitted.
    #[arg(long)]
    sigma0: Option<PathBuf>,
    /// Step size.
    #[arg(long, default_value_t = 0.1)]
    h: f64,
    /// Number of steps (every step is recorded).
    #[arg(long, default_value_t = 300)]
    steps: usize,
    /// Where to write the trace (CSV).
    #[arg(long)]
    trace: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment description (JSON object).
    #[arg(long)]
    config: PathBuf,
    /// Directory for trajectories.csv, aggregate.csv and metadata.json.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    /// Integrate the gradient flow from B(0) = A.
    Flow,
    /// Direct spectral computation.
    Oracle,
}

/// A failed run, bucketed by exit code.
enum Failure {
    /// Exit 1: arguments or input files that never describe a valid problem.
    Usage(String),
    /// Exit 2: a well-posed problem the numerics refused or could not finish.
    Numerical(Error),
    /// Exit 3: the filesystem got in the way.
    Io(PathBuf, std::io::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Numerical(_) => 2,
            Failure::Io(..) => 3,
        }
    }

    /// Buckets a library error: i/o keeps its path, malformed-input shapes
    /// count as usage, everything else is a numerical outcome.
    fn from_core(e: Error) -> Self {
        match e {
            Error::Io { path, source } => Failure::Io(path, source),
            e @ (Error::NonFinite
            | Error::InvalidShape { .. }
            | Error::DimensionMismatch { .. }
            | Error::DimensionTooLarge { .. }) => Failure::Usage(e.to_string()),
            e => Failure::Numerical(e),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(reason) => write!(f, "{reason}"),
            Failure::Numerical(e) => write!(f, "{e}"),
            Failure::Io(path, e) => write!(f, "{}: {e}", path.display()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version arrive here too; they are not failures.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.code())
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Polar(args) => run_polar(&args),
        Command::Flow(args) => run_flow(&args),
        Command::Experiment(args) => run_experiment(&args),
    }
}

fn run_polar(args: &PolarArgs) -> Result<(), Failure> {
    check_step_size(args.h)?;
    if args.max_steps == 0 {
        return Err(Failure::Usage("--max-steps must be at least 1".into()));
    }
    if !args.tol.is_finite() {
        return Err(Failure::Usage("--tol must be finite".into()));
    }
    let (a, sigma0) = load_problem(&args.input, args.sigma0.as_deref())?;
    let inst = MongeInstance::new(a.clone(), sigma0.clone()).map_err(Failure::from_core)?;
    let factors = match args.method {
        MethodArg::Flow => {
            let opts = FlowOptions {
                h: args.h,
                max_steps: args.max_steps,
                omega_tol: args.tol,
                ..FlowOptions::default()
            };
            polar_via_flow(&inst, &opts)
        }
        MethodArg::Oracle => polar_oracle(&inst),
    }
    .map_err(Failure::from_core)?;
    let verification = verify_decomposition(&a, &factors, &sigma0, tol::ISOTROPY_DEFAULT);

    // Factor fields (p, q, method) at the top level, report nested beside.
    let mut doc = serde_json::to_value(&factors).expect("factors serialize");
    doc["verification"] = serde_json::to_value(&verification).expect("report serializes");
    let body = serde_json::to_string_pretty(&doc).expect("document serializes");
    write_text(&args.output, &(body + "\n"))
}

fn run_flow(args: &FlowArgs) -> Result<(), Failure> {
    check_step_size(args.h)?;
    if args.steps == 0 {
        return Err(Failure::Usage("--steps must be at least 1".into()));
    }
    let (a, sigma0) = load_problem(&args.input, args.sigma0.as_deref())?;
    let inst = MongeInstance::new(a, sigma0).map_err(Failure::from_core)?;
    let reference = polar_oracle(&inst).map_err(Failure::from_core)?;
    let opts = FlowOptions {
        h: args.h,
        max_steps: args.steps,
        // The requested step count is a schedule, not a budget: no early stop.
        omega_tol: f64::NEG_INFINITY,
        ..FlowOptions::default()
    };
    let trace = integrate_with_reference(&inst, &opts, Some(reference.p.base()))
        .map_err(Failure::from_core)?;
    let dist = trace.dist_to_ref_sq.as_ref().expect("a reference was supplied");

    let mut body = String::from("step,time,cost_j,omega_norm,fiber_residual,sq_dist_to_p\n");
    for (i, state) in trace.states.iter().enumerate() {
        writeln!(
            body,
            "{},{},{},{},{},{}",
            state.step_index,
            state.time,
            trace.cost[i],
            trace.omega_norm[i],
            trace.fiber_res[i],
            dist[i]
        )
        .expect("writing to a String cannot fail");
    }
    write_text(&args.trace, &body)
}

fn run_experiment(args: &ExperimentArgs) -> Result<(), Failure> {
    let text = read_text(&args.config)?;
    let config: ExperimentConfig =
        serde_json::from_str(&text).map_err(|e| bad_file(&args.config, &e))?;
    config.validate().map_err(Failure::Usage)?;
    // Claim the output directory before the long part so a bad path fails fast.
    fs::create_dir_all(&args.out_dir).map_err(|e| Failure::Io(args.out_dir.clone(), e))?;
    let report = polarflow::run_experiment(&config).map_err(Failure::from_core)?;
    let trajectories = args.out_dir.join("trajectories.csv");
    let aggregate = args.out_dir.join("aggregate.csv");
    emit_csv(&report, &trajectories, &aggregate).map_err(Failure::from_core)?;
    let metadata = serde_json::to_string_pretty(&report.metadata).expect("metadata serializes");
    write_text(&args.out_dir.join("metadata.json"), &(metadata + "\n"))?;

    println!(
        "{} trajectories ({} failed), {} aggregate rows -> {}",
        report.per_trajectory.len(),
        report.metadata.failed_trajectories.len(),
        report.aggregate.len(),
        args.out_dir.display()
    );
    Ok(())
}

fn check_step_size(h: f64) -> Result<(), Failure> {
    if h.is_finite() && h > 0.0 {
        Ok(())
    } else {
        Err(Failure::Usage("--h must be positive and finite".into()))
    }
}

/// Reads A and Σ₀ (identity at A's dimension when no file is given).
fn load_problem(
    input: &Path,
    sigma0: Option<&Path>,
) -> Result<(SquareMatrix, SpdMatrix), Failure> {
    let a = load_square(input)?;
    let sigma0 = match sigma0 {
        Some(path) => load_spd(path)?,
        None => SpdMatrix::identity(a.n()),
    };
    Ok((a, sigma0))
}

fn load_square(path: &Path) -> Result<SquareMatrix, Failure> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| bad_file(path, &e))
}

fn load_spd(path: &Path) -> Result<SpdMatrix, Failure> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| bad_file(path, &e))
}

/// Deserialization problems are usage errors, not i/o errors: the bytes
/// arrived fine and failed to mean anything.
fn bad_file(path: &Path, reason: &dyn fmt::Display) -> Failure {
    Failure::Usage(format!("{}: {reason}", path.display()))
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Io(path.to_owned(), e))
}

fn write_text(path: &Path, body: &str) -> Result<(), Failure> {
    fs::write(path, body).map_err(|e| Failure::Io(path.to_owned(), e))
}
