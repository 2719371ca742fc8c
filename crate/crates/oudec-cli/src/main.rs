//! Command-line front end for the decoherence toolkit.
//!
//! Subcommands: `decay` (coherence curves), `sweep` (decoherence time
//! against correlation time with a power-law fit), `limit` (memoryless
//! limit table), `presets` (SI estimates for named environments).
//!
//! Exit codes: 0 success, 2 argument or config error, 3 numerical
//! failure.

mod commands;
mod output;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::PresetArgs;
use settings::Settings;

#[derive(Debug)]
pub enum AppError {
    /// Invalid arguments or config; exit code 2.
    Config(String),
    /// The computation itself failed; exit code 2 for domain errors,
    /// 3 for numerical failures.
    Compute(oudec::Error),
    /// Filesystem trouble; exit code 1.
    Io(std::io::Error),
}

impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> Self {
        AppError::Io(e)
    }
}

impl std::fmt::Display for AppError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AppError::Config(msg) => write!(f, "{msg}"),
            AppError::Compute(e) => write!(f, "{e}"),
            AppError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl AppError {
    fn exit_code(&self) -> u8 {
        match self {
            AppError::Config(_) => 2,
            AppError::Compute(e) => match e {
                oudec::Error::StepExceedsGuard
                | oudec::Error::TruncationNotConverged
                | oudec::Error::TruncationRunaway
                | oudec::Error::HorizonExceeded
                | oudec::Error::InfraredDivergent
                | oudec::Error::SweepPoint { .. } => 3,
                oudec::Error::Io(_) => 1,
                _ => 2,
            },
            AppError::Io(_) => 1,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "oudec",
    version,
    about = "Decoherence times for exponentially correlated environments",
    long_about = "Generates coherence decay curves, correlation-time sweeps with \
                  power-law fits, memoryless-limit tables, and preset estimates. \
                  All numeric output is deterministic CSV."
)]
struct Cli {
    /// Flat `key = value` config file applied between defaults and flags
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output CSV path (defaults to `<subcommand>.csv`)
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Worker threads for sweep points (default: available processors)
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Pointer-state separation
    #[arg(long, global = true)]
    a: Option<f64>,

    /// Action scale
    #[arg(long, global = true)]
    hbar: Option<f64>,

    /// Noise strength
    #[arg(long = "D", global = true)]
    d: Option<f64>,

    /// Bath correlation time (0 = memoryless)
    #[arg(long = "tau-c", global = true)]
    tau_c: Option<f64>,

    /// Inverse temperature (thermal rate integral only)
    #[arg(long, global = true)]
    beta: Option<f64>,

    /// Grid horizon (default: 20 square-root estimates)
    #[arg(long = "t-max", global = true)]
    t_max: Option<f64>,

    /// Grid step (default: auto, capped by stability guards)
    #[arg(long, global = true)]
    dt: Option<f64>,

    /// Sweep grid lower bound
    #[arg(long = "tau-c-min", global = true)]
    tau_c_min: Option<f64>,

    /// Sweep grid upper bound
    #[arg(long = "tau-c-max", global = true)]
    tau_c_max: Option<f64>,

    /// Sweep grid point count (log-spaced)
    #[arg(long, global = true)]
    points: Option<usize>,

    /// Decades for the limit table
    #[arg(long, global = true)]
    decades: Option<u32>,

    /// Decoherence threshold on |C| (default 1/e)
    #[arg(long, global = true)]
    threshold: Option<f64>,

    /// Interpolate the threshold crossing between grid points (default)
    #[arg(long, global = true, overrides_with = "grid_point")]
    interpolate: bool,

    /// Record the first grid point at or below the threshold instead of
    /// interpolating
    #[arg(long = "grid-point", global = true, overrides_with = "interpolate")]
    grid_point: bool,

    /// Hard cap on the pseudomode Fock truncation
    #[arg(long = "fock-cap", global = true)]
    fock_cap: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write coherence decay curves for one or more methods
    Decay {
        /// Method tag: tegmark, quadratic, eq16, nmqsd, pseudomode, oracle
        #[arg(long = "method", value_name = "TAG")]
        methods: Vec<String>,
    },
    /// Sweep the correlation time and fit the power law
    Sweep {
        /// Method tag: formula, tegmark, quadratic, eq16, nmqsd, pseudomode, oracle
        #[arg(long = "method", value_name = "TAG")]
        methods: Vec<String>,
    },
    /// Tabulate the decoherence time on a descending tau_c grid against
    /// the memoryless bound
    Limit,
    /// Decoherence-time estimates for preset environments (SI seconds)
    Presets {
        /// Preset name: water, microtubule, or custom
        name: String,
        /// Memoryless decoherence bound of the object under study, in seconds
        #[arg(long = "tau-t")]
        tau_t: Option<f64>,
        /// Correlation-time multiplier over bulk water (microtubule preset)
        #[arg(long)]
        multiplier: Option<f64>,
        /// Lower correlation-time bound in seconds (custom preset)
        #[arg(long = "tau-c-low")]
        tau_c_low: Option<f64>,
        /// Upper correlation-time bound in seconds (custom preset)
        #[arg(long = "tau-c-high")]
        tau_c_high: Option<f64>,
    },
}

fn resolve_settings(cli: &Cli) -> Result<Settings, AppError> {
    let mut settings = Settings::default();
    if let Some(path) = &cli.config {
        settings.apply_file(path)?;
    }
    if let Some(v) = cli.a {
        settings.a = v;
    }
    if let Some(v) = cli.hbar {
        settings.hbar = v;
    }
    if let Some(v) = cli.d {
        settings.d = v;
    }
    if let Some(v) = cli.tau_c {
        settings.tau_c = v;
        settings.tau_c_explicit = true;
    }
    if let Some(v) = cli.beta {
        settings.beta = Some(v);
    }
    if let Some(v) = cli.t_max {
        settings.t_max = Some(v);
    }
    if let Some(v) = cli.dt {
        settings.dt = Some(v);
    }
    if let Some(v) = cli.tau_c_min {
        settings.tau_c_min = v;
    }
    if let Some(v) = cli.tau_c_max {
        settings.tau_c_max = v;
    }
    if let Some(v) = cli.points {
        settings.points = v;
    }
    if let Some(v) = cli.decades {
        settings.decades = v;
    }
    if let Some(v) = cli.threshold {
        settings.threshold = v;
    }
    if cli.grid_point {
        settings.interpolate = false;
    } else if cli.interpolate {
        settings.interpolate = true;
    }
    if let Some(v) = cli.fock_cap {
        settings.fock_cap = v;
    }
    if let Some(v) = cli.jobs {
        settings.jobs = Some(v);
    }
    if let Some(path) = &cli.out {
        settings.out = Some(path.clone());
    }
    match &cli.command {
        Command::Decay { methods } | Command::Sweep { methods } if !methods.is_empty() => {
            settings.methods = methods.clone();
        }
        _ => {}
    }
    Ok(settings)
}

fn run(cli: &Cli) -> Result<(), AppError> {
    let settings = resolve_settings(cli)?;
    match &cli.command {
        Command::Decay { .. } => commands::decay(&settings),
        Command::Sweep { .. } => commands::sweep(&settings),
        Command::Limit => commands::limit(&settings),
        Command::Presets {
            name,
            tau_t,
            multiplier,
            tau_c_low,
            tau_c_high,
        } => commands::presets(&PresetArgs {
            name: name.clone(),
            tau_t: *tau_t,
            multiplier: *multiplier,
            tau_c_low: *tau_c_low,
            tau_c_high: *tau_c_high,
        }),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
