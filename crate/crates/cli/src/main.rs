//! `gcdrift`: full-orbit and guiding-centre runs, ω-sweeps and field checks.
//!
//! Exit codes: 0 success, 1 failed assertion, 2 usage or configuration error,
//! 3 numerical failure.

mod commands;
mod config;
mod output;

use clap::{Args, Parser, Subcommand};
use config::{Sub, Table};
use std::ffi::OsString;
use std::path::PathBuf;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Config(String),
    Assertion(String),
    Core(gcdrift::Error),
    Io(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Assertion(m) => write!(f, "assertion failed: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Assertion(_) => 1,
            CliError::Usage(_) | CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Core(e) if e.is_numerical() => 3,
            CliError::Core(_) => 2,
        }
    }
}

impl From<gcdrift::Error> for CliError {
    fn from(e: gcdrift::Error) -> Self {
        CliError::Core(e)
    }
}

#[derive(Parser, Debug)]
#[command(name = "gcdrift", version, about = "Charged-particle orbits and guiding-centre asymptotics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// TOML configuration file (flat keys).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Re-run from a manifest.json written by an earlier run.
    #[arg(long, conflicts_with = "config")]
    manifest: Option<PathBuf>,
    /// Override a key: `--set omega=1e3` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Print the defaults for this subcommand as TOML and exit.
    #[arg(long)]
    print_defaults: bool,
    /// Field model.
    #[arg(long)]
    model: Option<String>,
    /// Normalised gyrofrequency.
    #[arg(long)]
    omega: Option<f64>,
    /// Final time.
    #[arg(long = "T", value_name = "T")]
    t_end: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug, Clone, Default)]
struct SweepFlags {
    /// zeroth_order | first_order_gc | moment_drift | avg_gyro | pressure_remainder
    #[arg(long)]
    metric: Option<String>,
    /// Comma-separated ω values.
    #[arg(long, value_delimiter = ',')]
    omegas: Option<Vec<f64>>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate one full orbit.
    Simulate(Common),
    /// Integrate the guiding-centre equations.
    Gc(Common),
    /// Full orbit against guiding centre, with diagnostics.
    Compare(Common),
    /// ω-sweep of a convergence metric.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sweep: SweepFlags,
    },
    /// Divergence, force balance and Jacobian checks of a field model.
    VerifyField(Common),
    /// Vector-identity residuals of a field model.
    VerifyIdentities(Common),
    /// Mirror-field bounce diagnostics.
    MirrorBounce(Common),
    /// Pressure change along an orbit in an equilibrium field.
    PressureDrift(Common),
}

fn layers(sub: Sub, common: &Common, sweep: &SweepFlags) -> Result<Vec<(&'static str, Table)>, CliError> {
    let mut out = Vec::new();
    if let Some(path) = &common.config {
        out.push(("config file", config::read_toml(path)?));
    }
    if let Some(path) = &common.manifest {
        let m = output::read_manifest(path)?;
        if m.subcommand != sub.name() {
            return Err(CliError::Config(format!(
                "manifest `{}` records subcommand `{}`, not `{}`",
                path.display(),
                m.subcommand,
                sub.name()
            )));
        }
        out.push(("manifest", m.config));
    }
    let mut set = Table::new();
    for item in &common.set {
        let (k, v) = config::parse_set(item)?;
        set.insert(k, v);
    }
    if !set.is_empty() {
        out.push(("--set", set));
    }
    let mut flags = Table::new();
    if let Some(m) = &common.model {
        flags.insert("model".into(), serde_json::json!(m));
    }
    if let Some(w) = common.omega {
        flags.insert("omega".into(), serde_json::json!(w));
    }
    if let Some(t) = common.t_end {
        flags.insert("T".into(), serde_json::json!(t));
    }
    if let Some(s) = common.seed {
        flags.insert("seed".into(), serde_json::json!(s));
    }
    if let Some(m) = &sweep.metric {
        flags.insert("metric".into(), serde_json::json!(m));
    }
    if let Some(w) = &sweep.omegas {
        flags.insert("omegas".into(), serde_json::json!(w));
    }
    if !flags.is_empty() {
        out.push(("flag", flags));
    }
    Ok(out)
}

fn dispatch(sub: Sub, common: Common, sweep: SweepFlags) -> Result<(), CliError> {
    let layers = layers(sub, &common, &sweep)?;
    let table = config::resolve(sub, &layers)?;
    if common.print_defaults {
        let text = toml::to_string(&table).map_err(|e| CliError::Config(e.to_string()))?;
        print!("{text}");
        return Ok(());
    }
    commands::run(sub, table, &common.out)
}

/// Parses `argv` and runs the subcommand; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let none = SweepFlags::default();
    let result = match cli.command {
        Command::Simulate(c) => dispatch(Sub::Simulate, c, none),
        Command::Gc(c) => dispatch(Sub::Gc, c, none),
        Command::Compare(c) => dispatch(Sub::Compare, c, none),
        Command::Sweep { common, sweep } => dispatch(Sub::Sweep, common, sweep),
        Command::VerifyField(c) => dispatch(Sub::VerifyField, c, none),
        Command::VerifyIdentities(c) => dispatch(Sub::VerifyIdentities, c, none),
        Command::MirrorBounce(c) => dispatch(Sub::MirrorBounce, c, none),
        Command::PressureDrift(c) => dispatch(Sub::PressureDrift, c, none),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("gcdrift: {e}");
            e.exit_code()
        }
    }
}

fn main() {
    std::process::exit(run(std::env::args_os()));
}
