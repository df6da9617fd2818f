//! Command-line front-end: argument parsing, `--config` expansion and exit codes.

mod commands;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Every requested criterion satisfied, bound held, round trip exact.
pub const EXIT_OK: i32 = 0;
/// A criterion was violated or a tolerance check failed.
pub const EXIT_VIOLATED: i32 = 1;
/// Malformed input, invalid parameters or infeasible specifications.
pub const EXIT_INPUT: i32 = 2;
/// The trajectory left the divergence ball.
pub const EXIT_DIVERGED: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "switchstab",
    version,
    about = "Stability analysis for switched systems"
)]
pub struct Cli {
    /// JSON object of flag values, e.g. {"family": "f.json", "N0": [2, 3]}; explicit flags win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Worker threads for independent batch items.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check stabilizing-class criteria for a signal and write reports plus a ψ/Ψ trace.
    #[command(args_override_self = true)]
    Analyze(AnalyzeArgs),
    /// Integrate a trajectory and check V(x(t)) against exp(ψ(t)) V(x_0).
    #[command(args_override_self = true)]
    Simulate(SimulateArgs),
    /// Synthesize a signal inside a class and verify it.
    #[command(args_override_self = true)]
    Generate(GenerateArgs),
    /// Recompute the three-mode example and the burst counterexample.
    #[command(args_override_self = true)]
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CriterionName {
    Dwell,
    Adt,
    Mdadt,
    Mixed,
    Asymptotic,
    Unified,
}

#[derive(Debug, Clone, Args)]
pub struct EstimatorArgs {
    /// Tail-window fraction of the horizon.
    #[arg(long, default_value_t = 0.5)]
    pub window: f64,
    /// Samples in the tail window.
    #[arg(long, default_value_t = 256)]
    pub samples: usize,
}

/// Class parameters shared by `analyze` and `generate`; lists are comma separated.
#[derive(Debug, Clone, Args)]
pub struct ClassArgs {
    #[arg(long = "tau-d")]
    pub tau_d: Option<f64>,
    /// One value, or one per subsystem for mode-dependent checks.
    #[arg(long = "N0", value_delimiter = ',', num_args = 1..)]
    pub n0: Vec<f64>,
    /// One value, or one per subsystem for mode-dependent checks.
    #[arg(long = "tau-a", value_delimiter = ',', num_args = 1..)]
    pub tau_a: Vec<f64>,
    #[arg(long = "T0")]
    pub t0: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub family: PathBuf,
    #[arg(long)]
    pub signal: PathBuf,
    /// Built from the family when omitted.
    #[arg(long)]
    pub certs: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "unified")]
    pub criteria: Vec<CriterionName>,
    #[command(flatten)]
    pub class: ClassArgs,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub family: PathBuf,
    #[arg(long)]
    pub signal: PathBuf,
    #[arg(long)]
    pub certs: Option<PathBuf>,
    /// Initial state; defaults to the first unit vector.
    #[arg(long, value_delimiter = ',', num_args = 1.., allow_negative_numbers = true)]
    pub x0: Vec<f64>,
    #[arg(long, default_value_t = 1e-2)]
    pub step: f64,
    /// Advance by matrix exponentials instead of RK4.
    #[arg(long)]
    pub exact: bool,
    /// Relative slack allowed in the bound check.
    #[arg(long, default_value_t = 1e-5)]
    pub tol: f64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClassName {
    Dwell,
    Adt,
    Mdadt,
    Mixed,
    Asymptotic,
    PaperExample,
    Burst,
    SqrtGrowth,
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    /// Generator specification file; replaces the class flags.
    #[arg(long, conflicts_with = "class")]
    pub spec: Option<PathBuf>,
    #[arg(long, required_unless_present = "spec")]
    pub class: Option<ClassName>,
    /// Defaults to the three-mode example family.
    #[arg(long)]
    pub family: Option<PathBuf>,
    #[command(flatten)]
    pub params: ClassArgs,
    #[arg(long, default_value_t = 0.9)]
    pub safety: f64,
    #[arg(long = "mean-hold")]
    pub mean_hold: Option<f64>,
    #[arg(long, default_value_t = 1e-3)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 20)]
    pub nmax: u32,
    #[arg(long)]
    pub k0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub k0p: Option<f64>,
    /// Horizon.
    #[arg(long = "T")]
    pub horizon: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ReproduceArgs {
    /// Tolerance for the rows compared with the published asymptotic value.
    #[arg(long)]
    pub strict: Option<f64>,
    #[arg(long, default_value_t = 20)]
    pub nmax: u32,
    #[arg(long, default_value_t = 1e-3)]
    pub epsilon: f64,
    /// Example signal length in periods.
    #[arg(long, default_value_t = 100)]
    pub periods: u32,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    /// Also write the table and the example bundle (family, certificates, signal) here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Error carrying an exit code and a message for stderr.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }
}

impl From<switchstab::Error> for Failure {
    fn from(e: switchstab::Error) -> Self {
        Self::input(e.to_string())
    }
}

/// Converts `--config` into flags placed right after the subcommand; keys
/// also given as explicit flags are dropped.
pub fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>, Failure> {
    let Some(k) = args.iter().position(|a| a == "--config") else {
        return Ok(args);
    };
    let path = args
        .get(k + 1)
        .ok_or_else(|| Failure::input("--config needs a file"))?
        .clone();
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Failure::input(format!("{}: {e}", path.to_string_lossy())))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Failure::input(format!("{}: {e}", path.to_string_lossy())))?;
    let serde_json::Value::Object(map) = value else {
        return Err(Failure::input(format!(
            "{}: config must be a JSON object",
            path.to_string_lossy()
        )));
    };
    let mut rest: Vec<OsString> = args[..k].to_vec();
    rest.extend_from_slice(&args[k + 2..]);
    let explicit = |flag: &str| {
        rest.iter().any(|a| {
            a.to_str()
                .is_some_and(|a| a == flag || a.starts_with(&format!("{flag}=")))
        })
    };
    let mut injected = Vec::new();
    for (key, v) in map {
        if explicit(&format!("--{key}")) {
            continue;
        }
        let flag = OsString::from(format!("--{key}"));
        match v {
            serde_json::Value::Bool(true) => injected.push(flag),
            serde_json::Value::Bool(false) | serde_json::Value::Null => {}
            serde_json::Value::String(s) => injected.extend([flag, s.into()]),
            serde_json::Value::Number(n) => injected.extend([flag, n.to_string().into()]),
            serde_json::Value::Array(items) => {
                let parts: Vec<String> = items
                    .iter()
                    .map(|x| match x {
                        serde_json::Value::String(s) => s.clone(),
                        other => other.to_string(),
                    })
                    .collect();
                injected.extend([flag, parts.join(",").into()]);
            }
            serde_json::Value::Object(_) => {
                return Err(Failure::input(format!(
                    "config key {key:?} holds an object"
                )))
            }
        }
    }
    let sub = rest
        .iter()
        .position(|a| {
            matches!(
                a.to_str(),
                Some("analyze" | "simulate" | "generate" | "reproduce")
            )
        })
        .ok_or_else(|| Failure::input("no subcommand given"))?;
    rest.splice(sub + 1..sub + 1, injected);
    Ok(rest)
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run(args: impl IntoIterator<Item = OsString>) -> i32 {
    let args = match expand_config(args.into_iter().collect()) {
        Ok(a) => a,
        Err(f) => {
            eprintln!("error: {}", f.message);
            return f.code;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Analyze(a) => commands::analyze(a, cli.jobs),
        Command::Simulate(a) => commands::simulate(a),
        Command::Generate(a) => commands::generate(a),
        Command::Reproduce(a) => commands::reproduce(a),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}
