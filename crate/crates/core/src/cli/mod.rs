//! Command-line front end: argument parsing, config-file merging and
//! dispatch to the `gibbs`, `thermalize`, `sweep` and `fit` commands.

mod commands;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::estimator::{EstimatorMode, NoiseModel, DEFAULT_SHOTS};
use crate::model::UnitSystem;
use crate::optimizer::{Method, OptimizerConfig};
use crate::thermo::{log_grid, Engine};
use crate::vqt::DEFAULT_LAYERS;

pub use commands::{cmd_fit, cmd_gibbs, cmd_sweep, cmd_thermalize};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

pub const DEFAULT_T_MIN: f64 = 5e-4;
pub const DEFAULT_T_MAX: f64 = 350.0;
pub const DEFAULT_T_POINTS: usize = 40;

#[derive(Debug, Parser)]
#[command(
    name = "vqt",
    version,
    about = "Variational quantum thermalizer for the Heisenberg spin-1/2 dimer"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact Gibbs state and Hamiltonian matrices at one (J, T)
    Gibbs(#[command(flatten)] Common),
    /// One VQT optimization at one (J, T)
    Thermalize(#[command(flatten)] Common),
    /// VQT over a temperature grid for one or more couplings
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Start each temperature from the previous optimum
        #[arg(long)]
        warm_start: bool,
    },
    /// Fit J to a dataset (the bundled synthetic one by default)
    Fit {
        #[command(flatten)]
        common: Common,
        /// Dataset CSV with header T_K,value[,sigma]
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, value_enum)]
        engine: Option<EngineArg>,
        /// J scan range as lo:hi (Kelvin)
        #[arg(long)]
        j_range: Option<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum ModeArg {
    Exact,
    Shots,
    Noisy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum EngineArg {
    Analytic,
    Vqt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum MethodArg {
    Linear,
    Simplex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum UnitsArg {
    Cgs,
    Si,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
struct Common {
    /// Exchange coupling J/k_B in Kelvin; sweep accepts a comma list
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    #[serde(default)]
    j_over_kb: Vec<f64>,
    /// Single temperature, Kelvin
    #[arg(long, conflicts_with = "temps")]
    temp: Option<f64>,
    /// Temperature grid start:stop:n[:log|lin]
    #[arg(long)]
    temps: Option<String>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Shots per Pauli term
    #[arg(long)]
    shots: Option<u64>,
    /// Seed (falls back to $VQT_SEED, then 0)
    #[arg(long)]
    seed: Option<u64>,
    /// Circuit layers
    #[arg(long)]
    depth: Option<usize>,
    /// Objective evaluations per start
    #[arg(long)]
    max_iter: Option<usize>,
    /// Independent random starts
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Format for tabular outputs (curves, traces)
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
    #[arg(long)]
    g_factor: Option<f64>,
    #[arg(long, value_enum)]
    units: Option<UnitsArg>,
    /// Single-qubit depolarizing probability (noisy mode)
    #[arg(long)]
    noise_1q: Option<f64>,
    /// Two-qubit depolarizing probability (noisy mode)
    #[arg(long)]
    noise_2q: Option<f64>,
    /// Readout bit-flip probability (noisy mode)
    #[arg(long)]
    readout_flip: Option<f64>,
    /// JSON file with any of these settings; flags win
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

impl Common {
    fn overlay(self, file: Common) -> Common {
        Common {
            j_over_kb: if self.j_over_kb.is_empty() {
                file.j_over_kb
            } else {
                self.j_over_kb
            },
            temp: self.temp.or(if self.temps.is_some() { None } else { file.temp }),
            temps: self.temps.or(if self.temp.is_some() { None } else { file.temps }),
            mode: self.mode.or(file.mode),
            shots: self.shots.or(file.shots),
            seed: self.seed.or(file.seed),
            depth: self.depth.or(file.depth),
            max_iter: self.max_iter.or(file.max_iter),
            restarts: self.restarts.or(file.restarts),
            method: self.method.or(file.method),
            out: self.out.or(file.out),
            format: self.format.or(file.format),
            g_factor: self.g_factor.or(file.g_factor),
            units: self.units.or(file.units),
            noise_1q: self.noise_1q.or(file.noise_1q),
            noise_2q: self.noise_2q.or(file.noise_2q),
            readout_flip: self.readout_flip.or(file.readout_flip),
            config: self.config,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    Gibbs,
    Thermalize,
    Sweep,
    Fit,
}

/// Fully resolved settings for one command.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: CommandKind,
    pub j_over_kb: Vec<f64>,
    pub temperatures: Vec<f64>,
    pub mode: EstimatorMode,
    pub shots: u64,
    pub seed: u64,
    pub depth: usize,
    pub optimizer: OptimizerConfig,
    pub noise: NoiseModel,
    #[serde(skip)]
    pub out: PathBuf,
    pub format: OutputFormat,
    pub g_factor: f64,
    pub units: UnitSystem,
    pub warm_start: bool,
    pub data: Option<PathBuf>,
    pub engine: Engine,
    pub j_range: (f64, f64),
    /// Gate order of one circuit layer.
    pub layer_layout: &'static str,
}

pub const LAYER_LAYOUT: &str = "RX,RY,RZ on q0; RX,RY,RZ on q1; CRX(q0->q1); CRX(q1->q0)";

/// Failure classes mapped to exit codes.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Runtime(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Runtime(e) => write!(f, "error: {e}"),
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Parses `start:stop:n[:log|lin]`.
pub fn parse_temps(grid: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = grid.split(':').map(str::trim).collect();
    if !(3..=4).contains(&parts.len()) {
        return Err(format!("expected start:stop:n[:log|lin], got '{grid}'"));
    }
    let start: f64 = parts[0].parse().map_err(|_| format!("bad start '{}'", parts[0]))?;
    let stop: f64 = parts[1].parse().map_err(|_| format!("bad stop '{}'", parts[1]))?;
    let n: usize = parts[2]
        .parse()
        .map_err(|_| format!("bad point count '{}'", parts[2]))?;
    let log = match parts.get(3) {
        None | Some(&"log") => true,
        Some(&"lin") => false,
        Some(other) => return Err(format!("grid spacing must be log or lin, got '{other}'")),
    };
    if n == 0 {
        return Err("grid needs at least one point".into());
    }
    if !(start > 0.0) || !(stop >= start) || !stop.is_finite() {
        return Err(format!("need 0 < start <= stop, got {start}:{stop}"));
    }
    Ok(if log {
        log_grid(start, stop, n)
    } else if n == 1 {
        vec![start]
    } else {
        (0..n)
            .map(|i| start + (stop - start) * i as f64 / (n - 1) as f64)
            .collect()
    })
}

fn parse_range(text: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = text
        .split_once(':')
        .ok_or_else(|| format!("expected lo:hi, got '{text}'"))?;
    let lo: f64 = lo.trim().parse().map_err(|_| format!("bad lower bound '{lo}'"))?;
    let hi: f64 = hi.trim().parse().map_err(|_| format!("bad upper bound '{hi}'"))?;
    if !(hi > lo) {
        return Err(format!("need lo < hi, got {lo}:{hi}"));
    }
    Ok((lo, hi))
}

fn read_config_file(path: &Path) -> Result<Common, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Runtime(Error::io(path, e)))?;
    serde_json::from_str(&text).map_err(|e| {
        CliError::Runtime(Error::Parse {
            path: path.to_path_buf(),
            line: e.line() as u64,
            message: e.to_string(),
        })
    })
}

fn env_seed() -> Result<Option<u64>, CliError> {
    match std::env::var("VQT_SEED") {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| usage(format!("VQT_SEED must be a non-negative integer, got '{s}'"))),
        Err(_) => Ok(None),
    }
}

fn resolve(
    kind: CommandKind,
    flags: Common,
    warm_start: bool,
    data: Option<PathBuf>,
    engine: Option<EngineArg>,
    j_range: Option<String>,
) -> Result<RunConfig, CliError> {
    let c = match &flags.config {
        Some(path) => {
            let file = read_config_file(path)?;
            flags.overlay(file)
        }
        None => flags,
    };

    let mode = match c.mode.unwrap_or(ModeArg::Exact) {
        ModeArg::Exact => EstimatorMode::Exact,
        ModeArg::Shots => EstimatorMode::Shots,
        ModeArg::Noisy => EstimatorMode::Noisy,
    };
    let stochastic_flags = c.shots.is_some();
    let noise_flags = c.noise_1q.is_some() || c.noise_2q.is_some() || c.readout_flip.is_some();
    let uses_estimator = matches!(kind, CommandKind::Thermalize | CommandKind::Sweep)
        || (kind == CommandKind::Fit && engine == Some(EngineArg::Vqt));
    if !uses_estimator && (c.mode.is_some() || stochastic_flags || noise_flags) {
        return Err(usage("--mode, --shots and noise settings only apply to VQT runs"));
    }
    if mode == EstimatorMode::Exact && stochastic_flags {
        return Err(usage("--shots needs --mode shots or --mode noisy"));
    }
    if mode != EstimatorMode::Noisy && noise_flags {
        return Err(usage("noise settings need --mode noisy"));
    }

    let j_over_kb = if c.j_over_kb.is_empty() {
        vec![1.0]
    } else {
        c.j_over_kb.clone()
    };
    if j_over_kb.iter().any(|j| !j.is_finite()) {
        return Err(usage("--j-over-kb must be finite"));
    }
    let temperatures = match (c.temp, &c.temps) {
        (Some(t), _) => vec![t],
        (None, Some(grid)) => parse_temps(grid).map_err(usage)?,
        (None, None) => log_grid(DEFAULT_T_MIN, DEFAULT_T_MAX, DEFAULT_T_POINTS),
    };
    if temperatures.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
        return Err(usage("temperatures must be positive and finite"));
    }
    match kind {
        CommandKind::Gibbs | CommandKind::Thermalize => {
            if j_over_kb.len() != 1 {
                return Err(usage("this command takes a single --j-over-kb value"));
            }
            if c.temp.is_none() && !c.temps.as_deref().is_some_and(|_| temperatures.len() == 1) {
                return Err(usage("this command needs a single temperature (--temp)"));
            }
        }
        CommandKind::Fit => {
            if c.temp.is_some() || c.temps.is_some() {
                return Err(usage("fit takes its temperatures from the dataset"));
            }
            if !c.j_over_kb.is_empty() {
                return Err(usage("fit estimates J; use --j-range to bound the search"));
            }
        }
        CommandKind::Sweep => {}
    }

    let mut optimizer = OptimizerConfig::default();
    if let Some(m) = c.max_iter {
        optimizer.max_iterations = m;
    }
    if let Some(r) = c.restarts {
        optimizer.restarts = r;
    }
    if let Some(m) = c.method {
        optimizer.method = match m {
            MethodArg::Linear => Method::LinearApprox,
            MethodArg::Simplex => Method::Simplex,
        };
    }
    let seed = match c.seed {
        Some(s) => s,
        None => env_seed()?.unwrap_or(0),
    };
    optimizer.seed = seed;
    optimizer.validate().map_err(|e| usage(e.to_string()))?;

    let depth = c.depth.unwrap_or(DEFAULT_LAYERS);
    if depth == 0 {
        return Err(usage("--depth must be at least 1"));
    }
    let shots = c.shots.unwrap_or(DEFAULT_SHOTS);
    if shots == 0 {
        return Err(usage("--shots must be at least 1"));
    }
    let defaults = NoiseModel::default();
    let noise = NoiseModel::new(
        c.noise_1q.unwrap_or(defaults.p_depol_1q),
        c.noise_2q.unwrap_or(defaults.p_depol_2q),
        c.readout_flip.unwrap_or(defaults.p_readout_flip),
    )
    .map_err(|e| usage(e.to_string()))?;
    let g_factor = c.g_factor.unwrap_or(2.0);
    if !(g_factor > 0.0) || !g_factor.is_finite() {
        return Err(usage("--g-factor must be positive"));
    }
    let j_range = match j_range {
        Some(s) => parse_range(&s).map_err(usage)?,
        None => (0.1, 100.0),
    };

    Ok(RunConfig {
        command: kind,
        j_over_kb,
        temperatures,
        mode,
        shots,
        seed,
        depth,
        optimizer,
        noise,
        out: c.out.unwrap_or_else(|| PathBuf::from("vqt_out")),
        format: c.format.unwrap_or_default(),
        g_factor,
        units: match c.units {
            Some(UnitsArg::Si) => UnitSystem::Si,
            _ => UnitSystem::Cgs,
        },
        warm_start,
        data,
        engine: match engine {
            Some(EngineArg::Vqt) => Engine::Vqt,
            _ => Engine::Analytic,
        },
        j_range,
        layer_layout: LAYER_LAYOUT,
    })
}

fn resolve_cli(cli: Cli) -> Result<RunConfig, CliError> {
    match cli.command {
        Command::Gibbs(c) => resolve(CommandKind::Gibbs, c, false, None, None, None),
        Command::Thermalize(c) => resolve(CommandKind::Thermalize, c, false, None, None, None),
        Command::Sweep { common, warm_start } => resolve(CommandKind::Sweep, common, warm_start, None, None, None),
        Command::Fit {
            common,
            data,
            engine,
            j_range,
        } => resolve(CommandKind::Fit, common, false, data, engine, j_range),
    }
}

/// Parses `args` (including the program name) into a [`RunConfig`].
pub fn parse_config<I, T>(args: I) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| usage(e.to_string()))?;
    resolve_cli(cli)
}

/// Executes a resolved config; returns the files written.
pub fn execute(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(&cfg.out).map_err(|e| CliError::Runtime(Error::io(&cfg.out, e)))?;
    let files = match cfg.command {
        CommandKind::Gibbs => cmd_gibbs(cfg)?,
        CommandKind::Thermalize => cmd_thermalize(cfg)?,
        CommandKind::Sweep => cmd_sweep(cfg)?,
        CommandKind::Fit => cmd_fit(cfg)?,
    };
    Ok(files)
}

/// Entry point for the `vqt` binary; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = resolve_cli(cli).and_then(|cfg| execute(&cfg));
    match result {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("{e}");
            match e {
                CliError::Usage(_) => EXIT_USAGE,
                CliError::Runtime(_) => EXIT_RUNTIME,
            }
        }
    }
}
