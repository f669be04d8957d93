//! Command-line front end.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure,
//! 4 I/O failure.

pub mod commands;
pub mod config;
pub mod io;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::eigen::EigenError;
use crate::ensemble::{with_threads, EnsembleError};
use crate::lattice::LatticeError;
use crate::observables::ObservableError;
use crate::scaling::ScalingError;
use config::{
    CollapseConfig, FidelityMapConfig, FitConfig, QfiConfig, SweepConfig, WavefunctionConfig,
    FIGURE_FAITHFUL_SAMPLES,
};

/// Directory for outputs when `--out` is not given.
pub const OUT_DIR_ENV: &str = "AASLAB_OUT_DIR";
/// Worker-thread count when `--threads` is not given.
pub const THREADS_ENV: &str = "AASLAB_THREADS";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("I/O failure: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl From<LatticeError> for CliError {
    fn from(e: LatticeError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<EigenError> for CliError {
    fn from(e: EigenError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<ObservableError> for CliError {
    fn from(e: ObservableError) -> Self {
        match e {
            ObservableError::Lattice(_) => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<EnsembleError> for CliError {
    fn from(e: EnsembleError) -> Self {
        match e {
            EnsembleError::InvalidGrid(_) => CliError::Config(e.to_string()),
            EnsembleError::Sample { .. } => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<ScalingError> for CliError {
    fn from(e: ScalingError) -> Self {
        match e {
            ScalingError::BadGrid { .. } | ScalingError::AnsatzMismatch(_) => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "aaslab", version, about = "Aubry-André-Stark localization laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Phase-averaged ζ, IPR, gap (and optionally QFI) over an (L, δ, h) grid.
    Sweep(Common),
    /// Cost-function data collapse of a sweep CSV.
    Collapse(Common),
    /// Log-log power-law fit of one sweep column against h.
    Fit(Common),
    /// Ground-state fidelity against a reference δ over a (δ, h) grid.
    FidelityMap(Common),
    /// Ground-state QFI against L at fixed h, with the β fit.
    Qfi(Common),
    /// Ground-state amplitudes at a single parameter point.
    Wavefunction(Common),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output file; defaults to `$AASLAB_OUT_DIR/<command>.<ext>` or the working directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides `master_seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides `n_samples`.
    #[arg(long, conflicts_with = "figure_faithful")]
    pub samples: Option<usize>,
    /// Worker threads (default: `$AASLAB_THREADS`, else all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Use 5000 phase samples per point.
    #[arg(long)]
    pub figure_faithful: bool,
}

impl Common {
    fn samples(&self) -> Option<usize> {
        if self.figure_faithful {
            Some(FIGURE_FAITHFUL_SAMPLES)
        } else {
            self.samples
        }
    }

    fn apply(&self, seed: &mut u64, samples: &mut usize) {
        if let Some(s) = self.seed {
            *seed = s;
        }
        if let Some(n) = self.samples() {
            *samples = n;
        }
    }

    fn reject_sampling_flags(&self, command: &str) -> Result<(), CliError> {
        if self.seed.is_some() || self.samples.is_some() || self.figure_faithful {
            return Err(CliError::Config(format!(
                "`{command}` does not sample phases; --seed/--samples/--figure-faithful do not apply"
            )));
        }
        Ok(())
    }

    fn out_path(&self, default_name: &str) -> PathBuf {
        match &self.out {
            Some(p) => p.clone(),
            None => std::env::var_os(OUT_DIR_ENV)
                .map(PathBuf::from)
                .unwrap_or_default()
                .join(default_name),
        }
    }

    fn threads(&self) -> Result<Option<usize>, CliError> {
        if let Some(n) = self.threads {
            return positive_threads(n).map(Some);
        }
        match std::env::var(THREADS_ENV) {
            Ok(v) => v
                .trim()
                .parse::<usize>()
                .map_err(|_| CliError::Config(format!("{THREADS_ENV}={v:?} is not a count")))
                .and_then(positive_threads)
                .map(Some),
            Err(_) => Ok(None),
        }
    }
}

fn positive_threads(n: usize) -> Result<usize, CliError> {
    if n == 0 {
        Err(CliError::Config("thread count must be at least 1".into()))
    } else {
        Ok(n)
    }
}

/// Executes a parsed command; returns the files written.
pub fn execute(cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    let common = match &cli.command {
        Command::Sweep(c)
        | Command::Collapse(c)
        | Command::Fit(c)
        | Command::FidelityMap(c)
        | Command::Qfi(c)
        | Command::Wavefunction(c) => c,
    };
    let threads = common.threads()?;
    let path: &Path = &common.config;
    match &cli.command {
        Command::Sweep(c) => {
            let mut cfg: SweepConfig = config::load(path)?;
            c.apply(&mut cfg.master_seed, &mut cfg.n_samples);
            let out = c.out_path("sweep.csv");
            with_threads(threads, || commands::sweep(&cfg, &out))
        }
        Command::Collapse(c) => {
            c.reject_sampling_flags("collapse")?;
            let cfg: CollapseConfig = config::load(path)?;
            let out = c.out_path("collapse.json");
            with_threads(threads, || commands::collapse_cmd(&cfg, &out))
        }
        Command::Fit(c) => {
            c.reject_sampling_flags("fit")?;
            let cfg: FitConfig = config::load(path)?;
            commands::fit_cmd(&cfg, &c.out_path("fit.json"))
        }
        Command::FidelityMap(c) => {
            let mut cfg: FidelityMapConfig = config::load(path)?;
            c.apply(&mut cfg.master_seed, &mut cfg.n_samples);
            let out = c.out_path("fidelity_map.csv");
            with_threads(threads, || commands::fidelity_map(&cfg, &out))
        }
        Command::Qfi(c) => {
            let mut cfg: QfiConfig = config::load(path)?;
            c.apply(&mut cfg.master_seed, &mut cfg.n_samples);
            let out = c.out_path("qfi.csv");
            with_threads(threads, || commands::qfi_cmd(&cfg, &out))
        }
        Command::Wavefunction(c) => {
            c.reject_sampling_flags("wavefunction")?;
            let cfg: WavefunctionConfig = config::load(path)?;
            commands::wavefunction(&cfg, &c.out_path("wavefunction.csv"))
        }
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("aaslab: {e}");
            e.exit_code()
        }
    }
}
