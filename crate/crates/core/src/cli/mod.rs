//! Experiment runner: one subcommand per analysis, JSON config in, CSV out.

mod commands;
mod config;
mod table;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

pub use commands::{
    cmd_fpt, cmd_ingest, cmd_linearity, cmd_mixture, cmd_spectrum, cmd_sweep, cmd_trajectories, Command,
};
pub use config::{
    BetaSource, ModeName, ParamsConfig, RunConfig, SweepGrid, TimeGrid, DEFAULT_J, DEFAULT_SHOTS, MIXTURE_J,
};
pub use table::{Cell, SweepTable, TableSection};

use crate::error::{Error, ErrorKind, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "nonlinq", version, about = "Dissipative qutrit experiments under no-jump postselection")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Args, Clone, Default)]
pub struct Common {
    /// JSON run configuration
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed (overrides the config)
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (overrides the config)
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Exact probabilities instead of finite shots
    #[arg(long, global = true)]
    pub exact: bool,
    /// Output file name instead of <command>-<timestamp>-<seed>.csv
    #[arg(long, global = true)]
    pub name: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Eigenvalues and PT regime of H_eff over the J sweep
    Spectrum(#[command(flatten)] Common),
    /// P(+z) and postselected Pn(+z) versus J and time, starting in |e⟩
    Sweep(#[command(flatten)] Common),
    /// First passage time |e⟩ → |f⟩ versus J
    Fpt(#[command(flatten)] Common),
    /// OFS linearity metric and renormalization ratios
    Linearity(#[command(flatten)] Common),
    /// Classical-mixture test, postselected and full
    Mixture(#[command(flatten)] Common),
    /// Quantum-jump trajectories and postselection statistics
    Trajectories(#[command(flatten)] Common),
    /// Correct and reconstruct external tomography counts
    Ingest {
        /// Counts CSV (axis,shots,n_g,n_plus,n_minus)
        counts: PathBuf,
        /// Readout model: device, identity, or a JSON file holding a 3x3 matrix
        #[arg(long)]
        beta: Option<String>,
        #[command(flatten)]
        common: Common,
    },
}

impl CliCommand {
    fn parts(&self) -> (Command, &Common) {
        match self {
            CliCommand::Spectrum(c) => (Command::Spectrum, c),
            CliCommand::Sweep(c) => (Command::Sweep, c),
            CliCommand::Fpt(c) => (Command::Fpt, c),
            CliCommand::Linearity(c) => (Command::Linearity, c),
            CliCommand::Mixture(c) => (Command::Mixture, c),
            CliCommand::Trajectories(c) => (Command::Trajectories, c),
            CliCommand::Ingest { common, .. } => (Command::Ingest, common),
        }
    }
}

/// Loads the config file (if any) and applies flag overrides.
pub fn resolve_config(common: &Common) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(o) = &common.out {
        cfg.output_dir = Some(o.clone());
    }
    if common.exact {
        cfg.shots = 0;
    }
    Ok(cfg)
}

/// Runs one command to a table without touching the filesystem (except
/// reading the counts file for `ingest`).
pub fn execute(command: &CliCommand, cfg: &RunConfig) -> Result<SweepTable> {
    match command {
        CliCommand::Spectrum(_) => cmd_spectrum(cfg),
        CliCommand::Sweep(_) => cmd_sweep(cfg),
        CliCommand::Fpt(_) => cmd_fpt(cfg),
        CliCommand::Linearity(_) => cmd_linearity(cfg),
        CliCommand::Mixture(_) => cmd_mixture(cfg),
        CliCommand::Trajectories(_) => cmd_trajectories(cfg),
        CliCommand::Ingest { counts, beta, .. } => {
            let mut cfg = cfg.clone();
            if let Some(b) = beta {
                cfg.beta = BetaSource::parse_flag(b)?;
                cfg.beta.resolve()?;
            }
            cmd_ingest(counts, &cfg)
        }
    }
}

pub fn output_path(command: Command, cfg: &RunConfig, name: Option<&str>) -> PathBuf {
    let dir = cfg.output_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    let file = match name {
        Some(n) => n.to_string(),
        None => {
            let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
            format!("{}-{}-{}.csv", command.name(), stamp, cfg.seed)
        }
    };
    dir.join(file)
}

fn write_table(table: &SweepTable, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    table.write(&mut file)?;
    use std::io::Write;
    file.flush()?;
    Ok(())
}

pub fn exit_code(err: &Error) -> i32 {
    match err.kind() {
        ErrorKind::Config | ErrorKind::Input => EXIT_CONFIG,
        ErrorKind::Data => EXIT_DATA,
        ErrorKind::Numerical => EXIT_NUMERICAL,
    }
}

/// Parses arguments, runs the command and writes its CSV. Returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let (command, common) = cli.command.parts();
    let result = resolve_config(common).and_then(|cfg| {
        let table = execute(&cli.command, &cfg)?;
        let path = output_path(command, &cfg, common.name.as_deref());
        write_table(&table, &path)?;
        Ok(path)
    });
    match result {
        Ok(path) => {
            println!("{}", path.display());
            EXIT_OK
        }
        Err(e) => {
            eprintln!("nonlinq {}: {e}", command.name());
            exit_code(&e)
        }
    }
}
