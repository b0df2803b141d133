//! `polygrade`: graded mesh refinement, convergence studies, Hardy constants
//! and weighted-norm sweeps from a TOML study config.
//!
//! Exit codes: 0 success, 2 invalid input, 3 numerical failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use polygrade::io::Format;
use polygrade::Error;

use config::{Overrides, StudyConfig};

#[derive(Parser)]
#[command(name = "polygrade", version, about = "Graded meshes and finite-element convergence studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the decompositions and meshes of every level with conformity reports.
    Refine(Common),
    /// Solve on every level and report errors and observed rates.
    Convergence(Common),
    /// Estimate the discrete Hardy constant per level.
    Hardy(Common),
    /// Sweep the weighted norm of the singular solution over quadrature depths.
    Norms(Common),
    /// Export a mesh as VTK or plain text.
    Export {
        #[command(flatten)]
        common: Common,
        /// Mesh file to convert (plain format, or a decomposition with --config).
        #[arg(long)]
        mesh: Option<PathBuf>,
        #[arg(long, default_value = "vtk")]
        format: String,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long)]
    degree: Option<u32>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides { levels: self.levels, degree: self.degree, kappa: self.kappa, out: self.out.clone() }
    }

    fn load(&self) -> polygrade::Result<Option<StudyConfig>> {
        self.config.as_ref().map(|p| StudyConfig::load(p, &self.overrides())).transpose()
    }

    fn require(&self) -> polygrade::Result<StudyConfig> {
        self.load()?.ok_or_else(|| Error::Domain("--config is required".into()))
    }
}

fn init_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("POLYGRADE_THREADS") else { return Ok(()) };
    let n: usize = v.trim().parse().map_err(|_| format!("POLYGRADE_THREADS='{v}' is not a thread count"))?;
    if n == 0 {
        return Err("POLYGRADE_THREADS must be positive".into());
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn run(cli: Cli) -> polygrade::Result<String> {
    match cli.command {
        Command::Refine(c) => commands::refine(&c.require()?),
        Command::Convergence(c) => commands::convergence(&c.require()?),
        Command::Hardy(c) => commands::hardy(&c.require()?),
        Command::Norms(c) => commands::norms(&c.require()?),
        Command::Export { common, mesh, format } => {
            let format: Format = format.parse()?;
            let cfg = common.load()?;
            let out = common
                .out
                .clone()
                .or_else(|| cfg.as_ref().map(|c| c.out.clone()))
                .unwrap_or_else(|| PathBuf::from("out"));
            commands::export(cfg.as_ref(), mesh.as_deref(), format, &out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(msg) = init_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    match run(cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}
