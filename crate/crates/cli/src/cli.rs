use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "helmholtz-hp", version, about = "hp-FEM experiments for the heterogeneous Helmholtz equation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one source or scattering problem on [−R, R] and sample the solution.
    Solve(Common),
    /// Split solutions into low- and high-frequency parts and fit their k-scalings.
    Decompose(Common),
    /// Run the experiment named in the [sweep] table of the config.
    Sweep(Common),
    /// Adjoint approximability η(V_N) with C_sol and the duality threshold.
    Eta(Common),
    /// Norm of the solution operator L² → H¹_k.
    Csol(Common),
    /// Overlay columns of existing sweep CSVs on one log–log chart.
    Report(Common),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Solve(_) => "solve",
            Command::Decompose(_) => "decompose",
            Command::Sweep(_) => "sweep",
            Command::Eta(_) => "eta",
            Command::Csol(_) => "csol",
            Command::Report(_) => "report",
        }
    }

    pub fn common(&self) -> &Common {
        match self {
            Command::Solve(c)
            | Command::Decompose(c)
            | Command::Sweep(c)
            | Command::Eta(c)
            | Command::Csol(c)
            | Command::Report(c) => c,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML run file, or a manifest.json from an earlier run.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
    #[arg(long, allow_negative_numbers = true)]
    pub k: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub h: Option<f64>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for independent runs.
    #[arg(long, env = "HELMHOLTZ_HP_JOBS")]
    pub jobs: Option<usize>,
    /// Also write an SVG chart.
    #[arg(long)]
    pub svg: bool,
}
