use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use pmwell_lab::{run_experiment, ExperimentConfig, ExperimentKind, LabError};

#[derive(Parser)]
#[command(name = "pmwell", version, about = "Potential-well experiments for the doubly nonlinear porous medium equation")]
struct Cli {
    /// Output directory (overrides experiment.out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Random seed (overrides experiment.seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment kind named in the config.
    Run { config: PathBuf },
    /// Repeat single runs along one parameter axis.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        axis: String,
        /// Comma-separated values; may be empty.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        values: Vec<f64>,
    },
    /// Build the energy/Nehari dichotomy table.
    Table { config: PathBuf },
    /// First eigenvalue of the p-Laplacian on the configured grid.
    Eigen { config: PathBuf },
}

fn now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

fn execute(cli: Cli) -> Result<String, LabError> {
    let (path, kind, sweep) = match &cli.command {
        Command::Run { config } => (config, None, None),
        Command::Sweep { config, axis, values } => (config, Some(ExperimentKind::EnergySweep), Some((axis.as_str(), values.as_slice()))),
        Command::Table { config } => (config, Some(ExperimentKind::DichotomyTable), None),
        Command::Eigen { config } => (config, Some(ExperimentKind::EigenOnly), None),
    };
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(s) = cli.seed {
        cfg.experiment.seed = s;
    }
    let out = cli.out.clone().unwrap_or_else(|| cfg.experiment.out.clone());
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.workers.unwrap_or(0))
        .build()
        .map_err(|e| LabError::Config(format!("worker pool: {e}")))?;
    let started = now();
    let result = pool.install(|| run_experiment(&cfg, kind, sweep, &out));
    // Timestamps live in their own log so the summary stays reproducible.
    let log = format!(
        "started {started:.3}\nfinished {:.3}\nstatus {}\n",
        now(),
        match &result {
            Ok(_) => "ok".to_string(),
            Err(e) => e.to_string(),
        }
    );
    let _ = std::fs::write(out.join("run.log"), log);
    let summary = result?;
    Ok(format!("{} finished; artifacts in {}", format!("{:?}", summary.kind), out.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(msg) => {
            println!("{msg}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
