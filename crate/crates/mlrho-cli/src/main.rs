use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod run;
mod scenario;

use commands::{LwArgs, WeightArgs};
use run::RunOptions;
use scenario::Overrides;

#[derive(Parser)]
#[command(
    name = "mlrho",
    version,
    about = "Rigid charges coupled to the Maxwell field on a periodic grid"
)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for randomized probes.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        scheme: Option<String>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long = "T", allow_negative_numbers = true)]
        duration: Option<f64>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Also write one two-column file per diagnostic.
        #[arg(long)]
        emit_plots_data: bool,
    },
    /// Ball integrals of a Liénard-Wiechert field over growing radii.
    ProbeLw {
        #[arg(long, default_value = "circular")]
        worldline: String,
        #[arg(long, default_value_t = 1.0)]
        charge: f64,
        #[arg(long, default_value_t = 0.5)]
        r0: f64,
        #[arg(long, default_value_t = 1.0)]
        omega: f64,
        /// Velocity of a uniform worldline.
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "0.5,0,0",
            allow_negative_numbers = true
        )]
        velocity: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "100,200,400,800")]
        radii: Vec<f64>,
        #[arg(long, default_value_t = 2.0)]
        r_min: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        t: f64,
        #[arg(long)]
        advanced: bool,
        #[arg(long, default_value = "inverse_quadratic")]
        weight: String,
    },
    /// Report class constants and growth rate of a weight.
    CheckWeight {
        kind: String,
        #[arg(long)]
        file: Option<PathBuf>,
        #[arg(long, default_value_t = 32)]
        n: usize,
        #[arg(long, default_value_t = 16.0)]
        length: f64,
        #[arg(long, default_value_t = 200)]
        pairs: usize,
    },
    /// Norms of a stored field snapshot.
    Norms {
        snapshot: PathBuf,
        #[arg(long, default_value = "constant")]
        weight: String,
        #[arg(long)]
        file: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        order: usize,
    },
}

fn execute(cli: Cli) -> mlrho::Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| mlrho::Error::Config(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Run {
            scenario,
            scheme,
            dt,
            duration,
            out_dir,
            emit_plots_data,
        } => {
            let dir = run::run_scenario(
                &scenario,
                RunOptions {
                    overrides: Overrides {
                        scheme,
                        dt,
                        duration,
                        out_dir,
                    },
                    emit_plots: emit_plots_data,
                    seed: cli.seed,
                },
            )?;
            println!("wrote {}", dir.display());
        }
        Command::ProbeLw {
            worldline,
            charge,
            r0,
            omega,
            velocity,
            radii,
            r_min,
            t,
            advanced,
            weight,
        } => {
            let velocity: [f64; 3] = velocity
                .try_into()
                .map_err(|_| mlrho::Error::Config("--velocity needs three components".into()))?;
            print!(
                "{}",
                commands::probe_lw(&LwArgs {
                    worldline,
                    charge,
                    r0,
                    omega,
                    velocity,
                    radii,
                    r_min,
                    t,
                    advanced,
                    weight,
                })?
            );
        }
        Command::CheckWeight {
            kind,
            file,
            n,
            length,
            pairs,
        } => {
            print!(
                "{}",
                commands::check_weight(&WeightArgs {
                    kind: &kind,
                    file: file.as_deref(),
                    n,
                    length,
                    pairs,
                    seed: cli.seed,
                })?
            );
        }
        Command::Norms {
            snapshot,
            weight,
            file,
            order,
        } => print!("{}", commands::norms(&snapshot, &weight, file.as_deref(), order)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error: code={} {msg}", e.code());
            ExitCode::FAILURE
        }
    }
}
