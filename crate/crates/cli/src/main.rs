use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use condwalk::lattice_dp::MEMORY_ENV;
use condwalk_cli::{load, run, Overrides, RunError};

#[derive(Parser)]
#[command(name = "condwalk", version, about = "Seeded experiments on conditioned random walks")]
#[command(after_help = format!("DP table memory is capped by ${MEMORY_ENV} (MiB)."))]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        config: PathBuf,
        /// Root seed; overrides the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; overrides the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (results do not depend on this).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Check a config without running it.
    Validate { config: PathBuf },
}

fn fail(e: &RunError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { config } => match load(&config) {
            Ok(l) => {
                println!("{}: valid {} config", config.display(), l.config.experiment.name());
                ExitCode::SUCCESS
            }
            Err(e) => fail(&e.into()),
        },
        Command::Run { config, seed, out, threads } => {
            let loaded = match load(&config) {
                Ok(l) => l,
                Err(e) => return fail(&e.into()),
            };
            if let Some(t) = threads.or(loaded.config.threads) {
                if t == 0 {
                    return fail(&RunError::Config(condwalk_cli::ConfigError("threads must be positive".into())));
                }
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
                    return fail(&RunError::Compute(e.to_string()));
                }
            }
            match run(&loaded, &Overrides { seed, out }) {
                Ok(report) => {
                    for f in &report.files {
                        println!("wrote {}", f.display());
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e),
            }
        }
    }
}
