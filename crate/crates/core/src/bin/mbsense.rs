use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mbsense::experiment::{preset, run};

#[derive(Parser)]
#[command(name = "mbsense", version, about = "Multiband spectrum sensing experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config and write CSV series plus manifest.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a ready-made config to stdout.
    Preset {
        #[arg(long)]
        name: String,
    },
}

fn main() -> ExitCode {
    if let Some(n) = std::env::var("MBSENSE_THREADS").ok().and_then(|v| v.parse().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, seed, out } => {
            let text = match std::fs::read_to_string(&config) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: cannot read {}: {e}", config.display());
                    return ExitCode::from(4);
                }
            };
            match run(&text, seed, out.as_deref()) {
                Ok(m) => {
                    eprintln!("{}: {} series in {:.2}s", m.experiment, m.series.len(), m.wall_clock_s);
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
        Command::Preset { name } => match preset(&name) {
            Ok(cfg) => {
                print!("{}", cfg.to_toml());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        },
    }
}
