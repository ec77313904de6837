use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mcwave_cli::{run, validate, RunOptions};

#[derive(Parser)]
#[command(name = "mcwave", version, about = "Achievable spectral efficiency sweeps for multicarrier waveforms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every scenario of a manifest and write CSV results.
    Run {
        manifest: PathBuf,
        /// Override every scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads.
        #[arg(long)]
        jobs: Option<usize>,
        /// Output directory.
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
    /// Check a manifest and list every constraint with its status.
    Validate { manifest: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { manifest, seed, jobs, out } => {
            match run(&manifest, &RunOptions { out_dir: out, seed, jobs }) {
                Ok(None) => {
                    eprintln!("warning: {} has no scenarios, nothing to do", manifest.display());
                    ExitCode::SUCCESS
                }
                Ok(Some(s)) => {
                    for e in &s.entries {
                        println!("{}: {} ({:.1} s)", e.name, e.output, e.wall_seconds);
                    }
                    println!("done in {:.1} s with {} workers", s.wall_seconds, s.jobs);
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
        Command::Validate { manifest } => match validate(&manifest) {
            Ok(rep) => {
                print!("{}", rep.render());
                if rep.passed() {
                    println!("all constraints satisfied");
                    ExitCode::SUCCESS
                } else {
                    eprintln!("error: {} constraint(s) violated", rep.failures().count());
                    ExitCode::from(1)
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(e.exit_code() as u8)
            }
        },
    }
}
