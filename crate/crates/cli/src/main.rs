use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kscg_cli::{run_file, RunOptions};

#[derive(Parser)]
#[command(name = "kscg", version, about = "Sum-rate scaling experiments for cognitive uplinks under K-SCG feedback")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment spec (TOML) or re-run a JSON sidecar.
    Run {
        spec: PathBuf,
        /// Override the spec's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the spec's trials per point.
        #[arg(long)]
        trials: Option<usize>,
        /// Artifact directory (default: the spec's `output`).
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Worker threads.
        #[arg(long, env = "KSCG_JOBS")]
        jobs: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { spec, seed, trials, out_dir, jobs } => {
            let opts = RunOptions { seed, trials, out_dir, jobs };
            match run_file(&spec, &opts) {
                Ok(summary) => {
                    let sc = &summary.sidecar;
                    println!("{} ({}, seed {}, {} trials/point)", sc.name, sc.experiment, sc.seed, sc.trials);
                    for s in &sc.series {
                        match (&s.fit, &s.profile) {
                            (Some(f), _) => println!(
                                "  {:<12} slope {:.4} ± {:.4} vs {} (theory {:.4})",
                                s.label, f.fitted_slope, f.slope_se, f.regressor, f.theory_slope
                            ),
                            (_, Some(p)) => println!(
                                "  {:<12} spearman {:.4}, first mu=0 at N={}",
                                s.label,
                                p.spearman,
                                p.first_slack_n.map_or("-".into(), |n| n.to_string())
                            ),
                            _ => println!("  {}", s.label),
                        }
                    }
                    for f in &summary.files {
                        println!("  wrote {}", f.display());
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
    }
}
