use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use lmc_lab::{emit, run, RunConfig, Stage};

#[derive(Parser)]
#[command(name = "lmc-lab", about = "Solve and check Lagrangian mean curvature instances")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every instance and check in a config file.
    Run {
        config: PathBuf,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run only the named check.
        #[arg(long)]
        only: Option<String>,
    },
}

fn main() -> ExitCode {
    let Command::Run { config, seed, out, only } = Cli::parse().command;
    let mut cfg = match RunConfig::load(&config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(Stage::Config.exit_code());
        }
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(o) = out {
        cfg.out_dir = o;
    }
    let outcome = run(&cfg, only.as_deref());
    print!("{}", emit::summary(&outcome.report));
    if let Err(e) = emit::emit_reports(&outcome, &cfg.out_dir, cfg.checks.dump_fields) {
        eprintln!("error: {e}");
        return ExitCode::from(Stage::Config.exit_code());
    }
    ExitCode::from(outcome.report.stage.exit_code())
}
