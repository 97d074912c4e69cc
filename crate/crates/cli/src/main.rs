mod commands;
mod config;
mod history;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "promptevo", version, about = "Evolve password-generation prompts with island MAP-Elites")]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `random_seed` from the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for evolve/resume/synth, output CSV for metrics.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an evolution from the initial prompt.
    Evolve {
        /// Initial prompt file; the built-in baseline prompt when omitted.
        #[arg(long)]
        prompt: Option<PathBuf>,
    },
    /// Continue a run from its checkpoint.
    Resume {
        /// Checkpoint file; defaults to `<out>/checkpoint.json`.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Extend the run to this many iterations.
        #[arg(long)]
        max_iterations: Option<u64>,
    },
    /// Score a single prompt.
    Eval { prompt: PathBuf },
    /// Per-symbol F-score curve between generated and real passwords.
    Metrics { generated: PathBuf, real: PathBuf },
    /// Summary statistics of a history CSV.
    Report {
        history: PathBuf,
        /// Baseline cracked rate as a fraction; the iteration-0 row when omitted.
        #[arg(long)]
        baseline: Option<f64>,
    },
    /// Write a synthetic train/test corpus pair.
    Synth {
        #[arg(long, default_value_t = 20_000)]
        train: usize,
        #[arg(long, default_value_t = 5_000)]
        test: usize,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let out = cli.out.clone();
    let result = match cli.command {
        Command::Evolve { prompt } => commands::evolve(cli.config.as_deref(), cli.seed, prompt.as_deref(), out.as_deref()),
        Command::Resume { checkpoint, max_iterations } => {
            commands::resume(checkpoint.as_deref(), max_iterations, out.as_deref())
        }
        Command::Eval { prompt } => commands::eval(cli.config.as_deref(), cli.seed, &prompt),
        Command::Metrics { generated, real } => commands::metrics(&generated, &real, out.as_deref()),
        Command::Report { history, baseline } => commands::report(&history, baseline),
        Command::Synth { train, test } => commands::synth(cli.seed, train, test, out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.exit_code())
        }
    }
}
