use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dynmdnd::io::pipeline;
use dynmdnd::io::{Overrides, RunConfig, OUTPUT_DIR_ENV};
use dynmdnd::{DecayKind, Error};

/// Dynamic edge-clustered nonparametric model for temporal multigraphs.
#[derive(Parser, Debug)]
#[command(name = "dynmdnd", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw a synthetic edge sequence and its latent clustering
    Simulate(RunArgs),
    /// Run the sampler on the training split and store posterior samples
    Train(RunArgs),
    /// Held-out predictive log-likelihood under the stored posterior
    Loglik(RunArgs),
    /// Rank candidate edges for the target slot
    Predict(RunArgs),
    /// Repeated train-and-predict with metric report
    Evaluate(RunArgs),
    /// Score stored predictions against the target slot
    Metrics(RunArgs),
    /// Print the resolved configuration
    Config(RunArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// TOML run configuration; defaults apply when omitted
    #[arg(short, long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    chains: Option<usize>,
    #[arg(long)]
    sweeps: Option<usize>,
    #[arg(long, value_parser = parse_decay)]
    decay: Option<DecayKind>,
    #[arg(long)]
    decay_scale: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    /// Output directory; overrides the config and the environment
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn parse_decay(s: &str) -> Result<DecayKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            chains: self.chains,
            sweeps: self.sweeps,
            decay: self.decay,
            decay_scale: self.decay_scale,
            alpha: self.alpha,
            gamma: self.gamma,
            tau: self.tau,
            output_dir: self.output.clone(),
        }
    }

    fn resolve(&self) -> Result<RunConfig, Error> {
        let cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let env = std::env::var_os(OUTPUT_DIR_ENV)
            .filter(|v| !v.is_empty())
            .map(PathBuf::from);
        cfg.resolve(&self.overrides(), env)
    }
}

const USAGE: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (Command::Simulate(args)
    | Command::Train(args)
    | Command::Loglik(args)
    | Command::Predict(args)
    | Command::Evaluate(args)
    | Command::Metrics(args)
    | Command::Config(args)) = &cli.command;
    let cfg = match args.resolve() {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(USAGE);
        }
    };
    let result = match cli.command {
        Command::Simulate(_) => pipeline::run_simulate(&cfg),
        Command::Train(_) => pipeline::run_train(&cfg),
        Command::Loglik(_) => pipeline::run_loglik(&cfg),
        Command::Predict(_) => pipeline::run_predict(&cfg),
        Command::Evaluate(_) => pipeline::run_evaluate(&cfg),
        Command::Metrics(_) => pipeline::run_metrics(&cfg),
        Command::Config(_) => match cfg.to_toml() {
            Ok(text) => {
                print!("{text}");
                return ExitCode::SUCCESS;
            }
            Err(e) => Err(e),
        },
    };
    match result {
        Ok(summary) => {
            println!(
                "{}",
                serde_json::to_string_pretty(&summary).expect("summary serializes")
            );
            ExitCode::SUCCESS
        }
        Err(e @ Error::Config(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(USAGE)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
