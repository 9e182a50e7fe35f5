use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mtgm_core::harness::pipeline::{cmd_collect, cmd_eval, cmd_train_rbm, cmd_train_vae, cmd_visualize};
use mtgm_core::harness::{AgentKind, RunConfig, Visual};

/// Multi-task gridworld exploration with deep generative models.
///
/// Settings come from the config file (if any), then `MTGM_*` environment
/// variables, then `--seed`.
#[derive(Parser, Debug)]
#[command(name = "mtgm", version)]
struct Cli {
    /// Flat `key = value` config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides `seed` from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Directory for datasets, models, CSVs and images.
    #[arg(long, global = true, default_value = "runs")]
    out: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the random agent and store end-of-episode views.
    Collect,
    /// Train the VAE on the collected dataset.
    TrainVae,
    /// Train the RBM on encoded dataset latents.
    TrainRbm,
    /// Evaluate an agent: strl, mtrl0 or mtrl-alpha.
    Eval { agent: AgentKind },
    /// Write an image: jacobian, rbm-clusters or vae-recon.
    Visualize { what: Visual },
    /// Print the effective configuration.
    Config,
}

fn resolve_config(cli: &Cli) -> mtgm_core::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cfg.apply_env(std::env::vars())?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> mtgm_core::Result<()> {
    let cfg = resolve_config(cli)?;
    let out = &cli.out;
    match &cli.command {
        Command::Collect => {
            let path = cmd_collect(&cfg, out)?;
            println!("wrote {} ({} episodes)", path.display(), cfg.collect_episodes);
        }
        Command::TrainVae => {
            let log = cmd_train_vae(&cfg, out)?;
            println!("vae: {} epochs, final loss {:.4}", log.len(), log.last().copied().unwrap_or(f64::NAN));
        }
        Command::TrainRbm => {
            let log = cmd_train_rbm(&cfg, out)?;
            println!(
                "rbm: {} epochs, final reconstruction error {:.6}",
                log.len(),
                log.last().copied().unwrap_or(f64::NAN)
            );
        }
        Command::Eval { agent } => println!("{}", cmd_eval(&cfg, *agent, out)?),
        Command::Visualize { what } => println!("wrote {}", cmd_visualize(&cfg, *what, out)?.display()),
        Command::Config => print!("{}", cfg.to_text()),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mtgm: {e}");
            ExitCode::FAILURE
        }
    }
}
