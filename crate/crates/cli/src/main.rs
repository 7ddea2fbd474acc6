use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use soundweave_cli::{fixture_config, run, CliError, Outcome, Overrides, PipelineConfig, Stage};

#[derive(Parser)]
#[command(name = "soundweave", version, about = "Assemble a book soundtrack from a movie adaptation's score")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one pipeline stage, or `all` of them in order.
    Run {
        #[arg(value_enum)]
        stage: Stage,
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides `out` in the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Weave seed (overrides `weave.seed`).
        #[arg(long)]
        seed: Option<u64>,
        /// Use this track-log TSV instead of the local fingerprint matcher.
        #[arg(long)]
        log_import: Option<PathBuf>,
    },
    /// Write the synthetic mini-corpus and a config for it.
    GenerateFixtures {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Text segmentation level written into the generated config.
        #[arg(long, default_value_t = 2)]
        partition_level: usize,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let json = match e.downcast_ref::<CliError>() {
                Some(c) => c.to_json(),
                None => serde_json::json!({ "error": "Internal", "message": format!("{e:#}") }).to_string(),
            };
            eprintln!("{json}");
            ExitCode::FAILURE
        }
    }
}

fn execute(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Run {
            stage,
            config,
            out,
            seed,
            log_import,
        } => {
            let overrides = Overrides { out, seed, log_import };
            let cfg = PipelineConfig::load(&config, &overrides)?;
            for r in run(stage, &cfg)? {
                let state = match r.outcome {
                    Outcome::Ran => "done",
                    Outcome::Cached => "cached",
                };
                println!("{}\t{state}", r.stage.name());
            }
            println!("report\t{}", cfg.out_dir.join("report.txt").display());
        }
        Command::GenerateFixtures {
            dir,
            seed,
            partition_level,
        } => {
            soundweave::synth::write_mini_corpus(&dir, seed).map_err(CliError::from)?;
            let config = dir.join("soundweave.conf");
            std::fs::write(&config, fixture_config(partition_level))
                .with_context(|| format!("writing {}", config.display()))?;
            println!("{}", config.display());
        }
    }
    Ok(())
}
