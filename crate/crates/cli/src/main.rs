//! `hyperwave`: raw audio -> hyper-images -> trained CNN -> song embeddings.
//!
//! Exit codes: 0 success, 1 usage/config error, 2 data error,
//! 3 numerical divergence.

mod commands;
mod imgout;

use clap::{Args, Parser, Subcommand};
use hyperwave_core::config::RunConfig;
use hyperwave_core::error::Error;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "hyperwave", version, about = "Acoustic hyper-image pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Override the configured RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the configured output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Render waveform and time-frequency panels for one audio file.
    Inspect {
        #[command(flatten)]
        common: Common,
        /// Audio file to inspect (defaults to `paths.audio` in the config).
        #[arg(long)]
        audio: Option<PathBuf>,
    },
    /// Extract hyper-images for every manifest snippet into the store.
    Extract {
        #[command(flatten)]
        common: Common,
    },
    /// Run k-fold cross validation: checkpoints, reports, history.
    Train {
        #[command(flatten)]
        common: Common,
    },
    /// Re-evaluate saved per-fold checkpoints on their test folds.
    Evaluate {
        #[command(flatten)]
        common: Common,
    },
    /// Extract latent embeddings for every stored snippet.
    Embed {
        #[command(flatten)]
        common: Common,
        /// Checkpoint stem (defaults to `<out>/checkpoints/fold0`).
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Fit a 3-component PCA over saved embeddings; write scatter outputs.
    Pca {
        #[command(flatten)]
        common: Common,
        /// Embedding file stem (defaults to `<out>/embeddings/embeddings`).
        #[arg(long)]
        embeddings: Option<PathBuf>,
    },
    /// Synthesize a hyper-image that the network classifies as a target class.
    Synth {
        #[command(flatten)]
        common: Common,
        /// Checkpoint stem (defaults to `<out>/checkpoints/fold0`).
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Target class name from the manifest.
        #[arg(long)]
        target: String,
        /// Override the configured step count.
        #[arg(long)]
        steps: Option<usize>,
        /// Override the configured step size.
        #[arg(long)]
        step_size: Option<f64>,
    },
}

fn load_config(common: &Common) -> Result<RunConfig, Error> {
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.paths.out = out.clone();
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Error> {
    match &cli.command {
        Command::Inspect { common, audio } => {
            let cfg = load_config(common)?;
            let audio = audio
                .clone()
                .or_else(|| cfg.paths.audio.clone())
                .ok_or_else(|| {
                    Error::Config("inspect needs --audio or `paths.audio` in the config".into())
                })?;
            commands::cmd_inspect(&cfg, &audio)
        }
        Command::Extract { common } => commands::cmd_extract(&load_config(common)?),
        Command::Train { common } => commands::cmd_train(&load_config(common)?),
        Command::Evaluate { common } => commands::cmd_evaluate(&load_config(common)?),
        Command::Embed { common, checkpoint } => {
            commands::cmd_embed(&load_config(common)?, checkpoint.as_deref())
        }
        Command::Pca { common, embeddings } => {
            commands::cmd_pca(&load_config(common)?, embeddings.as_deref())
        }
        Command::Synth {
            common,
            checkpoint,
            target,
            steps,
            step_size,
        } => commands::cmd_synth(
            &load_config(common)?,
            checkpoint.as_deref(),
            target,
            *steps,
            *step_size,
        ),
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Arch(_) => 1,
        Error::Divergence { .. } => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are successes; everything else is a
            // usage error (exit 1).
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
