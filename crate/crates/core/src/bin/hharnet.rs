use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::builder::PossibleValuesParser;
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use hharnet::cli::{self, ModelName, MODEL_NAMES};
use hharnet::config::RunConfig;
use hharnet::synth::SynthSpec;
use hharnet::Result;

/// Hierarchical activity recognition: prepare data, train, evaluate, compare.
#[derive(Parser)]
#[command(name = "hharnet", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to the config's `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> Result<(RunConfig, PathBuf)> {
        let config = RunConfig::load(&self.config)?;
        let out = cli::output_dir(&config, self.out.clone());
        Ok((config, out))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Ingest the manifest's user files and write train/val/test splits.
    Prepare(Common),
    /// Train one model on the prepared splits.
    Train {
        #[arg(value_parser = PossibleValuesParser::new(MODEL_NAMES))]
        model: String,
        #[command(flatten)]
        common: Common,
    },
    /// Score a model file on the prepared test split.
    Evaluate {
        model_file: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Tabulate every trained model against the reference numbers.
    Compare(Common),
    /// Rank flat-network architectures by validation accuracy.
    Gridsearch {
        #[command(flatten)]
        common: Common,
        /// Every per-layer width assignment instead of uniform widths.
        #[arg(long)]
        exhaustive: bool,
    },
    /// Write a synthetic dataset in the user-file format, with a config.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 6000)]
        samples: usize,
        #[arg(long, default_value_t = 16)]
        features: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

fn run(command: Command) -> Result<String> {
    match command {
        Command::Prepare(c) => {
            let (config, out) = c.load()?;
            cli::cmd_prepare(&config, &out)
        }
        Command::Train { model, common } => {
            let model: ModelName = model.parse()?;
            let (config, out) = common.load()?;
            cli::cmd_train(&config, &out, model)
        }
        Command::Evaluate { model_file, common } => {
            let (config, out) = common.load()?;
            cli::cmd_evaluate(&config, &out, &model_file)
        }
        Command::Compare(c) => {
            let (config, out) = c.load()?;
            cli::cmd_compare(&config, &out)
        }
        Command::Gridsearch { common, exhaustive } => {
            let (mut config, out) = common.load()?;
            config.gridsearch.exhaustive |= exhaustive;
            cli::cmd_gridsearch(&config, &out)
        }
        Command::Synth {
            out,
            samples,
            features,
            seed,
        } => {
            let spec = SynthSpec {
                samples,
                feature_count: features,
                seed,
                ..Default::default()
            };
            cli::cmd_synth(Path::new(&out), &spec)
        }
    }
}

fn one_line(text: &str) -> String {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with("For more information"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = one_line(&e.render().to_string());
            eprintln!("error[usage]: {}", msg.trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    match run(cli.command) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error[{}]: {}", e.kind(), one_line(&e.to_string()));
            ExitCode::FAILURE
        }
    }
}
