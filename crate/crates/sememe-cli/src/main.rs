//! `sememe` command line: prepare artifacts, train the factorization
//! models, predict sememes for words, and evaluate all methods.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric
//! failure during training.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sememe::config::PipelineConfig;
use sememe::pipeline::{self, EvalSplit, PipelineError, TrainTarget};

#[derive(Parser)]
#[command(name = "sememe", version, about = "Sememe recommendation pipelines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Pipeline configuration file; relative paths inside it resolve
    /// against its directory.
    #[arg(long, short)]
    config: PathBuf,
    /// Override a config key, e.g. `--set seed=7`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Load annotations, filter sememes, split, compute PMI, build the
    /// position index, and write all artifacts with a digest manifest.
    Prepare {
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Train a factorization model from prepared artifacts.
    Train {
        #[command(flatten)]
        config: ConfigArgs,
        /// One of: spse, spse-csp, spcse.
        #[arg(long)]
        model: String,
    },
    /// Predict top-k sememes for words (arguments or a file, one word per
    /// line); prints one JSON record per word.
    Predict {
        #[command(flatten)]
        config: ConfigArgs,
        /// Words to score.
        words: Vec<String>,
        /// Read words from a file, one per line.
        #[arg(long)]
        words_file: Option<PathBuf>,
        #[arg(long, default_value_t = 5)]
        top_k: usize,
    },
    /// Evaluate every method on a prepared split and print the report.
    Evaluate {
        #[command(flatten)]
        config: ConfigArgs,
        /// dev or test.
        #[arg(long, default_value = "test")]
        split: String,
    },
}

const CONFIG_EXIT: u8 = 2;
const DATA_EXIT: u8 = 3;

fn load_config(args: &ConfigArgs) -> Result<(PipelineConfig, PathBuf), PipelineError> {
    let mut config = PipelineConfig::from_path(&args.config)?;
    for entry in &args.overrides {
        let (key, value) = entry.split_once('=').ok_or_else(|| {
            sememe::config::ConfigError::BadSyntax { line: 0 }
        })?;
        config.apply_override(key.trim(), value.trim())?;
    }
    if let Ok(out) = std::env::var("SEMEME_OUTPUT_DIR") {
        if !out.is_empty() {
            config.apply_override("output_dir", &out)?;
        }
    }
    let base = args
        .config
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."))
        .to_path_buf();
    Ok((config, base))
}

fn run() -> Result<(), PipelineError> {
    let cli = Cli::parse();
    match cli.command {
        Command::Prepare { config } => {
            let (config, base) = load_config(&config)?;
            let summary = pipeline::prepare(&config, &base)?;
            println!(
                "prepared: {} words loaded, {} kept over {} sememes",
                summary.loaded_words, summary.filtered_words, summary.sememes
            );
            println!(
                "splits: train {} / dev {} / test {}",
                summary.train_words, summary.dev_words, summary.test_words
            );
            println!("pmi entries: {}", summary.pmi_entries);
            println!("manifest: {}", summary.manifest.display());
        }
        Command::Train { config, model } => {
            let (config, base) = load_config(&config)?;
            let target = TrainTarget::parse(&model).ok_or_else(|| {
                PipelineError::Config(sememe::config::ConfigError::OutOfRange {
                    key: "model".into(),
                    msg: format!("unknown model {model:?}; expected spse, spse-csp, or spcse"),
                })
            })?;
            let summary = pipeline::train(&config, &base, target)?;
            println!(
                "trained {} epochs; loss {} -> {}",
                summary.epochs, summary.initial_loss, summary.final_loss
            );
            if summary.dropped_words > 0 {
                eprintln!(
                    "warning: {} train words lacked usable vectors and were dropped",
                    summary.dropped_words
                );
            }
            println!("checkpoint: {}", summary.checkpoint.display());
        }
        Command::Predict {
            config,
            mut words,
            words_file,
            top_k,
        } => {
            let (config, base) = load_config(&config)?;
            if let Some(path) = words_file {
                let text = fs::read_to_string(&path)?;
                words.extend(text.lines().filter(|l| !l.trim().is_empty()).map(str::to_string));
            }
            if words.is_empty() {
                return Err(PipelineError::Config(
                    sememe::config::ConfigError::OutOfRange {
                        key: "words".into(),
                        msg: "no words given; pass arguments or --words-file".into(),
                    },
                ));
            }
            let records = pipeline::predict(&config, &base, &words, top_k)?;
            let mut all_failed = true;
            for record in &records {
                if record.status == "ok" {
                    all_failed = false;
                }
                println!(
                    "{}",
                    serde_json::to_string(record).expect("record serializes")
                );
            }
            if all_failed {
                return Err(PipelineError::Eval(sememe::eval::EvalError::EvaluationEmpty));
            }
        }
        Command::Evaluate { config, split } => {
            let (config, base) = load_config(&config)?;
            let split = EvalSplit::parse(&split).ok_or_else(|| {
                PipelineError::Config(sememe::config::ConfigError::OutOfRange {
                    key: "split".into(),
                    msg: format!("unknown split {split:?}; expected dev or test"),
                })
            })?;
            let report = pipeline::evaluate(&config, &base, split)?;
            print!("{}", report.render());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            let code = err.exit_code();
            ExitCode::from(u8::try_from(code).unwrap_or(DATA_EXIT.max(CONFIG_EXIT)))
        }
    }
}
