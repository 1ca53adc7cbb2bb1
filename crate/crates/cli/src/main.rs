use clap::{Parser, Subcommand};
use haybench_cli::commands::{self, JudgeKind, RunOptions};
use haybench_cli::config::RunManifest;
use haybench_cli::error::CliError;
use haybench_core::gateway::{EndpointConfig, PromptMode};
use std::path::PathBuf;
use std::process::ExitCode;

/// Synthesizes long-context reasoning benchmarks from relational data and
/// evaluates model endpoints against machine-verifiable gold answers.
#[derive(Parser)]
#[command(name = "haybench", version, about)]
struct Cli {
    /// Base seed override for generation.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output path for the command's artifact.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Run-manifest path (databases, suite, grid, endpoints).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load, preprocess, and summarize a database manifest.
    Ingest {
        /// Database manifest path.
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Question-suite tools.
    Suite {
        #[command(subcommand)]
        command: SuiteCommand,
    },
    /// Build benchmark instances for every question and grid cell.
    Generate,
    /// Prompt a model endpoint (or built-in mock) with each instance.
    Run {
        /// Instance file from `generate`.
        #[arg(long)]
        instances: PathBuf,
        /// Endpoint base URL, `mock:gold`, or `mock:no-answer`.
        #[arg(long)]
        endpoint: String,
        /// Model name sent to the endpoint.
        #[arg(long, default_value = "default")]
        model: String,
        /// Prompting style.
        #[arg(long, default_value = "cot")]
        mode: String,
        /// Strip the reasoning scaffold (for reasoning-tuned models).
        #[arg(long)]
        reasoning_model: bool,
        /// Concurrent in-flight requests.
        #[arg(long, default_value_t = 4)]
        concurrency: usize,
        /// Retrieval baseline: keep only this many tokens of context.
        #[arg(long)]
        retrieve_tokens: Option<usize>,
        /// Retrieval scorer.
        #[arg(long, default_value = "lexical")]
        retriever: String,
        /// Embeddings endpoint for `--retriever endpoint`.
        #[arg(long)]
        embedding_endpoint: Option<String>,
    },
    /// Label responses against gold rows and score each instance.
    Judge {
        #[arg(long)]
        instances: PathBuf,
        #[arg(long)]
        run: PathBuf,
        /// `deterministic` or `endpoint` (endpoint settings come from
        /// the run manifest's judge entry).
        #[arg(long, default_value = "deterministic")]
        judge: String,
        /// Judge endpoint base URL (overrides the manifest).
        #[arg(long)]
        judge_endpoint: Option<String>,
        /// Judge model name.
        #[arg(long, default_value = "judge")]
        judge_model: String,
    },
    /// Render accuracy tables from an eval file.
    Report {
        #[arg(long)]
        instances: PathBuf,
        #[arg(long)]
        eval: PathBuf,
        /// Also write a tab-separated copy.
        #[arg(long)]
        tsv: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum SuiteCommand {
    /// Parse, classify, and annotate a suite file in place.
    Validate {
        #[arg(long)]
        suite: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Ingest { manifest } => {
            let summary = commands::cmd_ingest(&manifest, cli.out.as_deref())?;
            print!("{summary}");
        }
        Command::Suite {
            command: SuiteCommand::Validate { suite },
        } => {
            let manifest = match &cli.config {
                Some(path) => Some(RunManifest::read(path)?),
                None => None,
            };
            let summary = commands::cmd_suite_validate(&suite, manifest.as_ref())?;
            print!("{summary}");
        }
        Command::Generate => {
            let config_path = cli.config.ok_or_else(|| {
                CliError::Validation("generate requires --config <run-manifest>".into())
            })?;
            let out = cli
                .out
                .ok_or_else(|| CliError::Validation("generate requires --out <file>".into()))?;
            let manifest = RunManifest::read(&config_path)?;
            let summary = commands::cmd_generate(&manifest, &config_path, &out, cli.seed)?;
            print!("{summary}");
        }
        Command::Run {
            instances,
            endpoint,
            model,
            mode,
            reasoning_model,
            concurrency,
            retrieve_tokens,
            retriever,
            embedding_endpoint,
        } => {
            let out = cli
                .out
                .ok_or_else(|| CliError::Validation("run requires --out <file>".into()))?;
            let mode = PromptMode::parse(&mode).ok_or_else(|| {
                CliError::Validation(format!("unknown mode `{mode}` (expected cot or direct)"))
            })?;
            let options = RunOptions {
                endpoint,
                model,
                mode,
                reasoning_model,
                concurrency,
                retrieve_tokens,
                retriever,
                embedding_endpoint,
            };
            let summary = commands::cmd_run(&instances, &options, &out)?;
            print!("{summary}");
        }
        Command::Judge {
            instances,
            run,
            judge,
            judge_endpoint,
            judge_model,
        } => {
            let out = cli
                .out
                .ok_or_else(|| CliError::Validation("judge requires --out <file>".into()))?;
            let kind = match judge.as_str() {
                "deterministic" => JudgeKind::Deterministic,
                "endpoint" => {
                    let endpoint = match (judge_endpoint, &cli.config) {
                        (Some(url), _) => EndpointConfig::new(url, judge_model),
                        (None, Some(config_path)) => {
                            let manifest = RunManifest::read(config_path)?;
                            match JudgeKind::from_manifest(&manifest.judge) {
                                JudgeKind::Endpoint(e) => e,
                                JudgeKind::Deterministic => {
                                    return Err(CliError::Validation(
                                        "manifest judge entry is not an endpoint".into(),
                                    ));
                                }
                            }
                        }
                        (None, None) => {
                            return Err(CliError::Validation(
                                "endpoint judge requires --judge-endpoint or --config".into(),
                            ));
                        }
                    };
                    JudgeKind::Endpoint(endpoint)
                }
                other => {
                    return Err(CliError::Validation(format!(
                        "unknown judge `{other}` (expected deterministic or endpoint)"
                    )));
                }
            };
            let summary = commands::cmd_judge(&instances, &run, &kind, &out)?;
            print!("{summary}");
        }
        Command::Report {
            instances,
            eval,
            tsv,
        } => {
            let text =
                commands::cmd_report(&instances, &eval, cli.out.as_deref(), tsv.as_deref())?;
            print!("{text}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
