//! `geval`: generate evaluation steps, score datasets, and meta-evaluate the
//! scores against human ratings.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use geval::benchmarks::AdapterKind;
use geval::metaeval::{AggregationMode, TauVariant, UndefinedPolicy};
use tracing_subscriber::EnvFilter;

use crate::config::{descriptor, BackendKind, RunConfig};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "geval", version, about = "LLM-as-judge scoring and meta-evaluation")]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Run directory for artifacts, caches and reports.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    backend: Option<BackendKind>,
    /// Script file for the mock backend.
    #[arg(long, global = true)]
    mock_script: Option<PathBuf>,
    /// Judge model name.
    #[arg(long, global = true)]
    model: Option<String>,
    /// Seed for retry jitter.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overwrite existing run artifacts.
    #[arg(long, global = true)]
    force: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate (or show cached) evaluation steps for criteria.
    Cot(CotArgs),
    /// Score every record on every selected criterion.
    Score(ScoreArgs),
    /// Correlate stored scores with human ratings.
    Metaeval(MetaevalArgs),
    /// Compare scores of human-written and model-written summaries.
    Bias(BiasArgs),
    /// Validate a benchmark file and write it as normalized JSONL.
    Convert(ConvertArgs),
}

#[derive(Debug, Args)]
struct TaskArgs {
    /// Task preset: summeval, topical_chat or qags.
    #[arg(long)]
    task: Option<String>,
    /// JSON array of criterion definitions replacing the preset's.
    #[arg(long)]
    criteria_file: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DatasetArgs {
    /// Benchmark file; replaces configured datasets.
    #[arg(long, requires = "adapter")]
    dataset: Option<PathBuf>,
    #[arg(long, value_parser = parse_adapter)]
    adapter: Option<AdapterKind>,
    /// Dataset name and record provenance; defaults to the file stem.
    #[arg(long)]
    dataset_name: Option<String>,
}

#[derive(Debug, Args)]
struct CotArgs {
    #[command(flatten)]
    task: TaskArgs,
    /// Criteria to generate steps for; all of the task's by default.
    criteria: Vec<String>,
}

#[derive(Debug, Args)]
struct ScoreArgs {
    #[command(flatten)]
    task: TaskArgs,
    #[command(flatten)]
    dataset: DatasetArgs,
    /// Comma-separated subset of criteria.
    #[arg(long, value_delimiter = ',')]
    criteria: Vec<String>,
    /// Leave the evaluation steps out of the prompt.
    #[arg(long)]
    no_cot: bool,
    /// Take one greedy completion at face value instead of weighting scores.
    #[arg(long)]
    no_probs: bool,
    /// Read score probabilities from token logprobs instead of sampling.
    #[arg(long, conflicts_with = "no_probs")]
    logprobs: bool,
    #[arg(long)]
    n_samples: Option<u32>,
    #[arg(long)]
    temperature: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AggregationArg {
    Summary,
    Turn,
    Pooled,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TauArg {
    A,
    B,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum UndefinedArg {
    Skip,
    Zero,
}

#[derive(Debug, Args)]
struct MetaevalArgs {
    /// Results JSONL; defaults to results.jsonl in the run directory.
    #[arg(long)]
    results: Option<PathBuf>,
    #[command(flatten)]
    dataset: DatasetArgs,
    #[arg(long)]
    task: Option<String>,
    /// Table layout: summeval, topical_chat or qags.
    #[arg(long)]
    table: Option<String>,
    #[arg(long, value_enum)]
    aggregation: Option<AggregationArg>,
    #[arg(long, value_enum)]
    tau_variant: Option<TauArg>,
    #[arg(long, value_enum)]
    undefined: Option<UndefinedArg>,
    /// Row label in the report.
    #[arg(long)]
    label: Option<String>,
}

#[derive(Debug, Args)]
struct BiasArgs {
    /// JSONL of {source, human_summary, llm_summary, preference}.
    #[arg(long)]
    preferences: Option<PathBuf>,
    /// Criterion of the task preset to score with.
    #[arg(long)]
    criterion: Option<String>,
    #[command(flatten)]
    task: TaskArgs,
}

#[derive(Debug, Args)]
struct ConvertArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_parser = parse_adapter)]
    adapter: AdapterKind,
    /// Dataset name and record provenance; defaults to the file stem.
    #[arg(long)]
    name: Option<String>,
    /// Output file; defaults to <output-dir>/<name>.jsonl.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Validate only; write nothing.
    #[arg(long)]
    dry_run: bool,
}

fn parse_adapter(s: &str) -> Result<AdapterKind, String> {
    s.parse()
}

impl Cli {
    fn apply_globals(&self, cfg: &mut RunConfig) {
        if let Some(dir) = &self.output_dir {
            cfg.output_dir = dir.clone();
        }
        if let Some(kind) = self.backend {
            cfg.backend.kind = kind;
        }
        if let Some(script) = &self.mock_script {
            cfg.backend.mock_script = Some(script.clone());
        }
        if let Some(model) = &self.model {
            cfg.backend.client.model = model.clone();
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
    }
}

impl TaskArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        if let Some(task) = &self.task {
            cfg.task = task.clone();
        }
        if let Some(path) = &self.criteria_file {
            cfg.criteria_file = Some(path.clone());
        }
    }
}

impl DatasetArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        if let (Some(path), Some(adapter)) = (&self.dataset, self.adapter) {
            cfg.datasets = vec![descriptor(path, adapter, self.dataset_name.as_deref())];
        }
    }
}

async fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    cli.apply_globals(&mut cfg);
    let force = cli.force;
    match cli.command {
        Command::Cot(args) => {
            args.task.apply(&mut cfg);
            if !args.criteria.is_empty() {
                cfg.criteria = args.criteria;
            }
            commands::cot(&cfg).await
        }
        Command::Score(args) => {
            args.task.apply(&mut cfg);
            args.dataset.apply(&mut cfg);
            if !args.criteria.is_empty() {
                cfg.criteria = args.criteria;
            }
            let include_cot = cfg.scoring.include_cot && !args.no_cot;
            if args.no_probs {
                cfg.scoring = geval::ScoringConfig::single_greedy();
            } else if args.logprobs {
                cfg.scoring = geval::ScoringConfig::logprob_weighted();
            }
            cfg.scoring.include_cot = include_cot;
            if let Some(n) = args.n_samples {
                cfg.scoring.n_samples = n;
            }
            if let Some(t) = args.temperature {
                cfg.scoring.temperature = t;
            }
            commands::score(&cfg, force).await
        }
        Command::Metaeval(args) => {
            args.dataset.apply(&mut cfg);
            if let Some(task) = args.task {
                cfg.task = task;
            }
            let m = &mut cfg.metaeval;
            if let Some(table) = args.table {
                m.table = Some(table);
            }
            if let Some(a) = args.aggregation {
                m.aggregation = Some(match a {
                    AggregationArg::Summary => AggregationMode::SummaryLevel,
                    AggregationArg::Turn => AggregationMode::TurnLevel,
                    AggregationArg::Pooled => AggregationMode::Pooled,
                });
            }
            if let Some(t) = args.tau_variant {
                m.tau_variant = match t {
                    TauArg::A => TauVariant::TauA,
                    TauArg::B => TauVariant::TauB,
                };
            }
            if let Some(u) = args.undefined {
                m.undefined_policy = match u {
                    UndefinedArg::Skip => UndefinedPolicy::Skip,
                    UndefinedArg::Zero => UndefinedPolicy::Zero,
                };
            }
            if let Some(label) = args.label {
                m.label = Some(label);
            }
            commands::metaeval(&cfg, args.results.as_deref(), force)
        }
        Command::Bias(args) => {
            args.task.apply(&mut cfg);
            if let Some(path) = args.preferences {
                cfg.bias.preferences = Some(path);
            }
            if let Some(c) = args.criterion {
                cfg.bias.criterion = c;
            }
            commands::bias(&cfg, force).await
        }
        Command::Convert(args) => {
            let desc = descriptor(&args.input, args.adapter, args.name.as_deref());
            let output = args
                .output
                .unwrap_or_else(|| cfg.output_dir.join(format!("{}.jsonl", desc.name)));
            commands::convert(&desc, (!args.dry_run).then_some(output.as_path()), force)
        }
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("warn")))
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let runtime = match tokio::runtime::Runtime::new() {
        Ok(rt) => rt,
        Err(e) => {
            eprintln!("error: cannot start runtime: {e}");
            return ExitCode::FAILURE;
        }
    };
    match runtime.block_on(run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.class.code() as u8)
        }
    }
}
