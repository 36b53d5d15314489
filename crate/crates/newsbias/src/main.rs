use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use newsbias::config::{ClassifierKind, MonthRange, PipelineConfig};
use newsbias::error::PipelineError;
use newsbias::stages::{run_all, run_stage, Stage};
use newsbias::synth::{generate_synthetic, SyntheticSpec};

/// Unsupervised characterization of cable-news program bias.
#[derive(Parser, Debug)]
#[command(name = "newsbias", version, about)]
struct Cli {
    /// JSON configuration file; flags override its values.
    #[arg(long, global = true, env = "NEWSBIAS_CONFIG")]
    config: Option<PathBuf>,
    /// Output directory holding every stage artifact.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of clusters per month.
    #[arg(long, global = true)]
    k: Option<usize>,
    #[arg(long, global = true)]
    classifier: Option<ClassifierKind>,
    /// `YYYY-MM..YYYY-MM` or a single `YYYY-MM`.
    #[arg(long, global = true)]
    months: Option<MonthRange>,
    /// Log progress (repeat for more detail). RUST_LOG overrides.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse transcript files into transcripts.jsonl.
    Ingest {
        /// Transcript files or directories (replaces configured inputs).
        inputs: Vec<PathBuf>,
    },
    /// Recognize entities and select keywords.
    Extract,
    /// Classify per-sentence stance toward each keyword.
    Stance,
    /// Build per-month program similarity matrices.
    Networks,
    /// Cluster programs per month and align labels across months.
    Cluster,
    /// Render the ARI table, Sankey flows, PCA and variance report.
    Report,
    /// Generate a synthetic corpus with planted network structure.
    Synth {
        /// Directory to write the corpus into.
        dir: PathBuf,
        /// JSON synthetic spec; defaults apply to absent fields.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        noise: Option<f64>,
        #[arg(long)]
        matched_valence: bool,
    },
    /// Run every stage in order.
    RunAll {
        /// Transcript files or directories (replaces configured inputs).
        inputs: Vec<PathBuf>,
    },
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, PipelineError> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(k) = cli.k {
        cfg.k = k;
    }
    if let Some(kind) = cli.classifier {
        cfg.classifier.kind = kind;
    }
    if let Some(months) = &cli.months {
        cfg.months = Some(months.clone());
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    let mut cfg = load_config(&cli)?;
    match cli.command {
        Command::Ingest { inputs } => {
            if !inputs.is_empty() {
                cfg.inputs = inputs;
            }
            run_stage(Stage::Ingest, &cfg)
        }
        Command::Extract => run_stage(Stage::Extract, &cfg),
        Command::Stance => run_stage(Stage::Stance, &cfg),
        Command::Networks => run_stage(Stage::Networks, &cfg),
        Command::Cluster => run_stage(Stage::Cluster, &cfg),
        Command::Report => run_stage(Stage::Report, &cfg),
        Command::RunAll { inputs } => {
            if !inputs.is_empty() {
                cfg.inputs = inputs;
            }
            run_all(&cfg)
        }
        Command::Synth {
            dir,
            spec,
            noise,
            matched_valence,
        } => {
            let mut spec = match spec {
                Some(path) => {
                    let text = std::fs::read_to_string(&path).map_err(|e| PipelineError::io(&path, e))?;
                    serde_json::from_str::<SyntheticSpec>(&text)
                        .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?
                }
                None => SyntheticSpec::default(),
            };
            if let Some(seed) = cli.seed {
                spec.seed = seed;
            }
            if let Some(noise) = noise {
                spec.noise_rate = noise;
            }
            spec.matched_valence |= matched_valence;
            let truth = generate_synthetic(&spec, &dir)?;
            println!("wrote {} transcripts to {}", truth.files.len(), dir.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
