use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use paracoref::pipeline::{run, ClusteringFormat, Command, PipelineConfig};

#[derive(Parser)]
#[command(name = "paracoref", version, about = "Predicate paraphrase re-ranking and event coreference scoring")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every seeded stage.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Args)]
struct Overrides {
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    corpus: Option<PathBuf>,
    #[arg(long, global = true)]
    decisions: Option<PathBuf>,
    #[arg(long, global = true)]
    annotations: Option<PathBuf>,
    #[arg(long, global = true)]
    judgments: Option<PathBuf>,
    #[arg(long, global = true)]
    splits: Option<PathBuf>,
    #[arg(long, global = true)]
    labels: Option<PathBuf>,
    #[arg(long, global = true)]
    nec_labels: Option<PathBuf>,
    #[arg(long, global = true)]
    nec_threshold: Option<f64>,
    #[arg(long, global = true)]
    min_support: Option<usize>,
    /// Randomized hyperparameter search iterations.
    #[arg(long, global = true)]
    search: Option<usize>,
    #[arg(long, global = true)]
    resamples: Option<usize>,
    /// Evaluate only entries with at least this many support pairs.
    #[arg(long, global = true)]
    eval_min_support: Option<usize>,
    /// Random sample size of the restricted evaluation set.
    #[arg(long, global = true)]
    sample: Option<usize>,
    #[arg(long, global = true)]
    train_mentions: Option<PathBuf>,
    #[arg(long, global = true)]
    mentions: Option<PathBuf>,
    #[arg(long, global = true)]
    resource: Option<PathBuf>,
    /// Train or cluster without the paraphrase-feature component.
    #[arg(long, global = true)]
    no_chirps: bool,
    #[arg(long, global = true)]
    merge_threshold: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Jsonl,
    Conll,
}

impl From<Format> for ClusteringFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Jsonl => ClusteringFormat::Jsonl,
            Format::Conll => ClusteringFormat::Conll,
        }
    }
}

#[derive(Subcommand)]
enum Sub {
    /// Validate the corpus and write a summary.
    Ingest,
    /// Assemble feature vectors and the labeled dataset.
    Features,
    /// Derive labels from event-cluster annotations and crowd judgments.
    Labels,
    /// Train the random-forest re-ranker.
    Train,
    /// Score every dataset entry with the trained forest.
    Rank,
    /// Ranking and classification metrics on the test split.
    Evaluate,
    /// Paired bootstrap and permutation tests, forest vs heuristic.
    Significance,
    /// Coverage of coreferring gold mention pairs by the resource.
    Coverage,
    /// Train the pairwise mention scorer.
    TrainScorer,
    /// Cluster mentions with the trained scorer.
    Cluster,
    /// Score a system clustering against gold.
    ScoreCoref {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        sys: PathBuf,
        #[arg(long, value_enum, default_value = "jsonl")]
        format: Format,
    },
    /// Mention pairs fixed by a new system relative to a baseline.
    DiffErrors {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        baseline: PathBuf,
        #[arg(long)]
        new: PathBuf,
        #[arg(long, value_enum, default_value = "jsonl")]
        format: Format,
    },
}

fn apply(c: &mut PipelineConfig, o: Overrides) {
    fn set<T>(slot: &mut T, v: Option<T>) {
        if let Some(v) = v {
            *slot = v;
        }
    }
    fn set_opt<T>(slot: &mut Option<T>, v: Option<T>) {
        if v.is_some() {
            *slot = v;
        }
    }
    set(&mut c.out_dir, o.out);
    set(&mut c.corpus_dir, o.corpus);
    set_opt(&mut c.decisions, o.decisions);
    set_opt(&mut c.annotations, o.annotations);
    set_opt(&mut c.judgments, o.judgments);
    set_opt(&mut c.splits, o.splits);
    set_opt(&mut c.labels, o.labels);
    set_opt(&mut c.nec_labels, o.nec_labels);
    set(&mut c.nec_threshold, o.nec_threshold);
    set(&mut c.min_support, o.min_support);
    set(&mut c.search_iterations, o.search);
    set(&mut c.resamples, o.resamples);
    set_opt(&mut c.eval_min_support, o.eval_min_support);
    set_opt(&mut c.eval_sample, o.sample);
    set_opt(&mut c.train_mentions, o.train_mentions);
    set_opt(&mut c.mentions, o.mentions);
    set_opt(&mut c.resource, o.resource);
    set(&mut c.merge_threshold, o.merge_threshold);
    if o.no_chirps {
        c.scorer.use_chirps = false;
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(j) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j).build_global() {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    let mut config = match &cli.config {
        Some(p) => match PipelineConfig::load(p) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::FAILURE;
            }
        },
        None => PipelineConfig::default(),
    };
    apply(&mut config, cli.overrides);
    if let Some(s) = cli.seed {
        config.set_seed(s);
    }
    let command = match cli.command {
        Sub::Ingest => Command::Ingest,
        Sub::Features => Command::Features,
        Sub::Labels => Command::Labels,
        Sub::Train => Command::Train,
        Sub::Rank => Command::Rank,
        Sub::Evaluate => Command::Evaluate,
        Sub::Significance => Command::Significance,
        Sub::Coverage => Command::Coverage,
        Sub::TrainScorer => Command::TrainScorer,
        Sub::Cluster => Command::Cluster,
        Sub::ScoreCoref { gold, sys, format } => Command::ScoreCoref {
            gold,
            sys,
            format: format.into(),
        },
        Sub::DiffErrors {
            gold,
            baseline,
            new,
            format,
        } => Command::DiffErrors {
            gold,
            baseline,
            new,
            format: format.into(),
        },
    };
    match run(&command, &config) {
        Ok(outcome) => {
            // A closed pipe is not a failure of the step itself.
            let mut out = std::io::stdout().lock();
            for m in outcome.messages {
                let _ = writeln!(out, "{m}");
            }
            for p in outcome.outputs {
                let _ = writeln!(out, "wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
