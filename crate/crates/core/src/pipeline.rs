//! File-to-file pipeline steps behind the command-line tool. Every step
//! reads its inputs from the paths in [`PipelineConfig`], writes its
//! artifact into `out_dir`, and records a `manifest.<step>.json` with the
//! full configuration, the seed and SHA-256 hashes of every input and
//! output file.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::coref_decisions::DecisionStore;
use crate::coref_metrics::{coverage, diff_errors, score, Clustering, CoverageReport};
use crate::corpus::{Corpus, META_FILE, PAIRS_FILE, TWEETS_FILE};
use crate::entity_coverage::{load_nec_labels, tune_threshold, DEFAULT_NEC_THRESHOLD};
use crate::error::{Error, Result};
use crate::evaluation::{
    average_precision, classification_metrics, paired_significance, support_sample,
    tune_score_threshold, ClassificationReport, PairedMetric, RankedItem, RankedList,
    SignificanceResult,
};
use crate::features::{
    build_dataset, csv_error, parse_bool, read_labels, write_labels, FeatureContext,
    LabeledDataset, Split,
};
use crate::forest::{self, Forest, ForestHyperparams, SearchResult, SearchSpace};
use crate::graph::CliqueConfig;
use crate::io::{write_json, write_jsonl, write_text};
use crate::pair_scorer::{
    cluster_mentions, load_mentions, load_resource, train_scorer, PairScorer, ResourceFeatures,
    ResourceRecord, ScorerConfig, TopicPairs,
};
use crate::supervision::{derive_labels, read_judgments, read_splits, EventClusterAnnotation};

pub const DATASET_FILE: &str = "dataset.csv";
pub const FEATURES_FILE: &str = "features.jsonl";
pub const LABELS_FILE: &str = "labels.csv";
pub const FOREST_FILE: &str = "forest.json";
pub const RANKING_FILE: &str = "ranking.csv";
pub const METRICS_FILE: &str = "metrics.json";
pub const CURVE_FILE: &str = "precision_curve.csv";
pub const SIGNIFICANCE_FILE: &str = "significance.json";
pub const COVERAGE_FILE: &str = "coverage.json";
pub const SCORER_FILE: &str = "scorer.json";
pub const CLUSTERS_FILE: &str = "clusters.jsonl";
pub const COREF_METRICS_FILE: &str = "coref_metrics.json";
pub const ERRORS_FILE: &str = "errors.csv";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Directory holding `tweets.jsonl`, `pairs.jsonl` and `meta.json`.
    pub corpus_dir: PathBuf,
    /// Coreference decisions; the lexical-identity decider is used when absent.
    pub decisions: Option<PathBuf>,
    pub annotations: Option<PathBuf>,
    pub judgments: Option<PathBuf>,
    pub splits: Option<PathBuf>,
    /// Labels for `features`; defaults to `out_dir/labels.csv`.
    pub labels: Option<PathBuf>,
    /// Labeled pairs for tuning the NEC threshold; `nec_threshold` is used when absent.
    pub nec_labels: Option<PathBuf>,
    pub nec_threshold: f64,
    pub min_support: usize,
    pub clique_max_nodes: usize,
    pub clique_timeout_secs: u64,
    pub forest: ForestHyperparams,
    /// Randomized-search iterations; 0 trains `forest` as given.
    pub search_iterations: usize,
    pub search_folds: usize,
    pub search_space: SearchSpace,
    pub resamples: usize,
    /// Restrict evaluation to entries with at least this many support pairs.
    pub eval_min_support: Option<usize>,
    /// Random sample of the restricted evaluation set.
    pub eval_sample: Option<usize>,
    /// Mentions used by `train-scorer`.
    pub train_mentions: Option<PathBuf>,
    /// Mentions clustered by `cluster`.
    pub mentions: Option<PathBuf>,
    pub gold: Option<PathBuf>,
    /// Resource feature file; defaults to `out_dir/features.jsonl` if present.
    pub resource: Option<PathBuf>,
    pub scorer: ScorerConfig,
    pub merge_threshold: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            out_dir: PathBuf::from("out"),
            corpus_dir: PathBuf::from("corpus"),
            decisions: None,
            annotations: None,
            judgments: None,
            splits: None,
            labels: None,
            nec_labels: None,
            nec_threshold: DEFAULT_NEC_THRESHOLD,
            min_support: 3,
            clique_max_nodes: CliqueConfig::default().max_nodes,
            clique_timeout_secs: CliqueConfig::default().timeout.as_secs(),
            forest: ForestHyperparams::default(),
            search_iterations: 0,
            search_folds: 3,
            search_space: SearchSpace::default(),
            resamples: 10_000,
            eval_min_support: None,
            eval_sample: None,
            train_mentions: None,
            mentions: None,
            gold: None,
            resource: None,
            scorer: ScorerConfig::default(),
            merge_threshold: 0.5,
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidInput(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut c = Self::from_toml(&text)
            .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
        // Relative paths in a config file are relative to the file.
        if let Some(base) = path.parent() {
            c.rebase(base);
        }
        Ok(c)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.out_dir);
        fix(&mut self.corpus_dir);
        for p in [
            &mut self.decisions,
            &mut self.annotations,
            &mut self.judgments,
            &mut self.splits,
            &mut self.labels,
            &mut self.nec_labels,
            &mut self.train_mentions,
            &mut self.mentions,
            &mut self.gold,
            &mut self.resource,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
    }

    /// Applies the global seed to every seeded stage.
    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.forest.seed = seed;
        self.scorer.seed = seed;
    }

    fn clique_config(&self) -> CliqueConfig {
        CliqueConfig {
            max_nodes: self.clique_max_nodes,
            timeout: Duration::from_secs(self.clique_timeout_secs),
        }
    }

    fn out(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClusteringFormat {
    Jsonl,
    Conll,
}

impl ClusteringFormat {
    fn load(self, path: &Path) -> Result<Clustering> {
        match self {
            ClusteringFormat::Jsonl => Clustering::load_jsonl(path),
            ClusteringFormat::Conll => Clustering::load_conll(path),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Ingest,
    Features,
    Labels,
    Train,
    Rank,
    Evaluate,
    Significance,
    Coverage,
    TrainScorer,
    Cluster,
    ScoreCoref {
        gold: PathBuf,
        sys: PathBuf,
        format: ClusteringFormat,
    },
    DiffErrors {
        gold: PathBuf,
        baseline: PathBuf,
        new: PathBuf,
        format: ClusteringFormat,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Ingest => "ingest",
            Command::Features => "features",
            Command::Labels => "labels",
            Command::Train => "train",
            Command::Rank => "rank",
            Command::Evaluate => "evaluate",
            Command::Significance => "significance",
            Command::Coverage => "coverage",
            Command::TrainScorer => "train-scorer",
            Command::Cluster => "cluster",
            Command::ScoreCoref { .. } => "score-coref",
            Command::DiffErrors { .. } => "diff-errors",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// What a step read and wrote, plus lines for the terminal.
#[derive(Debug, Default)]
pub struct Outcome {
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub messages: Vec<String>,
}

impl Outcome {
    fn say(&mut self, msg: impl Into<String>) {
        self.messages.push(msg.into());
    }
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    seed: u64,
    config: &'a PipelineConfig,
    inputs: BTreeMap<String, String>,
    outputs: BTreeMap<String, String>,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

fn hashes(paths: &[PathBuf]) -> Result<BTreeMap<String, String>> {
    paths
        .iter()
        .map(|p| Ok((p.display().to_string(), sha256_file(p)?)))
        .collect()
}

/// Runs one step and writes its manifest.
pub fn run(command: &Command, config: &PipelineConfig) -> Result<Outcome> {
    std::fs::create_dir_all(&config.out_dir).map_err(|e| Error::io(&config.out_dir, e))?;
    let mut outcome = match command {
        Command::Ingest => ingest(config),
        Command::Features => features(config),
        Command::Labels => labels(config),
        Command::Train => train(config),
        Command::Rank => rank(config),
        Command::Evaluate => evaluate(config),
        Command::Significance => significance(config),
        Command::Coverage => coverage_step(config),
        Command::TrainScorer => train_scorer_step(config),
        Command::Cluster => cluster(config),
        Command::ScoreCoref { gold, sys, format } => score_coref(config, gold, sys, *format),
        Command::DiffErrors {
            gold,
            baseline,
            new,
            format,
        } => diff_errors_step(config, gold, baseline, new, *format),
    }
    .map_err(|e| match e {
        Error::Domain(m) => Error::Domain(format!("{command}: {m}")),
        Error::InvalidInput(m) => Error::InvalidInput(format!("{command}: {m}")),
        Error::Integrity(m) => Error::Integrity(format!("{command}: {m}")),
        Error::Training(m) => Error::Training(format!("{command}: {m}")),
        other => other,
    })?;
    let manifest = Manifest {
        command: command.name(),
        version: env!("CARGO_PKG_VERSION"),
        seed: config.seed,
        config,
        inputs: hashes(&outcome.inputs)?,
        outputs: hashes(&outcome.outputs)?,
    };
    let path = config.out(&format!("manifest.{}.json", command.name()));
    write_json(&path, &manifest)?;
    outcome.outputs.push(path);
    Ok(outcome)
}

fn corpus_files(dir: &Path) -> Vec<PathBuf> {
    [TWEETS_FILE, PAIRS_FILE, META_FILE]
        .iter()
        .map(|f| dir.join(f))
        .collect()
}

fn require<'a>(p: &'a Option<PathBuf>, what: &str) -> Result<&'a Path> {
    p.as_deref()
        .ok_or_else(|| Error::InvalidInput(format!("no {what} path configured")))
}

fn load_inputs(config: &PipelineConfig, o: &mut Outcome) -> Result<(Corpus, DecisionStore)> {
    o.inputs.extend(corpus_files(&config.corpus_dir));
    let corpus = Corpus::load(&config.corpus_dir)?;
    let decisions = match &config.decisions {
        Some(p) => {
            o.inputs.push(p.clone());
            DecisionStore::load(p)?
        }
        None => DecisionStore::lexical_identity(&corpus),
    };
    Ok((corpus, decisions))
}

#[derive(Debug, Serialize)]
struct IngestSummary {
    tweets: usize,
    entries: usize,
    support_pairs: usize,
    collection_days: u32,
    decisions: usize,
    graph_nodes: usize,
    graph_edges: usize,
    graph_components: usize,
}

fn ingest(config: &PipelineConfig) -> Result<Outcome> {
    let mut o = Outcome::default();
    let (corpus, decisions) = load_inputs(config, &mut o)?;
    let g = crate::graph::build_global_graph(&corpus);
    let summary = IngestSummary {
        tweets: corpus.tweets().len(),
        entries: corpus.entries().len(),
        support_pairs: corpus.entries().iter().map(|e| e.support_count()).sum(),
        collection_days: corpus.meta().collection_days,
        decisions: decisions.len(),
        graph_nodes: g.node_count(),
        graph_edges: g.edge_count(),
        graph_components: g.component_count(),
    };
    o.say(format!(
        "{} tweets, {} entries, {} support pairs",
        summary.tweets, summary.entries, summary.support_pairs
    ));
    let path = config.out(SUMMARY_FILE);
    write_json(&path, &summary)?;
    o.outputs.push(path);
    Ok(o)
}

fn features(config: &PipelineConfig) -> Result<Outcome> {
    let mut o = Outcome::default();
    let (corpus, decisions) = load_inputs(config, &mut o)?;
    let threshold = match &config.nec_labels {
        Some(p) => {
            o.inputs.push(p.clone());
            let t = tune_threshold(&corpus, &load_nec_labels(p)?)?;
            o.say(format!("tuned NEC threshold T = {t}"));
            t
        }
        None => config.nec_threshold,
    };
    let ctx = FeatureContext::new(&corpus, &decisions, threshold, &config.clique_config())?;
    if !ctx.cliques.exact {
        o.say("clique enumeration capped; using the common-neighbour test");
    }

    let all = ctx.assemble_all()?;
    let records: Vec<ResourceRecord> = corpus
        .entries()
        .iter()
        .map(|e| ResourceRecord {
            id: Some(e.id.clone()),
            lemmas: e.lemma_key(),
            features: all[&e.id].clone(),
        })
        .collect();
    let path = config.out(FEATURES_FILE);
    write_jsonl(&path, &records)?;
    o.outputs.push(path);

    let labels_path = config.labels.clone().unwrap_or_else(|| config.out(LABELS_FILE));
    if labels_path.exists() {
        o.inputs.push(labels_path.clone());
        let labels = read_labels(&labels_path)?;
        let dataset = build_dataset(&ctx, &labels, config.min_support)?;
        o.say(format!(
            "{} labeled entries with at least {} support pairs",
            dataset.len(),
            config.min_support
        ));
        let path = config.out(DATASET_FILE);
        dataset.save(&path)?;
        o.outputs.push(path);
    } else {
        o.say(format!("no labels at {}; dataset not written", labels_path.display()));
    }
    Ok(o)
}

fn labels(config: &PipelineConfig) -> Result<Outcome> {
    let mut o = Outcome::default();
    o.inputs.extend(corpus_files(&config.corpus_dir));
    let corpus = Corpus::load(&config.corpus_dir)?;
    let ann_path = require(&config.annotations, "annotations")?;
    o.inputs.push(ann_path.to_path_buf());
    let annotations: Vec<EventClusterAnnotation> = crate::supervision::load_annotations(ann_path)?;
    let judgments = match &config.judgments {
        Some(p) => {
            o.inputs.push(p.clone());
            read_judgments(p)?
        }
        None => Vec::new(),
    };
    let splits = match &config.splits {
        Some(p) => {
            o.inputs.push(p.clone());
            read_splits(p)?
        }
        None => BTreeMap::new(),
    };
    let labels = derive_labels(&annotations, &corpus, &judgments, &splits)?;
    let pos = labels.iter().filter(|l| l.label).count();
    o.say(format!("{} labels ({pos} positive)", labels.len()));
    let path = config.out(LABELS_FILE);
    write_labels(&path, &labels)?;
    o.outputs.push(path);
    Ok(o)
}

fn load_dataset(config: &PipelineConfig, o: &mut Outcome) -> Result<LabeledDataset> {
    let path = config.out(DATASET_FILE);
    o.inputs.push(path.clone());
    LabeledDataset::load(&path)
}

#[derive(Debug, Serialize)]
struct TrainReport {
    hyperparams: ForestHyperparams,
    train_rows: usize,
    train_accuracy: f64,
    search: Option<SearchResult>,
}

fn train(config: &PipelineConfig) -> Result<Outcome> {
    let mut o = Outcome::default();
    let data = load_dataset(config, &mut o)?.split(Split::Train);
    let (x, y) = (data.matrix(), data.labels());
    let (hp, search) = if config.search_iterations > 0 {
        let r = forest::randomized_search(
            &x,
            &y,
            &config.search_space,
            config.search_iterations,
            config.search_folds,
            config.forest.seed,
        )?;
        o.say(format!("search: best cross-validated accuracy {:.4}", r.best_accuracy));
        (r.best, Some(r))
    } else {
        (config.forest, None)
    };
    let model = forest::train(&x, &y, &hp)?;
    let predicted = x
        .iter()
        .map(|r| model.predict(r))
        .collect::<Result<Vec<_>>>()?;
    let acc = classification_metrics(&y, &predicted)?.accuracy;
    o.say(format!("trained {} trees on {} rows", hp.n_estimators, x.len()));
    let path = config.out(FOREST_FILE);
    model.save(&path)?;
    o.outputs.push(path);
    let path = config.out("train_report.json");
    write_json(
        &path,
        &TrainReport {
            hyperparams: hp,
            train_rows: x.len(),
            train_accuracy: acc,
            search,
        },
    )?;
    o.outputs.push(path);
    Ok(o)
}

/// One row of `ranking.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingRow {
    pub id: String,
    pub split: Split,
    pub label: bool,
    pub support: usize,
    pub forest_score: f64,
    pub heuristic_score: f64,
}

pub fn write_ranking(path: &Path, rows: &[RankingRow]) -> Result<()> {
    let mut text = String::from("id,split,label,support,forest_score,heuristic_score\n");
    for r in rows {
        text.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.id,
            r.split,
            u8::from(r.label),
            r.support,
            r.forest_score,
            r.heuristic_score
        ));
    }
    write_text(path, &text)
}

pub fn read_ranking(path: &Path) -> Result<Vec<RankingRow>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = i + 2;
        if rec.len() != 6 {
            return Err(Error::parse(path, line, "expected 6 columns"));
        }
        let num = |k: usize| -> Result<f64> {
            rec[k]
                .parse()
                .map_err(|e| Error::parse(path, line, format!("column {k}: {e}")))
        };
        out.push(RankingRow {
            id: rec[0].to_string(),
            split: rec[1].parse().map_err(|e| Error::parse(path, line, e))?,
            label: parse_bool(&rec[2]).map_err(|m| Error::parse(path, line, m))?,
            support: rec[3]
                .parse()
                .map_err(|e| Error::parse(path, line, format!("support: {e}")))?,
            forest_score: num(4)?,
            heuristic_score: num(5)?,
        });
    }
    Ok(out)
}

const SCORE_SLOT: usize = 3;
const SUPPORT_SLOT: usize = 1;

/// Scores every dataset row with `forest`, sorted by forest score
/// descending then id.
pub fn rank_dataset(model: &Forest, data: &LabeledDataset) -> Result<Vec<RankingRow>> {
    let mut rows = data
        .rows
        .iter()
        .map(|r| {
            let v = r.features.values();
            Ok(RankingRow {
                id: r.id.clone(),
                split: r.split,
                label: r.label,
                support: v[SUPPORT_SLOT] as usize,
                forest_score: model.predict_proba(r.features.as_slice())?,
                heuristic_score: v[SCORE_SLOT],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| {
        b.forest_score
            .total_cmp(&a.forest_score)
            .then_with(|| a.id.cmp(&b.id))
    });
    Ok(rows)
}

fn rank(config: &PipelineConfig) -> Result<Outcome> {
    let mut o = Outcome::default();
    let data = load_dataset(config, &mut o)?;
    let fpath = config.out(FOREST_FILE);
    o.inputs.push(fpath.clone());
    let model = Forest::load(&fpath)?;
    let rows = rank_dataset(&model, &data)?;
    o.say(format!("ranked {} entries", rows.len()));
    let path = config.out(RANKING_FILE);
    write_ranking(&path, &rows)?;
    o.outputs.push(path);
    Ok(o)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemMetrics {
    pub average_precision: f64,
    pub threshold: f64,
    pub classification: ClassificationReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetMetrics {
    pub min_support: usize,
    pub sample: Option<usize>,
    pub items: usize,
    pub forest_ap: f64,
    pub heuristic_ap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub items: usize,
    pub positives: usize,
    pub forest: SystemMetrics,
    pub heuristic: SystemMetrics,
    pub subset: Option<SubsetMetrics>,
}

fn ranked(rows: &[&RankingRow], score: impl Fn(&RankingRow) -> f64) -> Result<RankedList> {
    RankedList::new(
        rows.iter()
            .map(|r| RankedItem {
                id: r.id.clone(),
                score: score(r),
                label: r.label,
            })
            .collect(),
    )
}

/// Test-split metrics of the forest (threshold 0.5) and the heuristic score
/// (threshold tuned on the training split).
pub fn evaluate_ranking(
    rows: &[RankingRow],
    min_support: Option<usize>,
    sample: Option<usize>,
    seed: u64,
) -> Result<(EvaluationReport, RankedList)> {
    let train: Vec<&RankingRow> = rows.iter().filter(|r| r.split == Split::Train).collect();
    let test: Vec<&RankingRow> = rows.iter().filter(|r| r.split == Split::Test).collect();
    if test.is_empty() {
        return Err(Error::InvalidInput("no test rows in the ranking".into()));
    }
    let gold: Vec<bool> = test.iter().map(|r| r.label).collect();
    let forest_list = ranked(&test, |r| r.forest_score)?;
    let forest_pred: Vec<bool> = test.iter().map(|r| r.forest_score >= 0.5).collect();
    let forest = SystemMetrics {
        average_precision: average_precision(&forest_list)?,
        threshold: 0.5,
        classification: classification_metrics(&gold, &forest_pred)?,
    };
    let h_threshold = tune_score_threshold(
        &train.iter().map(|r| r.heuristic_score).collect::<Vec<_>>(),
        &train.iter().map(|r| r.label).collect::<Vec<_>>(),
    )?;
    let h_pred: Vec<bool> = test.iter().map(|r| r.heuristic_score >= h_threshold).collect();
    let heuristic = SystemMetrics {
        average_precision: average_precision(&ranked(&test, |r| r.heuristic_score)?)?,
        threshold: h_threshold,
        classification: classification_metrics(&gold, &h_pred)?,
    };
    let subset = match min_support {
        Some(ms) => {
            let counts: Vec<usize> = test.iter().map(|r| r.support).collect();
            let picked: Vec<&RankingRow> = support_sample(&counts, ms, sample, seed)
                .into_iter()
                .map(|i| test[i])
                .collect();
            Some(SubsetMetrics {
                min_support: ms,
                sample,
                items: picked.len(),
                forest_ap: average_precision(&ranked(&picked, |r| r.forest_score)?)?,
                heuristic_ap: average_precision(&ranked(&picked, |r| r.heuristic_score)?)?,
            })
        }
        None => None,
    };
    let report = EvaluationReport {
        items: test.len(),
        positives: gold.iter().filter(|&&g| g).count(),
        forest,
        heuristic,
        subset,
    };
    Ok((report, forest_list))
}

fn evaluate(config: &PipelineConfig) -> Result<Outcome> {
    let mut o = Outcome::default();
    let rpath = config.out(RANKING_FILE);
    o.inputs.push(rpath.clone());
    let rows = read_ranking(&rpath)?;
    let (report, list) =
        evaluate_ranking(&rows, config.eval_min_support, config.eval_sample, config.seed)?;
    o.say(format!(
        "test AP: forest {:.4}, heuristic {:.4}",
        report.forest.average_precision, report.heuristic.average_precision
    ));
    if let Some(s) = &report.subset {
        o.say(format!(
            "subset ({} items, support >= {}): forest {:.4}, heuristic {:.4}",
            s.items, s.min_support, s.forest_ap, s.heuristic_ap
        ));
    }
    let path = config.out(METRICS_FILE);
    write_json(&path, &report)?;
    o.outputs.push(path);
    let path = config.out(CURVE_FILE);
    write_text(&path, &list.precision_curve_csv())?;
    o.outputs.push(path);
    Ok(o)
}

/// Forest versus heuristic AP on the test split.
pub fn ranking_significance(rows: &[RankingRow], resamples: usize, seed: u64) -> Result<SignificanceResult> {
    // Item order breaks score ties, so order by id as ranked lists do.
    let mut test: Vec<&RankingRow> = rows.iter().filter(|r| r.split == Split::Test).collect();
    test.sort_by(|a, b| a.id.cmp(&b.id));
    let a: Vec<f64> = test.iter().map(|r| r.forest_score).collect();
    let b: Vec<f64> = test.iter().map(|r| r.heuristic_score).collect();
    let y: Vec<bool> = test.iter().map(|r| r.label).collect();
    paired_significance(&a, &b, &y, PairedMetric::AveragePrecision, resamples, seed)
}

fn significance(config: &PipelineConfig) -> Result<Outcome> {
    let mut o = Outcome::default();
    let rpath = config.out(RANKING_FILE);
    o.inputs.push(rpath.clone());
    let r = ranking_significance(&read_ranking(&rpath)?, config.resamples, config.seed)?;
    o.say(format!(
        "AP {:.4} vs {:.4}: bootstrap p = {:.5}, permutation p = {:.5}",
        r.metric_a, r.metric_b, r.bootstrap_p, r.permutation_p
    ));
    let path = config.out(SIGNIFICANCE_FILE);
    write_json(&path, &r)?;
    o.outputs.push(path);
    Ok(o)
}

#[derive(Debug, Serialize)]
struct CoverageOutput {
    all: CoverageReport,
    verbal: CoverageReport,
}

fn coverage_step(config: &PipelineConfig) -> Result<Outcome> {
    let mut o = Outcome::default();
    let ann_path = require(&config.annotations, "annotations")?;
    o.inputs.push(ann_path.to_path_buf());
    let annotations = crate::supervision::load_annotations(ann_path)?;
    o.inputs.extend(corpus_files(&config.corpus_dir));
    let corpus = Corpus::load(&config.corpus_dir)?;
    let keys = corpus.entries().iter().map(|e| e.lemma_key()).collect();
    let out = CoverageOutput {
        all: coverage(&annotations, &keys, false),
        verbal: coverage(&annotations, &keys, true),
    };
    o.say(format!(
        "coverage: {:.1}% of {} pairs, {:.1}% of {} verbal pairs",
        out.all.percent, out.all.total, out.verbal.percent, out.verbal.total
    ));
    let path = config.out(COVERAGE_FILE);
    write_json(&path, &out)?;
    o.outputs.push(path);
    Ok(o)
}

fn scorer_resource(config: &PipelineConfig, o: &mut Outcome) -> Result<ResourceFeatures> {
    let path = config
        .resource
        .clone()
        .unwrap_or_else(|| config.out(FEATURES_FILE));
    if config.scorer.use_chirps {
        o.inputs.push(path.clone());
        load_resource(&path)
    } else {
        Ok(ResourceFeatures::new())
    }
}

fn train_scorer_step(config: &PipelineConfig) -> Result<Outcome> {
    let mut o = Outcome::default();
    let mpath = require(&config.train_mentions, "train_mentions")?;
    let gpath = require(&config.gold, "gold")?;
    o.inputs.push(mpath.to_path_buf());
    o.inputs.push(gpath.to_path_buf());
    let mentions = load_mentions(mpath)?;
    let gold = Clustering::load_jsonl(gpath)?;
    let resource = scorer_resource(config, &mut o)?;
    let mut cfg = config.scorer.clone();
    if let Some(m) = mentions.first() {
        cfg.mention_dim = m.vector.len();
    }
    let pairs = TopicPairs::new(&mentions, &resource);
    let batch = pairs.labeled(&gold)?;
    let (scorer, trace) = train_scorer(&batch, cfg)?;
    o.say(format!(
        "{} pairs, loss {:.4} -> {:.4}",
        batch.len(),
        trace.first().copied().unwrap_or(f64::NAN),
        trace.last().copied().unwrap_or(f64::NAN)
    ));
    let path = config.out(SCORER_FILE);
    scorer.save(&path)?;
    o.outputs.push(path);
    Ok(o)
}

fn cluster(config: &PipelineConfig) -> Result<Outcome> {
    let mut o = Outcome::default();
    let mpath = require(&config.mentions, "mentions")?;
    o.inputs.push(mpath.to_path_buf());
    let spath = config.out(SCORER_FILE);
    o.inputs.push(spath.clone());
    let scorer = PairScorer::load(&spath)?;
    let mentions = load_mentions(mpath)?;
    let resource = if scorer.config.use_chirps {
        scorer_resource(config, &mut o)?
    } else {
        ResourceFeatures::new()
    };
    let clustering = cluster_mentions(&scorer, &mentions, &resource, config.merge_threshold)?;
    o.say(format!(
        "{} mentions in {} clusters",
        clustering.len(),
        clustering.clusters().len()
    ));
    let path = config.out(CLUSTERS_FILE);
    clustering.save_jsonl(&path)?;
    o.outputs.push(path);
    if let Some(g) = &config.gold {
        o.inputs.push(g.clone());
        let gold = Clustering::load_jsonl(g)?;
        let covered = Clustering::from_assignments(
            clustering
                .mentions()
                .filter_map(|m| gold.cluster_of(m).map(|c| (m.to_string(), c.to_string()))),
        )?;
        if covered.len() == clustering.len() {
            o.say(format!("CoNLL F1 {:.4}", score(&covered, &clustering)?.conll_f1));
        }
    }
    Ok(o)
}

fn score_coref(config: &PipelineConfig, gold: &Path, sys: &Path, format: ClusteringFormat) -> Result<Outcome> {
    let mut o = Outcome {
        inputs: vec![gold.to_path_buf(), sys.to_path_buf()],
        ..Default::default()
    };
    let report = score(&format.load(gold)?, &format.load(sys)?)?;
    o.say(format!(
        "MUC {:.4}  B3 {:.4}  CEAF-e {:.4}  CoNLL {:.4}",
        report.muc.f1, report.b_cubed.f1, report.ceaf_e.f1, report.conll_f1
    ));
    let path = config.out(COREF_METRICS_FILE);
    write_json(&path, &report)?;
    o.outputs.push(path);
    Ok(o)
}

fn diff_errors_step(
    config: &PipelineConfig,
    gold: &Path,
    baseline: &Path,
    new: &Path,
    format: ClusteringFormat,
) -> Result<Outcome> {
    let mut o = Outcome {
        inputs: vec![gold.to_path_buf(), baseline.to_path_buf(), new.to_path_buf()],
        ..Default::default()
    };
    let diff = diff_errors(&format.load(gold)?, &format.load(baseline)?, &format.load(new)?)?;
    o.say(format!(
        "{} false positives and {} false negatives recovered",
        diff.fp_recovered.len(),
        diff.fn_recovered.len()
    ));
    let path = config.out(ERRORS_FILE);
    write_text(&path, &diff.to_csv())?;
    o.outputs.push(path);
    Ok(o)
}

/// Every ranking step in order: ingest, labels, features, train, rank,
/// evaluate, significance.
pub const RANKING_STEPS: [Command; 7] = [
    Command::Ingest,
    Command::Labels,
    Command::Features,
    Command::Train,
    Command::Rank,
    Command::Evaluate,
    Command::Significance,
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reported_values() {
        let c = PipelineConfig::default();
        assert_eq!(c.nec_threshold, 0.26);
        assert_eq!(c.min_support, 3);
        assert_eq!(c.forest.n_estimators, 157);
        assert_eq!(c.forest.max_depth, 8);
    }

    #[test]
    fn toml_overrides_and_rejects_unknown_keys() {
        let c = PipelineConfig::from_toml("seed = 7\nmin_support = 6\n[forest]\nn_estimators = 10\n").unwrap();
        assert_eq!((c.seed, c.min_support, c.forest.n_estimators), (7, 6, 10));
        assert_eq!(c.forest.max_depth, 8);
        assert!(PipelineConfig::from_toml("nonsense = 1").is_err());
    }

    #[test]
    fn ranking_csv_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let rows = vec![RankingRow {
            id: "a".into(),
            split: Split::Test,
            label: true,
            support: 4,
            forest_score: 0.25,
            heuristic_score: 3.6,
        }];
        let p = dir.path().join("r.csv");
        write_ranking(&p, &rows).unwrap();
        assert_eq!(read_ranking(&p).unwrap(), rows);
    }
}
