//! Re-ranking of predicate paraphrases mined from news tweets, and scoring
//! of cross-document event coreference with paraphrase features.
//!
//! Main entry points:
//!
//! * [`corpus::Corpus`] loads tweets and paraphrase entries.
//! * [`features::FeatureContext`] assembles the 17-slot feature vectors.
//! * [`supervision::derive_labels`] builds distant labels.
//! * [`forest::train`] and [`forest::randomized_search`] fit the re-ranker.
//! * [`evaluation`] holds ranking metrics and paired significance tests.
//! * [`coref_metrics`] scores clusterings with MUC, B³ and CEAF-e.
//! * [`pair_scorer`] is the mention-pair scorer and its clustering.
//! * [`pipeline`] ties the steps into file-to-file commands.

pub mod assignment;
pub mod coref_decisions;
pub mod coref_metrics;
pub mod corpus;
pub mod entity_coverage;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod forest;
pub mod graph;
pub mod io;
pub mod pair_scorer;
pub mod pipeline;
pub mod rng;
pub mod supervision;
pub mod synth;

pub use corpus::Corpus;
pub use error::{Error, Result};
pub use features::{FeatureVector, FEATURE_NAMES, NUM_FEATURES};
