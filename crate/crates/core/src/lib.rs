//! Measure how well unigram frequency, Stupid Backoff n-gram scores and
//! contextual embedding similarity explain language-model log-probabilities
//! across training checkpoints.

pub mod corpus_index;
pub mod dataset;
pub mod ngram;
pub mod similarity;

pub use corpus_index::{CorpusIndex, IndexError, TokenizeOptions};
pub use dataset::{ContextItem, Split};
pub use ngram::{BackoffConfig, NGramScore};
pub use similarity::{EmbeddingTable, SimilarityResult, WeightingScheme};
pub mod analysis;
pub mod heuristics;
pub mod pipeline;
