//! Sememe recommendation for Chinese words from two evidence sources:
//! external context (pre-trained word embeddings driving neighbor-based
//! collaborative filtering and matrix factorization) and word-internal
//! characters (position-indexed character statistics and factorization
//! against multi-prototype character embeddings), combined by weighted
//! ensembling with per-word fallbacks. Includes a MAP evaluation harness
//! with corpus-frequency breakdowns and a config-driven pipeline.
//!
//! The main entry points:
//!
//! - [`kb::AnnotationSet`] loads and filters word–sememe annotations and
//!   produces deterministic splits and the PMI correlation matrix.
//! - [`embeddings::WordEmbeddings`] / [`embeddings::CharEmbeddings`] load
//!   text-format vector tables.
//! - [`external::Spwe`] and [`external::train_spse`] build the external
//!   predictors; [`internal::PositionIndex`] and
//!   [`internal::train_spcse`] the internal ones.
//! - [`ensemble::CspModels`] combines them; [`eval::evaluate_map`] and
//!   [`eval::evaluate_buckets`] score rankings.
//! - [`pipeline`] wires everything into reproducible prepare / train /
//!   predict / evaluate runs used by the CLI.

pub mod config;
pub mod embeddings;
pub mod ensemble;
pub mod eval;
pub mod external;
pub mod internal;
pub mod kb;
pub mod model;
pub mod pipeline;
pub mod score;

pub use config::PipelineConfig;
pub use ensemble::{CspModels, EnsembleWeights};
pub use eval::{average_precision, evaluate_map};
pub use kb::AnnotationSet;
pub use score::{RankedPrediction, ScoreVector};
