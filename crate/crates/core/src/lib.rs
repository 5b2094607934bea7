//! Semantic-distance tooling for knowledge fine-tuning.
//!
//! The crate works on answers embedded by a model's embedding layer and
//! stored in the `SEMB` container, plus weight and feature matrices in
//! `SMAT`:
//!
//! - [`semantics`]: mean pooling, cosine target distance, the loss
//!   re-weighting coefficient
//! - [`metrics`]: accuracy / generality / locality, deviation diagnostics,
//!   distance-binned reports
//! - [`filtering`]: greedy curation of the training set against a pool
//! - [`reweight`]: per-example loss multipliers for external training loops
//! - [`matan`]: SVD, subspace projection norms, PCA
//! - [`embed_io`]: file formats

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod embed_io;
mod error;
pub mod filtering;
pub mod matan;
pub mod metrics;
pub mod reweight;
pub mod semantics;
pub mod stats;

pub use embed_io::{
    embedding_key, AnswerRole, DenseMatrix, EmbeddingTable, KnowledgeItem, LocalityProbe, Rephrase,
    TokenMatrix,
};
pub use error::{Error, Operand, Result};
pub use filtering::{
    greedy_filter, objective, random_baseline, Dispersion, FilterConfig, FilterResult, ScoredItem,
    StopReason, Swap,
};
pub use matan::{pca, subspace_report, svd, PcaResult, SubspaceReport, Svd};
pub use metrics::{
    binned_report, deviation_analysis, exact_match, score_dataset, BinnedReport, DeviationRecord,
    DeviationReport, ScoreReport, StatSet,
};
pub use reweight::{compose_loss, emit_weights, WeightRecord};
pub use semantics::{cosine_distance, mean_pool, reweight_lambda, target_distance, DistancePair};
