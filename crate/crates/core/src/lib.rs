//! Training-free, context-aware video summarization from frame embeddings.
//!
//! Sampled frame embeddings are reduced, clustered coarse-to-fine, cut into semantic
//! partitions, scored around keyframes and turned into summaries. The crate also holds
//! the evaluation metrics and the scoring engine of the question-answering survey.

mod error;

pub mod clustering;
pub mod corpus;
pub mod human_eval;
pub mod keyframes;
pub mod manifest;
pub mod metrics;
pub mod partitioning;
pub mod pipeline;
pub mod reduction;
pub mod sampling;
pub mod summary;
pub mod synthetic;
pub mod types;
pub mod vemb;

pub use error::{Error, Result};
pub use types::{
    EmbeddingSet, ImportanceCurve, KeyframeSet, LabelSequence, PartitionSet, ReducedEmbeddingSet, ReductionStep,
    Section, SummarySelection, VideoMeta,
};
