//! Per-image knowledge bases from question corpora and scene graphs, plus a
//! desk-scale late-fusion compositional-attention reasoner and the ablation
//! harness that compares knowledge sources with the reasoner held fixed.
//!
//! Modules follow the pipeline:
//!
//! - [`ingest`]: parse questions and scene graphs
//! - [`lexicon`]: plural removal, hypernym closure, attribute/predicate grouping
//! - [`stats`]: high-frequency-word knowledge bases
//! - [`embed`]: word-vector tables and label embedding
//! - [`knowledge`]: per-image embedded knowledge streams per feature mode
//! - [`reasoner`]: one compositional-attention reasoning branch
//! - [`fusion`]: late fusion of branch logits, loss, and training
//! - [`harness`]: synthetic worlds, evaluation, and the feature ablation

pub mod embed;
pub mod knowledge;
pub mod error;
pub mod ingest;
pub mod lexicon;
pub mod seeding;
pub mod stats;

pub use error::{Error, Result};
