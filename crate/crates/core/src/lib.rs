//! Leakage-aware benchmarking of drug–target interaction (DTI) link
//! prediction.
//!
//! The crate covers the whole evaluation path: loading bipartite DTI graphs,
//! constrained train/validation/test splits, negative-edge sampling guided by
//! protein structural distance, chemical and structural similarity, a
//! node2vec embedding with a shallow neural classifier, and the metrics used
//! to expose data leakage.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chem;
pub mod embed;
pub mod error;
pub mod graph;
pub mod leakage;
pub mod metrics;
pub mod model;
pub mod negatives;
pub mod seed;
pub mod similarity;
pub mod split;
pub mod structure;
pub mod synth;

pub use error::{Error, Result};
pub use graph::{DtiGraph, Edge, EdgePair, NodeKind, NodeRef};
