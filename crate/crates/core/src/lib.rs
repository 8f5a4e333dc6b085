//! Cross-lingual semantic alignment benchmarking.
//!
//! The crate measures how closely an embedding model places translation
//! equivalents relative to the spread of words within each language
//! (Semantic Affinity), lays out the embeddings with PHATE for visual
//! inspection, and renders publication charts with an SA legend.
//!
//! Modules follow the pipeline order:
//!
//! * [`lexicon`] parses aligned dataset files and expands `|` variants;
//! * [`providers`] acquires embeddings from HTTP endpoints, import files and
//!   the per-word cache;
//! * [`affinity`] computes spreads, SA, bootstrap SEM and tiers;
//! * [`diagnostics`] applies the two-stage model diagnosis;
//! * [`manifold`] is a dense PHATE implementation;
//! * [`viz`] renders SVG (and PNG/PDF) charts.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod affinity;
pub mod diagnostics;
pub mod error;
pub mod lexicon;
pub mod manifold;
pub mod providers;
pub mod viz;

pub use error::{Error, Result};
