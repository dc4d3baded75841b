//! Interpretable text-screening toolkit.
//!
//! The library covers the whole pipeline: corpus loading and author-disjoint
//! splitting ([`corpus`]), lexicon sentiment scoring ([`sentiment`]), the
//! 13-feature extractor with train-fit standardization ([`features`]),
//! keyword masking ([`masking`]), ridge logistic regression with explicit
//! coefficients ([`model`]), metrics with bootstrap intervals and
//! calibration ([`eval`]), two-group statistics ([`stats`]), and the
//! experiment runners ([`experiments`]). The `anxscreen` binary wires these
//! into rerunnable file-based commands ([`cli`]); [`demo`] generates the
//! synthetic quick-start corpus.

pub mod cli;
pub mod corpus;
pub mod demo;
pub mod error;
pub mod eval;
pub mod experiments;
pub mod features;
pub mod masking;
pub mod model;
pub mod optim;
pub mod sentiment;
pub mod special;
pub mod stats;

pub use error::{Error, Result};
