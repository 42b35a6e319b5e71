//! Syntactic-priming harness for small language models.
//!
//! Generates templated stimuli for seven sentence types, trains Kneser-Ney
//! n-gram and LSTM language models on disjoint corpus splits, adapts each
//! model on one sentence type, and measures per-type surprisal changes.

pub mod config;
pub mod corpus;
pub mod error;
pub mod lstm;
pub mod ngram;
pub mod pipeline;
pub mod priming;
pub mod stats;
pub mod stimuli;
pub mod svg;
pub mod synth;
pub mod util;

pub use error::{Error, Result};
