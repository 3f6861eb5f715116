//! Causal discovery and treatment-effect estimation for observational cohorts.
//!
//! The crate covers the whole study pipeline: typed cohort tables
//! ([`cohort`]), graph algebra ([`graph`]), a structural-causal-model
//! simulator used as ground truth ([`scm`]), independence tests and scores
//! ([`stats`]), four structure learners ([`discovery`]), majority-vote graph
//! merging ([`ensemble`]), backdoor identification and stratified effect
//! estimation ([`effect`]), refutation checks ([`refute`]), the classic
//! group-comparison statistics ([`analytics`]) and the config-driven
//! orchestration behind the CLI ([`pipeline`]).

pub mod analytics;
pub mod cohort;
pub mod discovery;
pub mod effect;
pub mod ensemble;
pub mod error;
pub mod graph;
pub mod pipeline;
pub mod refute;
pub mod rng;
pub mod scm;
pub mod stats;

pub use error::{Error, Result};
