//! Positive-moderation queue engine.
//!
//! The crate scores community contributions with a boosted-tree desirability
//! model, bins the scores into five percentile cues, filters and sorts the
//! post queue on seven metrics, and records moderator reward actions in an
//! append-only log that can be replayed.

pub mod actions;
pub mod corpus;
pub mod engine;
pub mod error;
pub mod model;
pub mod queue;
pub mod records;
pub mod synth;
pub mod textfeat;

pub use corpus::{Author, Contribution, Corpus, Kind};
pub use error::{Error, Result};
pub use synth::{generate_synthetic_corpus, SyntheticConfig};
pub use engine::{Engine, EngineConfig, Models};
