//! Desirability model: quartile labels, seeded split, boosted trees and
//! held-out evaluation.

mod gbdt;
mod labels;
mod metrics;
mod split;

pub use gbdt::{
    sigmoid, train_gbdt, train_gbdt_traced, GbdtModel, Node, TrainConfig, TrainOutcome, Tree,
    MODEL_FORMAT_VERSION,
};
pub use labels::{build_labels, quartiles, LabeledExample, LabeledSet};
pub use metrics::{auc, evaluate, render_table, Confusion, EvalReport};
pub use split::split_train_test;

use crate::corpus::{Corpus, Kind};
use crate::error::Result;
use crate::textfeat::FeatureCache;

/// Probability at or above which a contribution is predicted desirable.
pub const DECISION_THRESHOLD: f64 = 0.5;

/// Integer desirability shown to moderators: `round(100 * p)`, halves up.
pub fn score_from_probability(p: f64) -> u8 {
    (100.0 * p + 0.5).floor().clamp(0.0, 100.0) as u8
}

pub fn desirability_score(model: &GbdtModel, features: &[f64]) -> Result<u8> {
    Ok(score_from_probability(model.predict_probability(features)?))
}

/// Labels, splits, trains and evaluates one kind's model.
pub fn train_and_evaluate(
    corpus: &Corpus,
    kind: Kind,
    features: &FeatureCache,
    config: &TrainConfig,
) -> Result<(TrainOutcome, EvalReport)> {
    let set = build_labels(corpus, kind, features)?;
    let (train, test) = split_train_test(&set, config)?;
    let outcome = train_gbdt_traced(&train, config)?;
    let report = evaluate(&outcome.model, &test, DECISION_THRESHOLD)?;
    Ok((outcome, report))
}
