use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::gbdt::TrainConfig;
use crate::model::labels::{LabeledExample, LabeledSet};

/// Seeded train/test split; `|train| = round(split_ratio * n)`.
///
/// When stratified, each class is shuffled on its own and contributes
/// `round(split_ratio * n_class)` items to the training side (the negative
/// class absorbs rounding so the total stays exact).
pub fn split_train_test(set: &LabeledSet, config: &TrainConfig) -> Result<(LabeledSet, LabeledSet)> {
    config.validate()?;
    let n = set.len();
    if n < 5 {
        return Err(Error::InsufficientData(format!(
            "need at least 5 examples to split, got {n}"
        )));
    }
    let ratio = config.split_ratio;
    let n_train = (ratio * n as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let (mut train, mut test): (Vec<LabeledExample>, Vec<LabeledExample>) = if config.stratified {
        let (mut pos, mut neg): (Vec<_>, Vec<_>) =
            set.examples.iter().cloned().partition(|e| e.label == 1);
        pos.shuffle(&mut rng);
        neg.shuffle(&mut rng);
        let mut pos_train = ((ratio * pos.len() as f64).round() as usize).min(n_train);
        if n_train - pos_train > neg.len() {
            pos_train = n_train - neg.len();
        }
        let neg_train = n_train - pos_train;
        let pos_test = pos.split_off(pos_train);
        let neg_test = neg.split_off(neg_train);
        for (name, tr, te) in [
            ("desirable", pos.len(), pos_test.len()),
            ("undesirable", neg.len(), neg_test.len()),
        ] {
            if tr == 0 || te == 0 {
                return Err(Error::Stratification(format!(
                    "class {name} has {tr} train and {te} test examples"
                )));
            }
        }
        let mut train = pos;
        train.extend(neg);
        train.shuffle(&mut rng);
        let mut test = pos_test;
        test.extend(neg_test);
        test.shuffle(&mut rng);
        (train, test)
    } else {
        let mut all = set.examples.clone();
        all.shuffle(&mut rng);
        let test = all.split_off(n_train);
        (all, test)
    };
    train.shrink_to_fit();
    test.shrink_to_fit();
    Ok((set.with_examples(train), set.with_examples(test)))
}
