use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::Kind;
use crate::error::{Error, Result};
use crate::model::gbdt::GbdtModel;
use crate::model::labels::{cmp_f64, LabeledSet};

/// Rank-based ROC AUC: `P(pos > neg) + 0.5 * P(tie)`, using mid-ranks for ties.
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Shape {
            expected: labels.len(),
            actual: scores.len(),
        });
    }
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedAuc(format!(
            "{n_pos} positives and {n_neg} negatives"
        )));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| cmp_f64(scores[a], scores[b]));

    let mut pos_rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // 1-based ranks i+1 ..= j+1 share their mean
        let mid = (i + j) as f64 / 2.0 + 1.0;
        let pos_in_group = order[i..=j].iter().filter(|&&k| labels[k] == 1).count();
        pos_rank_sum += mid * pos_in_group as f64;
        i = j + 1;
    }
    let (p, q) = (n_pos as f64, n_neg as f64);
    Ok((pos_rank_sum - p * (p + 1.0) / 2.0) / (p * q))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub kind: Kind,
    pub accuracy: f64,
    pub auc: f64,
    pub threshold: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub confusion: Confusion,
}

/// Accuracy at `threshold` (probability >= threshold counts as desirable),
/// AUC and confusion counts on a held-out set.
pub fn evaluate(model: &GbdtModel, test: &LabeledSet, threshold: f64) -> Result<EvalReport> {
    if test.is_empty() {
        return Err(Error::InsufficientData("empty test set".into()));
    }
    let mut scores = Vec::with_capacity(test.len());
    let mut labels = Vec::with_capacity(test.len());
    let mut confusion = Confusion::default();
    for e in &test.examples {
        let p = model.predict_probability(&e.features)?;
        let predicted = p >= threshold;
        match (predicted, e.label == 1) {
            (true, true) => confusion.tp += 1,
            (true, false) => confusion.fp += 1,
            (false, false) => confusion.tn += 1,
            (false, true) => confusion.fn_ += 1,
        }
        scores.push(p);
        labels.push(e.label);
    }
    Ok(EvalReport {
        kind: test.kind,
        accuracy: (confusion.tp + confusion.tn) as f64 / test.len() as f64,
        auc: auc(&scores, &labels)?,
        threshold,
        n_train: model.n_train,
        n_test: test.len(),
        confusion,
    })
}

/// Human table with one row per community: accuracy and AUC for posts and
/// comments side by side.
pub fn render_table(rows: &[(String, Option<EvalReport>, Option<EvalReport>)]) -> String {
    let cell = |r: &Option<EvalReport>| match r {
        Some(r) => format!("{:.1}% / {:.3}", 100.0 * r.accuracy, r.auc),
        None => "-".to_string(),
    };
    let cells: Vec<[String; 3]> = rows
        .iter()
        .map(|(name, p, c)| [name.clone(), cell(p), cell(c)])
        .collect();
    let header = ["Subreddit", "Posts Acc/AUC", "Comments Acc/AUC"];
    let mut widths = header.map(str::len);
    for row in &cells {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, cols: [&str; 3]| {
        let _ = writeln!(
            out,
            "| {:<w0$} | {:<w1$} | {:<w2$} |",
            cols[0],
            cols[1],
            cols[2],
            w0 = widths[0],
            w1 = widths[1],
            w2 = widths[2]
        );
    };
    line(&mut out, header);
    let _ = writeln!(
        out,
        "|{}|{}|{}|",
        "-".repeat(widths[0] + 2),
        "-".repeat(widths[1] + 2),
        "-".repeat(widths[2] + 2)
    );
    for row in &cells {
        line(&mut out, [&row[0], &row[1], &row[2]]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::labels::LabeledExample;

    #[test]
    fn simple_cases() {
        assert_eq!(auc(&[0.9, 0.1], &[1, 0]).unwrap(), 1.0);
        assert_eq!(auc(&[0.1, 0.9], &[1, 0]).unwrap(), 0.0);
        assert_eq!(auc(&[0.3; 6], &[1, 0, 1, 0, 0, 1]).unwrap(), 0.5);
        assert!(matches!(auc(&[0.1, 0.2], &[1, 1]), Err(Error::UndefinedAuc(_))));
    }

    #[test]
    fn perfect_separation_report() {
        let examples = (0..10)
            .map(|i| LabeledExample {
                contribution_id: i.to_string(),
                features: vec![i as f64],
                label: u8::from(i >= 5),
            })
            .collect();
        let test = LabeledSet {
            kind: Kind::Post,
            feature_order: vec!["x".into()],
            examples,
        };
        let model = GbdtModel {
            trees: vec![crate::model::gbdt::Tree {
                nodes: vec![
                    crate::model::gbdt::Node::Split {
                        feature: 0,
                        threshold: 4.5,
                        left: 1,
                        right: 2,
                        cover: 10,
                    },
                    crate::model::gbdt::Node::Leaf { weight: -3.0, cover: 5 },
                    crate::model::gbdt::Node::Leaf { weight: 3.0, cover: 5 },
                ],
            }],
            ..GbdtModel::constant(Kind::Post, vec!["x".into()], 0.5)
        };
        let r = evaluate(&model, &test, 0.5).unwrap();
        assert_eq!((r.accuracy, r.auc), (1.0, 1.0));
        assert_eq!(r.confusion.total(), r.n_test);
        let table = render_table(&[("demo".into(), Some(r), None)]);
        assert!(table.starts_with("| Subreddit | Posts Acc/AUC  | Comments Acc/AUC |"));
        assert!(table.contains("100.0% / 1.000"));
    }
}
