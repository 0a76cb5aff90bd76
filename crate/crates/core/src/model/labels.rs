use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Kind};
use crate::error::{Error, Result};
use crate::textfeat::FeatureCache;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub contribution_id: String,
    pub features: Vec<f64>,
    /// 1 = desirable (top quartile), 0 = undesirable (bottom half).
    pub label: u8,
}

/// Examples of one kind sharing a feature order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSet {
    pub kind: Kind,
    pub feature_order: Vec<String>,
    pub examples: Vec<LabeledExample>,
}

impl LabeledSet {
    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.examples.iter().filter(|e| e.label == 1).count()
    }

    pub fn with_examples(&self, examples: Vec<LabeledExample>) -> LabeledSet {
        LabeledSet {
            kind: self.kind,
            feature_order: self.feature_order.clone(),
            examples,
        }
    }
}

/// Quartile of each item (0 = lowest) when ranked by score, ties by id.
/// Quartile `q` holds ranks `floor(q*n/4) .. floor((q+1)*n/4)`.
pub fn quartiles<'a>(items: &[(&'a str, i64)]) -> Vec<(&'a str, u8)> {
    let mut ranked: Vec<(&str, i64)> = items.to_vec();
    ranked.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(b.0)));
    let n = ranked.len();
    let mut out = Vec::with_capacity(n);
    for q in 0..4u8 {
        let lo = usize::from(q) * n / 4;
        let hi = (usize::from(q) + 1) * n / 4;
        out.extend(ranked[lo..hi].iter().map(|(id, _)| (*id, q)));
    }
    out
}

/// Top quartile becomes 1, bottom two quartiles 0, the third is discarded.
/// Examples come out in contribution-id order.
pub fn build_labels(corpus: &Corpus, kind: Kind, features: &FeatureCache) -> Result<LabeledSet> {
    let items: Vec<(&str, i64)> = corpus
        .of_kind(kind)
        .map(|c| (c.id.as_str(), c.score))
        .collect();
    if items.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "need at least 4 {kind}s to form quartiles, got {}",
            items.len()
        )));
    }
    let mut labeled: Vec<(&str, u8)> = quartiles(&items)
        .into_iter()
        .filter_map(|(id, q)| match q {
            3 => Some((id, 1)),
            0 | 1 => Some((id, 0)),
            _ => None,
        })
        .collect();
    labeled.sort_by(|a, b| a.0.cmp(b.0));

    let mut feature_order: Option<Vec<String>> = None;
    let mut examples = Vec::with_capacity(labeled.len());
    for (id, label) in labeled {
        let fv = features
            .get(id)
            .ok_or_else(|| Error::not_found("feature vector", id))?;
        let names = fv.names();
        match &feature_order {
            None => feature_order = Some(names),
            Some(order) if *order != names => {
                return Err(Error::Shape {
                    expected: order.len(),
                    actual: names.len(),
                })
            }
            Some(_) => {}
        }
        examples.push(LabeledExample {
            contribution_id: id.to_string(),
            features: fv.to_vec(),
            label,
        });
    }
    Ok(LabeledSet {
        kind,
        feature_order: feature_order.unwrap_or_default(),
        examples,
    })
}

pub(crate) fn cmp_f64(a: f64, b: f64) -> Ordering {
    a.total_cmp(&b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Author, Contribution};
    use crate::textfeat::{extract_all, FeatureConfig, LexiconSet};

    fn corpus_with_scores(scores: &[i64]) -> Corpus {
        let authors = vec![Author::new("a", "a", 1, 1)];
        let posts = scores
            .iter()
            .enumerate()
            .map(|(i, s)| Contribution::post(format!("p{i:02}"), "s", "t", "b", "a", 10, *s))
            .collect();
        Corpus::new(authors, posts).unwrap()
    }

    fn labels_by_score(scores: &[i64]) -> Vec<(i64, u8)> {
        let corpus = corpus_with_scores(scores);
        let cfg = FeatureConfig {
            embedding_dim: 8,
            ..Default::default()
        };
        let feats = extract_all(&corpus, &LexiconSet::builtin(), &cfg);
        let set = build_labels(&corpus, Kind::Post, &feats).unwrap();
        let mut out: Vec<_> = set
            .examples
            .iter()
            .map(|e| (corpus.get(&e.contribution_id).unwrap().score, e.label))
            .collect();
        out.sort();
        out
    }

    #[test]
    fn eight_scores() {
        let got = labels_by_score(&[10, 20, 30, 40, 50, 60, 70, 80]);
        assert_eq!(got, [(10, 0), (20, 0), (30, 0), (40, 0), (70, 1), (80, 1)]);
    }

    #[test]
    fn four_items() {
        let got = labels_by_score(&[5, 1, 3, 2]);
        assert_eq!(got, [(1, 0), (2, 0), (5, 1)]);
    }

    #[test]
    fn ties_split_by_id() {
        let items: Vec<(String, i64)> = (0..8).map(|i| (format!("x{i}"), 7)).collect();
        let refs: Vec<(&str, i64)> = items.iter().map(|(a, b)| (a.as_str(), *b)).collect();
        let q = quartiles(&refs);
        let sizes: Vec<usize> = (0..4).map(|k| q.iter().filter(|(_, x)| *x == k).count()).collect();
        assert_eq!(sizes, [2, 2, 2, 2]);
        assert_eq!(q[6], ("x6", 3));
        assert_eq!(q[7], ("x7", 3));
    }

    #[test]
    fn too_few() {
        let corpus = corpus_with_scores(&[1, 2, 3]);
        assert!(matches!(
            build_labels(&corpus, Kind::Post, &FeatureCache::new()),
            Err(Error::InsufficientData(_))
        ));
    }
}
