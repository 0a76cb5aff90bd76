//! Binary-logistic gradient boosting over regression trees.
//!
//! Trees grow level by level with exact greedy splits. Every feature column
//! is sorted once up front; each level then scans every column a single time
//! and accumulates first/second order gradient sums per open node, so a level
//! costs O(rows * features) no matter how many nodes it holds. Leaf weights
//! are the regularized Newton step `-G / (H + lambda)` scaled by the learning
//! rate. A tree that would raise the training loss has its weights halved
//! until the loss no longer increases.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Kind;
use crate::error::{Error, Result};
use crate::model::labels::{cmp_f64, LabeledSet};

pub const MODEL_FORMAT_VERSION: u32 = 1;
const MIN_GAIN: f64 = 1e-12;
const MAX_BACKTRACK: usize = 40;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub max_depth: usize,
    pub rounds: usize,
    pub learning_rate: f64,
    pub min_leaf: usize,
    pub split_ratio: f64,
    pub seed: u64,
    pub stratified: bool,
    /// L2 penalty on leaf weights.
    pub lambda: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_depth: 6,
            rounds: 200,
            learning_rate: 0.1,
            min_leaf: 10,
            split_ratio: 0.8,
            seed: 0,
            stratified: true,
            lambda: 1.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.max_depth < 1 {
            return bad("max_depth must be at least 1".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return bad(format!("learning_rate must lie in (0, 1], got {}", self.learning_rate));
        }
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return bad(format!("split_ratio must lie in (0, 1), got {}", self.split_ratio));
        }
        if self.min_leaf < 1 {
            return bad("min_leaf must be at least 1".into());
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda must be >= 0, got {}", self.lambda));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        cover: usize,
    },
    Leaf {
        weight: f64,
        cover: usize,
    },
}

/// Binary tree stored as a node array; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf(weight: f64, cover: usize) -> Tree {
        Tree {
            nodes: vec![Node::Leaf { weight, cover }],
        }
    }

    /// Rows go left when `x[feature] < threshold`.
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { weight, .. } => return *weight,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => i = if x[*feature] < *threshold { *left } else { *right },
            }
        }
    }

    /// Number of edges on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        fn go(t: &Tree, i: usize) -> usize {
            match &t.nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(t, *left).max(go(t, *right)),
            }
        }
        go(self, 0)
    }

    pub fn leaves(&self) -> impl Iterator<Item = (f64, usize)> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            Node::Leaf { weight, cover } => Some((*weight, *cover)),
            Node::Split { .. } => None,
        })
    }

    fn max_feature(&self) -> Option<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(*feature),
                Node::Leaf { .. } => None,
            })
            .max()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtModel {
    pub format_version: u32,
    pub kind: Kind,
    pub feature_order: Vec<String>,
    pub config: TrainConfig,
    pub n_train: usize,
    /// Log-odds of the training prior.
    pub base_score: f64,
    pub trees: Vec<Tree>,
}

/// Model together with the mean training log-loss before the first round
/// and after each round.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: GbdtModel,
    pub loss_trace: Vec<f64>,
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn log_loss(margins: &[f64], labels: &[f64]) -> f64 {
    let total: f64 = margins
        .iter()
        .zip(labels)
        .map(|(&m, &y)| {
            // log(1 + e^m) - y*m, computed stably
            let softplus = if m > 0.0 { m + (-m).exp().ln_1p() } else { m.exp().ln_1p() };
            softplus - y * m
        })
        .sum();
    total / margins.len() as f64
}

impl GbdtModel {
    /// Prior-only model (no trees) predicting `p` for every input.
    pub fn constant(kind: Kind, feature_order: Vec<String>, p: f64) -> GbdtModel {
        let p = p.clamp(1e-12, 1.0 - 1e-12);
        GbdtModel {
            format_version: MODEL_FORMAT_VERSION,
            kind,
            feature_order,
            config: TrainConfig {
                rounds: 0,
                ..TrainConfig::default()
            },
            n_train: 0,
            base_score: (p / (1.0 - p)).ln(),
            trees: Vec::new(),
        }
    }

    pub fn margin(&self, features: &[f64]) -> Result<f64> {
        if features.len() != self.feature_order.len() {
            return Err(Error::Shape {
                expected: self.feature_order.len(),
                actual: features.len(),
            });
        }
        Ok(self.base_score + self.trees.iter().map(|t| t.predict(features)).sum::<f64>())
    }

    /// Probability of the desirable class, strictly inside (0, 1).
    pub fn predict_probability(&self, features: &[f64]) -> Result<f64> {
        Ok(sigmoid(self.margin(features)?).clamp(1e-12, 1.0 - 1e-12))
    }

    pub fn max_depth(&self) -> usize {
        self.trees.iter().map(Tree::depth).max().unwrap_or(0)
    }

    pub fn check_structure(&self) -> Result<()> {
        if self.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::ModelFormat(self.format_version));
        }
        let n = self.feature_order.len();
        for t in &self.trees {
            if t.max_feature().is_some_and(|f| f >= n) {
                return Err(Error::Shape {
                    expected: n,
                    actual: t.max_feature().unwrap_or_default() + 1,
                });
            }
            for node in &t.nodes {
                if let Node::Split { left, right, .. } = node {
                    if *left >= t.nodes.len() || *right >= t.nodes.len() {
                        return Err(Error::InvalidConfig("tree child index out of range".into()));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<GbdtModel> {
        let probe: serde_json::Value = serde_json::from_str(s)?;
        let version = probe
            .get("format_version")
            .and_then(serde_json::Value::as_u64)
            .unwrap_or(0) as u32;
        if version != MODEL_FORMAT_VERSION {
            return Err(Error::ModelFormat(version));
        }
        let model: GbdtModel = serde_json::from_value(probe)?;
        model.check_structure()?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<GbdtModel> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        GbdtModel::from_json(&s)
    }
}

pub fn train_gbdt(train: &LabeledSet, config: &TrainConfig) -> Result<GbdtModel> {
    Ok(train_gbdt_traced(train, config)?.model)
}

pub fn train_gbdt_traced(train: &LabeledSet, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    let n = train.len();
    let pos = train.positives();
    if n == 0 || pos == 0 || pos == n {
        return Err(Error::DegenerateTraining(format!(
            "need both classes, got {pos} desirable of {n}"
        )));
    }
    let n_features = train.feature_order.len();
    for e in &train.examples {
        if e.features.len() != n_features {
            return Err(Error::Shape {
                expected: n_features,
                actual: e.features.len(),
            });
        }
        if e.features.iter().any(|x| x.is_nan()) {
            return Err(Error::InvalidPayload(format!(
                "NaN feature in {}",
                e.contribution_id
            )));
        }
    }

    let labels: Vec<f64> = train.examples.iter().map(|e| f64::from(e.label)).collect();
    let prior = pos as f64 / n as f64;
    let base_score = (prior / (1.0 - prior)).ln();

    let columns: Vec<Vec<f64>> = (0..n_features)
        .map(|f| train.examples.iter().map(|e| e.features[f]).collect())
        .collect();
    let sorted: Vec<Vec<u32>> = columns
        .iter()
        .map(|col| {
            let mut idx: Vec<u32> = (0..n as u32).collect();
            idx.sort_by(|&a, &b| cmp_f64(col[a as usize], col[b as usize]).then(a.cmp(&b)));
            idx
        })
        .collect();

    let mut margins = vec![base_score; n];
    let mut loss = log_loss(&margins, &labels);
    let mut trace = vec![loss];
    let mut trees = Vec::with_capacity(config.rounds);
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];

    for _ in 0..config.rounds {
        for i in 0..n {
            let p = sigmoid(margins[i]);
            grad[i] = p - labels[i];
            hess[i] = p * (1.0 - p);
        }
        let (mut tree, leaf_of) = grow_tree(&columns, &sorted, &grad, &hess, config);
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACK {
            let candidate: Vec<f64> = margins
                .iter()
                .zip(&leaf_of)
                .map(|(m, &leaf)| m + scale * leaf_weight(&tree, leaf))
                .collect();
            let new_loss = log_loss(&candidate, &labels);
            if new_loss <= loss {
                accepted = Some((candidate, new_loss));
                break;
            }
            scale *= 0.5;
        }
        match accepted {
            Some((m, l)) => {
                if scale != 1.0 {
                    scale_leaves(&mut tree, scale);
                }
                margins = m;
                loss = l;
            }
            None => scale_leaves(&mut tree, 0.0),
        }
        trace.push(loss);
        trees.push(tree);
    }

    Ok(TrainOutcome {
        model: GbdtModel {
            format_version: MODEL_FORMAT_VERSION,
            kind: train.kind,
            feature_order: train.feature_order.clone(),
            config: config.clone(),
            n_train: n,
            base_score,
            trees,
        },
        loss_trace: trace,
    })
}

fn leaf_weight(tree: &Tree, node: usize) -> f64 {
    match tree.nodes[node] {
        Node::Leaf { weight, .. } => weight,
        Node::Split { .. } => unreachable!("rows always end in a leaf"),
    }
}

fn scale_leaves(tree: &mut Tree, scale: f64) {
    for n in &mut tree.nodes {
        if let Node::Leaf { weight, .. } = n {
            *weight *= scale;
        }
    }
}

#[derive(Clone, Copy, Default)]
struct Stats {
    g: f64,
    h: f64,
    n: usize,
}

impl Stats {
    fn add(&mut self, g: f64, h: f64) {
        self.g += g;
        self.h += h;
        self.n += 1;
    }

    fn score(&self, lambda: f64) -> f64 {
        self.g * self.g / (self.h + lambda)
    }
}

#[derive(Clone, Copy)]
struct Candidate {
    gain: f64,
    feature: usize,
    threshold: f64,
}

/// Grows one tree; returns it with the leaf index of every row.
fn grow_tree(
    columns: &[Vec<f64>],
    sorted: &[Vec<u32>],
    grad: &[f64],
    hess: &[f64],
    config: &TrainConfig,
) -> (Tree, Vec<usize>) {
    let n = grad.len();
    let lambda = config.lambda;
    let mut node_of = vec![0usize; n];
    let mut root = Stats::default();
    for i in 0..n {
        root.add(grad[i], hess[i]);
    }
    // Placeholder entries are overwritten once a node is split or closed.
    let mut nodes = vec![Node::Leaf {
        weight: 0.0,
        cover: n,
    }];
    let mut totals = vec![root];
    let mut open: Vec<usize> = vec![0];

    for _depth in 0..config.max_depth {
        // slot per open node; usize::MAX for rows in closed nodes
        let mut slot_of_node = vec![usize::MAX; nodes.len()];
        let splittable: Vec<usize> = open
            .iter()
            .copied()
            .filter(|&id| totals[id].n >= 2 * config.min_leaf)
            .collect();
        for (s, &id) in splittable.iter().enumerate() {
            slot_of_node[id] = s;
        }
        if splittable.is_empty() {
            break;
        }
        let mut best: Vec<Option<Candidate>> = vec![None; splittable.len()];
        let mut acc = vec![Stats::default(); splittable.len()];
        let mut last = vec![f64::NAN; splittable.len()];

        for (f, order) in sorted.iter().enumerate() {
            let col = &columns[f];
            acc.iter_mut().for_each(|a| *a = Stats::default());
            for &row in order {
                let row = row as usize;
                let slot = slot_of_node[node_of[row]];
                if slot == usize::MAX {
                    continue;
                }
                let v = col[row];
                let left = acc[slot];
                if left.n > 0 && v > last[slot] {
                    let total = totals[splittable[slot]];
                    let right_n = total.n - left.n;
                    if left.n >= config.min_leaf && right_n >= config.min_leaf {
                        let right = Stats {
                            g: total.g - left.g,
                            h: total.h - left.h,
                            n: right_n,
                        };
                        let gain = 0.5
                            * (left.score(lambda) + right.score(lambda) - total.score(lambda));
                        if gain > MIN_GAIN && best[slot].is_none_or(|b| gain > b.gain) {
                            best[slot] = Some(Candidate {
                                gain,
                                feature: f,
                                threshold: midpoint(last[slot], v),
                            });
                        }
                    }
                }
                acc[slot].add(grad[row], hess[row]);
                last[slot] = v;
            }
        }

        let mut next_open = Vec::new();
        let mut child_of: Vec<Option<(usize, usize, usize, f64)>> = vec![None; nodes.len()];
        for (slot, &id) in splittable.iter().enumerate() {
            if let Some(c) = best[slot] {
                let l = nodes.len();
                let r = l + 1;
                nodes.push(Node::Leaf { weight: 0.0, cover: 0 });
                nodes.push(Node::Leaf { weight: 0.0, cover: 0 });
                totals.push(Stats::default());
                totals.push(Stats::default());
                nodes[id] = Node::Split {
                    feature: c.feature,
                    threshold: c.threshold,
                    left: l,
                    right: r,
                    cover: totals[id].n,
                };
                child_of[id] = Some((l, r, c.feature, c.threshold));
                next_open.push(l);
                next_open.push(r);
            }
        }
        if next_open.is_empty() {
            break;
        }
        for row in 0..n {
            if let Some((l, r, f, t)) = child_of.get(node_of[row]).copied().flatten() {
                let child = if columns[f][row] < t { l } else { r };
                node_of[row] = child;
                totals[child].add(grad[row], hess[row]);
            }
        }
        open = next_open;
    }

    for (id, node) in nodes.iter_mut().enumerate() {
        if let Node::Leaf { weight, cover } = node {
            let s = totals[id];
            *weight = -config.learning_rate * s.g / (s.h + lambda);
            *cover = s.n;
        }
    }
    (Tree { nodes }, node_of)
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    // guard against rounding onto the lower value
    if m > a {
        m
    } else {
        b
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::labels::LabeledExample;

    fn toy(n: usize) -> LabeledSet {
        let examples = (0..n)
            .map(|i| LabeledExample {
                contribution_id: format!("e{i}"),
                features: vec![(i * 7 % 13) as f64, i as f64],
                label: u8::from(i >= n / 2),
            })
            .collect();
        LabeledSet {
            kind: Kind::Post,
            feature_order: vec!["noise".into(), "signal".into()],
            examples,
        }
    }

    fn accuracy(m: &GbdtModel, set: &LabeledSet) -> f64 {
        let hits = set
            .examples
            .iter()
            .filter(|e| {
                let p = m.predict_probability(&e.features).unwrap();
                u8::from(p >= 0.5) == e.label
            })
            .count();
        hits as f64 / set.len() as f64
    }

    #[test]
    fn separable_within_fifty_rounds() {
        let set = toy(60);
        let cfg = TrainConfig {
            rounds: 50,
            ..Default::default()
        };
        let out = train_gbdt_traced(&set, &cfg).unwrap();
        assert_eq!(accuracy(&out.model, &set), 1.0);
        assert!(out.loss_trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn zero_rounds_predicts_prior() {
        let mut set = toy(40);
        for e in set.examples.iter_mut().take(10) {
            e.label = 1;
        }
        let cfg = TrainConfig {
            rounds: 0,
            ..Default::default()
        };
        let m = train_gbdt(&set, &cfg).unwrap();
        let prior = set.positives() as f64 / set.len() as f64;
        for e in &set.examples {
            assert!((m.predict_probability(&e.features).unwrap() - prior).abs() < 1e-12);
        }
    }

    #[test]
    fn hand_built_tree() {
        let m = GbdtModel {
            format_version: MODEL_FORMAT_VERSION,
            kind: Kind::Comment,
            feature_order: vec!["x".into()],
            config: TrainConfig::default(),
            n_train: 0,
            base_score: 0.0,
            trees: vec![Tree {
                nodes: vec![
                    Node::Split {
                        feature: 0,
                        threshold: 0.5,
                        left: 1,
                        right: 2,
                        cover: 2,
                    },
                    Node::Leaf { weight: -1.0, cover: 1 },
                    Node::Leaf { weight: 1.0, cover: 1 },
                ],
            }],
        };
        let p = m.predict_probability(&[0.0]).unwrap();
        assert!((p - 0.268_941_421_369_995_1).abs() < 1e-12);
        assert!(matches!(m.predict_probability(&[0.0, 1.0]), Err(Error::Shape { .. })));
    }

    #[test]
    fn single_class_rejected() {
        let mut set = toy(20);
        set.examples.iter_mut().for_each(|e| e.label = 0);
        assert!(matches!(
            train_gbdt(&set, &TrainConfig::default()),
            Err(Error::DegenerateTraining(_))
        ));
    }

    #[test]
    fn depth_and_leaf_support_bounds() {
        let set = toy(200);
        let cfg = TrainConfig {
            rounds: 10,
            max_depth: 3,
            min_leaf: 7,
            ..Default::default()
        };
        let m = train_gbdt(&set, &cfg).unwrap();
        assert!(m.max_depth() <= 3);
        assert!(m.trees.iter().flat_map(|t| t.leaves()).all(|(_, c)| c >= 7));
    }

    #[test]
    fn json_round_trip_and_version_check() {
        let m = train_gbdt(&toy(60), &TrainConfig { rounds: 5, ..Default::default() }).unwrap();
        let back = GbdtModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(m, back);
        let mut v: serde_json::Value = serde_json::from_str(&m.to_json().unwrap()).unwrap();
        v["format_version"] = 99.into();
        assert!(matches!(
            GbdtModel::from_json(&v.to_string()),
            Err(Error::ModelFormat(99))
        ));
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0);
        assert!(sigmoid(800.0) <= 1.0);
    }
}
