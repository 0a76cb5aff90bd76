//! Interpretable text features plus a hashed embedding for each
//! contribution: lexicon category shares, sentiment, readability,
//! interrogative style, politeness, toxicity and a dense vector.

mod embed;
mod lexicon;
mod scores;
mod tokenize;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{Contribution, Corpus};
use crate::error::{Error, Result};
use crate::records::{read_records, write_records};

pub use embed::{cosine, embed_tokens};
pub use lexicon::{
    LexiconSet, Phrase, PolitenessStrategy, WordMap, CATEGORIES_FILE, POLITENESS_FILE,
    TOXICITY_FILE, VALENCE_FILE,
};
pub use scores::{
    category_proportions, compound, interrogative_ratio, interrogative_ratio_of, is_negator,
    politeness_score, readability, sentiment_compound, toxicity_score, COMPOUND_ALPHA,
    NEGATION_WINDOW,
};
pub use tokenize::{strip_markdown_links, syllables, tokenize, tokenize_with, Sentence, TokenizedText};

pub const DEFAULT_EMBEDDING_DIM: usize = 384;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    pub embedding_dim: usize,
    /// Directory holding the four lexicon files; `None` uses the built-in set.
    pub lexicon_dir: Option<PathBuf>,
    pub syllable_heuristic: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            embedding_dim: DEFAULT_EMBEDDING_DIM,
            lexicon_dir: None,
            syllable_heuristic: true,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.embedding_dim < 8 {
            return Err(Error::InvalidConfig(format!(
                "embedding_dim must be at least 8, got {}",
                self.embedding_dim
            )));
        }
        Ok(())
    }

    pub fn load_lexicons(&self) -> Result<LexiconSet> {
        match &self.lexicon_dir {
            Some(dir) => LexiconSet::load_dir(dir),
            None => Ok(LexiconSet::builtin()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub category_proportions: BTreeMap<String, f64>,
    pub sentiment: f64,
    pub readability: f64,
    pub interrogative_ratio: f64,
    pub politeness: f64,
    pub toxicity: f64,
    pub embedding: Vec<f64>,
}

pub const SCALAR_FEATURES: [&str; 5] = [
    "sentiment",
    "readability",
    "interrogative_ratio",
    "politeness",
    "toxicity",
];

impl FeatureVector {
    /// Flattened model input: categories (sorted by name), the five scalar
    /// features, then the embedding.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.category_proportions.len() + 5 + self.embedding.len());
        v.extend(self.category_proportions.values().copied());
        v.extend([
            self.sentiment,
            self.readability,
            self.interrogative_ratio,
            self.politeness,
            self.toxicity,
        ]);
        v.extend_from_slice(&self.embedding);
        v
    }

    pub fn names(&self) -> Vec<String> {
        flat_names(self.category_proportions.keys().map(String::as_str), self.embedding.len())
    }
}

/// Feature names in the order produced by [`FeatureVector::to_vec`].
pub fn feature_names(lexicons: &LexiconSet, config: &FeatureConfig) -> Vec<String> {
    flat_names(lexicons.category_names(), config.embedding_dim)
}

fn flat_names<'a>(categories: impl Iterator<Item = &'a str>, dim: usize) -> Vec<String> {
    let mut names: Vec<String> = categories.map(|c| format!("cat:{c}")).collect();
    names.extend(SCALAR_FEATURES.iter().map(|s| s.to_string()));
    names.extend((0..dim).map(|i| format!("emb:{i}")));
    names
}

pub fn embed(text: &str, config: &FeatureConfig) -> Vec<f64> {
    embed_tokens(&tokenize_with(text, config.syllable_heuristic), config.embedding_dim)
}

/// Runs every extractor on one piece of text.
pub fn extract_text(text: &str, lexicons: &LexiconSet, config: &FeatureConfig) -> FeatureVector {
    let tokens = tokenize_with(text, config.syllable_heuristic);
    FeatureVector {
        category_proportions: category_proportions(&tokens, lexicons),
        sentiment: sentiment_compound(&tokens, lexicons),
        readability: readability(&tokens),
        interrogative_ratio: interrogative_ratio_of(&tokens),
        politeness: politeness_score(&tokens, lexicons),
        toxicity: toxicity_score(&tokens, lexicons),
        embedding: embed_tokens(&tokens, config.embedding_dim),
    }
}

/// Text a contribution is scored on: title and body joined by a newline for
/// posts that have a title, the body otherwise.
pub fn contribution_text(c: &Contribution) -> std::borrow::Cow<'_, str> {
    match &c.title {
        Some(t) if c.is_post() => format!("{t}\n{}", c.body).into(),
        _ => c.body.as_str().into(),
    }
}

pub fn extract_features(c: &Contribution, lexicons: &LexiconSet, config: &FeatureConfig) -> FeatureVector {
    extract_text(&contribution_text(c), lexicons, config)
}

/// Features keyed by contribution id.
pub type FeatureCache = BTreeMap<String, FeatureVector>;

#[derive(Serialize, Deserialize)]
struct FeatureRecord {
    id: String,
    #[serde(flatten)]
    features: FeatureVector,
}

/// Extracts features for the whole corpus across worker threads.
pub fn extract_all(corpus: &Corpus, lexicons: &LexiconSet, config: &FeatureConfig) -> FeatureCache {
    let items = corpus.contributions();
    let workers = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(items.len().max(1));
    let chunk = items.len().div_ceil(workers).max(1);
    std::thread::scope(|s| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|part| {
                s.spawn(move || {
                    part.iter()
                        .map(|c| (c.id.clone(), extract_features(c, lexicons, config)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("feature worker panicked"))
            .collect()
    })
}

pub fn write_feature_cache(path: &Path, cache: &FeatureCache) -> Result<()> {
    let recs: Vec<FeatureRecord> = cache
        .iter()
        .map(|(id, f)| FeatureRecord {
            id: id.clone(),
            features: f.clone(),
        })
        .collect();
    write_records(path, &recs)
}

pub fn read_feature_cache(path: &Path) -> Result<FeatureCache> {
    let recs: Vec<FeatureRecord> = read_records(path)?;
    let mut cache = FeatureCache::new();
    let mut dim = None;
    for r in recs {
        let d = r.features.embedding.len();
        if *dim.get_or_insert(d) != d {
            return Err(Error::InvalidConfig(format!(
                "feature cache mixes embedding dimensions ({} and {d})",
                dim.unwrap_or_default()
            )));
        }
        if cache.insert(r.id.clone(), r.features).is_some() {
            return Err(Error::Duplicate(format!("feature record {}", r.id)));
        }
    }
    Ok(cache)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_comment_is_all_zero() {
        let lex = LexiconSet::builtin();
        let c = Contribution::comment("c", "s", "", "a", 1, 0, "p", "p");
        let f = extract_features(&c, &lex, &FeatureConfig::default());
        assert!(f.to_vec().iter().all(|x| *x == 0.0));
        assert_eq!(f.embedding.len(), DEFAULT_EMBEDDING_DIM);
    }

    #[test]
    fn post_without_title_matches_comment() {
        let lex = LexiconSet::builtin();
        let cfg = FeatureConfig::default();
        let mut p = Contribution::post("p", "s", "", "Great answer, thanks!", "a", 1, 0);
        p.title = None;
        let c = Contribution::comment("c", "s", "Great answer, thanks!", "a", 1, 0, "p", "p");
        assert_eq!(extract_features(&p, &lex, &cfg), extract_features(&c, &lex, &cfg));
    }

    #[test]
    fn names_line_up_with_vector() {
        let lex = LexiconSet::builtin();
        let cfg = FeatureConfig {
            embedding_dim: 16,
            ..Default::default()
        };
        let f = extract_text("Hello there, friend.", &lex, &cfg);
        assert_eq!(f.names(), feature_names(&lex, &cfg));
        assert_eq!(f.to_vec().len(), feature_names(&lex, &cfg).len());
    }

    #[test]
    fn tiny_embedding_rejected() {
        let cfg = FeatureConfig {
            embedding_dim: 4,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }
}
