use std::collections::BTreeMap;

use crate::textfeat::lexicon::{LexiconSet, Phrase};
use crate::textfeat::tokenize::{tokenize, TokenizedText};

/// Normalization constant of the compound sentiment score.
pub const COMPOUND_ALPHA: f64 = 15.0;
/// Number of preceding tokens searched for a negator.
pub const NEGATION_WINDOW: usize = 3;

/// Percentage of words falling in each lexicon category.
pub fn category_proportions(tokens: &TokenizedText, lexicons: &LexiconSet) -> BTreeMap<String, f64> {
    let total = tokens.words.len();
    lexicons
        .categories
        .iter()
        .map(|(name, words)| {
            let value = if total == 0 {
                0.0
            } else {
                let hits = tokens.words.iter().filter(|w| words.contains(w)).count();
                100.0 * hits as f64 / total as f64
            };
            (name.clone(), value)
        })
        .collect()
}

pub fn is_negator(word: &str) -> bool {
    matches!(word, "not" | "no" | "never") || word.ends_with("n't")
}

/// Sum of word valences with negation flips, squashed into [-1, 1].
pub fn sentiment_compound(tokens: &TokenizedText, lexicons: &LexiconSet) -> f64 {
    let words = &tokens.words;
    let mut sum = 0.0;
    for (i, w) in words.iter().enumerate() {
        let Some(&v) = lexicons.valence.get(w) else {
            continue;
        };
        let from = i.saturating_sub(NEGATION_WINDOW);
        let negated = words[from..i].iter().any(|p| is_negator(p));
        sum += if negated { -v } else { v };
    }
    compound(sum)
}

pub fn compound(sum: f64) -> f64 {
    if sum == 0.0 {
        return 0.0;
    }
    (sum / (sum * sum + COMPOUND_ALPHA).sqrt()).clamp(-1.0, 1.0)
}

/// Flesch-Kincaid grade level; 0 for text without words.
pub fn readability(tokens: &TokenizedText) -> f64 {
    let words = tokens.words.len();
    let sentences = tokens.sentences.len();
    if words == 0 || sentences == 0 {
        return 0.0;
    }
    let words_f = words as f64;
    0.39 * (words_f / sentences as f64) + 11.8 * (tokens.total_syllables() as f64 / words_f) - 15.59
}

pub fn interrogative_ratio(text: &str) -> f64 {
    interrogative_ratio_of(&tokenize(text))
}

pub fn interrogative_ratio_of(tokens: &TokenizedText) -> f64 {
    let n = tokens.sentences.len();
    if n == 0 {
        return 0.0;
    }
    let q = tokens.sentences.iter().filter(|s| s.is_question()).count();
    q as f64 / n as f64
}

/// Signed politeness-marker count per sentence.
pub fn politeness_score(tokens: &TokenizedText, lexicons: &LexiconSet) -> f64 {
    let n = tokens.sentences.len();
    if n == 0 {
        return 0.0;
    }
    let mut total = 0i64;
    for strategy in &lexicons.politeness {
        let mut matches = 0i64;
        for sentence in &tokens.sentences {
            let words = tokens.sentence_words(sentence);
            let mut i = 0;
            while i < words.len() {
                match strategy.phrases.iter().find(|p| phrase_at(p, words, i)) {
                    Some(p) => {
                        matches += 1;
                        i += p.tokens.len();
                    }
                    None => i += 1,
                }
            }
        }
        total += i64::from(strategy.polarity) * matches;
    }
    total as f64 / n as f64
}

fn phrase_at(p: &Phrase, words: &[String], i: usize) -> bool {
    if p.sentence_start && i != 0 {
        return false;
    }
    words.len() - i >= p.tokens.len() && p.tokens.iter().zip(&words[i..]).all(|(a, b)| a == b)
}

/// Noisy-or over every toxic token occurrence.
pub fn toxicity_score(tokens: &TokenizedText, lexicons: &LexiconSet) -> f64 {
    let keep: f64 = tokens
        .words
        .iter()
        .filter_map(|w| lexicons.toxicity.get(w))
        .map(|w| 1.0 - w)
        .product();
    (1.0 - keep).clamp(0.0, 1.0)
}
