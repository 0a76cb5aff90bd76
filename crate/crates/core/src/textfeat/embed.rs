//! Signed feature hashing of word unigrams and bigrams.

use crate::textfeat::tokenize::TokenizedText;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;
const SIGN_SEED: u64 = 0x9e37_79b9_7f4a_7c15;

fn fnv1a(seed: u64, parts: &[&str]) -> u64 {
    let mut h = seed;
    for (i, p) in parts.iter().enumerate() {
        if i > 0 {
            h ^= u64::from(b' ');
            h = h.wrapping_mul(FNV_PRIME);
        }
        for b in p.bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(FNV_PRIME);
        }
    }
    h
}

fn add_gram(v: &mut [f64], parts: &[&str]) {
    let dim = v.len() as u64;
    let idx = (fnv1a(FNV_OFFSET, parts) % dim) as usize;
    let sign = if fnv1a(FNV_OFFSET ^ SIGN_SEED, parts) & 1 == 0 {
        1.0
    } else {
        -1.0
    };
    v[idx] += sign;
}

/// L2-normalized hashed n-gram vector; all zeros when there are no words.
pub fn embed_tokens(tokens: &TokenizedText, dim: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    let words: Vec<&str> = tokens.words.iter().map(String::as_str).collect();
    for w in &words {
        add_gram(&mut v, &[w]);
    }
    for pair in words.windows(2) {
        add_gram(&mut v, pair);
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    v
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}
