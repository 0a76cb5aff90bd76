use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

/// One sentence, as a half-open range into [`TokenizedText::words`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub start: usize,
    pub end: usize,
    /// Terminal punctuation run, empty for a trailing unterminated fragment.
    pub terminator: String,
}

impl Sentence {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn is_question(&self) -> bool {
        self.terminator.contains('?')
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedText {
    pub words: Vec<String>,
    pub sentences: Vec<Sentence>,
    pub syllable_counts: Vec<u32>,
}

impl TokenizedText {
    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn total_syllables(&self) -> u64 {
        self.syllable_counts.iter().map(|&s| u64::from(s)).sum()
    }

    pub fn sentence_words(&self, s: &Sentence) -> &[String] {
        &self.words[s.start..s.end]
    }
}

fn markdown_link() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\[([^\]]*)\]\([^)]*\)").expect("static regex"))
}

/// Replaces `[anchor](url)` with `anchor`.
pub fn strip_markdown_links(text: &str) -> std::borrow::Cow<'_, str> {
    markdown_link().replace_all(text, "$1")
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '\'' || c == '\u{2019}'
}

fn is_terminal(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

/// Splits text into lowercase word tokens and sentences.
///
/// A sentence ends at a run of `.`, `!` or `?` followed by whitespace or the
/// end of input. Segments without words are dropped, and trailing words with
/// no terminal punctuation form a final sentence.
pub fn tokenize(text: &str) -> TokenizedText {
    tokenize_with(text, true)
}

pub fn tokenize_with(text: &str, syllable_heuristic: bool) -> TokenizedText {
    let text = strip_markdown_links(text);
    let chars: Vec<char> = text.chars().collect();
    let mut words = Vec::new();
    let mut sentences = Vec::new();
    let mut sentence_start = 0usize;
    let mut word = String::new();

    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if is_word_char(c) {
            word.push(c);
            i += 1;
            continue;
        }
        flush_word(&mut word, &mut words);
        if is_terminal(c) {
            let run_start = i;
            while i < chars.len() && is_terminal(chars[i]) {
                i += 1;
            }
            let boundary = i == chars.len() || chars[i].is_whitespace();
            if boundary && words.len() > sentence_start {
                sentences.push(Sentence {
                    start: sentence_start,
                    end: words.len(),
                    terminator: chars[run_start..i].iter().collect(),
                });
                sentence_start = words.len();
            }
            continue;
        }
        i += 1;
    }
    flush_word(&mut word, &mut words);
    if words.len() > sentence_start {
        sentences.push(Sentence {
            start: sentence_start,
            end: words.len(),
            terminator: String::new(),
        });
    }

    let syllable_counts = words
        .iter()
        .map(|w| syllables(w, syllable_heuristic))
        .collect();
    TokenizedText {
        words,
        sentences,
        syllable_counts,
    }
}

fn flush_word(word: &mut String, words: &mut Vec<String>) {
    if word.is_empty() {
        return;
    }
    let normalized: String = word.replace('\u{2019}', "'").to_lowercase();
    let trimmed = normalized.trim_matches('\'');
    if !trimmed.is_empty() {
        words.push(trimmed.to_string());
    }
    word.clear();
}

/// Vowel-group syllable count. With the heuristic on, a trailing silent `e`
/// is dropped unless the word ends in `le`. Never less than one.
pub fn syllables(word: &str, heuristic: bool) -> u32 {
    let mut count = 0u32;
    let mut prev_vowel = false;
    for c in word.chars() {
        let v = matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y');
        if v && !prev_vowel {
            count += 1;
        }
        prev_vowel = v;
    }
    if heuristic && word.ends_with('e') && !word.ends_with("le") {
        count = count.saturating_sub(1);
    }
    count.max(1)
}
