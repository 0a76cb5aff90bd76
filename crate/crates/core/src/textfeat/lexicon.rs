//! File-supplied lexicons. Every file is tab-separated, one entry per line;
//! blank lines and lines starting with `#` are ignored. A trailing `*` on a
//! word makes it a prefix match.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use crate::error::{Error, Result};
use crate::textfeat::tokenize::tokenize_with;

pub const CATEGORIES_FILE: &str = "categories.tsv";
pub const VALENCE_FILE: &str = "valence.tsv";
pub const TOXICITY_FILE: &str = "toxicity.tsv";
pub const POLITENESS_FILE: &str = "politeness.tsv";

const DEFAULT_CATEGORIES: &str = include_str!("../../lexicons/categories.tsv");
const DEFAULT_VALENCE: &str = include_str!("../../lexicons/valence.tsv");
const DEFAULT_TOXICITY: &str = include_str!("../../lexicons/toxicity.tsv");
const DEFAULT_POLITENESS: &str = include_str!("../../lexicons/politeness.tsv");

/// Exact words plus `prefix*` stems, each mapped to a value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WordMap<V> {
    exact: HashMap<String, V>,
    prefixes: Vec<(String, V)>,
}

impl<V: Copy> WordMap<V> {
    pub fn insert(&mut self, entry: &str, value: V) {
        match entry.strip_suffix('*') {
            Some(stem) => self.prefixes.push((stem.to_string(), value)),
            None => {
                self.exact.insert(entry.to_string(), value);
            }
        }
    }

    pub fn get(&self, word: &str) -> Option<V> {
        if let Some(v) = self.exact.get(word) {
            return Some(*v);
        }
        self.prefixes
            .iter()
            .find(|(stem, _)| word.starts_with(stem.as_str()))
            .map(|(_, v)| *v)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.get(word).is_some()
    }

    pub fn len(&self) -> usize {
        self.exact.len() + self.prefixes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Phrase {
    pub tokens: Vec<String>,
    /// Only matches at the first word of a sentence (written `^phrase`).
    pub sentence_start: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolitenessStrategy {
    pub name: String,
    pub polarity: i8,
    pub phrases: Vec<Phrase>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LexiconSet {
    pub categories: BTreeMap<String, WordMap<()>>,
    pub valence: HashMap<String, f64>,
    pub toxicity: WordMap<f64>,
    pub politeness: Vec<PolitenessStrategy>,
}

impl LexiconSet {
    /// The small open lexicon shipped with the crate.
    pub fn builtin() -> Self {
        LexiconSet::parse(
            DEFAULT_CATEGORIES,
            DEFAULT_VALENCE,
            DEFAULT_TOXICITY,
            DEFAULT_POLITENESS,
        )
        .expect("built-in lexicons are valid")
    }

    /// Loads the four lexicon files from `dir`.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let read = |name: &str| {
            let p = dir.join(name);
            std::fs::read_to_string(&p).map_err(|e| Error::io(p, e))
        };
        LexiconSet::parse(
            &read(CATEGORIES_FILE)?,
            &read(VALENCE_FILE)?,
            &read(TOXICITY_FILE)?,
            &read(POLITENESS_FILE)?,
        )
    }

    pub fn parse(categories: &str, valence: &str, toxicity: &str, politeness: &str) -> Result<Self> {
        let mut set = LexiconSet::default();

        for (line, cols) in rows(categories) {
            let [cat, word] = expect_cols::<2>(CATEGORIES_FILE, line, &cols, ["category", "word"])?;
            set.categories
                .entry(cat.to_string())
                .or_default()
                .insert(&word.to_lowercase(), ());
        }

        for (line, cols) in rows(valence) {
            let [word, score] = expect_cols::<2>(VALENCE_FILE, line, &cols, ["word", "score"])?;
            let v = parse_num(VALENCE_FILE, line, "score", score)?;
            if !(-4.0..=4.0).contains(&v) {
                return Err(bad(VALENCE_FILE, line, "score", "valence must lie in [-4, 4]"));
            }
            set.valence.insert(word.to_lowercase(), v);
        }

        for (line, cols) in rows(toxicity) {
            let [word, weight] = expect_cols::<2>(TOXICITY_FILE, line, &cols, ["word", "weight"])?;
            let w = parse_num(TOXICITY_FILE, line, "weight", weight)?;
            if !(w > 0.0 && w <= 1.0) {
                return Err(bad(TOXICITY_FILE, line, "weight", "weight must lie in (0, 1]"));
            }
            set.toxicity.insert(&word.to_lowercase(), w);
        }

        let mut strategies: Vec<PolitenessStrategy> = Vec::new();
        for (line, cols) in rows(politeness) {
            let [name, pol, phrase] = expect_cols::<3>(
                POLITENESS_FILE,
                line,
                &cols,
                ["strategy", "polarity", "phrase"],
            )?;
            let polarity: i8 = match pol.trim() {
                "+1" | "1" => 1,
                "-1" => -1,
                _ => return Err(bad(POLITENESS_FILE, line, "polarity", "polarity must be +1 or -1")),
            };
            let (sentence_start, text) = match phrase.strip_prefix('^') {
                Some(rest) => (true, rest),
                None => (false, phrase),
            };
            let tokens = tokenize_with(text, false).words;
            if tokens.is_empty() {
                return Err(bad(POLITENESS_FILE, line, "phrase", "phrase has no words"));
            }
            let p = Phrase {
                tokens,
                sentence_start,
            };
            match strategies.iter_mut().find(|s| s.name == name) {
                Some(s) if s.polarity != polarity => {
                    return Err(bad(POLITENESS_FILE, line, "polarity", "conflicts with earlier entry"))
                }
                Some(s) => s.phrases.push(p),
                None => strategies.push(PolitenessStrategy {
                    name: name.to_string(),
                    polarity,
                    phrases: vec![p],
                }),
            }
        }
        // longest phrase first so one position counts once per strategy
        for s in &mut strategies {
            s.phrases.sort_by_key(|p| std::cmp::Reverse(p.tokens.len()));
        }
        set.politeness = strategies;
        Ok(set)
    }

    pub fn category_names(&self) -> impl Iterator<Item = &str> {
        self.categories.keys().map(String::as_str)
    }
}

fn rows(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let t = l.trim_end_matches('\r');
        if t.trim().is_empty() || t.starts_with('#') {
            None
        } else {
            Some((i + 1, t.split('\t').map(str::trim).collect()))
        }
    })
}

fn expect_cols<'a, const N: usize>(
    file: &str,
    line: usize,
    cols: &[&'a str],
    names: [&str; N],
) -> Result<[&'a str; N]> {
    if cols.len() != N {
        let field = names.get(cols.len()).unwrap_or(&names[N - 1]);
        return Err(bad(file, line, field, &format!("expected {N} tab-separated columns")));
    }
    let mut out = [""; N];
    for (i, c) in cols.iter().enumerate() {
        if c.is_empty() {
            return Err(bad(file, line, names[i], "empty column"));
        }
        out[i] = c;
    }
    Ok(out)
}

fn parse_num(file: &str, line: usize, field: &str, s: &str) -> Result<f64> {
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| bad(file, line, field, "not a number"))
}

fn bad(file: &str, line: usize, field: &str, message: &str) -> Error {
    Error::MalformedRecord {
        file: file.to_string(),
        line,
        field: field.to_string(),
        message: message.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_has_eight_categories() {
        let l = LexiconSet::builtin();
        let names: Vec<_> = l.category_names().collect();
        assert!(names.len() >= 8, "{names:?}");
        for want in [
            "affect",
            "positive_emotion",
            "negative_emotion",
            "cognitive_processes",
            "function_words",
            "social",
            "certainty",
            "informal",
        ] {
            assert!(names.contains(&want), "missing {want}");
        }
        assert!(l.valence.values().all(|v| (-4.0..=4.0).contains(v)));
        assert_eq!(l.politeness.len(), 8);
    }

    #[test]
    fn prefix_entries() {
        let mut m = WordMap::default();
        m.insert("happi*", 1.0);
        m.insert("happy", 2.0);
        assert_eq!(m.get("happiness"), Some(1.0));
        assert_eq!(m.get("happy"), Some(2.0));
        assert_eq!(m.get("hap"), None);
    }

    #[test]
    fn rejects_out_of_range() {
        let e = LexiconSet::parse("", "good\t4.5\n", "", "").unwrap_err();
        assert!(matches!(e, Error::MalformedRecord { line: 1, ref field, .. } if field == "score"));
        let e = LexiconSet::parse("", "", "idiot\t0\n", "").unwrap_err();
        assert!(matches!(e, Error::MalformedRecord { ref field, .. } if field == "weight"));
        let e = LexiconSet::parse("", "", "", "x\t2\thello\n").unwrap_err();
        assert!(matches!(e, Error::MalformedRecord { ref field, .. } if field == "polarity"));
        let e = LexiconSet::parse("affect\n", "", "", "").unwrap_err();
        assert!(matches!(e, Error::MalformedRecord { ref field, .. } if field == "word"));
    }

    #[test]
    fn loads_from_directory() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join(CATEGORIES_FILE), "# comment\nfoo\tbar\n").unwrap();
        std::fs::write(dir.path().join(VALENCE_FILE), "bar\t1.0\n").unwrap();
        std::fs::write(dir.path().join(TOXICITY_FILE), "").unwrap();
        std::fs::write(dir.path().join(POLITENESS_FILE), "greeting\t+1\t^hi\n").unwrap();
        let l = LexiconSet::load_dir(dir.path()).unwrap();
        assert!(l.categories["foo"].contains("bar"));
        assert!(l.politeness[0].phrases[0].sentence_start);
    }
}
