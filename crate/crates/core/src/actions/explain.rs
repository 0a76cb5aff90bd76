use std::collections::HashSet;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::Kind;
use crate::error::{Error, Result};
use crate::records::read_records;

/// Replaceable seed list.
pub const DEFAULT_REASONS: [&str; 11] = [
    "creative",
    "helpful",
    "funny",
    "informative",
    "high effort",
    "well formatted",
    "relevant",
    "welcoming",
    "respectful",
    "well sourced",
    "thoughtful",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReasonOrigin {
    Default,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplainReason {
    pub id: String,
    pub label: String,
    pub origin: ReasonOrigin,
}

fn join_reasons(reasons: &[String]) -> String {
    match reasons {
        [] => String::new(),
        [one] => one.clone(),
        [a, b] => format!("{a} and {b}"),
        [init @ .., last] => format!("{}, and {last}", init.join(", ")),
    }
}

/// "The moderators like this post because it is creative, helpful, and
/// supportive." Selected reasons come first, then custom ones; labels are
/// lowercased and repeated labels kept once.
pub fn build_explanation(kind: Kind, selected: &[ExplainReason], custom: &[String]) -> Result<String> {
    let mut seen = HashSet::new();
    let reasons: Vec<String> = selected
        .iter()
        .map(|r| r.label.as_str())
        .chain(custom.iter().map(String::as_str))
        .map(|l| l.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase())
        .filter(|l| !l.is_empty() && seen.insert(l.clone()))
        .collect();
    if reasons.is_empty() {
        return Err(Error::EmptyReasons);
    }
    Ok(format!(
        "The moderators like this {} because it is {}.",
        kind.as_str(),
        join_reasons(&reasons)
    ))
}

fn slug(label: &str) -> String {
    let mut out = String::new();
    for word in label.split(|c: char| !c.is_alphanumeric()).filter(|w| !w.is_empty()) {
        if !out.is_empty() {
            out.push('_');
        }
        out.push_str(&word.to_lowercase());
    }
    out
}

/// Default reasons followed by custom ones in the order they were added.
/// Custom reasons are appended to `path` when one is set.
#[derive(Debug, Clone)]
pub struct ReasonStore {
    reasons: Vec<ExplainReason>,
    path: Option<PathBuf>,
}

impl ReasonStore {
    pub fn in_memory<S: AsRef<str>>(defaults: &[S]) -> Result<Self> {
        let mut store = ReasonStore {
            reasons: Vec::new(),
            path: None,
        };
        for d in defaults {
            store.insert(d.as_ref(), ReasonOrigin::Default)?;
        }
        Ok(store)
    }

    pub fn with_defaults() -> Self {
        ReasonStore::in_memory(&DEFAULT_REASONS).expect("default reasons are distinct")
    }

    /// Opens the custom-reason file at `path`, creating nothing until the
    /// first custom reason is added.
    pub fn open<S: AsRef<str>>(defaults: &[S], path: &Path) -> Result<Self> {
        let mut store = ReasonStore::in_memory(defaults)?;
        if path.exists() {
            let stored: Vec<ExplainReason> = read_records(path)?;
            for r in stored {
                store.insert(&r.label, ReasonOrigin::Custom)?;
            }
        }
        store.path = Some(path.to_path_buf());
        Ok(store)
    }

    pub fn list(&self) -> &[ExplainReason] {
        &self.reasons
    }

    pub fn find(&self, id_or_label: &str) -> Option<&ExplainReason> {
        let needle = id_or_label.trim().to_lowercase();
        self.reasons
            .iter()
            .find(|r| r.id == needle || r.label.to_lowercase() == needle)
    }

    fn insert(&mut self, label: &str, origin: ReasonOrigin) -> Result<ExplainReason> {
        let label = label.split_whitespace().collect::<Vec<_>>().join(" ");
        if label.is_empty() {
            return Err(Error::InvalidPayload("reason label is empty".into()));
        }
        let lower = label.to_lowercase();
        if self.reasons.iter().any(|r| r.label.to_lowercase() == lower) {
            return Err(Error::Duplicate(format!("reason `{label}`")));
        }
        let base = slug(&label);
        let base = if base.is_empty() { "reason".to_string() } else { base };
        let mut id = base.clone();
        let mut n = 2;
        while self.reasons.iter().any(|r| r.id == id) {
            id = format!("{base}_{n}");
            n += 1;
        }
        let reason = ExplainReason { id, label, origin };
        self.reasons.push(reason.clone());
        Ok(reason)
    }

    pub fn add_custom(&mut self, label: &str) -> Result<ExplainReason> {
        let reason = self.insert(label, ReasonOrigin::Custom)?;
        if let Some(path) = &self.path {
            let persisted = serde_json::to_string(&reason)
                .map_err(Error::from)
                .and_then(|line| {
                    let mut f = OpenOptions::new()
                        .create(true)
                        .append(true)
                        .open(path)
                        .map_err(|e| Error::io(path, e))?;
                    writeln!(f, "{line}").map_err(|e| Error::io(path, e))?;
                    f.sync_data().map_err(|e| Error::io(path, e))
                });
            if let Err(e) = persisted {
                self.reasons.pop();
                return Err(e);
            }
        }
        Ok(reason)
    }
}
