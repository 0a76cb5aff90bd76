use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::actions::bestof::{BestOfThread, Period};
use crate::corpus::{Author, Contribution, Corpus, Kind};
use crate::error::{Error, Result};

pub const DEFAULT_FLAIRS: [&str; 3] = ["Topic Flair", "Format Flair", "Mod Pick Flair"];
pub const HIGHLIGHT_CAPACITY: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActionKind {
    Curate,
    Uncurate,
    Explain,
    Award,
    Flair,
    Highlight,
    Unhighlight,
    Upvote,
}

impl ActionKind {
    pub const ALL: [ActionKind; 8] = [
        ActionKind::Curate,
        ActionKind::Uncurate,
        ActionKind::Explain,
        ActionKind::Award,
        ActionKind::Flair,
        ActionKind::Highlight,
        ActionKind::Unhighlight,
        ActionKind::Upvote,
    ];

    pub fn token(self) -> &'static str {
        match self {
            ActionKind::Curate => "curate",
            ActionKind::Uncurate => "uncurate",
            ActionKind::Explain => "explain",
            ActionKind::Award => "award",
            ActionKind::Flair => "flair",
            ActionKind::Highlight => "highlight",
            ActionKind::Unhighlight => "unhighlight",
            ActionKind::Upvote => "upvote",
        }
    }
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for ActionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ActionKind::ALL
            .into_iter()
            .find(|a| a.token() == s)
            .ok_or_else(|| Error::UnknownToken {
                what: "action",
                token: s.to_string(),
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionRecord {
    pub ts: i64,
    pub moderator: String,
    pub action: ActionKind,
    pub target_id: String,
    #[serde(default)]
    pub payload: Value,
}

impl ActionRecord {
    pub fn new(ts: i64, moderator: impl Into<String>, action: ActionKind, target_id: impl Into<String>) -> Self {
        ActionRecord {
            ts,
            moderator: moderator.into(),
            action,
            target_id: target_id.into(),
            payload: Value::Null,
        }
    }

    pub fn with_payload(mut self, payload: Value) -> Self {
        self.payload = payload;
        self
    }

    pub fn flair(ts: i64, moderator: impl Into<String>, target_id: impl Into<String>, flair: &str) -> Self {
        ActionRecord::new(ts, moderator, ActionKind::Flair, target_id)
            .with_payload(serde_json::json!({ "flair": flair }))
    }

    pub fn explain(ts: i64, moderator: impl Into<String>, target_id: impl Into<String>, text: &str) -> Self {
        ActionRecord::new(ts, moderator, ActionKind::Explain, target_id)
            .with_payload(serde_json::json!({ "text": text }))
    }

    fn payload_str(&self, key: &str) -> Result<&str> {
        self.payload
            .get(key)
            .and_then(Value::as_str)
            .ok_or_else(|| Error::InvalidPayload(format!("{} needs a string `{key}`", self.action)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ActionConfig {
    pub period: Period,
    pub flairs: Vec<String>,
    pub highlight_capacity: usize,
}

impl Default for ActionConfig {
    fn default() -> Self {
        ActionConfig {
            period: Period::Weekly,
            flairs: DEFAULT_FLAIRS.iter().map(|s| s.to_string()).collect(),
            highlight_capacity: HIGHLIGHT_CAPACITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogWarning {
    /// 1-based record number in the log.
    pub position: usize,
    pub message: String,
}

/// What one accepted action did.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Applied {
    pub warning: Option<String>,
    pub reply: Option<Contribution>,
}

/// Everything the action log implies, built by folding records in order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ActionState {
    pub config: ActionConfig,
    pub threads: BTreeMap<i64, BestOfThread>,
    pub highlights: Vec<String>,
    pub awards: BTreeMap<String, u32>,
    pub flairs: BTreeMap<String, String>,
    pub votes: BTreeSet<(String, String)>,
    pub score_deltas: BTreeMap<String, i64>,
    pub replies: Vec<Contribution>,
    /// First action time per moderator, used to date their account when the
    /// corpus has none.
    pub moderators: BTreeMap<String, i64>,
    pub warnings: Vec<LogWarning>,
    pub applied: usize,
}

impl ActionState {
    pub fn new(config: ActionConfig) -> Self {
        ActionState {
            config,
            ..Default::default()
        }
    }

    fn lookup<'a>(&'a self, corpus: &'a Corpus, id: &str) -> Result<&'a Contribution> {
        corpus
            .get(id)
            .or_else(|| self.replies.iter().find(|r| r.id == id))
            .ok_or_else(|| Error::not_found("contribution", id))
    }

    fn require_post(c: &Contribution) -> Result<()> {
        if c.is_post() {
            Ok(())
        } else {
            Err(Error::WrongKind {
                id: c.id.clone(),
                expected: Kind::Post,
                actual: c.kind,
            })
        }
    }

    pub fn thread_at(&self, ts: i64) -> BestOfThread {
        let (start, _) = self.config.period.bounds(ts);
        self.threads
            .get(&start)
            .cloned()
            .unwrap_or_else(|| BestOfThread::new(self.config.period, ts))
    }

    pub fn award_count(&self, id: &str) -> u32 {
        self.awards.get(id).copied().unwrap_or(0)
    }

    pub fn flair_of(&self, id: &str) -> Option<&str> {
        self.flairs.get(id).map(String::as_str)
    }

    pub fn is_highlighted(&self, id: &str) -> bool {
        self.highlights.iter().any(|h| h == id)
    }

    pub fn is_curated(&self, id: &str, ts: i64) -> bool {
        let (start, _) = self.config.period.bounds(ts);
        self.threads.get(&start).is_some_and(|t| t.contains(id))
    }

    fn next_reply_id(&self, corpus: &Corpus) -> String {
        let mut n = self.replies.len() + 1;
        loop {
            let id = format!("t1_pq{n:05}");
            if corpus.get(&id).is_none() {
                return id;
            }
            n += 1;
        }
    }

    /// Applies one record. A rejected record leaves the state untouched.
    pub fn apply(&mut self, corpus: &Corpus, rec: &ActionRecord) -> Result<Applied> {
        if rec.moderator.trim().is_empty() {
            return Err(Error::InvalidPayload("moderator is empty".into()));
        }
        let target = self.lookup(corpus, &rec.target_id)?.clone();
        let mut applied = Applied::default();
        match rec.action {
            ActionKind::Curate => {
                let (start, _) = self.config.period.bounds(rec.ts);
                let period = self.config.period;
                self.threads
                    .entry(start)
                    .or_insert_with(|| BestOfThread::new(period, rec.ts))
                    .add(&target, rec.ts);
            }
            ActionKind::Uncurate => {
                let (start, _) = self.config.period.bounds(rec.ts);
                let removed = self.threads.get_mut(&start).is_some_and(|t| t.remove(&target.id));
                if !removed {
                    applied.warning = Some(format!("`{}` is not curated this period", target.id));
                }
            }
            ActionKind::Explain => {
                let text = rec.payload_str("text")?.trim();
                if text.is_empty() {
                    return Err(Error::InvalidPayload("explanation text is empty".into()));
                }
                if rec.ts <= 0 {
                    return Err(Error::InvalidPayload("explanation timestamp must be positive".into()));
                }
                if let Some(a) = corpus.author(&rec.moderator) {
                    if rec.ts < a.created_utc {
                        return Err(Error::InvalidPayload(format!(
                            "moderator account `{}` did not exist at {}",
                            a.id, rec.ts
                        )));
                    }
                }
                let reply = Contribution::comment(
                    self.next_reply_id(corpus),
                    target.subreddit.clone(),
                    text,
                    rec.moderator.clone(),
                    rec.ts,
                    1,
                    target.id.clone(),
                    target.root_id().to_string(),
                );
                self.replies.push(reply.clone());
                applied.reply = Some(reply);
            }
            ActionKind::Award => *self.awards.entry(target.id.clone()).or_default() += 1,
            ActionKind::Flair => {
                Self::require_post(&target)?;
                let flair = rec.payload_str("flair")?;
                let known = self.config.flairs.iter().find(|f| f.as_str() == flair);
                let Some(flair) = known else {
                    return Err(Error::InvalidFlair(flair.to_string()));
                };
                self.flairs.insert(target.id.clone(), flair.clone());
            }
            ActionKind::Highlight => {
                Self::require_post(&target)?;
                if self.is_highlighted(&target.id) {
                    return Err(Error::Duplicate(format!("highlight `{}`", target.id)));
                }
                if self.highlights.len() >= self.config.highlight_capacity {
                    return Err(Error::Capacity(self.config.highlight_capacity));
                }
                self.highlights.push(target.id.clone());
            }
            ActionKind::Unhighlight => {
                let Some(i) = self.highlights.iter().position(|h| *h == target.id) else {
                    return Err(Error::NotHighlighted(target.id.clone()));
                };
                self.highlights.remove(i);
            }
            ActionKind::Upvote => {
                let key = (rec.moderator.clone(), target.id.clone());
                if self.votes.contains(&key) {
                    return Err(Error::AlreadyVoted {
                        moderator: key.0,
                        target: key.1,
                    });
                }
                self.votes.insert(key);
                *self.score_deltas.entry(target.id.clone()).or_default() += 1;
            }
        }
        self.moderators.entry(rec.moderator.clone()).or_insert(rec.ts);
        self.applied += 1;
        if let Some(message) = &applied.warning {
            self.warnings.push(LogWarning {
                position: self.applied,
                message: message.clone(),
            });
        }
        Ok(applied)
    }

    /// The corpus as moderators see it: flairs and upvotes applied and
    /// explanation replies attached.
    pub fn effective_corpus(&self, base: &Corpus) -> Result<Corpus> {
        let adjust = |c: &Contribution| {
            let mut c = c.clone();
            if let Some(f) = self.flairs.get(&c.id) {
                c.flair = Some(f.clone());
            }
            if let Some(d) = self.score_deltas.get(&c.id) {
                c.score += d;
            }
            c
        };
        let mut contributions: Vec<Contribution> = base.contributions().iter().map(adjust).collect();
        contributions.extend(self.replies.iter().map(adjust));
        let mut authors = base.authors().to_vec();
        for r in &self.replies {
            if authors.iter().all(|a| a.id != r.author_id) {
                let since = self.moderators.get(&r.author_id).copied().unwrap_or(r.created_utc);
                authors.push(Author::new(r.author_id.clone(), r.author_id.clone(), 0, since.min(r.created_utc)));
            }
        }
        Corpus::new(authors, contributions)
    }
}

/// Folds `records` from an empty state. Any record that cannot be applied
/// halts the replay with its 1-based position.
pub fn replay_log(corpus: &Corpus, config: &ActionConfig, records: &[ActionRecord]) -> Result<ActionState> {
    let mut state = ActionState::new(config.clone());
    for (i, rec) in records.iter().enumerate() {
        state.apply(corpus, rec).map_err(|e| Error::CorruptLog {
            position: i + 1,
            message: e.to_string(),
        })?;
    }
    Ok(state)
}

/// Append-only action log, optionally backed by a line-delimited file.
#[derive(Debug, Clone, Default)]
pub struct ActionLog {
    path: Option<PathBuf>,
    records: Vec<ActionRecord>,
}

impl ActionLog {
    pub fn in_memory() -> Self {
        ActionLog::default()
    }

    /// Loads existing records from `path`; a missing file is an empty log.
    pub fn open(path: &Path) -> Result<Self> {
        let mut records = Vec::new();
        if path.exists() {
            let file = File::open(path).map_err(|e| Error::io(path, e))?;
            for (i, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(|e| Error::io(path, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                let rec = serde_json::from_str(&line).map_err(|e| Error::CorruptLog {
                    position: i + 1,
                    message: e.to_string(),
                })?;
                records.push(rec);
            }
        }
        Ok(ActionLog {
            path: Some(path.to_path_buf()),
            records,
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn records(&self) -> &[ActionRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn append(&mut self, rec: ActionRecord) -> Result<()> {
        if let Some(path) = &self.path {
            let line = serde_json::to_string(&rec)?;
            let mut f = OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .map_err(|e| Error::io(path, e))?;
            writeln!(f, "{line}").map_err(|e| Error::io(path, e))?;
            f.sync_data().map_err(|e| Error::io(path, e))?;
        }
        self.records.push(rec);
        Ok(())
    }
}
