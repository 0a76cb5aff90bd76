//! Data model for one community: authors, posts and comments, plus the
//! referential indexes the rest of the engine reads from.
//!
//! A [`Corpus`] is an immutable snapshot. Contributions and authors are kept
//! sorted by id so that two corpora built from the same records in any order
//! compare equal.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::records::{read_records, write_records};

pub const CONTRIBUTIONS_FILE: &str = "contributions.jsonl";
pub const AUTHORS_FILE: &str = "authors.jsonl";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Post,
    Comment,
}

impl Kind {
    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Post => "post",
            Kind::Comment => "comment",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Kind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "post" => Ok(Kind::Post),
            "comment" => Ok(Kind::Comment),
            other => Err(Error::UnknownToken {
                what: "kind",
                token: other.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Author {
    pub id: String,
    pub name: String,
    pub karma: u64,
    pub created_utc: i64,
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

impl Author {
    pub fn new(id: impl Into<String>, name: impl Into<String>, karma: u64, created_utc: i64) -> Self {
        Author {
            id: id.into(),
            name: name.into(),
            karma,
            created_utc,
            extra: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contribution {
    pub id: String,
    pub kind: Kind,
    pub subreddit: String,
    pub title: Option<String>,
    pub body: String,
    pub author_id: String,
    pub created_utc: i64,
    pub score: i64,
    pub parent_id: Option<String>,
    pub link_id: Option<String>,
    pub flair: Option<String>,
    pub num_reports: u32,
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

impl Contribution {
    pub fn post(
        id: impl Into<String>,
        subreddit: impl Into<String>,
        title: impl Into<String>,
        body: impl Into<String>,
        author_id: impl Into<String>,
        created_utc: i64,
        score: i64,
    ) -> Self {
        Contribution {
            id: id.into(),
            kind: Kind::Post,
            subreddit: subreddit.into(),
            title: Some(title.into()),
            body: body.into(),
            author_id: author_id.into(),
            created_utc,
            score,
            parent_id: None,
            link_id: None,
            flair: None,
            num_reports: 0,
            extra: BTreeMap::new(),
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub fn comment(
        id: impl Into<String>,
        subreddit: impl Into<String>,
        body: impl Into<String>,
        author_id: impl Into<String>,
        created_utc: i64,
        score: i64,
        parent_id: impl Into<String>,
        link_id: impl Into<String>,
    ) -> Self {
        Contribution {
            id: id.into(),
            kind: Kind::Comment,
            subreddit: subreddit.into(),
            title: None,
            body: body.into(),
            author_id: author_id.into(),
            created_utc,
            score,
            parent_id: Some(parent_id.into()),
            link_id: Some(link_id.into()),
            flair: None,
            num_reports: 0,
            extra: BTreeMap::new(),
        }
    }

    pub fn is_post(&self) -> bool {
        self.kind == Kind::Post
    }

    /// Root post id: the post itself, or `link_id` for comments.
    pub fn root_id(&self) -> &str {
        match self.kind {
            Kind::Post => &self.id,
            Kind::Comment => self.link_id.as_deref().unwrap_or(&self.id),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Corpus {
    authors: Vec<Author>,
    contributions: Vec<Contribution>,
    author_index: HashMap<String, usize>,
    index: HashMap<String, usize>,
    // post id -> comment indexes, created_utc ascending then id
    sections: HashMap<String, Vec<usize>>,
    by_author: HashMap<String, Vec<usize>>,
}

impl PartialEq for Corpus {
    fn eq(&self, other: &Self) -> bool {
        self.authors == other.authors && self.contributions == other.contributions
    }
}

impl Corpus {
    /// Validates the records and builds every index.
    pub fn new(mut authors: Vec<Author>, mut contributions: Vec<Contribution>) -> Result<Self> {
        authors.sort_by(|a, b| a.id.cmp(&b.id));
        contributions.sort_by(|a, b| a.id.cmp(&b.id));
        let mut problems = Vec::new();

        let mut author_index = HashMap::with_capacity(authors.len());
        for (i, a) in authors.iter().enumerate() {
            if author_index.insert(a.id.clone(), i).is_some() {
                problems.push(format!("duplicate author id {}", a.id));
            }
            if a.created_utc <= 0 {
                problems.push(format!("author {} has created_utc {}", a.id, a.created_utc));
            }
        }

        let mut index = HashMap::with_capacity(contributions.len());
        for (i, c) in contributions.iter().enumerate() {
            if index.insert(c.id.clone(), i).is_some() {
                problems.push(format!("duplicate contribution id {}", c.id));
            }
        }

        for c in &contributions {
            match author_index.get(&c.author_id) {
                None => problems.push(format!("{}: dangling author_id {}", c.id, c.author_id)),
                Some(&ai) if c.created_utc < authors[ai].created_utc => problems.push(format!(
                    "{}: created before its author {}",
                    c.id, c.author_id
                )),
                Some(_) => {}
            }
            match c.kind {
                Kind::Post => {
                    if let Some(p) = &c.parent_id {
                        problems.push(format!("{}: post has parent_id {p}", c.id));
                    }
                    if let Some(l) = c.link_id.as_ref().filter(|l| **l != c.id) {
                        problems.push(format!("{}: post has link_id {l}", c.id));
                    }
                }
                Kind::Comment => {
                    if c.title.is_some() {
                        problems.push(format!("{}: comment has a title", c.id));
                    }
                    match &c.parent_id {
                        None => problems.push(format!("{}: comment without parent_id", c.id)),
                        Some(p) if !index.contains_key(p) => {
                            problems.push(format!("{}: dangling parent_id {p}", c.id))
                        }
                        Some(_) => {}
                    }
                    match &c.link_id {
                        None => problems.push(format!("{}: comment without link_id", c.id)),
                        Some(l) => match index.get(l) {
                            None => problems.push(format!("{}: dangling link_id {l}", c.id)),
                            Some(&li) if contributions[li].kind != Kind::Post => problems
                                .push(format!("{}: link_id {l} is not a post", c.id)),
                            Some(_) => {}
                        },
                    }
                }
            }
        }

        if problems.is_empty() {
            // parent chains must terminate at the comment's link_id
            for c in contributions.iter().filter(|c| c.kind == Kind::Comment) {
                if let Err(p) = check_chain(c, &contributions, &index) {
                    problems.push(p);
                }
            }
        }
        if !problems.is_empty() {
            return Err(Error::Integrity(problems));
        }

        let mut sections: HashMap<String, Vec<usize>> = HashMap::new();
        let mut by_author: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, c) in contributions.iter().enumerate() {
            by_author.entry(c.author_id.clone()).or_default().push(i);
            match c.kind {
                Kind::Post => {
                    sections.entry(c.id.clone()).or_default();
                }
                Kind::Comment => sections.entry(c.root_id().to_string()).or_default().push(i),
            }
        }
        for list in sections.values_mut().chain(by_author.values_mut()) {
            list.sort_by(|&a, &b| {
                let (ca, cb) = (&contributions[a], &contributions[b]);
                ca.created_utc.cmp(&cb.created_utc).then_with(|| ca.id.cmp(&cb.id))
            });
        }

        Ok(Corpus {
            authors,
            contributions,
            author_index,
            index,
            sections,
            by_author,
        })
    }

    pub fn empty() -> Self {
        Corpus::default()
    }

    /// Reads both line-delimited files and validates them.
    pub fn ingest(contributions_path: &Path, authors_path: &Path) -> Result<Self> {
        let authors = read_records(authors_path)?;
        let contributions = read_records(contributions_path)?;
        Corpus::new(authors, contributions)
    }

    /// Reads `contributions.jsonl` and `authors.jsonl` from a directory.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        Corpus::ingest(&dir.join(CONTRIBUTIONS_FILE), &dir.join(AUTHORS_FILE))
    }

    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_records(&dir.join(CONTRIBUTIONS_FILE), &self.contributions)?;
        write_records(&dir.join(AUTHORS_FILE), &self.authors)
    }

    pub fn authors(&self) -> &[Author] {
        &self.authors
    }

    pub fn contributions(&self) -> &[Contribution] {
        &self.contributions
    }

    pub fn posts(&self) -> impl Iterator<Item = &Contribution> {
        self.contributions.iter().filter(|c| c.kind == Kind::Post)
    }

    pub fn comments(&self) -> impl Iterator<Item = &Contribution> {
        self.contributions.iter().filter(|c| c.kind == Kind::Comment)
    }

    pub fn of_kind(&self, kind: Kind) -> impl Iterator<Item = &Contribution> {
        self.contributions.iter().filter(move |c| c.kind == kind)
    }

    pub fn count(&self, kind: Kind) -> usize {
        self.of_kind(kind).count()
    }

    pub fn get(&self, id: &str) -> Option<&Contribution> {
        self.index.get(id).map(|&i| &self.contributions[i])
    }

    pub fn contribution(&self, id: &str) -> Result<&Contribution> {
        self.get(id).ok_or_else(|| Error::not_found("contribution", id))
    }

    pub fn author(&self, id: &str) -> Option<&Author> {
        self.author_index.get(id).map(|&i| &self.authors[i])
    }

    pub fn author_of(&self, c: &Contribution) -> &Author {
        // resolved at construction
        &self.authors[self.author_index[&c.author_id]]
    }

    pub fn by_author(&self, author_id: &str) -> Vec<&Contribution> {
        self.by_author
            .get(author_id)
            .map(|v| v.iter().map(|&i| &self.contributions[i]).collect())
            .unwrap_or_default()
    }

    /// Every comment under `post_id`, oldest first (ties by id).
    pub fn comment_section(&self, post_id: &str) -> Result<Vec<&Contribution>> {
        let post = self.contribution(post_id)?;
        if post.kind != Kind::Post {
            return Err(Error::WrongKind {
                id: post_id.to_string(),
                expected: Kind::Post,
                actual: post.kind,
            });
        }
        Ok(self.sections[post_id]
            .iter()
            .map(|&i| &self.contributions[i])
            .collect())
    }

    /// Comment section in thread order: depth-first, siblings oldest first.
    /// Each entry carries its nesting depth (top-level comments are depth 1).
    pub fn thread(&self, post_id: &str) -> Result<Vec<(usize, &Contribution)>> {
        let section = self.comment_section(post_id)?;
        let mut children: HashMap<&str, Vec<&Contribution>> = HashMap::new();
        for c in &section {
            children
                .entry(c.parent_id.as_deref().unwrap_or(post_id))
                .or_default()
                .push(c);
        }
        let mut out = Vec::with_capacity(section.len());
        let mut stack: Vec<(usize, &Contribution)> = children
            .get(post_id)
            .map(|v| v.iter().rev().map(|c| (1, *c)).collect())
            .unwrap_or_default();
        while let Some((depth, c)) = stack.pop() {
            out.push((depth, c));
            if let Some(kids) = children.get(c.id.as_str()) {
                stack.extend(kids.iter().rev().map(|k| (depth + 1, *k)));
            }
        }
        Ok(out)
    }

    /// New snapshot with `extra` contributions (and authors) added.
    pub fn extended(&self, authors: &[Author], contributions: &[Contribution]) -> Result<Corpus> {
        let mut all_authors = self.authors.clone();
        let known: HashSet<&str> = self.authors.iter().map(|a| a.id.as_str()).collect();
        all_authors.extend(authors.iter().filter(|a| !known.contains(a.id.as_str())).cloned());
        let mut all = self.contributions.clone();
        all.extend(contributions.iter().cloned());
        Corpus::new(all_authors, all)
    }
}

fn check_chain(
    c: &Contribution,
    all: &[Contribution],
    index: &HashMap<String, usize>,
) -> std::result::Result<(), String> {
    let root = c.link_id.as_deref().unwrap_or_default();
    let mut seen = HashSet::new();
    let mut cur = c;
    loop {
        if !seen.insert(cur.id.as_str()) {
            return Err(format!("{}: parent chain has a cycle", c.id));
        }
        match cur.kind {
            Kind::Post => {
                return if cur.id == root {
                    Ok(())
                } else {
                    Err(format!("{}: parent chain ends at {} not {root}", c.id, cur.id))
                };
            }
            Kind::Comment => {
                if cur.link_id.as_deref() != Some(root) {
                    return Err(format!("{}: ancestor {} belongs to another post", c.id, cur.id));
                }
                let parent = cur.parent_id.as_deref().unwrap_or_default();
                cur = &all[index[parent]];
            }
        }
    }
}
