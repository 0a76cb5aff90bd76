use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Kind};
use crate::error::{Error, Result};
use crate::records::{read_records, write_records};

pub const DAY_SECONDS: f64 = 86_400.0;
pub const DEFAULT_NEWCOMER_DAYS: f64 = 30.0;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PostAggregates {
    pub avg_comment_desirability: f64,
    pub avg_comment_score: f64,
    pub newcomer_commenters: u32,
}

/// Desirability scores keyed by contribution id.
pub type ScoreMap = HashMap<String, u8>;

/// Comment-section aggregates. A commenter is a newcomer when any of their
/// comments in the section was written less than `newcomer_threshold_days`
/// after their account was created.
pub fn compute_post_aggregates(
    corpus: &Corpus,
    post_id: &str,
    scores: &ScoreMap,
    newcomer_threshold_days: f64,
) -> Result<PostAggregates> {
    let section = corpus.comment_section(post_id)?;
    if section.is_empty() {
        return Ok(PostAggregates::default());
    }
    let n = section.len() as f64;
    let mut desirability = 0.0;
    let mut score = 0.0;
    let mut newcomers: HashSet<&str> = HashSet::new();
    for c in &section {
        desirability += f64::from(*scores.get(&c.id).ok_or_else(|| Error::not_found("desirability score", &c.id))?);
        score += c.score as f64;
        let author = corpus.author_of(c);
        let age_days = (c.created_utc - author.created_utc) as f64 / DAY_SECONDS;
        if age_days < newcomer_threshold_days {
            newcomers.insert(author.id.as_str());
        }
    }
    Ok(PostAggregates {
        avg_comment_desirability: desirability / n,
        avg_comment_score: score / n,
        newcomer_commenters: newcomers.len() as u32,
    })
}

/// Every value the queue filters or sorts a post on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostMetrics {
    pub id: String,
    pub created_utc: i64,
    pub num_reports: u32,
    pub desirability: u8,
    pub score: i64,
    pub author_karma: u64,
    pub author_created_utc: i64,
    /// Account age when the post was made.
    pub author_age_days: f64,
    #[serde(flatten)]
    pub aggregates: PostAggregates,
}

pub type MetricTable = BTreeMap<String, PostMetrics>;

pub fn compute_metric_table(corpus: &Corpus, scores: &ScoreMap, newcomer_threshold_days: f64) -> Result<MetricTable> {
    corpus
        .of_kind(Kind::Post)
        .map(|p| {
            let author = corpus.author_of(p);
            let m = PostMetrics {
                id: p.id.clone(),
                created_utc: p.created_utc,
                num_reports: p.num_reports,
                desirability: *scores
                    .get(&p.id)
                    .ok_or_else(|| Error::not_found("desirability score", &p.id))?,
                score: p.score,
                author_karma: author.karma,
                author_created_utc: author.created_utc,
                author_age_days: (p.created_utc - author.created_utc) as f64 / DAY_SECONDS,
                aggregates: compute_post_aggregates(corpus, &p.id, scores, newcomer_threshold_days)?,
            };
            Ok((p.id.clone(), m))
        })
        .collect()
}

pub fn write_metric_table(path: &Path, table: &MetricTable) -> Result<()> {
    write_records(path, table.values())
}

pub fn read_metric_table(path: &Path) -> Result<MetricTable> {
    let rows: Vec<PostMetrics> = read_records(path)?;
    Ok(rows.into_iter().map(|m| (m.id.clone(), m)).collect())
}

/// The seven filterable and sortable post metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Desirability,
    Score,
    AuthorKarma,
    AuthorAgeDays,
    AvgCommentDesirability,
    AvgCommentScore,
    NewcomerCommenters,
}

impl Metric {
    pub const ALL: [Metric; 7] = [
        Metric::Desirability,
        Metric::Score,
        Metric::AuthorKarma,
        Metric::AuthorAgeDays,
        Metric::AvgCommentDesirability,
        Metric::AvgCommentScore,
        Metric::NewcomerCommenters,
    ];

    pub fn token(self) -> &'static str {
        match self {
            Metric::Desirability => "desirability",
            Metric::Score => "score",
            Metric::AuthorKarma => "author_karma",
            Metric::AuthorAgeDays => "author_age_days",
            Metric::AvgCommentDesirability => "avg_comment_desirability",
            Metric::AvgCommentScore => "avg_comment_score",
            Metric::NewcomerCommenters => "newcomer_commenters",
        }
    }

    /// Query parameter carrying this metric's minimum.
    pub fn filter_token(self) -> &'static str {
        match self {
            Metric::Desirability => "min_desirability",
            Metric::Score => "min_score",
            Metric::AuthorKarma => "min_author_karma",
            Metric::AuthorAgeDays => "min_author_age_days",
            Metric::AvgCommentDesirability => "min_avg_comment_desirability",
            Metric::AvgCommentScore => "min_avg_comment_score",
            Metric::NewcomerCommenters => "min_newcomer_commenters",
        }
    }

    pub fn step(self) -> f64 {
        match self {
            Metric::AuthorAgeDays => 0.1,
            _ => 1.0,
        }
    }

    pub fn value(self, m: &PostMetrics) -> f64 {
        match self {
            Metric::Desirability => f64::from(m.desirability),
            Metric::Score => m.score as f64,
            Metric::AuthorKarma => m.author_karma as f64,
            Metric::AuthorAgeDays => m.author_age_days,
            Metric::AvgCommentDesirability => m.aggregates.avg_comment_desirability,
            Metric::AvgCommentScore => m.aggregates.avg_comment_score,
            Metric::NewcomerCommenters => f64::from(m.aggregates.newcomer_commenters),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.token() == s || m.filter_token() == s)
            .ok_or_else(|| Error::UnknownToken {
                what: "metric",
                token: s.to_string(),
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Author, Contribution};

    const DAY: i64 = 86_400;

    fn corpus() -> Corpus {
        let t0 = 1_600_000_000;
        let authors = vec![
            Author::new("op", "op", 100, t0 - 400 * DAY),
            Author::new("n5", "n5", 1, t0 - 5 * DAY),
            Author::new("o40", "o40", 1, t0 - 40 * DAY),
            Author::new("n10", "n10", 1, t0 - 10 * DAY),
        ];
        let cs = vec![
            Contribution::post("p", "s", "t", "b", "op", t0, 5),
            Contribution::post("q", "s", "t", "b", "op", t0, 5),
            Contribution::comment("c1", "s", "x", "n5", t0, 1, "p", "p"),
            Contribution::comment("c2", "s", "x", "o40", t0, 2, "c1", "p"),
            Contribution::comment("c3", "s", "x", "n10", t0, 3, "p", "p"),
            Contribution::comment("c4", "s", "x", "n10", t0 + 1, 2, "p", "p"),
        ];
        Corpus::new(authors, cs).unwrap()
    }

    fn scores() -> ScoreMap {
        [("p", 50), ("q", 10), ("c1", 10), ("c2", 20), ("c3", 30), ("c4", 40)]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect()
    }

    #[test]
    fn aggregates() {
        let a = compute_post_aggregates(&corpus(), "p", &scores(), 30.0).unwrap();
        assert_eq!(a.newcomer_commenters, 2);
        assert_eq!(a.avg_comment_score, 2.0);
        assert_eq!(a.avg_comment_desirability, 25.0);
        let empty = compute_post_aggregates(&corpus(), "q", &scores(), 30.0).unwrap();
        assert_eq!(empty, PostAggregates::default());
    }

    #[test]
    fn table_covers_posts() {
        let t = compute_metric_table(&corpus(), &scores(), 30.0).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t["p"].author_age_days, 400.0);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("metrics.jsonl");
        write_metric_table(&path, &t).unwrap();
        assert_eq!(read_metric_table(&path).unwrap(), t);
    }

    #[test]
    fn metric_tokens_round_trip() {
        for m in Metric::ALL {
            assert_eq!(m.token().parse::<Metric>().unwrap(), m);
            assert_eq!(m.filter_token().parse::<Metric>().unwrap(), m);
        }
    }
}
