use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::Contribution;
use crate::error::{Error, Result};
use crate::queue::metrics::{Metric, MetricTable, PostMetrics};

/// Minimum thresholds; an absent field does not filter.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_desirability: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_score: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_author_karma: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_author_age_days: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_avg_comment_desirability: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_avg_comment_score: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_newcomer_commenters: Option<u32>,
}

impl FilterSpec {
    pub fn is_empty(&self) -> bool {
        self.thresholds().is_empty()
    }

    pub fn thresholds(&self) -> Vec<(Metric, f64)> {
        let pairs = [
            (Metric::Desirability, self.min_desirability.map(f64::from)),
            (Metric::Score, self.min_score.map(|v| v as f64)),
            (Metric::AuthorKarma, self.min_author_karma.map(|v| v as f64)),
            (Metric::AuthorAgeDays, self.min_author_age_days),
            (Metric::AvgCommentDesirability, self.min_avg_comment_desirability),
            (Metric::AvgCommentScore, self.min_avg_comment_score),
            (Metric::NewcomerCommenters, self.min_newcomer_commenters.map(f64::from)),
        ];
        pairs
            .into_iter()
            .filter_map(|(m, v)| v.map(|v| (m, v)))
            .collect()
    }

    /// Sets one threshold from a wire value, enforcing the metric's range and
    /// integrality.
    pub fn set(&mut self, metric: Metric, value: f64) -> Result<()> {
        let bad = |why: &str| {
            Err(Error::InvalidQuery(format!(
                "{} = {value}: {why}",
                metric.filter_token()
            )))
        };
        if !value.is_finite() {
            return bad("not a finite number");
        }
        let integral = value.fract() == 0.0;
        match metric {
            Metric::Desirability => {
                if !integral || !(0.0..=100.0).contains(&value) {
                    return bad("must be a whole number in [0, 100]");
                }
                self.min_desirability = Some(value as u8);
            }
            Metric::Score => {
                if !integral || value.abs() > 1e15 {
                    return bad("must be a whole number");
                }
                self.min_score = Some(value as i64);
            }
            Metric::AuthorKarma => {
                if !integral || !(0.0..=1e15).contains(&value) {
                    return bad("must be a whole number >= 0");
                }
                self.min_author_karma = Some(value as u64);
            }
            Metric::AuthorAgeDays => {
                if value < 0.0 {
                    return bad("must be >= 0");
                }
                self.min_author_age_days = Some(value);
            }
            Metric::AvgCommentDesirability => {
                if !(0.0..=100.0).contains(&value) {
                    return bad("must lie in [0, 100]");
                }
                self.min_avg_comment_desirability = Some(value);
            }
            Metric::AvgCommentScore => self.min_avg_comment_score = Some(value),
            Metric::NewcomerCommenters => {
                if !integral || !(0.0..=f64::from(u32::MAX)).contains(&value) {
                    return bad("must be a whole number >= 0");
                }
                self.min_newcomer_commenters = Some(value as u32);
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let mut probe = FilterSpec::default();
        for (m, v) in self.thresholds() {
            probe.set(m, v)?;
        }
        Ok(())
    }

    /// Conjunction: every present threshold must be met.
    pub fn accepts(&self, m: &PostMetrics) -> bool {
        self.thresholds()
            .iter()
            .all(|&(metric, min)| metric.value(m) >= min)
    }
}

fn metrics_for<'m>(metrics: &'m MetricTable, c: &Contribution) -> Result<&'m PostMetrics> {
    metrics
        .get(&c.id)
        .ok_or_else(|| Error::not_found("post metrics", &c.id))
}

/// Posts meeting every threshold, in their original relative order.
pub fn filter_queue<'a>(
    posts: &[&'a Contribution],
    spec: &FilterSpec,
    metrics: &MetricTable,
) -> Result<Vec<&'a Contribution>> {
    let mut out = Vec::with_capacity(posts.len());
    for &p in posts {
        if spec.accepts(metrics_for(metrics, p)?) {
            out.push(p);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SortKey {
    #[default]
    Newest,
    Oldest,
    MostReported,
    MostDesirable,
    HighestScore,
    NewestAuthor,
    HighestKarma,
    HighestCommentDesirability,
    HighestCommentScore,
    MostNewcomerCommenters,
}

impl SortKey {
    pub const ALL: [SortKey; 10] = [
        SortKey::Newest,
        SortKey::Oldest,
        SortKey::MostReported,
        SortKey::MostDesirable,
        SortKey::HighestScore,
        SortKey::NewestAuthor,
        SortKey::HighestKarma,
        SortKey::HighestCommentDesirability,
        SortKey::HighestCommentScore,
        SortKey::MostNewcomerCommenters,
    ];

    pub fn token(self) -> &'static str {
        match self {
            SortKey::Newest => "newest",
            SortKey::Oldest => "oldest",
            SortKey::MostReported => "most_reported",
            SortKey::MostDesirable => "most_desirable",
            SortKey::HighestScore => "highest_score",
            SortKey::NewestAuthor => "newest_author",
            SortKey::HighestKarma => "highest_karma",
            SortKey::HighestCommentDesirability => "highest_comment_desirability",
            SortKey::HighestCommentScore => "highest_comment_score",
            SortKey::MostNewcomerCommenters => "most_newcomer_commenters",
        }
    }

    /// Primary ordering only; ties are settled by [`sort_queue`].
    fn primary(self, a: &PostMetrics, b: &PostMetrics) -> Ordering {
        match self {
            SortKey::Newest => b.created_utc.cmp(&a.created_utc),
            SortKey::Oldest => a.created_utc.cmp(&b.created_utc),
            SortKey::MostReported => b.num_reports.cmp(&a.num_reports),
            SortKey::MostDesirable => b.desirability.cmp(&a.desirability),
            SortKey::HighestScore => b.score.cmp(&a.score),
            SortKey::NewestAuthor => b.author_created_utc.cmp(&a.author_created_utc),
            SortKey::HighestKarma => b.author_karma.cmp(&a.author_karma),
            SortKey::HighestCommentDesirability => b
                .aggregates
                .avg_comment_desirability
                .total_cmp(&a.aggregates.avg_comment_desirability),
            SortKey::HighestCommentScore => b
                .aggregates
                .avg_comment_score
                .total_cmp(&a.aggregates.avg_comment_score),
            SortKey::MostNewcomerCommenters => b
                .aggregates
                .newcomer_commenters
                .cmp(&a.aggregates.newcomer_commenters),
        }
    }
}

impl fmt::Display for SortKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for SortKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SortKey::ALL
            .into_iter()
            .find(|k| k.token() == s)
            .ok_or_else(|| Error::UnknownToken {
                what: "sort key",
                token: s.to_string(),
            })
    }
}

/// Stable sort by `key`, ties broken by newest first and then id ascending.
pub fn sort_queue<'a>(
    posts: &[&'a Contribution],
    key: SortKey,
    metrics: &MetricTable,
) -> Result<Vec<&'a Contribution>> {
    let mut decorated = Vec::with_capacity(posts.len());
    for &p in posts {
        decorated.push((metrics_for(metrics, p)?, p));
    }
    decorated.sort_by(|(ma, a), (mb, b)| {
        key.primary(ma, mb)
            .then_with(|| b.created_utc.cmp(&a.created_utc))
            .then_with(|| a.id.cmp(&b.id))
    });
    Ok(decorated.into_iter().map(|(_, p)| p).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::queue::metrics::PostAggregates;

    fn metric(id: &str, created: i64, desirability: u8, karma: u64) -> PostMetrics {
        PostMetrics {
            id: id.into(),
            created_utc: created,
            num_reports: 0,
            desirability,
            score: 0,
            author_karma: karma,
            author_created_utc: 1,
            author_age_days: 10.0,
            aggregates: PostAggregates::default(),
        }
    }

    fn fixture() -> (Vec<Contribution>, MetricTable) {
        let rows = [("a", 10, 14, 20_000), ("b", 20, 61, 17_200), ("c", 30, 33, 50), ("d", 40, 70, 17_199)];
        let posts = rows
            .iter()
            .map(|(id, t, _, _)| Contribution::post(*id, "s", "t", "b", "u", *t, 0))
            .collect();
        let table = rows
            .iter()
            .map(|(id, t, d, k)| (id.to_string(), metric(id, *t, *d, *k)))
            .collect();
        (posts, table)
    }

    fn ids(v: &[&Contribution]) -> Vec<String> {
        v.iter().map(|c| c.id.clone()).collect()
    }

    #[test]
    fn desirability_and_karma_conjunction() {
        let (posts, table) = fixture();
        let refs: Vec<&Contribution> = posts.iter().collect();
        let spec = FilterSpec {
            min_desirability: Some(60),
            min_author_karma: Some(17_200),
            ..Default::default()
        };
        assert_eq!(ids(&filter_queue(&refs, &spec, &table).unwrap()), ["b"]);
        assert_eq!(ids(&filter_queue(&refs, &FilterSpec::default(), &table).unwrap()), ["a", "b", "c", "d"]);
    }

    #[test]
    fn sorts() {
        let (posts, table) = fixture();
        let refs: Vec<&Contribution> = posts[..3].iter().collect();
        let by_d = sort_queue(&refs, SortKey::MostDesirable, &table).unwrap();
        assert_eq!(ids(&by_d), ["b", "c", "a"]);
        let newest = ids(&sort_queue(&refs, SortKey::Newest, &table).unwrap());
        let mut oldest = ids(&sort_queue(&refs, SortKey::Oldest, &table).unwrap());
        oldest.reverse();
        assert_eq!(newest, oldest);
    }

    #[test]
    fn threshold_validation() {
        let mut s = FilterSpec::default();
        assert!(s.set(Metric::Desirability, 101.0).is_err());
        assert!(s.set(Metric::Desirability, 70.5).is_err());
        assert!(s.set(Metric::AuthorAgeDays, 2.5).is_ok());
        assert!(s.set(Metric::AuthorKarma, -1.0).is_err());
        assert!(s.set(Metric::Score, -3.0).is_ok());
        assert_eq!(s.thresholds().len(), 2);
    }

    #[test]
    fn sort_tokens() {
        assert_eq!(SortKey::ALL.len(), 10);
        for k in SortKey::ALL {
            assert_eq!(k.token().parse::<SortKey>().unwrap(), k);
        }
        assert!("hottest".parse::<SortKey>().is_err());
    }
}
