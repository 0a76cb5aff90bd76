use std::fmt::{self, Write as _};
use std::str::FromStr;

use chrono::{DateTime, Datelike, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use crate::corpus::Contribution;
use crate::error::{Error, Result};

pub const PREVIEW_CHARS: usize = 200;
const PLACEHOLDER: &str = "\u{2014}";
const ELLIPSIS: char = '\u{2026}';
const DAY: i64 = 86_400;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Period {
    #[default]
    Weekly,
    Monthly,
}

impl Period {
    pub fn token(self) -> &'static str {
        match self {
            Period::Weekly => "weekly",
            Period::Monthly => "monthly",
        }
    }

    pub fn default_title(self) -> &'static str {
        match self {
            Period::Weekly => "Best of the week",
            Period::Monthly => "Best of the month",
        }
    }

    /// `[start, end)` of the period holding `ts`. Weeks start Monday 00:00 UTC.
    pub fn bounds(self, ts: i64) -> (i64, i64) {
        match self {
            Period::Weekly => {
                let days = ts.div_euclid(DAY);
                // 1970-01-01 was a Thursday
                let monday = days - (days + 3).rem_euclid(7);
                (monday * DAY, (monday + 7) * DAY)
            }
            Period::Monthly => {
                let date = date_of(ts);
                let first = NaiveDate::from_ymd_opt(date.year(), date.month(), 1).expect("valid month");
                let next = if date.month() == 12 {
                    NaiveDate::from_ymd_opt(date.year() + 1, 1, 1)
                } else {
                    NaiveDate::from_ymd_opt(date.year(), date.month() + 1, 1)
                }
                .expect("valid month");
                (midnight(first), midnight(next))
            }
        }
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Period {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "weekly" => Ok(Period::Weekly),
            "monthly" => Ok(Period::Monthly),
            _ => Err(Error::UnknownToken {
                what: "period",
                token: s.to_string(),
            }),
        }
    }
}

fn date_of(ts: i64) -> NaiveDate {
    DateTime::from_timestamp(ts, 0)
        .map(|d| d.date_naive())
        .unwrap_or_default()
}

fn midnight(d: NaiveDate) -> i64 {
    d.and_hms_opt(0, 0, 0).expect("midnight").and_utc().timestamp()
}

/// Parses `2024-W05` (ISO week) or `2024-03` (month) into a period and a
/// timestamp at its start.
pub fn parse_period(s: &str) -> Result<(Period, i64)> {
    let bad = || Error::InvalidPayload(format!("period `{s}` is neither YYYY-Www nor YYYY-MM"));
    let (year, rest) = s.split_once('-').ok_or_else(bad)?;
    let year: i32 = year.parse().map_err(|_| bad())?;
    if let Some(week) = rest.strip_prefix('W') {
        let week: u32 = week.parse().map_err(|_| bad())?;
        let d = NaiveDate::from_isoywd_opt(year, week, Weekday::Mon).ok_or_else(bad)?;
        Ok((Period::Weekly, midnight(d)))
    } else {
        let month: u32 = rest.parse().map_err(|_| bad())?;
        let d = NaiveDate::from_ymd_opt(year, month, 1).ok_or_else(bad)?;
        Ok((Period::Monthly, midnight(d)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestOfEntry {
    pub id: String,
    /// Post title or comment preview.
    pub text: String,
    pub permalink: String,
    pub curated_utc: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestOfThread {
    pub period_start: i64,
    pub period_end: i64,
    pub title: String,
    pub submissions: Vec<BestOfEntry>,
    pub comments: Vec<BestOfEntry>,
}

impl BestOfThread {
    pub fn new(period: Period, ts: i64) -> Self {
        let (period_start, period_end) = period.bounds(ts);
        BestOfThread {
            period_start,
            period_end,
            title: period.default_title().to_string(),
            submissions: Vec::new(),
            comments: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.submissions.is_empty() && self.comments.is_empty()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.entry_position(id).is_some()
    }

    fn entry_position(&self, id: &str) -> Option<(bool, usize)> {
        if let Some(i) = self.submissions.iter().position(|e| e.id == id) {
            return Some((true, i));
        }
        self.comments.iter().position(|e| e.id == id).map(|i| (false, i))
    }

    /// Appends `c`; returns false when it is already listed.
    pub fn add(&mut self, c: &Contribution, ts: i64) -> bool {
        if self.contains(&c.id) {
            return false;
        }
        let entry = BestOfEntry {
            id: c.id.clone(),
            text: if c.is_post() {
                c.title.clone().unwrap_or_default()
            } else {
                preview(&c.body, PREVIEW_CHARS)
            },
            permalink: permalink(c),
            curated_utc: ts,
        };
        if c.is_post() {
            self.submissions.push(entry);
        } else {
            self.comments.push(entry);
        }
        true
    }

    /// Removes `id`; returns false when it was not listed.
    pub fn remove(&mut self, id: &str) -> bool {
        match self.entry_position(id) {
            Some((true, i)) => {
                self.submissions.remove(i);
                true
            }
            Some((false, i)) => {
                self.comments.remove(i);
                true
            }
            None => false,
        }
    }

    pub fn file_name(&self) -> String {
        format!("bestof-{}.md", date_of(self.period_start).format("%Y-%m-%d"))
    }
}

pub fn permalink(c: &Contribution) -> String {
    if c.is_post() {
        format!("/r/{}/comments/{}/", c.subreddit, c.id)
    } else {
        format!("/r/{}/comments/{}/_/{}/", c.subreddit, c.root_id(), c.id)
    }
}

/// Whitespace-collapsed text of at most `max_chars` characters, cut on a word
/// boundary with a trailing ellipsis when shortened.
pub fn preview(body: &str, max_chars: usize) -> String {
    let flat = body.split_whitespace().collect::<Vec<_>>().join(" ");
    if flat.chars().count() <= max_chars {
        return flat;
    }
    let budget = max_chars.saturating_sub(1);
    let head: String = flat.chars().take(budget).collect();
    let next_is_space = flat.chars().nth(budget) == Some(' ');
    let cut = if next_is_space {
        head.as_str()
    } else {
        match head.rfind(' ') {
            Some(i) if i > 0 => &head[..i],
            _ => head.as_str(),
        }
    };
    let mut out = cut.trim_end().to_string();
    out.push(ELLIPSIS);
    out
}

fn escape_link_text(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        if matches!(ch, '[' | ']' | '\\') {
            out.push('\\');
        }
        out.push(ch);
    }
    out
}

pub fn render_bestof(thread: &BestOfThread) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {}\n", thread.title);
    for (heading, entries) in [("Submissions", &thread.submissions), ("Comments", &thread.comments)] {
        let _ = writeln!(out, "## {heading}\n");
        if entries.is_empty() {
            let _ = writeln!(out, "{PLACEHOLDER}\n");
            continue;
        }
        for e in entries {
            let _ = writeln!(out, "- [{}]({})", escape_link_text(&e.text), e.permalink);
        }
        out.push('\n');
    }
    out.truncate(out.trim_end().len());
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weekly_bounds_start_monday() {
        // 2024-01-31 12:00 UTC, a Wednesday
        let (s, e) = Period::Weekly.bounds(1_706_702_400);
        assert_eq!(s, 1_706_486_400); // Mon 2024-01-29
        assert_eq!(e - s, 7 * DAY);
        assert_eq!(Period::Weekly.bounds(s), (s, e));
        assert_eq!(Period::Weekly.bounds(s - 1).1, s);
    }

    #[test]
    fn monthly_bounds() {
        let (s, e) = Period::Monthly.bounds(1_706_702_400);
        assert_eq!(s, 1_704_067_200); // 2024-01-01
        assert_eq!(e, 1_706_745_600); // 2024-02-01
        let (s, e) = Period::Monthly.bounds(1_703_980_800); // 2023-12-31
        assert_eq!((s, e), (1_701_388_800, 1_704_067_200));
    }

    #[test]
    fn period_strings() {
        assert_eq!(parse_period("2024-W05").unwrap(), (Period::Weekly, 1_706_486_400));
        assert_eq!(parse_period("2024-03").unwrap(), (Period::Monthly, 1_709_251_200));
        assert!(parse_period("2024-13").is_err());
        assert!(parse_period("march").is_err());
    }

    #[test]
    fn previews() {
        assert_eq!(preview("short  body\nhere", 200), "short body here");
        let long = "word ".repeat(60);
        let p = preview(&long, 200);
        assert!(p.chars().count() <= 200);
        assert!(p.ends_with("word\u{2026}"));
        let solid = "x".repeat(300);
        assert_eq!(preview(&solid, 200).chars().count(), 200);
    }

    #[test]
    fn render_empty_and_escaped() {
        let mut t = BestOfThread::new(Period::Weekly, 1_706_702_400);
        assert_eq!(
            render_bestof(&t),
            "# Best of the week\n\n## Submissions\n\n\u{2014}\n\n## Comments\n\n\u{2014}\n"
        );
        let p = Contribution::post("t3_a", "demo", "A [big] day", "b", "u", 1, 0);
        assert!(t.add(&p, 5));
        assert!(!t.add(&p, 6));
        let md = render_bestof(&t);
        assert!(md.contains("- [A \\[big\\] day](/r/demo/comments/t3_a/)\n"));
        assert_eq!(t.file_name(), "bestof-2024-01-29.md");
    }
}
