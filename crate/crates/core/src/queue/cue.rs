use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::queue::percentile::{percentile_rank, ScorePool};

/// Five percentile bands, ordered from lowest to highest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CueCategory {
    HighlyUndesirable,
    Undesirable,
    Neutral,
    Desirable,
    HighlyDesirable,
}

impl CueCategory {
    pub const ALL: [CueCategory; 5] = [
        CueCategory::HighlyUndesirable,
        CueCategory::Undesirable,
        CueCategory::Neutral,
        CueCategory::Desirable,
        CueCategory::HighlyDesirable,
    ];

    /// Band for a mid-rank percentile; upper edges are inclusive.
    pub fn from_rank(rank: f64) -> CueCategory {
        if rank > 80.0 {
            CueCategory::HighlyDesirable
        } else if rank > 60.0 {
            CueCategory::Desirable
        } else if rank > 40.0 {
            CueCategory::Neutral
        } else if rank > 20.0 {
            CueCategory::Undesirable
        } else {
            CueCategory::HighlyUndesirable
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            CueCategory::HighlyUndesirable => "highly_undesirable",
            CueCategory::Undesirable => "undesirable",
            CueCategory::Neutral => "neutral",
            CueCategory::Desirable => "desirable",
            CueCategory::HighlyDesirable => "highly_desirable",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            CueCategory::HighlyUndesirable => "Highly undesirable",
            CueCategory::Undesirable => "Undesirable",
            CueCategory::Neutral => "Neutral",
            CueCategory::Desirable => "Desirable",
            CueCategory::HighlyDesirable => "Highly desirable",
        }
    }

    /// Theme token; the console maps these to colors.
    pub fn color_token(self) -> &'static str {
        match self {
            CueCategory::HighlyUndesirable => "cue-1",
            CueCategory::Undesirable => "cue-2",
            CueCategory::Neutral => "cue-3",
            CueCategory::Desirable => "cue-4",
            CueCategory::HighlyDesirable => "cue-5",
        }
    }
}

impl fmt::Display for CueCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for CueCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CueCategory::ALL
            .into_iter()
            .find(|c| c.token() == s)
            .ok_or_else(|| Error::UnknownToken {
                what: "cue category",
                token: s.to_string(),
            })
    }
}

pub fn cue_category(kind_scores: &[f64], score: f64) -> Result<CueCategory> {
    Ok(CueCategory::from_rank(percentile_rank(kind_scores, score)?))
}

pub fn cue_from_pool(pool: &ScorePool, score: f64) -> Result<CueCategory> {
    Ok(CueCategory::from_rank(pool.percentile_rank(score)?))
}
