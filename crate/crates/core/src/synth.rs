//! Seeded synthetic community used by tests, demos and the planted-signal
//! acceptance run.
//!
//! Account creation dates follow a left-skewed shape: a log-normal number of
//! days is subtracted from an anchor shortly after the peak year, so most
//! accounts land around the peak with a long tail into the past. Karma is
//! `round(exp(base + scale * latent))`, where `latent` mixes the standardized
//! log-age with Gaussian noise at the configured correlation.

use chrono::{NaiveDate, TimeZone, Utc};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, LogNormal, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::corpus::{Author, Contribution, Corpus};
use crate::error::{Error, Result};

const DAY: i64 = 86_400;
/// Earliest allowed account creation (2005-06-23).
const PLATFORM_START: i64 = 1_119_484_800;
const AGE_MEDIAN_DAYS: f64 = 400.0;
const AGE_SIGMA: f64 = 0.8;
const KARMA_BASE: f64 = 6.5;
const KARMA_SCALE: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub n_posts: usize,
    pub n_authors: usize,
    /// Poisson mean of comments per post.
    pub comments_mean: f64,
    pub comments_max: usize,
    pub peak_year: i32,
    pub karma_age_correlation: f64,
    pub noise_scale: f64,
    pub signal_strength: f64,
    /// Share of contributions carrying the planted signal when it is on.
    pub signal_fraction: f64,
    pub subreddit: String,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            n_posts: 105,
            n_authors: 1000,
            comments_mean: 4.0,
            comments_max: 49,
            peak_year: 2020,
            karma_age_correlation: 0.6,
            noise_scale: 1.0,
            signal_strength: 0.0,
            signal_fraction: 0.25,
            subreddit: "synthetic".into(),
            seed: 0,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.n_posts < 1 {
            return bad("n_posts must be at least 1".into());
        }
        if self.n_authors < 1 {
            return bad("n_authors must be at least 1".into());
        }
        if !(self.karma_age_correlation > 0.0 && self.karma_age_correlation < 1.0) {
            return bad(format!(
                "karma_age_correlation must lie in (0, 1), got {}",
                self.karma_age_correlation
            ));
        }
        if !(self.noise_scale > 0.0 && self.noise_scale.is_finite()) {
            return bad(format!("noise_scale must be positive, got {}", self.noise_scale));
        }
        if !(self.signal_strength >= 0.0 && self.signal_strength.is_finite()) {
            return bad(format!("signal_strength must be >= 0, got {}", self.signal_strength));
        }
        if !(self.signal_fraction > 0.0 && self.signal_fraction < 1.0) {
            return bad(format!("signal_fraction must lie in (0, 1), got {}", self.signal_fraction));
        }
        if !(self.comments_mean >= 0.0 && self.comments_mean.is_finite()) {
            return bad(format!("comments_mean must be >= 0, got {}", self.comments_mean));
        }
        if !(1971..=2200).contains(&self.peak_year) {
            return bad(format!("peak_year {} out of range", self.peak_year));
        }
        Ok(())
    }
}

const NEUTRAL: &[&str] = &[
    "the", "a", "of", "to", "and", "in", "it", "is", "was", "this", "that", "on", "for", "with",
    "post", "thread", "game", "build", "update", "version", "time", "week", "photo", "recipe",
    "garden", "bike", "code", "map", "plan", "move", "list", "item", "part", "setup", "guide",
    "day", "city", "trip", "book", "song", "show", "season", "price", "store", "model", "design",
    "color", "layer", "step", "tool", "board", "file", "note", "track", "room", "window", "light",
    "water", "coffee", "engine", "wheel", "screen", "phone", "camera", "series", "chapter",
    "level", "round", "point", "made", "tried", "found", "used", "got", "went", "saw", "built",
    "wrote", "took", "put", "ran", "set", "here", "there", "today", "after", "before", "about",
];
const POSITIVE: &[&str] = &[
    "love", "great", "awesome", "amazing", "wonderful", "excellent", "beautiful", "fantastic",
    "brilliant", "helpful", "insightful", "thanks", "appreciate", "creative", "impressive",
    "lovely", "glad", "happy", "enjoy", "fun", "thoughtful", "welcome", "useful", "kind", "proud",
    "delightful",
];
const NEGATIVE: &[&str] = &[
    "bad", "awful", "terrible", "horrible", "sad", "angry", "annoying", "worst", "boring",
    "disappointed", "useless", "broken", "wrong", "waste", "mess",
];
const TOXIC: &[&str] = &[
    "idiot", "stupid", "dumb", "moron", "loser", "pathetic", "trash", "garbage", "jerk",
];

struct Mix {
    positive: f64,
    negative: f64,
    toxic: f64,
}

const BASE_MIX: Mix = Mix {
    positive: 0.04,
    negative: 0.04,
    toxic: 0.01,
};

fn planted_mix(strength: f64) -> Mix {
    let s = strength.min(1.0);
    Mix {
        positive: BASE_MIX.positive + 0.30 * s,
        negative: BASE_MIX.negative * (1.0 - 0.75 * s),
        toxic: BASE_MIX.toxic * (1.0 - s),
    }
}

fn word<'a>(rng: &mut ChaCha8Rng, mix: &Mix) -> &'a str {
    let u: f64 = rng.random();
    let pool = if u < mix.positive {
        POSITIVE
    } else if u < mix.positive + mix.negative {
        NEGATIVE
    } else if u < mix.positive + mix.negative + mix.toxic {
        TOXIC
    } else {
        NEUTRAL
    };
    pool.choose(rng).copied().unwrap_or("the")
}

fn body(rng: &mut ChaCha8Rng, mix: &Mix, sentences: std::ops::RangeInclusive<usize>) -> String {
    let n = rng.random_range(sentences);
    let mut out = String::new();
    for i in 0..n {
        let len = rng.random_range(5..=14);
        let mut s: Vec<String> = (0..len).map(|_| word(rng, mix).to_string()).collect();
        if let Some(first) = s.first_mut() {
            *first = capitalize(first);
        }
        if i > 0 {
            out.push(' ');
        }
        out.push_str(&s.join(" "));
        out.push(if rng.random_bool(0.15) { '?' } else { '.' });
    }
    out
}

fn title(rng: &mut ChaCha8Rng, mix: &Mix) -> String {
    let len = rng.random_range(3..=8);
    let words: Vec<&str> = (0..len).map(|_| word(rng, mix)).collect();
    capitalize(&words.join(" "))
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

/// Non-negative heavy-tailed baseline with occasional downvoted items.
fn base_score(rng: &mut ChaCha8Rng) -> i64 {
    if rng.random_bool(0.1) {
        return -rng.random_range(1..=5);
    }
    let ln: LogNormal<f64> = LogNormal::new(1.0, 1.0).expect("valid lognormal");
    (ln.sample(rng) - 1.0).round().max(0.0) as i64
}

fn planted_bonus(rng: &mut ChaCha8Rng, strength: f64) -> i64 {
    let ln: LogNormal<f64> = LogNormal::new(2.0, 0.5).expect("valid lognormal");
    (strength * (30.0 + ln.sample(rng))).round() as i64
}

fn year_start(year: i32) -> i64 {
    let d = NaiveDate::from_ymd_opt(year, 1, 1).expect("valid year");
    Utc.from_utc_datetime(&d.and_hms_opt(0, 0, 0).expect("midnight"))
        .timestamp()
}

/// Builds a deterministic corpus from `config`.
pub fn generate_synthetic_corpus(config: &SyntheticConfig) -> Result<Corpus> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let rho = config.karma_age_correlation;
    let anchor = year_start(config.peak_year + 1) + 181 * DAY;
    let window_start = year_start(config.peak_year + 3);
    let window = 358 * DAY;

    let age_dist = LogNormal::new(AGE_MEDIAN_DAYS.ln(), AGE_SIGMA).expect("valid lognormal");
    let std_normal = Normal::new(0.0, 1.0).expect("valid normal");
    let mut authors = Vec::with_capacity(config.n_authors);
    for i in 0..config.n_authors {
        let days = age_dist.sample(&mut rng);
        let created = (anchor - (days * DAY as f64) as i64).max(PLATFORM_START);
        let z = (days.ln() - AGE_MEDIAN_DAYS.ln()) / AGE_SIGMA;
        let eps: f64 = std_normal.sample(&mut rng);
        let latent = rho * z + (1.0 - rho * rho).sqrt() * config.noise_scale * eps;
        let karma = (KARMA_BASE + KARMA_SCALE * latent).exp().round() as u64;
        authors.push(Author::new(
            format!("u{i:05}"),
            format!("user_{i:05}"),
            karma,
            created,
        ));
    }

    let planting = config.signal_strength > 0.0;
    let planted = planted_mix(config.signal_strength);
    let gap = Exp::new(1.0 / (3.0 * 3600.0)).expect("valid exp");
    let comment_count = (config.comments_mean > 0.0)
        .then(|| Poisson::new(config.comments_mean).expect("valid poisson"));

    let mut contributions = Vec::new();
    let mut next_comment = 0usize;
    for p in 0..config.n_posts {
        let is_planted = planting && rng.random_bool(config.signal_fraction);
        let mix = if is_planted { &planted } else { &BASE_MIX };
        let author = &authors[rng.random_range(0..authors.len())];
        let created = window_start + rng.random_range(0..window);
        let mut score = base_score(&mut rng);
        if is_planted {
            score += planted_bonus(&mut rng, config.signal_strength);
        }
        let post_id = format!("t3_{p:05}");
        let post = Contribution::post(
            post_id.clone(),
            config.subreddit.clone(),
            title(&mut rng, mix),
            body(&mut rng, mix, 1..=5),
            author.id.clone(),
            created,
            score,
        );
        contributions.push(post);

        let n_comments = comment_count
            .as_ref()
            .map(|d| (d.sample(&mut rng) as usize).min(config.comments_max))
            .unwrap_or(0);
        let mut thread: Vec<(String, i64)> = Vec::with_capacity(n_comments);
        for _ in 0..n_comments {
            let (parent, parent_created) = if thread.is_empty() || rng.random_bool(0.5) {
                (post_id.clone(), created)
            } else {
                thread[rng.random_range(0..thread.len())].clone()
            };
            let c_planted = planting && rng.random_bool(config.signal_fraction);
            let mix = if c_planted { &planted } else { &BASE_MIX };
            let c_author = &authors[rng.random_range(0..authors.len())];
            let c_created = parent_created + 1 + gap.sample(&mut rng) as i64;
            let mut c_score = base_score(&mut rng);
            if c_planted {
                c_score += planted_bonus(&mut rng, config.signal_strength);
            }
            let id = format!("t1_{next_comment:06}");
            next_comment += 1;
            contributions.push(Contribution::comment(
                id.clone(),
                config.subreddit.clone(),
                body(&mut rng, mix, 1..=3),
                c_author.id.clone(),
                c_created,
                c_score,
                parent,
                post_id.clone(),
            ));
            thread.push((id, c_created));
        }
    }
    Corpus::new(authors, contributions)
}
