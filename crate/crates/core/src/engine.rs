//! Live engine: a corpus snapshot with scores, cues, queue metrics and the
//! moderator action state, rebuilt after every accepted action.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::actions::{
    build_explanation, render_bestof, replay_log, ActionConfig, ActionKind, ActionLog, ActionRecord, ActionState,
    Applied, BestOfThread, ReasonStore,
};
use crate::corpus::{Author, Contribution, Corpus, Kind};
use crate::error::{Error, Result};
use crate::model::{desirability_score, GbdtModel};
use crate::queue::{
    compute_metric_table, compute_post_aggregates, cue_from_pool, filter_queue, hover_histograms, slider_maxima,
    sort_queue, CueCategory, FilterMeta, FilterSpec, Histogram, MetricTable, PostAggregates, ScoreMap, ScorePool,
    SortKey, DAY_SECONDS, DEFAULT_NEWCOMER_DAYS,
};
use crate::textfeat::{extract_all, extract_features, feature_names, FeatureCache, FeatureConfig, LexiconSet};

pub const DEFAULT_PAGE_SIZE: usize = 25;
pub const MAX_PAGE_SIZE: usize = 100;

/// Source of the current time in epoch seconds.
pub trait Clock: Send + Sync {
    fn now(&self) -> i64;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> i64 {
        chrono::Utc::now().timestamp()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FixedClock(pub i64);

impl Clock for FixedClock {
    fn now(&self) -> i64 {
        self.0
    }
}

pub type SharedClock = Arc<dyn Clock>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    pub features: FeatureConfig,
    pub actions: ActionConfig,
    pub newcomer_threshold_days: f64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            features: FeatureConfig::default(),
            actions: ActionConfig::default(),
            newcomer_threshold_days: DEFAULT_NEWCOMER_DAYS,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Models {
    pub post: GbdtModel,
    pub comment: GbdtModel,
}

impl Models {
    pub fn for_kind(&self, kind: Kind) -> &GbdtModel {
        match kind {
            Kind::Post => &self.post,
            Kind::Comment => &self.comment,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuthorSummary {
    pub id: String,
    pub name: String,
    pub karma: u64,
    /// Account age when the contribution was made.
    pub account_age_days: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueueItem {
    pub post: Contribution,
    pub desirability_score: u8,
    pub cue: CueCategory,
    pub author: AuthorSummary,
    pub aggregates: PostAggregates,
    pub award_count: u32,
    pub flair: Option<String>,
    pub curated: bool,
    pub highlighted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueuePage {
    pub items: Vec<QueueItem>,
    pub total: usize,
    pub page: usize,
    pub page_size: usize,
    pub pages: usize,
    pub sort: SortKey,
    pub filters: FilterSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommentView {
    pub depth: usize,
    pub comment: Contribution,
    pub desirability_score: u8,
    pub cue: CueCategory,
    pub author: AuthorSummary,
    pub award_count: u32,
    pub curated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostDetail {
    pub item: QueueItem,
    pub comments: Vec<CommentView>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostHover {
    pub desirability_score: u8,
    pub category: CueCategory,
    pub desirability_histogram: Histogram,
    pub score_histogram: Histogram,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommentHover {
    pub desirability_score: u8,
    pub category: CueCategory,
}

/// Everything an accepted action changed, for echoing back to callers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionOutcome {
    pub action: ActionKind,
    pub target_id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reply: Option<Contribution>,
    pub thread: BestOfThread,
    pub highlights: Vec<String>,
    pub award_count: u32,
    pub score: i64,
    pub flair: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestOfView {
    pub thread: BestOfThread,
    pub rendered_markdown: String,
    pub file_name: String,
}

/// Derived read model for one state of the action log.
#[derive(Debug, Clone)]
struct Snapshot {
    corpus: Corpus,
    scores: ScoreMap,
    post_pool: ScorePool,
    comment_pool: ScorePool,
    metrics: MetricTable,
    filter_meta: FilterMeta,
}

pub struct Engine {
    base: Corpus,
    models: Models,
    lexicons: LexiconSet,
    config: EngineConfig,
    features: FeatureCache,
    state: ActionState,
    log: ActionLog,
    reasons: ReasonStore,
    snap: Snapshot,
}

impl std::fmt::Debug for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Engine")
            .field("contributions", &self.snap.corpus.contributions().len())
            .field("actions", &self.log.len())
            .finish()
    }
}

impl Engine {
    /// Scores `base`, replays `log` on top of it and builds the first snapshot.
    pub fn new(
        base: Corpus,
        models: Models,
        lexicons: LexiconSet,
        config: EngineConfig,
        log: ActionLog,
        reasons: ReasonStore,
    ) -> Result<Engine> {
        config.features.validate()?;
        if !(config.newcomer_threshold_days >= 0.0 && config.newcomer_threshold_days.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "newcomer_threshold_days must be >= 0, got {}",
                config.newcomer_threshold_days
            )));
        }
        let expected = feature_names(&lexicons, &config.features);
        for kind in [Kind::Post, Kind::Comment] {
            let m = models.for_kind(kind);
            if m.kind != kind {
                return Err(Error::InvalidConfig(format!("{kind} model was trained on {}s", m.kind)));
            }
            if m.feature_order != expected {
                return Err(Error::InvalidConfig(format!(
                    "{kind} model expects {} features that do not match the configured extractors ({})",
                    m.feature_order.len(),
                    expected.len()
                )));
            }
        }
        let features = extract_all(&base, &lexicons, &config.features);
        let state = replay_log(&base, &config.actions, log.records())?;
        let mut engine = Engine {
            snap: Snapshot {
                corpus: Corpus::empty(),
                scores: ScoreMap::new(),
                post_pool: ScorePool::default(),
                comment_pool: ScorePool::default(),
                metrics: MetricTable::new(),
                filter_meta: slider_maxima(&MetricTable::new()),
            },
            base,
            models,
            lexicons,
            config,
            features,
            state,
            log,
            reasons,
        };
        engine.snap = engine.build_snapshot(&engine.state.clone())?;
        Ok(engine)
    }

    fn build_snapshot(&mut self, state: &ActionState) -> Result<Snapshot> {
        let corpus = state.effective_corpus(&self.base)?;
        for r in &state.replies {
            if !self.features.contains_key(&r.id) {
                let f = extract_features(r, &self.lexicons, &self.config.features);
                self.features.insert(r.id.clone(), f);
            }
        }
        let mut scores = ScoreMap::with_capacity(corpus.contributions().len());
        let mut post_pool = Vec::new();
        let mut comment_pool = Vec::new();
        for c in corpus.contributions() {
            let f = self
                .features
                .get(&c.id)
                .ok_or_else(|| Error::not_found("features", &c.id))?;
            let s = desirability_score(self.models.for_kind(c.kind), &f.to_vec())?;
            scores.insert(c.id.clone(), s);
            match c.kind {
                Kind::Post => post_pool.push(f64::from(s)),
                Kind::Comment => comment_pool.push(f64::from(s)),
            }
        }
        let metrics = compute_metric_table(&corpus, &scores, self.config.newcomer_threshold_days)?;
        let filter_meta = slider_maxima(&metrics);
        Ok(Snapshot {
            corpus,
            scores,
            post_pool: ScorePool::new(post_pool),
            comment_pool: ScorePool::new(comment_pool),
            metrics,
            filter_meta,
        })
    }

    pub fn corpus(&self) -> &Corpus {
        &self.snap.corpus
    }

    pub fn base_corpus(&self) -> &Corpus {
        &self.base
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn models(&self) -> &Models {
        &self.models
    }

    pub fn state(&self) -> &ActionState {
        &self.state
    }

    pub fn log(&self) -> &ActionLog {
        &self.log
    }

    pub fn reasons(&self) -> &ReasonStore {
        &self.reasons
    }

    pub fn metrics(&self) -> &MetricTable {
        &self.snap.metrics
    }

    pub fn filter_meta(&self) -> &FilterMeta {
        &self.snap.filter_meta
    }

    pub fn scores(&self) -> &ScoreMap {
        &self.snap.scores
    }

    pub fn pool(&self, kind: Kind) -> &ScorePool {
        match kind {
            Kind::Post => &self.snap.post_pool,
            Kind::Comment => &self.snap.comment_pool,
        }
    }

    pub fn score(&self, id: &str) -> Result<u8> {
        self.snap
            .scores
            .get(id)
            .copied()
            .ok_or_else(|| Error::not_found("contribution", id))
    }

    pub fn cue(&self, id: &str) -> Result<CueCategory> {
        let c = self.snap.corpus.contribution(id)?;
        cue_from_pool(self.pool(c.kind), f64::from(self.score(id)?))
    }

    fn author_summary(&self, c: &Contribution) -> AuthorSummary {
        let a: &Author = self.snap.corpus.author_of(c);
        AuthorSummary {
            id: a.id.clone(),
            name: a.name.clone(),
            karma: a.karma,
            account_age_days: (c.created_utc - a.created_utc) as f64 / DAY_SECONDS,
        }
    }

    fn queue_item(&self, post: &Contribution, now: i64) -> Result<QueueItem> {
        let aggregates = match self.snap.metrics.get(&post.id) {
            Some(m) => m.aggregates,
            None => compute_post_aggregates(
                &self.snap.corpus,
                &post.id,
                &self.snap.scores,
                self.config.newcomer_threshold_days,
            )?,
        };
        Ok(QueueItem {
            post: post.clone(),
            desirability_score: self.score(&post.id)?,
            cue: self.cue(&post.id)?,
            author: self.author_summary(post),
            aggregates,
            award_count: self.state.award_count(&post.id),
            flair: post.flair.clone(),
            curated: self.state.is_curated(&post.id, now),
            highlighted: self.state.is_highlighted(&post.id),
        })
    }

    /// Filtered, sorted posts.
    pub fn queue(&self, spec: &FilterSpec, sort: SortKey) -> Result<Vec<&Contribution>> {
        spec.validate()?;
        let posts: Vec<&Contribution> = self.snap.corpus.posts().collect();
        let kept = filter_queue(&posts, spec, &self.snap.metrics)?;
        sort_queue(&kept, sort, &self.snap.metrics)
    }

    /// One page of the queue. Page 1 always exists, even when empty.
    pub fn queue_page(
        &self,
        spec: &FilterSpec,
        sort: SortKey,
        page: usize,
        page_size: usize,
        now: i64,
    ) -> Result<QueuePage> {
        if !(1..=MAX_PAGE_SIZE).contains(&page_size) {
            return Err(Error::InvalidQuery(format!(
                "page_size must lie in [1, {MAX_PAGE_SIZE}], got {page_size}"
            )));
        }
        if page < 1 {
            return Err(Error::InvalidQuery("page must be at least 1".into()));
        }
        let all = self.queue(spec, sort)?;
        let pages = all.len().div_ceil(page_size).max(1);
        if page > pages {
            return Err(Error::PageOutOfRange { page, pages });
        }
        let items = all
            .iter()
            .skip((page - 1) * page_size)
            .take(page_size)
            .map(|p| self.queue_item(p, now))
            .collect::<Result<Vec<_>>>()?;
        Ok(QueuePage {
            items,
            total: all.len(),
            page,
            page_size,
            pages,
            sort,
            filters: spec.clone(),
        })
    }

    pub fn post_detail(&self, post_id: &str, now: i64) -> Result<PostDetail> {
        let post = self.snap.corpus.contribution(post_id)?;
        let thread = self.snap.corpus.thread(post_id)?;
        let comments = thread
            .into_iter()
            .map(|(depth, c)| {
                Ok(CommentView {
                    depth,
                    comment: c.clone(),
                    desirability_score: self.score(&c.id)?,
                    cue: self.cue(&c.id)?,
                    author: self.author_summary(c),
                    award_count: self.state.award_count(&c.id),
                    curated: self.state.is_curated(&c.id, now),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PostDetail {
            item: self.queue_item(post, now)?,
            comments,
        })
    }

    pub fn post_hover(&self, post_id: &str) -> Result<PostHover> {
        let section = self.snap.corpus.comment_section(post_id)?;
        let desirability: Vec<u8> = section
            .iter()
            .map(|c| self.score(&c.id))
            .collect::<Result<_>>()?;
        let scores: Vec<i64> = section.iter().map(|c| c.score).collect();
        let (desirability_histogram, score_histogram) = hover_histograms(&desirability, &scores);
        Ok(PostHover {
            desirability_score: self.score(post_id)?,
            category: self.cue(post_id)?,
            desirability_histogram,
            score_histogram,
        })
    }

    pub fn comment_hover(&self, comment_id: &str) -> Result<CommentHover> {
        let c = self.snap.corpus.contribution(comment_id)?;
        if c.is_post() {
            return Err(Error::WrongKind {
                id: c.id.clone(),
                expected: Kind::Comment,
                actual: Kind::Post,
            });
        }
        Ok(CommentHover {
            desirability_score: self.score(comment_id)?,
            category: self.cue(comment_id)?,
        })
    }

    pub fn bestof_at(&self, ts: i64) -> BestOfView {
        let thread = self.state.thread_at(ts);
        BestOfView {
            rendered_markdown: render_bestof(&thread),
            file_name: thread.file_name(),
            thread,
        }
    }

    /// Every period that has a thread, oldest first.
    pub fn bestof_threads(&self) -> &BTreeMap<i64, BestOfThread> {
        &self.state.threads
    }

    /// Applies and logs one action; on any failure nothing changes.
    pub fn perform(&mut self, rec: ActionRecord) -> Result<ActionOutcome> {
        let mut next = self.state.clone();
        let Applied { warning, reply } = next.apply(&self.base, &rec)?;
        let snap = self.build_snapshot(&next)?;
        self.log.append(rec.clone())?;
        self.state = next;
        self.snap = snap;
        let target = self.snap.corpus.contribution(&rec.target_id)?;
        Ok(ActionOutcome {
            action: rec.action,
            target_id: rec.target_id.clone(),
            warning,
            reply,
            thread: self.state.thread_at(rec.ts),
            highlights: self.state.highlights.clone(),
            award_count: self.state.award_count(&rec.target_id),
            score: target.score,
            flair: target.flair.clone(),
        })
    }

    /// Explanation sentence for `target_id` from reason ids or labels and
    /// free-text reasons.
    pub fn preview_explanation(&self, target_id: &str, selected: &[String], custom: &[String]) -> Result<String> {
        let target = self.snap.corpus.contribution(target_id)?;
        let chosen = selected
            .iter()
            .map(|s| {
                self.reasons
                    .find(s)
                    .cloned()
                    .ok_or_else(|| Error::InvalidPayload(format!("unknown reason `{s}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        build_explanation(target.kind, &chosen, custom)
    }

    /// Builds the explanation, posts it as a reply and remembers any new
    /// custom reasons.
    pub fn explain(
        &mut self,
        target_id: &str,
        selected: &[String],
        custom: &[String],
        moderator: &str,
        now: i64,
    ) -> Result<ActionOutcome> {
        let text = self.preview_explanation(target_id, selected, custom)?;
        let rec = ActionRecord::explain(now, moderator, target_id, &text);
        let outcome = self.perform(rec)?;
        for label in custom {
            if !label.trim().is_empty() && self.reasons.find(label).is_none() {
                self.reasons.add_custom(label)?;
            }
        }
        Ok(outcome)
    }

    pub fn add_reason(&mut self, label: &str) -> Result<crate::actions::ExplainReason> {
        self.reasons.add_custom(label)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{train_gbdt, TrainConfig};
    use crate::synth::{generate_synthetic_corpus, SyntheticConfig};

    const NOW: i64 = 1_800_000_000;

    fn engine() -> Engine {
        let corpus = generate_synthetic_corpus(&SyntheticConfig {
            n_posts: 40,
            n_authors: 60,
            seed: 3,
            ..Default::default()
        })
        .unwrap();
        let lex = LexiconSet::builtin();
        let cfg = EngineConfig::default();
        let feats = extract_all(&corpus, &lex, &cfg.features);
        let tc = TrainConfig {
            rounds: 5,
            min_leaf: 2,
            ..Default::default()
        };
        let train = |kind| train_gbdt(&crate::model::build_labels(&corpus, kind, &feats).unwrap(), &tc).unwrap();
        let models = Models {
            post: train(Kind::Post),
            comment: train(Kind::Comment),
        };
        Engine::new(corpus, models, lex, cfg, ActionLog::in_memory(), ReasonStore::with_defaults()).unwrap()
    }

    #[test]
    fn pages_partition_queue() {
        let e = engine();
        let spec = FilterSpec::default();
        let all: Vec<String> = e.queue(&spec, SortKey::MostDesirable).unwrap().iter().map(|c| c.id.clone()).collect();
        let mut paged = Vec::new();
        for page in 1..=3 {
            let p = e.queue_page(&spec, SortKey::MostDesirable, page, 15, NOW).unwrap();
            paged.extend(p.items.into_iter().map(|i| i.post.id));
        }
        assert_eq!(paged, all);
        let err = e.queue_page(&spec, SortKey::Newest, 4, 15, NOW).unwrap_err();
        assert_eq!(err.code(), "page_out_of_range");
        assert_eq!(e.queue_page(&spec, SortKey::Newest, 1, 101, NOW).unwrap_err().code(), "invalid_query");
    }

    #[test]
    fn explain_adds_scored_reply() {
        let mut e = engine();
        let post = e.corpus().posts().next().unwrap().id.clone();
        let before = e.corpus().comment_section(&post).unwrap().len();
        let out = e
            .explain(&post, &["creative".into(), "Helpful".into()], &["supportive".into()], "mod", NOW)
            .unwrap();
        let reply = out.reply.unwrap();
        assert_eq!(reply.body, "The moderators like this post because it is creative, helpful, and supportive.");
        assert_eq!(e.corpus().comment_section(&post).unwrap().len(), before + 1);
        assert!(e.score(&reply.id).is_ok());
        assert!(e.reasons().find("supportive").is_some());
        assert_eq!(e.log().len(), 1);
    }

    #[test]
    fn rejected_action_changes_nothing() {
        let mut e = engine();
        let post = e.corpus().posts().next().unwrap().id.clone();
        e.perform(ActionRecord::new(NOW, "mod", ActionKind::Upvote, &post)).unwrap();
        let score = e.corpus().get(&post).unwrap().score;
        assert!(e.perform(ActionRecord::new(NOW, "mod", ActionKind::Upvote, &post)).is_err());
        assert_eq!(e.corpus().get(&post).unwrap().score, score);
        assert_eq!(e.log().len(), 1);
        assert_eq!(e.metrics()[&post].score, score);
    }

    #[test]
    fn hover_matches_scores() {
        let e = engine();
        let post = e.corpus().posts().next().unwrap().id.clone();
        let h = e.post_hover(&post).unwrap();
        assert_eq!(h.desirability_score, e.score(&post).unwrap());
        let n = e.corpus().comment_section(&post).unwrap().len() as u64;
        assert_eq!(h.desirability_histogram.total(), n);
        assert_eq!(e.comment_hover(&post).unwrap_err().code(), "wrong_kind");
    }
}
