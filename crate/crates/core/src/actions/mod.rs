//! Moderator reward actions, the append-only action log, best-of threads
//! and explanation templating.

pub mod bestof;
pub mod explain;
pub mod state;

pub use bestof::{parse_period, permalink, preview, render_bestof, BestOfEntry, BestOfThread, Period, PREVIEW_CHARS};
pub use explain::{build_explanation, ExplainReason, ReasonOrigin, ReasonStore, DEFAULT_REASONS};
pub use state::{
    replay_log, ActionConfig, ActionKind, ActionLog, ActionRecord, ActionState, Applied, LogWarning, DEFAULT_FLAIRS,
    HIGHLIGHT_CAPACITY,
};
