//! Cues, hover histograms, filters, sorting and slider ranges for the queue.

pub mod cue;
pub mod filter;
pub mod histogram;
pub mod metrics;
pub mod percentile;
pub mod slider;

pub use cue::{cue_category, cue_from_pool, CueCategory};
pub use filter::{filter_queue, sort_queue, FilterSpec, SortKey};
pub use histogram::{desirability_histogram, hover_histograms, score_histogram, Histogram, HISTOGRAM_BINS};
pub use metrics::{
    compute_metric_table, compute_post_aggregates, read_metric_table, write_metric_table, Metric,
    MetricTable, PostAggregates, PostMetrics, ScoreMap, DAY_SECONDS, DEFAULT_NEWCOMER_DAYS,
};
pub use percentile::{percentile_rank, quantile_linear, ScorePool};
pub use slider::{ceil_to_step, slider_maxima, FilterMeta, SliderMeta, DESIRABILITY_MAX};
