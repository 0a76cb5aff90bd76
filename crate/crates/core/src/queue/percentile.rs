use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mid-rank percentile: `100 * (count(v < x) + 0.5 * count(v == x)) / n`.
pub fn percentile_rank(values: &[f64], x: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InsufficientData("percentile of an empty distribution".into()));
    }
    let below = values.iter().filter(|&&v| v < x).count();
    let equal = values.iter().filter(|&&v| v == x).count();
    Ok(100.0 * (below as f64 + 0.5 * equal as f64) / values.len() as f64)
}

/// Linearly interpolated quantile (`p` in [0, 1]) of unsorted values.
pub fn quantile_linear(values: &[f64], p: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    Some(sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
}

/// Sorted snapshot of one kind's desirability scores, for repeated
/// percentile lookups in O(log n).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScorePool {
    sorted: Vec<f64>,
}

impl ScorePool {
    pub fn new(values: impl IntoIterator<Item = f64>) -> Self {
        let mut sorted: Vec<f64> = values.into_iter().collect();
        sorted.sort_by(f64::total_cmp);
        ScorePool { sorted }
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.sorted
    }

    pub fn percentile_rank(&self, x: f64) -> Result<f64> {
        if self.sorted.is_empty() {
            return Err(Error::InsufficientData("percentile of an empty distribution".into()));
        }
        let below = self.sorted.partition_point(|&v| v < x);
        let not_above = self.sorted.partition_point(|&v| v <= x);
        let equal = not_above - below;
        Ok(100.0 * (below as f64 + 0.5 * equal as f64) / self.sorted.len() as f64)
    }
}
