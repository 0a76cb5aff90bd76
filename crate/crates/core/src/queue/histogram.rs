use serde::{Deserialize, Serialize};

pub const HISTOGRAM_BINS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u32>,
    pub value_range: (f64, f64),
}

impl Histogram {
    /// Equal-width bins over `[lo, hi]`; the last bin is closed. Values
    /// outside the range fall into the nearest end bin.
    pub fn with_range(values: &[f64], lo: f64, hi: f64, bins: usize) -> Histogram {
        let bins = bins.max(1);
        let width = (hi - lo) / bins as f64;
        let bin_edges = (0..=bins)
            .map(|i| if i == bins { hi } else { lo + width * i as f64 })
            .collect();
        let mut counts = vec![0u32; bins];
        for &v in values {
            let i = ((v - lo) / width).floor();
            let i = if i.is_nan() || i < 0.0 { 0 } else { (i as usize).min(bins - 1) };
            counts[i] += 1;
        }
        Histogram {
            bin_edges,
            counts,
            value_range: (lo, hi),
        }
    }

    pub fn empty() -> Histogram {
        Histogram::with_range(&[], 0.0, 1.0, HISTOGRAM_BINS)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| u64::from(c)).sum()
    }
}

/// Desirability bins over `[0, max(observed, 10)]`.
pub fn desirability_histogram(scores: &[u8]) -> Histogram {
    if scores.is_empty() {
        return Histogram::empty();
    }
    let values: Vec<f64> = scores.iter().map(|&s| f64::from(s)).collect();
    let hi = values.iter().copied().fold(10.0, f64::max);
    Histogram::with_range(&values, 0.0, hi, HISTOGRAM_BINS)
}

/// Community score bins over the observed range, widened to one point when
/// every score is equal.
pub fn score_histogram(scores: &[i64]) -> Histogram {
    let (Some(&min), Some(&max)) = (scores.iter().min(), scores.iter().max()) else {
        return Histogram::empty();
    };
    let lo = min as f64;
    let hi = if max > min { max as f64 } else { lo + 1.0 };
    let values: Vec<f64> = scores.iter().map(|&s| s as f64).collect();
    Histogram::with_range(&values, lo, hi, HISTOGRAM_BINS)
}

/// Both hover histograms for one comment section.
pub fn hover_histograms(desirability: &[u8], scores: &[i64]) -> (Histogram, Histogram) {
    (desirability_histogram(desirability), score_histogram(scores))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spans_observed_range() {
        let (d, s) = hover_histograms(&[0, 14, 33, 61], &[0, 1, 1, 2, 0, 36]);
        assert_eq!(d.value_range, (0.0, 61.0));
        assert_eq!(d.total(), 4);
        assert_eq!(d.counts[9], 1);
        assert_eq!(s.value_range, (0.0, 36.0));
        assert_eq!(s.counts[0], 5);
        assert_eq!(s.counts[9], 1);
        assert_eq!(s.bin_edges.len(), 11);
    }

    #[test]
    fn small_and_flat() {
        let d = desirability_histogram(&[3, 4]);
        assert_eq!(d.value_range, (0.0, 10.0));
        let s = score_histogram(&[5, 5, 5]);
        assert_eq!(s.value_range, (5.0, 6.0));
        assert_eq!(s.counts[0], 3);
    }

    #[test]
    fn empty_section() {
        let (d, s) = hover_histograms(&[], &[]);
        for h in [d, s] {
            assert_eq!(h.value_range, (0.0, 1.0));
            assert_eq!(h.total(), 0);
            assert_eq!(h.counts.len(), 10);
        }
    }
}
