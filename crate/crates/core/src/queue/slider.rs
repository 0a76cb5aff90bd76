use serde::{Deserialize, Serialize};

use crate::queue::metrics::{Metric, MetricTable};
use crate::queue::percentile::quantile_linear;

/// Upper end of the desirability slider; the model only emits 0..=100.
pub const DESIRABILITY_MAX: f64 = 100.0;
pub const SLIDER_QUANTILE: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliderMeta {
    pub metric: Metric,
    /// Query parameter the slider drives.
    pub filter: String,
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterMeta {
    pub sliders: Vec<SliderMeta>,
}

impl FilterMeta {
    pub fn get(&self, metric: Metric) -> Option<&SliderMeta> {
        self.sliders.iter().find(|s| s.metric == metric)
    }

    pub fn max(&self, metric: Metric) -> f64 {
        self.get(metric).map_or(0.0, |s| s.max)
    }
}

/// Smallest multiple of `step` not below `x`, tolerant of float noise.
pub fn ceil_to_step(x: f64, step: f64) -> f64 {
    let k = (x / step - 1e-9).ceil();
    let per_unit = (1.0 / step).round();
    if step < 1.0 && (per_unit * step - 1.0).abs() < 1e-12 {
        k / per_unit
    } else {
        k * step
    }
}

/// Slider ranges: desirability is fixed at 0..=100, every other metric tops
/// out at its 80th percentile over posts, rounded up to the step.
pub fn slider_maxima(metrics: &MetricTable) -> FilterMeta {
    let sliders = Metric::ALL
        .into_iter()
        .map(|metric| {
            let step = metric.step();
            let max = if metric == Metric::Desirability {
                DESIRABILITY_MAX
            } else {
                let values: Vec<f64> = metrics.values().map(|m| metric.value(m)).collect();
                quantile_linear(&values, SLIDER_QUANTILE)
                    .map_or(0.0, |q| ceil_to_step(q, step).max(0.0))
            };
            SliderMeta {
                metric,
                filter: metric.filter_token().to_string(),
                min: 0.0,
                max,
                step,
            }
        })
        .collect();
    FilterMeta { sliders }
}
