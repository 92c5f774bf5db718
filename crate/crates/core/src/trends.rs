//! Trend analysis over the per-commit entropy series: regression slopes,
//! spike/drop tables, segment slopes, spread-pattern classification, and the
//! indicators used to assess the classic laws of software evolution.
//!
//! All computations index by commit position, never by wall-clock time.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::records::{EntropySeries, SeriesMetric};

/// Relative-change thresholds used for spike/drop counting by default.
pub const DEFAULT_THRESHOLDS: [f64; 5] = [0.10, 0.20, 0.50, 0.80, 1.00];

/// Default normalized-slope tolerance for spread-pattern classification,
/// in relative units per commit.
pub const DEFAULT_PATTERN_EPSILON: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrendError {
    #[error("series has {got} points but at least {needed} are required")]
    TooShort { got: usize, needed: usize },
    #[error("segment count {k} leaves a segment with fewer than 2 points for {n} points; use a smaller k")]
    SegmentTooSmall { k: usize, n: usize },
    #[error("segment count must be at least 1")]
    ZeroSegments,
    #[error("spike/drop threshold {0} is not a positive fraction")]
    BadThreshold(f64),
}

/// Spike and drop counts at one relative-change threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpikeDropRow {
    pub threshold: f64,
    pub spikes: u64,
    pub drops: u64,
}

/// Spike/drop counts per threshold, plus the number of consecutive pairs that
/// had to be skipped because the base value was zero (relative change
/// undefined).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpikeDropTable {
    pub rows: Vec<SpikeDropRow>,
    pub skipped_zero_base: u64,
}

/// Broad shapes of the entropy-spread-per-file curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpreadPattern {
    #[serde(rename = "STABLE")]
    Stable,
    #[serde(rename = "STABILIZING")]
    Stabilizing,
    #[serde(rename = "INCREASING")]
    Increasing,
}

impl std::fmt::Display for SpreadPattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SpreadPattern::Stable => "STABLE",
            SpreadPattern::Stabilizing => "STABILIZING",
            SpreadPattern::Increasing => "INCREASING",
        };
        f.write_str(s)
    }
}

/// Bundled trend artifacts for one series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendReport {
    /// Least-squares slope of the token-entropy total, bits per commit.
    pub overall_slope: f64,
    /// Per-segment least-squares slopes, in series order.
    pub segment_slopes: Vec<f64>,
    pub spike_drop_table: SpikeDropTable,
    /// Coefficient of variation of the absolute per-commit relative deltas.
    /// 0 for a perfectly constant series; grows with spiky evolution.
    pub smoothness: f64,
    pub spread_pattern: SpreadPattern,
    /// True when at least one consecutive pair of totals differs.
    pub continuing_change: bool,
    /// True when the overall slope is positive.
    pub increasing_complexity: bool,
}

/// Parameters for [`lehman_indicators`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrendConfig {
    pub metric: SeriesMetric,
    pub thresholds: Vec<f64>,
    pub segments: usize,
    pub pattern_epsilon: f64,
}

impl Default for TrendConfig {
    fn default() -> Self {
        TrendConfig {
            metric: SeriesMetric::TokenTotal,
            thresholds: DEFAULT_THRESHOLDS.to_vec(),
            segments: 10,
            pattern_epsilon: DEFAULT_PATTERN_EPSILON,
        }
    }
}

/// Counts consecutive pairs whose relative change meets each threshold.
///
/// A spike at threshold `t` is a pair with `(v[k+1] - v[k]) / v[k] >= t`; a
/// drop is `(v[k] - v[k+1]) / v[k] >= t`. Pairs with `v[k] = 0` are skipped
/// and reported separately.
pub fn count_spikes_drops(
    series: &EntropySeries,
    metric: SeriesMetric,
    thresholds: &[f64],
) -> Result<SpikeDropTable, TrendError> {
    if series.len() < 2 {
        return Err(TrendError::TooShort {
            got: series.len(),
            needed: 2,
        });
    }
    for &t in thresholds {
        if !t.is_finite() || t <= 0.0 {
            return Err(TrendError::BadThreshold(t));
        }
    }
    let values = series.values(metric);
    let mut skipped = 0u64;
    let mut relative_changes = Vec::with_capacity(values.len() - 1);
    for pair in values.windows(2) {
        if pair[0] == 0.0 {
            skipped += 1;
            continue;
        }
        relative_changes.push((pair[1] - pair[0]) / pair[0]);
    }
    let rows = thresholds
        .iter()
        .map(|&t| SpikeDropRow {
            threshold: t,
            spikes: relative_changes.iter().filter(|&&r| r >= t).count() as u64,
            drops: relative_changes.iter().filter(|&&r| -r >= t).count() as u64,
        })
        .collect();
    Ok(SpikeDropTable {
        rows,
        skipped_zero_base: skipped,
    })
}

/// Ordinary least squares of the metric against commit position.
/// Returns `(slope, intercept)`.
pub fn linear_trend(
    series: &EntropySeries,
    metric: SeriesMetric,
) -> Result<(f64, f64), TrendError> {
    if series.len() < 2 {
        return Err(TrendError::TooShort {
            got: series.len(),
            needed: 2,
        });
    }
    Ok(ols(&series.positions(), &series.values(metric)))
}

fn ols(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean_x = x.iter().sum::<f64>() / n;
    let mean_y = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        sxy += (xi - mean_x) * (yi - mean_y);
        sxx += (xi - mean_x) * (xi - mean_x);
    }
    let slope = if sxx == 0.0 { 0.0 } else { sxy / sxx };
    (slope, mean_y - slope * mean_x)
}

/// Splits the series into `k` contiguous segments whose lengths differ by at
/// most one and fits each separately. Fails if any segment would hold fewer
/// than two points.
pub fn segment_slopes(
    series: &EntropySeries,
    metric: SeriesMetric,
    k: usize,
) -> Result<Vec<f64>, TrendError> {
    if k == 0 {
        return Err(TrendError::ZeroSegments);
    }
    let n = series.len();
    if n / k < 2 {
        return Err(TrendError::SegmentTooSmall { k, n });
    }
    let positions = series.positions();
    let values = series.values(metric);
    let base = n / k;
    let extra = n % k; // first `extra` segments get one more point
    let mut slopes = Vec::with_capacity(k);
    let mut start = 0;
    for i in 0..k {
        let len = base + usize::from(i < extra);
        let (slope, _) = ols(&positions[start..start + len], &values[start..start + len]);
        slopes.push(slope);
        start += len;
    }
    Ok(slopes)
}

/// Classifies the entropy-spread curve from the normalized slopes of its two
/// halves (slope divided by the half's mean level, making the verdict
/// scale-free). Needs at least 10 points.
pub fn classify_spread_pattern(
    series: &EntropySeries,
    epsilon: f64,
) -> Result<SpreadPattern, TrendError> {
    if series.len() < 10 {
        return Err(TrendError::TooShort {
            got: series.len(),
            needed: 10,
        });
    }
    let positions = series.positions();
    let values = series.values(SeriesMetric::Spread);
    let mid = series.len() / 2;
    let s1 = normalized_slope(&positions[..mid], &values[..mid]);
    let s2 = normalized_slope(&positions[mid..], &values[mid..]);
    Ok(if s1.abs() < epsilon && s2.abs() < epsilon {
        SpreadPattern::Stable
    } else if s1 >= epsilon && s2.abs() < epsilon {
        SpreadPattern::Stabilizing
    } else {
        SpreadPattern::Increasing
    })
}

fn normalized_slope(x: &[f64], y: &[f64]) -> f64 {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    if mean == 0.0 {
        return 0.0;
    }
    let (slope, _) = ols(x, y);
    slope / mean
}

/// Bundles every trend artifact for one series, with the indicators used to
/// assess continuing change, increasing complexity and smoothness of growth.
pub fn lehman_indicators(
    series: &EntropySeries,
    config: &TrendConfig,
) -> Result<TrendReport, TrendError> {
    if series.is_empty() {
        return Err(TrendError::TooShort { got: 0, needed: 1 });
    }
    let (overall_slope, _) = linear_trend(series, config.metric)?;
    let segment_slopes = segment_slopes(series, config.metric, config.segments)?;
    let spike_drop_table = count_spikes_drops(series, config.metric, &config.thresholds)?;
    let spread_pattern = classify_spread_pattern(series, config.pattern_epsilon)?;

    let values = series.values(config.metric);
    let continuing_change = values.windows(2).any(|w| w[0] != w[1]);
    Ok(TrendReport {
        overall_slope,
        segment_slopes,
        spike_drop_table,
        smoothness: smoothness(&values),
        spread_pattern,
        continuing_change,
        increasing_complexity: overall_slope > 0.0,
    })
}

/// Coefficient of variation (population std over mean) of the absolute
/// relative per-commit deltas. Pairs with a zero base are skipped; an empty
/// or perfectly constant delta set yields 0.
fn smoothness(values: &[f64]) -> f64 {
    let rel: Vec<f64> = values
        .windows(2)
        .filter(|w| w[0] != 0.0)
        .map(|w| ((w[1] - w[0]) / w[0]).abs())
        .collect();
    if rel.is_empty() {
        return 0.0;
    }
    let mean = rel.iter().sum::<f64>() / rel.len() as f64;
    if mean == 0.0 {
        return 0.0;
    }
    let var = rel.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / rel.len() as f64;
    var.sqrt() / mean
}
