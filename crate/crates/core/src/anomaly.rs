//! Streaming detection of commits whose entropy delta is an outlier against
//! the history seen so far.
//!
//! The detector walks the per-commit deltas in order and keeps a bounded
//! window of past deltas. A new delta is flagged when its z-score against the
//! window reaches the threshold. The window capacity — a fraction of the
//! total commit count, or an explicit size in streaming use — lets the
//! detector forget events that are too far in the past: a large early import
//! would otherwise mask every later surprise.
//!
//! The current delta is never part of its own window, and nothing is flagged
//! until the window has accumulated `min_samples` values.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::records::{EntropySeries, SeriesMetric};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnomalyError {
    #[error("memory fraction {0} is outside (0, 1]")]
    BadMemoryFraction(f64),
    #[error("z-score threshold {0} must be positive")]
    BadThreshold(f64),
    #[error("window size must be at least 1")]
    BadWindowSize,
    #[error("min_samples must be at least 1")]
    BadMinSamples,
    #[error("events missing labels for commits: {}", .0.join(", "))]
    UnlabelledEvents(Vec<String>),
    #[error("unknown event category `{0}`")]
    UnknownCategory(String),
    #[error("label file field `{field}` could not be parsed from `{value}`")]
    BadLabelField { field: &'static str, value: String },
}

/// How much history the detector keeps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MemoryPolicy {
    /// Window capacity is `floor(fraction × total deltas)`. A fraction of 1.0
    /// never evicts anything.
    Fraction(f64),
    /// Fixed window capacity, for streaming use where the total is unknown.
    WindowSize(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub memory: MemoryPolicy,
    pub z_threshold: f64,
    pub min_samples: usize,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            memory: MemoryPolicy::Fraction(1.0),
            z_threshold: 3.0,
            min_samples: 30,
        }
    }
}

impl DetectorConfig {
    pub fn with_memory_fraction(fraction: f64) -> Self {
        DetectorConfig {
            memory: MemoryPolicy::Fraction(fraction),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), AnomalyError> {
        match self.memory {
            MemoryPolicy::Fraction(f) if !(f > 0.0 && f <= 1.0) => {
                return Err(AnomalyError::BadMemoryFraction(f));
            }
            MemoryPolicy::WindowSize(0) => return Err(AnomalyError::BadWindowSize),
            _ => {}
        }
        if self.z_threshold.is_nan() || self.z_threshold <= 0.0 {
            return Err(AnomalyError::BadThreshold(self.z_threshold));
        }
        if self.min_samples == 0 {
            return Err(AnomalyError::BadMinSamples);
        }
        Ok(())
    }

    fn capacity(&self, total: usize) -> usize {
        match self.memory {
            MemoryPolicy::Fraction(f) => (f * total as f64).floor() as usize,
            MemoryPolicy::WindowSize(w) => w,
        }
    }

    /// Short text form used in summaries, e.g. `memory=50%` or `window=200`.
    pub fn describe(&self) -> String {
        match self.memory {
            MemoryPolicy::Fraction(f) => format!(
                "memory={}% z={} min_samples={}",
                f * 100.0,
                self.z_threshold,
                self.min_samples
            ),
            MemoryPolicy::WindowSize(w) => format!(
                "window={} z={} min_samples={}",
                w, self.z_threshold, self.min_samples
            ),
        }
    }
}

/// Sign of a flagged delta.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "INSERTION")]
    Insertion,
    #[serde(rename = "REMOVAL")]
    Removal,
}

/// A delta flagged by [`detect`], positioned by its index in the input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub position: usize,
    pub delta: f64,
    /// Signed z-score. `±inf` marks the degenerate case of a nonzero change
    /// against a perfectly constant window (σ = 0).
    pub z_score: f64,
    pub direction: Direction,
    pub window_mean: f64,
    pub window_std: f64,
}

/// A flagged commit, ready for `events.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnomalyEvent {
    pub commit_id: String,
    pub position: u64,
    pub delta: f64,
    /// Serialized as `null` when the σ = 0 sentinel (±inf) applies.
    pub z_score: f64,
    pub direction: Direction,
    pub files_changed: u64,
    pub window_mean: f64,
    pub window_std: f64,
}

/// Refresh the running moments from the window after this many evictions, to
/// keep accumulated floating-point drift bounded on long streams.
const MOMENT_REFRESH_EVICTIONS: usize = 1 << 16;

/// Runs the detector over per-commit deltas, in commit order.
///
/// For each delta: if the window holds at least `min_samples` values, compute
/// the window mean μ and population standard deviation σ; flag when σ > 0 and
/// `|d − μ| / σ ≥ z_threshold`, or when σ = 0 and `d ≠ μ` (sentinel z of
/// ±inf). The delta is then appended and the oldest entries beyond capacity
/// are evicted.
///
/// μ and σ come from running first and second moments, so each step is O(1)
/// regardless of window size. Windows whose variance is indistinguishable
/// from the subtraction residue are rescanned exactly, which keeps the σ = 0
/// path reachable for genuinely constant histories.
pub fn detect(deltas: &[f64], config: &DetectorConfig) -> Vec<Detection> {
    let capacity = config.capacity(deltas.len());
    let mut window: VecDeque<f64> = VecDeque::new();
    let mut sum = 0.0f64;
    let mut sumsq = 0.0f64;
    let mut evictions = 0usize;
    let mut events = Vec::new();

    for (position, &delta) in deltas.iter().enumerate() {
        if window.len() >= config.min_samples {
            let n = window.len() as f64;
            let mut mean = sum / n;
            let mut var = (sumsq / n - mean * mean).max(0.0);
            if var * n <= sumsq * 1e-12 {
                mean = window.iter().sum::<f64>() / n;
                var = window.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / n;
            }
            let std = var.sqrt();
            let z = if std > 0.0 {
                (delta - mean) / std
            } else if delta != mean {
                if delta > mean {
                    f64::INFINITY
                } else {
                    f64::NEG_INFINITY
                }
            } else {
                0.0
            };
            if z.abs() >= config.z_threshold {
                events.push(Detection {
                    position,
                    delta,
                    z_score: z,
                    direction: if delta > 0.0 {
                        Direction::Insertion
                    } else {
                        Direction::Removal
                    },
                    window_mean: mean,
                    window_std: std,
                });
            }
        }
        window.push_back(delta);
        sum += delta;
        sumsq += delta * delta;
        while window.len() > capacity {
            let old = window.pop_front().expect("nonempty");
            sum -= old;
            sumsq -= old * old;
            evictions += 1;
        }
        if evictions >= MOMENT_REFRESH_EVICTIONS {
            sum = window.iter().sum();
            sumsq = window.iter().map(|d| d * d).sum();
            evictions = 0;
        }
    }
    events
}

/// Per-commit deltas of the chosen series metric. The first commit's delta is
/// its value itself (the project starts empty).
pub fn deltas_from_series(series: &EntropySeries, metric: SeriesMetric) -> Vec<f64> {
    let values = series.values(metric);
    let mut deltas = Vec::with_capacity(values.len());
    let mut previous = 0.0;
    for v in values {
        deltas.push(v - previous);
        previous = v;
    }
    deltas
}

/// Joins raw detections with the series to produce addressable events.
/// `files_changed` is looked up per commit id when available.
pub fn attach_events(
    series: &EntropySeries,
    detections: &[Detection],
    files_changed: &BTreeMap<String, u64>,
) -> Vec<AnomalyEvent> {
    detections
        .iter()
        .map(|d| {
            let point = &series.points[d.position];
            AnomalyEvent {
                commit_id: point.commit_id.clone(),
                position: point.position,
                delta: d.delta,
                z_score: d.z_score,
                direction: d.direction,
                files_changed: files_changed.get(&point.commit_id).copied().unwrap_or(0),
                window_mean: d.window_mean,
                window_std: d.window_std,
            }
        })
        .collect()
}

/// Action of a feature-related change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FeatureAction {
    Add,
    Up,
    Rem,
}

/// Dependency side effect of a software-feature change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DepChange {
    AddDep,
    RemDep,
    /// Dependency or module extracted into its own repository (porting).
    ExtDep,
}

/// The closed set of human label categories for flagged events.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EventCategory {
    Config,
    Documentation,
    FileExtConvert,
    ExCode,
    AutogenCode,
    SoftFeat {
        action: FeatureAction,
        dep: Option<DepChange>,
    },
    Refactor,
    Rebase,
    OldCodeRem,
    TestCode,
    BugFix,
    ProdFeat {
        action: FeatureAction,
    },
    CommitRevert,
    MultipleChanges,
}

impl EventCategory {
    /// Parses the label-file spelling, e.g. `soft_feat_add_ext_dep`,
    /// `prod_feat_rem`, `bug_fix`.
    pub fn parse(s: &str) -> Result<Self, AnomalyError> {
        use EventCategory::*;
        let cat = match s {
            "config" => Config,
            "documentation" => Documentation,
            "file_ext_convert" => FileExtConvert,
            "ex_code" => ExCode,
            "autogen_code" => AutogenCode,
            "refactor" => Refactor,
            "rebase" => Rebase,
            "old_code_rem" => OldCodeRem,
            "test_code" => TestCode,
            "bug_fix" => BugFix,
            "commit_revert" => CommitRevert,
            "multiple_changes" => MultipleChanges,
            _ => {
                if let Some(rest) = s.strip_prefix("soft_feat_") {
                    let (action, dep) = parse_feature_suffix(rest, true)
                        .ok_or_else(|| AnomalyError::UnknownCategory(s.to_string()))?;
                    SoftFeat { action, dep }
                } else if let Some(rest) = s.strip_prefix("prod_feat_") {
                    let (action, dep) = parse_feature_suffix(rest, false)
                        .ok_or_else(|| AnomalyError::UnknownCategory(s.to_string()))?;
                    debug_assert!(dep.is_none());
                    ProdFeat { action }
                } else {
                    return Err(AnomalyError::UnknownCategory(s.to_string()));
                }
            }
        };
        Ok(cat)
    }

    pub fn as_label(&self) -> String {
        use EventCategory::*;
        match self {
            Config => "config".into(),
            Documentation => "documentation".into(),
            FileExtConvert => "file_ext_convert".into(),
            ExCode => "ex_code".into(),
            AutogenCode => "autogen_code".into(),
            Refactor => "refactor".into(),
            Rebase => "rebase".into(),
            OldCodeRem => "old_code_rem".into(),
            TestCode => "test_code".into(),
            BugFix => "bug_fix".into(),
            CommitRevert => "commit_revert".into(),
            MultipleChanges => "multiple_changes".into(),
            SoftFeat { action, dep } => {
                let mut s = format!("soft_feat_{}", action_str(*action));
                if let Some(dep) = dep {
                    s.push('_');
                    s.push_str(dep_str(*dep));
                }
                s
            }
            ProdFeat { action } => format!("prod_feat_{}", action_str(*action)),
        }
    }
}

fn action_str(a: FeatureAction) -> &'static str {
    match a {
        FeatureAction::Add => "add",
        FeatureAction::Up => "up",
        FeatureAction::Rem => "rem",
    }
}

fn dep_str(d: DepChange) -> &'static str {
    match d {
        DepChange::AddDep => "add_dep",
        DepChange::RemDep => "rem_dep",
        DepChange::ExtDep => "ext_dep",
    }
}

fn parse_feature_suffix(rest: &str, allow_dep: bool) -> Option<(FeatureAction, Option<DepChange>)> {
    let (action_str, dep_str) = match rest.split_once('_') {
        Some((a, d)) => (a, Some(d)),
        None => (rest, None),
    };
    let action = match action_str {
        "add" => FeatureAction::Add,
        "up" => FeatureAction::Up,
        "rem" => FeatureAction::Rem,
        _ => return None,
    };
    let dep = match dep_str {
        None => None,
        Some(d) if allow_dep => Some(match d {
            "add_dep" => DepChange::AddDep,
            "rem_dep" => DepChange::RemDep,
            "ext_dep" => DepChange::ExtDep,
            _ => return None,
        }),
        Some(_) => return None,
    };
    Some((action, dep))
}

/// A human judgment of one flagged commit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventLabel {
    pub commit_id: String,
    pub category: EventCategory,
    /// The labeller's final relevance call; captures secondary rules (e.g.
    /// mostly non-feature entropy) that the category alone cannot express.
    pub relevant: bool,
}

/// Progressively wider definitions of a true positive. The category sets are
/// nested: maximally ⊂ conservative ⊂ least.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StrictnessLevel {
    /// Only insertions and updates of software and product features.
    MaximallyConservative,
    /// Additionally counts deliberate removals of features.
    Conservative,
    /// Additionally counts porting and dependency-extraction events.
    LeastConservative,
}

impl StrictnessLevel {
    pub const ALL: [StrictnessLevel; 3] = [
        StrictnessLevel::MaximallyConservative,
        StrictnessLevel::Conservative,
        StrictnessLevel::LeastConservative,
    ];

    /// Whether `category` belongs to this level's true-positive set.
    pub fn category_counts(self, category: &EventCategory) -> bool {
        use EventCategory::*;
        use FeatureAction::*;
        let feature_action = match category {
            SoftFeat { dep: Some(DepChange::ExtDep), .. } => {
                // Porting / dependency extraction: counted only at the widest
                // level, whatever the action.
                return self == StrictnessLevel::LeastConservative;
            }
            SoftFeat { action, .. } => *action,
            ProdFeat { action } => *action,
            _ => return false,
        };
        match self {
            StrictnessLevel::MaximallyConservative => matches!(feature_action, Add | Up),
            StrictnessLevel::Conservative | StrictnessLevel::LeastConservative => true,
        }
    }
}

/// Precision of the detector against human labels at one strictness level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionReport {
    pub level: StrictnessLevel,
    pub true_positives: u64,
    pub scored: u64,
    pub precision: f64,
}

/// Scores flagged events against labels. An event is a true positive when its
/// category belongs to the level's set and the labeller marked it relevant.
/// Every event must be labelled; missing commits are reported collectively.
pub fn score_events(
    events: &[AnomalyEvent],
    labels: &[EventLabel],
    level: StrictnessLevel,
) -> Result<PrecisionReport, AnomalyError> {
    let by_commit: BTreeMap<&str, &EventLabel> =
        labels.iter().map(|l| (l.commit_id.as_str(), l)).collect();
    let missing: Vec<String> = events
        .iter()
        .filter(|e| !by_commit.contains_key(e.commit_id.as_str()))
        .map(|e| e.commit_id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(AnomalyError::UnlabelledEvents(missing));
    }
    let true_positives = events
        .iter()
        .filter(|e| {
            let label = by_commit[e.commit_id.as_str()];
            label.relevant && level.category_counts(&label.category)
        })
        .count() as u64;
    let scored = events.len() as u64;
    Ok(PrecisionReport {
        level,
        true_positives,
        scored,
        precision: if scored == 0 {
            0.0
        } else {
            true_positives as f64 / scored as f64
        },
    })
}

/// Event counts per detector configuration, with the sample size needed to
/// estimate a proportion over the detected events at 95% confidence and ±5%
/// margin (normal approximation with finite-population correction).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config: String,
    pub events_detected: u64,
    pub audit_sample_size: u64,
}

pub fn summarize_runs(configs: &[DetectorConfig], deltas: &[f64]) -> Vec<RunSummary> {
    configs
        .iter()
        .map(|config| {
            let events = detect(deltas, config).len() as u64;
            RunSummary {
                config: config.describe(),
                events_detected: events,
                audit_sample_size: proportion_sample_size(events),
            }
        })
        .collect()
}

/// Sample size for estimating a proportion in a population of `n` at 95%
/// confidence and ±5% margin: Cochran's formula at p = 0.5 with
/// finite-population correction, rounded up.
pub fn proportion_sample_size(population: u64) -> u64 {
    if population == 0 {
        return 0;
    }
    let z = 1.959963985;
    let n0 = z * z * 0.25 / (0.05 * 0.05);
    let n = population as f64;
    let corrected = n0 / (1.0 + (n0 - 1.0) / n);
    (corrected.ceil() as u64).min(population)
}
