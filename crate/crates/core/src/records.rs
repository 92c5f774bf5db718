//! The dataset row types shared across mining, analytics, detection and
//! correlation: one record per commit, one per file change, and the
//! per-commit totals series.

use serde::{Deserialize, Serialize};

use crate::entropy::EntropyBits;

/// How a commit touched a file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChangeType {
    #[serde(rename = "ADD")]
    Add,
    #[serde(rename = "MODIFY")]
    Modify,
    #[serde(rename = "RENAME")]
    Rename,
    #[serde(rename = "DELETE")]
    Delete,
}

impl std::fmt::Display for ChangeType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ChangeType::Add => "ADD",
            ChangeType::Modify => "MODIFY",
            ChangeType::Rename => "RENAME",
            ChangeType::Delete => "DELETE",
        };
        f.write_str(s)
    }
}

/// Project-wide running totals after a commit: per-file entropies summed over
/// all live source files, plus the information density per file.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ProjectTotals {
    pub total_h_token: f64,
    pub total_h_ast_edge: f64,
    pub total_h_ast_node: f64,
    pub file_count: u64,
    /// `total_h_token / file_count`; 0 when no files are live.
    pub spread: f64,
}

/// One row of the commit-level dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommitRecord {
    pub commit_id: String,
    /// Index on the linearized first-parent chain, oldest commit first.
    pub position: u64,
    /// Committer timestamp, seconds since epoch (UTC).
    pub timestamp: i64,
    /// One-way hash of the author identity; stable across runs.
    pub author_id: String,
    /// Commit message length in characters.
    pub message_length: u64,
    pub is_merge: bool,
    /// Number of source-file change records emitted for this commit.
    pub files_changed: u64,
    /// Line insertions summed over this commit's file change records.
    pub insertions: u64,
    /// Line deletions summed over this commit's file change records.
    pub deletions: u64,
    pub totals: ProjectTotals,
}

/// One row of the file-level dataset: a single file touched by a commit,
/// with its classic metrics, its entropy variants after the change, and the
/// signed difference against the file's previous version.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileChangeRecord {
    pub commit_id: String,
    pub file_path: String,
    /// Previous path for renames; empty otherwise.
    pub old_path: String,
    pub change_type: ChangeType,
    pub insertions: u64,
    pub deletions: u64,
    /// Non-blank line count of the file after the change.
    pub nloc: u64,
    /// Word count under the all-inclusive tokenization.
    pub token_count: u64,
    /// File cyclomatic complexity (sum over methods).
    pub cyclomatic: u64,
    pub methods_changed: u64,
    pub h_token: EntropyBits,
    pub h_token_no_comments: EntropyBits,
    pub h_comments_only: EntropyBits,
    pub h_token_no_kw_num: EntropyBits,
    pub h_ast_node: EntropyBits,
    pub h_ast_edge: EntropyBits,
    pub delta_h_token: f64,
    pub delta_h_ast_edge: f64,
    pub delta_h_ast_node: f64,
}

/// One point of the per-commit entropy series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub commit_id: String,
    pub position: u64,
    pub total_h_token: f64,
    pub total_h_ast_edge: f64,
    pub total_h_ast_node: f64,
    pub file_count: u64,
    pub spread: f64,
}

impl SeriesPoint {
    pub fn from_totals(commit_id: String, position: u64, totals: &ProjectTotals) -> Self {
        SeriesPoint {
            commit_id,
            position,
            total_h_token: totals.total_h_token,
            total_h_ast_edge: totals.total_h_ast_edge,
            total_h_ast_node: totals.total_h_ast_node,
            file_count: totals.file_count,
            spread: totals.spread,
        }
    }
}

/// Which column of the series a computation reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SeriesMetric {
    TokenTotal,
    AstEdgeTotal,
    AstNodeTotal,
    FileCount,
    Spread,
}

impl SeriesMetric {
    pub fn name(self) -> &'static str {
        match self {
            SeriesMetric::TokenTotal => "total_h_token",
            SeriesMetric::AstEdgeTotal => "total_h_ast_edge",
            SeriesMetric::AstNodeTotal => "total_h_ast_node",
            SeriesMetric::FileCount => "file_count",
            SeriesMetric::Spread => "spread",
        }
    }
}

/// Ordered per-commit totals, the input of trend and anomaly analysis.
/// Positions are strictly increasing.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EntropySeries {
    pub points: Vec<SeriesPoint>,
}

impl EntropySeries {
    pub fn new(points: Vec<SeriesPoint>) -> Self {
        debug_assert!(points.windows(2).all(|w| w[0].position < w[1].position));
        EntropySeries { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// The chosen metric as a plain vector, in series order.
    pub fn values(&self, metric: SeriesMetric) -> Vec<f64> {
        self.points
            .iter()
            .map(|p| match metric {
                SeriesMetric::TokenTotal => p.total_h_token,
                SeriesMetric::AstEdgeTotal => p.total_h_ast_edge,
                SeriesMetric::AstNodeTotal => p.total_h_ast_node,
                SeriesMetric::FileCount => p.file_count as f64,
                SeriesMetric::Spread => p.spread,
            })
            .collect()
    }

    /// Positions as `f64`, the regression x-axis.
    pub fn positions(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.position as f64).collect()
    }
}
