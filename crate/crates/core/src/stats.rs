//! Spearman rank correlation with tie correction, and the file- and
//! commit-level correlation tables between entropy metrics and classic
//! complexity metrics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::records::FileChangeRecord;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("input vectors have different lengths ({x} vs {y})")]
    LengthMismatch { x: usize, y: usize },
    #[error("need at least {needed} observations, got {got}")]
    TooFewObservations { got: usize, needed: usize },
    #[error("correlation is undefined: `{0}` is constant")]
    ConstantVector(&'static str),
}

/// One entry of a correlation table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationCell {
    pub metric_x: String,
    pub metric_y: String,
    /// Spearman's rho; absent when the cell could not be computed.
    pub rho: Option<f64>,
    pub n: usize,
    pub p_value: Option<f64>,
    /// True when the p-value clears the reporting cutoff.
    pub significant: bool,
    /// Failure note for cells that could not be computed.
    pub error: Option<String>,
}

/// Significance cutoff used when emitting correlation tables.
pub const SIGNIFICANCE_P: f64 = 0.005;

/// Spearman rank correlation with average ranks for ties, plus the two-sided
/// p-value from the t approximation `t = rho·√((n−2)/(1−rho²))`.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<(f64, f64), StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch { x: x.len(), y: y.len() });
    }
    if x.len() < 4 {
        return Err(StatsError::TooFewObservations { got: x.len(), needed: 4 });
    }
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    if rx.iter().all(|&r| r == rx[0]) {
        return Err(StatsError::ConstantVector("x"));
    }
    if ry.iter().all(|&r| r == ry[0]) {
        return Err(StatsError::ConstantVector("y"));
    }
    let rho = pearson(&rx, &ry);
    Ok((rho, two_sided_p(rho, x.len())))
}

/// Average ranks (1-based); tied values share the mean of the positions they
/// occupy.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("no NaN in rank input"));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // positions i..=j (0-based) hold equal values; average of 1-based ranks
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = rank;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean_x = x.iter().sum::<f64>() / n;
    let mean_y = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        let dx = xi - mean_x;
        let dy = yi - mean_y;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    sxy / (sxx * syy).sqrt()
}

fn two_sided_p(rho: f64, n: usize) -> f64 {
    let df = (n - 2) as f64;
    let denom = 1.0 - rho * rho;
    if denom <= 0.0 {
        return 0.0; // |rho| = 1: the t statistic diverges
    }
    let t = rho * (df / denom).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("df >= 2");
    2.0 * (1.0 - dist.cdf(t.abs()))
}

/// Which entropy figure enters the tables: the per-change delta (default; the
/// signs reported against insertions and deletions are only coherent for
/// deltas) or the post-change level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EntropyBasis {
    Delta,
    Level,
}

/// A named column extractor over file-change records.
type MetricColumn = (&'static str, fn(&FileChangeRecord) -> f64);

fn entropy_columns(basis: EntropyBasis) -> [MetricColumn; 3] {
    match basis {
        EntropyBasis::Delta => [
            ("delta_h_token", |r| r.delta_h_token),
            ("delta_h_ast_edge", |r| r.delta_h_ast_edge),
            ("delta_h_ast_node", |r| r.delta_h_ast_node),
        ],
        EntropyBasis::Level => [
            ("h_token", |r| r.h_token.bits()),
            ("h_ast_edge", |r| r.h_ast_edge.bits()),
            ("h_ast_node", |r| r.h_ast_node.bits()),
        ],
    }
}

const CLASSIC_COLUMNS: [MetricColumn; 7] = [
    ("insertions", |r| r.insertions as f64),
    ("deletions", |r| r.deletions as f64),
    ("insertions_minus_deletions", |r| {
        r.insertions as f64 - r.deletions as f64
    }),
    ("nloc", |r| r.nloc as f64),
    ("cyclomatic", |r| r.cyclomatic as f64),
    ("token_count", |r| r.token_count as f64),
    ("methods_changed", |r| r.methods_changed as f64),
];

fn cell(metric_x: &str, metric_y: &str, x: &[f64], y: &[f64]) -> CorrelationCell {
    match spearman(x, y) {
        Ok((rho, p)) => CorrelationCell {
            metric_x: metric_x.to_string(),
            metric_y: metric_y.to_string(),
            rho: Some(rho),
            n: x.len(),
            p_value: Some(p),
            significant: p <= SIGNIFICANCE_P,
            error: None,
        },
        Err(e) => CorrelationCell {
            metric_x: metric_x.to_string(),
            metric_y: metric_y.to_string(),
            rho: None,
            n: x.len(),
            p_value: None,
            significant: false,
            error: Some(e.to_string()),
        },
    }
}

/// File-level table: every per-change entropy column against every classic
/// metric column. Cells that cannot be computed carry an error note instead
/// of a rho; the table is emitted either way.
pub fn file_correlation_table(
    records: &[FileChangeRecord],
    basis: EntropyBasis,
) -> Vec<CorrelationCell> {
    let mut cells = Vec::new();
    for (x_name, x_of) in entropy_columns(basis) {
        let x: Vec<f64> = records.iter().map(x_of).collect();
        for (y_name, y_of) in CLASSIC_COLUMNS {
            let y: Vec<f64> = records.iter().map(y_of).collect();
            cells.push(cell(x_name, y_name, &x, &y));
        }
    }
    cells
}

/// Commit-level table: per-commit sums of each metric over the commit's file
/// changes, correlated across commits that touched at least one source file.
pub fn commit_correlation_table(
    records: &[FileChangeRecord],
    basis: EntropyBasis,
) -> Vec<CorrelationCell> {
    // Group by commit, preserving first-appearance (= chronological) order.
    let mut order: Vec<&str> = Vec::new();
    let mut groups: BTreeMap<&str, Vec<&FileChangeRecord>> = BTreeMap::new();
    for r in records {
        let slot = groups.entry(&r.commit_id).or_default();
        if slot.is_empty() {
            order.push(&r.commit_id);
        }
        slot.push(r);
    }

    let sum_over = |commit: &str, f: fn(&FileChangeRecord) -> f64| -> f64 {
        groups[commit].iter().map(|r| f(r)).sum()
    };

    let mut cells = Vec::new();
    for (x_name, x_of) in entropy_columns(basis) {
        let x: Vec<f64> = order.iter().map(|c| sum_over(c, x_of)).collect();
        for (y_name, y_of) in CLASSIC_COLUMNS {
            let y: Vec<f64> = order.iter().map(|c| sum_over(c, y_of)).collect();
            cells.push(cell(x_name, y_name, &x, &y));
        }
    }
    cells
}
