//! The on-disk artifact formats: `commits.csv`, `file_changes.csv`,
//! `series.json`, `events.json`, `trend_report.json`, `spikes_drops.csv`,
//! the correlation CSVs, and the `labels.csv` ingest format.
//!
//! CSV files are RFC 4180 with a header row; floats print in shortest
//! round-trip form, so identical runs produce byte-identical files.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::anomaly::{AnomalyError, AnomalyEvent, EventCategory, EventLabel};
use crate::records::{CommitRecord, EntropySeries, FileChangeRecord, ProjectTotals, SeriesPoint};
use crate::stats::CorrelationCell;
use crate::trends::{SpikeDropTable, TrendReport};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("io error on `{path}`: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("csv error on `{path}`: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("json error on `{path}`: {source}")]
    Json {
        path: String,
        source: serde_json::Error,
    },
    #[error("label file `{path}`: {source}")]
    Label { path: String, source: AnomalyError },
    #[error("label file `{path}` row {row}: relevant must be `true` or `false`, got `{value}`")]
    BadRelevant {
        path: String,
        row: usize,
        value: String,
    },
    #[error("series file `{path}`: positions must be strictly increasing (violated at index {index})")]
    UnorderedSeries { path: String, index: usize },
}

fn io_err(path: &Path, source: std::io::Error) -> DatasetError {
    DatasetError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn csv_err(path: &Path, source: csv::Error) -> DatasetError {
    DatasetError::Csv {
        path: path.display().to_string(),
        source,
    }
}

fn json_err(path: &Path, source: serde_json::Error) -> DatasetError {
    DatasetError::Json {
        path: path.display().to_string(),
        source,
    }
}

/// Flat CSV image of a [`CommitRecord`]; the totals are expanded in field
/// order.
#[derive(Debug, Serialize, Deserialize)]
struct CommitRow {
    commit_id: String,
    position: u64,
    timestamp: i64,
    author_id: String,
    message_length: u64,
    is_merge: bool,
    files_changed: u64,
    insertions: u64,
    deletions: u64,
    total_h_token: f64,
    total_h_ast_edge: f64,
    total_h_ast_node: f64,
    file_count: u64,
    spread: f64,
}

impl From<&CommitRecord> for CommitRow {
    fn from(r: &CommitRecord) -> Self {
        CommitRow {
            commit_id: r.commit_id.clone(),
            position: r.position,
            timestamp: r.timestamp,
            author_id: r.author_id.clone(),
            message_length: r.message_length,
            is_merge: r.is_merge,
            files_changed: r.files_changed,
            insertions: r.insertions,
            deletions: r.deletions,
            total_h_token: r.totals.total_h_token,
            total_h_ast_edge: r.totals.total_h_ast_edge,
            total_h_ast_node: r.totals.total_h_ast_node,
            file_count: r.totals.file_count,
            spread: r.totals.spread,
        }
    }
}

impl From<CommitRow> for CommitRecord {
    fn from(r: CommitRow) -> Self {
        CommitRecord {
            commit_id: r.commit_id,
            position: r.position,
            timestamp: r.timestamp,
            author_id: r.author_id,
            message_length: r.message_length,
            is_merge: r.is_merge,
            files_changed: r.files_changed,
            insertions: r.insertions,
            deletions: r.deletions,
            totals: ProjectTotals {
                total_h_token: r.total_h_token,
                total_h_ast_edge: r.total_h_ast_edge,
                total_h_ast_node: r.total_h_ast_node,
                file_count: r.file_count,
                spread: r.spread,
            },
        }
    }
}

pub fn write_commits_csv(path: &Path, records: &[CommitRecord]) -> Result<(), DatasetError> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for record in records {
        writer
            .serialize(CommitRow::from(record))
            .map_err(|e| csv_err(path, e))?;
    }
    writer
        .flush()
        .map_err(|e| io_err(path, e))
}

pub fn read_commits_csv(path: &Path) -> Result<Vec<CommitRecord>, DatasetError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let mut out = Vec::new();
    for row in reader.deserialize::<CommitRow>() {
        out.push(row.map_err(|e| csv_err(path, e))?.into());
    }
    Ok(out)
}

pub fn write_file_changes_csv(
    path: &Path,
    records: &[FileChangeRecord],
) -> Result<(), DatasetError> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for record in records {
        writer.serialize(record).map_err(|e| csv_err(path, e))?;
    }
    writer.flush().map_err(|e| io_err(path, e))
}

pub fn read_file_changes_csv(path: &Path) -> Result<Vec<FileChangeRecord>, DatasetError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let mut out = Vec::new();
    for row in reader.deserialize::<FileChangeRecord>() {
        out.push(row.map_err(|e| csv_err(path, e))?);
    }
    Ok(out)
}

fn write_json_pretty<T: Serialize>(path: &Path, value: &T) -> Result<(), DatasetError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut writer = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut writer, value).map_err(|e| json_err(path, e))?;
    writer.write_all(b"\n").map_err(|e| io_err(path, e))?;
    writer.flush().map_err(|e| io_err(path, e))
}

pub fn write_series_json(path: &Path, series: &EntropySeries) -> Result<(), DatasetError> {
    write_json_pretty(path, &series.points)
}

pub fn read_series_json(path: &Path) -> Result<EntropySeries, DatasetError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let points: Vec<SeriesPoint> =
        serde_json::from_reader(BufReader::new(file)).map_err(|e| json_err(path, e))?;
    if let Some(index) = points.windows(2).position(|w| w[0].position >= w[1].position) {
        return Err(DatasetError::UnorderedSeries {
            path: path.display().to_string(),
            index: index + 1,
        });
    }
    Ok(EntropySeries::new(points))
}

pub fn write_events_json(path: &Path, events: &[AnomalyEvent]) -> Result<(), DatasetError> {
    write_json_pretty(path, &events)
}

pub fn write_trend_report_json(path: &Path, report: &TrendReport) -> Result<(), DatasetError> {
    write_json_pretty(path, report)
}

#[derive(Debug, Serialize)]
struct SpikeDropCsvRow {
    threshold: f64,
    spikes: u64,
    drops: u64,
}

pub fn write_spikes_drops_csv(path: &Path, table: &SpikeDropTable) -> Result<(), DatasetError> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for row in &table.rows {
        writer
            .serialize(SpikeDropCsvRow {
                threshold: row.threshold,
                spikes: row.spikes,
                drops: row.drops,
            })
            .map_err(|e| csv_err(path, e))?;
    }
    writer.flush().map_err(|e| io_err(path, e))
}

#[derive(Debug, Serialize)]
struct CorrelationCsvRow<'a> {
    metric_x: &'a str,
    metric_y: &'a str,
    rho: Option<f64>,
    n: usize,
    p_value: Option<f64>,
    significant: bool,
}

pub fn write_correlations_csv(
    path: &Path,
    cells: &[CorrelationCell],
) -> Result<(), DatasetError> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for cell in cells {
        writer
            .serialize(CorrelationCsvRow {
                metric_x: &cell.metric_x,
                metric_y: &cell.metric_y,
                rho: cell.rho,
                n: cell.n,
                p_value: cell.p_value,
                significant: cell.significant,
            })
            .map_err(|e| csv_err(path, e))?;
    }
    writer.flush().map_err(|e| io_err(path, e))
}

/// Reads `labels.csv` (columns `commit_id,category,relevant`); category
/// strings use the closed label vocabulary, `relevant` is `true`/`false`.
pub fn read_labels_csv(path: &Path) -> Result<Vec<EventLabel>, DatasetError> {
    #[derive(Deserialize)]
    struct LabelRow {
        commit_id: String,
        category: String,
        relevant: String,
    }
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let mut labels = Vec::new();
    for (i, row) in reader.deserialize::<LabelRow>().enumerate() {
        let row = row.map_err(|e| csv_err(path, e))?;
        let category = EventCategory::parse(&row.category).map_err(|source| {
            DatasetError::Label {
                path: path.display().to_string(),
                source,
            }
        })?;
        let relevant = match row.relevant.trim() {
            "true" => true,
            "false" => false,
            other => {
                return Err(DatasetError::BadRelevant {
                    path: path.display().to_string(),
                    row: i + 2, // 1-based, after the header line
                    value: other.to_string(),
                })
            }
        };
        labels.push(EventLabel {
            commit_id: row.commit_id,
            category,
            relevant,
        });
    }
    Ok(labels)
}
