//! Chronological repository mining.
//!
//! Walks the first-parent chain of a branch oldest-first, snapshots every
//! changed source file before and after each commit, computes the full set of
//! lexical and structural metrics per change, and maintains incremental
//! project-wide totals. Produces the commit-level and file-level datasets and
//! the per-commit entropy series.
//!
//! The project total is the sum of per-file entropies over all live source
//! files, not the entropy of a merged histogram; related files measured in
//! isolation inflate the total, which is accepted and documented behavior.
//! Totals are maintained incrementally: after each commit the per-file deltas
//! are added in path-sorted order, so `total[k] = total[k-1] + Σ deltas[k]`
//! holds exactly. A full recompute from the commit's tree can be scheduled
//! every N commits to bound drift.
//!
//! The repository is only ever read, never written.

use std::collections::BTreeMap;
use std::path::Path;

use git2::{Commit, Delta, DiffFindOptions, Oid, Patch, Repository, Tree};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::entropy::{EntropyBits, SymbolHistogram};
use crate::grammar::{Grammar, GrammarError, GrammarRegistry};
use crate::lex::{decode_utf8, words_from_lexemes, TokenizationConfig};
use crate::records::{
    ChangeType, CommitRecord, EntropySeries, FileChangeRecord, ProjectTotals, SeriesPoint,
};
use crate::syntax::{changed_methods, parse_profile, structural_entropy};

#[derive(Debug, Error)]
pub enum MineError {
    #[error("repository not found at `{path}`: {source}")]
    Open { path: String, source: git2::Error },
    #[error("branch `{0}` not found")]
    MissingBranch(String),
    #[error(transparent)]
    Grammar(#[from] GrammarError),
    #[error("git error: {0}")]
    Git(#[from] git2::Error),
}

/// Parameters of one mining run.
#[derive(Debug, Clone)]
pub struct MineConfig {
    /// Branch to linearize; the repository's HEAD branch when absent.
    pub branch: Option<String>,
    /// Registered grammar id. Decides the source-file extension filter.
    pub grammar: String,
    /// Tokenization for the `h_token` column and the project token totals.
    /// The three fixed variant columns are always computed alongside.
    pub tokenization: TokenizationConfig,
    /// When set, recompute totals from scratch over the commit tree every N
    /// commits and record the largest deviation observed.
    pub verify_every: Option<usize>,
}

impl Default for MineConfig {
    fn default() -> Self {
        MineConfig {
            branch: None,
            grammar: "java".to_string(),
            tokenization: TokenizationConfig::all_tokens(),
            verify_every: None,
        }
    }
}

/// A file change that could not be measured, with the reason. Skips are never
/// fatal; they are reported so runs stay auditable.
#[derive(Debug, Clone, PartialEq)]
pub struct SkippedFile {
    pub commit_id: String,
    pub path: String,
    pub reason: String,
}

/// Everything one mining run produces.
#[derive(Debug, Default)]
pub struct MineOutput {
    pub commits: Vec<CommitRecord>,
    pub file_changes: Vec<FileChangeRecord>,
    pub series: EntropySeries,
    pub skipped: Vec<SkippedFile>,
    /// Largest |incremental − recomputed| total observed by periodic
    /// verification, in bits. `None` when verification was off.
    pub max_recompute_deviation: Option<f64>,
}

/// Per-file entropy state at a point in history: the histograms behind every
/// variant and their entropies.
#[derive(Debug, Clone, Default)]
pub struct FileEntropyState {
    pub word_hist: SymbolHistogram,
    pub word_hist_no_comments: SymbolHistogram,
    pub word_hist_comments_only: SymbolHistogram,
    pub word_hist_no_kw_num: SymbolHistogram,
    pub node_hist: SymbolHistogram,
    pub edge_hist: SymbolHistogram,
    pub h_token: f64,
    pub h_token_no_comments: f64,
    pub h_comments_only: f64,
    pub h_token_no_kw_num: f64,
    pub h_ast_node: f64,
    pub h_ast_edge: f64,
}

/// Full measurement of one file version.
struct FileMeasurement {
    state: FileEntropyState,
    nloc: u64,
    token_count: u64,
    cyclomatic: u64,
}

/// Live per-file state plus running totals for the project.
#[derive(Debug, Clone, Default)]
pub struct ProjectState {
    files: BTreeMap<String, FileEntropyState>,
    totals: ProjectTotals,
}

impl ProjectState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn totals(&self) -> ProjectTotals {
        self.totals
    }

    pub fn live_files(&self) -> usize {
        self.files.len()
    }

    /// Sum of the stored per-file entropies in ascending path order —
    /// the reference value the incremental totals are checked against.
    pub fn totals_from_state(&self) -> ProjectTotals {
        let mut totals = ProjectTotals::default();
        for state in self.files.values() {
            totals.total_h_token += state.h_token;
            totals.total_h_ast_edge += state.h_ast_edge;
            totals.total_h_ast_node += state.h_ast_node;
            totals.file_count += 1;
        }
        totals.spread = spread_of(totals.total_h_token, totals.file_count);
        totals
    }
}

fn spread_of(total_h_token: f64, file_count: u64) -> f64 {
    if file_count == 0 {
        0.0
    } else {
        total_h_token / file_count as f64
    }
}

/// Oldest-first first-parent chain of `branch` (HEAD's branch when `None`).
/// Every commit appears exactly once; side branches of merges are excluded.
/// An empty repository yields an empty chain.
pub fn linearize_history(
    repo: &Repository,
    branch: Option<&str>,
) -> Result<Vec<Oid>, MineError> {
    let tip = match branch {
        Some(name) => repo
            .find_branch(name, git2::BranchType::Local)
            .map_err(|_| MineError::MissingBranch(name.to_string()))?
            .get()
            .peel_to_commit()?,
        None => match repo.head() {
            Ok(head) => head.peel_to_commit()?,
            Err(e)
                if e.code() == git2::ErrorCode::UnbornBranch
                    || e.code() == git2::ErrorCode::NotFound =>
            {
                return Ok(Vec::new())
            }
            Err(e) => return Err(e.into()),
        },
    };
    let mut chain = Vec::new();
    let mut cursor = Some(tip);
    while let Some(commit) = cursor {
        chain.push(commit.id());
        cursor = commit.parent(0).ok();
    }
    chain.reverse();
    Ok(chain)
}

/// Mines the full history of the repository at `path`.
pub fn mine(
    path: &Path,
    registry: &GrammarRegistry,
    config: &MineConfig,
) -> Result<MineOutput, MineError> {
    let repo = Repository::open(path).map_err(|source| MineError::Open {
        path: path.display().to_string(),
        source,
    })?;
    let grammar = registry.get(&config.grammar)?;
    let chain = linearize_history(&repo, config.branch.as_deref())?;

    let mut state = ProjectState::new();
    let mut output = MineOutput {
        max_recompute_deviation: config.verify_every.map(|_| 0.0),
        ..Default::default()
    };

    for (position, oid) in chain.iter().enumerate() {
        let commit = repo.find_commit(*oid)?;
        let (record, changes, skipped) = analyze_commit(
            &repo,
            &mut state,
            &commit,
            position as u64,
            grammar.as_ref(),
            &config.tokenization,
        )?;
        output
            .series
            .points
            .push(SeriesPoint::from_totals(record.commit_id.clone(), record.position, &record.totals));
        output.commits.push(record);
        output.file_changes.extend(changes);
        output.skipped.extend(skipped);

        if let Some(every) = config.verify_every {
            if every > 0 && (position + 1) % every == 0 {
                let recomputed = recompute_totals(
                    &repo,
                    &commit,
                    grammar.as_ref(),
                    &config.tokenization,
                )?;
                let running = state.totals();
                let deviation = (recomputed.total_h_token - running.total_h_token)
                    .abs()
                    .max((recomputed.total_h_ast_edge - running.total_h_ast_edge).abs())
                    .max((recomputed.total_h_ast_node - running.total_h_ast_node).abs())
                    .max(if recomputed.file_count == running.file_count {
                        0.0
                    } else {
                        f64::INFINITY
                    });
                let slot = output.max_recompute_deviation.get_or_insert(0.0);
                *slot = slot.max(deviation);
            }
        }
    }
    Ok(output)
}

/// Analyzes one commit against the running state: reads every changed source
/// file before and after, fills a [`FileChangeRecord`] per file in path-sorted
/// order, updates the state incrementally, and snapshots the totals into the
/// [`CommitRecord`].
///
/// Commits must be supplied in linearized order.
pub fn analyze_commit(
    repo: &Repository,
    state: &mut ProjectState,
    commit: &Commit<'_>,
    position: u64,
    grammar: &dyn Grammar,
    tokenization: &TokenizationConfig,
) -> Result<(CommitRecord, Vec<FileChangeRecord>, Vec<SkippedFile>), MineError> {
    let commit_id = commit.id().to_string();
    let parent_tree: Option<Tree<'_>> = match commit.parent(0) {
        Ok(parent) => Some(parent.tree()?),
        Err(_) => None,
    };
    let commit_tree = commit.tree()?;

    let mut diff =
        repo.diff_tree_to_tree(parent_tree.as_ref(), Some(&commit_tree), None)?;
    diff.find_similar(Some(DiffFindOptions::new().renames(true)))?;

    let mut skipped = Vec::new();
    let mut pending = Vec::new();
    for (idx, delta) in diff.deltas().enumerate() {
        let old_path = delta
            .old_file()
            .path()
            .map(|p| p.to_string_lossy().into_owned())
            .unwrap_or_default();
        let new_path = delta
            .new_file()
            .path()
            .map(|p| p.to_string_lossy().into_owned())
            .unwrap_or_default();
        let old_is_source = is_source(&old_path, grammar);
        let new_is_source = is_source(&new_path, grammar);

        // Classify relative to the source filter. A rename across the filter
        // boundary degrades to the half that is visible to us.
        let change = match delta.status() {
            Delta::Added | Delta::Copied if new_is_source => ChangeType::Add,
            Delta::Deleted if old_is_source => ChangeType::Delete,
            Delta::Modified | Delta::Typechange if new_is_source => ChangeType::Modify,
            Delta::Renamed if old_is_source && new_is_source => ChangeType::Rename,
            Delta::Renamed if new_is_source => ChangeType::Add,
            Delta::Renamed if old_is_source => ChangeType::Delete,
            _ => continue,
        };

        let (insertions, deletions) = match Patch::from_diff(&diff, idx)? {
            Some(patch) => {
                let (_, adds, dels) = patch.line_stats()?;
                (adds as u64, dels as u64)
            }
            None => (0, 0),
        };

        let before_bytes = if change == ChangeType::Add {
            Vec::new()
        } else {
            blob_bytes(repo, delta.old_file().id())
        };
        let after_bytes = if change == ChangeType::Delete {
            Vec::new()
        } else {
            blob_bytes(repo, delta.new_file().id())
        };

        let path = if change == ChangeType::Delete {
            old_path.clone()
        } else {
            new_path.clone()
        };

        let measurement = if change == ChangeType::Delete {
            None
        } else {
            match measure_file(&after_bytes, grammar, tokenization) {
                Ok(m) => Some(m),
                Err(e) => {
                    skipped.push(SkippedFile {
                        commit_id: commit_id.clone(),
                        path,
                        reason: e.to_string(),
                    });
                    continue;
                }
            }
        };

        let methods_changed = changed_methods(&before_bytes, &after_bytes, grammar)
            .unwrap_or_else(|_| {
                // Undecodable before-version: every method in the readable
                // side counts as changed.
                changed_methods(b"", &after_bytes, grammar).unwrap_or(0)
            });

        pending.push(PendingChange {
            path,
            old_path: if change == ChangeType::Rename {
                old_path
            } else {
                String::new()
            },
            change,
            insertions,
            deletions,
            methods_changed: methods_changed as u64,
            measurement,
        });
    }

    // Canonical path order keeps the delta accumulation reproducible.
    pending.sort_by(|a, b| a.path.cmp(&b.path));

    // Detach previous states in two passes so a rename's source is never
    // claimed by another change targeting the same path: renames and deletes
    // reference pre-commit paths, adds and modifies reference current ones.
    let mut previous: Vec<Option<FileEntropyState>> = Vec::with_capacity(pending.len());
    previous.resize_with(pending.len(), || None);
    for (i, change) in pending.iter().enumerate() {
        match change.change {
            ChangeType::Rename => previous[i] = state.files.remove(&change.old_path),
            ChangeType::Delete => previous[i] = state.files.remove(&change.path),
            _ => {}
        }
    }
    for (i, change) in pending.iter().enumerate() {
        if matches!(change.change, ChangeType::Add | ChangeType::Modify) {
            previous[i] = state.files.remove(&change.path);
        }
    }

    let mut records = Vec::with_capacity(pending.len());
    for (change, prev) in pending.into_iter().zip(previous) {
        if let Some(record) = apply_change(state, &commit_id, change, prev, &mut skipped) {
            records.push(record);
        }
    }

    state.totals.spread = spread_of(state.totals.total_h_token, state.totals.file_count);

    let record = CommitRecord {
        commit_id,
        position,
        timestamp: commit.time().seconds(),
        author_id: author_hash(commit),
        message_length: commit_message_chars(commit),
        is_merge: commit.parent_count() > 1,
        files_changed: records.len() as u64,
        insertions: records.iter().map(|r| r.insertions).sum(),
        deletions: records.iter().map(|r| r.deletions).sum(),
        totals: state.totals,
    };
    Ok((record, records, skipped))
}

struct PendingChange {
    path: String,
    old_path: String,
    change: ChangeType,
    insertions: u64,
    deletions: u64,
    methods_changed: u64,
    measurement: Option<FileMeasurement>,
}

/// Folds one measured change into the state, producing its record. The
/// previous state has already been detached from the live map. Returns `None`
/// for deletes of files that were never tracked (their add was skipped).
fn apply_change(
    state: &mut ProjectState,
    commit_id: &str,
    change: PendingChange,
    previous: Option<FileEntropyState>,
    skipped: &mut Vec<SkippedFile>,
) -> Option<FileChangeRecord> {
    if change.change == ChangeType::Delete && previous.is_none() {
        skipped.push(SkippedFile {
            commit_id: commit_id.to_string(),
            path: change.path,
            reason: "delete of untracked file (its addition was skipped)".to_string(),
        });
        return None;
    }

    let was_live = previous.is_some();
    let prev = previous.unwrap_or_default();
    let (new_state, nloc, token_count, cyclomatic) = match change.measurement {
        Some(m) => (Some(m.state), m.nloc, m.token_count, m.cyclomatic),
        None => (None, 0, 0, 0),
    };
    let zero = FileEntropyState::default();
    let current = new_state.as_ref().unwrap_or(&zero);

    let delta_h_token = current.h_token - prev.h_token;
    let delta_h_ast_edge = current.h_ast_edge - prev.h_ast_edge;
    let delta_h_ast_node = current.h_ast_node - prev.h_ast_node;

    // Incremental totals: fold this file's deltas in; track live-file count
    // by the actual state transition.
    state.totals.total_h_token += delta_h_token;
    state.totals.total_h_ast_edge += delta_h_ast_edge;
    state.totals.total_h_ast_node += delta_h_ast_node;
    let becomes_live = change.change != ChangeType::Delete && new_state.is_some();
    match (was_live, becomes_live) {
        (true, false) => state.totals.file_count -= 1,
        (false, true) => state.totals.file_count += 1,
        _ => {}
    }

    let record = FileChangeRecord {
        commit_id: commit_id.to_string(),
        file_path: change.path.clone(),
        old_path: change.old_path,
        change_type: change.change,
        insertions: change.insertions,
        deletions: change.deletions,
        nloc,
        token_count,
        cyclomatic,
        methods_changed: change.methods_changed,
        h_token: EntropyBits::new(current.h_token),
        h_token_no_comments: EntropyBits::new(current.h_token_no_comments),
        h_comments_only: EntropyBits::new(current.h_comments_only),
        h_token_no_kw_num: EntropyBits::new(current.h_token_no_kw_num),
        h_ast_node: EntropyBits::new(current.h_ast_node),
        h_ast_edge: EntropyBits::new(current.h_ast_edge),
        delta_h_token,
        delta_h_ast_edge,
        delta_h_ast_node,
    };

    if let Some(s) = new_state {
        state.files.insert(change.path, s);
    }
    Some(record)
}

/// Recomputes totals from scratch over every source file in the commit's
/// tree, in ascending path order.
fn recompute_totals(
    repo: &Repository,
    commit: &Commit<'_>,
    grammar: &dyn Grammar,
    tokenization: &TokenizationConfig,
) -> Result<ProjectTotals, MineError> {
    let tree = commit.tree()?;
    let mut paths = Vec::new();
    tree.walk(git2::TreeWalkMode::PreOrder, |dir, entry| {
        if entry.kind() == Some(git2::ObjectType::Blob) {
            let path = format!("{}{}", dir, entry.name().unwrap_or_default());
            if is_source(&path, grammar) {
                paths.push((path, entry.id()));
            }
        }
        git2::TreeWalkResult::Ok
    })?;
    paths.sort_by(|a, b| a.0.cmp(&b.0));

    let mut totals = ProjectTotals::default();
    for (_, oid) in paths {
        let bytes = blob_bytes(repo, oid);
        let Ok(m) = measure_file(&bytes, grammar, tokenization) else {
            continue; // mirrors the skip policy of the incremental path
        };
        totals.total_h_token += m.state.h_token;
        totals.total_h_ast_edge += m.state.h_ast_edge;
        totals.total_h_ast_node += m.state.h_ast_node;
        totals.file_count += 1;
    }
    totals.spread = spread_of(totals.total_h_token, totals.file_count);
    Ok(totals)
}

fn is_source(path: &str, grammar: &dyn Grammar) -> bool {
    grammar
        .file_extensions()
        .iter()
        .any(|ext| path.ends_with(ext))
}

fn blob_bytes(repo: &Repository, oid: Oid) -> Vec<u8> {
    if oid.is_zero() {
        return Vec::new();
    }
    repo.find_blob(oid)
        .map(|b| b.content().to_vec())
        .unwrap_or_default()
}

/// Measures one file version: the four word-histogram variants, the
/// structural profile, and the classic counts.
fn measure_file(
    content: &[u8],
    grammar: &dyn Grammar,
    tokenization: &TokenizationConfig,
) -> Result<FileMeasurement, String> {
    let text = decode_utf8(content).map_err(|e| e.to_string())?;
    let lexemes = grammar.lex(text);

    let words = words_from_lexemes(&lexemes, tokenization);
    let words_no_comments =
        words_from_lexemes(&lexemes, &TokenizationConfig::without_comments());
    let words_comments_only =
        words_from_lexemes(&lexemes, &TokenizationConfig::comments_only());
    let words_no_kw_num =
        words_from_lexemes(&lexemes, &TokenizationConfig::without_keywords_and_numbers());
    let token_count =
        words_from_lexemes(&lexemes, &TokenizationConfig::all_tokens()).len() as u64;

    let profile = parse_profile(content, grammar).map_err(|e| e.to_string())?;
    let (h_node, h_edge) = structural_entropy(&profile);

    let word_hist = words.histogram();
    let word_hist_no_comments = words_no_comments.histogram();
    let word_hist_comments_only = words_comments_only.histogram();
    let word_hist_no_kw_num = words_no_kw_num.histogram();

    let state = FileEntropyState {
        h_token: word_hist.shannon_entropy().bits(),
        h_token_no_comments: word_hist_no_comments.shannon_entropy().bits(),
        h_comments_only: word_hist_comments_only.shannon_entropy().bits(),
        h_token_no_kw_num: word_hist_no_kw_num.shannon_entropy().bits(),
        h_ast_node: h_node.bits(),
        h_ast_edge: h_edge.bits(),
        word_hist,
        word_hist_no_comments,
        word_hist_comments_only,
        word_hist_no_kw_num,
        node_hist: profile.node_hist,
        edge_hist: profile.edge_hist,
    };

    Ok(FileMeasurement {
        nloc: text.lines().filter(|l| !l.trim().is_empty()).count() as u64,
        token_count,
        cyclomatic: profile.file_cyclomatic as u64,
        state,
    })
}

/// The dataset's one-way author anonymization: the first 16 hex digits of
/// SHA-256 over `"name <email>"`. Stable across runs and machines.
pub fn anonymize_author(name: &str, email: &str) -> String {
    let digest = Sha256::digest(format!("{name} <{email}>").as_bytes());
    let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    hex[..16].to_string()
}

fn author_hash(commit: &Commit<'_>) -> String {
    let signature = commit.author();
    let name = String::from_utf8_lossy(signature.name_bytes());
    let email = String::from_utf8_lossy(signature.email_bytes());
    anonymize_author(&name, &email)
}

fn commit_message_chars(commit: &Commit<'_>) -> u64 {
    String::from_utf8_lossy(commit.message_bytes()).chars().count() as u64
}
