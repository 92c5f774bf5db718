//! An independent reference miner used to cross-check the library's
//! repository traversal.
//!
//! Everything that the mining layer is responsible for — linearization, diff
//! extraction, rename handling, per-file state, delta bookkeeping — is redone
//! here from first principles on top of the `git` command-line tool, handling
//! each commit's files one by one. Only the pure per-file measurement
//! functions (tokenization, parsing) are shared with the library; those are
//! pinned by their own hand-built fixtures.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;

use entrospect_core::lex::{decode_utf8, words_from_lexemes, TokenizationConfig};
use entrospect_core::miner::anonymize_author;
use entrospect_core::records::{
    ChangeType, CommitRecord, FileChangeRecord, ProjectTotals, SeriesPoint,
};
use entrospect_core::syntax::{changed_methods, parse_profile, structural_entropy};
use entrospect_core::{EntropyBits, Grammar};

const EMPTY_TREE: &str = "4b825dc642cb6eb9a060e54bf8d69288fbee4904";

fn git_bytes(repo: &Path, args: &[&str]) -> Vec<u8> {
    let out = Command::new("git")
        .arg("-C")
        .arg(repo)
        .args(args)
        .output()
        .expect("git must be runnable");
    assert!(
        out.status.success(),
        "git {:?} failed: {}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    out.stdout
}

fn git(repo: &Path, args: &[&str]) -> String {
    String::from_utf8(git_bytes(repo, args)).expect("utf-8 git output")
}

struct CommitMeta {
    parents: Vec<String>,
    author_name: String,
    author_email: String,
    committer_time: i64,
    message: Vec<u8>,
}

/// Parses `git cat-file commit` output: headers, blank line, raw message.
fn commit_meta(repo: &Path, id: &str) -> CommitMeta {
    let raw = git_bytes(repo, &["cat-file", "commit", id]);
    let split = raw
        .windows(2)
        .position(|w| w == b"\n\n")
        .expect("commit object has a header/message separator");
    let headers = String::from_utf8_lossy(&raw[..split]).into_owned();
    let message = raw[split + 2..].to_vec();

    let mut parents = Vec::new();
    let mut author_name = String::new();
    let mut author_email = String::new();
    let mut committer_time = 0i64;
    for line in headers.lines() {
        if let Some(p) = line.strip_prefix("parent ") {
            parents.push(p.to_string());
        } else if let Some(rest) = line.strip_prefix("author ") {
            let (name, email, _) = parse_signature(rest);
            author_name = name;
            author_email = email;
        } else if let Some(rest) = line.strip_prefix("committer ") {
            let (_, _, time) = parse_signature(rest);
            committer_time = time;
        }
    }
    CommitMeta {
        parents,
        author_name,
        author_email,
        committer_time,
        message,
    }
}

/// `Name <email> 1577836800 +0000` → (name, email, timestamp).
fn parse_signature(rest: &str) -> (String, String, i64) {
    let open = rest.find(" <").expect("signature has an email");
    let close = rest.find('>').expect("signature closes the email");
    let name = rest[..open].to_string();
    let email = rest[open + 2..close].to_string();
    let tail: Vec<&str> = rest[close + 1..].split_whitespace().collect();
    let time = tail[0].parse().expect("signature timestamp");
    (name, email, time)
}

#[derive(Debug)]
struct RawDelta {
    status: char,
    old_sha: String,
    new_sha: String,
    old_path: String,
    new_path: String,
    insertions: u64,
    deletions: u64,
}

/// Parses `diff-tree -r -M -z --raw` plus `--numstat` for one commit pair.
fn diff_deltas(repo: &Path, base: &str, commit: &str) -> Vec<RawDelta> {
    let raw = git(repo, &["diff-tree", "-r", "-M", "-z", "--raw", base, commit]);
    let mut fields = raw.split('\0');
    let mut deltas = Vec::new();
    while let Some(meta) = fields.next() {
        if meta.is_empty() {
            break;
        }
        let meta = meta.strip_prefix(':').expect("raw entry starts with ':'");
        let parts: Vec<&str> = meta.split(' ').collect();
        let (old_sha, new_sha, status_field) = (parts[2], parts[3], parts[4]);
        let status = status_field.chars().next().unwrap();
        let first_path = fields.next().expect("raw entry path").to_string();
        let (old_path, new_path) = if status == 'R' || status == 'C' {
            let second = fields.next().expect("rename target path").to_string();
            (first_path, second)
        } else {
            (first_path.clone(), first_path)
        };
        deltas.push(RawDelta {
            status,
            old_sha: old_sha.to_string(),
            new_sha: new_sha.to_string(),
            old_path,
            new_path,
            insertions: 0,
            deletions: 0,
        });
    }

    let numstat = git(repo, &["diff-tree", "-r", "-M", "-z", "--numstat", base, commit]);
    let mut fields = numstat.split('\0');
    let mut stats: BTreeMap<(String, String), (u64, u64)> = BTreeMap::new();
    while let Some(head) = fields.next() {
        if head.is_empty() {
            break;
        }
        let mut cols = head.split('\t');
        let ins = cols.next().unwrap();
        let del = cols.next().unwrap();
        let path = cols.next().unwrap();
        // "-" marks binary files; the fixtures contain none.
        let ins: u64 = ins.parse().unwrap_or(0);
        let del: u64 = del.parse().unwrap_or(0);
        let key = if path.is_empty() {
            let old = fields.next().expect("numstat old path").to_string();
            let new = fields.next().expect("numstat new path").to_string();
            (old, new)
        } else {
            (path.to_string(), path.to_string())
        };
        stats.insert(key, (ins, del));
    }

    for delta in &mut deltas {
        if let Some(&(ins, del)) =
            stats.get(&(delta.old_path.clone(), delta.new_path.clone()))
        {
            delta.insertions = ins;
            delta.deletions = del;
        }
    }
    deltas
}

fn blob(repo: &Path, sha: &str) -> Vec<u8> {
    if sha.chars().all(|c| c == '0') {
        return Vec::new();
    }
    git_bytes(repo, &["cat-file", "blob", sha])
}

/// Per-file entropies tracked by the oracle's own state map.
#[derive(Debug, Clone, Copy, Default)]
struct FileEntropies {
    h_token: f64,
    h_token_no_comments: f64,
    h_comments_only: f64,
    h_token_no_kw_num: f64,
    h_ast_node: f64,
    h_ast_edge: f64,
}

struct Measured {
    entropies: FileEntropies,
    nloc: u64,
    token_count: u64,
    cyclomatic: u64,
}

fn measure(content: &[u8], grammar: &dyn Grammar) -> Option<Measured> {
    let text = decode_utf8(content).ok()?;
    let lexemes = grammar.lex(text);
    let words = |config: &TokenizationConfig| words_from_lexemes(&lexemes, config);
    let profile = parse_profile(content, grammar).ok()?;
    let (h_node, h_edge) = structural_entropy(&profile);
    Some(Measured {
        entropies: FileEntropies {
            h_token: words(&TokenizationConfig::all_tokens())
                .histogram()
                .shannon_entropy()
                .bits(),
            h_token_no_comments: words(&TokenizationConfig::without_comments())
                .histogram()
                .shannon_entropy()
                .bits(),
            h_comments_only: words(&TokenizationConfig::comments_only())
                .histogram()
                .shannon_entropy()
                .bits(),
            h_token_no_kw_num: words(&TokenizationConfig::without_keywords_and_numbers())
                .histogram()
                .shannon_entropy()
                .bits(),
            h_ast_node: h_node.bits(),
            h_ast_edge: h_edge.bits(),
        },
        nloc: text.lines().filter(|l| !l.trim().is_empty()).count() as u64,
        token_count: words(&TokenizationConfig::all_tokens()).len() as u64,
        cyclomatic: profile.file_cyclomatic as u64,
    })
}

fn is_source(path: &str, grammar: &dyn Grammar) -> bool {
    grammar.file_extensions().iter().any(|e| path.ends_with(e))
}

pub struct OracleOutput {
    pub commits: Vec<CommitRecord>,
    pub file_changes: Vec<FileChangeRecord>,
    pub series: Vec<SeriesPoint>,
}

/// Mines the repository with the reference procedure: first-parent ids from
/// `git rev-list --reverse`, per-commit diffs from `git diff-tree`, file
/// contents from `git cat-file`, and freshly recomputed per-file metrics.
pub fn oracle_mine(repo: &Path, branch: &str, grammar: &dyn Grammar) -> OracleOutput {
    let ids_text = git(repo, &["rev-list", "--first-parent", "--reverse", branch]);
    let ids: Vec<&str> = ids_text.split_whitespace().collect();

    let mut state: BTreeMap<String, FileEntropies> = BTreeMap::new();
    let mut totals = ProjectTotals::default();
    let mut output = OracleOutput {
        commits: Vec::new(),
        file_changes: Vec::new(),
        series: Vec::new(),
    };

    for (position, id) in ids.iter().enumerate() {
        let meta = commit_meta(repo, id);
        let base = meta.parents.first().map(String::as_str).unwrap_or(EMPTY_TREE);
        let deltas = diff_deltas(repo, base, id);

        struct Pending {
            path: String,
            old_path: String,
            change: ChangeType,
            insertions: u64,
            deletions: u64,
            methods_changed: u64,
            measured: Option<Measured>,
        }

        let mut pending = Vec::new();
        for delta in deltas {
            let old_src = is_source(&delta.old_path, grammar);
            let new_src = is_source(&delta.new_path, grammar);
            let change = match delta.status {
                'A' | 'C' if new_src => ChangeType::Add,
                'D' if old_src => ChangeType::Delete,
                'M' | 'T' if new_src => ChangeType::Modify,
                'R' if old_src && new_src => ChangeType::Rename,
                'R' if new_src => ChangeType::Add,
                'R' if old_src => ChangeType::Delete,
                _ => continue,
            };
            let before = if change == ChangeType::Add {
                Vec::new()
            } else {
                blob(repo, &delta.old_sha)
            };
            let after = if change == ChangeType::Delete {
                Vec::new()
            } else {
                blob(repo, &delta.new_sha)
            };
            let measured = if change == ChangeType::Delete {
                None
            } else {
                match measure(&after, grammar) {
                    Some(m) => Some(m),
                    None => continue, // unreadable: skipped, not recorded
                }
            };
            pending.push(Pending {
                path: if change == ChangeType::Delete {
                    delta.old_path.clone()
                } else {
                    delta.new_path.clone()
                },
                old_path: if change == ChangeType::Rename {
                    delta.old_path.clone()
                } else {
                    String::new()
                },
                change,
                insertions: delta.insertions,
                deletions: delta.deletions,
                methods_changed: changed_methods(&before, &after, grammar).unwrap_or(0) as u64,
                measured,
            });
        }
        pending.sort_by(|a, b| a.path.cmp(&b.path));

        // Detach previous states: renames/deletes first (old paths), then
        // adds/modifies (current paths).
        let mut previous: Vec<Option<FileEntropies>> = vec![None; pending.len()];
        for (i, p) in pending.iter().enumerate() {
            match p.change {
                ChangeType::Rename => previous[i] = state.remove(&p.old_path),
                ChangeType::Delete => previous[i] = state.remove(&p.path),
                _ => {}
            }
        }
        for (i, p) in pending.iter().enumerate() {
            if matches!(p.change, ChangeType::Add | ChangeType::Modify) {
                previous[i] = state.remove(&p.path);
            }
        }

        let mut records = Vec::new();
        for (p, previous) in pending.into_iter().zip(previous) {
            if p.change == ChangeType::Delete && previous.is_none() {
                continue;
            }
            let was_live = previous.is_some();
            let prev = previous.unwrap_or_default();
            let current = p
                .measured
                .as_ref()
                .map(|m| m.entropies)
                .unwrap_or_default();

            let delta_h_token = current.h_token - prev.h_token;
            let delta_h_ast_edge = current.h_ast_edge - prev.h_ast_edge;
            let delta_h_ast_node = current.h_ast_node - prev.h_ast_node;
            totals.total_h_token += delta_h_token;
            totals.total_h_ast_edge += delta_h_ast_edge;
            totals.total_h_ast_node += delta_h_ast_node;
            let becomes_live = p.change != ChangeType::Delete && p.measured.is_some();
            match (was_live, becomes_live) {
                (true, false) => totals.file_count -= 1,
                (false, true) => totals.file_count += 1,
                _ => {}
            }

            let (nloc, token_count, cyclomatic) = p
                .measured
                .as_ref()
                .map(|m| (m.nloc, m.token_count, m.cyclomatic))
                .unwrap_or((0, 0, 0));

            records.push(FileChangeRecord {
                commit_id: id.to_string(),
                file_path: p.path.clone(),
                old_path: p.old_path,
                change_type: p.change,
                insertions: p.insertions,
                deletions: p.deletions,
                nloc,
                token_count,
                cyclomatic,
                methods_changed: p.methods_changed,
                h_token: EntropyBits::new(current.h_token),
                h_token_no_comments: EntropyBits::new(current.h_token_no_comments),
                h_comments_only: EntropyBits::new(current.h_comments_only),
                h_token_no_kw_num: EntropyBits::new(current.h_token_no_kw_num),
                h_ast_node: EntropyBits::new(current.h_ast_node),
                h_ast_edge: EntropyBits::new(current.h_ast_edge),
                delta_h_token,
                delta_h_ast_edge,
                delta_h_ast_node,
            });
            if becomes_live {
                state.insert(p.path, current);
            }
        }

        totals.spread = if totals.file_count == 0 {
            0.0
        } else {
            totals.total_h_token / totals.file_count as f64
        };

        let commit = CommitRecord {
            commit_id: id.to_string(),
            position: position as u64,
            timestamp: meta.committer_time,
            author_id: anonymize_author(&meta.author_name, &meta.author_email),
            message_length: String::from_utf8_lossy(&meta.message).chars().count() as u64,
            is_merge: meta.parents.len() > 1,
            files_changed: records.len() as u64,
            insertions: records.iter().map(|r| r.insertions).sum(),
            deletions: records.iter().map(|r| r.deletions).sum(),
            totals,
        };
        output
            .series
            .push(SeriesPoint::from_totals(id.to_string(), position as u64, &totals));
        output.commits.push(commit);
        output.file_changes.extend(records);
    }
    output
}
