//! Miner behavior against scripted repositories: linearization, merge
//! handling, the source-file filter, skip policy, and the bookkeeping
//! invariants.

mod support;

use entrospect_core::miner::{linearize_history, mine, MineConfig, ProjectState};
use entrospect_core::records::ChangeType;
use entrospect_core::GrammarRegistry;
use support::RepoBuilder;

fn registry() -> GrammarRegistry {
    GrammarRegistry::with_builtins()
}

fn temp_repo() -> (tempfile::TempDir, std::path::PathBuf) {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("repo");
    std::fs::create_dir_all(&path).unwrap();
    (tmp, path)
}

#[test]
fn linearizes_the_fixture_chain_oldest_first() {
    let fixture = support::build_fixture_repo();
    let repo = git2::Repository::open(&fixture.path).unwrap();
    let chain = linearize_history(&repo, Some("main")).unwrap();
    assert_eq!(chain.len(), 20);
    // Oldest first: position 0 must be the root commit.
    let root = repo.find_commit(chain[0]).unwrap();
    assert_eq!(root.parent_count(), 0);
    // Exactly one merge on the chain, appearing once.
    let merges = chain
        .iter()
        .filter(|id| repo.find_commit(**id).unwrap().parent_count() > 1)
        .count();
    assert_eq!(merges, 1);
    let mut seen = std::collections::BTreeSet::new();
    assert!(chain.iter().all(|id| seen.insert(*id)), "duplicate commit in chain");
}

#[test]
fn single_commit_repository_yields_one_id() {
    let (_tmp, path) = temp_repo();
    let mut builder = RepoBuilder::init(&path);
    builder.write("A.java", "class A {}\n");
    builder.commit("only");
    let repo = git2::Repository::open(&path).unwrap();
    assert_eq!(linearize_history(&repo, None).unwrap().len(), 1);
}

#[test]
fn missing_branch_is_reported() {
    let fixture = support::build_fixture_repo();
    let repo = git2::Repository::open(&fixture.path).unwrap();
    let err = linearize_history(&repo, Some("nope")).err().unwrap();
    assert!(err.to_string().contains("branch `nope` not found"));
}

#[test]
fn empty_repository_mines_to_empty_output() {
    let (_tmp, path) = temp_repo();
    RepoBuilder::init(&path);
    let output = mine(&path, &registry(), &MineConfig::default()).unwrap();
    assert!(output.commits.is_empty());
    assert!(output.file_changes.is_empty());
    assert!(output.series.is_empty());
}

#[test]
fn nonexistent_path_is_a_clear_error() {
    let err = mine(
        std::path::Path::new("/definitely/not/a/repo"),
        &registry(),
        &MineConfig::default(),
    )
    .err()
    .unwrap();
    assert!(err.to_string().contains("repository not found"));
}

#[test]
fn non_source_files_produce_no_records() {
    let (_tmp, path) = temp_repo();
    let mut builder = RepoBuilder::init(&path);
    builder.write("notes.md", "# notes\n");
    builder.commit("one");
    builder.write("data.csv", "a,b\n1,2\n");
    builder.commit("two");
    let output = mine(&path, &registry(), &MineConfig::default()).unwrap();
    assert_eq!(output.commits.len(), 2);
    assert!(output.file_changes.is_empty());
    assert!(output
        .commits
        .iter()
        .all(|c| c.files_changed == 0 && c.totals.total_h_token == 0.0));
}

#[test]
fn undecodable_source_is_skipped_then_tracked_once_fixed() {
    let (_tmp, path) = temp_repo();
    let mut builder = RepoBuilder::init(&path);
    builder.write_bytes("Bad.java", &[0xFF, 0xFE, 0x00, 0x80, b'}']);
    builder.commit("binary blob");
    builder.write("Bad.java", "class Bad {}\n");
    builder.commit("now decodable");

    let output = mine(&path, &registry(), &MineConfig::default()).unwrap();
    assert_eq!(output.skipped.len(), 1);
    assert!(output.skipped[0].reason.contains("UTF-8"));
    assert_eq!(output.commits[0].files_changed, 0);
    assert_eq!(output.commits[0].totals.file_count, 0);

    // The fix arrives as a MODIFY but is accounted as the file's first
    // appearance: delta equals the full current entropy.
    assert_eq!(output.file_changes.len(), 1);
    let record = &output.file_changes[0];
    assert_eq!(record.change_type, ChangeType::Modify);
    assert_eq!(record.delta_h_token, record.h_token.bits());
    assert_eq!(output.commits[1].totals.file_count, 1);
}

#[test]
fn deleting_a_never_tracked_file_is_skipped_not_recorded() {
    let (_tmp, path) = temp_repo();
    let mut builder = RepoBuilder::init(&path);
    builder.write_bytes("Bad.java", &[0xC3, 0x28]); // invalid two-byte sequence
    builder.commit("binary blob");
    builder.git(&["rm", "--quiet", "Bad.java"]);
    builder.commit("remove blob");

    let output = mine(&path, &registry(), &MineConfig::default()).unwrap();
    assert!(output.file_changes.is_empty());
    assert_eq!(output.skipped.len(), 2); // the unreadable add, then the orphan delete
    assert!(output.skipped[1].reason.contains("untracked"));
    assert!(output.commits.iter().all(|c| c.totals.file_count == 0));
}

#[test]
fn rename_across_the_extension_boundary_degrades() {
    let (_tmp, path) = temp_repo();
    let mut builder = RepoBuilder::init(&path);
    builder.write("Keep.java", "class Keep { int f() { return 1; } }\n");
    builder.commit("add");
    builder.git(&["mv", "Keep.java", "Keep.txt"]);
    builder.commit("convert to text");

    let output = mine(&path, &registry(), &MineConfig::default()).unwrap();
    let last = output.file_changes.last().unwrap();
    assert_eq!(last.change_type, ChangeType::Delete);
    assert_eq!(last.file_path, "Keep.java");
    assert_eq!(output.commits[1].totals.file_count, 0);
    assert_eq!(output.commits[1].totals.total_h_token, 0.0);
}

#[test]
fn merge_commit_diffs_against_its_first_parent() {
    let fixture = support::build_fixture_repo();
    let output = mine(&fixture.path, &registry(), &MineConfig::default()).unwrap();
    let merge = output.commits.iter().find(|c| c.is_merge).unwrap();
    assert_eq!(merge.position, 12);
    // The merge brings the feature branch's file relative to the mainline.
    let brought: Vec<_> = output
        .file_changes
        .iter()
        .filter(|r| r.commit_id == merge.commit_id)
        .collect();
    assert_eq!(brought.len(), 1);
    assert_eq!(brought[0].file_path, "src/Feature.java");
    assert_eq!(brought[0].change_type, ChangeType::Add);
}

#[test]
fn rename_keeps_totals_within_the_content_delta() {
    let fixture = support::build_fixture_repo();
    let output = mine(&fixture.path, &registry(), &MineConfig::default()).unwrap();
    let rename = output
        .file_changes
        .iter()
        .find(|r| r.change_type == ChangeType::Rename)
        .unwrap();
    assert_eq!(rename.old_path, "src/Util.java");
    assert_eq!(rename.file_path, "src/TextUtil.java");
    // Pure rename: no content change, no entropy movement.
    assert_eq!(rename.delta_h_token, 0.0);
    assert_eq!(rename.delta_h_ast_edge, 0.0);
    let commit = output
        .commits
        .iter()
        .find(|c| c.commit_id == rename.commit_id)
        .unwrap();
    let prev = &output.commits[commit.position as usize - 1];
    assert_eq!(commit.totals.total_h_token, prev.totals.total_h_token);
    assert_eq!(commit.totals.file_count, prev.totals.file_count);
}

#[test]
fn deltas_telescope_exactly_into_totals() {
    let fixture = support::build_fixture_repo();
    let output = mine(&fixture.path, &registry(), &MineConfig::default()).unwrap();
    let mut total = 0.0f64;
    for commit in &output.commits {
        for record in output
            .file_changes
            .iter()
            .filter(|r| r.commit_id == commit.commit_id)
        {
            total += record.delta_h_token;
        }
        assert_eq!(
            total, commit.totals.total_h_token,
            "telescoping broke at position {}",
            commit.position
        );
    }
}

#[test]
fn add_then_delete_restores_prior_totals() {
    let (_tmp, path) = temp_repo();
    let mut builder = RepoBuilder::init(&path);
    builder.write("Base.java", "class Base { void a() { } }\n");
    builder.commit("base");
    builder.write("Extra.java", "class Extra { int b() { return 2; } }\n");
    builder.commit("add extra");
    builder.git(&["rm", "--quiet", "Extra.java"]);
    builder.commit("drop extra");

    let output = mine(&path, &registry(), &MineConfig::default()).unwrap();
    let t0 = output.commits[0].totals;
    let t1 = output.commits[1].totals;
    let t2 = output.commits[2].totals;
    let added = output.file_changes[1].h_token.bits();
    assert_eq!(t1.total_h_token, t0.total_h_token + added);
    assert_eq!(t1.file_count, 2);
    assert_eq!(t2.total_h_token, t0.total_h_token);
    assert_eq!(t2.file_count, 1);
}

#[test]
fn tokenization_config_moves_h_token_but_not_the_fixed_columns() {
    let (_tmp, path) = temp_repo();
    let mut builder = RepoBuilder::init(&path);
    builder.write(
        "Doc.java",
        "// grow the cache lazily\nclass Doc { int size = 4; }\n",
    );
    builder.commit("add");

    let default_run = mine(&path, &registry(), &MineConfig::default()).unwrap();
    let comments_only = mine(
        &path,
        &registry(),
        &MineConfig {
            tokenization: entrospect_core::TokenizationConfig::comments_only(),
            ..Default::default()
        },
    )
    .unwrap();

    let a = &default_run.file_changes[0];
    let b = &comments_only.file_changes[0];
    // The primary column and the totals follow the run configuration.
    assert_eq!(b.h_token, b.h_comments_only);
    assert_ne!(a.h_token, b.h_token);
    assert_eq!(
        comments_only.commits[0].totals.total_h_token,
        b.h_token.bits()
    );
    // The fixed variant columns and the all-inclusive token count do not.
    assert_eq!(a.h_comments_only, b.h_comments_only);
    assert_eq!(a.h_token_no_comments, b.h_token_no_comments);
    assert_eq!(a.token_count, b.token_count);
}

#[test]
fn a_registered_plugin_grammar_drives_the_extension_filter() {
    // A second grammar registered at runtime: Java's rules under a different
    // id and extension. The miner must follow the configured grammar.
    struct Jx(entrospect_core::JavaGrammar);
    impl entrospect_core::Grammar for Jx {
        fn id(&self) -> &str {
            "jx"
        }
        fn file_extensions(&self) -> &[&str] {
            &[".jx"]
        }
        fn lex<'s>(&self, source: &'s str) -> Vec<entrospect_core::lex::Lexeme<'s>> {
            self.0.lex(source)
        }
        fn language(&self) -> tree_sitter::Language {
            self.0.language()
        }
        fn structure(&self) -> &entrospect_core::grammar::StructureRules {
            self.0.structure()
        }
    }

    let (_tmp, path) = temp_repo();
    let mut builder = RepoBuilder::init(&path);
    builder.write("Main.jx", "class Main { void go() { run(); } }\n");
    builder.write("Main.java", "class Main { void go() { run(); } }\n");
    builder.commit("one of each");

    let mut extended = registry();
    extended.register(std::sync::Arc::new(Jx(entrospect_core::JavaGrammar::new())));

    let config = MineConfig {
        grammar: "jx".to_string(),
        ..Default::default()
    };
    let output = mine(&path, &extended, &config).unwrap();
    assert_eq!(output.file_changes.len(), 1);
    assert_eq!(output.file_changes[0].file_path, "Main.jx");
    assert!(output.file_changes[0].h_token.bits() > 0.0);

    let builtins_only = registry();
    let err = mine(&path, &builtins_only, &config).err().unwrap();
    assert!(err.to_string().contains("unknown grammar `jx`"));
}

#[test]
fn mining_is_deterministic() {
    let fixture = support::build_fixture_repo();
    let a = mine(&fixture.path, &registry(), &MineConfig::default()).unwrap();
    let b = mine(&fixture.path, &registry(), &MineConfig::default()).unwrap();
    assert_eq!(a.commits, b.commits);
    assert_eq!(a.file_changes, b.file_changes);
    assert_eq!(a.series, b.series);
}

#[test]
fn project_state_totals_match_state_map_sum() {
    let fixture = support::build_fixture_repo();
    let repo = git2::Repository::open(&fixture.path).unwrap();
    let registry = registry();
    let grammar = registry.get("java").unwrap();
    let chain = linearize_history(&repo, None).unwrap();
    let mut state = ProjectState::new();
    for (position, oid) in chain.iter().enumerate() {
        let commit = repo.find_commit(*oid).unwrap();
        entrospect_core::miner::analyze_commit(
            &repo,
            &mut state,
            &commit,
            position as u64,
            grammar.as_ref(),
            &entrospect_core::TokenizationConfig::all_tokens(),
        )
        .unwrap();
        let running = state.totals();
        let summed = state.totals_from_state();
        assert!((running.total_h_token - summed.total_h_token).abs() < 1e-9);
        assert!((running.total_h_ast_edge - summed.total_h_ast_edge).abs() < 1e-9);
        assert_eq!(running.file_count, summed.file_count);
    }
}
