//! Shared test support: a deterministic fixture repository built with the
//! `git` CLI, and an independent oracle miner (`oracle` submodule).
//!
//! Every commit is pinned to fixed author/committer identities and
//! timestamps, so commit ids — and therefore golden files — are stable across
//! machines and runs.
#![allow(dead_code)] // each test target uses a different slice of this module

pub mod oracle;

use std::path::{Path, PathBuf};
use std::process::Command;

pub const BASE_TIME: i64 = 1_577_836_800; // 2020-01-01T00:00:00Z
const AUTHORS: [(&str, &str); 2] = [
    ("Alice Dev", "alice@example.com"),
    ("Bob Dev", "bob@example.com"),
];

pub struct FixtureRepo {
    _tmp: tempfile::TempDir,
    pub path: PathBuf,
}

pub struct RepoBuilder {
    path: PathBuf,
    ticks: i64,
}

impl RepoBuilder {
    pub fn init(path: &Path) -> Self {
        let builder = RepoBuilder {
            path: path.to_path_buf(),
            ticks: 0,
        };
        builder.git(&["init", "--initial-branch=main", "--quiet"]);
        builder
    }

    pub fn git(&self, args: &[&str]) -> String {
        self.git_at(args, BASE_TIME + self.ticks * 100)
    }

    fn git_at(&self, args: &[&str], time: i64) -> String {
        let (name, email) = AUTHORS[(self.ticks as usize) % AUTHORS.len()];
        let date = format!("{time} +0000");
        let out = Command::new("git")
            .arg("-C")
            .arg(&self.path)
            .args(["-c", "commit.gpgsign=false", "-c", "core.autocrlf=false"])
            .args(args)
            .env("GIT_AUTHOR_NAME", name)
            .env("GIT_AUTHOR_EMAIL", email)
            .env("GIT_AUTHOR_DATE", &date)
            .env("GIT_COMMITTER_NAME", name)
            .env("GIT_COMMITTER_EMAIL", email)
            .env("GIT_COMMITTER_DATE", &date)
            .env("HOME", self.path.display().to_string()) // isolate from global config
            .output()
            .expect("git must be runnable");
        assert!(
            out.status.success(),
            "git {:?} failed: {}",
            args,
            String::from_utf8_lossy(&out.stderr)
        );
        String::from_utf8_lossy(&out.stdout).into_owned()
    }

    pub fn write(&self, rel: &str, content: &str) {
        self.write_bytes(rel, content.as_bytes());
    }

    pub fn write_bytes(&self, rel: &str, content: &[u8]) {
        let full = self.path.join(rel);
        if let Some(parent) = full.parent() {
            std::fs::create_dir_all(parent).unwrap();
        }
        std::fs::write(full, content).unwrap();
    }

    pub fn commit(&mut self, message: &str) {
        self.git(&["add", "-A"]);
        self.git(&["commit", "--quiet", "--allow-empty", "-m", message]);
        self.ticks += 1;
    }

    pub fn merge(&mut self, branch: &str, message: &str) {
        self.git(&["merge", "--no-ff", "--quiet", "-m", message, branch]);
        self.ticks += 1;
    }
}

const DATA_ACCESS_V1: &str = "public class DataAccess {\n    private Database db;\n\n    public void softDelete(int id) {\n        db.mark(id);\n    }\n\n    public void hardDelete(int id) {\n        db.remove(id);\n    }\n}\n";

const DATA_ACCESS_V2: &str = "public class DataAccess {\n    private Database db;\n\n    public void softDelete(int id) {\n        if (db.has(id)) {\n            db.mark(id);\n        }\n    }\n\n    public void hardDelete(int id) {\n        db.remove(id);\n    }\n}\n";

const DATA_ACCESS_V3: &str = "public class DataAccess {\n    private Database db;\n    private AuditLog audit;\n\n    public void softDelete(int id) {\n        if (db.has(id)) {\n            db.mark(id);\n            audit.record(id);\n        }\n    }\n\n    public void hardDelete(int id) {\n        db.remove(id);\n        audit.record(id);\n    }\n}\n";

const LOGIN_V1: &str = "class Login {\n    boolean check(String user, String pass) {\n        return user.length() > 0 && pass.length() > 7;\n    }\n}\n";

const LOGIN_V2: &str = "class Login {\n    // reject blank users early\n    boolean check(String user, String pass) {\n        if (user.isBlank()) {\n            return false;\n        }\n        return pass.length() > 7;\n    }\n}\n";

const UTIL_V1: &str = "class Util {\n    static String trimAll(String text) {\n        return text.trim();\n    }\n}\n";

const UTIL_V2: &str = "class Util {\n    static String trimAll(String text) {\n        return text.strip();\n    }\n\n    static boolean isEmpty(String text) {\n        return text == null || text.isEmpty();\n    }\n}\n";

const TEXT_UTIL_V2: &str = "class TextUtil {\n    static String trimAll(String text) {\n        return text.strip();\n    }\n\n    static boolean isEmpty(String text) {\n        return text == null || text.isEmpty();\n    }\n\n    static String firstLine(String text) {\n        int cut = text.indexOf('\\n');\n        return cut < 0 ? text : text.substring(0, cut);\n    }\n}\n";

const METRICS_V1: &str = "class Metrics {\n    /* counts requests per window */\n    long total = 0L;\n\n    void hit() {\n        total += 1;\n    }\n}\n";

const METRICS_V2: &str = "class Metrics {\n    /* counts requests per window */\n    long total = 0L;\n    long errors = 0L;\n\n    void hit() {\n        total += 1;\n    }\n\n    void fail() {\n        errors += 1;\n        total += 1;\n    }\n}\n";

const PARSER_BROKEN: &str = "class Parser {\n    Token next( {\n        return scan();\n    }\n}\n";

const PARSER_FIXED: &str = "class Parser {\n    Token next() {\n        return scan();\n    }\n\n    Token scan() {\n        return Token.EOF;\n    }\n}\n";

const FEATURE: &str = "class Feature {\n    // toggled remotely\n    boolean active(String key) {\n        return key.hashCode() % 2 == 0;\n    }\n}\n";

const CACHE: &str = "class Cache {\n    java.util.Map<String, String> store = new java.util.HashMap<>();\n\n    String get(String key) {\n        return store.get(key);\n    }\n}\n";

const EVENTS_V1: &str = "class Events {\n    void emit(String name) {\n        System.out.println(name);\n    }\n}\n";

const EVENTS_V2: &str = "class Events {\n    void emit(String name) {\n        System.out.println(name);\n    }\n\n    void emitAll(String[] names) {\n        for (String n : names) {\n            emit(n);\n        }\n    }\n}\n";

const WIDE_V1: &str = "class Wide {\n    // grüße aus München\n    String greet() {\n        return \"Привет мир\";\n    }\n}\n";

const WIDE_V2: &str = "class Wide {\n    // grüße aus München\n    String greet() {\n        return \"Привет мир\";\n    }\n\n    String bow() {\n        return \"こんにちは\";\n    }\n}\n";

/// Builds the standard 20-commit fixture: adds, edits, a rename, deletes,
/// one merge, and commits touching no source files. The first-parent chain
/// of `main` holds exactly 20 commits; one extra commit lives on the merged
/// `feature` branch.
pub fn build_fixture_repo() -> FixtureRepo {
    let tmp = tempfile::tempdir().expect("tempdir");
    let path = tmp.path().join("repo");
    std::fs::create_dir_all(&path).unwrap();
    let mut repo = RepoBuilder::init(&path);

    repo.write("README.md", "# demo project\n");
    repo.commit("add readme"); // c0, no source files

    repo.write("src/DataAccess.java", DATA_ACCESS_V1);
    repo.commit("add data access"); // c1

    repo.write("src/Login.java", LOGIN_V1);
    repo.write("src/Util.java", UTIL_V1);
    repo.commit("add login and util"); // c2

    repo.write("src/Util.java", UTIL_V2);
    repo.commit("grow util"); // c3

    repo.write("src/Metrics.java", METRICS_V1);
    repo.commit("add metrics"); // c4

    repo.write("README.md", "# demo project\n\nUsage notes.\n");
    repo.commit("document usage"); // c5, no source files

    repo.write("src/DataAccess.java", DATA_ACCESS_V2);
    repo.write("src/Login.java", LOGIN_V2);
    repo.commit("harden deletes and login"); // c6

    repo.write("src/Parser.java", PARSER_BROKEN);
    repo.commit("start parser"); // c7, recoverable syntax error

    repo.write("src/Parser.java", PARSER_FIXED);
    repo.commit("finish parser"); // c8

    repo.git(&["mv", "src/Util.java", "src/TextUtil.java"]);
    repo.commit("rename util"); // c9, pure rename

    repo.write("src/TextUtil.java", TEXT_UTIL_V2);
    repo.commit("extend text util"); // c10

    repo.git(&["checkout", "--quiet", "-b", "feature"]);
    repo.write("src/Feature.java", FEATURE);
    repo.commit("feature work"); // on feature, off the first-parent chain

    repo.git(&["checkout", "--quiet", "main"]);
    repo.write("src/Cache.java", CACHE);
    repo.commit("add cache"); // c11

    repo.merge("feature", "merge feature"); // c12, merge commit

    repo.git(&["rm", "--quiet", "src/Login.java"]);
    repo.commit("drop login"); // c13, delete

    repo.write("src/Metrics.java", METRICS_V2);
    repo.commit("extend metrics"); // c14

    repo.write("src/Events.java", EVENTS_V1);
    repo.commit("add events"); // c15

    repo.write("src/DataAccess.java", DATA_ACCESS_V3);
    repo.commit("audit data access"); // c16

    repo.write("src/Events.java", EVENTS_V2);
    repo.git(&["rm", "--quiet", "src/Parser.java"]);
    repo.commit("replace parser with events"); // c17, edit + delete

    repo.write("src/Wide.java", WIDE_V1);
    repo.commit("add wide chars"); // c18

    repo.write("src/Wide.java", WIDE_V2);
    repo.write("README.md", "# demo project\n\nUsage notes.\n\nSee docs.\n");
    repo.commit("polish"); // c19, source + non-source

    FixtureRepo { _tmp: tmp, path }
}
