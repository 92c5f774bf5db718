//! Measures the information content of source code across a repository's
//! commit history.
//!
//! The pipeline: tokenize and parse every file a commit touches, build symbol
//! histograms (words, AST node kinds, AST edge kinds), take their Shannon
//! entropies, and maintain project-wide totals commit by commit. The
//! resulting series feeds trend analysis, correlation against classic
//! complexity metrics, and streaming detection of unusually surprising
//! commits.
//!
//! Modules:
//! - [`entropy`]: symbol histograms and entropy arithmetic
//! - [`lex`]: tokenization, identifier splitting, textual entropy variants
//! - [`grammar`]: pluggable language definitions (Java bundled)
//! - [`syntax`]: parse-tree profiles, cyclomatic complexity, method diffs
//! - [`miner`]: chronological repository traversal and dataset generation
//! - [`trends`]: slopes, spikes/drops, spread patterns, evolution indicators
//! - [`anomaly`]: windowed z-score detection of surprising commits
//! - [`stats`]: Spearman rank correlation tables
//! - [`datasets`]: the on-disk CSV/JSON formats

pub mod anomaly;
pub mod datasets;
pub mod entropy;
pub mod grammar;
pub mod lex;
pub mod miner;
pub mod records;
pub mod stats;
pub mod syntax;
pub mod trends;

pub use entropy::{EntropyBits, EntropyError, SymbolHistogram};
pub use grammar::{Grammar, GrammarError, GrammarRegistry, JavaGrammar};
pub use lex::{
    split_identifier, token_entropy, tokenize, LexError, TokenClass, TokenizationConfig,
    WordStream,
};
pub use records::{
    ChangeType, CommitRecord, EntropySeries, FileChangeRecord, ProjectTotals, SeriesMetric,
    SeriesPoint,
};
pub use syntax::{
    changed_methods, cyclomatic_complexity, parse_profile, structural_entropy, AstEdge,
    StructuralProfile, SyntaxError,
};
