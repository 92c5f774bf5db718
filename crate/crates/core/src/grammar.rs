//! Grammar registration.
//!
//! A grammar bundles everything the analysis pipeline needs to know about one
//! language: how to lex it into classified lexemes, how to parse it into a
//! typed tree, which tree kinds denote methods and decision points, and which
//! file extensions it owns. Grammars are registered once, before any analysis
//! starts, and are immutable afterwards. Only Java ships built in; nothing in
//! the interface is Java-specific.

use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

use crate::lex::{lex_java, Lexeme};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GrammarError {
    #[error("unknown grammar `{0}`")]
    Unknown(String),
}

/// Tree-shape knowledge used by structural analysis: which node kinds are
/// methods, which are decision points, and which fields carry names,
/// parameters and bodies.
#[derive(Debug, Clone)]
pub struct StructureRules {
    /// Kinds that declare a callable unit (methods, constructors).
    pub method_kinds: &'static [&'static str],
    /// Kinds that each add one decision point wherever they appear.
    pub decision_kinds: &'static [&'static str],
    /// Kind of a switch label node; counts as a decision point only when its
    /// first token is `case_token` (a `default:` label adds no branch).
    pub case_label_kind: Option<&'static str>,
    pub case_token: &'static str,
    /// Kind of binary expressions, checked against `short_circuit_operators`.
    pub binary_expression_kind: Option<&'static str>,
    pub short_circuit_operators: &'static [&'static str],
    pub operator_field: &'static str,
    pub name_field: &'static str,
    pub parameters_field: &'static str,
    pub type_field: &'static str,
    pub body_field: &'static str,
    /// Comment node kinds, excluded from body token sequences.
    pub comment_kinds: &'static [&'static str],
}

/// A pluggable language definition.
pub trait Grammar: Send + Sync {
    /// Registry identifier, e.g. `"java"`.
    fn id(&self) -> &str;

    /// File extensions (with leading dot) this grammar analyzes.
    fn file_extensions(&self) -> &[&str];

    /// Lexes source text into classified lexemes. Must be total: any input
    /// yields a lexeme stream.
    fn lex<'s>(&self, source: &'s str) -> Vec<Lexeme<'s>>;

    /// The tree-sitter language used for parsing.
    fn language(&self) -> tree_sitter::Language;

    fn structure(&self) -> &StructureRules;
}

/// The bundled Java grammar.
pub struct JavaGrammar {
    rules: StructureRules,
}

impl JavaGrammar {
    pub fn new() -> Self {
        JavaGrammar {
            rules: StructureRules {
                method_kinds: &["method_declaration", "constructor_declaration"],
                decision_kinds: &[
                    "if_statement",
                    "while_statement",
                    "do_statement",
                    "for_statement",
                    "enhanced_for_statement",
                    "catch_clause",
                    "ternary_expression",
                ],
                case_label_kind: Some("switch_label"),
                case_token: "case",
                binary_expression_kind: Some("binary_expression"),
                short_circuit_operators: &["&&", "||"],
                operator_field: "operator",
                name_field: "name",
                parameters_field: "parameters",
                type_field: "type",
                body_field: "body",
                comment_kinds: &["line_comment", "block_comment"],
            },
        }
    }
}

impl Default for JavaGrammar {
    fn default() -> Self {
        Self::new()
    }
}

impl Grammar for JavaGrammar {
    fn id(&self) -> &str {
        "java"
    }

    fn file_extensions(&self) -> &[&str] {
        &[".java"]
    }

    fn lex<'s>(&self, source: &'s str) -> Vec<Lexeme<'s>> {
        lex_java(source)
    }

    fn language(&self) -> tree_sitter::Language {
        tree_sitter_java::language()
    }

    fn structure(&self) -> &StructureRules {
        &self.rules
    }
}

/// Immutable-after-setup map from grammar id to grammar.
#[derive(Clone, Default)]
pub struct GrammarRegistry {
    grammars: BTreeMap<String, Arc<dyn Grammar>>,
}

impl GrammarRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// A registry with every bundled grammar (currently Java).
    pub fn with_builtins() -> Self {
        let mut registry = Self::new();
        registry.register(Arc::new(JavaGrammar::new()));
        registry
    }

    pub fn register(&mut self, grammar: Arc<dyn Grammar>) {
        self.grammars.insert(grammar.id().to_string(), grammar);
    }

    pub fn get(&self, id: &str) -> Result<Arc<dyn Grammar>, GrammarError> {
        self.grammars
            .get(id)
            .cloned()
            .ok_or_else(|| GrammarError::Unknown(id.to_string()))
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.grammars.keys().map(|k| k.as_str())
    }
}
