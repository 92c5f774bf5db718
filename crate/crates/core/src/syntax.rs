//! Structural analysis: typed parse trees, node/edge histograms, cyclomatic
//! complexity, and method-level change counting.
//!
//! Structural entropy looks at source code the way a parser does. Every named
//! node of the parse tree is counted by its grammar kind, and every
//! parent→child pair of named nodes is counted as an edge. The two resulting
//! histograms drive the node-kind and edge-kind entropy metrics. Identifier
//! text never enters either histogram, which is why renames leave structural
//! entropy untouched while textual entropy moves.
//!
//! Files with recoverable syntax errors are profiled from the recovered tree;
//! intermediate commits in real histories frequently do not parse cleanly,
//! and refusing them would leave holes in the series. The number of error
//! nodes is reported on the profile so callers can flag such files.

use std::collections::BTreeMap;

use thiserror::Error;
use tree_sitter::{Node, Parser, Tree};

use crate::entropy::{EntropyBits, SymbolHistogram};
use crate::grammar::{Grammar, StructureRules};
use crate::lex::{decode_utf8, LexError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SyntaxError {
    #[error(transparent)]
    Decode(#[from] LexError),
    #[error("grammar `{0}` could not be loaded into the parser: {1}")]
    Language(String, String),
    #[error("parser produced no tree for grammar `{0}`")]
    Unparseable(String),
}

/// An ordered parent→child pair of node kinds.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AstEdge {
    pub parent_kind: String,
    pub child_kind: String,
}

impl AstEdge {
    /// Canonical text form used as the edge-histogram key.
    pub fn canonical(&self) -> String {
        format!("{}→{}", self.parent_kind, self.child_kind)
    }
}

/// Structural measurements of one source file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StructuralProfile {
    /// Count of every named parse-tree node by grammar kind.
    pub node_hist: SymbolHistogram,
    /// Count of every named parent→child kind pair, keyed by
    /// [`AstEdge::canonical`] form.
    pub edge_hist: SymbolHistogram,
    pub method_count: u32,
    /// Sum of per-method cyclomatic complexity over the file.
    pub file_cyclomatic: u32,
    /// Number of error/missing nodes the parser recovered over. Zero for
    /// clean files.
    pub parse_error_count: u32,
}

/// Entropy of the node-kind and edge-kind distributions, in that order.
pub fn structural_entropy(profile: &StructuralProfile) -> (EntropyBits, EntropyBits) {
    (
        profile.node_hist.shannon_entropy(),
        profile.edge_hist.shannon_entropy(),
    )
}

/// Parses `source` and extracts node/edge histograms plus method metrics.
///
/// Empty input yields the all-empty profile.
pub fn parse_profile(source: &[u8], grammar: &dyn Grammar) -> Result<StructuralProfile, SyntaxError> {
    let text = decode_utf8(source)?;
    if text.is_empty() {
        return Ok(StructuralProfile::default());
    }
    let tree = parse_tree(text, grammar)?;
    let rules = grammar.structure();
    let mut profile = StructuralProfile::default();
    collect(tree.root_node(), None, rules, text, &mut profile);
    Ok(profile)
}

/// Per-method cyclomatic complexity and the file total.
///
/// A method scores `1 +` the number of decision points in its body: each
/// `if`, loop construct, `case` label, `catch` clause, ternary conditional,
/// and short-circuit `&&`/`||` operator. Nested method declarations own
/// their decision points; they never count toward the enclosing method.
pub fn cyclomatic_complexity(
    source: &[u8],
    grammar: &dyn Grammar,
) -> Result<(BTreeMap<String, u32>, u32), SyntaxError> {
    let text = decode_utf8(source)?;
    if text.is_empty() {
        return Ok((BTreeMap::new(), 0));
    }
    let tree = parse_tree(text, grammar)?;
    let rules = grammar.structure();
    let mut methods = Vec::new();
    find_methods(tree.root_node(), rules, text, &mut methods);

    let mut per_method = BTreeMap::new();
    let mut file_total = 0u32;
    for m in methods {
        file_total += m.complexity;
        let mut key = m.signature.clone();
        let mut occurrence = 1;
        while per_method.contains_key(&key) {
            occurrence += 1;
            key = format!("{}#{}", m.signature, occurrence);
        }
        per_method.insert(key, m.complexity);
    }
    Ok((per_method, file_total))
}

/// Number of methods whose body token sequence differs between the two
/// versions of a file, counting methods present on only one side as changed.
/// Methods are matched by signature (name plus parameter types); a renamed
/// method therefore counts as one removal plus one addition.
pub fn changed_methods(
    before: &[u8],
    after: &[u8],
    grammar: &dyn Grammar,
) -> Result<u32, SyntaxError> {
    let old = methods_of(before, grammar)?;
    let new = methods_of(after, grammar)?;

    // signature -> (bodies before, bodies after)
    type Bodies<'a> = (Vec<&'a Vec<String>>, Vec<&'a Vec<String>>);
    let mut by_signature: BTreeMap<&str, Bodies<'_>> = BTreeMap::new();
    for m in &old {
        by_signature.entry(&m.signature).or_default().0.push(&m.body_tokens);
    }
    for m in &new {
        by_signature.entry(&m.signature).or_default().1.push(&m.body_tokens);
    }

    let mut changed = 0u32;
    for (mut olds, mut news) in by_signature.into_values() {
        olds.sort();
        news.sort();
        let matched = multiset_intersection(&olds, &news);
        changed += (olds.len().max(news.len()) - matched) as u32;
    }
    Ok(changed)
}

fn multiset_intersection<T: Ord>(a: &[T], b: &[T]) -> usize {
    let (mut i, mut j, mut common) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                common += 1;
                i += 1;
                j += 1;
            }
        }
    }
    common
}

struct MethodInfo {
    signature: String,
    complexity: u32,
    body_tokens: Vec<String>,
}

fn methods_of(source: &[u8], grammar: &dyn Grammar) -> Result<Vec<MethodInfo>, SyntaxError> {
    let text = decode_utf8(source)?;
    if text.is_empty() {
        return Ok(Vec::new());
    }
    let tree = parse_tree(text, grammar)?;
    let mut methods = Vec::new();
    find_methods(tree.root_node(), grammar.structure(), text, &mut methods);
    Ok(methods)
}

fn parse_tree(text: &str, grammar: &dyn Grammar) -> Result<Tree, SyntaxError> {
    let mut parser = Parser::new();
    parser
        .set_language(&grammar.language())
        .map_err(|e| SyntaxError::Language(grammar.id().to_string(), e.to_string()))?;
    parser
        .parse(text, None)
        .ok_or_else(|| SyntaxError::Unparseable(grammar.id().to_string()))
}

/// Walks the tree, counting named nodes and named parent→child edges, and
/// accumulating method metrics at each method root.
fn collect(
    node: Node<'_>,
    named_parent: Option<&str>,
    rules: &StructureRules,
    text: &str,
    profile: &mut StructuralProfile,
) {
    let this_kind = if node.is_named() {
        let kind = node.kind();
        profile.node_hist.add(kind, 1);
        if let Some(parent) = named_parent {
            profile.edge_hist.add(
                AstEdge {
                    parent_kind: parent.to_string(),
                    child_kind: kind.to_string(),
                }
                .canonical(),
                1,
            );
        }
        if node.is_error() || node.is_missing() {
            profile.parse_error_count += 1;
        }
        if rules.method_kinds.contains(&kind) {
            profile.method_count += 1;
            profile.file_cyclomatic += method_complexity(node, rules, text);
        }
        Some(kind)
    } else {
        named_parent
    };

    let mut cursor = node.walk();
    for child in node.children(&mut cursor) {
        collect(child, this_kind, rules, text, profile);
    }
}

fn find_methods(node: Node<'_>, rules: &StructureRules, text: &str, out: &mut Vec<MethodInfo>) {
    if node.is_named() && rules.method_kinds.contains(&node.kind()) {
        out.push(MethodInfo {
            signature: method_signature(node, rules, text),
            complexity: method_complexity(node, rules, text),
            body_tokens: body_token_sequence(node, rules, text),
        });
    }
    let mut cursor = node.walk();
    for child in node.children(&mut cursor) {
        find_methods(child, rules, text, out);
    }
}

fn method_signature(node: Node<'_>, rules: &StructureRules, text: &str) -> String {
    let name = node
        .child_by_field_name(rules.name_field)
        .map(|n| node_text(n, text))
        .unwrap_or_else(|| "<anonymous>".to_string());
    let mut param_types = Vec::new();
    if let Some(params) = node.child_by_field_name(rules.parameters_field) {
        let mut cursor = params.walk();
        for param in params.named_children(&mut cursor) {
            if rules.comment_kinds.contains(&param.kind()) {
                continue;
            }
            let ty = param
                .child_by_field_name(rules.type_field)
                .or_else(|| param.named_child(0))
                .map(|n| node_text(n, text))
                .unwrap_or_default();
            param_types.push(ty);
        }
    }
    format!("{}({})", name, param_types.join(","))
}

/// Source text of a node with all whitespace removed, so formatting cannot
/// influence signatures.
fn node_text(node: Node<'_>, text: &str) -> String {
    text[node.byte_range()]
        .chars()
        .filter(|c| !c.is_whitespace())
        .collect()
}

fn method_complexity(method: Node<'_>, rules: &StructureRules, text: &str) -> u32 {
    let mut decisions = 0;
    let mut cursor = method.walk();
    for child in method.children(&mut cursor) {
        count_decisions(child, rules, text, &mut decisions);
    }
    1 + decisions
}

fn count_decisions(node: Node<'_>, rules: &StructureRules, text: &str, decisions: &mut u32) {
    let kind = node.kind();
    if node.is_named() && rules.method_kinds.contains(&kind) {
        return; // nested methods own their decision points
    }
    if node.is_named() && is_decision_point(node, kind, rules, text) {
        *decisions += 1;
    }
    let mut cursor = node.walk();
    for child in node.children(&mut cursor) {
        count_decisions(child, rules, text, decisions);
    }
}

fn is_decision_point(node: Node<'_>, kind: &str, rules: &StructureRules, text: &str) -> bool {
    if rules.decision_kinds.contains(&kind) {
        return true;
    }
    if rules.case_label_kind == Some(kind) {
        return node
            .child(0)
            .map(|c| c.kind() == rules.case_token)
            .unwrap_or(false);
    }
    if rules.binary_expression_kind == Some(kind) {
        if let Some(op) = node.child_by_field_name(rules.operator_field) {
            return rules.short_circuit_operators.contains(&&text[op.byte_range()]);
        }
    }
    false
}

fn body_token_sequence(method: Node<'_>, rules: &StructureRules, text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    if let Some(body) = method.child_by_field_name(rules.body_field) {
        collect_tokens(body, rules, text, &mut tokens);
    }
    tokens
}

fn collect_tokens(node: Node<'_>, rules: &StructureRules, text: &str, out: &mut Vec<String>) {
    if rules.comment_kinds.contains(&node.kind()) {
        return;
    }
    if node.child_count() == 0 {
        let t = &text[node.byte_range()];
        if !t.is_empty() {
            out.push(t.to_string());
        }
        return;
    }
    let mut cursor = node.walk();
    for child in node.children(&mut cursor) {
        collect_tokens(child, rules, text, out);
    }
}
