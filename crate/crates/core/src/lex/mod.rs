//! Lexical analysis: from source text to the word stream behind textual
//! entropy.
//!
//! Source files are lexed by a registered grammar into classified lexemes,
//! identifiers are split into natural-language words (`createUser` →
//! `create`, `user`), and configurable filters reproduce the usual metric
//! variants: with/without comments, comments in isolation, and with keywords
//! and numbers removed. Operators and delimiters never contribute words.

mod java;

pub(crate) use java::lex_java;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::entropy::{EntropyBits, SymbolHistogram};
use crate::grammar::Grammar;

/// Lexical class of a raw lexeme. Every lexeme maps to exactly one class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TokenClass {
    Identifier,
    Keyword,
    Number,
    StringLiteral,
    Comment,
    Operator,
    Delimiter,
}

/// A classified slice of source text produced by a grammar's lexer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Lexeme<'a> {
    pub class: TokenClass,
    pub text: &'a str,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LexError {
    #[error("source is not valid UTF-8 at byte offset {offset}")]
    InvalidUtf8 { offset: usize },
}

/// Decodes raw file bytes as UTF-8, reporting the first offending byte offset.
pub fn decode_utf8(bytes: &[u8]) -> Result<&str, LexError> {
    std::str::from_utf8(bytes).map_err(|e| LexError::InvalidUtf8 {
        offset: e.valid_up_to(),
    })
}

/// Word-filtering configuration for [`tokenize`].
///
/// `comments_only` forces comments on, so the invariant "comments_only implies
/// include_comments" holds by construction. Operators and delimiters are
/// always discarded and are deliberately not configurable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizationConfig {
    include_comments: bool,
    include_keywords: bool,
    include_numbers: bool,
    comments_only: bool,
}

impl Default for TokenizationConfig {
    fn default() -> Self {
        Self::all_tokens()
    }
}

impl TokenizationConfig {
    pub fn new(include_comments: bool, include_keywords: bool, include_numbers: bool) -> Self {
        TokenizationConfig {
            include_comments,
            include_keywords,
            include_numbers,
            comments_only: false,
        }
    }

    /// Comments, keywords and numbers all contribute words. This is the
    /// headline textual-entropy variant.
    pub fn all_tokens() -> Self {
        Self::new(true, true, true)
    }

    /// All code tokens, comments discarded.
    pub fn without_comments() -> Self {
        Self::new(false, true, true)
    }

    /// Keywords and numbers discarded, comments retained.
    pub fn without_keywords_and_numbers() -> Self {
        Self::new(true, false, false)
    }

    /// Only words found in comments; every code token is discarded.
    pub fn comments_only() -> Self {
        TokenizationConfig {
            include_comments: true,
            include_keywords: false,
            include_numbers: false,
            comments_only: true,
        }
    }

    pub fn include_comments(&self) -> bool {
        self.include_comments
    }

    pub fn include_keywords(&self) -> bool {
        self.include_keywords
    }

    pub fn include_numbers(&self) -> bool {
        self.include_numbers
    }

    pub fn is_comments_only(&self) -> bool {
        self.comments_only
    }
}

/// An ordered stream of lowercase words. Never contains empty strings.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordStream(Vec<String>);

impl WordStream {
    pub fn new(words: Vec<String>) -> Self {
        debug_assert!(words.iter().all(|w| !w.is_empty()));
        WordStream(words)
    }

    pub fn words(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(|s| s.as_str())
    }

    /// Word-frequency histogram of the stream.
    pub fn histogram(&self) -> SymbolHistogram {
        SymbolHistogram::from_symbols(self.0.iter().map(|s| s.as_str()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CharKind {
    Upper,
    Lower,
    Digit,
    Separator,
}

fn char_kind(c: char) -> CharKind {
    if c.is_numeric() {
        CharKind::Digit
    } else if c.is_uppercase() {
        CharKind::Upper
    } else if c.is_alphabetic() {
        CharKind::Lower
    } else {
        CharKind::Separator
    }
}

/// Splits an identifier (or any text) into lowercase words.
///
/// Word boundaries are: any non-alphanumeric character, a lowercase→uppercase
/// transition, the last uppercase of an uppercase run that is followed by a
/// lowercase letter (`HTTPResponse` → `http`, `response`), and any
/// letter↔digit transition. Empty fragments are dropped.
pub fn split_identifier(identifier: &str) -> Vec<String> {
    let chars: Vec<char> = identifier.chars().collect();
    let mut words = Vec::new();
    let mut current = String::new();
    let mut prev_kind: Option<CharKind> = None;

    let flush = |current: &mut String, words: &mut Vec<String>| {
        if !current.is_empty() {
            words.push(std::mem::take(current));
        }
    };

    for (i, &c) in chars.iter().enumerate() {
        let kind = char_kind(c);
        if kind == CharKind::Separator {
            flush(&mut current, &mut words);
            prev_kind = None;
            continue;
        }
        if let Some(prev) = prev_kind {
            let next_kind = chars.get(i + 1).map(|&n| char_kind(n));
            let camel = prev == CharKind::Lower && kind == CharKind::Upper;
            let acronym_end = prev == CharKind::Upper
                && kind == CharKind::Upper
                && next_kind == Some(CharKind::Lower);
            let digit_edge = (prev == CharKind::Digit) != (kind == CharKind::Digit);
            if camel || acronym_end || digit_edge {
                flush(&mut current, &mut words);
            }
        }
        // Lowercase char-by-char so the output depends only on the characters
        // kept, not on surrounding context.
        current.extend(c.to_lowercase());
        prev_kind = Some(kind);
    }
    flush(&mut current, &mut words);
    words
}

/// Lexes `source` with `grammar` and applies the configured word filters.
///
/// Identifiers and string-literal contents pass through [`split_identifier`];
/// comments are split into natural-language words by the same boundary rules;
/// keywords and numbers, when included, contribute their lowercased literal
/// text as a single word. Operators and delimiters are always dropped.
pub fn tokenize(
    source: &[u8],
    grammar: &dyn Grammar,
    config: &TokenizationConfig,
) -> Result<WordStream, LexError> {
    let text = decode_utf8(source)?;
    Ok(words_from_lexemes(&grammar.lex(text), config))
}

/// The word-filtering half of [`tokenize`], usable when the same lexeme
/// stream feeds several configurations.
pub fn words_from_lexemes(lexemes: &[Lexeme<'_>], config: &TokenizationConfig) -> WordStream {
    let mut words = Vec::new();
    for lexeme in lexemes {
        match lexeme.class {
            TokenClass::Operator | TokenClass::Delimiter => {}
            TokenClass::Comment => {
                if config.include_comments() {
                    words.extend(split_identifier(lexeme.text));
                }
            }
            _ if config.is_comments_only() => {}
            TokenClass::Keyword => {
                if config.include_keywords() {
                    words.push(lowercase(lexeme.text));
                }
            }
            TokenClass::Number => {
                if config.include_numbers() {
                    words.push(lowercase(lexeme.text));
                }
            }
            TokenClass::Identifier | TokenClass::StringLiteral => {
                words.extend(split_identifier(lexeme.text));
            }
        }
    }
    WordStream::new(words)
}

/// Shannon entropy of the word histogram produced by [`tokenize`].
pub fn token_entropy(
    source: &[u8],
    grammar: &dyn Grammar,
    config: &TokenizationConfig,
) -> Result<EntropyBits, LexError> {
    Ok(tokenize(source, grammar, config)?.histogram().shannon_entropy())
}

fn lowercase(text: &str) -> String {
    text.chars().flat_map(|c| c.to_lowercase()).collect()
}
