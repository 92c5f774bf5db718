//! A lenient Java lexer.
//!
//! Produces the classified lexeme stream that word extraction runs on. It is
//! deliberately forgiving: malformed input never fails to lex, it just
//! degrades into operator/delimiter lexemes that the word filters discard
//! anyway. Historical snapshots of real repositories are full of files that
//! javac would reject.

use super::{Lexeme, TokenClass};

/// Reserved words of the Java language, plus the `true`/`false`/`null`
/// literals, which the word filters treat like keywords. Sorted for binary
/// search.
const KEYWORDS: &[&str] = &[
    "abstract",
    "assert",
    "boolean",
    "break",
    "byte",
    "case",
    "catch",
    "char",
    "class",
    "const",
    "continue",
    "default",
    "do",
    "double",
    "else",
    "enum",
    "extends",
    "false",
    "final",
    "finally",
    "float",
    "for",
    "goto",
    "if",
    "implements",
    "import",
    "instanceof",
    "int",
    "interface",
    "long",
    "native",
    "new",
    "null",
    "package",
    "private",
    "protected",
    "public",
    "return",
    "short",
    "static",
    "strictfp",
    "super",
    "switch",
    "synchronized",
    "this",
    "throw",
    "throws",
    "transient",
    "true",
    "try",
    "void",
    "volatile",
    "while",
];

const DELIMITERS: &[char] = &['(', ')', '{', '}', '[', ']', ';', ',', '.', '@'];

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_' || c == '$'
}

fn is_ident_part(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '$'
}

pub(crate) fn lex_java(source: &str) -> Vec<Lexeme<'_>> {
    let bytes = source.as_bytes();
    let mut lexemes = Vec::new();
    let mut chars = source.char_indices().peekable();

    while let Some((start, c)) = chars.next() {
        if c.is_whitespace() {
            continue;
        }

        // Comments and the '/' operator.
        if c == '/' {
            match chars.peek().map(|&(_, n)| n) {
                Some('/') => {
                    let end = scan_while(&mut chars, |n| n != '\n', start + 1);
                    lexemes.push(lexeme(TokenClass::Comment, source, start, end));
                    continue;
                }
                Some('*') => {
                    chars.next();
                    let mut end = source.len();
                    let mut prev = '\0';
                    for (i, n) in chars.by_ref() {
                        if prev == '*' && n == '/' {
                            end = i + n.len_utf8();
                            break;
                        }
                        prev = n;
                    }
                    lexemes.push(lexeme(TokenClass::Comment, source, start, end));
                    continue;
                }
                _ => {
                    lexemes.push(lexeme(TokenClass::Operator, source, start, start + 1));
                    continue;
                }
            }
        }

        // String, text block and character literals.
        if c == '"' {
            let end = if bytes[start..].starts_with(b"\"\"\"") {
                chars.next();
                chars.next();
                scan_text_block(source, &mut chars)
            } else {
                scan_quoted(source, &mut chars, '"')
            };
            lexemes.push(lexeme(TokenClass::StringLiteral, source, start, end));
            continue;
        }
        if c == '\'' {
            let end = scan_quoted(source, &mut chars, '\'');
            lexemes.push(lexeme(TokenClass::StringLiteral, source, start, end));
            continue;
        }

        // Numeric literals: a digit, or '.' immediately followed by a digit.
        let dot_number = c == '.'
            && chars
                .peek()
                .map(|&(_, n)| n.is_ascii_digit())
                .unwrap_or(false);
        if c.is_ascii_digit() || dot_number {
            let end = scan_number(source, &mut chars, start);
            lexemes.push(lexeme(TokenClass::Number, source, start, end));
            continue;
        }

        if is_ident_start(c) {
            let end = scan_while(&mut chars, is_ident_part, start + c.len_utf8());
            let text = &source[start..end];
            let class = if KEYWORDS.binary_search(&text).is_ok() {
                TokenClass::Keyword
            } else {
                TokenClass::Identifier
            };
            lexemes.push(Lexeme { class, text });
            continue;
        }

        let class = if DELIMITERS.contains(&c) {
            TokenClass::Delimiter
        } else {
            TokenClass::Operator
        };
        lexemes.push(lexeme(class, source, start, start + c.len_utf8()));
    }
    lexemes
}

fn lexeme(class: TokenClass, source: &str, start: usize, end: usize) -> Lexeme<'_> {
    Lexeme {
        class,
        text: &source[start..end],
    }
}

type CharStream<'a> = std::iter::Peekable<std::str::CharIndices<'a>>;

/// Consumes characters while `keep` holds. `end` is the byte offset one past
/// the text consumed so far; the updated offset is returned.
fn scan_while(chars: &mut CharStream<'_>, keep: impl Fn(char) -> bool, mut end: usize) -> usize {
    while let Some(&(i, n)) = chars.peek() {
        if !keep(n) {
            break;
        }
        end = i + n.len_utf8();
        chars.next();
    }
    end
}

/// Scans to the closing quote, honoring backslash escapes. An unterminated
/// literal runs to the end of its line (or of the input).
fn scan_quoted(source: &str, chars: &mut CharStream<'_>, quote: char) -> usize {
    let mut escaped = false;
    while let Some(&(i, n)) = chars.peek() {
        if !escaped && n == quote {
            chars.next();
            return i + n.len_utf8();
        }
        if !escaped && n == '\n' {
            return i;
        }
        escaped = n == '\\' && !escaped;
        chars.next();
    }
    source.len()
}

/// Scans a `"""` text block to its closing delimiter (the two opening quotes
/// are already consumed by the caller).
fn scan_text_block(source: &str, chars: &mut CharStream<'_>) -> usize {
    let mut quotes = 0;
    for (i, n) in chars.by_ref() {
        if n == '"' {
            quotes += 1;
            if quotes == 3 {
                return i + 1;
            }
        } else {
            quotes = 0;
        }
    }
    source.len()
}

/// Scans the remainder of a numeric literal. Accepts letters, digits,
/// underscores, a '.' that is followed by a digit, and a sign immediately
/// after an exponent marker (`1e+5`, `0x1p-2`).
fn scan_number(source: &str, chars: &mut CharStream<'_>, start: usize) -> usize {
    let mut end = start + 1;
    let mut prev = source[start..].chars().next().unwrap();
    while let Some(&(i, n)) = chars.peek() {
        let take = if n.is_ascii_alphanumeric() || n == '_' {
            true
        } else if n == '.' {
            source[i + 1..]
                .chars()
                .next()
                .map(|f| f.is_ascii_digit())
                .unwrap_or(false)
        } else if n == '+' || n == '-' {
            matches!(prev, 'e' | 'E' | 'p' | 'P')
        } else {
            false
        };
        if !take {
            break;
        }
        end = i + n.len_utf8();
        prev = n;
        chars.next();
    }
    end
}
