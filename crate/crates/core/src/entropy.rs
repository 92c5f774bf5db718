//! Symbol histograms and Shannon entropy in bits.
//!
//! Every entropy metric in this crate reduces to the same computation: count
//! how often each symbol occurs, turn the counts into maximum-likelihood
//! frequencies, and evaluate `H = -Σ p(s) · log2 p(s)`. The symbols may be
//! words extracted from source text, AST node kinds, or parent→child kind
//! pairs; this module does not care.
//!
//! Probabilities are raw frequencies (`count / total`) with no smoothing, and
//! the empty histogram has entropy 0 (the `0·log 0 = 0` convention).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors from histogram arithmetic.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EntropyError {
    #[error("symbol `{0}` not present in histogram")]
    UnknownSymbol(String),
    #[error("cannot remove {removing} occurrences of `{symbol}`: only {present} present")]
    RemovalUnderflow {
        symbol: String,
        removing: u64,
        present: u64,
    },
}

/// An entropy value in bits (log base 2). Always finite and non-negative.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntropyBits(f64);

impl EntropyBits {
    pub const ZERO: EntropyBits = EntropyBits(0.0);

    pub fn new(bits: f64) -> Self {
        debug_assert!(bits >= 0.0 && bits.is_finite());
        EntropyBits(bits)
    }

    pub fn bits(self) -> f64 {
        self.0
    }
}

impl std::fmt::Display for EntropyBits {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} bits", self.0)
    }
}

/// A multiset of symbols: opaque text keys with positive occurrence counts.
///
/// Invariants: `total` is always the sum of the counts, and no key is stored
/// with a count of zero. Keys iterate in ascending byte order (`BTreeMap`),
/// which fixes the floating-point accumulation order of every entropy sum so
/// that repeated runs are bit-identical.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolHistogram {
    counts: BTreeMap<String, u64>,
    total: u64,
}

impl SymbolHistogram {
    pub fn new() -> Self {
        Self::default()
    }

    /// Counts every symbol in the stream.
    pub fn from_symbols<I, S>(symbols: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut hist = Self::new();
        for s in symbols {
            hist.add(s, 1);
        }
        hist
    }

    /// Adds `n` occurrences of `symbol`. Adding zero is a no-op.
    pub fn add(&mut self, symbol: impl Into<String>, n: u64) {
        if n == 0 {
            return;
        }
        *self.counts.entry(symbol.into()).or_insert(0) += n;
        self.total += n;
    }

    pub fn count(&self, symbol: &str) -> u64 {
        self.counts.get(symbol).copied().unwrap_or(0)
    }

    /// Total number of occurrences across all symbols.
    pub fn total(&self) -> u64 {
        self.total
    }

    /// Number of distinct symbols.
    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// Iterates `(symbol, count)` pairs in ascending key order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.counts.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Shannon entropy `-Σ p(s) · log2 p(s)` of the count distribution.
    ///
    /// The empty histogram yields 0 bits, as does any single-symbol histogram.
    pub fn shannon_entropy(&self) -> EntropyBits {
        if self.total == 0 {
            return EntropyBits::ZERO;
        }
        let total = self.total as f64;
        let mut sum = 0.0f64;
        for &count in self.counts.values() {
            let p = count as f64 / total;
            sum -= p * p.log2();
        }
        // p = 1 produces -0.0; normalize so callers never see a negative zero.
        EntropyBits::new(if sum == 0.0 { 0.0 } else { sum })
    }

    /// The single term `-p(s) · log2 p(s)` that `symbol` contributes to the
    /// entropy sum. Contributions over all symbols add up to
    /// [`shannon_entropy`](Self::shannon_entropy).
    pub fn symbol_contribution(&self, symbol: &str) -> Result<EntropyBits, EntropyError> {
        let count = self
            .counts
            .get(symbol)
            .copied()
            .ok_or_else(|| EntropyError::UnknownSymbol(symbol.to_string()))?;
        let p = count as f64 / self.total as f64;
        let term = -(p * p.log2());
        Ok(EntropyBits::new(if term == 0.0 { 0.0 } else { term }))
    }

    /// Applies an edit described as two histograms: symbols gained and symbols
    /// lost. Counts that drop to zero are removed. Fails without modifying
    /// anything if `removed` asks for more of a symbol than is present.
    pub fn apply_delta(
        &self,
        added: &SymbolHistogram,
        removed: &SymbolHistogram,
    ) -> Result<SymbolHistogram, EntropyError> {
        for (symbol, n) in removed.iter() {
            let present = self.count(symbol);
            if n > present {
                return Err(EntropyError::RemovalUnderflow {
                    symbol: symbol.to_string(),
                    removing: n,
                    present,
                });
            }
        }
        let mut counts = self.counts.clone();
        for (symbol, n) in added.iter() {
            *counts.entry(symbol.to_string()).or_insert(0) += n;
        }
        for (symbol, n) in removed.iter() {
            let slot = counts.get_mut(symbol).expect("validated above");
            *slot -= n;
            if *slot == 0 {
                counts.remove(symbol);
            }
        }
        let total = counts.values().sum();
        Ok(SymbolHistogram { counts, total })
    }

    /// Per-key sum of two histograms. Commutative and associative; equivalent
    /// to counting the concatenation of the underlying symbol streams.
    pub fn merge(&self, other: &SymbolHistogram) -> SymbolHistogram {
        let (mut counts, small) = if self.counts.len() >= other.counts.len() {
            (self.counts.clone(), other)
        } else {
            (other.counts.clone(), self)
        };
        for (symbol, n) in small.iter() {
            *counts.entry(symbol.to_string()).or_insert(0) += n;
        }
        SymbolHistogram {
            counts,
            total: self.total + other.total,
        }
    }
}

impl<S: Into<String>> FromIterator<S> for SymbolHistogram {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Self::from_symbols(iter)
    }
}
