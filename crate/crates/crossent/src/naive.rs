//! Slow reference implementations used as independent oracles in tests.
//!
//! Everything here is quadratic-or-worse by design and shares no code with
//! the indexed implementations it cross-checks.

use crate::seq::{Sequence, Symbol};
use std::collections::HashSet;

/// All distinct substrings of `x`, including the empty word.
pub fn substring_set(x: &Sequence) -> HashSet<Vec<Symbol>> {
    let syms = x.symbols();
    let mut set = HashSet::new();
    set.insert(Vec::new());
    for i in 0..syms.len() {
        for j in i + 1..=syms.len() {
            set.insert(syms[i..j].to_vec());
        }
    }
    set
}

/// Whether `w` occurs contiguously in `x`, by direct scan.
pub fn contains(x: &Sequence, w: &[Symbol]) -> bool {
    if w.is_empty() {
        return true;
    }
    if w.len() > x.len() {
        return false;
    }
    x.symbols().windows(w.len()).any(|win| win == w)
}

/// Largest `l <= min(cap, |y|)` such that the `l`-prefix of `y` occurs in `x`.
pub fn longest_prefix_match(x: &Sequence, y: &Sequence, cap: usize) -> usize {
    let cap = cap.min(y.len());
    let mut best = 0;
    for l in 1..=cap {
        if contains(x, &y.symbols()[..l]) {
            best = l;
        } else {
            break;
        }
    }
    best
}

/// A word of the reference cross parsing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NaiveWord {
    /// End offset (exclusive) of the word within `y`.
    pub end: usize,
    /// The one-letter fallback rule fired: the letter does not occur in `x`.
    pub singleton: bool,
}

/// Quadratic reference for the greedy cross parsing of `y` against `x`:
/// each word is the longest prefix of the remaining suffix of `y` occurring
/// in `x`, with a one-letter word when no prefix occurs.
pub fn zm_parse(x: &Sequence, y: &Sequence) -> Vec<NaiveWord> {
    let mut words = Vec::new();
    let mut pos = 0;
    while pos < y.len() {
        let rest = y.shift(pos).unwrap();
        let l = longest_prefix_match(x, &rest, rest.len());
        if l == 0 {
            words.push(NaiveWord {
                end: pos + 1,
                singleton: true,
            });
            pos += 1;
        } else {
            words.push(NaiveWord {
                end: pos + l,
                singleton: false,
            });
            pos += l;
        }
    }
    words
}
