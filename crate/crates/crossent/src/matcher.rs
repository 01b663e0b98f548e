//! Substring index over a fixed sequence `x`, answering containment,
//! longest-match, and waiting-time queries.
//!
//! The index is a suffix automaton: the minimal deterministic acceptor of all
//! substrings of `x`, built online in O(N · #alphabet) with at most `2N - 1`
//! states for `N >= 2`. Walking transitions from the root matches prefixes of
//! a query left to right in amortized O(1) per extension, which is exactly the
//! access pattern of sequential cross parsing.
//!
//! Waiting times over generated streams are answered by a rolling
//! Knuth-Morris-Pratt scan instead, since the first occurrence may lie beyond
//! any prebuilt index.

use crate::error::{Error, Result};
use crate::seq::{Sequence, Symbol};

const UNSET: u32 = u32::MAX;

/// Suffix automaton over a fixed source sequence.
#[derive(Debug, Clone)]
pub struct MatchIndex {
    source: Sequence,
    alpha: usize,
    /// Longest substring length represented by each state.
    len: Vec<u32>,
    /// Suffix links; `UNSET` at the root.
    link: Vec<u32>,
    /// Dense transition table, `state * alpha + symbol`.
    next: Vec<u32>,
    last: u32,
}

impl MatchIndex {
    /// Builds the index over `x`.
    pub fn build(x: &Sequence) -> MatchIndex {
        let n = x.len();
        let alpha = x.alphabet().size();
        let cap = 2 * n + 2;
        let mut idx = MatchIndex {
            source: x.clone(),
            alpha,
            len: Vec::with_capacity(cap),
            link: Vec::with_capacity(cap),
            next: Vec::with_capacity(cap * alpha),
            last: 0,
        };
        idx.alloc(0, UNSET);
        for &s in x.symbols() {
            idx.extend(s.index());
        }
        idx
    }

    fn alloc(&mut self, len: u32, link: u32) -> u32 {
        let id = self.len.len() as u32;
        self.len.push(len);
        self.link.push(link);
        self.next.extend(std::iter::repeat(UNSET).take(self.alpha));
        id
    }

    fn clone_state(&mut self, from: u32, len: u32) -> u32 {
        let id = self.alloc(len, self.link[from as usize]);
        let src = from as usize * self.alpha;
        let dst = id as usize * self.alpha;
        for c in 0..self.alpha {
            self.next[dst + c] = self.next[src + c];
        }
        id
    }

    #[inline]
    fn trans(&self, state: u32, c: usize) -> u32 {
        self.next[state as usize * self.alpha + c]
    }

    fn extend(&mut self, c: usize) {
        let cur = self.alloc(self.len[self.last as usize] + 1, UNSET);
        let mut p = self.last;
        self.last = cur;
        loop {
            if p == UNSET {
                self.link[cur as usize] = 0;
                return;
            }
            if self.trans(p, c) != UNSET {
                break;
            }
            self.next[p as usize * self.alpha + c] = cur;
            p = self.link[p as usize];
        }
        let q = self.trans(p, c);
        if self.len[p as usize] + 1 == self.len[q as usize] {
            self.link[cur as usize] = q;
        } else {
            let clone = self.clone_state(q, self.len[p as usize] + 1);
            while p != UNSET && self.trans(p, c) == q {
                self.next[p as usize * self.alpha + c] = clone;
                p = self.link[p as usize];
            }
            self.link[q as usize] = clone;
            self.link[cur as usize] = clone;
        }
    }

    pub fn source(&self) -> &Sequence {
        &self.source
    }

    pub fn state_count(&self) -> usize {
        self.len.len()
    }

    /// Fresh cursor at the root (empty match).
    pub fn cursor(&self) -> MatchCursor {
        MatchCursor {
            state: 0,
            length: 0,
        }
    }

    /// Extends `cursor` by one symbol if the extended word still occurs in the
    /// source; returns whether the extension succeeded.
    pub fn try_extend(&self, cursor: &mut MatchCursor, s: Symbol) -> bool {
        let t = self.trans(cursor.state, s.index());
        if t == UNSET {
            false
        } else {
            cursor.state = t;
            cursor.length += 1;
            true
        }
    }

    pub(crate) fn contains_slice(&self, w: &[Symbol]) -> bool {
        let mut state = 0u32;
        for &s in w {
            state = self.trans(state, s.index());
            if state == UNSET {
                return false;
            }
        }
        true
    }

    /// Whether `w` occurs contiguously in the indexed source.
    pub fn contains(&self, w: &Sequence) -> Result<bool> {
        if !self.source.alphabet().compatible(w.alphabet()) {
            return Err(Error::AlphabetMismatch {
                left: self.source.alphabet().size(),
                right: w.alphabet().size(),
            });
        }
        Ok(self.contains_slice(w.symbols()))
    }

    /// Largest `l <= min(cap, |y|)` such that the `l`-prefix of `y` occurs in
    /// the source; 0 when even the first symbol does not occur. This is the
    /// raw match length: the `max{1, .}` clamp of the longest-match statistic
    /// belongs to the estimator layer.
    pub fn longest_prefix_match(&self, y: &Sequence, cap: usize) -> usize {
        self.longest_prefix_match_slice(y.symbols(), cap)
    }

    pub(crate) fn longest_prefix_match_slice(&self, y: &[Symbol], cap: usize) -> usize {
        let cap = cap.min(y.len());
        let mut cursor = self.cursor();
        for &s in &y[..cap] {
            if !self.try_extend(&mut cursor, s) {
                break;
            }
        }
        cursor.length
    }

    /// Every word the automaton accepts, empty word included. The automaton
    /// is a DAG with one path per distinct substring, so this is the exact
    /// acceptance set, O(N^2) words; meant for cross-checks on small sources.
    pub fn accepted_words(&self) -> Vec<Vec<Symbol>> {
        let mut out = vec![Vec::new()];
        let mut stack: Vec<(u32, Vec<Symbol>)> = vec![(0, Vec::new())];
        while let Some((state, word)) = stack.pop() {
            for c in 0..self.alpha {
                let t = self.trans(state, c);
                if t != UNSET {
                    let mut w = word.clone();
                    w.push(Symbol(c as u8));
                    out.push(w.clone());
                    stack.push((t, w));
                }
            }
        }
        out
    }
}

/// Walk state for incremental prefix extension. Single-owner; the index
/// itself is immutable and may be queried concurrently.
#[derive(Debug, Clone, Copy)]
pub struct MatchCursor {
    state: u32,
    length: usize,
}

impl MatchCursor {
    pub fn length(&self) -> usize {
        self.length
    }
}

/// Smallest start position `r >= 1` (1-based) with `x[r .. r+l-1] = a`, or
/// `None` when no occurrence completes within the first `horizon` symbols of
/// `x`, i.e. no `r <= horizon - l + 1`.
pub fn waiting_time(x: &Sequence, a: &Sequence, horizon: usize) -> Result<Option<usize>> {
    if !x.alphabet().compatible(a.alphabet()) {
        return Err(Error::AlphabetMismatch {
            left: x.alphabet().size(),
            right: a.alphabet().size(),
        });
    }
    waiting_time_stream(x.symbols().iter().copied(), a, horizon)
}

/// Streaming variant of [`waiting_time`] for generated sources; consumes at
/// most `horizon` symbols of `x`.
pub fn waiting_time_stream<I>(x: I, a: &Sequence, horizon: usize) -> Result<Option<usize>>
where
    I: IntoIterator<Item = Symbol>,
{
    let pat = a.symbols();
    let l = pat.len();
    if l == 0 {
        return Err(Error::Range("waiting time needs a nonempty word".into()));
    }
    // KMP failure table.
    let mut fail = vec![0usize; l];
    let mut k = 0;
    for i in 1..l {
        while k > 0 && pat[i] != pat[k] {
            k = fail[k - 1];
        }
        if pat[i] == pat[k] {
            k += 1;
        }
        fail[i] = k;
    }
    let mut matched = 0usize;
    for (i, s) in x.into_iter().take(horizon).enumerate() {
        while matched > 0 && s != pat[matched] {
            matched = fail[matched - 1];
        }
        if s == pat[matched] {
            matched += 1;
        }
        if matched == l {
            // match ends at 0-based i, so starts at i - l + 1; report 1-based.
            return Ok(Some(i + 2 - l));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::naive;
    use crate::rng::RngStream;
    use crate::seq::Alphabet;

    fn seq(text: &str, glyphs: &str) -> Sequence {
        Sequence::from_text(text, &Alphabet::with_glyphs(glyphs).unwrap()).unwrap()
    }

    const X_EXAMPLE: &str = "010001011101001110010001";
    const Y_EXAMPLE: &str = "011001010001020111010010";

    #[test]
    fn empty_source_accepts_only_empty_word() {
        let a = Alphabet::binary();
        let idx = MatchIndex::build(&Sequence::empty(a.clone()));
        assert!(idx.contains(&Sequence::empty(a.clone())).unwrap());
        assert!(!idx.contains(&seq("0", "01")).unwrap());
    }

    #[test]
    fn tiny_exhaustive_case() {
        let idx = MatchIndex::build(&seq("aa", "ab"));
        for (w, expect) in [("", true), ("a", true), ("aa", true), ("aaa", false), ("b", false)] {
            assert_eq!(idx.contains(&seq(w, "ab")).unwrap(), expect, "word {w:?}");
        }
    }

    #[test]
    fn worked_example_queries() {
        let x = seq(X_EXAMPLE, "012");
        let idx = MatchIndex::build(&x);
        assert!(idx.contains(&seq("011101001", "012")).unwrap());
        assert!(!idx.contains(&seq("2", "012")).unwrap());
        assert!(idx.contains(&Sequence::empty(x.alphabet().clone())).unwrap());

        let y = seq(Y_EXAMPLE, "012");
        assert_eq!(idx.longest_prefix_match(&y, 24), 3);
    }

    #[test]
    fn longest_prefix_match_edges() {
        let x = seq("0110101", "01");
        let idx = MatchIndex::build(&x);
        assert_eq!(idx.longest_prefix_match(&x, x.len()), x.len());
        let idx0 = MatchIndex::build(&seq("000000", "01"));
        assert_eq!(idx0.longest_prefix_match(&seq("101", "01"), 3), 0);
    }

    #[test]
    fn alphabet_mismatch_rejected() {
        let idx = MatchIndex::build(&seq("01", "01"));
        let w = Sequence::from_text("0", &Alphabet::indexed(3).unwrap()).unwrap();
        assert!(matches!(
            idx.contains(&w),
            Err(Error::AlphabetMismatch { .. })
        ));
    }

    #[test]
    fn waiting_time_examples() {
        let x = seq(X_EXAMPLE, "012");
        // Self-prefix is found at r = 1.
        let p = x.slice(0, 5).unwrap();
        assert_eq!(waiting_time(&x, &p, x.len()).unwrap(), Some(1));
        // Hand scan: x_3^6 = 0001.
        assert_eq!(
            waiting_time(&x, &seq("0001", "012"), 24).unwrap(),
            Some(3)
        );
        let zeros = seq("000000", "01");
        assert_eq!(waiting_time(&zeros, &seq("1", "01"), 6).unwrap(), None);
        assert!(matches!(
            waiting_time(&x, &Sequence::empty(x.alphabet().clone()), 10),
            Err(Error::Range(_))
        ));
    }

    #[test]
    fn waiting_time_respects_horizon() {
        let x = seq("0001", "01");
        // Match of "01" starts at r = 3 and ends at position 4 > horizon 3.
        assert_eq!(waiting_time(&x, &seq("01", "01"), 3).unwrap(), None);
        assert_eq!(waiting_time(&x, &seq("01", "01"), 4).unwrap(), Some(3));
    }

    #[test]
    fn agrees_with_naive_on_random_inputs() {
        let mut rng = RngStream::new(0xC0FFEE, 1);
        for trial in 0..300 {
            let asize = 2 + trial % 2;
            let alphabet = Alphabet::indexed(asize).unwrap();
            let n = 1 + rng.below(64);
            let x = Sequence::from_indices(
                alphabet.clone(),
                &(0..n).map(|_| rng.below(asize)).collect::<Vec<_>>(),
            )
            .unwrap();
            let idx = MatchIndex::build(&x);
            let subs = naive::substring_set(&x);
            for _ in 0..40 {
                let wl = rng.below(17);
                let w = Sequence::from_indices(
                    alphabet.clone(),
                    &(0..wl).map(|_| rng.below(asize)).collect::<Vec<_>>(),
                )
                .unwrap();
                assert_eq!(
                    idx.contains(&w).unwrap(),
                    subs.contains(w.symbols()),
                    "x={x} w={w}"
                );
            }
            let yl = 1 + rng.below(64);
            let y = Sequence::from_indices(
                alphabet.clone(),
                &(0..yl).map(|_| rng.below(asize)).collect::<Vec<_>>(),
            )
            .unwrap();
            assert_eq!(
                idx.longest_prefix_match(&y, y.len()),
                naive::longest_prefix_match(&x, &y, y.len())
            );
            // State bound for N >= 2.
            if x.len() >= 2 {
                assert!(idx.state_count() <= 2 * x.len() - 1);
            }
        }
    }

    #[test]
    fn duality_with_waiting_times() {
        // longest_prefix_match(x, y, N) = max{ l : W_l(y, x) <= N - l + 1 }, max over empty = 0.
        let mut rng = RngStream::new(99, 3);
        for _ in 0..200 {
            let n = 2 + rng.below(32);
            let alphabet = Alphabet::binary();
            let x = Sequence::from_indices(
                alphabet.clone(),
                &(0..n).map(|_| rng.below(2)).collect::<Vec<_>>(),
            )
            .unwrap();
            let y = Sequence::from_indices(
                alphabet.clone(),
                &(0..n).map(|_| rng.below(2)).collect::<Vec<_>>(),
            )
            .unwrap();
            let idx = MatchIndex::build(&x);
            let lpm = idx.longest_prefix_match(&y, n);
            let mut best = 0;
            for l in 1..=n {
                let prefix = y.slice(0, l).unwrap();
                if let Some(r) = waiting_time(&x, &prefix, n).unwrap() {
                    if r <= n - l + 1 {
                        best = l;
                    }
                }
            }
            assert_eq!(lpm, best, "x={x} y={y}");
        }
    }

    #[test]
    fn contains_is_monotone_under_subwords() {
        let x = seq("01101001", "01");
        let idx = MatchIndex::build(&x);
        for start in 0..x.len() {
            for end in start..=x.len() {
                let w = x.slice(start, end).unwrap();
                assert!(idx.contains(&w).unwrap());
            }
        }
    }
}
