//! Sequential parsings of a sequence `y`.
//!
//! Four parsers share one shape — an increasing list of word end offsets
//! partitioning `y` — and differ in the stopping rule:
//!
//! * [`zm_parse`]: greedy cross parsing against a fixed `x`; each word is the
//!   longest prefix of the remaining suffix occurring as a substring of `x`,
//!   with a flagged one-letter word when no prefix occurs at all. The word
//!   count `c_N` drives the cross-entropy estimator.
//! * [`lz78_parse`]: incremental self-parsing; each phrase is the shortest
//!   prefix of the remainder not yet in the phrase dictionary.
//! * [`threshold_parse`]: each word is the shortest prefix of the remainder
//!   whose probability under a reference measure drops to the threshold.
//! * [`block_parse`]: the sequence is cut into fixed-size blocks, each
//!   threshold-parsed on its own with the leftover tail kept as a buffer.
//!
//! Comparisons against the threshold run in log space with exact per-symbol
//! accumulation, so words long enough to underflow linear-space probabilities
//! still parse correctly. The comparison carries a relative tie guard of
//! `1e-9` so that exact ties (a dyadic word probability meeting a dyadic
//! threshold) resolve the way exact arithmetic would instead of by rounding
//! noise. A final word that runs out of input before meeting its rule is
//! emitted as-is and flagged.

use crate::error::{Error, Result};
use crate::matcher::MatchIndex;
use crate::seq::{Sequence, Symbol};
use crate::sources::CylinderMeasure;

fn check_alphabets(x: &Sequence, y: &Sequence) -> Result<()> {
    if !x.alphabet().compatible(y.alphabet()) {
        return Err(Error::AlphabetMismatch {
            left: x.alphabet().size(),
            right: y.alphabet().size(),
        });
    }
    Ok(())
}

/// Relative tie guard for log-space threshold comparisons.
const THRESHOLD_TIE_EPS: f64 = 1e-9;

fn guarded_log_theta(log_theta: f64) -> f64 {
    log_theta + THRESHOLD_TIE_EPS * (1.0 + log_theta.abs())
}

/// Greedy cross parsing of `y` against the substrings of `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZmParse {
    boundaries: Vec<usize>,
    singleton: Vec<bool>,
    final_exhausted: bool,
}

impl ZmParse {
    /// Number of words `c_N`.
    pub fn word_count(&self) -> usize {
        self.boundaries.len()
    }

    /// Word end offsets (exclusive); the last entry is `|y|`.
    pub fn boundaries(&self) -> &[usize] {
        &self.boundaries
    }

    pub fn word_lengths(&self) -> Vec<usize> {
        let mut prev = 0;
        self.boundaries
            .iter()
            .map(|&e| {
                let l = e - prev;
                prev = e;
                l
            })
            .collect()
    }

    /// Per-word flag: the one-letter no-match rule fired.
    pub fn singleton_flags(&self) -> &[bool] {
        &self.singleton
    }

    /// The final word ended only because `y` ran out, so its maximality was
    /// never decided.
    pub fn final_exhausted(&self) -> bool {
        self.final_exhausted
    }

    pub fn words<'y>(&'y self, y: &'y Sequence) -> impl Iterator<Item = &'y [Symbol]> {
        let syms = y.symbols();
        let bounds = &self.boundaries;
        bounds.iter().enumerate().map(move |(j, &end)| {
            let start = if j == 0 { 0 } else { bounds[j - 1] };
            &syms[start..end]
        })
    }
}

/// Parses `y` against a prebuilt index over `x`.
pub fn zm_parse_with_index(idx: &MatchIndex, y: &Sequence) -> Result<ZmParse> {
    check_alphabets(idx.source(), y)?;
    let n = y.len();
    if n == 0 {
        return Err(Error::Range("cross parsing needs a nonempty y".into()));
    }
    let syms = y.symbols();
    let mut boundaries = Vec::new();
    let mut singleton = Vec::new();
    let mut final_exhausted = false;
    let mut pos = 0;
    while pos < n {
        let mut cursor = idx.cursor();
        let mut extended_to_end = true;
        for &s in &syms[pos..] {
            if !idx.try_extend(&mut cursor, s) {
                extended_to_end = false;
                break;
            }
        }
        let l = cursor.length();
        if l == 0 {
            boundaries.push(pos + 1);
            singleton.push(true);
            pos += 1;
        } else {
            boundaries.push(pos + l);
            singleton.push(false);
            pos += l;
            if pos == n {
                final_exhausted = extended_to_end;
            }
        }
    }
    Ok(ZmParse {
        boundaries,
        singleton,
        final_exhausted,
    })
}

/// Greedy cross parsing of `y` using the longest substrings of `x`.
pub fn zm_parse(x: &Sequence, y: &Sequence) -> Result<ZmParse> {
    let idx = MatchIndex::build(x);
    zm_parse_with_index(&idx, y)
}

/// Incremental self-parsing with an explicit phrase trie.
#[derive(Debug, Clone)]
pub struct Lz78Parse {
    boundaries: Vec<usize>,
    final_incomplete: bool,
    trie_nodes: usize,
}

impl Lz78Parse {
    pub fn phrase_count(&self) -> usize {
        self.boundaries.len()
    }

    pub fn boundaries(&self) -> &[usize] {
        &self.boundaries
    }

    /// The trailing phrase repeats an earlier one because input ended
    /// mid-extension. It is still counted.
    pub fn final_incomplete(&self) -> bool {
        self.final_incomplete
    }

    /// Nodes in the phrase trie, root included.
    pub fn trie_nodes(&self) -> usize {
        self.trie_nodes
    }
}

pub fn lz78_parse(y: &Sequence) -> Result<Lz78Parse> {
    let n = y.len();
    if n == 0 {
        return Err(Error::Range("parsing needs a nonempty sequence".into()));
    }
    let a = y.alphabet().size();
    const UNSET: u32 = u32::MAX;
    // Dense trie; at most one node is added per phrase.
    let mut children: Vec<u32> = vec![UNSET; a];
    let mut boundaries = Vec::new();
    let mut node = 0usize;
    let mut final_incomplete = false;
    for (i, &s) in y.symbols().iter().enumerate() {
        let slot = node * a + s.index();
        if children[slot] == UNSET {
            let fresh = (children.len() / a) as u32;
            children[slot] = fresh;
            children.extend(std::iter::repeat(UNSET).take(a));
            boundaries.push(i + 1);
            node = 0;
        } else {
            node = children[slot] as usize;
            if i + 1 == n {
                boundaries.push(n);
                final_incomplete = true;
            }
        }
    }
    Ok(Lz78Parse {
        boundaries,
        final_incomplete,
        trie_nodes: children.len() / a,
    })
}

/// Shortest-prefix-under-threshold parsing.
#[derive(Debug, Clone)]
pub struct ThresholdParse {
    boundaries: Vec<usize>,
    word_logps: Vec<f64>,
    log_theta: f64,
    last_word_complete: bool,
}

impl ThresholdParse {
    pub fn word_count(&self) -> usize {
        self.boundaries.len()
    }

    pub fn boundaries(&self) -> &[usize] {
        &self.boundaries
    }

    /// `ln P[word]` for each word, in order.
    pub fn word_logps(&self) -> &[f64] {
        &self.word_logps
    }

    pub fn log_theta(&self) -> f64 {
        self.log_theta
    }

    /// Whether the final word reached the threshold before input ran out.
    pub fn last_word_complete(&self) -> bool {
        self.last_word_complete
    }

    pub fn words<'y>(&'y self, y: &'y Sequence) -> impl Iterator<Item = &'y [Symbol]> {
        let syms = y.symbols();
        let bounds = &self.boundaries;
        bounds.iter().enumerate().map(move |(j, &end)| {
            let start = if j == 0 { 0 } else { bounds[j - 1] };
            &syms[start..end]
        })
    }
}

/// Parses `y` into sequential shortest prefixes with `P[word] <= theta`.
/// With `theta = N^(-1+eps)` this is the match-prone auxiliary parsing, with
/// `theta = N^(-1-eps)` the match-averse one.
pub fn threshold_parse(
    y: &Sequence,
    p: &dyn CylinderMeasure,
    theta: f64,
) -> Result<ThresholdParse> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::Range(format!("theta {theta} outside (0, 1]")));
    }
    if !p.alphabet().compatible(y.alphabet()) {
        return Err(Error::AlphabetMismatch {
            left: p.alphabet().size(),
            right: y.alphabet().size(),
        });
    }
    let log_theta = theta.ln();
    let mut parse = ThresholdParse {
        boundaries: Vec::new(),
        word_logps: Vec::new(),
        log_theta,
        last_word_complete: true,
    };
    threshold_parse_span(y, p, log_theta, 0, y.len(), &mut parse)?;
    Ok(parse)
}

/// Threshold-parses `y[start..end]`, appending words to `out`. Sets
/// `last_word_complete` from the final word of the span.
fn threshold_parse_span(
    y: &Sequence,
    p: &dyn CylinderMeasure,
    log_theta: f64,
    start: usize,
    end: usize,
    out: &mut ThresholdParse,
) -> Result<()> {
    let syms = y.symbols();
    let cutoff = guarded_log_theta(log_theta);
    let mut scorer = p.scorer();
    let mut pos = start;
    while pos < end {
        scorer.reset();
        let mut lp = 0.0;
        let mut complete = false;
        let mut i = pos;
        while i < end {
            lp = scorer.push(syms[i]);
            i += 1;
            if lp == f64::NEG_INFINITY {
                return Err(Error::SupportViolation { position: i });
            }
            if lp <= cutoff {
                complete = true;
                break;
            }
        }
        out.boundaries.push(i);
        out.word_logps.push(lp);
        out.last_word_complete = complete;
        pos = i;
    }
    Ok(())
}

/// One block of the block parsing: threshold words plus a possibly-empty
/// buffer tail.
#[derive(Debug, Clone)]
pub struct Block {
    start: usize,
    end: usize,
    word_ends: Vec<usize>,
    word_logps: Vec<f64>,
}

impl Block {
    /// Number of complete words `d_s`.
    pub fn word_count(&self) -> usize {
        self.word_ends.len()
    }

    pub fn span(&self) -> std::ops::Range<usize> {
        self.start..self.end
    }

    pub fn word_logps(&self) -> &[f64] {
        &self.word_logps
    }

    pub fn buffer_range(&self) -> std::ops::Range<usize> {
        let buffer_start = self.word_ends.last().copied().unwrap_or(self.start);
        buffer_start..self.end
    }

    pub fn words<'y>(&'y self, y: &'y Sequence) -> impl Iterator<Item = &'y [Symbol]> {
        let syms = y.symbols();
        let start = self.start;
        let ends = &self.word_ends;
        ends.iter().enumerate().map(move |(j, &end)| {
            let s = if j == 0 { start } else { ends[j - 1] };
            &syms[s..end]
        })
    }

    /// A block is good when its complete words are pairwise distinct.
    pub fn is_good(&self, y: &Sequence) -> bool {
        let mut seen = std::collections::HashSet::new();
        self.words(y).all(|w| seen.insert(w))
    }
}

/// Block-and-buffer parsing of the whole sequence.
#[derive(Debug, Clone)]
pub struct BlockParse {
    block_len: usize,
    log_theta: f64,
    blocks: Vec<Block>,
}

impl BlockParse {
    /// `floor(N^alpha)`.
    pub fn block_len(&self) -> usize {
        self.block_len
    }

    /// Number of blocks `M_N`.
    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn log_theta(&self) -> f64 {
        self.log_theta
    }

    /// Total word count over all blocks.
    pub fn total_word_count(&self) -> usize {
        self.blocks.iter().map(|b| b.word_count()).sum()
    }
}

/// Cuts `y` into `ceil(N / floor(N^alpha))` blocks and threshold-parses each
/// with `theta = N^(-1-eps)`; per-block leftovers become buffers.
pub fn block_parse(
    y: &Sequence,
    p: &dyn CylinderMeasure,
    epsilon: f64,
    alpha: f64,
) -> Result<BlockParse> {
    let n = y.len();
    if n == 0 {
        return Err(Error::Range("block parsing needs a nonempty sequence".into()));
    }
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::Range(format!("epsilon {epsilon} outside (0, 1/2)")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Range(format!("alpha {alpha} outside (0, 1)")));
    }
    if !p.alphabet().compatible(y.alphabet()) {
        return Err(Error::AlphabetMismatch {
            left: p.alphabet().size(),
            right: y.alphabet().size(),
        });
    }
    let block_len = ((n as f64).powf(alpha).floor() as usize).max(1);
    let log_theta = -(1.0 + epsilon) * (n as f64).ln();
    let mut blocks = Vec::with_capacity(n.div_ceil(block_len));
    let mut start = 0;
    while start < n {
        let end = (start + block_len).min(n);
        let mut span = ThresholdParse {
            boundaries: Vec::new(),
            word_logps: Vec::new(),
            log_theta,
            last_word_complete: true,
        };
        threshold_parse_span(y, p, log_theta, start, end, &mut span)?;
        let mut word_ends = span.boundaries;
        let mut word_logps = span.word_logps;
        if !span.last_word_complete {
            // The unfinished tail is the buffer, not a word.
            word_ends.pop();
            word_logps.pop();
        }
        blocks.push(Block {
            start,
            end,
            word_ends,
            word_logps,
        });
        start = end;
    }
    Ok(BlockParse {
        block_len,
        log_theta,
        blocks,
    })
}

/// Splits block indices into the good set (pairwise-distinct words) and the
/// bad set.
pub fn classify_blocks(bp: &BlockParse, y: &Sequence) -> (Vec<usize>, Vec<usize>) {
    let mut good = Vec::new();
    let mut bad = Vec::new();
    for (s, block) in bp.blocks().iter().enumerate() {
        if block.is_good(y) {
            good.push(s);
        } else {
            bad.push(s);
        }
    }
    (good, bad)
}

/// Number of words (counted with multiplicity) occurring in the indexed `x`.
pub fn count_words_matched<'w, I>(idx: &MatchIndex, words: I) -> usize
where
    I: IntoIterator<Item = &'w [Symbol]>,
{
    words
        .into_iter()
        .filter(|w| idx.contains_slice(w))
        .count()
}
