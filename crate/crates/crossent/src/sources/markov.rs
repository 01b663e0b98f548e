//! Order-k Markov measures.
//!
//! An order-k model is stored as an order-1 chain on the state space of
//! k-words (dense radix encoding, most significant symbol first), so the
//! stationary-distribution and irreducibility machinery is shared across
//! orders. Cylinder probabilities are exact: marginals of the stationary
//! vector below level k, a product of transition probabilities above.

use super::{Categorical, CylinderMeasure, PrefixScorer, ROW_SUM_TOLERANCE, STATIONARY_RESIDUAL};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::seq::{Alphabet, Sequence, Symbol};

/// Hard cap on the flattened transition table, to keep lifted state spaces sane.
const MAX_TABLE: usize = 1 << 22;
/// Dense linear solve up to this many states; power iteration beyond.
const DENSE_SOLVE_LIMIT: usize = 512;

#[derive(Debug, Clone)]
pub struct MarkovModel {
    alphabet: Alphabet,
    order: usize,
    states: usize,
    /// `states x alphabet`, row-major, rows exactly normalized.
    trans: Vec<f64>,
    log_trans: Vec<f64>,
    pi: Vec<f64>,
    log_pi: Vec<f64>,
    pi_cat: Categorical,
    row_cats: Vec<Categorical>,
    /// `alphabet^(order-1)`, used by state advancement.
    stride: usize,
}

impl MarkovModel {
    /// Validates and builds a model. Rows must sum to 1 within `1e-9` (they
    /// are renormalized exactly after the gate). A supplied `pi` is verified
    /// stationary; when absent, the stationary vector of the unique closed
    /// communicating class is computed and transient states get mass zero.
    pub fn new(
        alphabet: Alphabet,
        order: usize,
        rows: Vec<Vec<f64>>,
        pi: Option<Vec<f64>>,
    ) -> Result<MarkovModel> {
        if order == 0 {
            return Err(Error::Config("markov order must be >= 1".into()));
        }
        let a = alphabet.size();
        let states = (a as u128).checked_pow(order as u32).ok_or_else(|| {
            Error::Config("alphabet^order overflows".into())
        })?;
        if states.saturating_mul(a as u128) > MAX_TABLE as u128 {
            return Err(Error::Config(format!(
                "state space too large: {states} states over alphabet {a}"
            )));
        }
        let states = states as usize;
        if rows.len() != states {
            return Err(Error::Config(format!(
                "expected {states} transition rows, got {}",
                rows.len()
            )));
        }
        let mut trans = Vec::with_capacity(states * a);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != a {
                return Err(Error::Config(format!(
                    "transition row {i} has {} entries, expected {a}",
                    row.len()
                )));
            }
            let sum: f64 = row.iter().sum();
            if !sum.is_finite() || (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::Config(format!(
                    "transition row {i} sums to {sum}, not 1"
                )));
            }
            if let Some(p) = row.iter().find(|p| !p.is_finite() || **p < 0.0) {
                return Err(Error::Config(format!(
                    "transition row {i} has invalid probability {p}"
                )));
            }
            trans.extend(row.iter().map(|p| p / sum));
        }
        let stride = states / a;

        let adj = |s: usize| -> Vec<usize> {
            (0..a)
                .filter(|&b| trans[s * a + b] > 0.0)
                .map(|b| (s % stride) * a + b)
                .collect()
        };
        let graph: Vec<Vec<usize>> = (0..states).map(adj).collect();

        let pi = match pi {
            Some(user_pi) => {
                if user_pi.len() != states {
                    return Err(Error::Config(format!(
                        "pi has {} entries, expected {states}",
                        user_pi.len()
                    )));
                }
                let sum: f64 = user_pi.iter().sum();
                if (sum - 1.0).abs() > ROW_SUM_TOLERANCE
                    || user_pi.iter().any(|p| !p.is_finite() || *p < 0.0)
                {
                    return Err(Error::Config("pi is not a probability vector".into()));
                }
                let pi: Vec<f64> = user_pi.iter().map(|p| p / sum).collect();
                let step = |s: usize, b: usize| (s % stride) * a + b;
                let mut residual = 0.0f64;
                let mut next = vec![0.0; states];
                for s in 0..states {
                    for b in 0..a {
                        next[step(s, b)] += pi[s] * trans[s * a + b];
                    }
                }
                for s in 0..states {
                    residual = residual.max((next[s] - pi[s]).abs());
                }
                if residual > STATIONARY_RESIDUAL {
                    return Err(Error::Config(format!(
                        "supplied pi is not stationary: residual {residual:.3e}"
                    )));
                }
                // The support must be one communicating class.
                let support: Vec<usize> = (0..states).filter(|&s| pi[s] > 0.0).collect();
                check_support_communicates(&graph, &support)?;
                pi
            }
            None => stationary_on_closed_class(&graph, &trans, states, a, stride)?,
        };

        let log_trans = trans.iter().map(|p| p.ln()).collect();
        let log_pi = pi.iter().map(|p| p.ln()).collect();
        let pi_cat = Categorical::new(&pi);
        let row_cats = (0..states)
            .map(|s| Categorical::new(&trans[s * a..(s + 1) * a]))
            .collect();

        Ok(MarkovModel {
            alphabet,
            order,
            states,
            trans,
            log_trans,
            pi,
            log_pi,
            pi_cat,
            row_cats,
            stride,
        })
    }

    /// Product measure with one-letter marginal `probs`.
    pub fn iid(alphabet: Alphabet, probs: Vec<f64>) -> Result<MarkovModel> {
        let rows = vec![probs.clone(); probs.len()];
        MarkovModel::new(alphabet, 1, rows, Some(probs))
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn state_count(&self) -> usize {
        self.states
    }

    pub fn stationary(&self) -> &[f64] {
        &self.pi
    }

    pub fn transition(&self, state: usize, symbol: usize) -> f64 {
        self.trans[state * self.alphabet.size() + symbol]
    }

    pub fn log_transition(&self, state: usize, symbol: usize) -> f64 {
        self.log_trans[state * self.alphabet.size() + symbol]
    }

    #[inline]
    pub fn advance(&self, state: usize, symbol: usize) -> usize {
        (state % self.stride) * self.alphabet.size() + symbol
    }

    /// State reached after reading `w`; requires `w.len() >= order`.
    pub fn word_state(&self, w: &[Symbol]) -> usize {
        let a = self.alphabet.size();
        w[w.len() - self.order..]
            .iter()
            .fold(0, |acc, s| acc * a + s.index())
    }

    fn decode_state(&self, state: usize) -> Vec<Symbol> {
        let a = self.alphabet.size();
        let mut out = vec![Symbol(0); self.order];
        let mut rem = state;
        for slot in out.iter_mut().rev() {
            *slot = Symbol((rem % a) as u8);
            rem /= a;
        }
        out
    }

    /// Marginal stationary probability of a prefix shorter than the order:
    /// the encoded prefix owns a contiguous block of states.
    fn short_marginal(&self, enc: usize, len: usize) -> f64 {
        let width = self.states / self.alphabet.size().pow(len as u32);
        self.pi[enc * width..(enc + 1) * width].iter().sum()
    }
}

impl CylinderMeasure for MarkovModel {
    fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    fn scorer(&self) -> Box<dyn PrefixScorer + '_> {
        Box::new(MarkovScorer {
            model: self,
            enc: 0,
            len: 0,
            state: 0,
            logp: 0.0,
            inc: 0.0,
        })
    }

    fn log_cylinder(&self, word: &[Symbol]) -> f64 {
        let a = self.alphabet.size();
        let k = self.order;
        if word.is_empty() {
            return 0.0;
        }
        if word.len() < k {
            let enc = word.iter().fold(0, |acc, s| acc * a + s.index());
            return self.short_marginal(enc, word.len()).ln();
        }
        let mut state = word[..k].iter().fold(0, |acc, s| acc * a + s.index());
        let mut lp = self.log_pi[state];
        for &s in &word[k..] {
            if lp == f64::NEG_INFINITY {
                return lp;
            }
            lp += self.log_trans[state * a + s.index()];
            state = self.advance(state, s.index());
        }
        lp
    }

    fn sample(&self, n: usize, rng: &mut RngStream) -> Sequence {
        let syms: Vec<Symbol> = self.sample_stream_impl(rng).take(n).collect();
        Sequence::new(self.alphabet.clone(), syms).expect("model emits valid symbols")
    }

    fn sample_stream<'a>(&'a self, rng: RngStream) -> Box<dyn Iterator<Item = Symbol> + 'a> {
        let mut rng = rng;
        Box::new(OwnedMarkovStream {
            inner: self.start_state(&mut rng),
            model: self,
            rng,
        })
    }
}

impl MarkovModel {
    fn start_state(&self, rng: &mut RngStream) -> StreamState {
        let state = self.pi_cat.draw(rng.uniform());
        StreamState {
            pending: self.decode_state(state),
            emitted: 0,
            state,
        }
    }

    fn sample_stream_impl<'a>(
        &'a self,
        rng: &'a mut RngStream,
    ) -> impl Iterator<Item = Symbol> + 'a {
        let mut st = self.start_state(rng);
        std::iter::from_fn(move || Some(st.step(self, rng)))
    }
}

struct StreamState {
    pending: Vec<Symbol>,
    emitted: usize,
    state: usize,
}

impl StreamState {
    fn step(&mut self, model: &MarkovModel, rng: &mut RngStream) -> Symbol {
        if self.emitted < self.pending.len() {
            let s = self.pending[self.emitted];
            self.emitted += 1;
            return s;
        }
        let b = model.row_cats[self.state].draw(rng.uniform());
        self.state = model.advance(self.state, b);
        Symbol(b as u8)
    }
}

struct OwnedMarkovStream<'a> {
    model: &'a MarkovModel,
    rng: RngStream,
    inner: StreamState,
}

impl Iterator for OwnedMarkovStream<'_> {
    type Item = Symbol;
    fn next(&mut self) -> Option<Symbol> {
        Some(self.inner.step(self.model, &mut self.rng))
    }
}

#[derive(Clone)]
struct MarkovScorer<'a> {
    model: &'a MarkovModel,
    /// Radix encoding of the prefix while shorter than the order.
    enc: usize,
    len: usize,
    state: usize,
    logp: f64,
    inc: f64,
}

impl PrefixScorer for MarkovScorer<'_> {
    fn push(&mut self, s: Symbol) -> f64 {
        if self.logp == f64::NEG_INFINITY {
            self.inc = f64::NEG_INFINITY;
            return self.logp;
        }
        let a = self.model.alphabet.size();
        if self.len < self.model.order {
            self.enc = self.enc * a + s.index();
            self.len += 1;
            let prev = self.logp;
            self.logp = self.model.short_marginal_or_full(self.enc, self.len);
            self.inc = if self.len == 1 { self.logp } else { self.logp - prev };
            if self.len == self.model.order {
                self.state = self.enc;
            }
        } else {
            self.inc = self.model.log_trans[self.state * a + s.index()];
            self.logp += self.inc;
            self.state = self.model.advance(self.state, s.index());
        }
        self.logp
    }

    fn last_increment(&self) -> f64 {
        self.inc
    }

    fn log_prob(&self) -> f64 {
        self.logp
    }

    fn reset(&mut self) {
        self.enc = 0;
        self.len = 0;
        self.state = 0;
        self.logp = 0.0;
        self.inc = 0.0;
    }

    fn fork(&self) -> Box<dyn PrefixScorer + '_> {
        Box::new(self.clone())
    }
}

impl MarkovModel {
    fn short_marginal_or_full(&self, enc: usize, len: usize) -> f64 {
        if len == self.order {
            self.log_pi[enc]
        } else {
            self.short_marginal(enc, len).ln()
        }
    }
}

/// Stationary row vector of an irreducible stochastic matrix: dense solve for
/// small matrices, damped power iteration beyond. Errors on reducible input
/// (detected by a strongly-connected-component check).
pub fn stationary_distribution(p: &[Vec<f64>]) -> Result<Vec<f64>> {
    let m = p.len();
    if m == 0 {
        return Err(Error::Config("empty transition matrix".into()));
    }
    let mut flat = Vec::with_capacity(m * m);
    for (i, row) in p.iter().enumerate() {
        if row.len() != m {
            return Err(Error::Config("transition matrix is not square".into()));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOLERANCE
            || row.iter().any(|x| !x.is_finite() || *x < 0.0)
        {
            return Err(Error::Config(format!("row {i} is not stochastic")));
        }
        flat.extend(row.iter().map(|x| x / sum));
    }
    let graph: Vec<Vec<usize>> = (0..m)
        .map(|i| (0..m).filter(|&j| flat[i * m + j] > 0.0).collect())
        .collect();
    let comps = strongly_connected_components(&graph);
    if comps.len() != 1 {
        return Err(Error::Config(format!(
            "reducible transition matrix: {} communicating classes",
            comps.len()
        )));
    }
    let get = |i: usize, j: usize| flat[i * m + j];
    let pi = solve_stationary(m, &get)?;
    Ok(pi)
}

/// Stationary vector on the unique closed communicating class; transient
/// states get mass zero. Errors when two or more closed classes exist.
fn stationary_on_closed_class(
    graph: &[Vec<usize>],
    trans: &[f64],
    states: usize,
    a: usize,
    stride: usize,
) -> Result<Vec<f64>> {
    let comps = strongly_connected_components(graph);
    let mut comp_of = vec![usize::MAX; states];
    for (ci, comp) in comps.iter().enumerate() {
        for &s in comp {
            comp_of[s] = ci;
        }
    }
    let mut closed = Vec::new();
    'comps: for (ci, comp) in comps.iter().enumerate() {
        for &s in comp {
            for &t in &graph[s] {
                if comp_of[t] != ci {
                    continue 'comps;
                }
            }
        }
        closed.push(ci);
    }
    if closed.len() != 1 {
        return Err(Error::Config(format!(
            "reducible chain: {} closed communicating classes",
            closed.len()
        )));
    }
    let class = &comps[closed[0]];
    let mut index_of = vec![usize::MAX; states];
    for (i, &s) in class.iter().enumerate() {
        index_of[s] = i;
    }
    let c = class.len();
    let get = |i: usize, j: usize| {
        let s = class[i];
        // Probability of moving from class state i to class state j in one step.
        let mut total = 0.0;
        for b in 0..a {
            if (s % stride) * a + b == class[j] {
                total += trans[s * a + b];
            }
        }
        total
    };
    let restricted = solve_stationary(c, &get)?;
    let mut pi = vec![0.0; states];
    for (i, &s) in class.iter().enumerate() {
        pi[s] = restricted[i];
    }
    Ok(pi)
}

fn solve_stationary(m: usize, get: &dyn Fn(usize, usize) -> f64) -> Result<Vec<f64>> {
    let pi = if m <= DENSE_SOLVE_LIMIT {
        dense_stationary(m, get)
    } else {
        power_stationary(m, get)
    }?;
    // Verify the residual before handing the vector out.
    let mut residual = 0.0f64;
    for j in 0..m {
        let mut v = 0.0;
        for i in 0..m {
            v += pi[i] * get(i, j);
        }
        residual = residual.max((v - pi[j]).abs());
    }
    if residual > 1e-12 {
        return Err(Error::Config(format!(
            "stationary solve failed: residual {residual:.3e}"
        )));
    }
    Ok(pi)
}

/// Gaussian elimination on (P^T - I) with the last equation replaced by the
/// normalization sum(pi) = 1.
fn dense_stationary(m: usize, get: &dyn Fn(usize, usize) -> f64) -> Result<Vec<f64>> {
    let n = m;
    let mut aug = vec![0.0f64; n * (n + 1)];
    for i in 0..n - 1 {
        for j in 0..n {
            aug[i * (n + 1) + j] = get(j, i) - if i == j { 1.0 } else { 0.0 };
        }
    }
    for j in 0..n {
        aug[(n - 1) * (n + 1) + j] = 1.0;
    }
    aug[(n - 1) * (n + 1) + n] = 1.0;

    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r1, &r2| {
                aug[r1 * (n + 1) + col]
                    .abs()
                    .total_cmp(&aug[r2 * (n + 1) + col].abs())
            })
            .unwrap();
        if aug[pivot * (n + 1) + col].abs() < 1e-14 {
            return Err(Error::Config("singular stationary system".into()));
        }
        if pivot != col {
            for j in 0..=n {
                aug.swap(col * (n + 1) + j, pivot * (n + 1) + j);
            }
        }
        let d = aug[col * (n + 1) + col];
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = aug[r * (n + 1) + col] / d;
            if f != 0.0 {
                for j in col..=n {
                    aug[r * (n + 1) + j] -= f * aug[col * (n + 1) + j];
                }
            }
        }
    }
    let mut pi: Vec<f64> = (0..n)
        .map(|i| aug[i * (n + 1) + n] / aug[i * (n + 1) + i])
        .collect();
    // Clip the tiny negatives that elimination can leave on zero entries.
    let mut total = 0.0;
    for p in pi.iter_mut() {
        if *p < 0.0 && *p > -1e-12 {
            *p = 0.0;
        }
        total += *p;
    }
    for p in pi.iter_mut() {
        *p /= total;
    }
    Ok(pi)
}

/// Damped power iteration (lazy chain (P + I)/2 shares the stationary vector
/// and is aperiodic).
fn power_stationary(m: usize, get: &dyn Fn(usize, usize) -> f64) -> Result<Vec<f64>> {
    let mut pi = vec![1.0 / m as f64; m];
    let mut next = vec![0.0f64; m];
    for _ in 0..200_000 {
        for v in next.iter_mut() {
            *v = 0.0;
        }
        for i in 0..m {
            if pi[i] == 0.0 {
                continue;
            }
            for j in 0..m {
                let p = get(i, j);
                if p > 0.0 {
                    next[j] += pi[i] * p;
                }
            }
        }
        let mut diff = 0.0f64;
        let mut total = 0.0f64;
        for j in 0..m {
            next[j] = 0.5 * (next[j] + pi[j]);
            total += next[j];
        }
        for j in 0..m {
            next[j] /= total;
            diff = diff.max((next[j] - pi[j]).abs());
        }
        std::mem::swap(&mut pi, &mut next);
        if diff < 1e-15 {
            return Ok(pi);
        }
    }
    Err(Error::Config(
        "power iteration did not converge to the stationary vector".into(),
    ))
}

fn check_support_communicates(graph: &[Vec<usize>], support: &[usize]) -> Result<()> {
    if support.is_empty() {
        return Err(Error::Config("pi has empty support".into()));
    }
    let in_support: std::collections::HashSet<usize> = support.iter().copied().collect();
    // Closure: no positive transition may leave the support.
    for &s in support {
        for &t in &graph[s] {
            if !in_support.contains(&t) {
                return Err(Error::Config(
                    "pi support is not closed under positive transitions".into(),
                ));
            }
        }
    }
    // Strong connectivity restricted to the support.
    let mut index_of = std::collections::HashMap::new();
    for (i, &s) in support.iter().enumerate() {
        index_of.insert(s, i);
    }
    let sub: Vec<Vec<usize>> = support
        .iter()
        .map(|&s| graph[s].iter().map(|t| index_of[t]).collect())
        .collect();
    if strongly_connected_components(&sub).len() != 1 {
        return Err(Error::Config(
            "chain is not irreducible over the support of pi".into(),
        ));
    }
    Ok(())
}

/// Iterative Kosaraju.
pub(crate) fn strongly_connected_components(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = adj.len();
    let mut order = Vec::with_capacity(n);
    let mut visited = vec![false; n];
    for start in 0..n {
        if visited[start] {
            continue;
        }
        let mut stack = vec![(start, 0usize)];
        visited[start] = true;
        while let Some(&mut (v, ref mut i)) = stack.last_mut() {
            if *i < adj[v].len() {
                let w = adj[v][*i];
                *i += 1;
                if !visited[w] {
                    visited[w] = true;
                    stack.push((w, 0));
                }
            } else {
                order.push(v);
                stack.pop();
            }
        }
    }
    let mut radj = vec![Vec::new(); n];
    for (v, outs) in adj.iter().enumerate() {
        for &w in outs {
            radj[w].push(v);
        }
    }
    let mut comp = Vec::new();
    let mut assigned = vec![false; n];
    for &start in order.iter().rev() {
        if assigned[start] {
            continue;
        }
        let mut members = Vec::new();
        let mut stack = vec![start];
        assigned[start] = true;
        while let Some(v) = stack.pop() {
            members.push(v);
            for &w in &radj[v] {
                if !assigned[w] {
                    assigned[w] = true;
                    stack.push(w);
                }
            }
        }
        comp.push(members);
    }
    comp
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sources::enumerate_support;

    fn bern(p1: f64) -> MarkovModel {
        MarkovModel::iid(Alphabet::binary(), vec![1.0 - p1, p1]).unwrap()
    }

    #[test]
    fn stationary_symmetric() {
        let pi = stationary_distribution(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        assert!((pi[0] - 0.5).abs() < 1e-13 && (pi[1] - 0.5).abs() < 1e-13);
    }

    #[test]
    fn stationary_solves_balance() {
        // 0.1 pi0 = 0.5 pi1 with pi0 + pi1 = 1.
        let pi = stationary_distribution(&[vec![0.9, 0.1], vec![0.5, 0.5]]).unwrap();
        assert!((pi[0] - 5.0 / 6.0).abs() < 1e-13);
        assert!((pi[1] - 1.0 / 6.0).abs() < 1e-13);
    }

    #[test]
    fn stationary_rejects_identity() {
        let err = stationary_distribution(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert!(matches!(err, Err(Error::Config(_))));
    }

    #[test]
    fn transient_states_get_zero_mass() {
        // State 1 leaks into state 0 and is never entered.
        let m = MarkovModel::new(
            Alphabet::binary(),
            1,
            vec![vec![1.0, 0.0], vec![1.0, 0.0]],
            None,
        )
        .unwrap();
        assert!((m.stationary()[0] - 1.0).abs() < 1e-13);
        assert_eq!(m.stationary()[1], 0.0);
    }

    #[test]
    fn deterministic_models_sample_deterministically() {
        let ones = MarkovModel::iid(Alphabet::binary(), vec![0.0, 1.0]).unwrap();
        let mut rng = RngStream::new(1, 0);
        let s = ones.sample(32, &mut rng);
        assert!(s.symbols().iter().all(|x| x.index() == 1));

        let alternating = MarkovModel::new(
            Alphabet::binary(),
            1,
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            Some(vec![0.5, 0.5]),
        )
        .unwrap();
        let mut rng = RngStream::new(9, 4);
        let s = alternating.sample(64, &mut rng);
        for w in s.symbols().windows(2) {
            assert_ne!(w[0], w[1]);
        }
    }

    #[test]
    fn bernoulli_cylinders() {
        let m = bern(0.3);
        let w = Sequence::from_text("10", &Alphabet::binary()).unwrap();
        let lp = m.log_cylinder(w.symbols());
        assert!((lp - (0.3f64.ln() + 0.7f64.ln())).abs() < 1e-12);
        assert_eq!(m.log_cylinder(&[]), 0.0);
    }

    #[test]
    fn zero_transition_closes_support() {
        let m = MarkovModel::new(
            Alphabet::binary(),
            1,
            vec![vec![0.5, 0.5], vec![1.0, 0.0]],
            None,
        )
        .unwrap();
        let w11 = Sequence::from_text("11", &Alphabet::binary()).unwrap();
        assert!(!m.in_support(w11.symbols()));
        let w10 = Sequence::from_text("10", &Alphabet::binary()).unwrap();
        assert!(m.in_support(w10.symbols()));
    }

    #[test]
    fn cylinder_stationarity_both_sides() {
        let m = MarkovModel::new(
            Alphabet::binary(),
            2,
            vec![
                vec![0.7, 0.3],
                vec![0.4, 0.6],
                vec![0.2, 0.8],
                vec![0.9, 0.1],
            ],
            None,
        )
        .unwrap();
        for n in 1..=6 {
            for (word, lp) in enumerate_support(&m, n, 1 << 12).unwrap() {
                let p = lp.exp();
                let mut left = 0.0;
                let mut right = 0.0;
                for c in 0..2u8 {
                    let mut ext = vec![Symbol(c)];
                    ext.extend_from_slice(&word);
                    left += m.log_cylinder(&ext).exp();
                    let mut ext = word.clone();
                    ext.push(Symbol(c));
                    right += m.log_cylinder(&ext).exp();
                }
                assert!((left - p).abs() < 1e-10, "left extension at n={n}");
                assert!((right - p).abs() < 1e-10, "right extension at n={n}");
            }
        }
    }

    #[test]
    fn order_k_decoupling_identity() {
        let m = MarkovModel::new(
            Alphabet::binary(),
            2,
            vec![
                vec![0.7, 0.3],
                vec![0.4, 0.6],
                vec![0.2, 0.8],
                vec![0.9, 0.1],
            ],
            None,
        )
        .unwrap();
        // P[ab] = P[a] * P(b | last k of a) whenever |a| >= k.
        for (a_word, lp_a) in enumerate_support(&m, 3, 64).unwrap() {
            for (b_word, _) in enumerate_support(&m, 2, 64).unwrap() {
                let mut ab = a_word.clone();
                ab.extend_from_slice(&b_word);
                let lhs = m.log_cylinder(&ab);
                let mut rhs = lp_a;
                let mut state = m.word_state(&a_word);
                for &s in &b_word {
                    rhs += m.log_transition(state, s.index());
                    state = m.advance(state, s.index());
                }
                if lhs == f64::NEG_INFINITY || rhs == f64::NEG_INFINITY {
                    assert_eq!(lhs, rhs);
                } else {
                    assert!((lhs - rhs).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn scorer_matches_closed_form() {
        let m = MarkovModel::new(
            Alphabet::indexed(3).unwrap(),
            2,
            (0..9)
                .map(|i| {
                    let p = [
                        vec![0.2, 0.5, 0.3],
                        vec![0.6, 0.1, 0.3],
                        vec![0.3, 0.3, 0.4],
                    ];
                    p[i % 3].clone()
                })
                .collect(),
            None,
        )
        .unwrap();
        let mut rng = RngStream::new(5, 5);
        for _ in 0..50 {
            let n = 1 + rng.below(10);
            let word: Vec<Symbol> = (0..n).map(|_| Symbol(rng.below(3) as u8)).collect();
            let mut sc = m.scorer();
            let mut lp = 0.0;
            for &s in &word {
                lp = sc.push(s);
            }
            let closed = m.log_cylinder(&word);
            if closed == f64::NEG_INFINITY {
                assert_eq!(lp, f64::NEG_INFINITY);
            } else {
                assert!((lp - closed).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sampling_law_matches_cylinders() {
        let m = bern(0.5);
        let mut rng = RngStream::new(2024, 0);
        let s = m.sample(1_000_000, &mut rng);
        let mut count01 = 0usize;
        for w in s.symbols().windows(2) {
            if w[0].index() == 0 && w[1].index() == 1 {
                count01 += 1;
            }
        }
        let n_pairs = (s.len() - 1) as f64;
        let p = 0.25;
        let sigma = (n_pairs * p * (1.0 - p)).sqrt();
        let dev = (count01 as f64 - n_pairs * p).abs();
        assert!(dev < 4.0 * sigma, "dev {dev} vs sigma {sigma}");
    }

    #[test]
    fn sample_respects_marginals_below_order() {
        let m = MarkovModel::new(
            Alphabet::binary(),
            2,
            vec![
                vec![0.7, 0.3],
                vec![0.4, 0.6],
                vec![0.2, 0.8],
                vec![0.9, 0.1],
            ],
            None,
        )
        .unwrap();
        // Length-1 sample law equals the one-letter marginal.
        let p1 = m.log_cylinder(&[Symbol(1)]).exp();
        let mut hits = 0usize;
        let trials = 200_000;
        for t in 0..trials {
            let mut rng = RngStream::new(77, t as u64);
            if m.sample(1, &mut rng).symbols()[0].index() == 1 {
                hits += 1;
            }
        }
        let sigma = (trials as f64 * p1 * (1.0 - p1)).sqrt();
        assert!((hits as f64 - trials as f64 * p1).abs() < 4.0 * sigma);
    }
}
