//! Hidden-Markov measures.
//!
//! A model is the usual `(pi, P, R)` tuple: a stationary Markov chain on a
//! finite hidden alphabet and a per-state emission row over the visible
//! alphabet. Cylinder probabilities come from the forward recursion with
//! per-step rescaling, so words of a few hundred symbols score without
//! underflow.

use super::{Categorical, CylinderMeasure, PrefixScorer, ROW_SUM_TOLERANCE, STATIONARY_RESIDUAL};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::seq::{Alphabet, Sequence, Symbol};
use crate::sources::markov::{strongly_connected_components, MarkovModel};

#[derive(Debug, Clone)]
pub struct HmmModel {
    alphabet: Alphabet,
    hidden: usize,
    /// Hidden transitions, `hidden x hidden`, rows normalized.
    trans: Vec<f64>,
    /// Emissions, `hidden x alphabet`, rows normalized.
    emit: Vec<f64>,
    pi: Vec<f64>,
    pi_cat: Categorical,
    trans_cats: Vec<Categorical>,
    emit_cats: Vec<Categorical>,
}

impl HmmModel {
    /// Validates and builds a model. The hidden chain must be irreducible;
    /// a supplied `pi` is verified stationary, a missing one is computed.
    pub fn new(
        alphabet: Alphabet,
        p_rows: Vec<Vec<f64>>,
        r_rows: Vec<Vec<f64>>,
        pi: Option<Vec<f64>>,
    ) -> Result<HmmModel> {
        let s = p_rows.len();
        if s == 0 {
            return Err(Error::Config("hidden alphabet must be nonempty".into()));
        }
        if r_rows.len() != s {
            return Err(Error::Config(format!(
                "R has {} rows, expected {s}",
                r_rows.len()
            )));
        }
        let normalize = |rows: &[Vec<f64>], width: usize, name: &str| -> Result<Vec<f64>> {
            let mut flat = Vec::with_capacity(rows.len() * width);
            for (i, row) in rows.iter().enumerate() {
                if row.len() != width {
                    return Err(Error::Config(format!(
                        "{name} row {i} has {} entries, expected {width}",
                        row.len()
                    )));
                }
                let sum: f64 = row.iter().sum();
                if !sum.is_finite() || (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                    return Err(Error::Config(format!("{name} row {i} sums to {sum}, not 1")));
                }
                if row.iter().any(|x| !x.is_finite() || *x < 0.0) {
                    return Err(Error::Config(format!("{name} row {i} has an invalid entry")));
                }
                flat.extend(row.iter().map(|x| x / sum));
            }
            Ok(flat)
        };
        let trans = normalize(&p_rows, s, "P")?;
        let emit = normalize(&r_rows, alphabet.size(), "R")?;

        let graph: Vec<Vec<usize>> = (0..s)
            .map(|i| (0..s).filter(|&j| trans[i * s + j] > 0.0).collect())
            .collect();
        if strongly_connected_components(&graph).len() != 1 {
            return Err(Error::Config("hidden chain P is reducible".into()));
        }

        let pi = match pi {
            Some(user_pi) => {
                if user_pi.len() != s {
                    return Err(Error::Config(format!(
                        "pi has {} entries, expected {s}",
                        user_pi.len()
                    )));
                }
                let sum: f64 = user_pi.iter().sum();
                if (sum - 1.0).abs() > ROW_SUM_TOLERANCE
                    || user_pi.iter().any(|x| !x.is_finite() || *x < 0.0)
                {
                    return Err(Error::Config("pi is not a probability vector".into()));
                }
                let pi: Vec<f64> = user_pi.iter().map(|x| x / sum).collect();
                let mut residual = 0.0f64;
                for j in 0..s {
                    let v: f64 = (0..s).map(|i| pi[i] * trans[i * s + j]).sum();
                    residual = residual.max((v - pi[j]).abs());
                }
                if residual > STATIONARY_RESIDUAL {
                    return Err(Error::Config(format!(
                        "supplied pi is not stationary: residual {residual:.3e}"
                    )));
                }
                pi
            }
            None => crate::sources::stationary_distribution(&p_rows)?,
        };

        let pi_cat = Categorical::new(&pi);
        let trans_cats = (0..s)
            .map(|i| Categorical::new(&trans[i * s..(i + 1) * s]))
            .collect();
        let a = alphabet.size();
        let emit_cats = (0..s)
            .map(|i| Categorical::new(&emit[i * a..(i + 1) * a]))
            .collect();
        Ok(HmmModel {
            alphabet,
            hidden: s,
            trans,
            emit,
            pi,
            pi_cat,
            trans_cats,
            emit_cats,
        })
    }

    /// Deterministic-emission model: hidden order-1 chain observed through a
    /// total letter map `f` (the function-Markov, or lumped, construction).
    pub fn lump(hidden: &MarkovModel, f: &[usize], alphabet: Alphabet) -> Result<HmmModel> {
        if hidden.order() != 1 {
            return Err(Error::Config("lump requires an order-1 hidden chain".into()));
        }
        let s = hidden.alphabet().size();
        if f.len() != s {
            return Err(Error::Config(format!(
                "letter map has {} entries, expected {s}",
                f.len()
            )));
        }
        let a = alphabet.size();
        let mut r_rows = vec![vec![0.0; a]; s];
        for (state, &letter) in f.iter().enumerate() {
            if letter >= a {
                return Err(Error::Config(format!(
                    "letter map sends state {state} to {letter}, outside the alphabet"
                )));
            }
            r_rows[state][letter] = 1.0;
        }
        let p_rows: Vec<Vec<f64>> = (0..s)
            .map(|i| (0..s).map(|j| hidden.transition(i, j)).collect())
            .collect();
        HmmModel::new(alphabet, p_rows, r_rows, Some(hidden.stationary().to_vec()))
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn hidden_size(&self) -> usize {
        self.hidden
    }

    pub fn stationary(&self) -> &[f64] {
        &self.pi
    }

    pub fn transition(&self, i: usize, j: usize) -> f64 {
        self.trans[i * self.hidden + j]
    }

    pub fn emission(&self, state: usize, symbol: usize) -> f64 {
        self.emit[state * self.alphabet.size() + symbol]
    }

    /// Brute-force cylinder probability by summing over all hidden paths;
    /// exponential in `|word|`, used as an oracle in tests.
    pub fn cylinder_by_paths(&self, word: &[Symbol]) -> f64 {
        if word.is_empty() {
            return 1.0;
        }
        let s = self.hidden;
        let n = word.len();
        let mut total = 0.0;
        let mut path = vec![0usize; n];
        loop {
            let mut prob = self.pi[path[0]] * self.emission(path[0], word[0].index());
            for t in 1..n {
                prob *= self.transition(path[t - 1], path[t])
                    * self.emission(path[t], word[t].index());
            }
            total += prob;
            let mut i = n;
            loop {
                if i == 0 {
                    return total;
                }
                i -= 1;
                if path[i] + 1 < s {
                    path[i] += 1;
                    for p in &mut path[i + 1..] {
                        *p = 0;
                    }
                    break;
                }
            }
        }
    }
}

impl CylinderMeasure for HmmModel {
    fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    fn scorer(&self) -> Box<dyn PrefixScorer + '_> {
        Box::new(HmmScorer {
            model: self,
            alpha: vec![0.0; self.hidden],
            scratch: vec![0.0; self.hidden],
            started: false,
            logp: 0.0,
            inc: 0.0,
        })
    }

    fn sample(&self, n: usize, rng: &mut RngStream) -> Sequence {
        let syms: Vec<Symbol> = self.stream_from(rng).take(n).collect();
        Sequence::new(self.alphabet.clone(), syms).expect("model emits valid symbols")
    }

    fn sample_stream<'a>(&'a self, rng: RngStream) -> Box<dyn Iterator<Item = Symbol> + 'a> {
        let mut rng = rng;
        let state = self.pi_cat.draw(rng.uniform());
        Box::new(OwnedHmmStream {
            model: self,
            rng,
            state,
        })
    }
}

impl HmmModel {
    fn stream_from<'a>(&'a self, rng: &'a mut RngStream) -> impl Iterator<Item = Symbol> + 'a {
        let mut state = self.pi_cat.draw(rng.uniform());
        let mut first = true;
        std::iter::from_fn(move || {
            if !first {
                state = self.trans_cats[state].draw(rng.uniform());
            }
            first = false;
            Some(Symbol(self.emit_cats[state].draw(rng.uniform()) as u8))
        })
    }
}

struct OwnedHmmStream<'a> {
    model: &'a HmmModel,
    rng: RngStream,
    state: usize,
}

impl Iterator for OwnedHmmStream<'_> {
    type Item = Symbol;
    fn next(&mut self) -> Option<Symbol> {
        let sym = self.model.emit_cats[self.state].draw(self.rng.uniform());
        self.state = self.model.trans_cats[self.state].draw(self.rng.uniform());
        Some(Symbol(sym as u8))
    }
}

/// Forward recursion with per-step normalization: `alpha` carries the
/// conditional hidden-state distribution, `logp` the accumulated scale.
#[derive(Clone)]
struct HmmScorer<'a> {
    model: &'a HmmModel,
    alpha: Vec<f64>,
    scratch: Vec<f64>,
    started: bool,
    logp: f64,
    inc: f64,
}

impl PrefixScorer for HmmScorer<'_> {
    fn push(&mut self, sym: Symbol) -> f64 {
        if self.logp == f64::NEG_INFINITY {
            self.inc = f64::NEG_INFINITY;
            return self.logp;
        }
        let m = self.model;
        let s = m.hidden;
        let a = sym.index();
        if !self.started {
            for i in 0..s {
                self.alpha[i] = m.pi[i] * m.emit[i * m.alphabet.size() + a];
            }
            self.started = true;
        } else {
            for j in 0..s {
                let mut acc = 0.0;
                for i in 0..s {
                    acc += self.alpha[i] * m.trans[i * s + j];
                }
                self.scratch[j] = acc * m.emit[j * m.alphabet.size() + a];
            }
            self.alpha.copy_from_slice(&self.scratch);
        }
        let norm: f64 = self.alpha.iter().sum();
        if norm <= 0.0 {
            self.logp = f64::NEG_INFINITY;
            self.inc = f64::NEG_INFINITY;
            return self.logp;
        }
        for v in self.alpha.iter_mut() {
            *v /= norm;
        }
        self.inc = norm.ln();
        self.logp += self.inc;
        self.logp
    }

    fn last_increment(&self) -> f64 {
        self.inc
    }

    fn log_prob(&self) -> f64 {
        self.logp
    }

    fn reset(&mut self) {
        self.started = false;
        self.logp = 0.0;
        self.inc = 0.0;
    }

    fn fork(&self) -> Box<dyn PrefixScorer + '_> {
        Box::new(self.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sources::enumerate_support;

    fn two_state_hmm() -> HmmModel {
        HmmModel::new(
            Alphabet::binary(),
            vec![vec![0.8, 0.2], vec![0.3, 0.7]],
            vec![vec![0.9, 0.1], vec![0.25, 0.75]],
            None,
        )
        .unwrap()
    }

    #[test]
    fn forward_matches_exhaustive_paths() {
        let m = two_state_hmm();
        let mut rng = RngStream::new(11, 0);
        for _ in 0..40 {
            let n = 1 + rng.below(10);
            let word: Vec<Symbol> = (0..n).map(|_| Symbol(rng.below(2) as u8)).collect();
            let forward = m.log_cylinder(&word).exp();
            let paths = m.cylinder_by_paths(&word);
            assert!(
                (forward - paths).abs() < 1e-10,
                "forward {forward} vs paths {paths}"
            );
        }
    }

    #[test]
    fn identity_emissions_reduce_to_markov() {
        let chain = MarkovModel::new(
            Alphabet::binary(),
            1,
            vec![vec![0.6, 0.4], vec![0.15, 0.85]],
            None,
        )
        .unwrap();
        let lumped = HmmModel::lump(&chain, &[0, 1], Alphabet::binary()).unwrap();
        let mut rng = RngStream::new(3, 3);
        for _ in 0..60 {
            let n = 1 + rng.below(12);
            let word: Vec<Symbol> = (0..n).map(|_| Symbol(rng.below(2) as u8)).collect();
            let lhs = lumped.log_cylinder(&word);
            let rhs = chain.log_cylinder(&word);
            if rhs == f64::NEG_INFINITY {
                assert_eq!(lhs, f64::NEG_INFINITY);
            } else {
                assert!((lhs - rhs).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn constant_lump_is_dirac() {
        let chain = MarkovModel::new(
            Alphabet::binary(),
            1,
            vec![vec![0.5, 0.5], vec![0.4, 0.6]],
            None,
        )
        .unwrap();
        let lumped = HmmModel::lump(&chain, &[0, 0], Alphabet::binary()).unwrap();
        let zeros = vec![Symbol(0); 16];
        assert!((lumped.log_cylinder(&zeros)).abs() < 1e-12);
        let mut rng = RngStream::new(0, 0);
        assert!(lumped
            .sample(32, &mut rng)
            .symbols()
            .iter()
            .all(|s| s.index() == 0));
    }

    #[test]
    fn four_state_lump_matches_paths() {
        let chain = MarkovModel::new(
            Alphabet::indexed(4).unwrap(),
            1,
            vec![
                vec![0.1, 0.6, 0.2, 0.1],
                vec![0.3, 0.1, 0.5, 0.1],
                vec![0.25, 0.25, 0.25, 0.25],
                vec![0.4, 0.2, 0.2, 0.2],
            ],
            None,
        )
        .unwrap();
        let lumped = HmmModel::lump(&chain, &[0, 1, 2, 0], Alphabet::indexed(3).unwrap()).unwrap();
        let mut rng = RngStream::new(8, 8);
        for _ in 0..20 {
            let n = 1 + rng.below(10);
            let word: Vec<Symbol> = (0..n).map(|_| Symbol(rng.below(3) as u8)).collect();
            let forward = lumped.log_cylinder(&word).exp();
            let paths = lumped.cylinder_by_paths(&word);
            assert!((forward - paths).abs() < 1e-10);
        }
    }

    #[test]
    fn cylinder_sums_are_stationary() {
        let m = two_state_hmm();
        for n in 1..=6 {
            let words = enumerate_support(&m, n, 1 << 10).unwrap();
            let total: f64 = words.iter().map(|(_, lp)| lp.exp()).sum();
            assert!((total - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn in_support_matches_cylinder_sign() {
        // Emissions forbid letter 1 from state 0 and letter 0 from state 1,
        // with a forbidden hidden transition, so some words drop off support.
        let m = HmmModel::new(
            Alphabet::binary(),
            vec![vec![0.0, 1.0], vec![0.5, 0.5]],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            None,
        )
        .unwrap();
        for n in 1..=8 {
            for (word, lp) in enumerate_support(&m, n, 1 << 10).unwrap() {
                assert!(lp > f64::NEG_INFINITY);
                assert!(m.in_support(&word));
            }
            // Count check: enumeration found exactly the positive-probability words.
            let mut count = 0usize;
            let mut w = vec![Symbol(0); n];
            loop {
                if m.cylinder_by_paths(&w) > 0.0 {
                    count += 1;
                }
                let mut i = n;
                let mut done = true;
                while i > 0 {
                    i -= 1;
                    if w[i].index() + 1 < 2 {
                        w[i] = Symbol(w[i].0 + 1);
                        for v in &mut w[i + 1..] {
                            *v = Symbol(0);
                        }
                        done = false;
                        break;
                    }
                }
                if done {
                    break;
                }
            }
            assert_eq!(enumerate_support(&m, n, 1 << 10).unwrap().len(), count);
        }
    }

    #[test]
    fn reducible_hidden_chain_rejected() {
        let err = HmmModel::new(
            Alphabet::binary(),
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![vec![0.5, 0.5], vec![0.5, 0.5]],
            None,
        );
        assert!(err.is_err());
    }
}
