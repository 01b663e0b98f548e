//! Ground-truth entropy quantities.
//!
//! For Markov pairs the entropy and cross entropy have closed forms in the
//! stationary vector and transition rows; both models are first lifted to a
//! common order. For arbitrary measures the finite-n truncations of the
//! defining sums act as a brute-force oracle. All values are in nats;
//! divergence is the distinguished value `f64::INFINITY`, never a large
//! float.

use crate::error::{Error, Result};
use crate::seq::Symbol;
use crate::sources::{enumerate_support, CylinderMeasure, MarkovModel, Model};
use serde::Serialize;

/// How an [`EntropyReport`] was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum Method {
    ExactMarkov,
    TruncatedN { n: usize },
}

/// Entropy, cross entropy, and relative entropy of a `(Q, P)` pair, in nats.
#[derive(Debug, Clone, Serialize)]
pub struct EntropyReport {
    /// `h(Q)`.
    pub h: f64,
    /// `h_c(Q|P)`; `f64::INFINITY` when `Q` charges words `P` forbids.
    #[serde(serialize_with = "ser_extended")]
    pub h_cross: f64,
    /// `h_r(Q|P) = h_c - h`.
    #[serde(serialize_with = "ser_extended")]
    pub h_rel: f64,
    #[serde(flatten)]
    pub method: Method,
}

pub(crate) fn ser_extended<S: serde::Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_infinite() {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*v)
    }
}

fn check_alphabets(q: &MarkovModel, p: &MarkovModel) -> Result<()> {
    if !q.alphabet().compatible(p.alphabet()) {
        return Err(Error::AlphabetMismatch {
            left: q.alphabet().size(),
            right: p.alphabet().size(),
        });
    }
    Ok(())
}

/// Entropy rate of a Markov measure:
/// `h = -sum_w pi(w) sum_b T(w,b) ln T(w,b)` with `0 ln 0 := 0`.
pub fn exact_entropy(q: &MarkovModel) -> f64 {
    let a = q.alphabet().size();
    let mut h = 0.0;
    for state in 0..q.state_count() {
        let pw = q.stationary()[state];
        if pw == 0.0 {
            continue;
        }
        for b in 0..a {
            let t = q.transition(state, b);
            if t > 0.0 {
                h -= pw * t * t.ln();
            }
        }
    }
    h
}

/// Cross entropy rate of `Q` with respect to `P` for Markov models, lifted
/// to a common order; `f64::INFINITY` exactly when some word has `Q`-mass
/// but no `P`-mass.
pub fn exact_cross_entropy(q: &MarkovModel, p: &MarkovModel) -> Result<f64> {
    check_alphabets(q, p)?;
    let a = q.alphabet().size();
    let k = q.order().max(p.order());
    let mut word = vec![Symbol(0); k];
    let mut acc = 0.0;
    loop {
        let lq = q.log_cylinder(&word);
        if lq > f64::NEG_INFINITY {
            let qw = lq.exp();
            if p.log_cylinder(&word) == f64::NEG_INFINITY {
                return Ok(f64::INFINITY);
            }
            let sq = q.word_state(&word);
            let sp = p.word_state(&word);
            for b in 0..a {
                let tq = q.transition(sq, b);
                if tq == 0.0 {
                    continue;
                }
                let ltp = p.log_transition(sp, b);
                if ltp == f64::NEG_INFINITY {
                    return Ok(f64::INFINITY);
                }
                acc -= qw * tq * ltp;
            }
        }
        // Odometer over words of length k.
        let mut i = k;
        loop {
            if i == 0 {
                return Ok(acc);
            }
            i -= 1;
            if word[i].index() + 1 < a {
                word[i] = Symbol(word[i].0 + 1);
                for w in &mut word[i + 1..] {
                    *w = Symbol(0);
                }
                break;
            }
        }
    }
}

/// Finite-n truncation `-(1/n) sum_a Q[a] ln P[a]` by exact enumeration of
/// the support of `Q` at level `n`.
pub fn truncated_cross_entropy(
    q: &dyn CylinderMeasure,
    p: &dyn CylinderMeasure,
    n: usize,
    budget: u64,
) -> Result<f64> {
    if !q.alphabet().compatible(p.alphabet()) {
        return Err(Error::AlphabetMismatch {
            left: q.alphabet().size(),
            right: p.alphabet().size(),
        });
    }
    if n == 0 {
        return Err(Error::Range("truncation level must be >= 1".into()));
    }
    let mut acc = 0.0;
    for (word, lq) in enumerate_support(q, n, budget)? {
        let lp = p.log_cylinder(&word);
        if lp == f64::NEG_INFINITY {
            return Ok(f64::INFINITY);
        }
        acc -= lq.exp() * lp;
    }
    Ok(acc / n as f64)
}

/// Finite-n truncation of the entropy; the cross entropy of `Q` with itself.
pub fn truncated_entropy(q: &dyn CylinderMeasure, n: usize, budget: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Range("truncation level must be >= 1".into()));
    }
    let mut acc = 0.0;
    for (_, lq) in enumerate_support(q, n, budget)? {
        acc -= lq.exp() * lq;
    }
    Ok(acc / n as f64)
}

/// `h_r = h_c - h`; infinity propagates.
pub fn relative_entropy(h_cross: f64, h: f64) -> f64 {
    h_cross - h
}

/// Full report for a `(Q, P)` pair: closed forms when both models are Markov
/// and no truncation is requested, truncated sums otherwise.
pub fn entropy_report(
    q: &Model,
    p: &Model,
    trunc: Option<usize>,
    budget: u64,
) -> Result<EntropyReport> {
    match (q.as_markov(), p.as_markov(), trunc) {
        (Some(mq), Some(mp), None) => {
            let h = exact_entropy(mq);
            let h_cross = exact_cross_entropy(mq, mp)?;
            Ok(EntropyReport {
                h,
                h_cross,
                h_rel: relative_entropy(h_cross, h),
                method: Method::ExactMarkov,
            })
        }
        (_, _, trunc) => {
            let n = trunc.unwrap_or(10);
            let h = truncated_entropy(q, n, budget)?;
            let h_cross = truncated_cross_entropy(q, p, n, budget)?;
            Ok(EntropyReport {
                h,
                h_cross,
                h_rel: relative_entropy(h_cross, h),
                method: Method::TruncatedN { n },
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use crate::seq::Alphabet;
    use crate::sources::HmmModel;

    fn bern(p1: f64) -> MarkovModel {
        MarkovModel::iid(Alphabet::binary(), vec![1.0 - p1, p1]).unwrap()
    }

    #[test]
    fn uniform_entropy_is_ln_2() {
        assert!((exact_entropy(&bern(0.5)) - 2.0f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn deterministic_cycle_has_zero_entropy() {
        let cycle = MarkovModel::new(
            Alphabet::binary(),
            1,
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            Some(vec![0.5, 0.5]),
        )
        .unwrap();
        assert_eq!(exact_entropy(&cycle), 0.0);
    }

    #[test]
    fn bernoulli_entropy_formula() {
        let h = exact_entropy(&bern(0.3));
        let expect = -0.3 * 0.3f64.ln() - 0.7 * 0.7f64.ln();
        assert!((h - expect).abs() < 1e-15);
    }

    #[test]
    fn cross_entropy_of_self_is_entropy() {
        let m = MarkovModel::new(
            Alphabet::binary(),
            1,
            vec![vec![0.7, 0.3], vec![0.4, 0.6]],
            None,
        )
        .unwrap();
        let hc = exact_cross_entropy(&m, &m).unwrap();
        assert!((hc - exact_entropy(&m)).abs() < 1e-12);
    }

    #[test]
    fn cross_entropy_vs_uniform_is_log_alphabet() {
        let q = MarkovModel::new(
            Alphabet::indexed(3).unwrap(),
            1,
            vec![
                vec![0.2, 0.5, 0.3],
                vec![0.6, 0.1, 0.3],
                vec![0.3, 0.3, 0.4],
            ],
            None,
        )
        .unwrap();
        let p = MarkovModel::iid(
            Alphabet::indexed(3).unwrap(),
            vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
        )
        .unwrap();
        let hc = exact_cross_entropy(&q, &p).unwrap();
        assert!((hc - 3.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn bernoulli_cross_entropy_formula_and_truncation() {
        let q = bern(0.3);
        let p = bern(0.6);
        let hc = exact_cross_entropy(&q, &p).unwrap();
        let expect = -(0.3 * 0.6f64.ln() + 0.7 * 0.4f64.ln());
        assert!((hc - expect).abs() < 1e-14);
        // iid truncations are independent of n and equal the closed form.
        for n in [1, 4, 12] {
            let t = truncated_cross_entropy(&q, &p, n, 1 << 22).unwrap();
            assert!((t - expect).abs() < 1e-9, "n={n}");
        }
    }

    #[test]
    fn truncation_converges_for_markov_pairs() {
        let q = MarkovModel::new(
            Alphabet::binary(),
            1,
            vec![vec![0.8, 0.2], vec![0.3, 0.7]],
            None,
        )
        .unwrap();
        let p = MarkovModel::new(
            Alphabet::binary(),
            1,
            vec![vec![0.6, 0.4], vec![0.5, 0.5]],
            None,
        )
        .unwrap();
        let exact = exact_cross_entropy(&q, &p).unwrap();
        let mut errs = Vec::new();
        for n in [4usize, 8, 12] {
            let t = truncated_cross_entropy(&q, &p, n, 1 << 22).unwrap();
            errs.push(((t - exact).abs(), n));
        }
        // O(1/n): the error at n is roughly (m/n) times the error at m.
        for win in errs.windows(2) {
            assert!(win[1].0 < win[0].0);
        }
        assert!(errs.last().unwrap().0 < 1e-2);
        // The fitted constant C = n * err stays bounded across the grid.
        let cs: Vec<f64> = errs.iter().map(|(e, n)| e * *n as f64).collect();
        for c in &cs {
            assert!(*c < 2.0 * cs[0].max(1e-12) + 1e-9);
        }
    }

    #[test]
    fn forbidden_word_diverges() {
        // P forbids letter 1 entirely; Q charges it.
        let q = bern(0.5);
        let p = MarkovModel::iid(Alphabet::binary(), vec![1.0, 0.0]).unwrap();
        assert_eq!(exact_cross_entropy(&q, &p).unwrap(), f64::INFINITY);
        assert_eq!(
            truncated_cross_entropy(&q, &p, 4, 1 << 10).unwrap(),
            f64::INFINITY
        );
        let report = entropy_report(&Model::Markov(q), &Model::Markov(p), None, 1 << 10).unwrap();
        assert_eq!(report.h_cross, f64::INFINITY);
        assert_eq!(report.h_rel, f64::INFINITY);
    }

    #[test]
    fn relative_entropy_examples() {
        let q = bern(0.3);
        assert_eq!(
            relative_entropy(
                exact_cross_entropy(&q, &q).unwrap(),
                exact_entropy(&q)
            ),
            0.0
        );
        let p = bern(0.6);
        let hr = relative_entropy(exact_cross_entropy(&q, &p).unwrap(), exact_entropy(&q));
        let expect = -(0.3 * 0.6f64.ln() + 0.7 * 0.4f64.ln())
            - (-0.3 * 0.3f64.ln() - 0.7 * 0.7f64.ln());
        assert!((hr - expect).abs() < 1e-14);
    }

    #[test]
    fn gibbs_inequality_on_random_pairs() {
        let mut rng = RngStream::new(123, 0);
        let mut random_model = |rng: &mut RngStream| {
            let rows: Vec<Vec<f64>> = (0..2)
                .map(|_| {
                    let a = 0.05 + 0.9 * rng.uniform();
                    vec![a, 1.0 - a]
                })
                .collect();
            MarkovModel::new(Alphabet::binary(), 1, rows, None).unwrap()
        };
        for _ in 0..50 {
            let q = random_model(&mut rng);
            let p = random_model(&mut rng);
            let hr = relative_entropy(exact_cross_entropy(&q, &p).unwrap(), exact_entropy(&q));
            assert!(hr >= -1e-12, "Gibbs violated: {hr}");
        }
    }

    #[test]
    fn hmm_truncated_entropy_matches_path_oracle() {
        let m = HmmModel::new(
            Alphabet::binary(),
            vec![vec![0.8, 0.2], vec![0.3, 0.7]],
            vec![vec![0.9, 0.1], vec![0.25, 0.75]],
            None,
        )
        .unwrap();
        for n in [2usize, 5, 8, 10] {
            let via_forward = truncated_entropy(&m, n, 1 << 12).unwrap();
            // Independent route: exhaustive hidden-path sums per word.
            let mut acc = 0.0;
            for (word, _) in enumerate_support(&m, n, 1 << 12).unwrap() {
                let prob = m.cylinder_by_paths(&word);
                acc -= prob * prob.ln();
            }
            let via_paths = acc / n as f64;
            assert!(
                (via_forward - via_paths).abs() < 1e-10,
                "n={n}: {via_forward} vs {via_paths}"
            );
        }
    }

    #[test]
    fn entropy_bounded_by_log_alphabet() {
        let mut rng = RngStream::new(5, 1);
        for _ in 0..20 {
            let a = 0.05 + 0.9 * rng.uniform();
            let b = 0.05 + 0.9 * rng.uniform();
            let m = MarkovModel::new(
                Alphabet::binary(),
                1,
                vec![vec![a, 1.0 - a], vec![b, 1.0 - b]],
                None,
            )
            .unwrap();
            let h = exact_entropy(&m);
            assert!(h >= 0.0 && h <= 2.0f64.ln() + 1e-12);
        }
    }
}
