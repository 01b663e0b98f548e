//! Exact, sampleable source measures over finite alphabets.
//!
//! Every model exposes the same capability contract: exact log-cylinder
//! scoring, support queries, and seeded sampling. All probability arithmetic
//! is carried in natural-log space; zero probability is the distinguished
//! value `f64::NEG_INFINITY`.
//!
//! Models are loaded from a JSON document whose `type` tag selects the
//! family; the tag is the extension point for families added later.

mod hmm;
mod markov;

pub use hmm::HmmModel;
pub use markov::{stationary_distribution, MarkovModel};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::seq::{Alphabet, Sequence, Symbol};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Maximum tolerated deviation of a stochastic row sum from 1 in model input.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;
/// Residual bound for verifying a supplied stationary vector.
pub const STATIONARY_RESIDUAL: f64 = 1e-10;
/// Default budget for support enumerations.
pub const DEFAULT_ENUM_BUDGET: u64 = 1 << 22;

/// Incremental scorer for one word: each push appends a symbol and returns
/// the log-probability of the whole word scored so far.
pub trait PrefixScorer {
    fn push(&mut self, s: Symbol) -> f64;
    /// The log-probability contribution of the most recent push. Scorers
    /// accumulate these natively, so callers comparing two walks can
    /// difference increments without re-deriving them from totals.
    fn last_increment(&self) -> f64;
    fn log_prob(&self) -> f64;
    /// Forget the word and start scoring a fresh one.
    fn reset(&mut self);
    /// An independent copy of the walk at its current position.
    fn fork(&self) -> Box<dyn PrefixScorer + '_>;
}

/// A stationary source measure with exact cylinder probabilities.
pub trait CylinderMeasure {
    fn alphabet(&self) -> &Alphabet;

    /// Fresh scorer positioned at the empty word (log-probability 0).
    fn scorer(&self) -> Box<dyn PrefixScorer + '_>;

    /// `ln P[a]`; `NEG_INFINITY` when `a` is off the support. The empty word
    /// scores 0.
    fn log_cylinder(&self, a: &[Symbol]) -> f64 {
        let mut sc = self.scorer();
        let mut lp = 0.0;
        for &s in a {
            lp = sc.push(s);
            if lp == f64::NEG_INFINITY {
                break;
            }
        }
        lp
    }

    fn in_support(&self, a: &[Symbol]) -> bool {
        self.log_cylinder(a) > f64::NEG_INFINITY
    }

    /// Samples a length-`n` sequence from the stationary law.
    fn sample(&self, n: usize, rng: &mut RngStream) -> Sequence;

    /// Unbounded symbol stream from the stationary law; the caller owns the
    /// stream's randomness.
    fn sample_stream<'a>(&'a self, rng: RngStream) -> Box<dyn Iterator<Item = Symbol> + 'a>;
}

/// Exactly the supported words of length `n` with their log-probabilities,
/// in lexicographic order.
pub fn enumerate_support(
    model: &dyn CylinderMeasure,
    n: usize,
    budget: u64,
) -> Result<Vec<(Vec<Symbol>, f64)>> {
    let a = model.alphabet().size();
    let total = (a as u128)
        .checked_pow(n as u32)
        .unwrap_or(u128::MAX);
    if total > budget as u128 {
        return Err(Error::BudgetExceeded {
            required: total,
            budget,
        });
    }
    if n == 0 {
        return Ok(vec![(Vec::new(), 0.0)]);
    }
    let mut out = Vec::new();
    let mut word = vec![Symbol(0); n];
    loop {
        let lp = model.log_cylinder(&word);
        if lp > f64::NEG_INFINITY {
            out.push((word.clone(), lp));
        }
        // Odometer increment.
        let mut i = n;
        loop {
            if i == 0 {
                return Ok(out);
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

/// Inverse-CDF sampler over a fixed probability row.
#[derive(Debug, Clone)]
pub(crate) struct Categorical {
    cum: Vec<f64>,
    last_positive: usize,
}

impl Categorical {
    pub(crate) fn new(probs: &[f64]) -> Categorical {
        let mut cum = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        let mut last_positive = 0;
        for (i, &p) in probs.iter().enumerate() {
            acc += p;
            cum.push(acc);
            if p > 0.0 {
                last_positive = i;
            }
        }
        Categorical { cum, last_positive }
    }

    pub(crate) fn draw(&self, u: f64) -> usize {
        let i = self.cum.partition_point(|&c| c <= u);
        i.min(self.last_positive)
    }
}

/// Alphabet declaration inside model JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlphabetSpec {
    pub size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub glyphs: Option<String>,
}

impl AlphabetSpec {
    pub fn build(&self) -> Result<Alphabet> {
        match &self.glyphs {
            Some(g) => {
                let a = Alphabet::with_glyphs(g)?;
                if a.size() != self.size {
                    return Err(Error::Config(format!(
                        "alphabet size {} does not match {} glyphs",
                        self.size,
                        a.size()
                    )));
                }
                Ok(a)
            }
            None => Alphabet::indexed(self.size),
        }
    }
}

/// On-disk model document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum ModelSpec {
    #[serde(rename = "markov")]
    Markov {
        alphabet: AlphabetSpec,
        order: usize,
        transitions: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pi: Option<Vec<f64>>,
    },
    #[serde(rename = "hmm")]
    Hmm {
        alphabet: AlphabetSpec,
        hidden_size: usize,
        #[serde(rename = "P")]
        p: Vec<Vec<f64>>,
        #[serde(rename = "R")]
        r: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pi: Option<Vec<f64>>,
    },
}

/// A validated model of either family.
#[derive(Debug, Clone)]
pub enum Model {
    Markov(MarkovModel),
    Hmm(HmmModel),
}

impl Model {
    pub fn from_spec(spec: &ModelSpec) -> Result<Model> {
        match spec {
            ModelSpec::Markov {
                alphabet,
                order,
                transitions,
                pi,
            } => Ok(Model::Markov(MarkovModel::new(
                alphabet.build()?,
                *order,
                transitions.clone(),
                pi.clone(),
            )?)),
            ModelSpec::Hmm {
                alphabet,
                hidden_size,
                p,
                r,
                pi,
            } => {
                if p.len() != *hidden_size {
                    return Err(Error::Config(format!(
                        "hidden_size {} does not match P with {} rows",
                        hidden_size,
                        p.len()
                    )));
                }
                Ok(Model::Hmm(HmmModel::new(
                    alphabet.build()?,
                    p.clone(),
                    r.clone(),
                    pi.clone(),
                )?))
            }
        }
    }

    pub fn from_json_str(text: &str) -> Result<Model> {
        let spec: ModelSpec = serde_json::from_str(text)?;
        Model::from_spec(&spec)
    }

    pub fn load(path: &Path) -> Result<Model> {
        let text = std::fs::read_to_string(path)?;
        Model::from_json_str(&text)
    }

    pub fn as_markov(&self) -> Option<&MarkovModel> {
        match self {
            Model::Markov(m) => Some(m),
            Model::Hmm(_) => None,
        }
    }
}

impl CylinderMeasure for Model {
    fn alphabet(&self) -> &Alphabet {
        match self {
            Model::Markov(m) => m.alphabet(),
            Model::Hmm(m) => m.alphabet(),
        }
    }

    fn scorer(&self) -> Box<dyn PrefixScorer + '_> {
        match self {
            Model::Markov(m) => m.scorer(),
            Model::Hmm(m) => m.scorer(),
        }
    }

    fn log_cylinder(&self, a: &[Symbol]) -> f64 {
        match self {
            Model::Markov(m) => m.log_cylinder(a),
            Model::Hmm(m) => m.log_cylinder(a),
        }
    }

    fn sample(&self, n: usize, rng: &mut RngStream) -> Sequence {
        match self {
            Model::Markov(m) => m.sample(n, rng),
            Model::Hmm(m) => m.sample(n, rng),
        }
    }

    fn sample_stream<'a>(&'a self, rng: RngStream) -> Box<dyn Iterator<Item = Symbol> + 'a> {
        match self {
            Model::Markov(m) => m.sample_stream(rng),
            Model::Hmm(m) => m.sample_stream(rng),
        }
    }
}
