//! Cross-entropy and relative-entropy estimation for finite-alphabet
//! sequences.
//!
//! The estimator at the center of this crate parses one sequence `y` into the
//! longest substrings of another sequence `x` and rescales the word count:
//! `c_N ln N / N` converges to the cross entropy of the two sources. Around
//! it the crate provides:
//!
//! * [`seq`], [`rng`]: alphabets, sequences, text I/O, and deterministic
//!   splittable random streams (ChaCha12).
//! * [`matcher`]: a suffix-automaton substring index with longest-match and
//!   waiting-time queries.
//! * [`parse`]: the cross parsing, the incremental self-parsing, and the
//!   threshold/block parsings used to probe the estimator's behaviour.
//! * [`sources`]: exact, sampleable order-k Markov and hidden-Markov
//!   measures behind one cylinder-scoring contract.
//! * [`analytics`]: closed-form and truncated entropy, cross-entropy, and
//!   relative-entropy references.
//! * [`estimators`]: the cross-parsing estimator, its longest-match
//!   reformulation, waiting-time and phrase-count estimators.
//! * [`audit`]: numerical checks of the decoupling, decay, and waiting-time
//!   bounds a source is assumed to satisfy.
//! * [`harness`]: seeded convergence/diagnostic experiments with CSV and
//!   JSON outputs.
//! * [`naive`]: slow reference implementations used as test oracles.
//!
//! The `crossent` binary exposes the same functionality as subcommands; see
//! the README. Entropies are in nats throughout.

pub mod analytics;
pub mod audit;
pub mod cli;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod matcher;
pub mod naive;
pub mod parse;
pub mod rng;
pub mod seq;
pub mod sources;

pub use error::{Error, Result};
