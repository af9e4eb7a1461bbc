//! Sampling-based minimum Bayes risk (MBR) decoding at desk scale.
//!
//! The toolkit pairs every stochastic decision rule with an exact-enumeration
//! oracle so that statistical claims (estimator unbiasedness, mode-seeking
//! bias, scaling trends) can be verified on small, fully enumerable sequence
//! models rather than trusted on faith.
//!
//! Modules:
//! - [`seqmodel`]: toy categorical sequence models plus ancestral, nucleus and
//!   beam generation, and exact support enumeration.
//! - [`utility`]: sentence-level utilities (exact match, unigram F1,
//!   skip-bigram F1, sentence BLEU, character n-gram F).
//! - [`estimate`]: Monte Carlo estimation of expected utility with logical
//!   call-count accounting.
//! - [`decode`]: the decision rules (MAP, MBR N-by-N, N-by-S, coarse-to-fine).
//! - [`analyze`]: diagnostic experiments (estimator bias, proxy filtering,
//!   hypothesis-space quality, N/S scaling sweeps).
//! - [`harness`]: configuration, JSONL corpus ingestion, the CLI entry points
//!   and report emission.

pub mod analyze;
pub mod decode;
pub mod error;
pub mod estimate;
pub mod harness;
pub mod rng;
pub mod seqmodel;
pub mod utility;

pub use error::Error;

pub type Result<T> = std::result::Result<T, Error>;
