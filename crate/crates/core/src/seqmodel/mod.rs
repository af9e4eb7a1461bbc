//! Toy categorical sequence models and their generation strategies.
//!
//! A [`ToySequenceModel`] is an exactly enumerable conditional distribution
//! over token sequences: at each step the next token is drawn from a
//! categorical distribution looked up by (source id, recent context window).
//! Generation stops when the end-of-sequence symbol is drawn or when the
//! sequence reaches `max_len`, at which point EOS probability is forced to 1.

mod beam;
mod enumerate;
mod sample;

pub use beam::beam_search;
pub use enumerate::enumerate_support;
pub use sample::{ancestral_sample, nucleus_sample, nucleus_truncate};

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Tolerance for probability-vector normalisation at load time.
const PROB_SUM_TOL: f64 = 1e-12;

/// Hard ceiling on the number of leaves `enumerate_support` will visit.
pub const ENUMERATION_BUDGET: f64 = 1e7;

/// An ordered token inventory with a designated end-of-sequence symbol.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    symbols: Vec<String>,
    eos_index: usize,
}

impl Vocabulary {
    pub fn new(symbols: Vec<String>, eos_index: usize) -> Result<Self> {
        if symbols.len() < 2 {
            return Err(Error::Config(
                "vocabulary needs at least one content token plus EOS".into(),
            ));
        }
        if eos_index >= symbols.len() {
            return Err(Error::Config(format!(
                "eos index {eos_index} out of range for vocabulary of size {}",
                symbols.len()
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for s in &symbols {
            if !seen.insert(s.as_str()) {
                return Err(Error::Config(format!("duplicate vocabulary symbol {s:?}")));
            }
        }
        Ok(Vocabulary { symbols, eos_index })
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn eos_index(&self) -> usize {
        self.eos_index
    }

    pub fn symbol(&self, index: usize) -> &str {
        &self.symbols[index]
    }

    pub fn index_of(&self, symbol: &str) -> Option<usize> {
        self.symbols.iter().position(|s| s == symbol)
    }

    /// Render a sequence of token indices as a space-joined string.
    pub fn render(&self, seq: &Sequence) -> String {
        seq.tokens()
            .iter()
            .map(|&t| self.symbols[t].as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// A finished sequence of content-token indices. EOS is implicit.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sequence(Vec<usize>);

impl Sequence {
    pub fn new(tokens: Vec<usize>) -> Self {
        Sequence(tokens)
    }

    pub fn empty() -> Self {
        Sequence(Vec::new())
    }

    pub fn tokens(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for Sequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, t) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{t}")?;
        }
        write!(f, "]")
    }
}

/// A sequence together with its model log-probability and a
/// length-penalised score (equal to `log_prob` when alpha is 0).
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredSequence {
    pub sequence: Sequence,
    pub log_prob: f64,
    pub score: f64,
}

/// GNMT-style length penalty: `lp(n) = ((5 + n) / 6)^alpha`.
pub fn length_penalty(len: usize, alpha: f64) -> f64 {
    ((5.0 + len as f64) / 6.0).powf(alpha)
}

/// Length-penalised score of a finished sequence.
pub fn penalised_score(log_prob: f64, len: usize, alpha: f64) -> f64 {
    if alpha == 0.0 {
        log_prob
    } else {
        log_prob / length_penalty(len, alpha)
    }
}

/// An exactly enumerable conditional sequence model.
///
/// `tables` maps `(source id, context window of the <= order most recent
/// token indices)` to a probability vector over the full vocabulary. A row
/// under source id `"*"` acts as a fallback for sources without explicit
/// rows.
#[derive(Debug, Clone)]
pub struct ToySequenceModel {
    vocabulary: Vocabulary,
    max_len: usize,
    order: usize,
    tables: HashMap<(String, Vec<usize>), Vec<f64>>,
    has_fallback: bool,
}

impl ToySequenceModel {
    pub fn new(
        vocabulary: Vocabulary,
        max_len: usize,
        order: usize,
        tables: HashMap<(String, Vec<usize>), Vec<f64>>,
    ) -> Result<Self> {
        if max_len == 0 {
            return Err(Error::Config("max_len must be positive".into()));
        }
        for ((source, context), probs) in &tables {
            let row = || format!("row (source {source:?}, context {context:?})");
            if probs.len() != vocabulary.len() {
                return Err(Error::Config(format!(
                    "{}: probability vector has {} entries, vocabulary has {}",
                    row(),
                    probs.len(),
                    vocabulary.len()
                )));
            }
            if context.len() > order {
                return Err(Error::Config(format!(
                    "{}: context longer than model order {order}",
                    row()
                )));
            }
            if context.iter().any(|&t| t >= vocabulary.len() || t == vocabulary.eos_index()) {
                return Err(Error::Config(format!(
                    "{}: context contains an invalid or EOS token index",
                    row()
                )));
            }
            if probs.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                return Err(Error::Config(format!(
                    "{}: probabilities must lie in [0, 1]",
                    row()
                )));
            }
            let sum: f64 = probs.iter().sum();
            if (sum - 1.0).abs() > PROB_SUM_TOL {
                return Err(Error::Config(format!(
                    "{}: probabilities sum to {sum}, expected 1",
                    row()
                )));
            }
        }
        let has_fallback = tables.keys().any(|(s, _)| s == "*");
        Ok(ToySequenceModel {
            vocabulary,
            max_len,
            order,
            tables,
            has_fallback,
        })
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// The context window used for a table lookup: the `order` most recent
    /// tokens of the prefix.
    fn context_of(&self, prefix: &[usize]) -> Vec<usize> {
        let start = prefix.len().saturating_sub(self.order);
        prefix[start..].to_vec()
    }

    /// Next-token distribution for a prefix, before max_len forcing.
    pub fn step_distribution(&self, source: &str, prefix: &[usize]) -> Result<&[f64]> {
        let context = self.context_of(prefix);
        if let Some(probs) = self.tables.get(&(source.to_string(), context.clone())) {
            return Ok(probs);
        }
        if self.has_fallback {
            if let Some(probs) = self.tables.get(&("*".to_string(), context.clone())) {
                return Ok(probs);
            }
        }
        Err(Error::Config(format!(
            "no probability row for source {source:?}, context {context:?}"
        )))
    }

    pub fn knows_source(&self, source: &str) -> bool {
        self.has_fallback || self.tables.keys().any(|(s, _)| s == source)
    }

    /// Log-probability of a finished sequence, including the final EOS draw.
    /// Returns `f64::NEG_INFINITY` when any step has probability 0.
    pub fn log_prob(&self, source: &str, seq: &Sequence) -> Result<f64> {
        if seq.len() > self.max_len {
            return Err(Error::Parameter(format!(
                "sequence length {} exceeds max_len {}",
                seq.len(),
                self.max_len
            )));
        }
        let eos = self.vocabulary.eos_index();
        let mut total = 0.0;
        for (j, &tok) in seq.tokens().iter().enumerate() {
            if tok >= self.vocabulary.len() || tok == eos {
                return Err(Error::Parameter(format!(
                    "token index {tok} at position {j} is not a valid content token"
                )));
            }
            let p = self.step_distribution(source, &seq.tokens()[..j])?[tok];
            if p == 0.0 {
                return Ok(f64::NEG_INFINITY);
            }
            total += p.ln();
        }
        // Final EOS factor; forced to probability 1 at max_len.
        if seq.len() < self.max_len {
            let p_eos = self.step_distribution(source, seq.tokens())?[eos];
            if p_eos == 0.0 {
                return Ok(f64::NEG_INFINITY);
            }
            total += p_eos.ln();
        }
        Ok(total)
    }

    /// Load a model from its JSON description.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("model file: {e}")))?;
        file.build()
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read model file {}: {e}", path.display()))
        })?;
        Self::from_json_str(&text)
    }
}

/// On-disk model description.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    vocabulary: Vec<String>,
    eos: String,
    max_len: usize,
    order: usize,
    rows: Vec<ModelRow>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelRow {
    source: String,
    context: Vec<String>,
    probs: HashMap<String, f64>,
}

impl ModelFile {
    fn build(self) -> Result<ToySequenceModel> {
        let eos_index = self
            .vocabulary
            .iter()
            .position(|s| *s == self.eos)
            .ok_or_else(|| {
                Error::Config(format!("eos symbol {:?} not in vocabulary", self.eos))
            })?;
        let vocabulary = Vocabulary::new(self.vocabulary, eos_index)?;
        let mut tables = HashMap::new();
        for (i, row) in self.rows.iter().enumerate() {
            let locate = |msg: String| {
                Error::Config(format!(
                    "row {} (source {:?}, context {:?}): {msg}",
                    i, row.source, row.context
                ))
            };
            let mut context = Vec::with_capacity(row.context.len());
            for sym in &row.context {
                let idx = vocabulary
                    .index_of(sym)
                    .ok_or_else(|| locate(format!("unknown context symbol {sym:?}")))?;
                context.push(idx);
            }
            let mut probs = vec![0.0; vocabulary.len()];
            for (sym, p) in &row.probs {
                let idx = vocabulary
                    .index_of(sym)
                    .ok_or_else(|| locate(format!("unknown symbol {sym:?} in probs")))?;
                probs[idx] = *p;
            }
            if tables
                .insert((row.source.clone(), context), probs)
                .is_some()
            {
                return Err(locate("duplicate row".into()));
            }
        }
        ToySequenceModel::new(vocabulary, self.max_len, self.order, tables)
    }
}
