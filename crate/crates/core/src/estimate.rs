//! Monte Carlo estimation of expected utility, with logical call counting.

use std::collections::BTreeMap;
use std::sync::Mutex;

use crate::seqmodel::{enumerate_support, Sequence, ToySequenceModel};
use crate::utility::{TokenizedSentence, Utility};
use crate::{Error, Result};

/// A multiset of samples sharing one origin, used to estimate expected
/// utility. Duplicates are deliberately preserved: the estimator is only
/// unbiased over the raw multiset.
#[derive(Debug, Clone)]
pub struct SampleSet {
    sentences: Vec<TokenizedSentence>,
    sequences: Option<Vec<Sequence>>,
    origin: String,
    master_seed: u64,
}

impl SampleSet {
    pub fn from_sequences(
        model_vocab: &crate::seqmodel::Vocabulary,
        sequences: Vec<Sequence>,
        origin: impl Into<String>,
        master_seed: u64,
    ) -> Self {
        let sentences = sequences
            .iter()
            .map(|s| TokenizedSentence::from_text(&model_vocab.render(s)))
            .collect();
        SampleSet {
            sentences,
            sequences: Some(sequences),
            origin: origin.into(),
            master_seed,
        }
    }

    /// Build from raw text samples, e.g. an externally supplied sample file.
    pub fn from_texts(texts: &[String], origin: impl Into<String>, master_seed: u64) -> Self {
        SampleSet {
            sentences: texts.iter().map(|t| TokenizedSentence::from_text(t)).collect(),
            sequences: None,
            origin: origin.into(),
            master_seed,
        }
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn sentences(&self) -> &[TokenizedSentence] {
        &self.sentences
    }

    pub fn sequences(&self) -> Option<&[Sequence]> {
        self.sequences.as_deref()
    }

    pub fn origin(&self) -> &str {
        &self.origin
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }
}

/// A Monte Carlo estimate of expected utility.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct UtilityEstimate {
    pub value: f64,
    pub sample_size: usize,
    pub utility_id: String,
}

/// Monotone per-utility counters of logical utility evaluations.
///
/// Caching layers may skip recomputation but must still count every logical
/// use; counters only ever grow. Increments are thread safe.
#[derive(Debug, Default)]
pub struct CallCounter {
    counts: Mutex<BTreeMap<String, u64>>,
}

impl CallCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&self, utility_id: &str, n: u64) {
        let mut counts = self.counts.lock().unwrap();
        *counts.entry(utility_id.to_string()).or_insert(0) += n;
    }

    pub fn get(&self, utility_id: &str) -> u64 {
        *self.counts.lock().unwrap().get(utility_id).unwrap_or(&0)
    }

    pub fn total(&self) -> u64 {
        self.counts.lock().unwrap().values().sum()
    }

    pub fn snapshot(&self) -> BTreeMap<String, u64> {
        self.counts.lock().unwrap().clone()
    }

    /// Fold another snapshot into this counter.
    pub fn merge(&self, other: &BTreeMap<String, u64>) {
        let mut counts = self.counts.lock().unwrap();
        for (id, n) in other {
            *counts.entry(id.clone()).or_insert(0) += n;
        }
    }
}

/// Unbiased MC estimate of expected utility: the arithmetic mean of
/// u(sample, hypothesis) over the sample multiset. Counts |samples| logical
/// calls.
pub fn mc_expected_utility(
    hypothesis: &TokenizedSentence,
    samples: &SampleSet,
    utility: &Utility,
    counter: &CallCounter,
) -> Result<UtilityEstimate> {
    if samples.is_empty() {
        return Err(Error::Parameter(
            "mc_expected_utility needs a nonempty sample set".into(),
        ));
    }
    let sum: f64 = samples
        .sentences
        .iter()
        .map(|y| utility.eval(y, hypothesis))
        .sum();
    counter.add(&utility.id(), samples.len() as u64);
    Ok(UtilityEstimate {
        value: sum / samples.len() as f64,
        sample_size: samples.len(),
        utility_id: utility.id(),
    })
}

/// Exact expected utility via full support enumeration. Desk-scale oracle.
pub fn exact_expected_utility(
    model: &ToySequenceModel,
    source: &str,
    hypothesis: &Sequence,
    utility: &Utility,
) -> Result<f64> {
    let support = enumerate_support(model, source)?;
    let h = TokenizedSentence::from_text(&model.vocabulary().render(hypothesis));
    Ok(support
        .iter()
        .map(|(y, p)| {
            let y = TokenizedSentence::from_text(&model.vocabulary().render(y));
            p * utility.eval(&y, &h)
        })
        .sum())
}

/// Rank hypotheses by MC expected utility, descending; ties keep input
/// order. Exactly |hypotheses| * |samples| calls are counted.
pub fn rank_by_expected_utility(
    hypotheses: &[TokenizedSentence],
    samples: &SampleSet,
    utility: &Utility,
    counter: &CallCounter,
) -> Result<Vec<(usize, UtilityEstimate)>> {
    if hypotheses.is_empty() {
        return Err(Error::Parameter(
            "rank_by_expected_utility needs a nonempty hypothesis list".into(),
        ));
    }
    let mut ranked: Vec<(usize, UtilityEstimate)> = hypotheses
        .iter()
        .enumerate()
        .map(|(i, h)| Ok((i, mc_expected_utility(h, samples, utility, counter)?)))
        .collect::<Result<_>>()?;
    ranked.sort_by(|a, b| b.1.value.partial_cmp(&a.1.value).unwrap());
    Ok(ranked)
}
