//! Decision rules: MAP, MBR N-by-N, MBR N-by-S and coarse-to-fine MBR.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::Serialize;

use crate::estimate::{mc_expected_utility, CallCounter, SampleSet, UtilityEstimate};
use crate::rng::derive_stream;
use crate::seqmodel::{ancestral_sample, beam_search, nucleus_sample, Sequence, ToySequenceModel};
use crate::utility::{TokenizedSentence, Utility};
use crate::{Error, Result};

/// A candidate with provenance. Duplicate sequences across strategies are
/// merged with their origin tags unioned.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    pub sequence: Sequence,
    pub sentence: TokenizedSentence,
    pub origins: Vec<String>,
    pub log_prob: Option<f64>,
}

/// A deduplicated ordered candidate set plus a record of how it was built.
#[derive(Debug, Clone)]
pub struct HypothesisSpace {
    hypotheses: Vec<Hypothesis>,
    construction: Vec<(String, usize)>,
}

impl HypothesisSpace {
    pub fn hypotheses(&self) -> &[Hypothesis] {
        &self.hypotheses
    }

    pub fn len(&self) -> usize {
        self.hypotheses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hypotheses.is_empty()
    }

    /// Strategy mix and pre-dedup counts.
    pub fn construction(&self) -> &[(String, usize)] {
        &self.construction
    }

    pub fn sentences(&self) -> Vec<TokenizedSentence> {
        self.hypotheses.iter().map(|h| h.sentence.clone()).collect()
    }

    /// Dedup a candidate stream, first occurrence wins, origins merged.
    pub fn from_candidates(
        candidates: Vec<Hypothesis>,
        construction: Vec<(String, usize)>,
    ) -> Self {
        let mut hypotheses: Vec<Hypothesis> = Vec::new();
        for cand in candidates {
            if let Some(existing) = hypotheses.iter_mut().find(|h| h.sequence == cand.sequence) {
                for origin in cand.origins {
                    if !existing.origins.contains(&origin) {
                        existing.origins.push(origin);
                    }
                }
                if existing.log_prob.is_none() {
                    existing.log_prob = cand.log_prob;
                }
            } else {
                hypotheses.push(cand);
            }
        }
        HypothesisSpace {
            hypotheses,
            construction,
        }
    }

    /// Append further candidates, preserving existing order.
    pub fn extend(&self, extra: Vec<Hypothesis>) -> Self {
        let mut candidates = self.hypotheses.clone();
        let extra_count = extra.len();
        candidates.extend(extra);
        let mut construction = self.construction.clone();
        construction.push(("extra".into(), extra_count));
        HypothesisSpace::from_candidates(candidates, construction)
    }
}

/// One hypothesis-generation strategy and its budget.
#[derive(Debug, Clone)]
pub enum StrategySpec {
    Ancestral { count: usize },
    Nucleus { count: usize, p: f64 },
    /// `count` best finished sequences from a beam of `beam_size`.
    Beam {
        count: usize,
        beam_size: usize,
        length_penalty_alpha: f64,
    },
}

impl StrategySpec {
    pub fn tag(&self) -> &'static str {
        match self {
            StrategySpec::Ancestral { .. } => "ancestral",
            StrategySpec::Nucleus { .. } => "nucleus",
            StrategySpec::Beam { .. } => "beam",
        }
    }

    pub fn count(&self) -> usize {
        match self {
            StrategySpec::Ancestral { count }
            | StrategySpec::Nucleus { count, .. }
            | StrategySpec::Beam { count, .. } => *count,
        }
    }
}

/// Identifies the rng cell a decode run draws its streams from.
#[derive(Debug, Clone, Copy)]
pub struct SeedCtx {
    pub master_seed: u64,
    pub source_index: u64,
    pub replicate: u64,
}

impl SeedCtx {
    pub fn new(master_seed: u64, source_index: u64, replicate: u64) -> Self {
        SeedCtx {
            master_seed,
            source_index,
            replicate,
        }
    }

    pub fn stream(&self, tag: &str) -> crate::rng::Stream {
        derive_stream(self.master_seed, self.source_index, tag, self.replicate)
    }
}

fn hypothesis_from_sequence(
    model: &ToySequenceModel,
    seq: Sequence,
    origin: &str,
    log_prob: Option<f64>,
) -> Hypothesis {
    let sentence = TokenizedSentence::from_text(&model.vocabulary().render(&seq));
    Hypothesis {
        sequence: seq,
        sentence,
        origins: vec![origin.to_string()],
        log_prob,
    }
}

/// Generate and union candidates from a strategy mix, deduplicated by token
/// sequence with origins merged; order is first occurrence.
pub fn build_hypothesis_space(
    model: &ToySequenceModel,
    source: &str,
    strategies: &[StrategySpec],
    seed: SeedCtx,
) -> Result<HypothesisSpace> {
    if strategies.is_empty() {
        return Err(Error::Parameter("need at least one strategy".into()));
    }
    let mut candidates = Vec::new();
    let mut construction = Vec::new();
    for spec in strategies {
        if spec.count() == 0 {
            return Err(Error::Parameter(format!(
                "strategy {} has zero count",
                spec.tag()
            )));
        }
        match spec {
            StrategySpec::Ancestral { count } => {
                let mut rng = seed.stream("ancestral");
                for _ in 0..*count {
                    let seq = ancestral_sample(model, source, &mut rng)?;
                    candidates.push(hypothesis_from_sequence(model, seq, "ancestral", None));
                }
            }
            StrategySpec::Nucleus { count, p } => {
                let mut rng = seed.stream("nucleus");
                for _ in 0..*count {
                    let seq = nucleus_sample(model, source, *p, &mut rng)?;
                    candidates.push(hypothesis_from_sequence(model, seq, "nucleus", None));
                }
            }
            StrategySpec::Beam {
                count,
                beam_size,
                length_penalty_alpha,
            } => {
                let scored =
                    beam_search(model, source, *beam_size, *length_penalty_alpha, *count)?;
                if scored.len() < *count {
                    return Err(Error::Strategy(format!(
                        "beam strategy asked for {count} sequences but only {} are attainable",
                        scored.len()
                    )));
                }
                for s in scored {
                    candidates.push(hypothesis_from_sequence(
                        model,
                        s.sequence,
                        "beam",
                        Some(s.log_prob),
                    ));
                }
            }
        }
        construction.push((spec.tag().to_string(), spec.count()));
    }
    Ok(HypothesisSpace::from_candidates(candidates, construction))
}

/// Wall times of the three decode phases, milliseconds. Not covered by any
/// determinism guarantee.
#[derive(Debug, Clone, Default, Serialize)]
pub struct PhaseTimings {
    pub generation_ms: f64,
    pub sampling_ms: f64,
    pub decoding_ms: f64,
}

/// Outcome of one decision rule on one source.
#[derive(Debug, Clone)]
pub struct DecodeResult {
    pub chosen: Hypothesis,
    /// MC estimate backing the choice; absent for MAP decoding.
    pub final_estimate: Option<UtilityEstimate>,
    pub counters: BTreeMap<String, u64>,
    pub timings: PhaseTimings,
    /// Estimates keyed by hypothesis-space index, when traced. Coarse-to-fine
    /// traces cover only the retained top-T set.
    pub trace: Option<Vec<(usize, UtilityEstimate)>>,
}

/// MAP decoding: beam search top-1 with a length penalty.
pub fn map_decode(
    model: &ToySequenceModel,
    source: &str,
    beam_size: usize,
    length_penalty_alpha: f64,
) -> Result<DecodeResult> {
    let start = Instant::now();
    let scored = beam_search(model, source, beam_size, length_penalty_alpha, 1)?;
    let generation_ms = start.elapsed().as_secs_f64() * 1e3;
    let best = scored
        .into_iter()
        .next()
        .ok_or_else(|| Error::Strategy("beam search found no finished sequence".into()))?;
    let chosen = hypothesis_from_sequence(model, best.sequence, "beam", Some(best.log_prob));
    Ok(DecodeResult {
        chosen,
        final_estimate: None,
        counters: BTreeMap::new(),
        timings: PhaseTimings {
            generation_ms,
            ..Default::default()
        },
        trace: None,
    })
}

/// MBR N-by-N: the same N ancestral samples serve as candidates and as the
/// estimation multiset. Candidates are deduplicated for the argmax, but the
/// logical call count stays exactly N^2.
pub fn mbr_n_by_n(
    model: &ToySequenceModel,
    source: &str,
    n: usize,
    target_utility: &Utility,
    seed: SeedCtx,
) -> Result<DecodeResult> {
    if n == 0 {
        return Err(Error::Parameter("N must be >= 1".into()));
    }
    let sampling_start = Instant::now();
    let mut rng = seed.stream("ancestral");
    let sequences: Vec<Sequence> = (0..n)
        .map(|_| ancestral_sample(model, source, &mut rng))
        .collect::<Result<_>>()?;
    let sampling_ms = sampling_start.elapsed().as_secs_f64() * 1e3;

    let samples = SampleSet::from_sequences(
        model.vocabulary(),
        sequences.clone(),
        "ancestral",
        seed.master_seed,
    );
    let candidates: Vec<Hypothesis> = sequences
        .into_iter()
        .map(|seq| hypothesis_from_sequence(model, seq, "ancestral", None))
        .collect();
    let space =
        HypothesisSpace::from_candidates(candidates, vec![("ancestral".to_string(), n)]);

    let decode_start = Instant::now();
    let counter = CallCounter::new();
    let result = argmax_by_estimate(&space, &samples, target_utility, &counter)?;
    // Duplicates removed by dedup still count: the rule is defined over the
    // full N-candidate multiset.
    let duplicates = n - space.len();
    counter.add(&target_utility.id(), (duplicates * n) as u64);
    let decoding_ms = decode_start.elapsed().as_secs_f64() * 1e3;

    Ok(DecodeResult {
        chosen: result.chosen,
        final_estimate: Some(result.estimate),
        counters: counter.snapshot(),
        timings: PhaseTimings {
            generation_ms: 0.0,
            sampling_ms,
            decoding_ms,
        },
        trace: Some(result.trace),
    })
}

/// MBR N-by-S: argmax of MC expected utility over a prebuilt hypothesis
/// space, estimated with one shared sample set. |space| * S logical calls.
pub fn mbr_n_by_s(
    space: &HypothesisSpace,
    samples: &SampleSet,
    target_utility: &Utility,
) -> Result<DecodeResult> {
    if space.is_empty() {
        return Err(Error::Parameter("hypothesis space is empty".into()));
    }
    let start = Instant::now();
    let counter = CallCounter::new();
    let result = argmax_by_estimate(space, samples, target_utility, &counter)?;
    Ok(DecodeResult {
        chosen: result.chosen,
        final_estimate: Some(result.estimate),
        counters: counter.snapshot(),
        timings: PhaseTimings {
            decoding_ms: start.elapsed().as_secs_f64() * 1e3,
            ..Default::default()
        },
        trace: Some(result.trace),
    })
}

/// Indices of the top-T entries of `scores`, descending, ties keeping lower
/// index. T larger than the list clamps.
pub fn filter_top_t(scores: &[f64], t: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());
    order.truncate(t);
    order
}

/// Coarse-to-fine MBR: rank the space with a cheap proxy utility over
/// `coarse_samples`, keep the top T, then decide with the target utility
/// over `fine_samples`. |space| * S proxy calls plus T * L target calls.
pub fn mbr_c2f(
    space: &HypothesisSpace,
    coarse_samples: &SampleSet,
    fine_samples: &SampleSet,
    proxy_utility: &Utility,
    target_utility: &Utility,
    t: usize,
) -> Result<DecodeResult> {
    if space.is_empty() {
        return Err(Error::Parameter("hypothesis space is empty".into()));
    }
    if t == 0 {
        return Err(Error::Parameter("T must be >= 1".into()));
    }
    let t = t.min(space.len());
    let start = Instant::now();
    let counter = CallCounter::new();

    // Coarse step: proxy estimates over the whole space.
    let sentences = space.sentences();
    let proxy_scores: Vec<f64> = sentences
        .iter()
        .map(|h| {
            mc_expected_utility(h, coarse_samples, proxy_utility, &counter).map(|e| e.value)
        })
        .collect::<Result<_>>()?;
    let kept = filter_top_t(&proxy_scores, t);

    // Fine step: target estimates over the retained set only.
    let mut trace = Vec::with_capacity(kept.len());
    for &i in &kept {
        let est = mc_expected_utility(&sentences[i], fine_samples, target_utility, &counter)?;
        trace.push((i, est));
    }
    let winner = trace
        .iter()
        .max_by(|a, b| {
            a.1.value
                .partial_cmp(&b.1.value)
                .unwrap()
                .then(b.0.cmp(&a.0)) // earlier retained entry wins ties
        })
        .map(|(i, est)| (*i, est.clone()))
        .unwrap();

    Ok(DecodeResult {
        chosen: space.hypotheses()[winner.0].clone(),
        final_estimate: Some(winner.1),
        counters: counter.snapshot(),
        timings: PhaseTimings {
            decoding_ms: start.elapsed().as_secs_f64() * 1e3,
            ..Default::default()
        },
        trace: Some(trace),
    })
}

struct ArgmaxResult {
    chosen: Hypothesis,
    estimate: UtilityEstimate,
    trace: Vec<(usize, UtilityEstimate)>,
}

fn argmax_by_estimate(
    space: &HypothesisSpace,
    samples: &SampleSet,
    utility: &Utility,
    counter: &CallCounter,
) -> Result<ArgmaxResult> {
    let sentences = space.sentences();
    let mut trace = Vec::with_capacity(sentences.len());
    for (i, h) in sentences.iter().enumerate() {
        trace.push((i, mc_expected_utility(h, samples, utility, counter)?));
    }
    let best = trace
        .iter()
        .max_by(|a, b| {
            a.1.value
                .partial_cmp(&b.1.value)
                .unwrap()
                .then(b.0.cmp(&a.0)) // earlier index wins ties
        })
        .map(|(i, _)| *i)
        .unwrap();
    Ok(ArgmaxResult {
        chosen: space.hypotheses()[best].clone(),
        estimate: trace[best].1.clone(),
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqmodel::{enumerate_support, Vocabulary};
    use std::collections::HashMap;

    fn spreadish_model() -> ToySequenceModel {
        let vocab = Vocabulary::new(vec!["a".into(), "b".into(), "</s>".into()], 2).unwrap();
        let mut tables = HashMap::new();
        tables.insert(("x".to_string(), vec![]), vec![0.4, 0.3, 0.3]);
        ToySequenceModel::new(vocab, 3, 0, tables).unwrap()
    }

    fn deterministic_model() -> ToySequenceModel {
        let vocab = Vocabulary::new(vec!["a".into(), "</s>".into()], 1).unwrap();
        let mut tables = HashMap::new();
        tables.insert(("x".to_string(), vec![]), vec![1.0, 0.0]);
        tables.insert(("x".to_string(), vec![0]), vec![0.0, 1.0]);
        ToySequenceModel::new(vocab, 3, 1, tables).unwrap()
    }

    fn seed(replicate: u64) -> SeedCtx {
        SeedCtx::new(77, 0, replicate)
    }

    #[test]
    fn space_from_deterministic_model_collapses() {
        let m = deterministic_model();
        let space = build_hypothesis_space(
            &m,
            "x",
            &[StrategySpec::Ancestral { count: 10 }],
            seed(0),
        )
        .unwrap();
        assert_eq!(space.len(), 1);
        assert_eq!(space.construction(), &[("ancestral".to_string(), 10)]);
    }

    #[test]
    fn beam_strategy_covers_support_in_score_order() {
        let m = spreadish_model();
        let support = enumerate_support(&m, "x").unwrap();
        let space = build_hypothesis_space(
            &m,
            "x",
            &[StrategySpec::Beam {
                count: support.len(),
                beam_size: support.len(),
                length_penalty_alpha: 0.0,
            }],
            seed(0),
        )
        .unwrap();
        assert_eq!(space.len(), support.len());
        // Hypotheses arrive in descending probability order.
        let probs: Vec<f64> = space
            .hypotheses()
            .iter()
            .map(|h| h.log_prob.unwrap().exp())
            .collect();
        for w in probs.windows(2) {
            assert!(w[0] >= w[1] - 1e-12);
        }
    }

    #[test]
    fn infeasible_beam_count_is_strategy_error() {
        let m = deterministic_model();
        let err = build_hypothesis_space(
            &m,
            "x",
            &[StrategySpec::Beam {
                count: 5,
                beam_size: 5,
                length_penalty_alpha: 0.0,
            }],
            seed(0),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Strategy(_)));
    }

    #[test]
    fn union_merges_origins() {
        let m = spreadish_model();
        let space = build_hypothesis_space(
            &m,
            "x",
            &[
                StrategySpec::Nucleus { count: 20, p: 1.0 },
                StrategySpec::Beam {
                    count: 2,
                    beam_size: 4,
                    length_penalty_alpha: 0.0,
                },
            ],
            seed(0),
        )
        .unwrap();
        assert!(space.len() <= 22);
        let merged = space
            .hypotheses()
            .iter()
            .find(|h| h.origins.len() == 2)
            .expect("beam output overlaps nucleus draws on this model");
        assert_eq!(merged.origins, vec!["nucleus".to_string(), "beam".to_string()]);
        assert!(merged.log_prob.is_some());
    }

    #[test]
    fn map_decode_on_deterministic_model() {
        let m = deterministic_model();
        let res = map_decode(&m, "x", 2, 0.0).unwrap();
        assert_eq!(res.chosen.sequence, Sequence::new(vec![0]));
        assert!(res.counters.is_empty());
    }

    #[test]
    fn map_decode_saturated_beam_matches_exact_mode() {
        let m = spreadish_model();
        let support = enumerate_support(&m, "x").unwrap();
        let mode = support
            .iter()
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        let res = map_decode(&m, "x", support.len(), 0.0).unwrap();
        assert_eq!(res.chosen.sequence, mode.0);
    }

    #[test]
    fn n_by_n_single_sample() {
        let m = spreadish_model();
        let res = mbr_n_by_n(&m, "x", 1, &Utility::ExactMatch, seed(0)).unwrap();
        assert_eq!(res.counters.get("exact"), Some(&1));
    }

    #[test]
    fn n_by_n_counts_n_squared_despite_dedup() {
        let m = deterministic_model();
        let res = mbr_n_by_n(&m, "x", 7, &Utility::ExactMatch, seed(0)).unwrap();
        assert_eq!(res.chosen.sequence, Sequence::new(vec![0]));
        assert_eq!(res.counters.get("exact"), Some(&49));
    }

    #[test]
    fn n_by_s_counts_space_times_samples() {
        let m = spreadish_model();
        let space = build_hypothesis_space(
            &m,
            "x",
            &[StrategySpec::Ancestral { count: 40 }],
            seed(0),
        )
        .unwrap();
        let mut rng = seed(0).stream("estimation");
        let seqs: Vec<Sequence> = (0..13)
            .map(|_| ancestral_sample(&m, "x", &mut rng).unwrap())
            .collect();
        let samples = SampleSet::from_sequences(m.vocabulary(), seqs, "ancestral", 77);
        let res = mbr_n_by_s(&space, &samples, &Utility::UnigramF1).unwrap();
        assert_eq!(
            res.counters.get("uf"),
            Some(&((space.len() * 13) as u64))
        );
        assert!(space
            .hypotheses()
            .iter()
            .any(|h| h.sequence == res.chosen.sequence));
    }

    #[test]
    fn c2f_with_identity_filter_matches_n_by_s() {
        let m = spreadish_model();
        let space = build_hypothesis_space(
            &m,
            "x",
            &[StrategySpec::Ancestral { count: 30 }],
            seed(1),
        )
        .unwrap();
        let mk_samples = |tag: &str, count: usize| {
            let mut rng = seed(1).stream(tag);
            let seqs: Vec<Sequence> = (0..count)
                .map(|_| ancestral_sample(&m, "x", &mut rng).unwrap())
                .collect();
            SampleSet::from_sequences(m.vocabulary(), seqs, "ancestral", 77)
        };
        let coarse = mk_samples("coarse", 5);
        let fine = mk_samples("fine", 20);
        let u = Utility::UnigramF1;
        let c2f = mbr_c2f(&space, &coarse, &fine, &u, &u, space.len()).unwrap();
        let nbys = mbr_n_by_s(&space, &fine, &u).unwrap();
        assert_eq!(c2f.chosen.sequence, nbys.chosen.sequence);
        assert_eq!(
            c2f.final_estimate.unwrap().value,
            nbys.final_estimate.unwrap().value
        );
    }

    #[test]
    fn c2f_t_one_is_the_coarse_argmax() {
        let m = spreadish_model();
        let space = build_hypothesis_space(
            &m,
            "x",
            &[StrategySpec::Ancestral { count: 15 }],
            seed(2),
        )
        .unwrap();
        let mut rng = seed(2).stream("coarse");
        let seqs: Vec<Sequence> = (0..9)
            .map(|_| ancestral_sample(&m, "x", &mut rng).unwrap())
            .collect();
        let coarse = SampleSet::from_sequences(m.vocabulary(), seqs, "ancestral", 77);
        let fine = coarse.clone();

        let counter = CallCounter::new();
        let proxy = Utility::UnigramF1;
        let scores: Vec<f64> = space
            .sentences()
            .iter()
            .map(|h| mc_expected_utility(h, &coarse, &proxy, &counter).unwrap().value)
            .collect();
        let coarse_argmax = filter_top_t(&scores, 1)[0];

        // Target utility deliberately disagrees with the proxy.
        let res = mbr_c2f(&space, &coarse, &fine, &proxy, &Utility::SentenceBleu, 1).unwrap();
        assert_eq!(res.chosen.sequence, space.hypotheses()[coarse_argmax].sequence);
    }

    #[test]
    fn c2f_call_count_closed_form() {
        let m = spreadish_model();
        let space = build_hypothesis_space(
            &m,
            "x",
            &[StrategySpec::Ancestral { count: 60 }],
            seed(3),
        )
        .unwrap();
        let mk = |tag: &str, count: usize| {
            let mut rng = seed(3).stream(tag);
            let seqs: Vec<Sequence> = (0..count)
                .map(|_| ancestral_sample(&m, "x", &mut rng).unwrap())
                .collect();
            SampleSet::from_sequences(m.vocabulary(), seqs, "ancestral", 77)
        };
        let coarse = mk("coarse", 13);
        let fine = mk("fine", 11);
        let t = 5.min(space.len());
        let res = mbr_c2f(
            &space,
            &coarse,
            &fine,
            &Utility::UnigramF1,
            &Utility::SentenceBleu,
            5,
        )
        .unwrap();
        assert_eq!(res.counters.get("uf"), Some(&((space.len() * 13) as u64)));
        assert_eq!(res.counters.get("bleu"), Some(&((t * 11) as u64)));
    }

    #[test]
    fn c2f_t_larger_than_space_clamps() {
        let m = deterministic_model();
        let space = build_hypothesis_space(
            &m,
            "x",
            &[StrategySpec::Ancestral { count: 3 }],
            seed(4),
        )
        .unwrap();
        let samples = SampleSet::from_sequences(
            m.vocabulary(),
            vec![Sequence::new(vec![0])],
            "ancestral",
            77,
        );
        let u = Utility::ExactMatch;
        let res = mbr_c2f(&space, &samples, &samples, &u, &u, 50).unwrap();
        assert_eq!(res.chosen.sequence, Sequence::new(vec![0]));
    }

    #[test]
    fn argmax_is_monotone_under_space_growth() {
        // Extending the space never lowers the chosen estimate.
        let m = spreadish_model();
        let u = Utility::UnigramF1;
        for rep in 0..20 {
            let space = build_hypothesis_space(
                &m,
                "x",
                &[StrategySpec::Ancestral { count: 10 }],
                seed(rep),
            )
            .unwrap();
            let mut rng = SeedCtx::new(99, 0, rep).stream("estimation");
            let seqs: Vec<Sequence> = (0..15)
                .map(|_| ancestral_sample(&m, "x", &mut rng).unwrap())
                .collect();
            let samples = SampleSet::from_sequences(m.vocabulary(), seqs, "ancestral", 99);
            let base = mbr_n_by_s(&space, &samples, &u).unwrap();

            let extra_space = build_hypothesis_space(
                &m,
                "x",
                &[StrategySpec::Ancestral { count: 10 }],
                SeedCtx::new(123, 0, rep),
            )
            .unwrap();
            let grown = space.extend(extra_space.hypotheses().to_vec());
            let bigger = mbr_n_by_s(&grown, &samples, &u).unwrap();
            assert!(
                bigger.final_estimate.unwrap().value
                    >= base.final_estimate.unwrap().value - 1e-15
            );
        }
    }

    #[test]
    fn determinism_same_seed_same_result() {
        let m = spreadish_model();
        let a = mbr_n_by_n(&m, "x", 25, &Utility::UnigramF1, seed(5)).unwrap();
        let b = mbr_n_by_n(&m, "x", 25, &Utility::UnigramF1, seed(5)).unwrap();
        assert_eq!(a.chosen.sequence, b.chosen.sequence);
        assert_eq!(
            a.final_estimate.unwrap().value,
            b.final_estimate.unwrap().value
        );
        assert_eq!(a.counters, b.counters);
    }
}
