//! Desk-scale diagnostic experiments: estimator bias by sample origin,
//! proxy-utility filtering quality, hypothesis-space quality proportions and
//! N/S scaling sweeps. Every report is reproducible bit-for-bit from
//! (config, master seed); wall times are informational only.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::decode::{filter_top_t, mbr_n_by_s, SeedCtx, StrategySpec};
use crate::estimate::{exact_expected_utility, mc_expected_utility, CallCounter, SampleSet};
use crate::seqmodel::{ancestral_sample, beam_search, nucleus_sample, Sequence, ToySequenceModel};
use crate::utility::{TokenizedSentence, Utility};
use crate::{decode, Error, Result};

/// Number of closed-open histogram bins over [0, 1].
pub const PROPORTION_BINS: usize = 20;

/// Per-strategy estimation bias against exact expected utility.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BiasReport {
    pub utility_id: String,
    pub sample_size: usize,
    pub replicates: usize,
    pub strategies: Vec<StrategyBias>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StrategyBias {
    pub strategy: String,
    /// One entry per probe hypothesis: replicate-mean estimate and exact value.
    pub probes: Vec<ProbeBias>,
    /// Mean over replicates of the per-replicate mean absolute deviation.
    pub mad_mean: f64,
    /// Standard error of `mad_mean` over replicates.
    pub mad_se: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeBias {
    pub hypothesis: String,
    pub estimate_mean: f64,
    pub exact: f64,
}

/// Compare MC estimation from ancestral, nucleus and beam-derived sample
/// sets against the exact oracle, on a shared probe hypothesis set.
///
/// Beam pseudo-samples are the k-best list treated as a uniform multiset;
/// they are deterministic, so their replicates coincide.
#[allow(clippy::too_many_arguments)]
pub fn estimation_bias_experiment(
    model: &ToySequenceModel,
    source: &str,
    probes: &[Sequence],
    sample_size: usize,
    replicates: usize,
    nucleus_p: f64,
    utility: &Utility,
    master_seed: u64,
) -> Result<BiasReport> {
    if probes.is_empty() {
        return Err(Error::Parameter("need at least one probe hypothesis".into()));
    }
    if sample_size == 0 || replicates == 0 {
        return Err(Error::Parameter(
            "sample size and replicates must be >= 1".into(),
        ));
    }
    let exact: Vec<f64> = probes
        .iter()
        .map(|h| exact_expected_utility(model, source, h, utility))
        .collect::<Result<_>>()?;
    let probe_sentences: Vec<TokenizedSentence> = probes
        .iter()
        .map(|h| TokenizedSentence::from_text(&model.vocabulary().render(h)))
        .collect();

    let counter = CallCounter::new();
    let mut strategies = Vec::new();
    for tag in ["ancestral", "nucleus", "beam"] {
        let mut per_probe_sums = vec![0.0; probes.len()];
        let mut mads = Vec::with_capacity(replicates);
        for rep in 0..replicates {
            let samples = match tag {
                "ancestral" | "nucleus" => {
                    let mut rng =
                        SeedCtx::new(master_seed, 0, rep as u64).stream(&format!("bias-{tag}"));
                    let seqs: Vec<Sequence> = (0..sample_size)
                        .map(|_| {
                            if tag == "ancestral" {
                                ancestral_sample(model, source, &mut rng)
                            } else {
                                nucleus_sample(model, source, nucleus_p, &mut rng)
                            }
                        })
                        .collect::<Result<_>>()?;
                    SampleSet::from_sequences(model.vocabulary(), seqs, tag, master_seed)
                }
                _ => beam_pseudo_samples(model, source, sample_size, master_seed)?,
            };
            let mut abs_dev_sum = 0.0;
            for (i, h) in probe_sentences.iter().enumerate() {
                let est = mc_expected_utility(h, &samples, utility, &counter)?.value;
                per_probe_sums[i] += est;
                abs_dev_sum += (est - exact[i]).abs();
            }
            mads.push(abs_dev_sum / probes.len() as f64);
        }
        let mad_mean = mads.iter().sum::<f64>() / replicates as f64;
        let mad_se = if replicates > 1 {
            let var = mads.iter().map(|m| (m - mad_mean).powi(2)).sum::<f64>()
                / (replicates - 1) as f64;
            (var / replicates as f64).sqrt()
        } else {
            0.0
        };
        strategies.push(StrategyBias {
            strategy: tag.to_string(),
            probes: probes
                .iter()
                .zip(&exact)
                .zip(&per_probe_sums)
                .map(|((h, &exact), &sum)| ProbeBias {
                    hypothesis: model.vocabulary().render(h),
                    estimate_mean: sum / replicates as f64,
                    exact,
                })
                .collect(),
            mad_mean,
            mad_se,
        });
    }
    Ok(BiasReport {
        utility_id: utility.id(),
        sample_size,
        replicates,
        strategies,
    })
}

/// The k-best beam list as a uniform pseudo-sample multiset.
fn beam_pseudo_samples(
    model: &ToySequenceModel,
    source: &str,
    k: usize,
    master_seed: u64,
) -> Result<SampleSet> {
    let scored = beam_search(model, source, k, 0.0, k)?;
    let seqs: Vec<Sequence> = scored.into_iter().map(|s| s.sequence).collect();
    Ok(SampleSet::from_sequences(
        model.vocabulary(),
        seqs,
        "beam",
        master_seed,
    ))
}

/// How well each proxy configuration filters a shared candidate set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FilterReport {
    pub target_utility_id: String,
    pub candidate_count: usize,
    pub t: usize,
    pub replicates: usize,
    pub rows: Vec<FilterRow>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FilterRow {
    pub proxy_id: String,
    pub proxy_samples: usize,
    /// Replicate-mean of the average exact target utility of the retained set.
    pub retained_exact_mean: f64,
    /// Replicate-mean fraction of the exact-oracle top-T that was retained.
    pub oracle_overlap: f64,
    /// Replicate-mean Spearman correlation between proxy and exact rankings
    /// (deterministic tie-breaking by candidate order).
    pub rank_correlation: f64,
    pub wall_ms: f64,
}

/// Filter a shared candidate set with each (proxy utility, sample budget)
/// pair and score the retained sets against the exact-oracle target ranking.
#[allow(clippy::too_many_arguments)]
pub fn proxy_filter_experiment(
    model: &ToySequenceModel,
    source: &str,
    candidate_count: usize,
    t: usize,
    proxies: &[(Utility, usize)],
    target_utility: &Utility,
    replicates: usize,
    master_seed: u64,
) -> Result<FilterReport> {
    if t == 0 || candidate_count == 0 || replicates == 0 {
        return Err(Error::Parameter(
            "candidate count, T and replicates must be >= 1".into(),
        ));
    }
    // One shared candidate set for every proxy strategy.
    let space = decode::build_hypothesis_space(
        model,
        source,
        &[StrategySpec::Ancestral {
            count: candidate_count,
        }],
        SeedCtx::new(master_seed, 0, 0),
    )?;
    let t = t.min(space.len());
    let exact: Vec<f64> = space
        .hypotheses()
        .iter()
        .map(|h| exact_expected_utility(model, source, &h.sequence, target_utility))
        .collect::<Result<_>>()?;
    let oracle_top: Vec<usize> = filter_top_t(&exact, t);
    let sentences = space.sentences();
    let counter = CallCounter::new();

    let mut rows = Vec::new();
    for (proxy, s) in proxies {
        let start = Instant::now();
        let mut retained_sum = 0.0;
        let mut overlap_sum = 0.0;
        let mut corr_sum = 0.0;
        for rep in 0..replicates {
            let mut rng = SeedCtx::new(master_seed, 0, rep as u64)
                .stream(&format!("filter-{}-{s}", proxy.id()));
            let seqs: Vec<Sequence> = (0..*s)
                .map(|_| ancestral_sample(model, source, &mut rng))
                .collect::<Result<_>>()?;
            let samples =
                SampleSet::from_sequences(model.vocabulary(), seqs, "ancestral", master_seed);
            let scores: Vec<f64> = sentences
                .iter()
                .map(|h| mc_expected_utility(h, &samples, proxy, &counter).map(|e| e.value))
                .collect::<Result<_>>()?;
            let kept = filter_top_t(&scores, t);
            retained_sum +=
                kept.iter().map(|&i| exact[i]).sum::<f64>() / t as f64;
            overlap_sum +=
                kept.iter().filter(|i| oracle_top.contains(i)).count() as f64 / t as f64;
            corr_sum += spearman(&scores, &exact);
        }
        rows.push(FilterRow {
            proxy_id: proxy.id(),
            proxy_samples: *s,
            retained_exact_mean: retained_sum / replicates as f64,
            oracle_overlap: overlap_sum / replicates as f64,
            rank_correlation: corr_sum / replicates as f64,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        });
    }
    Ok(FilterReport {
        target_utility_id: target_utility.id(),
        candidate_count: space.len(),
        t,
        replicates,
        rows,
    })
}

/// Spearman correlation using ranks with deterministic tie-breaking
/// (earlier candidate gets the better rank).
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let ra = ranks(a);
    let rb = ranks(b);
    pearson(&ra, &rb)
}

fn ranks(values: &[f64]) -> Vec<f64> {
    let order = filter_top_t(values, values.len());
    let mut ranks = vec![0.0; values.len()];
    for (rank, &idx) in order.iter().enumerate() {
        ranks[idx] = rank as f64;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma).powi(2);
        vb += (y - mb).powi(2);
    }
    if va == 0.0 || vb == 0.0 {
        0.0
    } else {
        cov / (va * vb).sqrt()
    }
}

/// Exact expected utility histograms of each strategy's candidates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProportionReport {
    pub utility_id: String,
    pub bins: usize,
    pub per_strategy: Vec<StrategyHistogram>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StrategyHistogram {
    pub strategy: String,
    /// Closed-open bins over [0, 1]; exact utility 1 lands in the last bin.
    pub counts: Vec<usize>,
    pub mean_exact: f64,
}

/// Generate an equal number of candidates per strategy and histogram their
/// exact expected target utilities with shared binning.
pub fn hypothesis_space_quality(
    model: &ToySequenceModel,
    source: &str,
    per_strategy_count: usize,
    nucleus_p: f64,
    beam_size: usize,
    target_utility: &Utility,
    master_seed: u64,
) -> Result<ProportionReport> {
    if per_strategy_count == 0 {
        return Err(Error::Parameter("per-strategy count must be >= 1".into()));
    }
    let mut per_strategy = Vec::new();
    for tag in ["ancestral", "nucleus", "beam"] {
        let seqs: Vec<Sequence> = match tag {
            "beam" => {
                let scored = beam_search(
                    model,
                    source,
                    beam_size.max(per_strategy_count),
                    0.0,
                    per_strategy_count,
                )?;
                if scored.len() < per_strategy_count {
                    return Err(Error::Strategy(format!(
                        "beam can only produce {} of the requested {per_strategy_count} candidates",
                        scored.len()
                    )));
                }
                scored.into_iter().map(|s| s.sequence).collect()
            }
            _ => {
                let mut rng =
                    SeedCtx::new(master_seed, 0, 0).stream(&format!("quality-{tag}"));
                (0..per_strategy_count)
                    .map(|_| {
                        if tag == "ancestral" {
                            ancestral_sample(model, source, &mut rng)
                        } else {
                            nucleus_sample(model, source, nucleus_p, &mut rng)
                        }
                    })
                    .collect::<Result<_>>()?
            }
        };
        let mut counts = vec![0usize; PROPORTION_BINS];
        let mut sum = 0.0;
        for seq in &seqs {
            let mu = exact_expected_utility(model, source, seq, target_utility)?;
            sum += mu;
            let bin = ((mu * PROPORTION_BINS as f64) as usize).min(PROPORTION_BINS - 1);
            counts[bin] += 1;
        }
        per_strategy.push(StrategyHistogram {
            strategy: tag.to_string(),
            counts,
            mean_exact: sum / per_strategy_count as f64,
        });
    }
    Ok(ProportionReport {
        utility_id: target_utility.id(),
        bins: PROPORTION_BINS,
        per_strategy,
    })
}

/// Replicate-averaged exact utility of MBR output per (N, S) cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingReport {
    pub utility_id: String,
    pub replicates: usize,
    pub sources: usize,
    pub cells: Vec<ScalingCell>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingCell {
    pub n: usize,
    pub s: usize,
    pub mean_exact: f64,
    pub std_exact: f64,
    pub utility_calls: u64,
}

/// Sweep MBR N-by-S over a grid of (N, S) values. Candidates are N ancestral
/// draws per cell; like MBR N-by-N, duplicates removed for the argmax still
/// count, so each cell logs exactly N * S * replicates * |sources| calls.
#[allow(clippy::too_many_arguments)]
pub fn scaling_sweep(
    model: &ToySequenceModel,
    sources: &[String],
    n_values: &[usize],
    s_values: &[usize],
    replicates: usize,
    target_utility: &Utility,
    master_seed: u64,
) -> Result<ScalingReport> {
    if sources.is_empty() || n_values.is_empty() || s_values.is_empty() || replicates == 0 {
        return Err(Error::Parameter(
            "scaling sweep needs sources, N values, S values and replicates".into(),
        ));
    }
    let mut cells = Vec::new();
    for &n in n_values {
        for &s in s_values {
            let counter = CallCounter::new();
            let mut values = Vec::with_capacity(replicates * sources.len());
            for rep in 0..replicates {
                for (src_idx, source) in sources.iter().enumerate() {
                    let seed = SeedCtx::new(master_seed, src_idx as u64, rep as u64);
                    let space = decode::build_hypothesis_space(
                        model,
                        source,
                        &[StrategySpec::Ancestral { count: n }],
                        seed,
                    )?;
                    let mut rng = seed.stream("sweep-estimation");
                    let seqs: Vec<Sequence> = (0..s)
                        .map(|_| ancestral_sample(model, source, &mut rng))
                        .collect::<Result<_>>()?;
                    let samples = SampleSet::from_sequences(
                        model.vocabulary(),
                        seqs,
                        "ancestral",
                        master_seed,
                    );
                    let result = mbr_n_by_s(&space, &samples, target_utility)?;
                    counter.merge(&result.counters);
                    counter.add(
                        &target_utility.id(),
                        ((n - space.len()) * s) as u64,
                    );
                    values.push(exact_expected_utility(
                        model,
                        source,
                        &result.chosen.sequence,
                        target_utility,
                    )?);
                }
            }
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            let std = if values.len() > 1 {
                (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
                    / (values.len() - 1) as f64)
                    .sqrt()
            } else {
                0.0
            };
            cells.push(ScalingCell {
                n,
                s,
                mean_exact: mean,
                std_exact: std,
                utility_calls: counter.total(),
            });
        }
    }
    Ok(ScalingReport {
        utility_id: target_utility.id(),
        replicates,
        sources: sources.len(),
        cells,
    })
}
