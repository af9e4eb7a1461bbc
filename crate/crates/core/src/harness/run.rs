//! Experiment orchestration: decode runs over a corpus, reranking of
//! external candidate files, and analyze experiments.
//!
//! Outputs are split so that determinism holds per file: `records.jsonl`
//! and `summary.json` are byte-reproducible from (config, seed, inputs);
//! `timings.json` carries wall times and is exempt.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::config::{
    AnalyzeConfig, DecodeConfig, DecoderKind, ExperimentKind, ReferenceAggregation, RerankConfig,
    StrategyEntry,
};
use super::io::{self, CandidateFileRecord, CorpusRecord, RecordKind};
use crate::analyze;
use crate::decode::{
    build_hypothesis_space, filter_top_t, map_decode, mbr_c2f, mbr_n_by_n, mbr_n_by_s,
    DecodeResult, PhaseTimings, SeedCtx, StrategySpec,
};
use crate::estimate::{mc_expected_utility, CallCounter, SampleSet, UtilityEstimate};
use crate::seqmodel::{ancestral_sample, Sequence, ToySequenceModel};
use crate::utility::{corpus_aggregate, TokenizedSentence, Utility};
use crate::{Error, Result};

/// One output line of a decode or rerank run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputRecord {
    pub source_id: String,
    pub replicate: usize,
    pub chosen: String,
    pub origins: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimate: Option<UtilityEstimate>,
    pub call_counts: BTreeMap<String, u64>,
}

/// A per-source failure that did not abort the run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SourceError {
    pub source_id: String,
    pub message: String,
}

#[derive(Debug, Serialize)]
struct TimingRecord {
    source_id: String,
    replicate: usize,
    timings: PhaseTimings,
}

struct SourceOutcome {
    record: Option<OutputRecord>,
    error: Option<SourceError>,
    timings: Option<TimingRecord>,
}

fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))
}

fn write_outputs(
    out_dir: &Path,
    outcomes: Vec<SourceOutcome>,
    summary: serde_json::Value,
) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    let mut records = String::new();
    let mut timings = Vec::new();
    for outcome in outcomes {
        if let Some(record) = outcome.record {
            records.push_str(&serde_json::to_string(&record).expect("serializable record"));
            records.push('\n');
        }
        if let Some(t) = outcome.timings {
            timings.push(t);
        }
    }
    std::fs::write(out_dir.join("records.jsonl"), records)?;
    std::fs::write(
        out_dir.join("summary.json"),
        serde_json::to_string_pretty(&summary).expect("serializable summary") + "\n",
    )?;
    std::fs::write(
        out_dir.join("timings.json"),
        serde_json::to_string_pretty(&timings).expect("serializable timings") + "\n",
    )?;
    Ok(())
}

fn strategy_specs(config: &DecodeConfig) -> Vec<StrategySpec> {
    config
        .strategies
        .iter()
        .map(|StrategyEntry { tag, count }| match tag.as_str() {
            "ancestral" => StrategySpec::Ancestral { count: *count },
            "nucleus" => StrategySpec::Nucleus {
                count: *count,
                p: config.nucleus_p,
            },
            "beam" => StrategySpec::Beam {
                count: *count,
                beam_size: config.beam_size.max(*count),
                length_penalty_alpha: config.length_penalty_alpha,
            },
            _ => unreachable!("validated tags"),
        })
        .collect()
}

fn draw_sample_set(
    model: &ToySequenceModel,
    source: &str,
    count: usize,
    seed: SeedCtx,
    tag: &str,
) -> Result<SampleSet> {
    let mut rng = seed.stream(tag);
    let seqs: Vec<Sequence> = (0..count)
        .map(|_| ancestral_sample(model, source, &mut rng))
        .collect::<Result<_>>()?;
    Ok(SampleSet::from_sequences(
        model.vocabulary(),
        seqs,
        "ancestral",
        seed.master_seed,
    ))
}

fn decode_one(
    model: &ToySequenceModel,
    config: &DecodeConfig,
    source: &str,
    seed: SeedCtx,
) -> Result<DecodeResult> {
    match config.decoder {
        DecoderKind::Map => map_decode(model, source, config.beam_size, config.length_penalty_alpha),
        DecoderKind::Nbyn => mbr_n_by_n(
            model,
            source,
            config.n.expect("validated"),
            &config.target(),
            seed,
        ),
        DecoderKind::Nbys => {
            let gen_start = Instant::now();
            let space = build_hypothesis_space(model, source, &strategy_specs(config), seed)?;
            let generation_ms = gen_start.elapsed().as_secs_f64() * 1e3;
            let sample_start = Instant::now();
            let samples = draw_sample_set(
                model,
                source,
                config.s.expect("validated"),
                seed,
                "estimation",
            )?;
            let sampling_ms = sample_start.elapsed().as_secs_f64() * 1e3;
            let mut result = mbr_n_by_s(&space, &samples, &config.target())?;
            result.timings.generation_ms = generation_ms;
            result.timings.sampling_ms = sampling_ms;
            Ok(result)
        }
        DecoderKind::C2f => {
            let gen_start = Instant::now();
            let space = build_hypothesis_space(model, source, &strategy_specs(config), seed)?;
            let generation_ms = gen_start.elapsed().as_secs_f64() * 1e3;
            let sample_start = Instant::now();
            let coarse = draw_sample_set(
                model,
                source,
                config.s.expect("validated"),
                seed,
                "estimation-coarse",
            )?;
            let fine = draw_sample_set(
                model,
                source,
                config.l.expect("validated"),
                seed,
                "estimation-fine",
            )?;
            let sampling_ms = sample_start.elapsed().as_secs_f64() * 1e3;
            let mut result = mbr_c2f(
                &space,
                &coarse,
                &fine,
                &config.proxy().expect("validated"),
                &config.target(),
                config.t.expect("validated"),
            )?;
            result.timings.generation_ms = generation_ms;
            result.timings.sampling_ms = sampling_ms;
            Ok(result)
        }
    }
}

/// Score chosen outputs against corpus references, honouring the configured
/// multi-reference aggregation.
fn corpus_score(
    corpus: &[CorpusRecord],
    records: &[OutputRecord],
    utility: &Utility,
    aggregation: ReferenceAggregation,
) -> Result<Option<f64>> {
    let mut pairs = Vec::new();
    for record in records {
        let refs = corpus
            .iter()
            .find(|c| c.source_id == record.source_id)
            .and_then(|c| c.references.as_ref());
        let Some(refs) = refs else { continue };
        if refs.is_empty() {
            continue;
        }
        let chosen = TokenizedSentence::from_text(&record.chosen);
        match aggregation {
            ReferenceAggregation::Max => {
                let best = refs
                    .iter()
                    .map(|r| TokenizedSentence::from_text(r))
                    .max_by(|a, b| {
                        utility
                            .eval(a, &chosen)
                            .partial_cmp(&utility.eval(b, &chosen))
                            .unwrap()
                    })
                    .expect("nonempty refs");
                pairs.push((best, chosen));
            }
            ReferenceAggregation::Pool => {
                for r in refs {
                    pairs.push((TokenizedSentence::from_text(r), chosen.clone()));
                }
            }
        }
    }
    if pairs.is_empty() {
        return Ok(None);
    }
    corpus_aggregate(utility, &pairs).map(Some)
}

/// Run a decode experiment over a corpus and write records, summary and
/// timings into `out_dir`.
pub fn run_decode(config: &DecodeConfig, out_dir: &Path, workers: usize) -> Result<()> {
    config.validate()?;
    let model = ToySequenceModel::from_json_file(&config.model)?;
    let corpus = io::load_corpus(&config.corpus)?;
    for record in &corpus {
        if !model.knows_source(&record.source_id) {
            return Err(Error::Config(format!(
                "model has no rows for corpus source {:?}",
                record.source_id
            )));
        }
    }

    let tasks: Vec<(usize, usize)> = (0..corpus.len())
        .flat_map(|src| (0..config.replicates).map(move |rep| (src, rep)))
        .collect();
    let pool = thread_pool(workers)?;
    let outcomes: Vec<SourceOutcome> = pool.install(|| {
        use rayon::prelude::*;
        tasks
            .par_iter()
            .map(|&(src_idx, replicate)| {
                let record = &corpus[src_idx];
                let seed = SeedCtx::new(config.master_seed, src_idx as u64, replicate as u64);
                match decode_one(&model, config, &record.source_id, seed) {
                    Ok(result) => SourceOutcome {
                        record: Some(OutputRecord {
                            source_id: record.source_id.clone(),
                            replicate,
                            chosen: model.vocabulary().render(&result.chosen.sequence),
                            origins: result.chosen.origins.clone(),
                            estimate: result.final_estimate.clone(),
                            call_counts: result.counters.clone(),
                        }),
                        error: None,
                        timings: Some(TimingRecord {
                            source_id: record.source_id.clone(),
                            replicate,
                            timings: result.timings,
                        }),
                    },
                    Err(e) => SourceOutcome {
                        record: None,
                        error: Some(SourceError {
                            source_id: record.source_id.clone(),
                            message: e.to_string(),
                        }),
                        timings: None,
                    },
                }
            })
            .collect()
    });

    finish_run(
        out_dir,
        outcomes,
        &corpus,
        &config.target(),
        config.reference_aggregation,
        json!({
            "decoder": config.decoder,
            "sources": corpus.len(),
            "replicates": config.replicates,
        }),
    )
}

fn finish_run(
    out_dir: &Path,
    outcomes: Vec<SourceOutcome>,
    corpus: &[CorpusRecord],
    target: &Utility,
    aggregation: ReferenceAggregation,
    mut summary: serde_json::Value,
) -> Result<()> {
    let records: Vec<OutputRecord> = outcomes
        .iter()
        .filter_map(|o| o.record.clone())
        .collect();
    let errors: Vec<SourceError> = outcomes.iter().filter_map(|o| o.error.clone()).collect();
    let mut totals: BTreeMap<String, u64> = BTreeMap::new();
    for record in &records {
        for (id, n) in &record.call_counts {
            *totals.entry(id.clone()).or_insert(0) += n;
        }
    }
    let score = corpus_score(corpus, &records, target, aggregation)?;
    let obj = summary.as_object_mut().expect("summary object");
    obj.insert("version".into(), json!(super::config::CONFIG_VERSION));
    obj.insert("call_counts_total".into(), json!(totals));
    obj.insert("corpus_score".into(), json!(score));
    obj.insert("target_utility".into(), json!(target.id()));
    obj.insert("errors".into(), serde_json::to_value(&errors).unwrap());
    write_outputs(out_dir, outcomes, summary)
}

/// Rerank externally supplied candidates per source with MBR N-by-S or C2F;
/// no internal model is involved. Sources with no candidates or no samples
/// produce an error record, and the run continues.
pub fn rerank_external(config: &RerankConfig, out_dir: &Path, workers: usize) -> Result<()> {
    config.validate()?;
    let corpus = io::load_corpus(&config.corpus)?;
    let corpus_ids: HashSet<&str> = corpus.iter().map(|c| c.source_id.as_str()).collect();
    let candidates =
        io::load_candidate_file(&config.candidates, RecordKind::Candidate, &corpus_ids)?;
    let samples = io::load_candidate_file(&config.samples, RecordKind::Sample, &corpus_ids)?;
    let target = config.target();

    let pool = thread_pool(workers)?;
    let outcomes: Vec<SourceOutcome> = pool.install(|| {
        use rayon::prelude::*;
        corpus
            .par_iter()
            .map(|record| {
                let start = Instant::now();
                let result = rerank_source(
                    config,
                    &target,
                    candidates.get(&record.source_id).map(Vec::as_slice),
                    samples.get(&record.source_id).map(Vec::as_slice),
                );
                match result {
                    Ok((chosen, origins, estimate, counts)) => SourceOutcome {
                        record: Some(OutputRecord {
                            source_id: record.source_id.clone(),
                            replicate: 0,
                            chosen,
                            origins,
                            estimate: Some(estimate),
                            call_counts: counts,
                        }),
                        error: None,
                        timings: Some(TimingRecord {
                            source_id: record.source_id.clone(),
                            replicate: 0,
                            timings: PhaseTimings {
                                decoding_ms: start.elapsed().as_secs_f64() * 1e3,
                                ..Default::default()
                            },
                        }),
                    },
                    Err(e) => SourceOutcome {
                        record: None,
                        error: Some(SourceError {
                            source_id: record.source_id.clone(),
                            message: e.to_string(),
                        }),
                        timings: None,
                    },
                }
            })
            .collect()
    });

    finish_run(
        out_dir,
        outcomes,
        &corpus,
        &target,
        config.reference_aggregation,
        json!({
            "decoder": config.decoder,
            "sources": corpus.len(),
            "replicates": 1,
        }),
    )
}

type RerankChoice = (String, Vec<String>, UtilityEstimate, BTreeMap<String, u64>);

fn rerank_source(
    config: &RerankConfig,
    target: &Utility,
    candidates: Option<&[CandidateFileRecord]>,
    samples: Option<&[CandidateFileRecord]>,
) -> Result<RerankChoice> {
    let candidates = candidates.filter(|c| !c.is_empty()).ok_or_else(|| {
        Error::Data("source has no candidate records".into())
    })?;
    let samples = samples.filter(|s| !s.is_empty()).ok_or_else(|| {
        Error::Data("source has no sample records".into())
    })?;

    // Dedup candidates by token sequence, first occurrence wins, origins
    // merged; estimates still run over the full sample multiset.
    let mut unique: Vec<(TokenizedSentence, Vec<String>)> = Vec::new();
    for record in candidates {
        let sentence = TokenizedSentence::from_text(&record.text);
        let origin = record.origin.clone().unwrap_or_else(|| "external".into());
        if let Some((_, origins)) = unique.iter_mut().find(|(s, _)| *s == sentence) {
            if !origins.contains(&origin) {
                origins.push(origin);
            }
        } else {
            unique.push((sentence, vec![origin]));
        }
    }
    let sentences: Vec<TokenizedSentence> = unique.iter().map(|(s, _)| s.clone()).collect();
    let sample_texts: Vec<String> = samples.iter().map(|r| r.text.clone()).collect();
    let sample_set = SampleSet::from_texts(&sample_texts, "external", config.master_seed);
    let counter = CallCounter::new();

    let chosen_idx;
    let estimate;
    match config.decoder {
        DecoderKind::Nbys => {
            let ranked = crate::estimate::rank_by_expected_utility(
                &sentences,
                &sample_set,
                target,
                &counter,
            )?;
            let top = ranked.into_iter().next().expect("nonempty ranking");
            chosen_idx = top.0;
            estimate = top.1;
        }
        DecoderKind::C2f => {
            let proxy = config.proxy().expect("validated");
            let t = config.t.expect("validated").min(sentences.len());
            let scores: Vec<f64> = sentences
                .iter()
                .map(|h| mc_expected_utility(h, &sample_set, &proxy, &counter).map(|e| e.value))
                .collect::<Result<_>>()?;
            let kept = filter_top_t(&scores, t);
            let mut best: Option<(usize, UtilityEstimate)> = None;
            for &i in &kept {
                let est = mc_expected_utility(&sentences[i], &sample_set, target, &counter)?;
                if best.as_ref().is_none_or(|(_, b)| est.value > b.value) {
                    best = Some((i, est));
                }
            }
            let (i, est) = best.expect("nonempty top-T");
            chosen_idx = i;
            estimate = est;
        }
        _ => unreachable!("validated decoder"),
    }
    Ok((
        unique[chosen_idx].0.tokens().join(" "),
        unique[chosen_idx].1.clone(),
        estimate,
        counter.snapshot(),
    ))
}

/// Run one analyze experiment and write `<experiment>.json` (an envelope of
/// `{figure, report}`) into `out_dir`. Returns the report path.
pub fn run_analyze(config: &AnalyzeConfig, out_dir: &Path) -> Result<PathBuf> {
    config.validate()?;
    let model = ToySequenceModel::from_json_file(&config.model)?;
    let utility = Utility::parse(&config.utility)?;
    let (figure, report) = match config.experiment {
        ExperimentKind::Bias => {
            let probes = resolve_probes(&model, &config.source, &config.probes, config.probe_count)?;
            let report = analyze::estimation_bias_experiment(
                &model,
                &config.source,
                &probes,
                config.sample_size.expect("validated"),
                config.replicates.expect("validated"),
                config.nucleus_p,
                &utility,
                config.master_seed,
            )?;
            ("bias", serde_json::to_value(report).unwrap())
        }
        ExperimentKind::Filter => {
            let proxies: Vec<(Utility, usize)> = config
                .proxies
                .iter()
                .map(|p| Ok((Utility::parse(&p.utility)?, p.samples)))
                .collect::<Result<_>>()?;
            let report = analyze::proxy_filter_experiment(
                &model,
                &config.source,
                config.candidate_count.expect("validated"),
                config.t.expect("validated"),
                &proxies,
                &utility,
                config.replicates.expect("validated"),
                config.master_seed,
            )?;
            ("filter", serde_json::to_value(report).unwrap())
        }
        ExperimentKind::Proportions => {
            let report = analyze::hypothesis_space_quality(
                &model,
                &config.source,
                config.per_strategy_count.expect("validated"),
                config.nucleus_p,
                config.beam_size,
                &utility,
                config.master_seed,
            )?;
            ("proportions", serde_json::to_value(report).unwrap())
        }
        ExperimentKind::Scaling => {
            let mut sources = vec![config.source.clone()];
            sources.extend(config.extra_sources.iter().cloned());
            let report = analyze::scaling_sweep(
                &model,
                &sources,
                &config.n_values,
                &config.s_values,
                config.replicates.expect("validated"),
                &utility,
                config.master_seed,
            )?;
            ("scaling", serde_json::to_value(report).unwrap())
        }
    };
    std::fs::create_dir_all(out_dir)?;
    let path = out_dir.join(format!("{figure}.json"));
    let envelope = json!({ "figure": figure, "report": report });
    std::fs::write(
        &path,
        serde_json::to_string_pretty(&envelope).unwrap() + "\n",
    )?;
    Ok(path)
}

/// Explicit probes parse as symbol strings; otherwise take the most probable
/// support sequences.
fn resolve_probes(
    model: &ToySequenceModel,
    source: &str,
    explicit: &[String],
    probe_count: usize,
) -> Result<Vec<Sequence>> {
    if !explicit.is_empty() {
        return explicit
            .iter()
            .map(|text| {
                let tokens: Vec<usize> = text
                    .split_whitespace()
                    .map(|sym| {
                        model.vocabulary().index_of(sym).ok_or_else(|| {
                            Error::Config(format!("probe token {sym:?} not in vocabulary"))
                        })
                    })
                    .collect::<Result<_>>()?;
                Ok(Sequence::new(tokens))
            })
            .collect();
    }
    let mut support = crate::seqmodel::enumerate_support(model, source)?;
    support.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    Ok(support
        .into_iter()
        .take(probe_count)
        .map(|(seq, _)| seq)
        .collect())
}

/// Validate a config and every input file it references, without running.
pub fn validate(config: &super::config::Config) -> Result<()> {
    config.validate()?;
    match config {
        super::config::Config::Decode(c) => {
            let model = ToySequenceModel::from_json_file(&c.model)?;
            let corpus = io::load_corpus(&c.corpus)?;
            for record in &corpus {
                if !model.knows_source(&record.source_id) {
                    return Err(Error::Config(format!(
                        "model has no rows for corpus source {:?}",
                        record.source_id
                    )));
                }
            }
        }
        super::config::Config::Rerank(c) => {
            let corpus = io::load_corpus(&c.corpus)?;
            let ids: HashSet<&str> = corpus.iter().map(|r| r.source_id.as_str()).collect();
            io::load_candidate_file(&c.candidates, RecordKind::Candidate, &ids)?;
            io::load_candidate_file(&c.samples, RecordKind::Sample, &ids)?;
        }
        super::config::Config::Analyze(c) => {
            ToySequenceModel::from_json_file(&c.model)?;
        }
    }
    Ok(())
}
