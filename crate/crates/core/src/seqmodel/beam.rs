//! Beam search: pruned breadth-first search with a length-penalised score.

use super::{length_penalty, penalised_score, ScoredSequence, Sequence, ToySequenceModel};
use crate::{Error, Result};

struct Live {
    tokens: Vec<usize>,
    log_prob: f64,
}

/// Deterministic beam search returning up to `k` finished sequences ranked
/// by length-penalised score, descending.
///
/// All live beams are expanded over the full vocabulary at every step.
/// Finished hypotheses go to a separate pool of size `k`; the search stops
/// once no live beam's most optimistic completion can beat the pool's k-th
/// score. Ties everywhere favour earlier enumeration order (lower vocabulary
/// index, earlier beam).
pub fn beam_search(
    model: &ToySequenceModel,
    source: &str,
    beam_size: usize,
    length_penalty_alpha: f64,
    k: usize,
) -> Result<Vec<ScoredSequence>> {
    if k == 0 || beam_size < k {
        return Err(Error::Parameter(format!(
            "need beam_size >= k >= 1, got beam_size {beam_size}, k {k}"
        )));
    }
    if length_penalty_alpha < 0.0 {
        return Err(Error::Parameter(
            "length penalty alpha must be >= 0".into(),
        ));
    }
    let eos = model.vocabulary().eos_index();
    let alpha = length_penalty_alpha;

    let mut live = vec![Live {
        tokens: Vec::new(),
        log_prob: 0.0,
    }];
    let mut finished: Vec<ScoredSequence> = Vec::new();

    while !live.is_empty() {
        let mut next_live: Vec<Live> = Vec::new();
        for beam in &live {
            if beam.tokens.len() == model.max_len() {
                // EOS forced with probability 1.
                push_finished(
                    &mut finished,
                    ScoredSequence {
                        sequence: Sequence::new(beam.tokens.clone()),
                        log_prob: beam.log_prob,
                        score: penalised_score(beam.log_prob, beam.tokens.len(), alpha),
                    },
                    k,
                );
                continue;
            }
            let probs = model.step_distribution(source, &beam.tokens)?;
            for (tok, &p) in probs.iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                let lp = beam.log_prob + p.ln();
                if tok == eos {
                    push_finished(
                        &mut finished,
                        ScoredSequence {
                            sequence: Sequence::new(beam.tokens.clone()),
                            log_prob: lp,
                            score: penalised_score(lp, beam.tokens.len(), alpha),
                        },
                        k,
                    );
                } else {
                    let mut tokens = beam.tokens.clone();
                    tokens.push(tok);
                    next_live.push(Live {
                        tokens,
                        log_prob: lp,
                    });
                }
            }
        }

        // All live candidates at this depth share the same length, so raw
        // log-probability orders them identically to the penalised score.
        next_live.sort_by(|a, b| b.log_prob.partial_cmp(&a.log_prob).unwrap());
        next_live.truncate(beam_size);

        if finished.len() == k {
            let kth = finished[k - 1].score;
            next_live.retain(|beam| optimistic_score(beam.log_prob, model.max_len(), alpha) > kth);
        }
        live = next_live;
    }

    Ok(finished)
}

/// Best length-penalised score any completion of a live beam could reach.
fn optimistic_score(log_prob: f64, max_len: usize, alpha: f64) -> f64 {
    if log_prob >= 0.0 {
        0.0
    } else {
        log_prob / length_penalty(max_len, alpha)
    }
}

fn push_finished(pool: &mut Vec<ScoredSequence>, cand: ScoredSequence, k: usize) {
    // Insert after all entries with score >= cand.score: stable, earlier
    // discovery wins ties.
    let pos = pool.partition_point(|s| s.score >= cand.score);
    pool.insert(pos, cand);
    pool.truncate(k);
}
