//! Ancestral and nucleus (top-p) sampling.

use rand::Rng;

use super::{Sequence, ToySequenceModel};
use crate::rng::Stream;
use crate::{Error, Result};

/// Truncate a step distribution to the smallest descending-probability
/// prefix whose cumulative mass is >= p (boundary token included, ties
/// broken by lower vocabulary index). Returns `(index, renormalised prob)`
/// pairs in the truncated order. Zero-probability entries never survive.
pub fn nucleus_truncate(probs: &[f64], p: f64) -> Vec<(usize, f64)> {
    let mut order: Vec<usize> = (0..probs.len()).filter(|&i| probs[i] > 0.0).collect();
    order.sort_by(|&a, &b| {
        probs[b]
            .partial_cmp(&probs[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut kept = Vec::new();
    let mut cum = 0.0;
    for idx in order {
        kept.push(idx);
        cum += probs[idx];
        if cum >= p {
            break;
        }
    }
    kept.into_iter().map(|i| (i, probs[i] / cum)).collect()
}

/// Draw one token from a truncated step distribution, consuming exactly one
/// uniform variate.
fn draw(kept: &[(usize, f64)], rng: &mut Stream) -> usize {
    let u: f64 = rng.random();
    let mut cum = 0.0;
    for &(idx, p) in kept {
        cum += p;
        if u < cum {
            return idx;
        }
    }
    kept.last().expect("truncated distribution is nonempty").0
}

fn sample_with_p(
    model: &ToySequenceModel,
    source: &str,
    p: f64,
    rng: &mut Stream,
) -> Result<Sequence> {
    let eos = model.vocabulary().eos_index();
    let mut tokens = Vec::new();
    loop {
        if tokens.len() == model.max_len() {
            return Ok(Sequence::new(tokens));
        }
        let probs = model.step_distribution(source, &tokens)?;
        let kept = nucleus_truncate(probs, p);
        let tok = draw(&kept, rng);
        if tok == eos {
            return Ok(Sequence::new(tokens));
        }
        tokens.push(tok);
    }
}

/// Draw a sequence by following the model's chain of categorical draws.
/// Consumes one uniform variate per generated step.
pub fn ancestral_sample(
    model: &ToySequenceModel,
    source: &str,
    rng: &mut Stream,
) -> Result<Sequence> {
    sample_with_p(model, source, 1.0, rng)
}

/// Nucleus (top-p) sampling. With p = 1 this is exactly `ancestral_sample`,
/// including its rng consumption.
pub fn nucleus_sample(
    model: &ToySequenceModel,
    source: &str,
    p: f64,
    rng: &mut Stream,
) -> Result<Sequence> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Parameter(format!(
            "nucleus p must lie in (0, 1], got {p}"
        )));
    }
    sample_with_p(model, source, p, rng)
}
