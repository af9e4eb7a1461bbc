//! Exact support enumeration, the oracle substrate for everything else.

use super::{Sequence, ToySequenceModel, ENUMERATION_BUDGET};
use crate::{Error, Result};

/// Enumerate every sequence with nonzero probability together with its exact
/// probability. Order is deterministic (depth-first, prefix order).
///
/// Refuses models whose worst-case leaf count exceeds [`ENUMERATION_BUDGET`].
pub fn enumerate_support(
    model: &ToySequenceModel,
    source: &str,
) -> Result<Vec<(Sequence, f64)>> {
    let leaves = (model.vocabulary().len() as f64).powi(model.max_len() as i32);
    if leaves > ENUMERATION_BUDGET {
        return Err(Error::OracleInfeasible(format!(
            "worst-case leaf count {leaves:.3e} exceeds enumeration budget {ENUMERATION_BUDGET:.0e}"
        )));
    }
    let mut out = Vec::new();
    let mut prefix = Vec::new();
    recurse(model, source, &mut prefix, 1.0, &mut out)?;
    Ok(out)
}

fn recurse(
    model: &ToySequenceModel,
    source: &str,
    prefix: &mut Vec<usize>,
    prob: f64,
    out: &mut Vec<(Sequence, f64)>,
) -> Result<()> {
    if prefix.len() == model.max_len() {
        out.push((Sequence::new(prefix.clone()), prob));
        return Ok(());
    }
    let probs = model.step_distribution(source, prefix)?.to_vec();
    let eos = model.vocabulary().eos_index();
    if probs[eos] > 0.0 {
        out.push((Sequence::new(prefix.clone()), prob * probs[eos]));
    }
    for (tok, &p) in probs.iter().enumerate() {
        if tok == eos || p == 0.0 {
            continue;
        }
        prefix.push(tok);
        recurse(model, source, prefix, prob * p, out)?;
        prefix.pop();
    }
    Ok(())
}
