//! False and true discovery proportions against a known truth.

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsPair {
    pub fdp: f64,
    pub tdp: f64,
}

/// FDP = false rejections / max(rejections, 1); TDP = true rejections /
/// max(non-nulls, 1).
pub fn compute_fdp_tdp(decisions: &[bool], truth: &[bool]) -> Result<MetricsPair> {
    if decisions.len() != truth.len() {
        return Err(Error::LengthMismatch { left: decisions.len(), right: truth.len() });
    }
    let (mut rejected, mut false_rej, mut true_rej, mut nonnull) = (0usize, 0usize, 0usize, 0usize);
    for (&d, &t) in decisions.iter().zip(truth) {
        rejected += d as usize;
        nonnull += t as usize;
        false_rej += (d && !t) as usize;
        true_rej += (d && t) as usize;
    }
    Ok(MetricsPair {
        fdp: false_rej as f64 / rejected.max(1) as f64,
        tdp: true_rej as f64 / nonnull.max(1) as f64,
    })
}
