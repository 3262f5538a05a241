//! Conformal p-values and the conformal BH baseline.

use alloc::vec::Vec;

use super::stepup::{bh, storey_pi0};
use crate::types::DecisionVector;
use crate::Result;

/// p_i = (1 + #{j : s_x,i > s_y,j}) / (1 + n) against n calibration scores.
pub fn conformal_p_values(s_x: &[f64], s_y: &[f64]) -> Vec<f64> {
    let mut sorted = s_y.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let denom = (1 + sorted.len()) as f64;
    s_x.iter().map(|&s| (1 + sorted.partition_point(|&c| c < s)) as f64 / denom).collect()
}

/// BH at level α·`adaptive_factor` on conformal p-values.
///
/// Valid only when test and calibration scores are jointly exchangeable
/// under the null (e.g. scores from a model fitted on the pooled sample).
pub fn conformal_bh(s_x: &[f64], s_y: &[f64], alpha: f64, adaptive_factor: f64) -> Result<DecisionVector> {
    bh(&conformal_p_values(s_x, s_y), alpha * adaptive_factor)
}

/// Storey plug-in factor 1/π̂₀ with λ = 1/2.
pub fn storey_factor(p: &[f64]) -> f64 {
    1.0 / storey_pi0(p, 0.5)
}
