//! BH, e-BH and the Storey null-proportion plug-in.

use alloc::vec::Vec;

use crate::types::DecisionVector;
use crate::{Error, Result};

/// Relative slack in the e-BH comparison. An e-value vector built from a
/// mirror decision satisfies (k/m)·e = k/(1 + c) exactly in real arithmetic
/// at the boundary, but the floating-point product may land an ulp below 1/α.
pub const E_BH_REL_TOL: f64 = 1e-12;

fn check_p(p: &[f64]) -> Result<()> {
    match p.iter().position(|v| !(0.0..=1.0).contains(v)) {
        Some(index) => Err(Error::invalid("p-value", alloc::format!("entry {index} is {} (not in [0, 1])", p[index]))),
        None => Ok(()),
    }
}

fn order_by(values: &[f64], descending: bool) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    if descending {
        idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    } else {
        idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    }
    idx
}

/// Benjamini–Hochberg step-up: reject the k̂ smallest p-values with
/// k̂ = max{i : p_(i) ≤ iα/m}.
pub fn bh(p: &[f64], alpha: f64) -> Result<DecisionVector> {
    check_p(p)?;
    if !(alpha > 0.0) {
        return Err(Error::invalid("alpha", alloc::format!("{alpha} must be positive")));
    }
    let m = p.len();
    let order = order_by(p, false);
    let cutoff = (1..=m)
        .rev()
        .find(|&i| p[order[i - 1]] <= i as f64 * alpha / m as f64)
        .map(|k| p[order[k - 1]]);
    Ok(DecisionVector::new(match cutoff {
        Some(c) => p.iter().map(|&v| v <= c).collect(),
        None => alloc::vec![false; m],
    }))
}

/// e-BH: k̂ = max{i : (i/m)·e_(i) ≥ 1/α} over e sorted descending; rejects
/// every e_j ≥ e_(k̂).
pub fn e_bh(e: &[f64], alpha: f64) -> Result<DecisionVector> {
    if let Some(index) = e.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::invalid("e-value", alloc::format!("entry {index} is {} (need finite, ≥ 0)", e[index])));
    }
    if !(alpha > 0.0) {
        return Err(Error::invalid("alpha", alloc::format!("{alpha} must be positive")));
    }
    let m = e.len();
    let order = order_by(e, true);
    let target = (1.0 / alpha) * (1.0 - E_BH_REL_TOL);
    let cutoff = (1..=m)
        .rev()
        .find(|&i| i as f64 * e[order[i - 1]] / m as f64 >= target)
        .map(|k| e[order[k - 1]]);
    Ok(DecisionVector::new(match cutoff {
        Some(c) => e.iter().map(|&v| v >= c).collect(),
        None => alloc::vec![false; m],
    }))
}

/// Storey's null-proportion estimate π̂₀ = (1 + #{p > λ}) / (m(1 − λ)).
pub fn storey_pi0(p: &[f64], lambda: f64) -> f64 {
    let above = p.iter().filter(|&&v| v > lambda).count();
    (1 + above) as f64 / (p.len() as f64 * (1.0 - lambda))
}
