//! Oracle-style LIS thresholding, used as a baseline that trusts the fitted
//! model.

use alloc::vec::Vec;

use crate::types::DecisionVector;

/// Sorts LIS values ascending and rejects the largest prefix whose running
/// mean stays at or below α.
pub fn lis_baseline(lis: &[f64], alpha: f64) -> DecisionVector {
    let mut order: Vec<usize> = (0..lis.len()).collect();
    order.sort_by(|&a, &b| lis[a].total_cmp(&lis[b]).then(a.cmp(&b)));
    let mut sum = 0.0;
    let mut k_hat = 0;
    for (k, &i) in order.iter().enumerate() {
        sum += lis[i];
        if sum / (k + 1) as f64 <= alpha {
            k_hat = k + 1;
        }
    }
    let mut d = alloc::vec![false; lis.len()];
    for &i in &order[..k_hat] {
        d[i] = true;
    }
    DecisionVector::new(d)
}
