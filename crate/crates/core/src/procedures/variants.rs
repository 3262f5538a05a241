//! Alternative thresholding rules on the same score pairs: the conformal-BH
//! style rule, the symmetric-difference rule, and Selective SeqStep+.

use alloc::vec::Vec;

use crate::mirror::{Membership, ScorePairVector};
use crate::types::DecisionVector;

fn sorted(v: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut out: Vec<f64> = v.collect();
    out.sort_unstable_by(f64::total_cmp);
    out
}

/// Rejects {i : s_x,i ≤ τ̃} with τ̃ the largest test score at which
/// (1 + #{all j : s_y,j ≤ t}) / max(#{all j : s_x,j ≤ t}, 1) ≤ α.
pub fn plis_cbh(scores: &ScorePairVector, alpha: f64) -> DecisionVector {
    let xs = sorted(scores.s_x().iter().copied());
    let ys = sorted(scores.s_y().iter().copied());
    let tau = xs
        .iter()
        .rev()
        .copied()
        .find(|&t| {
            let num = 1 + ys.partition_point(|&v| v <= t);
            let den = xs.partition_point(|&v| v <= t).max(1);
            num as f64 / den as f64 <= alpha
        });
    DecisionVector::new(match tau {
        Some(t) => scores.s_x().iter().map(|&s| s <= t).collect(),
        None => alloc::vec![false; scores.len()],
    })
}

/// T_j = s_y,j − s_x,j.
pub fn symmetric_statistic(scores: &ScorePairVector) -> Vec<f64> {
    scores.s_x().iter().zip(scores.s_y()).map(|(&x, &y)| y - x).collect()
}

/// Knockoff+ style threshold on T = s_y − s_x: the smallest t ∈ {|T_j| > 0}
/// with (1 + #{T ≤ −t}) / #{T ≥ t} ≤ α (skipping zero denominators); rejects
/// {T ≥ t}.
pub fn plis_sym(scores: &ScorePairVector, alpha: f64) -> DecisionVector {
    let t = symmetric_statistic(scores);
    let sorted_t = sorted(t.iter().copied());
    let cands = sorted(t.iter().map(|v| v.abs()).filter(|&v| v > 0.0));
    let m = t.len();
    let tau = cands.iter().copied().find(|&c| {
        let pos = m - sorted_t.partition_point(|&v| v < c);
        let neg = sorted_t.partition_point(|&v| v <= -c);
        pos > 0 && (1 + neg) as f64 / pos as f64 <= alpha
    });
    DecisionVector::new(match tau {
        Some(c) => t.iter().map(|&v| v >= c).collect(),
        None => alloc::vec![false; m],
    })
}

/// Selective SeqStep+ along a fixed ordering: `p` is already ordered by
/// decreasing prior significance and `stops` lists the admissible stopping
/// points k (1-based counts). Returns the 0-based positions j < k̂ with
/// p_j ≤ c.
pub fn selective_seqstep_plus(p: &[f64], c: f64, alpha: f64, stops: &[usize]) -> Vec<usize> {
    let bound = (1.0 - c) / c * alpha;
    let mut above = alloc::vec![0usize; p.len() + 1];
    let mut below = alloc::vec![0usize; p.len() + 1];
    for (j, &v) in p.iter().enumerate() {
        above[j + 1] = above[j] + (v > c) as usize;
        below[j + 1] = below[j] + (v <= c) as usize;
    }
    let k_hat = stops
        .iter()
        .copied()
        .filter(|&k| k >= 1 && k <= p.len())
        .filter(|&k| (1 + above[k]) as f64 / below[k].max(1) as f64 <= bound)
        .max();
    match k_hat {
        Some(k) => (0..k).filter(|&j| p[j] <= c).collect(),
        None => Vec::new(),
    }
}

/// 1-bit p-values: 1/2 for positive statistics, 1 otherwise.
pub fn one_bit_p_values(t: &[f64]) -> Vec<f64> {
    t.iter().map(|&v| if v > 0.0 { 0.5 } else { 1.0 }).collect()
}

/// Selective SeqStep+ with c = 1/2 on 1-bit p-values, ordered by |T|
/// descending and allowed to stop only between distinct |T| values. Zero
/// statistics carry no sign information and are left out.
pub fn knockoff_plus(t: &[f64], alpha: f64) -> DecisionVector {
    let mut order: Vec<usize> = (0..t.len()).filter(|&j| t[j] != 0.0).collect();
    order.sort_by(|&a, &b| t[b].abs().total_cmp(&t[a].abs()).then(a.cmp(&b)));
    let ordered: Vec<f64> = order.iter().map(|&j| t[j]).collect();
    let stops: Vec<usize> = (1..=ordered.len())
        .filter(|&k| k == ordered.len() || ordered[k].abs() < ordered[k - 1].abs())
        .collect();
    let picked = selective_seqstep_plus(&one_bit_p_values(&ordered), 0.5, alpha, &stops);
    let mut d = alloc::vec![false; t.len()];
    for k in picked {
        d[order[k]] = true;
    }
    DecisionVector::new(d)
}

/// Anti-symmetric statistic T^S_j = sign(s_y − s_x)·max(g(s_x), g(s_y)) for
/// a strictly decreasing, positive g; zero for tied pairs.
pub fn anti_symmetric_statistic(scores: &ScorePairVector, g: impl Fn(f64) -> f64) -> Vec<f64> {
    (0..scores.len())
        .map(|i| {
            let (x, y) = (scores.s_x()[i], scores.s_y()[i]);
            let mag = g(x).max(g(y));
            match scores.membership(i) {
                Membership::Candidate => mag,
                Membership::Calibration => -mag,
                Membership::Tie => 0.0,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mirror::tests::{fixture_f, score_pairs, skewed_pairs};
    use crate::mirror::decide;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn cbh_fixture() {
        // sweep over s_x ∈ {0.05, 0.1, 0.2, 0.7}: ratios 1, 1/2, 1/3, 2/4
        assert_eq!(plis_cbh(&fixture_f(), 0.6).rejected(), vec![0, 1, 2, 3]);
        assert_eq!(plis_cbh(&fixture_f(), 0.4).rejected(), vec![0, 1, 3]);
        assert_eq!(plis_cbh(&fixture_f(), 0.3).count(), 0);
    }

    #[test]
    fn sym_fixture() {
        let f = fixture_f();
        assert_eq!(symmetric_statistic(&f).iter().map(|v| (v * 10.0).round()).collect::<Vec<_>>(), vec![8.0, 6.0, -4.0, 9.0]);
        assert_eq!(plis_sym(&f, 0.5).rejected(), vec![0, 1, 3]);
        let all_neg = ScorePairVector::from_pairs(&[(0.9, 0.1), (0.8, 0.2)]).unwrap();
        assert_eq!(plis_sym(&all_neg, 0.9).count(), 0);
    }

    #[test]
    fn seqstep_example() {
        let p = [0.5, 0.5, 1.0, 0.5];
        assert_eq!(selective_seqstep_plus(&p, 0.5, 0.5, &[1, 2, 3, 4]), vec![0, 1]);
        assert!(selective_seqstep_plus(&[0.9, 0.8], 0.5, 0.5, &[1, 2]).is_empty());
    }

    #[test]
    fn one_bit() {
        assert_eq!(one_bit_p_values(&[0.3, -0.2, 0.0]), vec![0.5, 1.0, 1.0]);
    }

    /// Scores in [1/2, 1) so that g(s) = 1 − s is exact and injective.
    fn upper_half(s: &ScorePairVector) -> ScorePairVector {
        s.map(|v| 0.5 + 0.5 * v).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(150))]

        #[test]
        fn knockoff_form_equals_sym(s in skewed_pairs(), k in 1usize..100) {
            let alpha = k as f64 / 100.0;
            prop_assert_eq!(knockoff_plus(&symmetric_statistic(&s), alpha), plis_sym(&s, alpha));
        }

        #[test]
        fn knockoff_form_equals_sym_with_ties(s in score_pairs(), k in 1usize..100) {
            let alpha = k as f64 / 100.0;
            prop_assert_eq!(knockoff_plus(&symmetric_statistic(&s), alpha), plis_sym(&s, alpha));
        }

        #[test]
        fn seqstep_on_anti_symmetric_statistic_equals_mirror(s in skewed_pairs(), k in 1usize..100) {
            let alpha = k as f64 / 100.0;
            let s = upper_half(&s);
            let t = anti_symmetric_statistic(&s, |v| 1.0 - v);
            prop_assert_eq!(knockoff_plus(&t, alpha), decide(&s, alpha).unwrap().rejected);
        }

        #[test]
        fn seqstep_equals_mirror_with_ties(s in score_pairs(), k in 1usize..100) {
            let alpha = k as f64 / 100.0;
            let s = upper_half(&s);
            let t = anti_symmetric_statistic(&s, |v| 1.0 - v);
            prop_assert_eq!(knockoff_plus(&t, alpha), decide(&s, alpha).unwrap().rejected);
        }

        #[test]
        fn cbh_never_rejects_more_than_its_own_rule_allows(s in skewed_pairs(), k in 1usize..100) {
            let alpha = k as f64 / 100.0;
            let d = plis_cbh(&s, alpha);
            if d.count() > 0 {
                let t = d.iter().zip(s.s_x()).filter(|(&r, _)| r).map(|(_, &v)| v).fold(f64::NEG_INFINITY, f64::max);
                let num = 1 + s.s_y().iter().filter(|&&v| v <= t).count();
                prop_assert!(num as f64 / d.count() as f64 <= alpha);
            }
        }
    }
}
