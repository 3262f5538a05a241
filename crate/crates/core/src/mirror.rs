//! Score pairs, the mirror FDP process Q(t), the threshold τ, conformal
//! q-values and generalized e-values.
//!
//! Units whose test score is strictly smaller than their calibration score
//! form the candidate set; strictly larger ones form the calibration set;
//! ties belong to neither and are never rejected.

use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::types::{check_alpha, DecisionVector};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Membership {
    /// s_x < s_y: may be rejected.
    Candidate,
    /// s_y < s_x: counted in the mirror numerator.
    Calibration,
    Tie,
}

/// Per-unit (s_x, s_y) pairs. Smaller scores are stronger evidence against
/// the null.
#[derive(Debug, Clone, PartialEq)]
pub struct ScorePairVector {
    s_x: Vec<f64>,
    s_y: Vec<f64>,
}

impl ScorePairVector {
    /// Scores may be any non-NaN value (including infinities).
    pub fn new(s_x: Vec<f64>, s_y: Vec<f64>) -> Result<Self> {
        if s_x.len() != s_y.len() {
            return Err(Error::LengthMismatch { left: s_x.len(), right: s_y.len() });
        }
        if let Some(index) = s_x.iter().chain(&s_y).position(|v| v.is_nan()) {
            return Err(Error::NonFinite { index: index % s_x.len().max(1) });
        }
        Ok(ScorePairVector { s_x, s_y })
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(pairs.iter().map(|p| p.0).collect(), pairs.iter().map(|p| p.1).collect())
    }

    pub fn len(&self) -> usize {
        self.s_x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s_x.is_empty()
    }

    pub fn s_x(&self) -> &[f64] {
        &self.s_x
    }

    pub fn s_y(&self) -> &[f64] {
        &self.s_y
    }

    pub fn membership(&self, i: usize) -> Membership {
        match self.s_x[i].partial_cmp(&self.s_y[i]) {
            Some(Ordering::Less) => Membership::Candidate,
            Some(Ordering::Greater) => Membership::Calibration,
            _ => Membership::Tie,
        }
    }

    pub fn count(&self, which: Membership) -> usize {
        (0..self.len()).filter(|&i| self.membership(i) == which).count()
    }

    /// Applies `f` to every score; used to check rank invariance.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.s_x.iter().map(|&v| f(v)).collect(), self.s_y.iter().map(|&v| f(v)).collect())
    }

    pub fn swapped(&self, i: usize) -> Self {
        let mut out = self.clone();
        core::mem::swap(&mut out.s_x[i], &mut out.s_y[i]);
        out
    }
}

/// Q(t) = (1 + #{calibration j : s_y ≤ t}) / max(#{candidate j : s_x ≤ t}, 1).
pub fn mirror_q(t: f64, scores: &ScorePairVector) -> f64 {
    let (num, den) = counts_at(t, scores);
    ratio(num, den)
}

fn counts_at(t: f64, scores: &ScorePairVector) -> (usize, usize) {
    let (mut num, mut den) = (0, 0);
    for i in 0..scores.len() {
        match scores.membership(i) {
            Membership::Candidate => den += (scores.s_x[i] <= t) as usize,
            Membership::Calibration => num += (scores.s_y[i] <= t) as usize,
            Membership::Tie => {}
        }
    }
    (num, den)
}

#[inline]
fn ratio(num: usize, den: usize) -> f64 {
    (1 + num) as f64 / den.max(1) as f64
}

/// Q evaluated on every distinct value of S_X ∪ S_Y, ascending.
struct Sweep {
    grid: Vec<f64>,
    q: Vec<f64>,
    /// Numerator count (calibration scores ≤ t) at each grid point.
    below: Vec<usize>,
}

impl Sweep {
    fn new(scores: &ScorePairVector) -> Self {
        // (value, numerator increment, denominator increment)
        let mut events: Vec<(f64, u8, u8)> = Vec::with_capacity(2 * scores.len());
        for i in 0..scores.len() {
            let m = scores.membership(i);
            events.push((scores.s_x[i], 0, (m == Membership::Candidate) as u8));
            events.push((scores.s_y[i], (m == Membership::Calibration) as u8, 0));
        }
        events.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        let (mut num, mut den) = (0usize, 0usize);
        let mut sweep = Sweep { grid: Vec::new(), q: Vec::new(), below: Vec::new() };
        let mut k = 0;
        while k < events.len() {
            let v = events[k].0;
            while k < events.len() && events[k].0 == v {
                num += events[k].1 as usize;
                den += events[k].2 as usize;
                k += 1;
            }
            sweep.grid.push(v);
            sweep.q.push(ratio(num, den));
            sweep.below.push(num);
        }
        sweep
    }

    /// Index of the largest admissible grid point.
    fn last_admissible(&self, alpha: f64) -> Option<usize> {
        self.q.iter().rposition(|&q| q <= alpha)
    }
}

/// τ = sup{t ∈ S_X ∪ S_Y : Q(t) ≤ α}; −∞ when no grid point qualifies.
pub fn select_threshold(scores: &ScorePairVector, alpha: f64) -> f64 {
    let sweep = Sweep::new(scores);
    sweep.last_admissible(alpha).map_or(f64::NEG_INFINITY, |k| sweep.grid[k])
}

/// q_i = min{Q(t) : t ∈ S_X ∪ S_Y, t ≥ s_x,i} for candidates, 1 otherwise;
/// clipped to at most 1.
pub fn conformal_q_values(scores: &ScorePairVector) -> Vec<f64> {
    q_values_from_sweep(scores, &Sweep::new(scores))
}

fn q_values_from_sweep(scores: &ScorePairVector, sweep: &Sweep) -> Vec<f64> {
    let mut suffix_min = sweep.q.clone();
    for k in (0..suffix_min.len().saturating_sub(1)).rev() {
        suffix_min[k] = suffix_min[k].min(suffix_min[k + 1]);
    }
    (0..scores.len())
        .map(|i| match scores.membership(i) {
            Membership::Candidate => {
                let k = sweep.grid.partition_point(|&g| g < scores.s_x[i]);
                suffix_min[k].min(1.0)
            }
            _ => 1.0,
        })
        .collect()
}

/// e_j = m·δ_j / (1 + #{calibration i : s_y ≤ τ}) with δ the rejections at τ.
pub fn generalized_e_values(scores: &ScorePairVector, tau: f64) -> Vec<f64> {
    let (num, _) = counts_at(tau, scores);
    let value = scores.len() as f64 / (1 + num) as f64;
    rejections_at(scores, tau).iter().map(|&d| if d { value } else { 0.0 }).collect()
}

fn rejections_at(scores: &ScorePairVector, tau: f64) -> DecisionVector {
    DecisionVector::new(
        (0..scores.len())
            .map(|i| scores.membership(i) == Membership::Candidate && scores.s_x[i] <= tau)
            .collect(),
    )
}

/// Everything the mirror procedure produces at one level α.
#[derive(Debug, Clone, PartialEq)]
pub struct MirrorDecision {
    pub alpha: f64,
    pub tau: f64,
    pub rejected: DecisionVector,
    pub q_values: Vec<f64>,
    pub e_values: Vec<f64>,
    pub n_candidates: usize,
    pub n_calibration: usize,
}

impl MirrorDecision {
    /// Q(τ), or `None` when nothing is rejected.
    pub fn q_at_tau(&self, scores: &ScorePairVector) -> Option<f64> {
        self.tau.is_finite().then(|| mirror_q(self.tau, scores))
    }
}

/// Runs the full mirror procedure at level α in one O(m log m) sweep.
pub fn decide(scores: &ScorePairVector, alpha: f64) -> Result<MirrorDecision> {
    check_alpha(alpha)?;
    let sweep = Sweep::new(scores);
    let (tau, below) = match sweep.last_admissible(alpha) {
        Some(k) => (sweep.grid[k], sweep.below[k]),
        None => (f64::NEG_INFINITY, 0),
    };
    let rejected = rejections_at(scores, tau);
    let e = scores.len() as f64 / (1 + below) as f64;
    let e_values = rejected.iter().map(|&d| if d { e } else { 0.0 }).collect();
    let decision = MirrorDecision {
        alpha,
        tau,
        q_values: q_values_from_sweep(scores, &sweep),
        e_values,
        rejected,
        n_candidates: scores.count(Membership::Candidate),
        n_calibration: scores.count(Membership::Calibration),
    };
    if let Some(q) = decision.q_at_tau(scores) {
        assert!(q <= alpha, "mirror estimate {q} at the selected threshold exceeds {alpha}");
    }
    Ok(decision)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::procedures::e_bh;
    use crate::verification::oracle_threshold;
    use alloc::vec;
    use proptest::prelude::*;

    pub(crate) fn fixture_f() -> ScorePairVector {
        ScorePairVector::from_pairs(&[(0.1, 0.9), (0.2, 0.8), (0.7, 0.3), (0.05, 0.95)]).unwrap()
    }

    #[test]
    fn fixture_mirror_values() {
        let f = fixture_f();
        assert_eq!(mirror_q(0.2, &f), 1.0 / 3.0);
        assert_eq!(mirror_q(0.3, &f), 2.0 / 3.0);
        assert_eq!(mirror_q(0.01, &f), 1.0);
        assert_eq!(f.count(Membership::Candidate), 3);
        assert_eq!(f.count(Membership::Calibration), 1);
    }

    #[test]
    fn fixture_threshold_and_outputs() {
        let f = fixture_f();
        assert_eq!(select_threshold(&f, 0.4), 0.2);
        assert_eq!(conformal_q_values(&f), vec![1.0 / 3.0, 1.0 / 3.0, 1.0, 1.0 / 3.0]);
        assert_eq!(generalized_e_values(&f, 0.2), vec![4.0, 4.0, 0.0, 4.0]);
        assert_eq!(generalized_e_values(&f, f64::NEG_INFINITY), vec![0.0; 4]);
        let d = decide(&f, 0.4).unwrap();
        assert_eq!(d.tau, 0.2);
        assert_eq!(d.rejected.rejected(), vec![0, 1, 3]);
        assert_eq!(e_bh(&d.e_values, 0.4).unwrap(), d.rejected);
    }

    #[test]
    fn nothing_admissible() {
        let f = fixture_f();
        assert_eq!(select_threshold(&f, 0.3), f64::NEG_INFINITY);
        let d = decide(&f, 0.3).unwrap();
        assert_eq!(d.rejected.count(), 0);
        assert!(d.e_values.iter().all(|&e| e == 0.0));
    }

    #[test]
    fn ties_are_inert() {
        let s = ScorePairVector::from_pairs(&[(0.1, 0.1), (0.2, 0.9), (0.3, 0.8)]).unwrap();
        assert_eq!(s.membership(0), Membership::Tie);
        assert_eq!(conformal_q_values(&s)[0], 1.0);
        assert_eq!(mirror_q(1.0, &s), 0.5);
        assert_eq!(decide(&s, 0.5).unwrap().rejected.rejected(), vec![1, 2]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ScorePairVector::new(vec![0.1], vec![]).is_err());
        assert!(ScorePairVector::new(vec![f64::NAN], vec![0.0]).is_err());
        assert!(decide(&fixture_f(), 0.0).is_err());
        assert!(decide(&fixture_f(), 1.0).is_err());
    }

    /// Scores on a coarse grid so that ties across units are common.
    pub(crate) fn score_pairs() -> impl Strategy<Value = ScorePairVector> {
        prop::collection::vec((0u8..40, 0u8..40), 1..60).prop_map(|v| {
            ScorePairVector::from_pairs(
                &v.iter().map(|&(a, b)| (a as f64 / 40.0, b as f64 / 40.0)).collect::<Vec<_>>(),
            )
            .unwrap()
        })
    }

    /// Continuous scores with rare ties, skewed so that candidates dominate.
    pub(crate) fn skewed_pairs() -> impl Strategy<Value = ScorePairVector> {
        prop::collection::vec((0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0), 1..120).prop_map(|v| {
            ScorePairVector::from_pairs(
                &v.iter().map(|&(a, b, c)| (a * c, b)).collect::<Vec<_>>(),
            )
            .unwrap()
        })
    }

    fn alphas() -> impl Iterator<Item = f64> {
        (1..100).map(|k| k as f64 / 100.0)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn sweep_matches_oracle(s in score_pairs(), k in 1usize..100) {
            let alpha = k as f64 / 100.0;
            prop_assert_eq!(select_threshold(&s, alpha), oracle_threshold(&s, alpha));
        }

        #[test]
        fn q_value_thresholding_reproduces_rejections(s in skewed_pairs()) {
            let q = conformal_q_values(&s);
            for alpha in alphas() {
                let d = decide(&s, alpha).unwrap();
                let by_q: Vec<bool> = q.iter().map(|&qi| qi <= alpha).collect();
                prop_assert_eq!(&*d.rejected, &by_q[..], "alpha {}", alpha);
            }
        }

        #[test]
        fn e_bh_reproduces_rejections(s in skewed_pairs()) {
            for alpha in alphas() {
                let d = decide(&s, alpha).unwrap();
                prop_assert_eq!(e_bh(&d.e_values, alpha).unwrap(), d.rejected.clone(), "alpha {}", alpha);
            }
        }

        #[test]
        fn minimum_grid_gives_same_rejections(s in skewed_pairs(), k in 1usize..100) {
            // Q only jumps at min(s_x, s_y) of non-tied units
            let alpha = k as f64 / 100.0;
            let mut best = f64::NEG_INFINITY;
            for i in 0..s.len() {
                let t = s.s_x()[i].min(s.s_y()[i]);
                if mirror_q(t, &s) <= alpha && t > best {
                    best = t;
                }
            }
            let tau = select_threshold(&s, alpha);
            prop_assert_eq!(rejections_at(&s, tau), rejections_at(&s, best));
        }

        #[test]
        fn monotone_in_alpha(s in skewed_pairs()) {
            let mut prev = DecisionVector::none(s.len());
            for alpha in alphas() {
                let d = decide(&s, alpha).unwrap().rejected;
                prop_assert!(prev.iter().zip(d.iter()).all(|(&a, &b)| !a || b));
                prev = d;
            }
        }

        #[test]
        fn invariant_under_increasing_transforms(s in skewed_pairs(), k in 1usize..100) {
            let alpha = k as f64 / 100.0;
            let base = decide(&s, alpha).unwrap().rejected;
            let cubed = s.map(|v| 3.0 * v * v * v - 1.0).unwrap();
            let logit = s.map(|v| libm::log(v + 1e-3) - libm::log(1.001 - v)).unwrap();
            prop_assert_eq!(&decide(&cubed, alpha).unwrap().rejected, &base);
            prop_assert_eq!(&decide(&logit, alpha).unwrap().rejected, &base);
        }

        #[test]
        fn decision_invariants(s in skewed_pairs(), k in 1usize..100) {
            let alpha = k as f64 / 100.0;
            let d = decide(&s, alpha).unwrap();
            for i in 0..s.len() {
                if d.rejected[i] {
                    prop_assert_eq!(s.membership(i), Membership::Candidate);
                    prop_assert!(s.s_x()[i] <= d.tau);
                }
                if s.membership(i) != Membership::Candidate {
                    prop_assert_eq!(d.q_values[i], 1.0);
                }
                prop_assert!(d.q_values[i] > 0.0 && d.q_values[i] <= 1.0);
                prop_assert!(d.e_values[i] >= 0.0);
            }
            if d.tau.is_finite() {
                prop_assert!(mirror_q(d.tau, &s) <= alpha);
            }
        }
    }
}
