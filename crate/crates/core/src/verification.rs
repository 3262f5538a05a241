//! Brute-force oracles and exchangeability checks.
//!
//! The oracles share no code with the production paths they check: the
//! posterior oracle sums over every hidden path with its own Gaussian
//! density, and the threshold oracle recounts from scratch at every grid
//! point.

use alloc::vec::Vec;

use crate::baseline::PairedData;
use crate::dist::NullDistribution;
use crate::hmm::{HmmParams, NullLaw};
use crate::mirror::ScorePairVector;
use crate::procedures::{draw_calibration, score_pairs, NullSource, WorkingModelSpec};
use crate::simgen::{self, Generator, GeneratorConfig};
use crate::{Error, Result};

/// Largest chain the posterior oracle accepts.
pub const ORACLE_MAX_M: usize = 16;

fn ln_gauss(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    -0.5 * z * z - libm::log(sd) - 0.5 * libm::log(2.0 * core::f64::consts::PI)
}

fn log_sum_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let hi = a.max(b);
    hi + libm::log(libm::exp(a - hi) + libm::exp(b - hi))
}

fn phi(z: f64) -> f64 {
    0.5 * libm::erfc(-z / core::f64::consts::SQRT_2)
}

/// ln density of a null position of W.
fn ln_w_null(w: f64, params: &HmmParams) -> f64 {
    let (mean, sd) = (params.null.mean, params.null.sd);
    match params.null_law {
        NullLaw::Direct => ln_gauss(w, mean, sd),
        NullLaw::SumPair => ln_gauss(w, 2.0 * mean, sd * libm::sqrt(2.0)),
        NullLaw::MaxAbsPair => {
            let below = phi((w.abs() - mean) / sd) - phi((-w.abs() - mean) / sd);
            libm::log(2.0) + ln_gauss(w, mean, sd) + libm::log(below)
        }
    }
}

/// P(θ_t = 0 | seq) by summing the joint probability of all 2^m paths.
pub fn oracle_posterior(seq: &[f64], params: &HmmParams) -> Result<Vec<f64>> {
    oracle_posterior_at(seq, params, None)
}

/// As [`oracle_posterior`], with position `single` (if any) holding a lone
/// value emitted by the single-value null rather than the null law of W.
pub fn oracle_posterior_at(seq: &[f64], params: &HmmParams, single: Option<usize>) -> Result<Vec<f64>> {
    let m = seq.len();
    if m == 0 {
        return Err(Error::Empty);
    }
    if m > ORACLE_MAX_M {
        return Err(Error::OracleTooLarge { m, max: ORACLE_MAX_M });
    }
    let ln_emit = |t: usize, s: usize| match s {
        0 if single == Some(t) => ln_gauss(seq[t], params.null.mean, params.null.sd),
        0 => ln_w_null(seq[t], params),
        _ => ln_gauss(seq[t], params.alt.mean, params.alt.sd),
    };
    let mut total = f64::NEG_INFINITY;
    let mut null_mass = alloc::vec![f64::NEG_INFINITY; m];
    for path in 0u32..(1u32 << m) {
        let state = |t: usize| ((path >> t) & 1) as usize;
        let mut lp = libm::log(params.initial[state(0)]) + ln_emit(0, state(0));
        for t in 1..m {
            lp += libm::log(params.transition[state(t - 1)][state(t)]) + ln_emit(t, state(t));
        }
        total = log_sum_exp(total, lp);
        for (t, acc) in null_mass.iter_mut().enumerate() {
            if state(t) == 0 {
                *acc = log_sum_exp(*acc, lp);
            }
        }
    }
    Ok(null_mass.into_iter().map(|l| libm::exp(l - total)).collect())
}

/// Largest t among all scores with Q(t) ≤ α, recounting Q at each point;
/// −∞ when none qualifies.
pub fn oracle_threshold(scores: &ScorePairVector, alpha: f64) -> f64 {
    let (sx, sy) = (scores.s_x(), scores.s_y());
    let mut best = f64::NEG_INFINITY;
    for &t in sx.iter().chain(sy) {
        let mut num = 1usize;
        let mut den = 0usize;
        for i in 0..sx.len() {
            if sx[i] < sy[i] && sx[i] <= t {
                den += 1;
            }
            if sy[i] < sx[i] && sy[i] <= t {
                num += 1;
            }
        }
        let q = num as f64 / den.max(1) as f64;
        if q <= alpha && t > best {
            best = t;
        }
    }
    best
}

/// Outcome of one exchangeability trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProbeTrial {
    /// Swapping (x_i, y_i) exchanged exactly that score pair and left every
    /// other score bit-identical, for every i.
    pub swap_exact: bool,
    /// Exchanging two test values x_i ↔ x_j changed the score of some third
    /// unit.
    pub joint_changed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbeReport {
    pub trials: Vec<ProbeTrial>,
}

impl ProbeReport {
    pub fn all_swap_exact(&self) -> bool {
        self.trials.iter().all(|t| t.swap_exact)
    }

    pub fn joint_failures(&self) -> usize {
        self.trials.iter().filter(|t| t.joint_changed).count()
    }
}

fn bits(v: &[f64]) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}

fn scores_for(x: Vec<f64>, y: Vec<f64>, model: &WorkingModelSpec, f0: &NullDistribution) -> Result<ScorePairVector> {
    let paired = PairedData::build(x, y, model.combiner)?;
    Ok(score_pairs(&paired, model, NullSource::Known(f0))?.0)
}

/// Swap-exchange and joint-permutation checks on clustered N(0, 1) data.
/// Each trial swaps every pair in turn, then exchanges x₀ with x_{m−1}.
pub fn exchangeability_probe(model: &WorkingModelSpec, m: usize, trials: usize, seed: u64) -> Result<ProbeReport> {
    if m < 3 {
        return Err(Error::invalid("m", "need at least three units"));
    }
    let f0 = NullDistribution::default();
    let cfg = GeneratorConfig::new(m, Generator::Hmm { a00: 0.9, a11: 0.8, mu: 2.5 });
    let mut out = Vec::with_capacity(trials);
    for trial in 0..trials as u64 {
        let s = crate::rng::derive(seed, &[trial]);
        let x = simgen::generate(&cfg, s)?.x;
        let y = draw_calibration(&f0, m, s, 0);
        let base = scores_for(x.clone(), y.clone(), model, &f0)?;
        let (bx, by) = (bits(base.s_x()), bits(base.s_y()));

        let mut swap_exact = true;
        for i in 0..m {
            let (mut xs, mut ys) = (x.clone(), y.clone());
            core::mem::swap(&mut xs[i], &mut ys[i]);
            let sw = scores_for(xs, ys, model, &f0)?;
            let (sx, sy) = (bits(sw.s_x()), bits(sw.s_y()));
            for k in 0..m {
                let want = if k == i { (by[k], bx[k]) } else { (bx[k], by[k]) };
                swap_exact &= (sx[k], sy[k]) == want;
            }
        }

        let (i, j) = (0, m - 1);
        let mut xp = x.clone();
        xp.swap(i, j);
        let perm = scores_for(xp, y, model, &f0)?;
        let (px, py) = (bits(perm.s_x()), bits(perm.s_y()));
        let joint_changed = (0..m).filter(|&k| k != i && k != j).any(|k| px[k] != bx[k] || py[k] != by[k]);
        out.push(ProbeTrial { swap_exact, joint_changed });
    }
    Ok(ProbeReport { trials: out })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::Gaussian;
    use crate::hmm::forward_backward;
    use crate::mirror::tests::fixture_f;
    use crate::procedures::ModelKind;
    use alloc::vec;

    fn params() -> HmmParams {
        HmmParams {
            initial: [0.6, 0.4],
            transition: [[0.9, 0.1], [0.3, 0.7]],
            null: Gaussian::STANDARD,
            alt: Gaussian { mean: 2.0, sd: 1.5 },
            null_law: NullLaw::Direct,
        }
    }

    #[test]
    fn single_position_matches_bayes() {
        let p = params();
        let x = 0.8;
        let f0 = libm::exp(-0.5 * x * x);
        let z = (x - 2.0) / 1.5;
        let f1 = libm::exp(-0.5 * z * z) / 1.5;
        let want = 0.6 * f0 / (0.6 * f0 + 0.4 * f1);
        assert!((oracle_posterior(&[x], &p).unwrap()[0] - want).abs() < 1e-14);
    }

    #[test]
    fn uninformative_emissions_give_prior_marginals() {
        let p = HmmParams { alt: Gaussian::STANDARD, ..params() };
        let post = oracle_posterior(&[0.3, -1.0, 2.0, 0.0, 0.7], &p).unwrap();
        let mut marginal = p.initial;
        for (t, &v) in post.iter().enumerate() {
            if t > 0 {
                let a = &p.transition;
                marginal = [marginal[0] * a[0][0] + marginal[1] * a[1][0], marginal[0] * a[0][1] + marginal[1] * a[1][1]];
            }
            assert!((v - marginal[0]).abs() < 1e-13, "t={t}");
        }
    }

    #[test]
    fn agrees_with_forward_backward_at_twelve() {
        let seq = [0.1, 2.4, 3.1, -0.5, 1.9, 2.2, 0.0, -1.3, 4.0, 2.5, 0.3, 1.1];
        let got = forward_backward(&seq, &params());
        let want = oracle_posterior(&seq, &params()).unwrap();
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn refuses_long_chains() {
        assert!(matches!(oracle_posterior(&[0.0; 17], &params()), Err(Error::OracleTooLarge { m: 17, .. })));
        assert!(oracle_posterior(&[], &params()).is_err());
    }

    #[test]
    fn threshold_fixture() {
        assert_eq!(oracle_threshold(&fixture_f(), 0.4), 0.2);
        assert_eq!(oracle_threshold(&fixture_f(), 0.3), f64::NEG_INFINITY);
        // all three candidates plus one calibration unit: Q(0.9) = 2/3
        assert_eq!(oracle_threshold(&fixture_f(), 1.0 - 1e-9), 0.95);
        let no_candidates = ScorePairVector::from_pairs(&[(0.9, 0.1), (0.5, 0.5)]).unwrap();
        assert_eq!(oracle_threshold(&no_candidates, 0.99), f64::NEG_INFINITY);
    }

    #[test]
    fn hmm_scores_are_pairwise_but_not_jointly_exchangeable() {
        let report = exchangeability_probe(&WorkingModelSpec::hmm(), 20, 3, 42).unwrap();
        assert_eq!(report.trials.len(), 3);
        assert!(report.all_swap_exact());
        assert_eq!(report.joint_failures(), 3);
    }

    #[test]
    fn two_group_scores_swap_exactly() {
        let report = exchangeability_probe(&WorkingModelSpec::new(ModelKind::TwoGroup), 20, 2, 7).unwrap();
        assert!(report.all_swap_exact());
    }

    #[test]
    fn identical_values_change_nothing() {
        let f0 = NullDistribution::default();
        let model = WorkingModelSpec::hmm();
        let x = vec![1.5, 0.2, -0.3, 1.5, 2.0];
        let y = draw_calibration(&f0, 5, 3, 0);
        let a = scores_for(x.clone(), y.clone(), &model, &f0).unwrap();
        let mut xp = x;
        xp.swap(0, 3);
        assert_eq!(a, scores_for(xp, y, &model, &f0).unwrap());
    }
}
