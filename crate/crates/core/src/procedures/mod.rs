//! End-to-end testing procedures and the by-name method registry.

mod conformal;
mod lis;
mod registry;
mod stepup;
mod variants;

use alloc::vec::Vec;

use rand::seq::SliceRandom;

pub use conformal::{conformal_bh, conformal_p_values, storey_factor};
pub use lis::lis_baseline;
pub use registry::{method_names, Method, MethodInput, MethodOutput, DEFAULT_DERAND_RATIO, DEFAULT_DERAND_RUNS};
pub use stepup::{bh, e_bh, storey_pi0, E_BH_REL_TOL};
pub use variants::{
    anti_symmetric_statistic, knockoff_plus, one_bit_p_values, plis_cbh, plis_sym, selective_seqstep_plus,
    symmetric_statistic,
};

use crate::baseline::{Combiner, PairedData};
use crate::dist::{Gaussian, NullDistribution};
use crate::hmm::{em_fit, plis_scores_hmm, EmConfig, EmFitReport, HmmParams, NullLaw};
use crate::kde::{density_ratio_scores, kde_fit};
use crate::mirror::{decide, ScorePairVector};
use crate::rng::{self, purpose};
use crate::types::{check_alpha, check_finite, DecisionVector};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ModelKind {
    Hmm,
    TwoGroup,
}

impl ModelKind {
    pub fn tag(self) -> &'static str {
        match self {
            ModelKind::Hmm => "hm",
            ModelKind::TwoGroup => "tg",
        }
    }
}

/// Working model used to rank hypotheses, and how W is formed.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkingModelSpec {
    pub kind: ModelKind,
    pub combiner: Combiner,
    /// EM settings for the HMM; a `frozen_null` set here overrides the
    /// null information passed to the procedure.
    pub em: EmConfig,
    /// KDE bandwidth for the two-group model; Silverman when `None`.
    pub bandwidth: Option<f64>,
    /// With a known Gaussian null, pin the HMM null to it (emitting W through
    /// the combiner's [`NullLaw`]) instead of fitting a Gaussian null on W.
    pub freeze_known_null: bool,
}

impl WorkingModelSpec {
    pub fn new(kind: ModelKind) -> Self {
        WorkingModelSpec {
            kind,
            combiner: Combiner::MaxAbs,
            em: EmConfig::default(),
            bandwidth: None,
            freeze_known_null: true,
        }
    }

    pub fn hmm() -> Self {
        Self::new(ModelKind::Hmm)
    }

    pub fn two_group() -> Self {
        Self::new(ModelKind::TwoGroup)
    }

    pub fn with_combiner(mut self, combiner: Combiner) -> Self {
        self.combiner = combiner;
        self
    }
}

/// Where null-distribution information comes from.
#[derive(Debug, Clone, Copy)]
pub enum NullSource<'a> {
    Known(&'a NullDistribution),
    /// Training null samples (semi-supervised setting).
    Training(&'a [f64]),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Diagnostics {
    pub fit: Option<EmFitReport>,
    pub hmm_params: Option<HmmParams>,
    pub kde_floored: bool,
    /// Scores replaced by the sentinel because the density estimate vanished.
    pub sentinels: usize,
    pub n_candidates: usize,
    pub n_calibration: usize,
}

impl Diagnostics {
    /// True when the fit had to fall back to defaults or floors.
    pub fn flagged(&self) -> bool {
        self.kde_floored || self.sentinels > 0 || self.fit.as_ref().is_some_and(|f| f.degenerate)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProcedureResult {
    pub decisions: DecisionVector,
    /// Mirror threshold; −∞ when nothing is rejected, NaN for derandomized
    /// runs (which threshold averaged e-values instead).
    pub tau: f64,
    /// Conformal q-values (empty for derandomized runs).
    pub q_values: Vec<f64>,
    /// Generalized e-values (averaged for derandomized runs).
    pub e_values: Vec<f64>,
    pub scores: Option<ScorePairVector>,
    pub diagnostics: Diagnostics,
}

/// Draws the m calibration values for run `k` from F₀.
pub fn draw_calibration(f0: &NullDistribution, m: usize, seed: u64, k: u64) -> Vec<f64> {
    let mut r = rng::stream(seed, &[purpose::CALIBRATION, k]);
    (0..m).map(|_| f0.sample(&mut r)).collect()
}

fn sample_moments(v: &[f64]) -> Gaussian {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0).max(1.0);
    Gaussian { mean, sd: libm::sqrt(var).max(1e-3) }
}

/// Fits the working model on W only and scores every (x_i, y_i) pair.
pub fn score_pairs(paired: &PairedData, model: &WorkingModelSpec, null: NullSource<'_>) -> Result<(ScorePairVector, Diagnostics)> {
    let mut diag = Diagnostics::default();
    let scores = match model.kind {
        ModelKind::Hmm => {
            let mut cfg = model.em.clone();
            if cfg.frozen_null.is_none() {
                cfg.frozen_null = match null {
                    NullSource::Known(f0) if model.freeze_known_null => f0.as_gaussian(),
                    NullSource::Known(_) => None,
                    NullSource::Training(u) => Some(sample_moments(u)),
                };
                if cfg.frozen_null.is_some() && cfg.null_law.is_none() {
                    cfg.null_law = Some(NullLaw::for_combiner(model.combiner));
                }
            }
            let (params, report) = em_fit(paired.w(), &cfg)?;
            diag.fit = Some(report);
            diag.hmm_params = Some(params);
            plis_scores_hmm(paired, &params)
        }
        ModelKind::TwoGroup => {
            let fhat = kde_fit(paired.w(), model.bandwidth)?;
            diag.kde_floored = fhat.is_floored();
            let ratio = match null {
                NullSource::Known(f0) => density_ratio_scores(paired, f0, &fhat),
                NullSource::Training(u) => {
                    let f0hat = kde_fit(u, None)?;
                    diag.kde_floored |= f0hat.is_floored();
                    density_ratio_scores(paired, &f0hat, &fhat)
                }
            };
            diag.sentinels = ratio.sentinels;
            ratio.scores
        }
    };
    Ok((scores, diag))
}

/// Mirror decision on already-computed scores, packaged as a result.
pub fn decide_scores(scores: ScorePairVector, mut diagnostics: Diagnostics, alpha: f64) -> Result<ProcedureResult> {
    let d = decide(&scores, alpha)?;
    debug_assert!(
        d.q_values.iter().zip(d.rejected.iter()).all(|(&q, &r)| (q <= alpha) == r),
        "q-value thresholding disagrees with the mirror rule"
    );
    debug_assert_eq!(e_bh(&d.e_values, alpha).ok().as_ref(), Some(&d.rejected), "e-BH disagrees with the mirror rule");
    diagnostics.n_candidates = d.n_candidates;
    diagnostics.n_calibration = d.n_calibration;
    Ok(ProcedureResult {
        decisions: d.rejected,
        tau: d.tau,
        q_values: d.q_values,
        e_values: d.e_values,
        scores: Some(scores),
        diagnostics,
    })
}

/// PLIS with caller-supplied calibration values.
pub fn plis_with_calibration(
    x: &[f64],
    y: &[f64],
    model: &WorkingModelSpec,
    null: NullSource<'_>,
    alpha: f64,
) -> Result<ProcedureResult> {
    check_alpha(alpha)?;
    if x.is_empty() {
        return Err(Error::Empty);
    }
    let paired = PairedData::build(x.to_vec(), y.to_vec(), model.combiner)?;
    let (scores, diag) = score_pairs(&paired, model, null)?;
    decide_scores(scores, diag, alpha)
}

/// Supervised PLIS: calibration values are drawn from the known null F₀.
pub fn plis(x: &[f64], f0: &NullDistribution, model: &WorkingModelSpec, alpha: f64, seed: u64) -> Result<ProcedureResult> {
    check_finite(x)?;
    f0.validate()?;
    let y = draw_calibration(f0, x.len(), seed, 0);
    plis_with_calibration(x, &y, model, NullSource::Known(f0), alpha)
}

/// Splits labelled nulls into m calibration values and a training remainder
/// by a seeded permutation.
pub fn split_nulls(nulls: &[f64], m: usize, seed: u64) -> Result<(Vec<f64>, Vec<f64>)> {
    if nulls.len() < 2 * m {
        return Err(Error::InsufficientNulls { need: 2 * m, got: nulls.len() });
    }
    let mut perm: Vec<usize> = (0..nulls.len()).collect();
    perm.shuffle(&mut rng::stream(seed, &[purpose::SPLIT]));
    let calib = perm[..m].iter().map(|&i| nulls[i]).collect();
    let train = perm[m..].iter().map(|&i| nulls[i]).collect();
    Ok((calib, train))
}

/// Semi-supervised PLIS: the null is known only through samples. m of them
/// serve as calibration values, the rest train the null part of the model.
pub fn semi_supervised_plis(x: &[f64], nulls: &[f64], model: &WorkingModelSpec, alpha: f64, seed: u64) -> Result<ProcedureResult> {
    check_finite(x)?;
    check_finite(nulls)?;
    let (y, train) = split_nulls(nulls, x.len(), seed)?;
    plis_with_calibration(x, &y, model, NullSource::Training(&train), alpha)
}

/// Derandomized PLIS: one run per entry of `alphas`, each with fresh
/// calibration values, e-values averaged, then e-BH at α.
pub fn derandomized_plis(
    x: &[f64],
    f0: &NullDistribution,
    model: &WorkingModelSpec,
    alphas: &[f64],
    alpha: f64,
    seed: u64,
) -> Result<ProcedureResult> {
    if alphas.is_empty() {
        return Err(Error::invalid("alphas", "need at least one run"));
    }
    check_alpha(alpha)?;
    check_finite(x)?;
    f0.validate()?;
    let m = x.len();
    let mut e_bar = alloc::vec![0.0; m];
    let mut diagnostics = Diagnostics::default();
    for (k, &a) in alphas.iter().enumerate() {
        let y = draw_calibration(f0, m, seed, k as u64);
        let run = plis_with_calibration(x, &y, model, NullSource::Known(f0), a)?;
        for (acc, e) in e_bar.iter_mut().zip(&run.e_values) {
            *acc += e;
        }
        if k == 0 {
            diagnostics = run.diagnostics;
        }
    }
    for e in &mut e_bar {
        *e /= alphas.len() as f64;
    }
    Ok(ProcedureResult {
        decisions: e_bh(&e_bar, alpha)?,
        tau: f64::NAN,
        q_values: Vec::new(),
        e_values: e_bar,
        scores: None,
        diagnostics,
    })
}

/// Naive LIS: fit the HMM to X itself and threshold its posteriors.
pub fn naive_lis(x: &[f64], em: &EmConfig, alpha: f64) -> Result<(DecisionVector, EmFitReport)> {
    check_alpha(alpha)?;
    let (params, report) = em_fit(x, em)?;
    Ok((lis_baseline(&crate::hmm::forward_backward(x, &params), alpha), report))
}
