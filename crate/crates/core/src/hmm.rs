//! Two-state Gaussian hidden Markov working model.
//!
//! State 0 is null, state 1 non-null. Messages are scaled per position so
//! long chains never underflow; emission likelihoods are computed relative
//! to their per-position maximum for the same reason.
//!
//! `null` is the law of a single null value. How a null position of the
//! combined sequence W is distributed depends on the combiner, so the
//! sequence emission of state 0 goes through [`NullLaw`]; the substituted
//! value at the scored position is always judged against `null` itself.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::baseline::{Combiner, PairedData, Side};
use crate::dist::Gaussian;
use crate::mirror::ScorePairVector;
use crate::{Error, Result};

/// Null emission of W in terms of the single-value null N(μ, σ²).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum NullLaw {
    /// W itself is N(μ, σ²) under the null (the null is fitted on W).
    #[default]
    Direct,
    /// W keeps the larger-magnitude of two independent null draws:
    /// density 2·f(w)·P(|Y| < |w|).
    MaxAbsPair,
    /// W is the sum of two independent null draws: N(2μ, 2σ²).
    SumPair,
}

impl NullLaw {
    pub fn for_combiner(c: Combiner) -> Self {
        match c {
            Combiner::MaxAbs => NullLaw::MaxAbsPair,
            Combiner::Additive => NullLaw::SumPair,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            NullLaw::Direct => "direct",
            NullLaw::MaxAbsPair => "max_abs_pair",
            NullLaw::SumPair => "sum_pair",
        }
    }

    /// ln of the W density under the null when single values follow `g`.
    pub fn ln_pdf(self, g: &Gaussian, w: f64) -> f64 {
        match self {
            NullLaw::Direct => g.ln_pdf(w),
            NullLaw::MaxAbsPair => {
                let a = w.abs();
                let inside = g.cdf(a) - g.cdf(-a);
                if inside > 0.0 {
                    core::f64::consts::LN_2 + g.ln_pdf(w) + libm::log(inside)
                } else {
                    f64::NEG_INFINITY
                }
            }
            NullLaw::SumPair => {
                Gaussian { mean: 2.0 * g.mean, sd: core::f64::consts::SQRT_2 * g.sd }.ln_pdf(w)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HmmParams {
    pub initial: [f64; 2],
    /// transition[i][j] = P(θ_{t+1} = j | θ_t = i)
    pub transition: [[f64; 2]; 2],
    pub null: Gaussian,
    pub alt: Gaussian,
    #[cfg_attr(feature = "serde", serde(default))]
    pub null_law: NullLaw,
}

impl HmmParams {
    pub fn validate(&self) -> Result<()> {
        let prob = |name: &'static str, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(Error::invalid(name, alloc::format!("{p} is not a probability")))
            }
        };
        for p in self.initial {
            prob("initial", p)?;
        }
        if (self.initial[0] + self.initial[1] - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("initial", "entries must sum to 1"));
        }
        for row in self.transition {
            for p in row {
                prob("transition", p)?;
            }
            if (row[0] + row[1] - 1.0).abs() > 1e-12 {
                return Err(Error::invalid("transition", "rows must sum to 1"));
            }
        }
        Gaussian::new(self.null.mean, self.null.sd)?;
        Gaussian::new(self.alt.mean, self.alt.sd)?;
        Ok(())
    }

    /// Starting point for EM: mostly-null chain, null N(0, 1) (or the frozen
    /// null), non-null mean at the average of the top decile of |w|.
    pub fn default_init(w: &[f64], frozen_null: Option<Gaussian>) -> Self {
        let mut mags: Vec<f64> = w.iter().map(|v| v.abs()).collect();
        mags.sort_unstable_by(|a, b| b.total_cmp(a));
        let top = (mags.len() / 10).max(1).min(mags.len());
        let mu1 = if top == 0 { 1.0 } else { mags[..top].iter().sum::<f64>() / top as f64 };
        HmmParams {
            initial: [0.9, 0.1],
            transition: [[0.9, 0.1], [0.2, 0.8]],
            null: frozen_null.unwrap_or(Gaussian::STANDARD),
            alt: Gaussian { mean: mu1, sd: 1.0 },
            null_law: NullLaw::Direct,
        }
    }

    /// Stationary distribution of the transition matrix.
    pub fn stationary(&self) -> [f64; 2] {
        let (a01, a10) = (self.transition[0][1], self.transition[1][0]);
        if a01 + a10 == 0.0 {
            return self.initial;
        }
        [a10 / (a01 + a10), a01 / (a01 + a10)]
    }

    /// `key = value` lines; floats are written in shortest round-trip form.
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.fields() {
            let _ = writeln!(s, "{k} = {v:?}");
        }
        if self.null_law != NullLaw::Direct {
            let _ = writeln!(s, "null_law = {}", self.null_law.name());
        }
        s
    }

    /// Parses the output of [`HmmParams::to_kv`]. Blank lines and `#`
    /// comments are ignored; every numeric key must be present exactly once,
    /// `null_law` is optional.
    pub fn from_kv(text: &str) -> Result<Self> {
        let mut vals: [Option<f64>; 10] = [None; 10];
        let mut law = None;
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(alloc::format!("line {}: expected `key = value`", n + 1)))?;
            if k.trim() == "null_law" {
                let parsed = [NullLaw::Direct, NullLaw::MaxAbsPair, NullLaw::SumPair]
                    .into_iter()
                    .find(|l| l.name() == v.trim())
                    .ok_or_else(|| Error::Parse(alloc::format!("line {}: unknown null law `{}`", n + 1, v.trim())))?;
                if law.replace(parsed).is_some() {
                    return Err(Error::Parse(alloc::format!("line {}: duplicate key `null_law`", n + 1)));
                }
                continue;
            }
            let slot = KEYS
                .iter()
                .position(|&key| key == k.trim())
                .ok_or_else(|| Error::Parse(alloc::format!("line {}: unknown key `{}`", n + 1, k.trim())))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::Parse(alloc::format!("line {}: bad number `{}`", n + 1, v.trim())))?;
            if vals[slot].replace(v).is_some() {
                return Err(Error::Parse(alloc::format!("line {}: duplicate key `{}`", n + 1, KEYS[slot])));
            }
        }
        let mut get = KEYS.iter().zip(vals).map(|(k, v)| {
            v.ok_or_else(|| Error::Parse(alloc::format!("missing key `{k}`")))
        });
        let mut next = || get.next().expect("ten keys");
        let p = HmmParams {
            initial: [next()?, next()?],
            transition: [[next()?, next()?], [next()?, next()?]],
            null: Gaussian { mean: next()?, sd: next()? },
            alt: Gaussian { mean: next()?, sd: next()? },
            null_law: law.unwrap_or_default(),
        };
        p.validate()?;
        Ok(p)
    }

    fn fields(&self) -> [(&'static str, f64); 10] {
        [
            (KEYS[0], self.initial[0]),
            (KEYS[1], self.initial[1]),
            (KEYS[2], self.transition[0][0]),
            (KEYS[3], self.transition[0][1]),
            (KEYS[4], self.transition[1][0]),
            (KEYS[5], self.transition[1][1]),
            (KEYS[6], self.null.mean),
            (KEYS[7], self.null.sd),
            (KEYS[8], self.alt.mean),
            (KEYS[9], self.alt.sd),
        ]
    }

    /// ln emission densities of a position of W.
    #[inline]
    pub fn ln_emission_w(&self, v: f64) -> [f64; 2] {
        [self.null_law.ln_pdf(&self.null, v), self.alt.ln_pdf(v)]
    }

    /// ln emission densities of a single value substituted into W.
    #[inline]
    pub fn ln_emission_value(&self, v: f64) -> [f64; 2] {
        [self.null.ln_pdf(v), self.alt.ln_pdf(v)]
    }

    #[inline]
    fn predict(&self, prev: &[f64; 2]) -> [f64; 2] {
        let a = &self.transition;
        [prev[0] * a[0][0] + prev[1] * a[1][0], prev[0] * a[0][1] + prev[1] * a[1][1]]
    }
}

/// Emission likelihoods scaled so the larger is 1, and the ln of that scale.
#[inline]
fn scaled([l0, l1]: [f64; 2]) -> ([f64; 2], f64) {
    let top = l0.max(l1);
    ([libm::exp(l0 - top), libm::exp(l1 - top)], top)
}

const KEYS: [&str; 10] = ["pi0", "pi1", "a00", "a01", "a10", "a11", "mu0", "sd0", "mu1", "sd1"];

/// Normalized forward and backward messages for one sequence.
#[derive(Debug, Clone)]
pub struct Messages {
    /// α̂_t(s) ∝ P(θ_t = s | v_1..v_t), normalized to sum 1.
    pub alpha: Vec<[f64; 2]>,
    /// β̂_t(s) ∝ P(v_{t+1}..v_m | θ_t = s), normalized to sum 1.
    pub beta: Vec<[f64; 2]>,
    pub log_likelihood: f64,
}

impl Messages {
    pub fn compute(seq: &[f64], params: &HmmParams) -> Self {
        Self::compute_with(seq.len(), |t| params.ln_emission_w(seq[t]), params)
    }

    fn compute_with(m: usize, ln_emit: impl Fn(usize) -> [f64; 2], params: &HmmParams) -> Self {
        let mut alpha = Vec::with_capacity(m);
        let mut ll = 0.0;
        let mut emis = Vec::with_capacity(m);
        for t in 0..m {
            let (e, top) = scaled(ln_emit(t));
            let prior = if t == 0 { params.initial } else { params.predict(&alpha[t - 1]) };
            let raw = [prior[0] * e[0], prior[1] * e[1]];
            let c = raw[0] + raw[1];
            if c > 0.0 && c.is_finite() {
                alpha.push([raw[0] / c, raw[1] / c]);
                ll += libm::log(c) + top;
            } else {
                alpha.push(normalized(prior));
                ll = f64::NEG_INFINITY;
            }
            emis.push(e);
        }
        let mut beta = alloc::vec![[0.5, 0.5]; m];
        let a = &params.transition;
        for t in (0..m.saturating_sub(1)).rev() {
            let e = emis[t + 1];
            let b = beta[t + 1];
            let raw = [
                a[0][0] * e[0] * b[0] + a[0][1] * e[1] * b[1],
                a[1][0] * e[0] * b[0] + a[1][1] * e[1] * b[1],
            ];
            beta[t] = normalized(raw);
        }
        Messages { alpha, beta, log_likelihood: ll }
    }

    /// P(θ_t = 0 | whole sequence).
    pub fn null_posterior(&self, t: usize) -> f64 {
        let (a, b) = (self.alpha[t], self.beta[t]);
        let p0 = a[0] * b[0];
        let p1 = a[1] * b[1];
        clamp_unit(p0 / (p0 + p1))
    }
}

#[inline]
fn normalized(v: [f64; 2]) -> [f64; 2] {
    let s = v[0] + v[1];
    if s > 0.0 && s.is_finite() {
        [v[0] / s, v[1] / s]
    } else {
        [0.5, 0.5]
    }
}

#[inline]
fn clamp_unit(p: f64) -> f64 {
    if p.is_nan() {
        0.5
    } else {
        p.clamp(0.0, 1.0)
    }
}

/// Null posteriors γ_t = P(θ_t = 0 | seq).
pub fn forward_backward(seq: &[f64], params: &HmmParams) -> Vec<f64> {
    let msg = Messages::compute(seq, params);
    (0..seq.len()).map(|t| msg.null_posterior(t)).collect()
}

pub fn log_likelihood(seq: &[f64], params: &HmmParams) -> f64 {
    Messages::compute(seq, params).log_likelihood
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmConfig {
    pub max_iter: usize,
    /// Stop when |Δ loglik| / |loglik| falls below this. `f64::INFINITY`
    /// evaluates the starting point without updating it.
    pub tol: f64,
    pub init: Option<HmmParams>,
    /// Keeps the null emission fixed at this Gaussian.
    pub frozen_null: Option<Gaussian>,
    /// Overrides the starting point's [`NullLaw`]. Anything but `Direct`
    /// needs a frozen null.
    pub null_law: Option<NullLaw>,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig { max_iter: 500, tol: 1e-6, init: None, frozen_null: None, null_law: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmFitReport {
    /// Number of parameter updates performed.
    pub iterations: usize,
    pub log_likelihood: f64,
    pub converged: bool,
    /// A state lost all responsibility mass; defaults were restored.
    pub degenerate: bool,
    /// Log-likelihood before each update and at the returned parameters.
    pub trace: Vec<f64>,
}

const MIN_STATE_MASS: f64 = 1e-8;
const MIN_SD: f64 = 1e-3;

struct Expectations {
    first: [f64; 2],
    trans: [[f64; 2]; 2],
    weight: [f64; 2],
    sum: [f64; 2],
    sum_sq: [f64; 2],
}

fn e_step(seq: &[f64], params: &HmmParams, msg: &Messages) -> Expectations {
    let mut ex = Expectations {
        first: [0.0; 2],
        trans: [[0.0; 2]; 2],
        weight: [0.0; 2],
        sum: [0.0; 2],
        sum_sq: [0.0; 2],
    };
    let a = &params.transition;
    for (t, &v) in seq.iter().enumerate() {
        let g0 = msg.null_posterior(t);
        let g = [g0, 1.0 - g0];
        if t == 0 {
            ex.first = g;
        }
        for s in 0..2 {
            ex.weight[s] += g[s];
            ex.sum[s] += g[s] * v;
            ex.sum_sq[s] += g[s] * v * v;
        }
        if t + 1 < seq.len() {
            let (e, _) = scaled(params.ln_emission_w(seq[t + 1]));
            let (al, b) = (msg.alpha[t], msg.beta[t + 1]);
            let mut xi = [[0.0; 2]; 2];
            let mut norm = 0.0;
            for r in 0..2 {
                for s in 0..2 {
                    xi[r][s] = al[r] * a[r][s] * e[s] * b[s];
                    norm += xi[r][s];
                }
            }
            if norm > 0.0 {
                for r in 0..2 {
                    for s in 0..2 {
                        ex.trans[r][s] += xi[r][s] / norm;
                    }
                }
            }
        }
    }
    ex
}

fn m_step(ex: &Expectations, previous: &HmmParams, frozen_null: Option<Gaussian>) -> HmmParams {
    let mut transition = previous.transition;
    for r in 0..2 {
        let row = ex.trans[r][0] + ex.trans[r][1];
        if row > 0.0 {
            transition[r] = [ex.trans[r][0] / row, ex.trans[r][1] / row];
        }
    }
    let gaussian = |s: usize| {
        let mean = ex.sum[s] / ex.weight[s];
        let var = (ex.sum_sq[s] / ex.weight[s] - mean * mean).max(0.0);
        Gaussian { mean, sd: libm::sqrt(var).max(MIN_SD) }
    };
    HmmParams {
        initial: ex.first,
        transition,
        null: frozen_null.unwrap_or_else(|| gaussian(0)),
        alt: gaussian(1),
        null_law: previous.null_law,
    }
}

/// Baum–Welch on `w`. The non-null emission is Gaussian; with `frozen_null`
/// only the initial distribution, transitions and the non-null emission
/// move.
pub fn em_fit(w: &[f64], config: &EmConfig) -> Result<(HmmParams, EmFitReport)> {
    if w.len() < 2 {
        return Err(Error::invalid("sequence", "EM needs at least two observations"));
    }
    crate::types::check_finite(w)?;
    let mut defaults = HmmParams::default_init(w, config.frozen_null);
    let mut params = config.init.unwrap_or(defaults);
    if let Some(null) = config.frozen_null {
        params.null = null;
    }
    if let Some(law) = config.null_law {
        params.null_law = law;
    }
    defaults.null_law = params.null_law;
    params.validate()?;
    if params.null_law != NullLaw::Direct && config.frozen_null.is_none() && config.tol.is_finite() {
        return Err(Error::invalid("null_law", "a derived null law needs a frozen null"));
    }

    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    let mut degenerate = false;
    loop {
        let msg = Messages::compute(w, &params);
        let ll = msg.log_likelihood;
        trace.push(ll);
        if config.tol.is_infinite() {
            converged = true;
            break;
        }
        if let [.., prev, cur] = trace[..] {
            if (cur - prev).abs() <= config.tol * prev.abs() {
                converged = true;
                break;
            }
        }
        if iterations >= config.max_iter {
            break;
        }
        let ex = e_step(w, &params, &msg);
        if ex.weight[0] < MIN_STATE_MASS || ex.weight[1] < MIN_STATE_MASS {
            degenerate = true;
            params = defaults;
            trace.push(log_likelihood(w, &params));
            break;
        }
        params = m_step(&ex, &params, config.frozen_null);
        iterations += 1;
    }
    let report = EmFitReport {
        iterations,
        log_likelihood: *trace.last().expect("at least one evaluation"),
        converged,
        degenerate,
        trace,
    };
    Ok((params, report))
}

/// HMM conformity scores: s_x,i = P(θ_i = 0 | W with x_i at i) and likewise
/// for y_i.
///
/// Substituting position i leaves the forward messages before i and the
/// backward messages after i untouched, so both posteriors are obtained from
/// a single pass over W: P(θ_i = s | W⁽ⁱ⁾) ∝ pred_i(s)·f_s(v)·β̂_i(s), where
/// pred_i is the one-step prediction from α̂_{i−1}.
pub fn plis_scores_hmm(paired: &PairedData, params: &HmmParams) -> ScorePairVector {
    let msg = Messages::compute(paired.w(), params);
    let m = paired.len();
    let mut s_x = Vec::with_capacity(m);
    let mut s_y = Vec::with_capacity(m);
    for i in 0..m {
        let prior = if i == 0 { params.initial } else { params.predict(&msg.alpha[i - 1]) };
        let b = msg.beta[i];
        let post = |v: f64| {
            let (e, _) = scaled(params.ln_emission_value(v));
            let p0 = prior[0] * e[0] * b[0];
            let p1 = prior[1] * e[1] * b[1];
            clamp_unit(p0 / (p0 + p1))
        };
        s_x.push(post(paired.x()[i]));
        s_y.push(post(paired.y()[i]));
    }
    ScorePairVector::new(s_x, s_y).expect("posteriors are never NaN")
}

/// Reference implementation: a full forward–backward pass per substituted
/// sequence, O(m²) overall.
pub fn plis_scores_hmm_naive(paired: &PairedData, params: &HmmParams) -> ScorePairVector {
    let m = paired.len();
    let score = |i: usize, side: Side| {
        let sub = paired.substitute(i, side).expect("index in range");
        let ln_emit = |t: usize| if t == i { params.ln_emission_value(sub.get(t)) } else { params.ln_emission_w(sub.get(t)) };
        Messages::compute_with(m, ln_emit, params).null_posterior(i)
    };
    ScorePairVector::new((0..m).map(|i| score(i, Side::Test)).collect(), (0..m).map(|i| score(i, Side::Calibration)).collect())
        .expect("posteriors are never NaN")
}
