//! Methods addressable by name, so plans and the CLI can pick them from
//! configuration.
//!
//! | name | procedure |
//! |------|-----------|
//! | `plis_hm`, `plis_tg` | PLIS with the HMM / two-group model, max-abs W |
//! | `plis2_hm`, `plis2_tg` | same with the additive W |
//! | `plis_cbh_{hm,tg}`, `plis_sym_{hm,tg}` | alternative thresholds on PLIS scores |
//! | `ss_plis_{hm,tg}` | semi-supervised PLIS (needs a null sample) |
//! | `derand_{hm,tg}[:n=N][:ratio=R]` | derandomized PLIS, N runs at level R·α |
//! | `bh` | BH on two-sided p-values |
//! | `conformal_bh`, `conformal_bh_storey` | conformal BH with pooled-KDE scores |
//! | `lis` | naive LIS: HMM fitted to X, posteriors thresholded directly |

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use super::*;
use crate::kde::ratio_scores;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Plis { model: ModelKind, combiner: Combiner },
    PlisCbh { model: ModelKind },
    PlisSym { model: ModelKind },
    SemiSupervised { model: ModelKind },
    Derandomized { model: ModelKind, runs: usize, ratio: f64 },
    Bh,
    ConformalBh { storey: bool },
    Lis,
}

pub const DEFAULT_DERAND_RUNS: usize = 30;
pub const DEFAULT_DERAND_RATIO: f64 = 0.5;

#[derive(Debug, Clone, Copy)]
pub struct MethodInput<'a> {
    pub x: &'a [f64],
    pub f0: &'a NullDistribution,
    /// Labelled null sample, required by semi-supervised methods.
    pub nulls: Option<&'a [f64]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodOutput {
    pub decisions: DecisionVector,
    /// Full PLIS output for methods built on it.
    pub detail: Option<ProcedureResult>,
}

impl From<DecisionVector> for MethodOutput {
    fn from(decisions: DecisionVector) -> Self {
        MethodOutput { decisions, detail: None }
    }
}

impl Method {
    /// Every method in one replication should receive the same `seed`; they
    /// then share the same calibration draw.
    pub fn run(&self, input: &MethodInput<'_>, alpha: f64, seed: u64) -> Result<MethodOutput> {
        check_alpha(alpha)?;
        check_finite(input.x)?;
        let (x, f0) = (input.x, input.f0);
        let spec = |model: ModelKind| WorkingModelSpec::new(model);
        let scored = |model: ModelKind| -> Result<ScorePairVector> {
            let y = draw_calibration(f0, x.len(), seed, 0);
            let paired = PairedData::build(x.to_vec(), y, Combiner::MaxAbs)?;
            Ok(score_pairs(&paired, &spec(model), NullSource::Known(f0))?.0)
        };
        Ok(match *self {
            Method::Plis { model, combiner } => {
                let r = plis(x, f0, &spec(model).with_combiner(combiner), alpha, seed)?;
                MethodOutput { decisions: r.decisions.clone(), detail: Some(r) }
            }
            Method::PlisCbh { model } => plis_cbh(&scored(model)?, alpha).into(),
            Method::PlisSym { model } => plis_sym(&scored(model)?, alpha).into(),
            Method::SemiSupervised { model } => {
                let nulls = input
                    .nulls
                    .ok_or_else(|| Error::invalid("nulls", "semi-supervised methods need a null sample"))?;
                let r = semi_supervised_plis(x, nulls, &spec(model), alpha, seed)?;
                MethodOutput { decisions: r.decisions.clone(), detail: Some(r) }
            }
            Method::Derandomized { model, runs, ratio } => {
                let alphas = alloc::vec![ratio * alpha; runs];
                let r = derandomized_plis(x, f0, &spec(model), &alphas, alpha, seed)?;
                MethodOutput { decisions: r.decisions.clone(), detail: Some(r) }
            }
            Method::Bh => {
                let p: Vec<f64> = x.iter().map(|&v| f0.two_sided_p(v)).collect();
                bh(&p, alpha)?.into()
            }
            Method::ConformalBh { storey } => {
                let y = draw_calibration(f0, x.len(), seed, 0);
                let pooled: Vec<f64> = x.iter().chain(&y).copied().collect();
                let fhat = kde_fit(&pooled, None)?;
                let s = ratio_scores(x, &y, f0, &fhat).scores;
                let factor = if storey { storey_factor(&conformal_p_values(s.s_x(), s.s_y())) } else { 1.0 };
                conformal_bh(s.s_x(), s.s_y(), alpha, factor)?.into()
            }
            Method::Lis => naive_lis(x, &EmConfig::default(), alpha)?.0.into(),
        })
    }

    pub fn needs_nulls(&self) -> bool {
        matches!(self, Method::SemiSupervised { .. })
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Plis { model, combiner: Combiner::MaxAbs } => write!(f, "plis_{}", model.tag()),
            Method::Plis { model, combiner: Combiner::Additive } => write!(f, "plis2_{}", model.tag()),
            Method::PlisCbh { model } => write!(f, "plis_cbh_{}", model.tag()),
            Method::PlisSym { model } => write!(f, "plis_sym_{}", model.tag()),
            Method::SemiSupervised { model } => write!(f, "ss_plis_{}", model.tag()),
            Method::Derandomized { model, runs, ratio } => write!(f, "derand_{}:n={runs}:ratio={ratio}", model.tag()),
            Method::Bh => f.write_str("bh"),
            Method::ConformalBh { storey: false } => f.write_str("conformal_bh"),
            Method::ConformalBh { storey: true } => f.write_str("conformal_bh_storey"),
            Method::Lis => f.write_str("lis"),
        }
    }
}

fn unknown(s: &str) -> Error {
    Error::Parse(alloc::format!("unknown method `{s}`"))
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.trim().split(':');
        let head = parts.next().unwrap_or_default();
        let options: Vec<&str> = parts.collect();
        let model_of = |tag: &str| match tag {
            "hm" => Ok(ModelKind::Hmm),
            "tg" => Ok(ModelKind::TwoGroup),
            _ => Err(unknown(s)),
        };
        let (stem, tag) = head.rsplit_once('_').unwrap_or((head, ""));
        let method = match (stem, head) {
            (_, "bh") => Method::Bh,
            (_, "conformal_bh") => Method::ConformalBh { storey: false },
            (_, "conformal_bh_storey") => Method::ConformalBh { storey: true },
            (_, "lis") => Method::Lis,
            ("plis", _) => Method::Plis { model: model_of(tag)?, combiner: Combiner::MaxAbs },
            ("plis2", _) => Method::Plis { model: model_of(tag)?, combiner: Combiner::Additive },
            ("plis_cbh", _) => Method::PlisCbh { model: model_of(tag)? },
            ("plis_sym", _) => Method::PlisSym { model: model_of(tag)? },
            ("ss_plis", _) => Method::SemiSupervised { model: model_of(tag)? },
            ("derand", _) => {
                let (mut runs, mut ratio) = (DEFAULT_DERAND_RUNS, DEFAULT_DERAND_RATIO);
                for opt in &options {
                    let bad = || Error::Parse(alloc::format!("bad option `{opt}` in `{s}`"));
                    let (k, v) = opt.split_once('=').ok_or_else(bad)?;
                    match k {
                        "n" => runs = v.parse().map_err(|_| bad())?,
                        "ratio" => ratio = v.parse().map_err(|_| bad())?,
                        _ => return Err(bad()),
                    }
                }
                if runs == 0 || !(ratio > 0.0) {
                    return Err(Error::Parse(alloc::format!("`{s}` needs n ≥ 1 and ratio > 0")));
                }
                return Ok(Method::Derandomized { model: model_of(tag)?, runs, ratio });
            }
            _ => return Err(unknown(s)),
        };
        if !options.is_empty() {
            return Err(Error::Parse(alloc::format!("`{head}` takes no options")));
        }
        Ok(method)
    }
}

/// Names of all parameter-free methods, for help output.
pub fn method_names() -> Vec<String> {
    use alloc::string::ToString;
    let mut v = Vec::new();
    for m in [ModelKind::Hmm, ModelKind::TwoGroup] {
        for method in [
            Method::Plis { model: m, combiner: Combiner::MaxAbs },
            Method::Plis { model: m, combiner: Combiner::Additive },
            Method::PlisCbh { model: m },
            Method::PlisSym { model: m },
            Method::SemiSupervised { model: m },
        ] {
            v.push(method.to_string());
        }
    }
    for method in [Method::Bh, Method::ConformalBh { storey: false }, Method::ConformalBh { storey: true }, Method::Lis] {
        v.push(method.to_string());
    }
    v
}
