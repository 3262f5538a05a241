//! Conformal false-discovery-rate control for structured multiple testing.
//!
//! The PLIS family of procedures pairs every test statistic with a freshly
//! drawn calibration value, fits a working model on the symmetrised
//! "baseline" sequence, and thresholds the resulting score pairs with a
//! mirror estimate of the false discovery proportion. FDR control holds in
//! finite samples whatever the quality of the working model; the model only
//! affects power.
//!
//! This crate is `no_std` (it needs `alloc`). File formats, the simulation
//! harness and the command-line driver live in the `plis` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod baseline;
pub mod dist;
pub mod error;
pub mod hmm;
pub mod kde;
pub mod metrics;
pub mod mirror;
pub mod procedures;
pub mod rng;
pub mod simgen;
pub mod types;
pub mod verification;

pub use baseline::{Combiner, PairedData, Side, SubstitutedSequence};
pub use dist::{Gaussian, NullDistribution};
pub use error::{Error, Result};
pub use hmm::{EmConfig, EmFitReport, HmmParams};
pub use kde::KdeEstimate;
pub use metrics::{compute_fdp_tdp, MetricsPair};
pub use mirror::{MirrorDecision, ScorePairVector};
pub use procedures::{Method, ModelKind, ProcedureResult, WorkingModelSpec};
pub use types::{DecisionVector, TruthVector};
