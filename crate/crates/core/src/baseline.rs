//! Baseline data W = h(X, Y) and the single-position substitutions that
//! feed score computation.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::types::check_finite;
use crate::{Error, Result};

/// Symmetric combiner h used to build W.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Combiner {
    /// Keep whichever value is larger in magnitude (ties keep x).
    #[default]
    MaxAbs,
    /// x + y.
    Additive,
}

impl Combiner {
    #[inline]
    pub fn combine(self, x: f64, y: f64) -> f64 {
        match self {
            Combiner::MaxAbs => combine_max_abs(x, y),
            Combiner::Additive => combine_additive(x, y),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Combiner::MaxAbs => "max_abs",
            Combiner::Additive => "additive",
        }
    }
}

impl fmt::Display for Combiner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Combiner {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max_abs" | "maxabs" => Ok(Combiner::MaxAbs),
            "additive" | "sum" => Ok(Combiner::Additive),
            other => Err(Error::Parse(alloc::format!("unknown combiner `{other}`"))),
        }
    }
}

#[inline]
pub fn combine_max_abs(x: f64, y: f64) -> f64 {
    if x.abs() >= y.abs() {
        x
    } else {
        y
    }
}

#[inline]
pub fn combine_additive(x: f64, y: f64) -> f64 {
    x + y
}

/// Which of the pair is placed back at the substituted position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Test,
    Calibration,
}

/// Aligned test values X, calibration values Y and baseline W.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedData {
    x: Vec<f64>,
    y: Vec<f64>,
    w: Vec<f64>,
    combiner: Combiner,
}

impl PairedData {
    pub fn build(x: Vec<f64>, y: Vec<f64>, combiner: Combiner) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::LengthMismatch { left: x.len(), right: y.len() });
        }
        check_finite(&x)?;
        check_finite(&y)?;
        let w = x.iter().zip(&y).map(|(&a, &b)| combiner.combine(a, b)).collect();
        Ok(PairedData { x, y, w, combiner })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn combiner(&self) -> Combiner {
        self.combiner
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn value(&self, i: usize, side: Side) -> f64 {
        match side {
            Side::Test => self.x[i],
            Side::Calibration => self.y[i],
        }
    }

    /// W with position `i` replaced by x_i or y_i.
    pub fn substitute(&self, i: usize, side: Side) -> Result<SubstitutedSequence<'_>> {
        if i >= self.len() {
            return Err(Error::IndexOutOfRange { index: i, len: self.len() });
        }
        Ok(SubstitutedSequence { base: &self.w, index: i, value: self.value(i, side) })
    }

    /// Exchanges x_i and y_i; W is unchanged because h is symmetric.
    pub fn swapped(&self, i: usize) -> Self {
        let mut out = self.clone();
        core::mem::swap(&mut out.x[i], &mut out.y[i]);
        out
    }
}

/// A read-only view of W with one overridden position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubstitutedSequence<'a> {
    base: &'a [f64],
    index: usize,
    value: f64,
}

impl<'a> SubstitutedSequence<'a> {
    pub fn position(&self) -> usize {
        self.index
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn len(&self) -> usize {
        self.base.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base.is_empty()
    }

    pub fn get(&self, j: usize) -> f64 {
        if j == self.index {
            self.value
        } else {
            self.base[j]
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |j| self.get(j))
    }

    pub fn materialize(&self) -> Vec<f64> {
        self.iter().collect()
    }
}
