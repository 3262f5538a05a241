//! Ground-truth and decision vectors.

use alloc::vec::Vec;
use core::ops::Deref;

use crate::{Error, Result};

/// Hidden states θ: `true` marks a non-null index.
#[derive(Debug, Clone, PartialEq, Eq, Default, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TruthVector(Vec<bool>);

impl TruthVector {
    pub fn new(states: Vec<bool>) -> Self {
        TruthVector(states)
    }

    /// Builds from 0/1 codes, rejecting anything else.
    pub fn from_codes(codes: &[u8]) -> Result<Self> {
        codes
            .iter()
            .map(|&c| match c {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(Error::invalid("truth code", alloc::format!("{other} is not 0 or 1"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(TruthVector)
    }

    pub fn count_nonnull(&self) -> usize {
        self.0.iter().filter(|&&t| t).count()
    }

    pub fn into_inner(self) -> Vec<bool> {
        self.0
    }
}

impl Deref for TruthVector {
    type Target = [bool];
    fn deref(&self) -> &[bool] {
        &self.0
    }
}

/// Rejection indicators δ: `true` means the null at that index is rejected.
#[derive(Debug, Clone, PartialEq, Eq, Default, Hash)]
pub struct DecisionVector(Vec<bool>);

impl DecisionVector {
    pub fn new(decisions: Vec<bool>) -> Self {
        DecisionVector(decisions)
    }

    pub fn none(m: usize) -> Self {
        DecisionVector(alloc::vec![false; m])
    }

    /// Rejects exactly the listed (0-based) indices.
    pub fn from_indices(m: usize, indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut d = alloc::vec![false; m];
        for i in indices {
            *d.get_mut(i).ok_or(Error::IndexOutOfRange { index: i, len: m })? = true;
        }
        Ok(DecisionVector(d))
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&d| d).count()
    }

    /// 0-based indices of rejected hypotheses, ascending.
    pub fn rejected(&self) -> Vec<usize> {
        self.0.iter().enumerate().filter(|(_, &d)| d).map(|(i, _)| i).collect()
    }

    pub fn into_inner(self) -> Vec<bool> {
        self.0
    }
}

impl Deref for DecisionVector {
    type Target = [bool];
    fn deref(&self) -> &[bool] {
        &self.0
    }
}

/// Rejects NaN and infinities; observations must be finite.
pub fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid("alpha", alloc::format!("{alpha} is not in (0, 1)")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn codes_round_trip() {
        let t = TruthVector::from_codes(&[0, 1, 1]).unwrap();
        assert_eq!(&*t, &[false, true, true]);
        assert_eq!(t.count_nonnull(), 2);
        assert!(TruthVector::from_codes(&[2]).is_err());
    }

    #[test]
    fn decisions_from_indices() {
        let d = DecisionVector::from_indices(4, [0, 3]).unwrap();
        assert_eq!(d.rejected(), vec![0, 3]);
        assert_eq!(d.count(), 2);
        assert_eq!(
            DecisionVector::from_indices(2, [2]),
            Err(Error::IndexOutOfRange { index: 2, len: 2 })
        );
    }

    #[test]
    fn finite_check_reports_position() {
        assert_eq!(check_finite(&[1.0, f64::NAN]), Err(Error::NonFinite { index: 1 }));
        assert_eq!(check_finite(&[f64::NEG_INFINITY]), Err(Error::NonFinite { index: 0 }));
        assert!(check_finite(&[0.0, -3.5]).is_ok());
    }
}
