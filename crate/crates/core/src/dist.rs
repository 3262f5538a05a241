//! Normal-distribution numerics, null distributions and the z-value
//! transform.

// Coefficient tables are quoted at full published precision.
#![allow(clippy::excessive_precision)]

use core::f64::consts::{FRAC_1_SQRT_2, PI};
use core::fmt;
use core::str::FromStr;

use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use crate::{Error, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

pub fn std_normal_pdf(x: f64) -> f64 {
    libm::exp(-0.5 * x * x) / libm::sqrt(2.0 * PI)
}

pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Upper tail 1 − Φ(x), accurate far into the right tail.
pub fn std_normal_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// Φ⁻¹(p) by Wichura's AS241 (PPND16), relative error around 1e-16.
///
/// Returns ∓∞ at p = 0 and p = 1, NaN outside [0, 1].
pub fn std_normal_quantile(p: f64) -> f64 {
    if !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q
            * (((((((2509.0809287301226727 * r + 33430.575583588128105) * r
                + 67265.770927008700853)
                * r
                + 45921.953931549871457)
                * r
                + 13731.693765509461125)
                * r
                + 1971.5909503065514427)
                * r
                + 133.14166789178437745)
                * r
                + 3.387132872796366608)
            / (((((((5226.495278852854561 * r + 28729.085735721942674) * r
                + 39307.89580009271061)
                * r
                + 21213.794301586595867)
                * r
                + 5394.1960214247511077)
                * r
                + 687.1870074920579083)
                * r
                + 42.313330701600911252)
                * r
                + 1.0);
    }
    let tail = if q < 0.0 { p } else { 1.0 - p };
    let mut r = libm::sqrt(-libm::log(tail));
    let z = if r <= 5.0 {
        r -= 1.6;
        (((((((7.7454501427834140764e-4 * r + 0.0227238449892691845833) * r
            + 0.24178072517745061177)
            * r
            + 1.27045825245236838258)
            * r
            + 3.64784832476320460504)
            * r
            + 5.7694972214606914055)
            * r
            + 4.6303378461565452959)
            * r
            + 1.42343711074968357734)
            / (((((((1.05075007164441684324e-9 * r + 5.475938084995344946e-4) * r
                + 0.0151986665636164571966)
                * r
                + 0.14810397642748007459)
                * r
                + 0.68976733498510000455)
                * r
                + 1.6763848301838038494)
                * r
                + 2.05319162663775882187)
                * r
                + 1.0)
    } else {
        r -= 5.0;
        (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r
            + 0.0012426609473880784386)
            * r
            + 0.026532189526576123093)
            * r
            + 0.29656057182850489123)
            * r
            + 1.7848265399172913358)
            * r
            + 5.4637849111641143699)
            * r
            + 6.6579046435011037772)
            / (((((((2.04426310338993978564e-15 * r + 1.4215117583164458887e-7) * r
                + 1.8463183175100546818e-5)
                * r
                + 7.868691311456132591e-4)
                * r
                + 0.0148753612908506148525)
                * r
                + 0.13692988092273580531)
                * r
                + 0.59983220655588793769)
                * r
                + 1.0)
    };
    if q < 0.0 {
        -z
    } else {
        z
    }
}

/// Regularized lower incomplete gamma P(a, x) and its complement Q(a, x).
fn incomplete_gamma(a: f64, x: f64) -> (f64, f64) {
    if x <= 0.0 {
        return (0.0, 1.0);
    }
    let log_prefix = -x + a * libm::log(x) - libm::lgamma(a);
    if x < a + 1.0 {
        let (mut ap, mut del) = (a, 1.0 / a);
        let mut sum = del;
        for _ in 0..1000 {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if del.abs() < sum.abs() * 1e-17 {
                break;
            }
        }
        let p = sum * libm::exp(log_prefix);
        (p, 1.0 - p)
    } else {
        // Modified Lentz continued fraction for Q.
        const TINY: f64 = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..1000 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < TINY {
                d = TINY;
            }
            c = b + an / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < 1e-17 {
                break;
            }
        }
        let q = libm::exp(log_prefix) * h;
        (1.0 - q, q)
    }
}

/// A Gaussian emission / density.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Gaussian {
    pub mean: f64,
    pub sd: f64,
}

impl Gaussian {
    pub const STANDARD: Gaussian = Gaussian { mean: 0.0, sd: 1.0 };

    pub fn new(mean: f64, sd: f64) -> Result<Self> {
        if !mean.is_finite() {
            return Err(Error::invalid("mean", alloc::format!("{mean} is not finite")));
        }
        if !(sd > 0.0 && sd.is_finite()) {
            return Err(Error::invalid("sd", alloc::format!("{sd} must be positive")));
        }
        Ok(Gaussian { mean, sd })
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        let z = (x - self.mean) / self.sd;
        -0.5 * z * z - LN_SQRT_2PI - libm::log(self.sd)
    }

    pub fn pdf(&self, x: f64) -> f64 {
        libm::exp(self.ln_pdf(x))
    }

    pub fn cdf(&self, x: f64) -> f64 {
        std_normal_cdf((x - self.mean) / self.sd)
    }

    pub fn sf(&self, x: f64) -> f64 {
        std_normal_sf((x - self.mean) / self.sd)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        self.mean + self.sd * z
    }
}

/// Anything that can be evaluated as a density.
pub trait Density {
    fn density(&self, x: f64) -> f64;
}

impl Density for Gaussian {
    fn density(&self, x: f64) -> f64 {
        self.pdf(x)
    }
}

/// The known null distribution F₀ of the test statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "family", rename_all = "snake_case"))]
pub enum NullDistribution {
    Normal { mean: f64, sd: f64 },
    ChiSquared { df: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl Default for NullDistribution {
    fn default() -> Self {
        NullDistribution::Normal { mean: 0.0, sd: 1.0 }
    }
}

impl NullDistribution {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NullDistribution::Normal { mean, sd } => Gaussian::new(mean, sd).map(drop),
            NullDistribution::ChiSquared { df } if df > 0.0 && df.is_finite() => Ok(()),
            NullDistribution::ChiSquared { df } => {
                Err(Error::invalid("df", alloc::format!("{df} must be positive")))
            }
            NullDistribution::Uniform { lo, hi } if lo < hi && lo.is_finite() && hi.is_finite() => {
                Ok(())
            }
            NullDistribution::Uniform { lo, hi } => {
                Err(Error::invalid("uniform bounds", alloc::format!("need lo < hi, got [{lo}, {hi}]")))
            }
        }
    }

    /// The Gaussian this null corresponds to, if it is one.
    pub fn as_gaussian(&self) -> Option<Gaussian> {
        match *self {
            NullDistribution::Normal { mean, sd } => Some(Gaussian { mean, sd }),
            _ => None,
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            NullDistribution::Normal { mean, sd } => Gaussian { mean, sd }.pdf(x),
            NullDistribution::ChiSquared { df } => {
                if x < 0.0 {
                    return 0.0;
                }
                let k = 0.5 * df;
                if x == 0.0 {
                    return match k.partial_cmp(&1.0) {
                        Some(core::cmp::Ordering::Less) => f64::INFINITY,
                        Some(core::cmp::Ordering::Equal) => 0.5,
                        _ => 0.0,
                    };
                }
                libm::exp((k - 1.0) * libm::log(x) - 0.5 * x - k * core::f64::consts::LN_2 - libm::lgamma(k))
            }
            NullDistribution::Uniform { lo, hi } => {
                if (lo..=hi).contains(&x) {
                    1.0 / (hi - lo)
                } else {
                    0.0
                }
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            NullDistribution::Normal { mean, sd } => Gaussian { mean, sd }.cdf(x),
            NullDistribution::ChiSquared { df } => incomplete_gamma(0.5 * df, 0.5 * x).0,
            NullDistribution::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
        }
    }

    /// Survival function 1 − F₀(x), computed without cancellation.
    pub fn sf(&self, x: f64) -> f64 {
        match *self {
            NullDistribution::Normal { mean, sd } => Gaussian { mean, sd }.sf(x),
            NullDistribution::ChiSquared { df } => incomplete_gamma(0.5 * df, 0.5 * x).1,
            NullDistribution::Uniform { lo, hi } => ((hi - x) / (hi - lo)).clamp(0.0, 1.0),
        }
    }

    /// Two-sided p-value 2·min(F₀(x), 1 − F₀(x)).
    pub fn two_sided_p(&self, x: f64) -> f64 {
        (2.0 * self.cdf(x).min(self.sf(x))).min(1.0)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            NullDistribution::Normal { mean, sd } => Gaussian { mean, sd }.sample(rng),
            NullDistribution::ChiSquared { df } => {
                ChiSquared::new(df).expect("validated degrees of freedom").sample(rng)
            }
            NullDistribution::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
        }
    }
}

impl Density for NullDistribution {
    fn density(&self, x: f64) -> f64 {
        self.pdf(x)
    }
}

impl fmt::Display for NullDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NullDistribution::Normal { mean, sd } => write!(f, "normal({mean},{sd})"),
            NullDistribution::ChiSquared { df } => write!(f, "chisq({df})"),
            NullDistribution::Uniform { lo, hi } => write!(f, "uniform({lo},{hi})"),
        }
    }
}

/// Parses `normal(mean,sd)`, `chisq(df)` or `uniform(lo,hi)`; a bare
/// `normal` means the standard normal.
impl FromStr for NullDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Parse(alloc::format!("unrecognised null distribution `{s}`"));
        let (name, args) = match s.find('(') {
            Some(open) => {
                let inner = s[open + 1..].strip_suffix(')').ok_or_else(bad)?;
                let args = inner
                    .split(',')
                    .map(|a| a.trim().parse::<f64>().map_err(|_| bad()))
                    .collect::<Result<alloc::vec::Vec<f64>>>()?;
                (&s[..open], args)
            }
            None => (s, alloc::vec::Vec::new()),
        };
        let dist = match (name.trim(), args.as_slice()) {
            ("normal", []) => NullDistribution::default(),
            ("normal", &[mean, sd]) => NullDistribution::Normal { mean, sd },
            ("chisq", &[df]) => NullDistribution::ChiSquared { df },
            ("uniform", []) => NullDistribution::Uniform { lo: 0.0, hi: 1.0 },
            ("uniform", &[lo, hi]) => NullDistribution::Uniform { lo, hi },
            _ => return Err(bad()),
        };
        dist.validate()?;
        Ok(dist)
    }
}

/// Tail probabilities below this are clamped before inversion.
pub const Z_CLAMP: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZValue {
    pub z: f64,
    /// Set when F₀(x) was numerically 0 or 1 and had to be clamped.
    pub clamped: bool,
}

/// z = Φ⁻¹(F₀(x)). The tail nearer to x is inverted so that precision is
/// kept on both sides.
pub fn z_transform(x: f64, f0: &NullDistribution) -> ZValue {
    let lower = f0.cdf(x);
    if lower <= 0.5 {
        let clamped = lower < Z_CLAMP;
        ZValue { z: std_normal_quantile(lower.max(Z_CLAMP)), clamped }
    } else {
        let upper = f0.sf(x);
        let clamped = upper < Z_CLAMP;
        ZValue { z: -std_normal_quantile(upper.max(Z_CLAMP)), clamped }
    }
}
