//! Seeded generators for structured multiple-testing simulations.
//!
//! Every generator first draws the hidden states θ (and a per-index
//! non-null mean), then adds noise. With the default i.i.d. noise,
//! X_i = mean_i·θ_i + N(0, 1). Correlated noise splits the unit variance
//! into an independent half and a dependent half, and can also emit a pool
//! of null samples that share the dependent process.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::rng::{self, purpose, StreamRng};
use crate::types::TruthVector;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields))]
pub enum Generator {
    /// Homogeneous two-state Markov chain started in the null state.
    Hmm { a00: f64, a11: f64, mu: f64 },
    /// a₀₀ = 0.95 and a₁₁⁽ᵏ⁾ = 0.9·exp(−k/1000).
    HeteroHmmExp { mu: f64 },
    /// a₀₀ = 0.95 and a₁₁⁽ᵏ⁾ = 0.4·(1 + sin(k/100)).
    HeteroHmmPeriodic { mu: f64 },
    /// States from the sign of an ARMA(2,1) path: θ_t = 1{Z_t < 0}.
    TwoLayerArma { c: f64, mu: f64 },
    /// Alternating null / non-null blocks with lengths Unif{2..20} and
    /// 1 + Poisson(λ); starts with a null block.
    Renewal { lambda: f64, mu: f64 },
    /// Independent states with position-dependent probabilities.
    CovariateAdaptive {
        scenario: CovariateScenario,
        #[cfg_attr(feature = "serde", serde(default))]
        mu: Option<f64>,
        #[cfg_attr(feature = "serde", serde(default))]
        pi_base: Option<f64>,
    },
    IidTwoGroup { pi: f64, mu: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum CovariateScenario {
    /// Non-null mean μ + 0.2·sin(0.6s); π_s = 0.4(1 + sin(0.2s)) inside the
    /// windows, 0.02 outside. Needs `mu`.
    I,
    /// Non-null mean 2.8; π_s = 2π or π inside the windows, 0.02 outside.
    /// Needs `pi_base`.
    Ii,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "structure", rename_all = "snake_case", deny_unknown_fields))]
pub enum Noise {
    #[default]
    Iid,
    /// ε₂ shares one Gaussian factor: corr(ε₂ᵢ, ε₂ⱼ) = ρ.
    Equicorrelated { rho: f64 },
    /// ε₂ is a stationary AR(1) process: corr(ε₂ᵢ, ε₂ⱼ) = ρ^|i−j|.
    Ar1 { rho: f64 },
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GeneratorConfig {
    pub m: usize,
    #[cfg_attr(feature = "serde", serde(flatten))]
    pub generator: Generator,
    #[cfg_attr(feature = "serde", serde(default))]
    pub noise: Noise,
    /// Size of the null pool. Correlated noise defaults to 2m; i.i.d. noise
    /// produces no pool unless asked.
    #[cfg_attr(feature = "serde", serde(default))]
    pub n_nulls: Option<usize>,
}

impl GeneratorConfig {
    pub fn new(m: usize, generator: Generator) -> Self {
        GeneratorConfig { m, generator, noise: Noise::Iid, n_nulls: None }
    }

    pub fn with_noise(mut self, noise: Noise) -> Self {
        self.noise = noise;
        self
    }

    pub fn with_nulls(mut self, n: usize) -> Self {
        self.n_nulls = Some(n);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::invalid("m", "must be at least 1"));
        }
        let prob = |name: &'static str, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(Error::invalid(name, alloc::format!("{p} is not a probability")))
            }
        };
        let finite = |name: &'static str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(name, "must be finite"))
            }
        };
        match self.generator {
            Generator::Hmm { a00, a11, mu } => {
                prob("a00", a00)?;
                prob("a11", a11)?;
                finite("mu", mu)?;
            }
            Generator::HeteroHmmExp { mu } | Generator::HeteroHmmPeriodic { mu } => finite("mu", mu)?,
            Generator::TwoLayerArma { c, mu } => {
                if !(c >= 0.0 && c.is_finite()) {
                    return Err(Error::invalid("c", "must be a finite non-negative number"));
                }
                finite("mu", mu)?;
            }
            Generator::Renewal { lambda, mu } => {
                if !(lambda >= 0.0 && lambda.is_finite()) {
                    return Err(Error::invalid("lambda", "must be a finite non-negative number"));
                }
                finite("mu", mu)?;
            }
            Generator::CovariateAdaptive { scenario, mu, pi_base } => match scenario {
                CovariateScenario::I => finite("mu", mu.ok_or_else(|| Error::invalid("mu", "scenario i needs mu"))?)?,
                CovariateScenario::Ii => {
                    let p = pi_base.ok_or_else(|| Error::invalid("pi_base", "scenario ii needs pi_base"))?;
                    prob("pi_base", 2.0 * p)?;
                }
            },
            Generator::IidTwoGroup { pi, mu } => {
                prob("pi", pi)?;
                finite("mu", mu)?;
            }
        }
        match self.noise {
            Noise::Iid => Ok(()),
            Noise::Equicorrelated { rho } if (0.0..1.0).contains(&rho) => Ok(()),
            Noise::Equicorrelated { rho } => {
                Err(Error::invalid("rho", alloc::format!("equicorrelated noise needs 0 ≤ ρ < 1, got {rho}")))
            }
            Noise::Ar1 { rho } if rho > -1.0 && rho < 1.0 => Ok(()),
            Noise::Ar1 { rho } => Err(Error::invalid("rho", alloc::format!("AR(1) noise needs |ρ| < 1, got {rho}"))),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.generator {
            Generator::Hmm { .. } => "hmm",
            Generator::HeteroHmmExp { .. } => "hetero_hmm_exp",
            Generator::HeteroHmmPeriodic { .. } => "hetero_hmm_periodic",
            Generator::TwoLayerArma { .. } => "two_layer_arma",
            Generator::Renewal { .. } => "renewal",
            Generator::CovariateAdaptive { .. } => "covariate_adaptive",
            Generator::IidTwoGroup { .. } => "iid_two_group",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub x: Vec<f64>,
    pub truth: TruthVector,
    pub nulls: Option<Vec<f64>>,
}

/// Generates one dataset; identical `(config, seed)` gives identical output.
pub fn generate(config: &GeneratorConfig, seed: u64) -> Result<LabeledDataset> {
    config.validate()?;
    let mut r = rng::stream(seed, &[purpose::DATA]);
    let (truth, means) = states(config, &mut r);
    let n_nulls = match (config.noise, config.n_nulls) {
        (_, Some(n)) => n,
        (Noise::Iid, None) => 0,
        (_, None) => 2 * config.m,
    };
    let mut noise_rng = rng::stream(seed, &[purpose::NOISE]);
    let (x, nulls) = noisy_observations(&truth, &means, config.noise, n_nulls, &mut noise_rng);
    Ok(LabeledDataset { x, truth: TruthVector::new(truth), nulls: (n_nulls > 0).then_some(nulls) })
}

/// X_i = θ_i·μ + noise for a given truth, with a null pool of `n_nulls`
/// samples that continue the same noise process.
pub fn apply_noise(truth: &TruthVector, mu: f64, noise: Noise, n_nulls: usize, seed: u64) -> Result<LabeledDataset> {
    GeneratorConfig { m: truth.len().max(1), generator: Generator::IidTwoGroup { pi: 0.0, mu }, noise, n_nulls: None }
        .validate()?;
    let means = alloc::vec![mu; truth.len()];
    let mut r = rng::stream(seed, &[purpose::NOISE]);
    let (x, nulls) = noisy_observations(truth, &means, noise, n_nulls, &mut r);
    Ok(LabeledDataset { x, truth: truth.clone(), nulls: Some(nulls) })
}

fn normal(r: &mut StreamRng) -> f64 {
    StandardNormal.sample(r)
}

fn noisy_observations(truth: &[bool], means: &[f64], noise: Noise, n_nulls: usize, r: &mut StreamRng) -> (Vec<f64>, Vec<f64>) {
    let m = truth.len();
    let total = m + n_nulls;
    let eps: Vec<f64> = match noise {
        Noise::Iid => (0..total).map(|_| normal(r)).collect(),
        Noise::Equicorrelated { rho } => {
            let half = libm::sqrt(0.5);
            let g = normal(r);
            (0..total)
                .map(|_| {
                    let e1 = half * normal(r);
                    let e2 = half * (libm::sqrt(rho) * g + libm::sqrt(1.0 - rho) * normal(r));
                    e1 + e2
                })
                .collect()
        }
        Noise::Ar1 { rho } => {
            let half = libm::sqrt(0.5);
            let innov = libm::sqrt(1.0 - rho * rho);
            let mut e2 = half * normal(r);
            (0..total)
                .map(|t| {
                    if t > 0 {
                        e2 = rho * e2 + innov * half * normal(r);
                    }
                    half * normal(r) + e2
                })
                .collect()
        }
    };
    let x = (0..m).map(|i| if truth[i] { means[i] } else { 0.0 } + eps[i]).collect();
    (x, eps[m..].to_vec())
}

fn bernoulli(r: &mut StreamRng, p: f64) -> bool {
    r.random::<f64>() < p
}

/// a₁₁ for the transition into position k (1-based).
pub fn a11_exp_decay(k: usize) -> f64 {
    0.9 * libm::exp(-(k as f64) / 1000.0)
}

pub fn a11_periodic(k: usize) -> f64 {
    0.4 * (1.0 + libm::sin(k as f64 / 100.0))
}

const COVARIATE_I_WINDOWS: [(usize, usize); 4] = [(201, 500), (801, 1100), (1501, 1800), (2101, 2400)];
const COVARIATE_II_DOUBLE: [(usize, usize); 2] = [(201, 350), (1501, 1650)];
const COVARIATE_II_SINGLE: [(usize, usize); 2] = [(801, 1000), (2101, 2300)];
const COVARIATE_BACKGROUND: f64 = 0.02;

fn in_windows(s: usize, windows: &[(usize, usize)]) -> bool {
    windows.iter().any(|&(a, b)| (a..=b).contains(&s))
}

/// Non-null probability at covariate value s (1-based position).
pub fn covariate_pi(scenario: CovariateScenario, s: usize, pi_base: f64) -> f64 {
    match scenario {
        CovariateScenario::I if in_windows(s, &COVARIATE_I_WINDOWS) => 0.4 * (1.0 + libm::sin(0.2 * s as f64)),
        CovariateScenario::Ii if in_windows(s, &COVARIATE_II_DOUBLE) => 2.0 * pi_base,
        CovariateScenario::Ii if in_windows(s, &COVARIATE_II_SINGLE) => pi_base,
        _ => COVARIATE_BACKGROUND,
    }
}

/// Hidden states from the ARMA recursion driven by the given innovations
/// (Z₀ = Z₋₁ = ε₀ = 0).
pub fn two_layer_states(c: f64, innovations: &[f64]) -> Vec<bool> {
    let (mut z1, mut z2, mut e1) = (0.0, 0.0, 0.0);
    innovations
        .iter()
        .map(|&e| {
            let z = c + z1 - 0.5 * z2 + e + 0.1 * e1;
            z2 = z1;
            z1 = z;
            e1 = e;
            z < 0.0
        })
        .collect()
}

fn markov_states(m: usize, a00: f64, a11: impl Fn(usize) -> f64, r: &mut StreamRng) -> Vec<bool> {
    let mut th = Vec::with_capacity(m);
    let mut state = false;
    for k in 1..=m {
        if k > 1 {
            state = if state { bernoulli(r, a11(k)) } else { !bernoulli(r, a00) };
        }
        th.push(state);
    }
    th
}

fn states(config: &GeneratorConfig, r: &mut StreamRng) -> (Vec<bool>, Vec<f64>) {
    let m = config.m;
    let constant = |th: Vec<bool>, mu: f64| (th, alloc::vec![mu; m]);
    match config.generator {
        Generator::Hmm { a00, a11, mu } => constant(markov_states(m, a00, |_| a11, r), mu),
        Generator::HeteroHmmExp { mu } => constant(markov_states(m, 0.95, a11_exp_decay, r), mu),
        Generator::HeteroHmmPeriodic { mu } => constant(markov_states(m, 0.95, a11_periodic, r), mu),
        Generator::TwoLayerArma { c, mu } => {
            let eps: Vec<f64> = (0..m).map(|_| 0.5 * normal(r)).collect();
            constant(two_layer_states(c, &eps), mu)
        }
        Generator::Renewal { lambda, mu } => {
            let poisson = (lambda > 0.0).then(|| Poisson::new(lambda).expect("validated rate"));
            let mut th = Vec::with_capacity(m);
            let mut nonnull = false;
            while th.len() < m {
                let len = if nonnull {
                    1 + poisson.as_ref().map_or(0, |p| p.sample(r) as usize)
                } else {
                    r.random_range(2..=20usize)
                };
                th.extend(core::iter::repeat(nonnull).take(len.min(m - th.len())));
                nonnull = !nonnull;
            }
            constant(th, mu)
        }
        Generator::CovariateAdaptive { scenario, mu, pi_base } => {
            let base = pi_base.unwrap_or(0.0);
            let th = (1..=m).map(|s| bernoulli(r, covariate_pi(scenario, s, base))).collect();
            let means = (1..=m)
                .map(|s| match scenario {
                    CovariateScenario::I => mu.unwrap_or(0.0) + 0.2 * libm::sin(0.6 * s as f64),
                    CovariateScenario::Ii => 2.8,
                })
                .collect();
            (th, means)
        }
        Generator::IidTwoGroup { pi, mu } => constant((0..m).map(|_| bernoulli(r, pi)).collect(), mu),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::std_normal_cdf;

    /// Asymptotic Kolmogorov–Smirnov p-value against N(0, 1).
    fn ks_p_value(sample: &[f64]) -> f64 {
        let mut v = sample.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len() as f64;
        let d = v
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = std_normal_cdf(x);
                (f - i as f64 / n).max((i + 1) as f64 / n - f)
            })
            .fold(0.0, f64::max);
        let sq = libm::sqrt(n);
        let lambda = (sq + 0.12 + 0.11 / sq) * d;
        let mut p = 0.0;
        for k in 1..200 {
            let kf = k as f64;
            let term = 2.0 * libm::exp(-2.0 * kf * kf * lambda * lambda);
            p += if k % 2 == 1 { term } else { -term };
        }
        p.clamp(0.0, 1.0)
    }

    fn all_generators(mu: f64) -> Vec<Generator> {
        alloc::vec![
            Generator::Hmm { a00: 0.95, a11: 0.8, mu },
            Generator::HeteroHmmExp { mu },
            Generator::HeteroHmmPeriodic { mu },
            Generator::TwoLayerArma { c: 0.3, mu },
            Generator::Renewal { lambda: 3.0, mu },
            Generator::CovariateAdaptive { scenario: CovariateScenario::I, mu: Some(mu), pi_base: None },
            Generator::CovariateAdaptive { scenario: CovariateScenario::Ii, mu: None, pi_base: Some(0.2) },
            Generator::IidTwoGroup { pi: 0.2, mu },
        ]
    }

    #[test]
    fn seeds_are_reproducible_and_distinct() {
        for g in all_generators(2.5) {
            let cfg = GeneratorConfig::new(500, g);
            let a = generate(&cfg, 1).unwrap();
            assert_eq!(a, generate(&cfg, 1).unwrap(), "{g:?}");
            assert_ne!(a.x, generate(&cfg, 2).unwrap().x, "{g:?}");
        }
    }

    #[test]
    fn zero_effect_hmm_is_standard_normal() {
        let d = generate(&GeneratorConfig::new(5000, Generator::Hmm { a00: 0.95, a11: 0.8, mu: 0.0 }), 3).unwrap();
        assert!(ks_p_value(&d.x) > 0.01);
    }

    #[test]
    fn hmm_starts_null_and_hits_stationary_fraction() {
        let d = generate(&GeneratorConfig::new(100_000, Generator::Hmm { a00: 0.95, a11: 0.8, mu: 2.0 }), 4).unwrap();
        assert!(!d.truth[0]);
        let frac = d.truth.count_nonnull() as f64 / 1e5;
        assert!((frac - 0.2).abs() < 0.01, "{frac}");
    }

    #[test]
    fn null_observations_follow_f0() {
        for g in all_generators(2.5) {
            let d = generate(&GeneratorConfig::new(100_000, g), 5).unwrap();
            let nulls: Vec<f64> = d.x.iter().zip(d.truth.iter()).filter(|(_, &t)| !t).map(|(&x, _)| x).collect();
            let p = ks_p_value(&nulls);
            assert!(p > 0.001, "{g:?}: {p}");
        }
    }

    #[test]
    fn schedules() {
        assert!((a11_exp_decay(1000) - 0.9 / core::f64::consts::E).abs() < 1e-15);
        assert!((a11_exp_decay(1000) - 0.3311).abs() < 1e-4);
        // sin(k/100) = −1 near k = 150π
        let k = (150.0 * core::f64::consts::PI) as usize;
        assert!(a11_periodic(k) < 1e-3);
        assert!((a11_periodic(0) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn arma_recursion() {
        assert!(two_layer_states(0.0, &[0.0; 50]).iter().all(|&t| !t));
        // Z = −1, −1.1, −0.6, 1.95
        assert_eq!(two_layer_states(0.0, &[-1.0, 0.0, 0.0, 2.0]), alloc::vec![true, true, true, false]);
        let frac = |c: f64| {
            let d = generate(&GeneratorConfig::new(2000, Generator::TwoLayerArma { c, mu: 2.0 }), 6).unwrap();
            d.truth.count_nonnull()
        };
        let (a, b, c) = (frac(0.1), frac(0.3), frac(0.5));
        assert!(a > b && b > c, "{a} {b} {c}");
    }

    #[test]
    fn renewal_blocks() {
        let d = generate(&GeneratorConfig::new(5000, Generator::Renewal { lambda: 0.0, mu: 2.0 }), 7).unwrap();
        assert!(!d.truth[0] && !d.truth[1]);
        for w in d.truth.windows(3) {
            assert!(!(w[0] && w[1]), "non-null blocks have length 1 at λ = 0");
        }
        for lambda in [1.0, 4.0] {
            let d = generate(&GeneratorConfig::new(100_000, Generator::Renewal { lambda, mu: 2.0 }), 8).unwrap();
            let frac = d.truth.count_nonnull() as f64 / 1e5;
            let want = (1.0 + lambda) / (12.0 + lambda);
            assert!((frac - want).abs() < 0.01, "λ={lambda}: {frac} vs {want}");
        }
    }

    #[test]
    fn covariate_probabilities() {
        assert_eq!(covariate_pi(CovariateScenario::I, 100, 0.0), 0.02);
        assert_eq!(covariate_pi(CovariateScenario::I, 2401, 0.0), 0.02);
        let s = 201;
        assert!((covariate_pi(CovariateScenario::I, s, 0.0) - 0.4 * (1.0 + libm::sin(0.2 * 201.0))).abs() < 1e-15);
        // sin(0.2s) ≈ −1 at s = 243 inside [201, 500]
        assert!(covariate_pi(CovariateScenario::I, 243, 0.0) < 5e-3);
        assert_eq!(covariate_pi(CovariateScenario::Ii, 300, 0.1), 0.2);
        assert_eq!(covariate_pi(CovariateScenario::Ii, 900, 0.1), 0.1);
        assert_eq!(covariate_pi(CovariateScenario::Ii, 1200, 0.1), 0.02);
        let missing = GeneratorConfig::new(10, Generator::CovariateAdaptive { scenario: CovariateScenario::Ii, mu: None, pi_base: None });
        assert!(generate(&missing, 1).is_err());
    }

    fn corr(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
        let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma) * (x - ma)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb) * (y - mb)).sum();
        cov / libm::sqrt(va * vb)
    }

    #[test]
    fn equicorrelated_noise() {
        // Across independent replicates, two positions of ε₂ should correlate at ρ.
        let half = libm::sqrt(0.5);
        let rho = 0.4;
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for rep in 0..10_000u64 {
            let mut r = rng::stream(9, &[rep]);
            let g = normal(&mut r);
            let mut e2 = || half * (libm::sqrt(rho) * g + libm::sqrt(1.0 - rho) * normal(&mut r));
            a.push(e2());
            b.push(e2());
        }
        let c = corr(&a, &b);
        assert!((c - 0.4).abs() < 0.02, "{c}");
        // and the generated observations have unit marginal variance
        let mut xs = Vec::new();
        for rep in 0..200 {
            let d = apply_noise(&TruthVector::new(alloc::vec![false; 500]), 0.0, Noise::Equicorrelated { rho }, 0, rep).unwrap();
            xs.extend(d.x);
        }
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / xs.len() as f64;
        assert!((var - 1.0).abs() < 0.05, "{var}");
    }

    #[test]
    fn ar1_noise() {
        let d = apply_noise(&TruthVector::new(alloc::vec![false; 100_000]), 0.0, Noise::Ar1 { rho: 0.5 }, 0, 10).unwrap();
        let lag1 = corr(&d.x[..99_999], &d.x[1..]);
        // ε₂ carries half the variance, so corr(X_t, X_{t+1}) = ρ/2
        assert!((2.0 * lag1 - 0.5).abs() < 0.02, "{lag1}");
        let var = d.x.iter().map(|x| x * x).sum::<f64>() / 1e5;
        assert!((var - 1.0).abs() < 0.02, "{var}");
    }

    #[test]
    fn zero_rho_is_iid() {
        for noise in [Noise::Equicorrelated { rho: 0.0 }, Noise::Ar1 { rho: 0.0 }] {
            let d = apply_noise(&TruthVector::new(alloc::vec![false; 20_000]), 0.0, noise, 0, 11).unwrap();
            assert!(ks_p_value(&d.x) > 0.001);
            assert!(corr(&d.x[..19_999], &d.x[1..]).abs() < 0.03);
        }
    }

    #[test]
    fn null_pool_defaults() {
        let cfg = GeneratorConfig::new(100, Generator::Hmm { a00: 0.95, a11: 0.8, mu: 2.0 });
        assert!(generate(&cfg, 1).unwrap().nulls.is_none());
        let eq = cfg.clone().with_noise(Noise::Equicorrelated { rho: 0.4 });
        assert_eq!(generate(&eq, 1).unwrap().nulls.unwrap().len(), 200);
        assert_eq!(generate(&cfg.with_nulls(50), 1).unwrap().nulls.unwrap().len(), 50);
    }

    #[test]
    fn invalid_configs() {
        let hmm = |a11| GeneratorConfig::new(10, Generator::Hmm { a00: 0.9, a11, mu: 1.0 });
        assert!(generate(&hmm(1.2), 0).is_err());
        assert!(generate(&hmm(0.5).with_noise(Noise::Equicorrelated { rho: -0.1 }), 0).is_err());
        assert!(generate(&hmm(0.5).with_noise(Noise::Ar1 { rho: 1.0 }), 0).is_err());
        assert!(generate(&GeneratorConfig::new(0, Generator::IidTwoGroup { pi: 0.1, mu: 1.0 }), 0).is_err());
        assert!(apply_noise(&TruthVector::new(alloc::vec![false]), 1.0, Noise::Equicorrelated { rho: -0.5 }, 2, 0).is_err());
    }
}
