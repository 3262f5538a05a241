use plis_core::hmm::{plis_scores_hmm, NullLaw};
use plis_core::mirror::{decide, select_threshold};
use plis_core::procedures::{e_bh, plis, semi_supervised_plis};
use plis_core::rng;
use plis_core::simgen::{generate, Generator, GeneratorConfig};
use plis_core::verification::{exchangeability_probe, oracle_posterior_at, oracle_threshold};
use plis_core::*;
use proptest::prelude::*;
use rand::Rng;

fn random_params(r: &mut impl Rng, law: NullLaw) -> HmmParams {
    let (a00, a11, p0) = (r.random_range(0.05..0.95), r.random_range(0.05..0.95), r.random_range(0.05..0.95));
    HmmParams {
        initial: [p0, 1.0 - p0],
        transition: [[a00, 1.0 - a00], [1.0 - a11, a11]],
        null: Gaussian { mean: r.random_range(-0.5..0.5), sd: r.random_range(0.6..1.6) },
        alt: Gaussian { mean: r.random_range(1.0..4.0), sd: r.random_range(0.5..2.0) },
        null_law: law,
    }
}

fn random_scores(r: &mut impl Rng, m: usize, levels: Option<u32>) -> ScorePairVector {
    let mut draw = |skew: f64| {
        let u: f64 = r.random::<f64>().powf(skew);
        match levels {
            Some(k) => (u * k as f64).floor() / k as f64,
            None => u,
        }
    };
    let pairs: Vec<(f64, f64)> = (0..m).map(|_| (draw(2.0), draw(1.0))).collect();
    ScorePairVector::from_pairs(&pairs).unwrap()
}

#[test]
fn spliced_scores_agree_with_path_enumeration() {
    let mut r = rng::stream(901, &[]);
    let laws = [NullLaw::Direct, NullLaw::MaxAbsPair, NullLaw::SumPair];
    for trial in 0..120 {
        let p = random_params(&mut r, laws[trial % 3]);
        let m = 2 + trial % 11;
        let x: Vec<f64> = (0..m).map(|_| r.random_range(-3.0..5.0)).collect();
        let y: Vec<f64> = (0..m).map(|_| r.random_range(-3.0..3.0)).collect();
        let combiner = if p.null_law == NullLaw::SumPair { Combiner::Additive } else { Combiner::MaxAbs };
        let paired = PairedData::build(x, y, combiner).unwrap();
        let fast = plis_scores_hmm(&paired, &p);
        for i in 0..m {
            for (side, got) in [(Side::Test, fast.s_x()[i]), (Side::Calibration, fast.s_y()[i])] {
                let seq = paired.substitute(i, side).unwrap().materialize();
                let want = oracle_posterior_at(&seq, &p, Some(i)).unwrap()[i];
                assert!((got - want).abs() <= 1e-10, "trial {trial} i {i}: {got} vs {want}");
            }
        }
    }
}

#[test]
fn sweep_threshold_agrees_with_recount() {
    let mut r = rng::stream(902, &[]);
    for trial in 0..200 {
        let levels = (trial % 2 == 0).then_some(5 + trial as u32 % 20);
        let s = random_scores(&mut r, 5 + trial % 300, levels);
        for alpha in [0.01, 0.05, 0.1, 0.2, 0.5, 1.0] {
            assert_eq!(select_threshold(&s, alpha).to_bits(), oracle_threshold(&s, alpha).to_bits(), "trial {trial}");
        }
    }
}

#[test]
fn swaps_exchange_scores_exactly() {
    for spec in [WorkingModelSpec::hmm(), WorkingModelSpec::two_group()] {
        let report = exchangeability_probe(&spec, 40, 8, 903).unwrap();
        assert!(report.all_swap_exact(), "{spec:?}");
    }
}

#[test]
fn hmm_scores_are_not_jointly_exchangeable() {
    let report = exchangeability_probe(&WorkingModelSpec::hmm(), 40, 8, 904).unwrap();
    assert!(report.joint_failures() > 0);
}

#[test]
fn mirror_rejections_are_e_bh_of_the_e_values() {
    let mut r = rng::stream(905, &[]);
    for trial in 0..100 {
        let s = random_scores(&mut r, 20 + trial, None);
        for alpha in [0.05, 0.2] {
            let d = decide(&s, alpha).unwrap();
            assert_eq!(e_bh(&d.e_values, alpha).unwrap(), d.rejected, "trial {trial}");
        }
    }
}

// Frozen end-to-end outputs: any change to a random stream, the EM fit or
// the mirror sweep shows up here.
#[test]
fn frozen_supervised_run() {
    let cfg = GeneratorConfig::new(800, Generator::Hmm { a00: 0.95, a11: 0.8, mu: 2.6 });
    let data = generate(&cfg, 7).unwrap();
    let f0 = NullDistribution::default();
    let hm = plis(&data.x, &f0, &WorkingModelSpec::hmm(), 0.1, 7).unwrap();
    let tg = plis(&data.x, &f0, &WorkingModelSpec::two_group(), 0.1, 7).unwrap();
    assert_eq!((hm.decisions.count(), hm.tau.to_bits()), (147, 4603600176902766630));
    assert_eq!((tg.decisions.count(), tg.tau.to_bits()), (94, 4595897866405180484));
}

#[test]
fn frozen_semi_supervised_run() {
    let cfg = GeneratorConfig::new(600, Generator::Hmm { a00: 0.95, a11: 0.8, mu: 2.8 }).with_nulls(1200);
    let data = generate(&cfg, 8).unwrap();
    let nulls = data.nulls.as_deref().unwrap();
    let hm = semi_supervised_plis(&data.x, nulls, &WorkingModelSpec::hmm(), 0.1, 8).unwrap();
    assert_eq!((hm.decisions.count(), hm.tau.to_bits()), (158, 4605580070014860382));
}

proptest! {
    #[test]
    fn rejection_sets_grow_with_alpha(seed in any::<u64>(), m in 2usize..200, a in 0.01f64..0.5, b in 0.01f64..0.5) {
        let s = random_scores(&mut rng::stream(seed, &[]), m, (seed % 3 == 0).then_some(7));
        let (lo, hi) = (a.min(b), a.max(b));
        let (d_lo, d_hi) = (decide(&s, lo).unwrap(), decide(&s, hi).unwrap());
        prop_assert!(d_lo.tau <= d_hi.tau);
        for (x, y) in d_lo.rejected.iter().zip(d_hi.rejected.iter()) {
            prop_assert!(!x || *y);
        }
    }

    #[test]
    fn q_values_reproduce_every_level(seed in any::<u64>(), m in 2usize..200, alpha in 0.01f64..1.0) {
        let s = random_scores(&mut rng::stream(seed, &[]), m, (seed % 2 == 0).then_some(11));
        let d = decide(&s, alpha).unwrap();
        for (q, rej) in d.q_values.iter().zip(d.rejected.iter()) {
            prop_assert_eq!(*q <= alpha, *rej);
        }
    }

    #[test]
    fn estimate_at_tau_is_within_level(seed in any::<u64>(), m in 10usize..300) {
        let s = random_scores(&mut rng::stream(seed, &[]), m, None);
        let d = decide(&s, 0.2).unwrap();
        if let Some(q) = d.q_at_tau(&s) {
            prop_assert!(q <= 0.2);
        }
    }
}
