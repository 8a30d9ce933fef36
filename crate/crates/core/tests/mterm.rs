use std::f64::consts::PI;

use mterm_core::classes::{block_norm_profile, BlockNormProfile};
use mterm_core::mterm::{
    approximation_error, budget_plan, build_approximant, greedy_select, level_for, regime_of,
    theorem_exponent, truncation_level,
};
use mterm_core::spectral::{block_indices, cumulative_cardinality, FreqSet};
use mterm_core::testfns::lacunary_random;
use mterm_core::{
    BesovParams, BlockSelection, BlockShape, Error, LorentzExponents, Regime, SchemeKind, SchemeSpec,
    SeededSampler, Spectrum, Tau,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn leb(p: &[f64]) -> LorentzExponents {
    LorentzExponents::lebesgue(p.to_vec()).unwrap()
}

fn params(p: &[f64], r: f64, tau: Tau) -> BesovParams {
    BesovParams::new(leb(p), r, tau).unwrap()
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// `√((2π)^m Σ_{k∉Ω} |a_k|²)`: L₂ error of keeping `Ω` with original coefficients.
fn parseval_error(s: &Spectrum, omega: &[Vec<i64>]) -> f64 {
    let dropped: f64 = s.iter().filter(|(k, _)| !omega.iter().any(|o| o == k)).map(|(_, a)| a.norm_sqr()).sum();
    ((2.0 * PI).powi(s.dims() as i32) * dropped).sqrt()
}

#[test]
fn regime_examples() {
    assert_eq!(regime_of(&[1.5], &[4.0], 0.5).unwrap(), Regime::Subcritical);
    assert_eq!(regime_of(&[1.5], &[4.0], 2.0 / 3.0).unwrap(), Regime::Critical);
    assert_eq!(regime_of(&[1.5], &[4.0], 1.0).unwrap(), Regime::Supercritical);
    assert_eq!(regime_of(&[1.25], &[2.0], 1.0).unwrap(), Regime::LowTarget);
    assert_eq!(regime_of(&[2.5], &[4.0], 1.5).unwrap(), Regime::HighSource);
    assert!(matches!(regime_of(&[1.5], &[4.0], 0.4), Err(Error::Unsupported(_))));
    assert!(matches!(regime_of(&[3.0], &[1.5], 2.0), Err(Error::Unsupported(_))));
    assert!(matches!(regime_of(&[2.5], &[4.0], 0.4), Err(Error::Unsupported(_))));
}

#[test]
fn exponent_examples() {
    let e = theorem_exponent(&[1.5], &[4.0], 0.5, Tau::Infinite).unwrap();
    assert!((e.power + 1.0 / 6.0).abs() < 1e-12 && e.log_power == 0.0);
    let e = theorem_exponent(&[1.5], &[4.0], 2.0 / 3.0, Tau::Finite(2.0)).unwrap();
    assert_eq!((e.power, e.log_power), (-0.5, 0.5));
    let e = theorem_exponent(&[1.5], &[4.0], 1.0, Tau::Infinite).unwrap();
    assert!((e.power + 5.0 / 6.0).abs() < 1e-12);
    let e = theorem_exponent(&[1.25], &[2.0], 1.0, Tau::Infinite).unwrap();
    assert!((e.power + 0.7).abs() < 1e-12);
    let e = theorem_exponent(&[2.0], &[4.0], 1.5, Tau::Infinite).unwrap();
    assert!((e.power + 1.5).abs() < 1e-12);
}

#[test]
fn scalar_exponents_reduce_to_the_isotropic_law() {
    // -r/m + (1/p - max(1/q, 1/2))_+ for equal exponents on every axis.
    for m in 1..=3usize {
        for (p, q, r) in [(1.25, 2.0, 2.0), (1.5, 1.8, 1.2), (1.5, 4.0, 2.5), (2.0, 6.0, 2.0), (3.0, 5.0, 2.5)] {
            let pv = vec![p; m];
            let qv = vec![q; m];
            let r = r * m as f64;
            let got = theorem_exponent(&pv, &qv, r, Tau::Infinite).unwrap().power;
            let want = -r / m as f64 + (1.0 / p - f64::max(1.0 / q, 0.5)).max(0.0);
            assert!((got - want).abs() < 1e-12, "m={m} p={p} q={q}: {got} vs {want}");
        }
    }
}

#[test]
fn regime1_budget_example() {
    let plan = budget_plan(9, &params(&[1.5], 0.5, Tau::Infinite), &leb(&[4.0]), &BlockNormProfile(vec![])).unwrap();
    assert_eq!(plan.n, 3);
    assert_eq!(plan.alpha, 2.0);
    let want: Vec<(u32, u64)> = (3..6).map(|s| (s, (4.0 * (s as f64 / 6.0).exp2()).floor() as u64 + 1)).collect();
    let got: Vec<(u32, u64)> = plan.budgets.iter().map(|b| (b.block, b.budget)).collect();
    assert_eq!(got, want);
    assert_eq!(want.iter().map(|w| w.1).collect::<Vec<_>>(), vec![6, 7, 8]);
    assert_eq!(plan.regime, Regime::Subcritical);
}

#[test]
fn regime3_budget_example() {
    let plan = budget_plan(16, &params(&[1.5], 1.0, Tau::Infinite), &leb(&[4.0]), &BlockNormProfile(vec![])).unwrap();
    assert_eq!(plan.n, 3);
    let got: Vec<(u32, u64)> = plan.budgets.iter().map(|b| (b.block, b.budget)).collect();
    let want: Vec<(u32, u64)> = (3..5).map(|s| (s, (16.0 * (-(s as f64) / 3.0).exp2()).floor() as u64 + 1)).collect();
    assert_eq!(got, want);
}

#[test]
fn regime2_budget_reads_profile() {
    let p = params(&[1.5], 2.0 / 3.0, Tau::Finite(2.0));
    let profile = BlockNormProfile((0..10).map(|s| 0.3 * (-(s as f64) * 2.0 / 3.0).exp2()).collect());
    let plan = budget_plan(9, &p, &leb(&[4.0]), &profile).unwrap();
    for b in &plan.budgets {
        let want = (8.0 * 3f64.powf(-0.5) * 0.3).floor() as u64 + 1;
        assert_eq!(b.budget, want);
    }
}

#[test]
fn plan_count_is_order_m() {
    for m in 1..=2usize {
        for (p, q, r) in [(1.5, 4.0, 0.5), (1.5, 4.0, 1.0), (1.8, 3.0, 0.9)] {
            let p = params(&vec![p; m], r * m as f64, Tau::Infinite);
            let target = leb(&vec![q; m]);
            for n in 2..=6u32 {
                let terms = (1usize << (n as usize * m)) + 1;
                match budget_plan(terms, &p, &target, &BlockNormProfile(vec![])) {
                    Ok(plan) => {
                        assert_eq!(plan.n, n);
                        assert!(plan.count_constant <= 8.0, "c = {}", plan.count_constant);
                        assert!(plan.budgets.iter().all(|b| b.budget >= 1));
                        assert!(plan.alpha > 1.0);
                    }
                    Err(Error::EmptyRange { .. }) => {}
                    Err(e) => panic!("{e}"),
                }
            }
        }
    }
}

#[test]
fn empty_window_falls_back_to_truncation() {
    let p = params(&[1.5], 1.0, Tau::Infinite);
    let target = leb(&[4.0]);
    assert!(matches!(budget_plan(4, &p, &target, &BlockNormProfile(vec![])), Err(Error::EmptyRange { n: 1, .. })));
    let f = lacunary_random(&p, 5, &SeededSampler::new(1), BlockShape::Flat, 4).unwrap();
    let profile = block_norm_profile(&f, &p.base, 4).unwrap();
    let a = build_approximant(&f, &SchemeSpec::new(SchemeKind::BlockBudget, p, target, 4), &profile).unwrap();
    assert!(a.plan.as_ref().unwrap().fallback.is_some());
    assert_eq!(a.truncation_level, Some(1));
    assert_eq!(a.len(), 3);
}

#[test]
fn unsupported_regime_for_budget() {
    let p = params(&[1.25], 1.0, Tau::Infinite);
    assert!(matches!(budget_plan(64, &p, &leb(&[2.0]), &BlockNormProfile(vec![])), Err(Error::Unsupported(_))));
}

#[test]
fn greedy_examples() {
    let s = Spectrum::from_entries(1, [([0], c(3.0)), ([1], c(2.0)), ([-1], c(2.0)), ([5], c(1.0))]).unwrap();
    assert_eq!(greedy_select(&s, 2).to_vecs(), vec![vec![-1], vec![0]]);
    assert!(greedy_select(&s, 0).is_empty());
    assert_eq!(greedy_select(&s, 10).len(), 4);
}

#[test]
fn greedy_drops_equal_modulus_mass() {
    let n = 20;
    let s = Spectrum::from_entries(1, (0..n).map(|k| ([k as i64], Complex64::from_polar(1.0, k as f64)))).unwrap();
    for m in 1..n {
        let a = build_approximant(&s, &SchemeSpec::new(SchemeKind::Greedy, params(&[1.5], 1.0, Tau::Infinite), leb(&[2.0]), m), &BlockNormProfile(vec![])).unwrap();
        let err = approximation_error(&s, &a, &leb(&[2.0]), 4).unwrap();
        let total = (2.0 * PI * n as f64).sqrt();
        let want = (((n - m) as f64) / n as f64).sqrt() * total;
        assert!((err - want).abs() < 1e-10 * total);
        assert!(err <= (n as f64 / m as f64).sqrt() * total);
    }
}

#[test]
fn greedy_is_l2_optimal_by_brute_force() {
    for trial in 0..60u64 {
        let mut rng = SeededSampler::new(trial);
        let count = 3 + (trial % 10) as usize;
        let entries: Vec<(Vec<i64>, Complex64)> = (0..count)
            .map(|i| (vec![i as i64 - 5], rng.phase() * (1 + rng.range(0, 2)) as f64))
            .collect();
        let s = Spectrum::from_entries(1, entries).unwrap();
        let keys = s.support().to_vecs();
        for m in 0..=s.len() {
            let support = greedy_select(&s, m);
            let a = build_approximant(&s, &SchemeSpec::new(SchemeKind::Greedy, params(&[1.5], 1.0, Tau::Infinite), leb(&[2.0]), m), &BlockNormProfile(vec![])).unwrap();
            assert_eq!(a.support, support);
            let greedy = approximation_error(&s, &a, &leb(&[2.0]), 4).unwrap();
            let best = (0u32..1 << s.len())
                .filter(|mask| mask.count_ones() as usize == m)
                .map(|mask| {
                    let omega: Vec<Vec<i64>> = (0..s.len()).filter(|i| mask >> i & 1 == 1).map(|i| keys[i].clone()).collect();
                    parseval_error(&s, &omega)
                })
                .fold(f64::INFINITY, f64::min);
            assert!((greedy - best).abs() <= 1e-10 * best.max(1.0), "trial {trial} m={m}: {greedy} vs {best}");
        }
    }
}

#[test]
fn budget_keeps_low_blocks_exactly() {
    let p = params(&[1.5], 0.5, Tau::Infinite);
    let f = lacunary_random(&p, 2, &SeededSampler::new(4), BlockShape::Peaked, 4).unwrap();
    let profile = block_norm_profile(&f, &p.base, 4).unwrap();
    let spec = SchemeSpec::new(SchemeKind::BlockBudget, p, leb(&[4.0]), 64);
    assert_eq!(level_for(64, 1), 5);
    let a = build_approximant(&f, &spec, &profile).unwrap();
    assert_eq!(a.coefficients, f);
    assert_eq!(approximation_error(&f, &a, &leb(&[4.0]), 4).unwrap(), 0.0);
}

#[test]
fn greedy_with_full_budget_is_exact() {
    let mut rng = SeededSampler::new(8);
    let s = rng.spectrum(&[9, 9], 25);
    let a = build_approximant(&s, &SchemeSpec::new(SchemeKind::Greedy, params(&[1.5, 1.5], 1.0, Tau::Infinite), leb(&[4.0, 4.0]), 100), &BlockNormProfile(vec![])).unwrap();
    assert_eq!(approximation_error(&s, &a, &leb(&[4.0, 4.0]), 4).unwrap(), 0.0);
}

#[test]
fn truncation_error_decreases() {
    let entries: Vec<(Vec<i64>, Complex64)> = (1..=8u32)
        .flat_map(|s| {
            let keys = block_indices(s, 1);
            let scale = (-(s as f64)).exp2() / (keys.len() as f64).sqrt();
            keys.to_vecs().into_iter().map(move |k| (k, c(scale)))
        })
        .collect();
    let s = Spectrum::from_entries(1, entries).unwrap();
    let target = leb(&[2.0]);
    let mut last = f64::INFINITY;
    for level in 0..8u32 {
        let terms = cumulative_cardinality(level, 1) as usize;
        assert_eq!(truncation_level(terms, 1), level as i64);
        let a = build_approximant(&s, &SchemeSpec::new(SchemeKind::Truncation, params(&[1.25], 1.0, Tau::Infinite), target.clone(), terms), &BlockNormProfile(vec![])).unwrap();
        let err = approximation_error(&s, &a, &target, 4).unwrap();
        assert!(err < last);
        last = err;
    }
}

#[test]
fn budget_support_within_eight_m() {
    for (r, selection) in [(0.5, BlockSelection::Greedy), (1.0, BlockSelection::Sampled { seed: 3 })] {
        let p = params(&[1.5], r, Tau::Infinite);
        let f = lacunary_random(&p, 14, &SeededSampler::new(2), BlockShape::Peaked, 4).unwrap();
        let profile = block_norm_profile(&f, &p.base, 4).unwrap();
        for e in 3..=10 {
            let terms = 1usize << e;
            let spec = SchemeSpec::new(SchemeKind::BlockBudget, p.clone(), leb(&[4.0]), terms).with_selection(selection);
            let a = build_approximant(&f, &spec, &profile).unwrap();
            assert!(a.len() <= 8 * terms);
        }
    }
}

#[test]
fn greedy_coefficients_come_from_source() {
    let p = params(&[1.5], 0.5, Tau::Infinite);
    let f = lacunary_random(&p, 10, &SeededSampler::new(6), BlockShape::Peaked, 4).unwrap();
    let profile = block_norm_profile(&f, &p.base, 4).unwrap();
    let a = build_approximant(&f, &SchemeSpec::new(SchemeKind::BlockBudget, p, leb(&[4.0]), 64), &profile).unwrap();
    for (k, b) in a.coefficients.iter() {
        assert_eq!(f.get(k), Some(b));
    }
}

#[test]
fn sampled_selection_is_deterministic_and_never_worse_per_block() {
    let p = params(&[1.5], 1.0, Tau::Infinite);
    let target = leb(&[4.0]);
    let f = lacunary_random(&p, 12, &SeededSampler::new(9), BlockShape::Peaked, 4).unwrap();
    let profile = block_norm_profile(&f, &p.base, 4).unwrap();
    let spec = SchemeSpec::new(SchemeKind::BlockBudget, p, target.clone(), 512);
    let greedy = build_approximant(&f, &spec, &profile).unwrap();
    let sampled_spec = spec.with_selection(BlockSelection::Sampled { seed: 5 });
    let a = build_approximant(&f, &sampled_spec, &profile).unwrap();
    let b = build_approximant(&f, &sampled_spec, &profile).unwrap();
    assert_eq!(a, b);
    assert!(a.coefficients.support().iter().all(|k| f.get(k).is_some()));
    let eg = approximation_error(&f, &greedy, &target, 4).unwrap();
    let es = approximation_error(&f, &a, &target, 4).unwrap();
    assert!(es <= eg * 1.5, "{es} vs {eg}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn greedy_is_deterministic_and_nested(seed in any::<u64>(), m in 0usize..40) {
        let mut rng = SeededSampler::new(seed);
        let s = rng.spectrum(&[6, 6], 30);
        let a = greedy_select(&s, m);
        prop_assert_eq!(&a, &greedy_select(&s, m));
        prop_assert_eq!(a.len(), m.min(s.len()));
        let bigger: FreqSet = greedy_select(&s, m + 1);
        prop_assert!(a.iter().all(|k| bigger.contains(k)));
        let floor = a.iter().map(|k| s.get(k).unwrap().norm()).fold(f64::INFINITY, f64::min);
        prop_assert!(s.without(&a).coeffs().iter().all(|z| z.norm() <= floor));
    }

    #[test]
    fn greedy_l2_error_monotone(seed in any::<u64>()) {
        let mut rng = SeededSampler::new(seed);
        let s = rng.spectrum(&[12], 20);
        let target = leb(&[2.0]);
        let mut last = f64::INFINITY;
        for m in 0..=s.len() {
            let a = build_approximant(&s, &SchemeSpec::new(SchemeKind::Greedy, params(&[1.5], 1.0, Tau::Infinite), target.clone(), m), &BlockNormProfile(vec![])).unwrap();
            let e = approximation_error(&s, &a, &target, 4).unwrap();
            prop_assert!(e <= last);
            last = e;
        }
    }
}
