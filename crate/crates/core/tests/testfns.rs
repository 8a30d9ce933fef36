use std::f64::consts::PI;

use mterm_core::classes::{block_norm_of, normalize_to_class, seminorm_of};
use mterm_core::spectral::{block_of, synthesize};
use mterm_core::testfns::{dirichlet_cubic, f3, g1, lacunary_random, rudin_shapiro, rudin_shapiro_product, rudin_shapiro_sign};
use mterm_core::verify::linear_fit;
use mterm_core::{
    BesovParams, BlockShape, LacunaryFamily, LorentzExponents, SchemeKind, SchemeSpec, SeededSampler, Spectrum, Tau,
};
use num_complex::Complex64;

/// Rudin–Shapiro signs by the classical recursion on binary digits.
fn rs_by_recursion(len: usize) -> Vec<i8> {
    let mut p = vec![1i8];
    let mut q = vec![1i8];
    while p.len() < len {
        let np: Vec<i8> = p.iter().chain(q.iter()).copied().collect();
        let nq: Vec<i8> = p.iter().copied().chain(q.iter().map(|v| -v)).collect();
        p = np;
        q = nq;
    }
    p.truncate(len);
    p
}

fn slope_of(points: &[(f64, f64)]) -> f64 {
    let (x, y): (Vec<f64>, Vec<f64>) = points.iter().copied().unzip();
    linear_fit(&x, &y).unwrap().slope
}

#[test]
fn rudin_shapiro_signs_match_recursion() {
    let oracle = rs_by_recursion(1 << 12);
    for (k, &want) in oracle.iter().enumerate() {
        assert_eq!(rudin_shapiro_sign(k as u64), want, "k={k}");
    }
    assert_eq!(rudin_shapiro(3).unwrap(), vec![1, 1, -1, 1]);
}

#[test]
fn rudin_shapiro_sup_bound() {
    for s in 2..=12u32 {
        let lo = 1i64 << (s - 1);
        let signs = rudin_shapiro(s).unwrap();
        let poly = Spectrum::from_entries(1, signs.iter().enumerate().map(|(i, &e)| ([lo + i as i64], Complex64::new(e as f64, 0.0)))).unwrap();
        let grid = synthesize(&poly, &[1usize << (s + 4)]).unwrap();
        let sup = grid.samples().iter().map(|z| z.norm()).fold(0.0, f64::max);
        let c = sup / 2f64.powf(s as f64 / 2.0);
        assert!(c <= 4.0, "s={s}: C = {c}");
        assert!((grid.mean_square() - signs.len() as f64).abs() < 1e-8 * signs.len() as f64);
    }
}

#[test]
fn rudin_shapiro_product_blocks() {
    for dims in 1..=2 {
        let f = rudin_shapiro_product(5, dims, 1.5).unwrap();
        for s in 1..=5u32 {
            let count = f.iter().filter(|(k, _)| block_of(k) == s).count();
            assert_eq!(count, 1usize << ((s - 1) as usize * dims));
        }
        assert!(f.iter().all(|(k, _)| k.iter().all(|&kj| kj >= 1)));
        assert!(f.iter().all(|(k, _)| (1..=5).contains(&block_of(k))));
    }
}

#[test]
fn rudin_shapiro_product_stays_in_class() {
    for dims in 1..=2usize {
        let p = BesovParams::new(LorentzExponents::uniform(dims, 2.5, 2.5).unwrap(), 1.5, Tau::Infinite).unwrap();
        let top = if dims == 1 { 10 } else { 6 };
        let norms: Vec<f64> = (2..=top).map(|n| seminorm_of(&rudin_shapiro_product(n, dims, 1.5).unwrap(), &p, 4).unwrap()).collect();
        let hi = norms.iter().copied().fold(0.0, f64::max);
        let lo = norms.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(hi / lo < 2.0, "m={dims}: {norms:?}");
    }
}

#[test]
fn g1_block_norms_decay() {
    // On cube-shaped blocks the slices with one small k_j carry a one-axis
    // tail, so beyond m = 1 the decay is 2^{-s/p} rather than 2^{-sΣ1/p}.
    for dims in 1..=2usize {
        let e = LorentzExponents::uniform(dims, 1.5, 1.5).unwrap();
        let top = if dims == 1 { 10 } else { 7 };
        let f = g1(top, dims).unwrap();
        let pts: Vec<(f64, f64)> = (2..=top).map(|s| (s as f64, block_norm_of(&f, s, &e, 4).unwrap().log2())).collect();
        let want = if dims == 1 { -e.sum_inv_p() } else { -1.0 / 1.5 };
        let slope = slope_of(&pts);
        assert!(((slope - want) / want).abs() < 0.1, "m={dims}: {slope} vs {want}");
        let constants: Vec<f64> = pts.iter().map(|(s, v)| (v - want * s).exp2()).collect();
        let hi = constants.iter().copied().fold(0.0, f64::max);
        let lo = constants.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(hi / lo < 2.0, "m={dims}: {constants:?}");
    }
}

#[test]
fn cosine_products_are_real() {
    let g = g1(1, 1).unwrap();
    assert_eq!(g.len(), 2);
    assert!(g.coeffs().iter().all(|&a| a == Complex64::new(0.5, 0.0)));
    let f = f3(1, 1, &[1.5], 1.0).unwrap();
    assert!((f.get(&[1]).unwrap().re - 0.5 * 2f64.powf(-1.0 / 3.0)).abs() < 1e-15);
    for s in [g1(4, 2).unwrap(), f3(4, 2, &[1.5, 2.0], 1.0).unwrap()] {
        let grid = synthesize(&s, &[64, 64]).unwrap();
        assert!(grid.samples().iter().all(|z| z.im.abs() < 1e-12));
    }
    let r = rudin_shapiro_product(1, 1, 1.0).unwrap();
    assert_eq!(r.len(), 1);
    assert!((r.get(&[1]).unwrap().re - 2f64.powf(-1.5)).abs() < 1e-15);
}

#[test]
fn f3_block_norms_and_seminorm() {
    let p = [1.5];
    let r = 0.8;
    let params = BesovParams::new(LorentzExponents::lebesgue(p.to_vec()).unwrap(), r, Tau::Finite(1.0)).unwrap();
    let f = f3(10, 1, &p, r).unwrap();
    let pts: Vec<(f64, f64)> = (2..=10).map(|s| (s as f64, block_norm_of(&f, s, &params.base, 4).unwrap().log2())).collect();
    let slope = slope_of(&pts);
    assert!(((slope + r) / r).abs() < 0.1, "{slope}");
    let norms: Vec<f64> = (2..=10).map(|n| seminorm_of(&f3(n, 1, &p, r).unwrap(), &params, 4).unwrap()).collect();
    let hi = norms.iter().copied().fold(0.0, f64::max);
    let lo = norms.iter().copied().fold(f64::INFINITY, f64::min);
    assert!(hi / lo < 1.5, "{norms:?}");
}

#[test]
fn dirichlet_normalization_exponent() {
    // l_n = [n m / (2 Σ 1/q)]; the normalizing factor should decay like
    // 2^{-n m (r + Σ(1 - 1/p)) / (2 Σ 1/q)}.
    let (p, q, r) = (1.5, 4.0, 0.5);
    let params = BesovParams::new(LorentzExponents::lebesgue(vec![p]).unwrap(), r, Tau::Infinite).unwrap();
    let pts: Vec<(f64, f64)> = (1..=5u32)
        .map(|n| {
            let l = (n as f64 / (2.0 / q)).floor() as u32;
            let (_, divisor) = normalize_to_class(&dirichlet_cubic(l, 1), &params, 4).unwrap();
            (n as f64, (1.0 / divisor).log2())
        })
        .collect();
    let want = -(r + 1.0 - 1.0 / p) / (2.0 / q);
    let slope = slope_of(&pts);
    assert!(((slope - want) / want).abs() < 0.1, "{slope} vs {want}");
}

#[test]
fn dirichlet_matches_closed_form_sum() {
    let d = dirichlet_cubic(3, 1);
    let g = synthesize(&d, &[64]).unwrap();
    for (i, z) in g.samples().iter().enumerate().skip(1) {
        let x = 2.0 * PI * i as f64 / 64.0;
        let want = (8.5 * x).sin() / (x / 2.0).sin();
        assert!((z.re - want).abs() < 1e-10 && z.im.abs() < 1e-10);
    }
    assert_eq!(dirichlet_cubic(2, 2).len(), 81);
}

#[test]
fn generators_are_deterministic() {
    let p = BesovParams::new(LorentzExponents::uniform(2, 1.5, 1.5).unwrap(), 1.0, Tau::Infinite).unwrap();
    let a = lacunary_random(&p, 4, &SeededSampler::new(5), BlockShape::Flat, 4).unwrap();
    let b = lacunary_random(&p, 4, &SeededSampler::new(5), BlockShape::Flat, 4).unwrap();
    let c = lacunary_random(&p, 4, &SeededSampler::new(6), BlockShape::Flat, 4).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);

    let spec = SchemeSpec::new(SchemeKind::BlockBudget, p, LorentzExponents::uniform(2, 4.0, 4.0).unwrap(), 64);
    let family = LacunaryFamily { shape: BlockShape::Peaked, seed: 2, extra_blocks: 1, max_block: 5, oversample: 4 };
    assert_eq!(family.member(&spec, 64).unwrap(), family.member(&spec, 64).unwrap());
    assert!(family.band(&spec, 64).unwrap() <= 5);

    let mut x = SeededSampler::new(99);
    let mut y = SeededSampler::new(99);
    assert_eq!(x.spectrum(&[10, 3], 12), y.spectrum(&[10, 3], 12));
}
