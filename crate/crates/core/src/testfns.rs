//! Extremal and random test functions.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classes::{block_norm, normalize_to_class, BesovParams, Tau};
use crate::mterm::{budget_alpha, level_for, regime_of, truncation_level, SchemeKind, SchemeSpec};
use crate::error::{Error, Result};
use crate::spectral::{block_indices, cube_indices, Spectrum};

/// Reproducible source of randomness; every random generator takes one.
#[derive(Debug, Clone)]
pub struct SeededSampler {
    seed: u64,
    rng: ChaCha8Rng,
}

impl SeededSampler {
    pub fn new(seed: u64) -> Self {
        Self { seed, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent stream for sub-task `index` (blocks, trials, …).
    pub fn derive(&self, index: u64) -> Self {
        Self::new(self.seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn range(&mut self, lo: i64, hi_inclusive: i64) -> i64 {
        self.rng.random_range(lo..=hi_inclusive)
    }

    pub fn sign(&mut self) -> f64 {
        if self.rng.random::<bool>() {
            1.0
        } else {
            -1.0
        }
    }

    pub fn phase(&mut self) -> Complex64 {
        Complex64::from_polar(1.0, 2.0 * PI * self.uniform())
    }

    /// Complex coefficient with uniform phase and modulus in `[0.1, 1)`.
    pub fn coefficient(&mut self) -> Complex64 {
        let modulus = 0.1 + 0.9 * self.uniform();
        self.phase() * modulus
    }

    /// Up to `count` distinct random frequencies with `|k_j| ≤ max_freq[j]`,
    /// each carrying a random coefficient.
    pub fn spectrum(&mut self, max_freq: &[u64], count: usize) -> Spectrum {
        let dims = max_freq.len();
        let mut entries = std::collections::BTreeMap::new();
        for _ in 0..count {
            let k: Vec<i64> = max_freq.iter().map(|&f| self.range(-(f as i64), f as i64)).collect();
            let a = self.coefficient();
            entries.insert(k, a);
        }
        Spectrum::from_entries(dims, entries).expect("distinct nonzero entries")
    }
}

/// Coefficient 1 on every `k` with `max |k_j| ≤ 2^l`.
pub fn dirichlet_cubic(l: u32, dims: usize) -> Spectrum {
    let keys = cube_indices(1u64 << l, dims);
    Spectrum::from_entries(dims, keys.iter().map(|k| (k.to_vec(), Complex64::new(1.0, 0.0))))
        .expect("cube indices are distinct")
}

/// Expands `Σ w(k) ∏ cos k_j x_j` over the positive orthant of blocks
/// `1..=n` into exponentials.
fn cosine_products<W: Fn(u32, &[i64]) -> f64>(n: u32, dims: usize, weight: W) -> Spectrum {
    let norm = (dims as f64).exp2().recip();
    let mut entries = Vec::new();
    for s in 1..=n {
        for k in block_indices(s, dims).iter() {
            if k.iter().any(|&kj| kj < 1) {
                continue;
            }
            let w = weight(s, k) * norm;
            for mask in 0..(1u32 << dims) {
                let signed: Vec<i64> = k
                    .iter()
                    .enumerate()
                    .map(|(j, &kj)| if mask >> j & 1 == 1 { -kj } else { kj })
                    .collect();
                entries.push((signed, Complex64::new(w, 0.0)));
            }
        }
    }
    Spectrum::from_entries(dims, entries).expect("sign patterns of positive k are distinct")
}

/// `Σ_{s=1}^n Σ_{k ∈ ρ(s), k_j ≥ 1} ∏ k_j^{-1} cos k_j x_j`.
pub fn g1(n: u32, dims: usize) -> Result<Spectrum> {
    if n < 1 {
        return Err(Error::InvalidParameter("g1 needs n ≥ 1".into()));
    }
    Ok(cosine_products(n, dims, |_, k| k.iter().map(|&kj| 1.0 / kj as f64).product()))
}

/// `n^{-1} Σ_{s=1}^n 2^{-sΣ(1-1/p_j)} Σ_{k ∈ ρ(s), k_j ≥ 1} ∏ k_j^{-r/m} cos k_j x_j`.
pub fn f3(n: u32, dims: usize, p: &[f64], r: f64) -> Result<Spectrum> {
    if n < 1 {
        return Err(Error::InvalidParameter("f3 needs n ≥ 1".into()));
    }
    if p.len() != dims {
        return Err(Error::DimensionMismatch { expected: dims, actual: p.len() });
    }
    if !(r > 0.0) {
        return Err(Error::Domain(format!("smoothness r = {r} must be positive")));
    }
    let decay: f64 = p.iter().map(|pj| 1.0 - 1.0 / pj).sum();
    let m = dims as f64;
    Ok(cosine_products(n, dims, |s, k| {
        (-(s as f64) * decay).exp2() / n as f64 * k.iter().map(|&kj| (kj as f64).powf(-r / m)).product::<f64>()
    }))
}

/// Golay–Rudin–Shapiro sign of index `k`: `(-1)^{#adjacent 11 pairs}`.
pub fn rudin_shapiro_sign(k: u64) -> i8 {
    if (k & (k >> 1)).count_ones() % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Signs `ε_k` for `k ∈ [2^{s-1}, 2^s)`.
pub fn rudin_shapiro(s: u32) -> Result<Vec<i8>> {
    if s < 1 {
        return Err(Error::InvalidParameter("Rudin–Shapiro window needs s ≥ 1".into()));
    }
    Ok(((1u64 << (s - 1))..(1u64 << s)).map(rudin_shapiro_sign).collect())
}

/// `2^{-n(m/2 + r)} Σ_{s=1}^n ∏_j R_s(x_j)`.
pub fn rudin_shapiro_product(n: u32, dims: usize, r: f64) -> Result<Spectrum> {
    if n < 1 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let scale = (-(n as f64) * (dims as f64 / 2.0 + r)).exp2();
    let mut entries = Vec::new();
    for s in 1..=n {
        let lo = 1i64 << (s - 1);
        let width = 1usize << (s - 1);
        let total = width.pow(dims as u32);
        for flat in 0..total {
            let mut rem = flat;
            let mut k = Vec::with_capacity(dims);
            let mut sign = 1i64;
            for _ in 0..dims {
                let kj = lo + (rem % width) as i64;
                rem /= width;
                sign *= rudin_shapiro_sign(kj as u64) as i64;
                k.push(kj);
            }
            entries.push((k, Complex64::new(scale * sign as f64, 0.0)));
        }
    }
    Spectrum::from_entries(dims, entries)
}

/// Shape of the random polynomial placed on each block by [`lacunary_random`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockShape {
    /// Independent random signs: a flat, Rudin–Shapiro-like block.
    Flat,
    /// The block's Dirichlet kernel translated to a random point: a single
    /// peak of height `#ρ(s)`.
    Peaked,
}

impl std::str::FromStr for BlockShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "flat" => Ok(BlockShape::Flat),
            "peaked" => Ok(BlockShape::Peaked),
            other => Err(Error::Parse(format!("unknown block shape `{other}`"))),
        }
    }
}

/// Random polynomial on blocks `0..=max_block`, each block rescaled so that
/// `‖δ_s‖ = 2^{-sr}` in the class norm.
pub fn lacunary_random(
    params: &BesovParams,
    max_block: u32,
    sampler: &SeededSampler,
    shape: BlockShape,
    oversample: usize,
) -> Result<Spectrum> {
    if max_block < 1 {
        return Err(Error::InvalidParameter("lacunary members need L ≥ 1".into()));
    }
    let dims = params.dims();
    let mut out = Spectrum::zero(dims);
    for s in 0..=max_block {
        let mut rng = sampler.derive(u64::from(s));
        let keys = block_indices(s, dims);
        let entries: Vec<(Vec<i64>, Complex64)> = match shape {
            BlockShape::Flat => keys.iter().map(|k| (k.to_vec(), Complex64::new(rng.sign(), 0.0))).collect(),
            BlockShape::Peaked => {
                let x0: Vec<f64> = (0..dims).map(|_| 2.0 * PI * rng.uniform()).collect();
                keys.iter()
                    .map(|k| {
                        let phase: f64 = k.iter().zip(&x0).map(|(&kj, &xj)| kj as f64 * xj).sum();
                        (k.to_vec(), Complex64::from_polar(1.0, -phase))
                    })
                    .collect()
            }
        };
        let block = Spectrum::from_entries(dims, entries)?;
        let norm = block_norm(&block, s, &params.base, oversample)?;
        let target = (-(s as f64) * params.r).exp2();
        out = out.add(&block.scaled(target / norm));
    }
    Ok(out)
}

/// A rate-sweep family: for each `M`, a lacunary member whose band reaches
/// a few blocks past everything the scheme can keep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LacunaryFamily {
    pub shape: BlockShape,
    pub seed: u64,
    /// Blocks added above the highest block the scheme may keep.
    pub extra_blocks: u32,
    /// Hard cap on the band; memory grows like `2^{m·max_block}`.
    pub max_block: u32,
    pub oversample: usize,
}

impl LacunaryFamily {
    /// Highest block the scheme in `spec` may keep at `M = terms`.
    pub fn reach(spec: &SchemeSpec, terms: usize) -> Result<u32> {
        let dims = spec.source.dims();
        Ok(match spec.kind {
            SchemeKind::Truncation => truncation_level(terms, dims).max(0) as u32,
            SchemeKind::Greedy => level_for(terms, dims) + 1,
            SchemeKind::BlockBudget => {
                let p = spec.source.base.p();
                let regime = regime_of(p, spec.target.p(), spec.source.r)?;
                let alpha = budget_alpha(regime, p, spec.target.p(), spec.source.r)?;
                let n = level_for(terms, dims);
                ((alpha * n as f64 - 1e-9).ceil() as u32).saturating_sub(1).max(n)
            }
        })
    }

    /// Band actually generated at `M = terms`, after the cap.
    pub fn band(&self, spec: &SchemeSpec, terms: usize) -> Result<u32> {
        Ok((Self::reach(spec, terms)? + self.extra_blocks).clamp(1, self.max_block))
    }

    /// True when the cap cuts the band below what the scheme may keep.
    pub fn is_capped(&self, spec: &SchemeSpec, terms: usize) -> Result<bool> {
        Ok(Self::reach(spec, terms)? + self.extra_blocks > self.max_block)
    }

    /// Class member for `M = terms`, normalized to unit seminorm.
    pub fn member(&self, spec: &SchemeSpec, terms: usize) -> Result<Spectrum> {
        let band = self.band(spec, terms)?;
        let sampler = SeededSampler::new(self.seed).derive(terms as u64);
        let f = lacunary_random(&spec.source, band, &sampler, self.shape, self.oversample)?;
        match spec.source.tau {
            Tau::Infinite => Ok(f),
            Tau::Finite(_) => Ok(normalize_to_class(&f, &spec.source, self.oversample)?.0),
        }
    }
}
