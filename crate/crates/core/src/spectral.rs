//! Fourier analysis and synthesis on uniform periodic grids, plus the dyadic
//! block bookkeeping used everywhere else in the crate.
//!
//! Grids store axis 0 as the fastest-varying index, so entry
//! `(i_1, ..., i_m)` lives at `i_1 + n_1 (i_2 + n_2 (i_3 + ...))` and holds
//! `f(2π i_1 / n_1, ..., 2π i_m / n_m)`.
//!
//! Coefficients use the normalized forward transform
//! `a_k = (∏ n_j)^{-1} Σ_x f(x) e^{-i⟨k,x⟩}`, which matches
//! `(2π)^{-m} ∫ f(x) e^{-i⟨k,x⟩} dx` for band-limited inputs. With this
//! convention the mean square of the samples equals `Σ |a_k|²`.

use std::cmp::Ordering;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{FftDirection, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative modulus below which `analyze` discards a coefficient.
pub const DROP_THRESHOLD: f64 = 1e-13;

/// Smallest admissible per-axis sample count.
pub const MIN_GRID_SIZE: usize = 4;

fn check_sizes(sizes: &[usize]) -> Result<()> {
    if sizes.is_empty() {
        return Err(Error::InvalidParameter("grid needs at least one axis".into()));
    }
    for (axis, &size) in sizes.iter().enumerate() {
        if size < MIN_GRID_SIZE || !size.is_power_of_two() {
            return Err(Error::InvalidGridSize { axis, size });
        }
    }
    Ok(())
}

/// Samples of a 2π-periodic function on a uniform grid over `[0, 2π)^m`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    sizes: Vec<usize>,
    samples: Vec<Complex64>,
}

impl GridFunction {
    pub fn new(sizes: Vec<usize>, samples: Vec<Complex64>) -> Result<Self> {
        check_sizes(&sizes)?;
        let expected: usize = sizes.iter().product();
        if samples.len() != expected {
            return Err(Error::SampleCount { expected, actual: samples.len() });
        }
        Ok(Self { sizes, samples })
    }

    pub fn constant(sizes: Vec<usize>, value: Complex64) -> Result<Self> {
        check_sizes(&sizes)?;
        let len = sizes.iter().product();
        Ok(Self { sizes, samples: vec![value; len] })
    }

    /// Samples `f` at every grid point.
    pub fn from_fn<F>(sizes: Vec<usize>, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Complex64,
    {
        check_sizes(&sizes)?;
        let len: usize = sizes.iter().product();
        let mut samples = Vec::with_capacity(len);
        let mut point = vec![0.0; sizes.len()];
        for flat in 0..len {
            let mut rem = flat;
            for (j, &n) in sizes.iter().enumerate() {
                point[j] = 2.0 * PI * (rem % n) as f64 / n as f64;
                rem /= n;
            }
            samples.push(f(&point));
        }
        Ok(Self { sizes, samples })
    }

    pub fn dims(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Grid indices of a flat sample position.
    pub fn index_of(&self, mut flat: usize) -> Vec<usize> {
        self.sizes
            .iter()
            .map(|&n| {
                let i = flat % n;
                flat /= n;
                i
            })
            .collect()
    }

    /// Pointwise scaling.
    pub fn scaled(&self, c: Complex64) -> Self {
        Self { sizes: self.sizes.clone(), samples: self.samples.iter().map(|v| v * c).collect() }
    }

    /// Mean of `|f|²` over the grid.
    pub fn mean_square(&self) -> f64 {
        self.samples.iter().map(|v| v.norm_sqr()).sum::<f64>() / self.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

fn cmp_keys(a: &[i64], b: &[i64]) -> Ordering {
    a.cmp(b)
}

/// Binary search over lexicographically sorted flat keys.
fn find(dims: usize, keys: &[i64], k: &[i64]) -> std::result::Result<usize, usize> {
    let (mut lo, mut hi) = (0, keys.len() / dims);
    while lo < hi {
        let mid = (lo + hi) / 2;
        match cmp_keys(&keys[mid * dims..(mid + 1) * dims], k) {
            Ordering::Less => lo = mid + 1,
            Ordering::Greater => hi = mid,
            Ordering::Equal => return Ok(mid),
        }
    }
    Err(lo)
}

/// Sorts `(key, value)` rows lexicographically by key; returns the permuted
/// flat keys and values.
fn sort_rows<T: Copy>(dims: usize, keys: &[i64], values: &[T]) -> (Vec<i64>, Vec<T>) {
    let count = values.len();
    let mut order: Vec<usize> = (0..count).collect();
    order.sort_unstable_by(|&a, &b| {
        cmp_keys(&keys[a * dims..(a + 1) * dims], &keys[b * dims..(b + 1) * dims])
    });
    let mut sorted_keys = Vec::with_capacity(keys.len());
    let mut sorted_values = Vec::with_capacity(count);
    for i in order {
        sorted_keys.extend_from_slice(&keys[i * dims..(i + 1) * dims]);
        sorted_values.push(values[i]);
    }
    (sorted_keys, sorted_values)
}

/// A finite, duplicate-free set of integer frequency vectors, kept in
/// lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FreqSet {
    dims: usize,
    keys: Vec<i64>,
}

impl FreqSet {
    pub fn empty(dims: usize) -> Self {
        Self { dims, keys: Vec::new() }
    }

    /// Builds a set from arbitrary frequencies; duplicates collapse.
    pub fn from_freqs<I, K>(dims: usize, freqs: I) -> Result<Self>
    where
        I: IntoIterator<Item = K>,
        K: AsRef<[i64]>,
    {
        let mut flat = Vec::new();
        let mut count = 0;
        for k in freqs {
            let k = k.as_ref();
            if k.len() != dims {
                return Err(Error::DimensionMismatch { expected: dims, actual: k.len() });
            }
            flat.extend_from_slice(k);
            count += 1;
        }
        let (sorted, _) = sort_rows(dims, &flat, &vec![(); count]);
        let mut keys: Vec<i64> = Vec::with_capacity(sorted.len());
        for k in sorted.chunks_exact(dims) {
            if keys.len() >= dims && &keys[keys.len() - dims..] == k {
                continue;
            }
            keys.extend_from_slice(k);
        }
        Ok(Self { dims, keys })
    }

    /// Takes already sorted, duplicate-free flat keys.
    pub(crate) fn from_sorted(dims: usize, keys: Vec<i64>) -> Self {
        debug_assert!(keys.len() % dims == 0);
        Self { dims, keys }
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.keys.len() / self.dims
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &[i64]> + '_ {
        self.keys.chunks_exact(self.dims)
    }

    pub fn contains(&self, k: &[i64]) -> bool {
        self.position(k).is_ok()
    }

    fn position(&self, k: &[i64]) -> std::result::Result<usize, usize> {
        find(self.dims, &self.keys, k)
    }

    pub fn union(&self, other: &FreqSet) -> FreqSet {
        assert_eq!(self.dims, other.dims);
        let mut all: Vec<&[i64]> = self.iter().chain(other.iter()).collect();
        all.sort_unstable();
        all.dedup();
        FreqSet { dims: self.dims, keys: all.concat() }
    }

    pub fn to_vecs(&self) -> Vec<Vec<i64>> {
        self.iter().map(<[i64]>::to_vec).collect()
    }
}

/// Sparse trigonometric coefficients `k ↦ a_k`, sorted lexicographically by
/// frequency. No stored coefficient is exactly zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    dims: usize,
    keys: Vec<i64>,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn zero(dims: usize) -> Self {
        Self { dims, keys: Vec::new(), coeffs: Vec::new() }
    }

    pub fn from_entries<I, K>(dims: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (K, Complex64)>,
        K: AsRef<[i64]>,
    {
        if dims == 0 {
            return Err(Error::InvalidParameter("spectrum needs at least one axis".into()));
        }
        let mut flat = Vec::new();
        let mut values = Vec::new();
        for (k, a) in entries {
            let k = k.as_ref();
            if k.len() != dims {
                return Err(Error::DimensionMismatch { expected: dims, actual: k.len() });
            }
            if a == Complex64::new(0.0, 0.0) {
                return Err(Error::ZeroCoefficient { freq: k.to_vec() });
            }
            flat.extend_from_slice(k);
            values.push(a);
        }
        let (keys, coeffs) = sort_rows(dims, &flat, &values);
        for w in 1..coeffs.len() {
            if keys[(w - 1) * dims..w * dims] == keys[w * dims..(w + 1) * dims] {
                return Err(Error::DuplicateFrequency {
                    freq: keys[w * dims..(w + 1) * dims].to_vec(),
                });
            }
        }
        Ok(Self { dims, keys, coeffs })
    }

    fn push_sorted(&mut self, k: &[i64], a: Complex64) {
        if a != Complex64::new(0.0, 0.0) {
            self.keys.extend_from_slice(k);
            self.coeffs.push(a);
        }
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[i64], Complex64)> + '_ {
        self.keys.chunks_exact(self.dims).zip(self.coeffs.iter().copied())
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn get(&self, k: &[i64]) -> Option<Complex64> {
        find(self.dims, &self.keys, k).ok().map(|i| self.coeffs[i])
    }

    /// Per-axis `max |k_j|` over the stored frequencies (zeros when empty).
    pub fn max_freq(&self) -> Vec<u64> {
        let mut out = vec![0u64; self.dims];
        for k in self.keys.chunks_exact(self.dims) {
            for (o, &kj) in out.iter_mut().zip(k) {
                *o = (*o).max(kj.unsigned_abs());
            }
        }
        out
    }

    pub fn support(&self) -> FreqSet {
        FreqSet::from_sorted(self.dims, self.keys.clone())
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map_coeffs(|a| a * c)
    }

    pub fn map_coeffs<F: Fn(Complex64) -> Complex64>(&self, f: F) -> Self {
        let mut out = Self::zero(self.dims);
        for (k, a) in self.iter() {
            out.push_sorted(k, f(a));
        }
        out
    }

    /// Keeps the entries whose frequency satisfies `pred`.
    pub fn filter<F: Fn(&[i64], Complex64) -> bool>(&self, pred: F) -> Self {
        let mut out = Self::zero(self.dims);
        for (k, a) in self.iter() {
            if pred(k, a) {
                out.push_sorted(k, a);
            }
        }
        out
    }

    pub fn restrict(&self, set: &FreqSet) -> Self {
        self.filter(|k, _| set.contains(k))
    }

    pub fn without(&self, set: &FreqSet) -> Self {
        self.filter(|k, _| !set.contains(k))
    }

    fn merge(&self, other: &Spectrum, sign: f64) -> Self {
        assert_eq!(self.dims, other.dims, "spectrum dimension mismatch");
        let dims = self.dims;
        let mut out = Self::zero(dims);
        let (mut i, mut j) = (0, 0);
        while i < self.len() || j < other.len() {
            let ord = if i == self.len() {
                Ordering::Greater
            } else if j == other.len() {
                Ordering::Less
            } else {
                cmp_keys(&self.keys[i * dims..(i + 1) * dims], &other.keys[j * dims..(j + 1) * dims])
            };
            match ord {
                Ordering::Less => {
                    out.push_sorted(&self.keys[i * dims..(i + 1) * dims], self.coeffs[i]);
                    i += 1;
                }
                Ordering::Greater => {
                    out.push_sorted(&other.keys[j * dims..(j + 1) * dims], other.coeffs[j] * sign);
                    j += 1;
                }
                Ordering::Equal => {
                    out.push_sorted(
                        &self.keys[i * dims..(i + 1) * dims],
                        self.coeffs[i] + other.coeffs[j] * sign,
                    );
                    i += 1;
                    j += 1;
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Spectrum) -> Self {
        self.merge(other, 1.0)
    }

    pub fn sub(&self, other: &Spectrum) -> Self {
        self.merge(other, -1.0)
    }

    /// `Σ |a_k|²`, the mean square of the synthesized function.
    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Largest dyadic block index touched by the spectrum.
    pub fn max_block(&self) -> Option<u32> {
        self.keys.chunks_exact(self.dims).map(block_of).max()
    }

    /// Splits into dyadic block projections, indexed by block.
    pub fn blocks(&self) -> Vec<Spectrum> {
        let Some(top) = self.max_block() else {
            return Vec::new();
        };
        let mut out = vec![Spectrum::zero(self.dims); top as usize + 1];
        for (k, a) in self.iter() {
            out[block_of(k) as usize].push_sorted(k, a);
        }
        out
    }
}

/// Dyadic block of a frequency: 0 for the origin, else `1 + ⌊log₂ max_j |k_j|⌋`.
pub fn block_of(k: &[i64]) -> u32 {
    let top = k.iter().map(|kj| kj.unsigned_abs()).max().unwrap_or(0);
    u64::BITS - top.leading_zeros()
}

/// `#ρ(s)` in `m` dimensions.
pub fn block_cardinality(s: u32, dims: usize) -> u64 {
    if s == 0 {
        return 1;
    }
    let outer = (1u64 << (s + 1)) - 1;
    let inner = (1u64 << s) - 1;
    outer.pow(dims as u32) - inner.pow(dims as u32)
}

/// Number of frequencies in blocks `0..=s`, i.e. `(2^{s+1} - 1)^m`.
pub fn cumulative_cardinality(s: u32, dims: usize) -> u64 {
    ((1u64 << (s + 1)) - 1).pow(dims as u32)
}

/// Enumerates the cube `[-radius, radius]^m` in lexicographic order.
fn for_each_in_cube<F: FnMut(&[i64])>(dims: usize, radius: i64, mut f: F) {
    let mut k = vec![-radius; dims];
    loop {
        f(&k);
        let mut axis = dims;
        loop {
            if axis == 0 {
                return;
            }
            axis -= 1;
            if k[axis] < radius {
                k[axis] += 1;
                break;
            }
            k[axis] = -radius;
        }
    }
}

/// The frequencies of dyadic block `s`: `{0}` for `s = 0`, otherwise every `k`
/// with `2^{s-1} ≤ max_j |k_j| < 2^s`.
pub fn block_indices(s: u32, dims: usize) -> FreqSet {
    if s == 0 {
        return FreqSet::from_sorted(dims, vec![0; dims]);
    }
    let radius = (1i64 << s) - 1;
    let mut keys = Vec::with_capacity(block_cardinality(s, dims) as usize * dims);
    for_each_in_cube(dims, radius, |k| {
        if block_of(k) == s {
            keys.extend_from_slice(k);
        }
    });
    FreqSet::from_sorted(dims, keys)
}

/// All frequencies with `max_j |k_j| ≤ radius`, lexicographic.
pub fn cube_indices(radius: u64, dims: usize) -> FreqSet {
    let mut keys = Vec::new();
    for_each_in_cube(dims, radius as i64, |k| keys.extend_from_slice(k));
    FreqSet::from_sorted(dims, keys)
}

/// Restriction of `spectrum` to block `s`.
pub fn block_project(spectrum: &Spectrum, s: u32) -> Spectrum {
    spectrum.filter(|k, _| block_of(k) == s)
}

/// Smallest power-of-two grid (at least 4 per axis) with
/// `n_j ≥ oversample · (max_freq_j + 1)`.
pub fn grid_sizes_for(max_freq: &[u64], oversample: usize) -> Vec<usize> {
    max_freq
        .iter()
        .map(|&f| (oversample * (f as usize + 1)).next_power_of_two().max(MIN_GRID_SIZE))
        .collect()
}

/// Applies an unnormalized FFT along every axis in place.
fn transform(data: &mut [Complex64], sizes: &[usize], direction: FftDirection) {
    let mut planner = FftPlanner::new();
    let mut stride = 1;
    for &n in sizes {
        let fft = planner.plan_fft(n, direction);
        let span = n * stride;
        if stride == 1 {
            data.par_chunks_mut(span).for_each(|lane| fft.process(lane));
        } else {
            data.par_chunks_mut(span).for_each(|chunk| {
                let mut lane = vec![Complex64::new(0.0, 0.0); n];
                for offset in 0..stride {
                    for (i, v) in lane.iter_mut().enumerate() {
                        *v = chunk[offset + i * stride];
                    }
                    fft.process(&mut lane);
                    for (i, v) in lane.iter().enumerate() {
                        chunk[offset + i * stride] = *v;
                    }
                }
            });
        }
        stride = span;
    }
}

/// Fourier coefficients of the sampled function for every `|k_j| < n_j/2`.
pub fn analyze(f: &GridFunction) -> Spectrum {
    let sizes = f.sizes();
    let dims = sizes.len();
    let mut data = f.samples().to_vec();
    transform(&mut data, sizes, FftDirection::Forward);
    let scale = 1.0 / data.len() as f64;

    let flat_index = |k: &[i64]| -> usize {
        let mut idx = 0;
        let mut stride = 1;
        for (&kj, &n) in k.iter().zip(sizes) {
            idx += (kj.rem_euclid(n as i64) as usize) * stride;
            stride *= n;
        }
        idx
    };

    // Lexicographic walk over the resolvable box |k_j| ≤ n_j/2 - 1.
    let limits: Vec<i64> = sizes.iter().map(|&n| n as i64 / 2 - 1).collect();
    let mut k: Vec<i64> = limits.iter().map(|l| -l).collect();
    let mut keys = Vec::new();
    let mut coeffs = Vec::new();
    'walk: loop {
        keys.extend_from_slice(&k);
        coeffs.push(data[flat_index(&k)] * scale);
        let mut axis = dims;
        loop {
            if axis == 0 {
                break 'walk;
            }
            axis -= 1;
            if k[axis] < limits[axis] {
                k[axis] += 1;
                break;
            }
            k[axis] = -limits[axis];
        }
    }

    let peak = coeffs.iter().map(|a| a.norm()).fold(0.0, f64::max);
    let cutoff = DROP_THRESHOLD * peak;
    let mut out = Spectrum::zero(dims);
    for (key, a) in keys.chunks_exact(dims).zip(coeffs) {
        if peak > 0.0 && a.norm() >= cutoff {
            out.push_sorted(key, a);
        }
    }
    out
}

/// Evaluates the trigonometric polynomial at every point of the grid.
pub fn synthesize(spectrum: &Spectrum, sizes: &[usize]) -> Result<GridFunction> {
    check_sizes(sizes)?;
    if sizes.len() != spectrum.dims() {
        return Err(Error::DimensionMismatch { expected: spectrum.dims(), actual: sizes.len() });
    }
    for (axis, (&f, &n)) in spectrum.max_freq().iter().zip(sizes).enumerate() {
        if n as u64 <= 2 * f {
            return Err(Error::BandLimitViolation { axis, size: n, max_freq: f });
        }
    }
    let len: usize = sizes.iter().product();
    let mut data = vec![Complex64::new(0.0, 0.0); len];
    for (k, a) in spectrum.iter() {
        let mut idx = 0;
        let mut stride = 1;
        for (&kj, &n) in k.iter().zip(sizes) {
            idx += (kj.rem_euclid(n as i64) as usize) * stride;
            stride *= n;
        }
        data[idx] += a;
    }
    transform(&mut data, sizes, FftDirection::Inverse);
    GridFunction::new(sizes.to_vec(), data)
}

/// Synthesizes on the grid chosen by [`grid_sizes_for`].
pub fn synthesize_oversampled(spectrum: &Spectrum, oversample: usize) -> Result<GridFunction> {
    let sizes = grid_sizes_for(&spectrum.max_freq(), oversample);
    synthesize(spectrum, &sizes)
}
