//! Besov and Nikol'skii seminorms built from dyadic block norms.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lorentz::{mixed_lorentz, LorentzExponents};
use crate::spectral::{block_project, synthesize, Spectrum};

/// Seminorm slack absorbed by [`is_member`].
pub const MEMBERSHIP_SLACK: f64 = 1e-9;

/// Third Besov index; `Infinite` selects the Nikol'skii class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tau {
    Finite(f64),
    Infinite,
}

impl Tau {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_infinite() && value > 0.0 {
            return Ok(Tau::Infinite);
        }
        if !(value >= 1.0) {
            return Err(Error::Domain(format!("tau = {value} must be at least 1")));
        }
        Ok(Tau::Finite(value))
    }

    /// `1/τ`, zero for `τ = ∞`.
    pub fn recip(self) -> f64 {
        match self {
            Tau::Finite(t) => 1.0 / t,
            Tau::Infinite => 0.0,
        }
    }
}

impl fmt::Display for Tau {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tau::Finite(t) => write!(f, "{t}"),
            Tau::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Tau {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "∞" => Ok(Tau::Infinite),
            other => {
                let v: f64 = other.parse().map_err(|_| Error::Parse(format!("bad tau `{other}`")))?;
                Tau::new(v)
            }
        }
    }
}

impl Serialize for Tau {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Tau::Finite(t) => s.serialize_f64(*t),
            Tau::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Tau {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Tau::new(v).map_err(serde::de::Error::custom),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Smoothness class `B^r_{p̄,θ̄,τ}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BesovParams {
    pub base: LorentzExponents,
    pub r: f64,
    pub tau: Tau,
}

impl BesovParams {
    pub fn new(base: LorentzExponents, r: f64, tau: Tau) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::Domain(format!("smoothness r = {r} must be positive")));
        }
        Ok(Self { base, r, tau })
    }

    pub fn dims(&self) -> usize {
        self.base.dims()
    }
}

/// `‖δ_s(f)‖_{p̄,θ̄}` for `s = 0, 1, …`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockNormProfile(pub Vec<f64>);

impl BlockNormProfile {
    pub fn get(&self, s: u32) -> f64 {
        self.0.get(s as usize).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Per-axis grid for block `s`: smallest power of two `≥ oversample · 2^s`.
pub fn block_grid(s: u32, dims: usize, oversample: usize) -> Vec<usize> {
    vec![(oversample << s).next_power_of_two().max(4); dims]
}

/// Norm of a single block, synthesized on its oversampled grid.
pub fn block_norm(block: &Spectrum, s: u32, e: &LorentzExponents, oversample: usize) -> Result<f64> {
    if block.is_empty() {
        return Ok(0.0);
    }
    let grid = synthesize(block, &block_grid(s, block.dims(), oversample))?;
    mixed_lorentz(&grid, e)
}

pub fn block_norm_profile(
    spectrum: &Spectrum,
    e: &LorentzExponents,
    oversample: usize,
) -> Result<BlockNormProfile> {
    if oversample < 4 {
        return Err(Error::InvalidParameter(format!("oversample {oversample} must be at least 4")));
    }
    if spectrum.dims() != e.dims() {
        return Err(Error::DimensionMismatch { expected: e.dims(), actual: spectrum.dims() });
    }
    let blocks = spectrum.blocks();
    let norms = blocks
        .iter()
        .enumerate()
        .map(|(s, b)| block_norm(b, s as u32, e, oversample))
        .collect::<Result<Vec<_>>>()?;
    Ok(BlockNormProfile(norms))
}

/// `(Σ_s 2^{srτ} ‖δ_s‖^τ)^{1/τ}`, or the supremum for `τ = ∞`.
pub fn besov_seminorm(profile: &BlockNormProfile, r: f64, tau: Tau) -> f64 {
    let weighted = profile.0.iter().enumerate().map(|(s, v)| (s as f64 * r).exp2() * v);
    match tau {
        Tau::Infinite => weighted.fold(0.0, f64::max),
        Tau::Finite(t) => {
            let terms: Vec<f64> = weighted.collect();
            let peak = terms.iter().copied().fold(0.0, f64::max);
            if peak == 0.0 {
                return 0.0;
            }
            peak * terms.iter().map(|v| (v / peak).powf(t)).sum::<f64>().powf(1.0 / t)
        }
    }
}

pub fn seminorm_of(spectrum: &Spectrum, params: &BesovParams, oversample: usize) -> Result<f64> {
    let profile = block_norm_profile(spectrum, &params.base, oversample)?;
    Ok(besov_seminorm(&profile, params.r, params.tau))
}

pub fn is_member(spectrum: &Spectrum, params: &BesovParams, oversample: usize) -> Result<bool> {
    Ok(seminorm_of(spectrum, params, oversample)? <= 1.0 + MEMBERSHIP_SLACK)
}

/// Rescales `spectrum` to unit seminorm; returns the scaled spectrum and the
/// divisor used.
pub fn normalize_to_class(
    spectrum: &Spectrum,
    params: &BesovParams,
    oversample: usize,
) -> Result<(Spectrum, f64)> {
    let norm = seminorm_of(spectrum, params, oversample)?;
    if spectrum.is_empty() || norm == 0.0 {
        return Err(Error::ZeroFunction);
    }
    Ok((spectrum.scaled(1.0 / norm), norm))
}

/// Convenience for tests and generators: the block norm of `δ_s(f)`.
pub fn block_norm_of(spectrum: &Spectrum, s: u32, e: &LorentzExponents, oversample: usize) -> Result<f64> {
    block_norm(&block_project(spectrum, s), s, e, oversample)
}
