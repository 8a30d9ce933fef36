//! M-term approximation schemes and the decay exponents they are measured
//! against.
//!
//! Three schemes are provided:
//!
//! * [`SchemeKind::Greedy`]: the `M` largest coefficients.
//! * [`SchemeKind::BlockBudget`]: every harmonic of the blocks `s < n`, a
//!   budget of `N_s` harmonics inside each block `n ≤ s < αn`, and nothing
//!   above. `n` satisfies `2^{nm} < M ≤ 2^{(n+1)m}`; `α` and `N_s` depend on
//!   the regime (see [`budget_plan`]).
//! * [`SchemeKind::Truncation`]: whole blocks `0..=n` for the largest `n`
//!   whose lattice count fits in `M`.

use std::fmt;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classes::{BesovParams, BlockNormProfile, Tau};
use crate::error::{Error, Result};
use crate::lorentz::{mixed_lorentz, LorentzExponents};
use crate::spectral::{
    block_cardinality, block_of, cumulative_cardinality, synthesize, synthesize_oversampled,
    FreqSet, Spectrum,
};

/// Absolute tolerance for detecting `r = Σ 1/p_j`.
pub const CRITICAL_TOLERANCE: f64 = 1e-12;

/// Which decay law applies to a parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// `1 < p_j ≤ 2 < q_j`, `Σ(1/p_j - 1/q_j) < r < Σ 1/p_j`.
    #[serde(rename = "1")]
    Subcritical,
    /// `1 < p_j ≤ 2 < q_j`, `r = Σ 1/p_j`.
    #[serde(rename = "2")]
    Critical,
    /// `1 < p_j ≤ 2 < q_j`, `r > Σ 1/p_j`.
    #[serde(rename = "3")]
    Supercritical,
    /// `1 < p_j < q_j ≤ 2`, `r > Σ(1/p_j - 1/q_j)`.
    #[serde(rename = "low-target")]
    LowTarget,
    /// `2 ≤ p_j < q_j < ∞`, `r > m/2`.
    #[serde(rename = "high-source")]
    HighSource,
}

impl Regime {
    pub fn label(self) -> &'static str {
        match self {
            Regime::Subcritical => "1",
            Regime::Critical => "2",
            Regime::Supercritical => "3",
            Regime::LowTarget => "low-target",
            Regime::HighSource => "high-source",
        }
    }

    /// True for the three regimes handled by the block-budget scheme.
    pub fn has_budget(self) -> bool {
        matches!(self, Regime::Subcritical | Regime::Critical | Regime::Supercritical)
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Predicted `e_M ≍ M^{power} (log M)^{log_power}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateExponent {
    pub power: f64,
    pub log_power: f64,
}

fn sum_inv(v: &[f64]) -> f64 {
    v.iter().map(|x| 1.0 / x).sum()
}

/// Classifies `(p̄, q̄, r)` by the hypotheses of the supported decay regimes.
///
/// When every `p_j = 2` both the supercritical regime and the high-source
/// regime apply; they predict the same exponent and the former is reported.
pub fn regime_of(p: &[f64], q: &[f64], r: f64) -> Result<Regime> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch { expected: p.len(), actual: q.len() });
    }
    if p.is_empty() {
        return Err(Error::InvalidParameter("empty exponent vectors".into()));
    }
    if p.iter().chain(q).any(|&x| !(x > 1.0 && x.is_finite())) {
        return Err(Error::Domain("exponents must lie in (1, ∞)".into()));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Domain(format!("smoothness r = {r} must be positive")));
    }
    let m = p.len() as f64;
    let sp = sum_inv(p);
    let gap = sp - sum_inv(q);

    let mixed = p.iter().all(|&x| x <= 2.0) && q.iter().all(|&x| x > 2.0);
    if mixed {
        if r <= gap {
            return Err(Error::Unsupported(format!(
                "r = {r} must exceed Σ(1/p_j - 1/q_j) = {gap}"
            )));
        }
        return Ok(if (r - sp).abs() <= CRITICAL_TOLERANCE {
            Regime::Critical
        } else if r < sp {
            Regime::Subcritical
        } else {
            Regime::Supercritical
        });
    }
    let low = p.iter().zip(q).all(|(&pj, &qj)| pj < qj && qj <= 2.0);
    if low {
        if r <= gap {
            return Err(Error::Unsupported(format!(
                "r = {r} must exceed Σ(1/p_j - 1/q_j) = {gap}"
            )));
        }
        return Ok(Regime::LowTarget);
    }
    let high = p.iter().zip(q).all(|(&pj, &qj)| pj >= 2.0 && pj < qj);
    if high {
        if r <= m / 2.0 {
            return Err(Error::Unsupported(format!("r = {r} must exceed m/2 = {}", m / 2.0)));
        }
        return Ok(Regime::HighSource);
    }
    Err(Error::Unsupported(
        "need 1 < p_j ≤ 2 < q_j, 1 < p_j < q_j ≤ 2, or 2 ≤ p_j < q_j on every axis".into(),
    ))
}

/// Decay exponent of `e_M` predicted for the parameter set.
pub fn theorem_exponent(p: &[f64], q: &[f64], r: f64, tau: Tau) -> Result<RateExponent> {
    let regime = regime_of(p, q, r)?;
    let m = p.len() as f64;
    let sp = sum_inv(p);
    let sq = sum_inv(q);
    let power = match regime {
        Regime::Subcritical => -(r - (sp - sq)) / (2.0 * sq),
        Regime::Critical => -0.5,
        Regime::Supercritical => -(r + m / 2.0 - sp) / m,
        Regime::LowTarget => -(r - (sp - sq)) / m,
        Regime::HighSource => -r / m,
    };
    let log_power = if regime == Regime::Critical { 1.0 - tau.recip() } else { 0.0 };
    Ok(RateExponent { power, log_power })
}

/// Dilation factor `α` of the budget window `n ≤ s < αn`.
pub fn budget_alpha(regime: Regime, p: &[f64], q: &[f64], r: f64) -> Result<f64> {
    let m = p.len() as f64;
    let sp = sum_inv(p);
    let sq = sum_inv(q);
    match regime {
        Regime::Subcritical | Regime::Critical => Ok(m / (2.0 * sq)),
        Regime::Supercritical => Ok((r + m / 2.0 - sp) / (r + sq - sp)),
        other => Err(Error::Unsupported(format!("no block budget for regime {other}"))),
    }
}

/// The `M` frequencies of largest modulus, ties broken lexicographically.
pub fn greedy_select(spectrum: &Spectrum, m_terms: usize) -> FreqSet {
    let entries: Vec<(&[i64], f64)> = spectrum.iter().map(|(k, a)| (k, a.norm())).collect();
    let mut order: Vec<usize> = (0..entries.len()).collect();
    order.sort_unstable_by(|&i, &j| {
        entries[j].1.total_cmp(&entries[i].1).then_with(|| entries[i].0.cmp(entries[j].0))
    });
    order.truncate(m_terms);
    FreqSet::from_freqs(spectrum.dims(), order.into_iter().map(|i| entries[i].0))
        .expect("frequencies share the spectrum dimension")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    Greedy,
    BlockBudget,
    Truncation,
}

impl std::str::FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "greedy" => Ok(SchemeKind::Greedy),
            "blockbudget" | "budget" => Ok(SchemeKind::BlockBudget),
            "truncation" => Ok(SchemeKind::Truncation),
            other => Err(Error::Parse(format!("unknown scheme `{other}`"))),
        }
    }
}

/// How the `N_s` harmonics inside a budget block are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BlockSelection {
    /// Largest moduli; coefficients copied from the source.
    Greedy,
    /// Draws `N_s` frequencies with probability `∝ |a_k|` (with
    /// replacement) and assigns each drawn `k` the coefficient
    /// `sign(a_k) ‖δ_s‖_{ℓ¹} c_k / N_s`, where `c_k` counts its draws. The
    /// residual then has `L_q` size `O((#ρ(s)/N_s)^{1/2} ‖δ_s‖₂)` even for
    /// blocks whose moduli are all equal, where greedy selection leaves a
    /// peaked remainder. Per block, whichever of this and the greedy choice
    /// has the smaller target-norm residual is kept.
    Sampled { seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeSpec {
    pub kind: SchemeKind,
    pub source: BesovParams,
    pub target: LorentzExponents,
    pub terms: usize,
    pub selection: BlockSelection,
    pub oversample: usize,
}

impl SchemeSpec {
    pub fn new(kind: SchemeKind, source: BesovParams, target: LorentzExponents, terms: usize) -> Self {
        Self { kind, source, target, terms, selection: BlockSelection::Greedy, oversample: 4 }
    }

    pub fn with_selection(mut self, selection: BlockSelection) -> Self {
        self.selection = selection;
        self
    }

    pub fn with_terms(mut self, terms: usize) -> Self {
        self.terms = terms;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockBudget {
    pub block: u32,
    pub budget: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetPlan {
    pub n: u32,
    pub alpha: f64,
    pub regime: Regime,
    pub budgets: Vec<BlockBudget>,
    /// `Σ_{s<n} #ρ(s) + Σ N_s`.
    pub total_count: u64,
    /// `total_count / 2^{nm}`.
    pub count_constant: f64,
    /// Set when the window is empty and the plan degenerates to truncation.
    pub fallback: Option<String>,
}

impl BudgetPlan {
    /// First block above the window.
    pub fn window_end(&self) -> u32 {
        self.budgets.last().map_or(self.n, |b| b.block + 1)
    }
}

/// Largest `n` with `2^{nm} < M`.
pub fn level_for(terms: usize, dims: usize) -> u32 {
    let mut n = 0u32;
    while ((n + 1) as usize * dims) < usize::BITS as usize && (1usize << ((n + 1) as usize * dims)) < terms {
        n += 1;
    }
    n
}

fn floor_plus_one(log2_value: f64) -> u64 {
    let v = log2_value.exp2().floor();
    if v >= u64::MAX as f64 {
        u64::MAX
    } else {
        v as u64 + 1
    }
}

/// Harmonic budgets `N_s = [·] + 1` for the block-budget scheme.
pub fn budget_plan(
    terms: usize,
    params: &BesovParams,
    target: &LorentzExponents,
    profile: &BlockNormProfile,
) -> Result<BudgetPlan> {
    let dims = params.dims();
    if target.dims() != dims {
        return Err(Error::DimensionMismatch { expected: dims, actual: target.dims() });
    }
    if terms < 1usize << dims {
        return Err(Error::InvalidParameter(format!("M = {terms} must be at least 2^m = {}", 1usize << dims)));
    }
    let p = params.base.p();
    let q = target.p();
    let r = params.r;
    let regime = regime_of(p, q, r)?;
    if !regime.has_budget() {
        return Err(Error::Unsupported(format!("regime {regime} has no block-budget scheme")));
    }
    let alpha = budget_alpha(regime, p, q, r)?;
    let n = level_for(terms, dims);
    let reach = alpha * n as f64;
    if ((reach + 1e-9).floor() as u32) <= n {
        return Err(Error::EmptyRange { n, alpha });
    }
    let end = (reach - 1e-9).ceil() as u32;
    let m = dims as f64;
    let nf = n as f64;
    let sp = params.base.sum_inv_p();
    let budgets = (n..end)
        .map(|s| {
            let sf = s as f64;
            let budget = match regime {
                Regime::Subcritical => {
                    floor_plus_one(nf * m + sf * (sp - r) - nf * alpha * (sp - r))
                }
                Regime::Critical => {
                    let v = (nf * m).exp2() * nf.powf(params.tau.recip() - 1.0) * profile.get(s) * (sf * r).exp2();
                    if v >= u64::MAX as f64 {
                        u64::MAX
                    } else {
                        v.floor() as u64 + 1
                    }
                }
                Regime::Supercritical => floor_plus_one(nf * (r - sp + m) - sf * (r - sp)),
                _ => unreachable!("checked by has_budget"),
            };
            BlockBudget { block: s, budget }
        })
        .collect::<Vec<_>>();
    let base = if n == 0 { 0 } else { cumulative_cardinality(n - 1, dims) };
    let total_count = budgets.iter().fold(base, |acc, b| acc.saturating_add(b.budget));
    let count_constant = total_count as f64 / (nf * m).exp2();
    Ok(BudgetPlan { n, alpha, regime, budgets, total_count, count_constant, fallback: None })
}

/// A sparse approximant `P(Ω_M)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Approximant {
    pub support: FreqSet,
    pub coefficients: Spectrum,
    pub plan: Option<BudgetPlan>,
    /// Truncation level when the scheme keeps whole blocks `0..=n`.
    pub truncation_level: Option<i64>,
}

impl Approximant {
    fn from_coefficients(coefficients: Spectrum) -> Self {
        Self { support: coefficients.support(), coefficients, plan: None, truncation_level: None }
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }
}

/// Largest `n` with `(2^{n+1} - 1)^m ≤ M`, or `-1` when even block 0 does not fit.
pub fn truncation_level(terms: usize, dims: usize) -> i64 {
    let mut n: i64 = -1;
    while n < 62 && cumulative_cardinality((n + 1) as u32, dims) as u128 <= terms as u128 {
        n += 1;
    }
    n
}

fn truncate(spectrum: &Spectrum, level: i64) -> Spectrum {
    spectrum.filter(|k, _| (block_of(k) as i64) <= level)
}

fn sampled_block(block: &Spectrum, budget: usize, seed: u64, s: u32) -> Spectrum {
    let weights: Vec<f64> = block.coeffs().iter().map(|a| a.norm()).collect();
    let l1: f64 = weights.iter().sum();
    let mut cumulative = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for w in &weights {
        acc += w;
        cumulative.push(acc);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ u64::from(s).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let mut counts = vec![0u64; weights.len()];
    for _ in 0..budget {
        let u = rng.random::<f64>() * l1;
        let idx = cumulative.partition_point(|&c| c <= u).min(weights.len() - 1);
        counts[idx] += 1;
    }
    let scale = l1 / budget as f64;
    let entries = block
        .iter()
        .zip(&counts)
        .filter(|(_, &c)| c > 0)
        .map(|((k, a), &c)| (k.to_vec(), a / a.norm() * scale * c as f64));
    Spectrum::from_entries(block.dims(), entries).expect("drawn coefficients are nonzero and distinct")
}

fn residual_norm(
    block: &Spectrum,
    approx: &Spectrum,
    s: u32,
    target: &LorentzExponents,
    oversample: usize,
) -> Result<f64> {
    let residual = block.sub(approx);
    if residual.is_empty() {
        return Ok(0.0);
    }
    let sizes = crate::classes::block_grid(s, block.dims(), oversample);
    mixed_lorentz(&synthesize(&residual, &sizes)?, target)
}

fn select_in_block(
    block: &Spectrum,
    budget: u64,
    s: u32,
    spec: &SchemeSpec,
) -> Result<Spectrum> {
    if budget as usize >= block.len() {
        return Ok(block.clone());
    }
    let budget = budget as usize;
    let greedy = block.restrict(&greedy_select(block, budget));
    match spec.selection {
        BlockSelection::Greedy => Ok(greedy),
        BlockSelection::Sampled { seed } => {
            let sampled = sampled_block(block, budget, seed, s);
            let g = residual_norm(block, &greedy, s, &spec.target, spec.oversample)?;
            let r = residual_norm(block, &sampled, s, &spec.target, spec.oversample)?;
            Ok(if r < g { sampled } else { greedy })
        }
    }
}

/// Builds the approximant of `spectrum` prescribed by `spec`.
pub fn build_approximant(
    spectrum: &Spectrum,
    spec: &SchemeSpec,
    profile: &BlockNormProfile,
) -> Result<Approximant> {
    let dims = spectrum.dims();
    if spec.source.dims() != dims {
        return Err(Error::DimensionMismatch { expected: spec.source.dims(), actual: dims });
    }
    match spec.kind {
        SchemeKind::Greedy => {
            let support = greedy_select(spectrum, spec.terms);
            let coefficients = spectrum.restrict(&support);
            Ok(Approximant { support, coefficients, plan: None, truncation_level: None })
        }
        SchemeKind::Truncation => {
            let level = truncation_level(spec.terms, dims);
            let mut a = Approximant::from_coefficients(truncate(spectrum, level));
            a.truncation_level = Some(level);
            Ok(a)
        }
        SchemeKind::BlockBudget => {
            let plan = match budget_plan(spec.terms, &spec.source, &spec.target, profile) {
                Ok(plan) => plan,
                Err(Error::EmptyRange { n, alpha }) => {
                    let regime = regime_of(spec.source.base.p(), spec.target.p(), spec.source.r)?;
                    let mut a = Approximant::from_coefficients(truncate(spectrum, n as i64));
                    a.truncation_level = Some(n as i64);
                    a.plan = Some(BudgetPlan {
                        n,
                        alpha,
                        regime,
                        budgets: Vec::new(),
                        total_count: cumulative_cardinality(n, dims),
                        count_constant: cumulative_cardinality(n, dims) as f64 / ((n as usize * dims) as f64).exp2(),
                        fallback: Some(format!("empty window n ≤ s < {alpha}·{n}; truncated at block {n}")),
                    });
                    return Ok(a);
                }
                Err(e) => return Err(e),
            };
            let blocks = spectrum.blocks();
            let mut kept = Spectrum::zero(dims);
            for (s, block) in blocks.iter().enumerate() {
                let s = s as u32;
                if block.is_empty() || s >= plan.window_end() {
                    continue;
                }
                if s < plan.n {
                    kept = kept.add(block);
                    continue;
                }
                let budget = plan.budgets[(s - plan.n) as usize].budget;
                kept = kept.add(&select_in_block(block, budget, s, spec)?);
            }
            let mut a = Approximant::from_coefficients(kept);
            a.plan = Some(plan);
            Ok(a)
        }
    }
}

/// `‖f - A‖` in the target norm, synthesized on the grid of `f`.
pub fn approximation_error(
    spectrum: &Spectrum,
    approximant: &Approximant,
    target: &LorentzExponents,
    oversample: usize,
) -> Result<f64> {
    let residual = spectrum.sub(&approximant.coefficients);
    if residual.is_empty() {
        return Ok(0.0);
    }
    let max_freq: Vec<u64> = spectrum
        .max_freq()
        .iter()
        .zip(approximant.coefficients.max_freq())
        .map(|(a, b)| (*a).max(b))
        .collect();
    let sizes = crate::spectral::grid_sizes_for(&max_freq, oversample);
    mixed_lorentz(&synthesize(&residual, &sizes)?, target)
}

/// Error of an arbitrary residual spectrum, on its own oversampled grid.
pub fn residual_error(residual: &Spectrum, target: &LorentzExponents, oversample: usize) -> Result<f64> {
    if residual.is_empty() {
        return Ok(0.0);
    }
    mixed_lorentz(&synthesize_oversampled(residual, oversample)?, target)
}

/// Count of lattice frequencies in block `s` that `spectrum` leaves empty.
pub fn block_vacancy(spectrum: &Spectrum, s: u32) -> u64 {
    let present = spectrum.iter().filter(|(k, _)| block_of(k) == s).count() as u64;
    block_cardinality(s, spectrum.dims()) - present
}
