//! Numerical checks of the supporting inequalities, dual lower bounds, and
//! rate sweeps fitted on log-log axes.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classes::block_norm_profile;
use crate::error::{Error, Result};
use crate::lorentz::{mixed_lebesgue, mixed_lorentz, LorentzExponents};
use crate::mterm::{
    approximation_error, build_approximant, greedy_select, Approximant, RateExponent, SchemeSpec,
};
use crate::spectral::{grid_sizes_for, synthesize, FreqSet, GridFunction, Spectrum};

/// Errors below this are treated as the quadrature floor.
pub const ERROR_FLOOR: f64 = 1e-10;

/// Least-squares line through `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::DegenerateFit(format!("need at least two paired points, got {}", x.len())));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    Ok(LineFit { slope, intercept, r_squared })
}

/// Fits `log₂ error` against `log₂ M`.
pub fn loglog_fit(points: &[(f64, f64)]) -> Result<LineFit> {
    if let Some(&(m, e)) = points.iter().find(|(_, e)| !(*e >= ERROR_FLOOR)) {
        return Err(Error::DegenerateFit(format!("error {e} at M = {m} is below the quadrature floor")));
    }
    let x: Vec<f64> = points.iter().map(|p| p.0.log2()).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1.log2()).collect();
    linear_fit(&x, &y)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub trials: usize,
    pub max_ratio: f64,
    pub min_ratio: f64,
    pub seed: u64,
}

impl InequalityReport {
    pub fn from_ratios(ratios: &[f64], seed: u64) -> Self {
        Self {
            trials: ratios.len(),
            max_ratio: ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            min_ratio: ratios.iter().copied().fold(f64::INFINITY, f64::min),
            seed,
        }
    }
}

/// `‖f‖_p / ‖(Σ_s |δ_s f|²)^{1/2}‖_p` on the oversampled grid of `f`.
pub fn littlewood_paley_ratio(spectrum: &Spectrum, p: f64, oversample: usize) -> Result<f64> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::Domain(format!("p = {p} must lie in (1, ∞)")));
    }
    if spectrum.is_empty() {
        return Err(Error::ZeroFunction);
    }
    let dims = spectrum.dims();
    let sizes = grid_sizes_for(&spectrum.max_freq(), oversample);
    let f = synthesize(spectrum, &sizes)?;
    let mut square = vec![0.0; f.len()];
    for block in spectrum.blocks().iter().filter(|b| !b.is_empty()) {
        let g = synthesize(block, &sizes)?;
        for (acc, z) in square.iter_mut().zip(g.samples()) {
            *acc += z.norm_sqr();
        }
    }
    let square = GridFunction::new(
        sizes,
        square.into_iter().map(|v| num_complex::Complex64::new(v.sqrt(), 0.0)).collect(),
    )?;
    let p = vec![p; dims];
    Ok(mixed_lebesgue(&f, &p)? / mixed_lebesgue(&square, &p)?)
}

pub fn check_littlewood_paley(spectra: &[Spectrum], p: f64, oversample: usize, seed: u64) -> Result<InequalityReport> {
    let ratios = spectra
        .par_iter()
        .map(|s| littlewood_paley_ratio(s, p, oversample))
        .collect::<Result<Vec<_>>>()?;
    Ok(InequalityReport::from_ratios(&ratios, seed))
}

/// `‖T‖_{to} / (∏ n_j^{1/p_j - 1/q_j} ‖T‖_{from})` for `T` of degree `≤ n̄`.
pub fn check_different_metrics(
    t: &Spectrum,
    degrees: &[u64],
    from: &LorentzExponents,
    to: &LorentzExponents,
    oversample: usize,
) -> Result<f64> {
    let dims = t.dims();
    for (len, e) in [(degrees.len(), from.dims()), (to.dims(), from.dims())] {
        if len != dims || e != dims {
            return Err(Error::DimensionMismatch { expected: dims, actual: len.max(e) });
        }
    }
    if from.p().iter().zip(to.p()).any(|(p, q)| !(p < q)) {
        return Err(Error::InvalidParameter("need p_j < q_j on every axis".into()));
    }
    if degrees.contains(&0) {
        return Err(Error::InvalidParameter("degrees must be positive".into()));
    }
    for (axis, (&f, &n)) in t.max_freq().iter().zip(degrees).enumerate() {
        if f > n {
            return Err(Error::DegreeViolation { axis, max_freq: f, degree: n });
        }
    }
    if t.is_empty() {
        return Err(Error::ZeroFunction);
    }
    let sizes = grid_sizes_for(degrees, oversample);
    let grid = synthesize(t, &sizes)?;
    let factor: f64 = degrees
        .iter()
        .zip(from.p().iter().zip(to.p()))
        .map(|(&n, (p, q))| (n as f64).powf(1.0 / p - 1.0 / q))
        .product();
    Ok(mixed_lorentz(&grid, to)? / (factor * mixed_lorentz(&grid, from)?))
}

/// `√((2π)^m Σ|a_k|²)`.
pub fn l2_norm(spectrum: &Spectrum) -> f64 {
    ((2.0 * PI).powi(spectrum.dims() as i32) * spectrum.energy()).sqrt()
}

/// Greedy residual in `target` divided by `(N/M)^{1/2} ‖S‖₂`.
pub fn check_lemma1(spectrum: &Spectrum, terms: usize, target: &LorentzExponents, oversample: usize) -> Result<f64> {
    let n = spectrum.len();
    if target.p().iter().any(|&q| q < 2.0) {
        return Err(Error::InvalidParameter("target exponents must be at least 2".into()));
    }
    if target.dims() != spectrum.dims() {
        return Err(Error::DimensionMismatch { expected: spectrum.dims(), actual: target.dims() });
    }
    if terms == 0 || terms > n {
        return Err(Error::InvalidParameter(format!("need 1 ≤ M ≤ N = {n}, got M = {terms}")));
    }
    let kept = spectrum.restrict(&greedy_select(spectrum, terms));
    let approx = Approximant {
        support: kept.support(),
        coefficients: kept,
        plan: None,
        truncation_level: None,
    };
    let err = approximation_error(spectrum, &approx, target, oversample)?;
    Ok(err / ((n as f64 / terms as f64).sqrt() * l2_norm(spectrum)))
}

/// Lower bound on `‖f - P‖_{target}` over every `P` supported in `omega`.
///
/// Pairs `f` with `conj` of its residual off `omega`, which annihilates every
/// `Ω`-supported polynomial; the pairing `(2π)^m Σ_{k∉Ω} |a_k|²` is exact,
/// and Hölder's inequality (constant 1 for the unnormalized Lorentz
/// functional) divides by the dual norm of the residual. Both norms are taken
/// on the grid that [`approximation_error`] uses.
pub fn dual_certificate(
    spectrum: &Spectrum,
    omega: &FreqSet,
    dual_target: &LorentzExponents,
    oversample: usize,
) -> Result<f64> {
    let residual = spectrum.without(omega);
    if residual.is_empty() {
        return Ok(0.0);
    }
    let sizes = grid_sizes_for(&spectrum.max_freq(), oversample);
    let dual_norm = mixed_lorentz(&synthesize(&residual, &sizes)?, dual_target)?;
    Ok((2.0 * PI).powi(spectrum.dims() as i32) * residual.energy() / dual_norm)
}

/// One point of a rate sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub terms: usize,
    pub error: f64,
    pub support: usize,
    pub source_modes: usize,
    pub certificate: f64,
    pub plan_count: Option<u64>,
    pub grid: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFitResult {
    pub points: Vec<RatePoint>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub predicted_slope: f64,
    pub log_power: f64,
    /// Slope of `log₂(error · M^{-power})` against `log₂ M`.
    pub compensated_slope: f64,
    /// Slope of `log₂(error · M^{-power})` against `log₂ log₂ M`
    /// (informative only when `log_power ≠ 0`).
    pub log_slope: Option<f64>,
}

impl RateFitResult {
    pub fn relative_deviation(&self) -> f64 {
        ((self.slope - self.predicted_slope) / self.predicted_slope).abs()
    }

    pub fn within(&self, tolerance: f64) -> bool {
        self.relative_deviation() <= tolerance
    }
}

/// Builds, for each `M`, the family member, its approximant and its error,
/// then fits the decay.
///
/// `family(M)` may depend on `M` (the extremal functions do); `Ms` are sorted
/// before fitting.
pub fn rate_experiment<F>(
    family: F,
    scheme: &SchemeSpec,
    ms: &[usize],
    predicted: RateExponent,
) -> Result<RateFitResult>
where
    F: Fn(usize) -> Result<Spectrum> + Sync,
{
    let mut ms = ms.to_vec();
    ms.sort_unstable();
    ms.dedup();
    if ms.len() < 4 {
        return Err(Error::DegenerateFit(format!("need at least 4 values of M, got {}", ms.len())));
    }
    let dual = scheme.target.dual();
    let points = ms
        .par_iter()
        .map(|&terms| {
            let f = family(terms)?;
            let profile = block_norm_profile(&f, &scheme.source.base, scheme.oversample)?;
            let spec = scheme.clone().with_terms(terms);
            let a = build_approximant(&f, &spec, &profile)?;
            let error = approximation_error(&f, &a, &scheme.target, scheme.oversample)?;
            let certificate = dual_certificate(&f, &a.support, &dual, scheme.oversample)?;
            Ok(RatePoint {
                terms,
                error,
                support: a.len(),
                source_modes: f.len(),
                certificate,
                plan_count: a.plan.as_ref().map(|p| p.total_count),
                grid: grid_sizes_for(&f.max_freq(), scheme.oversample),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let pairs: Vec<(f64, f64)> = points.iter().map(|p| (p.terms as f64, p.error)).collect();
    let fit = loglog_fit(&pairs)?;
    let x: Vec<f64> = pairs.iter().map(|p| p.0.log2()).collect();
    let compensated: Vec<f64> = pairs.iter().map(|(m, e)| e.log2() - predicted.power * m.log2()).collect();
    let compensated_slope = linear_fit(&x, &compensated)?.slope;
    let log_slope = if predicted.log_power != 0.0 {
        let lx: Vec<f64> = x.iter().map(|v| v.log2()).collect();
        Some(linear_fit(&lx, &compensated)?.slope)
    } else {
        None
    };
    Ok(RateFitResult {
        points,
        slope: fit.slope,
        intercept: fit.intercept,
        r_squared: fit.r_squared,
        predicted_slope: predicted.power,
        log_power: predicted.log_power,
        compensated_slope,
        log_slope,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn exact_power_law() {
        let fit = loglog_fit(&[(1.0, 1.0), (2.0, 0.5), (4.0, 0.25)]).unwrap();
        assert!((fit.slope + 1.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn floor_is_degenerate() {
        assert!(matches!(loglog_fit(&[(1.0, 1.0), (2.0, 0.0)]), Err(Error::DegenerateFit(_))));
    }

    #[test]
    fn lp_single_harmonic() {
        let s = Spectrum::from_entries(1, [([3], Complex64::new(1.0, 0.0))]).unwrap();
        assert!((littlewood_paley_ratio(&s, 3.0, 4).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn certificate_for_single_harmonic() {
        let s = Spectrum::from_entries(1, [([1], Complex64::new(1.0, 0.0))]).unwrap();
        let dual = LorentzExponents::lebesgue(vec![4.0]).unwrap().dual();
        assert_eq!(dual_certificate(&s, &s.support(), &dual, 4).unwrap(), 0.0);
        let bound = dual_certificate(&s, &FreqSet::empty(1), &dual, 4).unwrap();
        let direct = (2.0 * PI).powf(0.25);
        assert!((bound - direct).abs() < 1e-12);
    }
}
