//! Seeded inequality suites behind `mterm check`.

use clap::ValueEnum;
use mterm_core::mterm::{approximation_error, greedy_select, Approximant};
use mterm_core::verify::{check_different_metrics, check_lemma1, dual_certificate, littlewood_paley_ratio};
use mterm_core::{InequalityReport, LorentzExponents, Result, SeededSampler, Spectrum};
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    LittlewoodPaley,
    Metrics,
    Lemma1,
    Certificate,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteEntry {
    pub label: String,
    #[serde(flatten)]
    pub report: InequalityReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub entries: Vec<SuiteEntry>,
    /// Suite-specific scalars (closed-form comparisons, worst violations).
    pub extras: Vec<(String, f64)>,
}

fn report(label: impl Into<String>, ratios: Vec<f64>, seed: u64) -> SuiteEntry {
    SuiteEntry { label: label.into(), report: InequalityReport::from_ratios(&ratios, seed) }
}

fn trial_spectra(seed: u64, trials: usize, max_freq: &[u64], count: usize) -> Vec<Spectrum> {
    let base = SeededSampler::new(seed);
    (0..trials).map(|i| base.derive(i as u64).spectrum(max_freq, count)).collect()
}

pub fn run(suite: Suite, seed: u64, trials: usize, oversample: usize) -> Result<SuiteReport> {
    let mut entries = Vec::new();
    let mut extras = Vec::new();
    match suite {
        Suite::LittlewoodPaley => {
            for p in [1.5, 3.0] {
                for max_freq in [vec![64], vec![8, 8]] {
                    let spectra = trial_spectra(seed, trials, &max_freq, 12);
                    let ratios = spectra
                        .par_iter()
                        .map(|s| littlewood_paley_ratio(s, p, oversample))
                        .collect::<Result<Vec<_>>>()?;
                    entries.push(report(format!("p={p} m={}", max_freq.len()), ratios, seed));
                }
            }
        }
        Suite::Metrics => {
            let from = LorentzExponents::lebesgue(vec![1.5])?;
            let to = LorentzExponents::lebesgue(vec![4.0])?;
            let base = SeededSampler::new(seed);
            let ratios = (0..trials)
                .into_par_iter()
                .map(|i| {
                    let mut rng = base.derive(i as u64);
                    let degree = rng.range(4, 64) as u64;
                    let t = rng.spectrum(&[degree], 8);
                    check_different_metrics(&t, &[degree], &from, &to, oversample)
                })
                .collect::<Result<Vec<_>>>()?;
            entries.push(report("p=1.5 q=4 degrees 4..64", ratios, seed));

            let constant = Spectrum::from_entries(1, [([0], 1.0.into())])?;
            let degree = 16u64;
            let ratio = check_different_metrics(&constant, &[degree], &from, &to, oversample)?;
            let closed = to.unit_constant_norm() / ((degree as f64).powf(1.0 / 1.5 - 0.25) * from.unit_constant_norm());
            extras.push(("constant_ratio".into(), ratio));
            extras.push(("constant_closed_form".into(), closed));
        }
        Suite::Lemma1 => {
            let target = LorentzExponents::lebesgue(vec![4.0])?;
            for factor in [2usize, 4, 8] {
                let spectra = trial_spectra(seed ^ factor as u64, trials, &[256], 64);
                let ratios = spectra
                    .par_iter()
                    .map(|s| check_lemma1(s, s.len() / factor, &target, oversample))
                    .collect::<Result<Vec<_>>>()?;
                entries.push(report(format!("q=4 N/M={factor}"), ratios, seed));
            }
        }
        Suite::Certificate => {
            let target = LorentzExponents::lebesgue(vec![4.0])?;
            let dual = target.dual();
            let base = SeededSampler::new(seed);
            let pairs = (0..trials)
                .into_par_iter()
                .map(|i| {
                    let mut rng = base.derive(i as u64);
                    let s = rng.spectrum(&[32], 16);
                    let terms = rng.range(0, s.len() as i64 - 1) as usize;
                    let support = greedy_select(&s, terms);
                    let coefficients = s.restrict(&support);
                    let a = Approximant { support, coefficients, plan: None, truncation_level: None };
                    let err = approximation_error(&s, &a, &target, oversample)?;
                    let cert = dual_certificate(&s, &a.support, &dual, oversample)?;
                    Ok((cert, err))
                })
                .collect::<Result<Vec<_>>>()?;
            let ratios = pairs.iter().map(|(c, e)| c / e).collect();
            entries.push(report("certificate / error, q=4", ratios, seed));
            let worst = pairs.iter().map(|(c, e)| c - e).fold(f64::NEG_INFINITY, f64::max);
            extras.push(("max_certificate_minus_error".into(), worst));
        }
    }
    Ok(SuiteReport { suite, entries, extras })
}
