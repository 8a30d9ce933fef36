//! Mixed-norm Lorentz functionals of multivariate trigonometric polynomials
//! and M-term approximation of Besov/Nikol'skii class members.
//!
//! Modules, bottom-up:
//!
//! * [`spectral`]: grids, sparse spectra, FFT analysis/synthesis, dyadic blocks.
//! * [`lorentz`]: rearrangements and mixed Lorentz / Lebesgue norms.
//! * [`classes`]: block-norm profiles, Besov seminorms, normalization.
//! * [`mterm`]: greedy, block-budget and truncation approximants; decay exponents.
//! * [`testfns`]: extremal and seeded random test functions.
//! * [`verify`]: inequality checks, dual certificates, rate fits.
//! * [`io`]: binary and CSV file formats.

pub mod classes;
pub mod error;
pub mod io;
pub mod lorentz;
pub mod mterm;
pub mod spectral;
pub mod testfns;
pub mod verify;

pub use num_complex::Complex64;

pub use classes::{BesovParams, BlockNormProfile, Tau};
pub use error::{Error, Result};
pub use lorentz::{LorentzExponents, StepRearrangement};
pub use mterm::{Approximant, BlockSelection, BudgetPlan, RateExponent, Regime, SchemeKind, SchemeSpec};
pub use spectral::{FreqSet, GridFunction, Spectrum};
pub use testfns::{BlockShape, LacunaryFamily, SeededSampler};
pub use verify::{InequalityReport, RateFitResult};
