//! Finite-window simulation of planar lattice dynamical systems of algebraic
//! origin and of their autocorrelation, diffraction and higher correlations.
//!
//! Four systems are covered: i.i.d. (Bernoulli) weights, Ledrappier's shift,
//! the (×2,×3)-shift and the Rudin–Shapiro product comb. Each comes with a
//! sampler, windowed estimators, and exact ensemble values to compare against.

pub mod correlations;
pub mod diffraction;
pub mod error;
mod fft;
pub mod io;
pub mod job;
pub mod lattice;
pub mod oracles;
pub mod phase;
pub mod samplers;

pub use correlations::{
    autocorr_coefficient, autocorr_table, autocorr_table_direct, correlation, correlation_convergence,
    CorrelationQuery, CorrelationTable, TableEntry,
};
pub use diffraction::{
    bragg_estimate, expected_spectrum, flatness_report, periodogram, FlatnessReport, PeriodogramGrid,
    TheoreticalSpectrum,
};
pub use error::{Error, Result};
pub use job::{run, Command, JobSpec, Params, RunOutcome, VerifyConfig, VerifyReport};
pub use lattice::{Alphabet, ComplexWindow, LatticeVector, SiteValues, UnitWeight, WeightLaw, WeightWindow};
pub use num_complex::Complex64;
pub use oracles::{
    bernoulli_corr_oracle, expected_eta, ledrappier_bruteforce, ledrappier_corr_oracle, times23_corr_oracle, Gf2Poly,
    OracleResult,
};
pub use phase::PhaseFixedPoint;
pub use samplers::{
    rudin_shapiro_1d, sample_bernoulli, sample_ledrappier, sample_rudin_shapiro_2d, sample_times23, SamplerSpec, System,
};
