//! Balanced homodyne detection with arrays of on-off click detectors.
//!
//! A signal mode is mixed with a coherent local oscillator on a 50:50 beam
//! splitter and each output is measured by an array of `N` avalanche
//! photodiodes. This crate computes the exact joint click statistics, the
//! normally ordered moments of the nonlinear click quadrature `X(phi)`, the
//! matrix-of-moments nonclassicality witnesses built from them, their
//! average over classical LO noise, and finite-shot Monte Carlo estimates.
//!
//! The moments are available through two algebraically independent routes:
//! sampling formulas applied to click counts ([`moments::x_moments_from_counts`])
//! and the analytic POVM expansion over photon numbers
//! ([`moments::x_moments_analytic`]).

#![allow(clippy::needless_range_loop)]

pub mod detector;
pub mod error;
pub mod exec;
pub mod fock;
pub mod interferometer;
pub mod lo_noise;
pub mod moments;
pub mod montecarlo;
mod sum;
pub mod witness;

pub use detector::{
    ClickDistribution, DetectorConfig, DifferenceDistribution, JointClickDistribution,
};
pub use error::{Error, Result};
pub use exec::Execution;
pub use fock::{FockVector, PhotonDistribution, Signal, DEFAULT_TRUNCATION_BUDGET};
pub use interferometer::{JointPhotonDistribution, LocalOscillator, TwoModeState};
pub use moments::MomentSet;
pub use montecarlo::{ClickHistogram, EstimateWithError, WitnessEstimate};
pub use witness::{MomentMatrix, Verdict, WitnessReport};
