//! Truncated single-mode Fock space.
//!
//! Every constructor checks the retained probability mass against a
//! truncation budget and fails instead of renormalising: a silently
//! renormalised state biases every normally ordered moment computed from it.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial;

use crate::error::{Error, Result};
use crate::sum::compensated;

/// Default bound on the probability mass allowed to fall outside the cutoff.
pub const DEFAULT_TRUNCATION_BUDGET: f64 = 1e-10;

/// Rounding allowance when comparing a compensated norm against `1 - budget`.
pub(crate) const NORM_SLACK: f64 = 64.0 * f64::EPSILON;

/// Automatic cutoffs keep only this fraction of the budget for the signal,
/// leaving room for the interferometer's own truncation.
const AUTO_CUTOFF_FRACTION: f64 = 0.1;

const MAX_AUTO_CUTOFF: usize = 1 << 20;

/// Pure single-mode state with amplitudes over photon numbers `0..=cutoff`.
#[derive(Debug, Clone, PartialEq)]
pub struct FockVector {
    amplitudes: Vec<Complex64>,
    budget: f64,
}

impl FockVector {
    /// Wraps raw amplitudes, checking the norm against `budget`.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>, budget: f64) -> Result<Self> {
        check_budget(budget)?;
        if amplitudes.is_empty() {
            return Err(Error::arg(
                "a Fock vector needs at least the vacuum amplitude",
            ));
        }
        let state = FockVector { amplitudes, budget };
        let norm = state.retained_norm();
        if !norm.is_finite() || norm > 1.0 + 1e-12 {
            return Err(Error::Numerical(format!("state norm {norm} exceeds 1")));
        }
        // A summed norm cannot resolve deficits below its own rounding error.
        let slack = NORM_SLACK;
        if norm < 1.0 - budget - slack {
            return Err(Error::Truncation {
                retained: norm,
                budget,
                cutoff: state.cutoff(),
            });
        }
        Ok(state)
    }

    pub fn vacuum(cutoff: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); cutoff + 1];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        FockVector {
            amplitudes,
            budget: DEFAULT_TRUNCATION_BUDGET,
        }
    }

    /// The number state `|n>`.
    pub fn number(n: usize, cutoff: usize) -> Result<Self> {
        if cutoff < n {
            return Err(Error::arg(format!(
                "cutoff {cutoff} is below photon number {n}"
            )));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); cutoff + 1];
        amplitudes[n] = Complex64::new(1.0, 0.0);
        Ok(FockVector {
            amplitudes,
            budget: DEFAULT_TRUNCATION_BUDGET,
        })
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn cutoff(&self) -> usize {
        self.amplitudes.len() - 1
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn retained_norm(&self) -> f64 {
        compensated(self.amplitudes.iter().map(|c| c.norm_sqr()))
    }

    pub fn mean_photon_number(&self) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(n, c)| n as f64 * c.norm_sqr())
            .sum()
    }

    /// `<a>` computed from adjacent amplitudes.
    pub fn mean_field(&self) -> Complex64 {
        self.amplitudes
            .windows(2)
            .enumerate()
            .map(|(n, w)| w[0].conj() * w[1] * ((n + 1) as f64).sqrt())
            .sum()
    }

    /// Multiplies amplitude `n` by `exp(i n theta)`, i.e. applies `exp(i theta n)`.
    pub fn rotated(&self, theta: f64) -> Self {
        let amplitudes = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(n, c)| c * Complex64::from_polar(1.0, theta * n as f64))
            .collect();
        FockVector {
            amplitudes,
            budget: self.budget,
        }
    }
}

/// Photon-number probabilities of a truncated state.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonDistribution {
    probabilities: Vec<f64>,
}

impl PhotonDistribution {
    pub fn new(probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.is_empty() {
            return Err(Error::arg("empty photon distribution"));
        }
        if let Some(p) = probabilities.iter().find(|p| p.is_nan() || **p < 0.0) {
            return Err(Error::arg(format!("photon probability {p} is negative")));
        }
        Ok(PhotonDistribution { probabilities })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn cutoff(&self) -> usize {
        self.probabilities.len() - 1
    }

    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    /// `sum_n t^n p_n` for any real `t`.
    pub fn generating(&self, t: f64) -> f64 {
        power_series(&self.probabilities, t)
    }
}

/// Evaluates `sum_n coeffs[n] t^n` by Horner's rule.
pub(crate) fn power_series(coeffs: &[f64], t: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
}

fn check_budget(budget: f64) -> Result<()> {
    if !(budget > 0.0 && budget < 1.0) {
        return Err(Error::arg(format!(
            "truncation budget must lie in (0, 1), got {budget}"
        )));
    }
    Ok(())
}

pub fn coherent_state(alpha: Complex64, cutoff: usize) -> Result<FockVector> {
    coherent_state_with_budget(alpha, cutoff, DEFAULT_TRUNCATION_BUDGET)
}

/// Coherent state with amplitudes `exp(-|a|^2/2) a^n / sqrt(n!)`, built in the
/// log domain so large cutoffs neither overflow nor underflow early.
pub fn coherent_state_with_budget(
    alpha: Complex64,
    cutoff: usize,
    budget: f64,
) -> Result<FockVector> {
    if !alpha.is_finite() {
        return Err(Error::arg(format!(
            "coherent amplitude {alpha} is not finite"
        )));
    }
    let modulus = alpha.norm();
    let amplitudes = if modulus == 0.0 {
        let mut v = vec![Complex64::new(0.0, 0.0); cutoff + 1];
        v[0] = Complex64::new(1.0, 0.0);
        v
    } else {
        let ln_mod = modulus.ln();
        let arg = alpha.arg();
        (0..=cutoff)
            .map(|n| {
                let ln_amp =
                    -0.5 * modulus * modulus + n as f64 * ln_mod - 0.5 * ln_factorial(n as u64);
                Complex64::from_polar(ln_amp.exp(), arg * n as f64)
            })
            .collect()
    };
    let state = FockVector::from_amplitudes(amplitudes, budget)?;
    if modulus > 0.0 {
        let mean = modulus * modulus;
        let ln_mean = mean.ln();
        check_tail(
            &state,
            series_tail(cutoff + 1, 1, |n| {
                -mean + n as f64 * ln_mean - ln_factorial(n as u64)
            }),
        )?;
    }
    Ok(state)
}

/// `sum_{n >= first, step} exp(ln_term(n))`, summed until the terms are
/// negligible; accurate to relative rounding even for tails far below `1e-16`.
fn series_tail(first: usize, step: usize, ln_term: impl Fn(usize) -> f64) -> f64 {
    let mut total = 0.0;
    let mut previous = f64::INFINITY;
    let mut n = first;
    loop {
        let term = ln_term(n).exp();
        total += term;
        if term <= total * 1e-18 && term <= previous || term == 0.0 && previous == 0.0 {
            return total;
        }
        if n > MAX_AUTO_CUTOFF * 4 {
            return total;
        }
        previous = term;
        n += step;
    }
}

/// Compares the exact norm deficit beyond the cutoff against the budget.
fn check_tail(state: &FockVector, tail: f64) -> Result<()> {
    if tail > state.budget {
        return Err(Error::Truncation {
            retained: 1.0 - tail,
            budget: state.budget,
            cutoff: state.cutoff(),
        });
    }
    Ok(())
}

pub fn squeezed_vacuum(xi: f64, cutoff: usize) -> Result<FockVector> {
    squeezed_vacuum_with_budget(xi, cutoff, DEFAULT_TRUNCATION_BUDGET)
}

/// Squeezed vacuum `cosh(xi)^(-1/2) exp(-tanh(xi)/2 a†²)|0>`; odd amplitudes are zero.
pub fn squeezed_vacuum_with_budget(xi: f64, cutoff: usize, budget: f64) -> Result<FockVector> {
    if !(xi >= 0.0 && xi.is_finite()) {
        return Err(Error::arg(format!(
            "squeezing parameter must be finite and >= 0, got {xi}"
        )));
    }
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); cutoff + 1];
    if xi == 0.0 {
        amplitudes[0] = Complex64::new(1.0, 0.0);
    } else {
        for (m, n) in (0..=cutoff).step_by(2).enumerate() {
            let magnitude = squeezed_log_amplitude(xi, m).exp();
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            amplitudes[n] = Complex64::new(sign * magnitude, 0.0);
        }
    }
    let state = FockVector::from_amplitudes(amplitudes, budget)?;
    if xi > 0.0 {
        let first_m = cutoff / 2 + 1;
        check_tail(
            &state,
            series_tail(first_m, 1, |m| 2.0 * squeezed_log_amplitude(xi, m)),
        )?;
    }
    Ok(state)
}

/// `ln |<2m|xi>|`.
fn squeezed_log_amplitude(xi: f64, m: usize) -> f64 {
    // ln cosh written to stay finite for large xi
    let ln_cosh = xi + (-2.0 * xi).exp().ln_1p() - std::f64::consts::LN_2;
    let ln_tanh = xi.tanh().ln();
    -0.5 * ln_cosh + m as f64 * ln_tanh + 0.5 * ln_factorial(2 * m as u64)
        - m as f64 * std::f64::consts::LN_2
        - ln_factorial(m as u64)
}

/// `(|0> + |n>)/sqrt(2)`.
pub fn superposition_0n(n: usize, cutoff: usize) -> Result<FockVector> {
    if n == 0 {
        return Err(Error::arg("superposition |0:n> needs n >= 1"));
    }
    if cutoff < n {
        return Err(Error::arg(format!(
            "cutoff {cutoff} is below photon number {n}"
        )));
    }
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); cutoff + 1];
    amplitudes[0] = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    amplitudes[n] = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    Ok(FockVector {
        amplitudes,
        budget: DEFAULT_TRUNCATION_BUDGET,
    })
}

/// `<t^n>`, the Fock-basis value of the normally ordered exponential `:exp(-(1-t) n):`.
pub fn geometric_expectation(state: &FockVector, t: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::arg(format!(
            "geometric argument must lie in [0, 1], got {t}"
        )));
    }
    Ok(photon_distribution(state).generating(t))
}

pub fn photon_distribution(state: &FockVector) -> PhotonDistribution {
    PhotonDistribution {
        probabilities: state.amplitudes.iter().map(|c| c.norm_sqr()).collect(),
    }
}

/// Smallest cutoff whose Poisson(|alpha|^2) tail is below `budget`.
pub fn coherent_cutoff(alpha: Complex64, budget: f64) -> Result<usize> {
    let mean = alpha.norm_sqr();
    if mean == 0.0 {
        return Ok(0);
    }
    let ln_mean = mean.ln();
    cutoff_from_probabilities(budget, |n| {
        (-mean + n as f64 * ln_mean - ln_factorial(n as u64)).exp()
    })
}

/// Smallest even cutoff whose squeezed-vacuum tail is below `budget`.
pub fn squeezed_cutoff(xi: f64, budget: f64) -> Result<usize> {
    if xi == 0.0 {
        return Ok(0);
    }
    cutoff_from_probabilities(budget, |n| {
        if n % 2 == 1 {
            0.0
        } else {
            (2.0 * squeezed_log_amplitude(xi, n / 2)).exp()
        }
    })
}

fn cutoff_from_probabilities(budget: f64, prob: impl Fn(usize) -> f64) -> Result<usize> {
    check_budget(budget)?;
    let mut cumulative = 0.0;
    for n in 0..MAX_AUTO_CUTOFF {
        cumulative += prob(n);
        if cumulative >= 1.0 - budget {
            return Ok(n);
        }
    }
    Err(Error::arg(format!(
        "no cutoff below {MAX_AUTO_CUTOFF} meets the truncation budget {budget:.1e}"
    )))
}

/// Single-mode signal states with automatic cutoff selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Signal {
    Vacuum,
    Coherent { re: f64, im: f64 },
    Squeezed { xi: f64 },
    Superposition { n: usize },
}

impl Signal {
    pub fn coherent(alpha: Complex64) -> Self {
        Signal::Coherent {
            re: alpha.re,
            im: alpha.im,
        }
    }

    /// Builds the state with the smallest cutoff meeting `budget`.
    pub fn build(&self, budget: f64) -> Result<FockVector> {
        let auto = budget * AUTO_CUTOFF_FRACTION;
        match *self {
            Signal::Vacuum => Ok(FockVector::vacuum(0)),
            Signal::Coherent { re, im } => {
                let alpha = Complex64::new(re, im);
                coherent_state_with_budget(alpha, coherent_cutoff(alpha, auto)?, budget)
            }
            Signal::Squeezed { xi } => {
                if !(xi >= 0.0 && xi.is_finite()) {
                    return Err(Error::arg(format!(
                        "squeezing parameter must be finite and >= 0, got {xi}"
                    )));
                }
                squeezed_vacuum_with_budget(xi, squeezed_cutoff(xi, auto)?, budget)
            }
            Signal::Superposition { n } => superposition_0n(n, n),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            Signal::Vacuum => "vacuum".into(),
            Signal::Coherent { re, im } => format!("coherent({re}{im:+}i)"),
            Signal::Squeezed { xi } => format!("squeezed({xi})"),
            Signal::Superposition { n } => format!("superposition(0:{n})"),
        }
    }
}
