//! Normally ordered moments `<:X^m(phi):>` of the nonlinear click quadrature
//! `X(phi) = N (pi_1 - pi_2)`.
//!
//! Two routes that share nothing beyond the photon statistics:
//!
//! * counts: the sampling formula
//!   `<:pi_1^j1 pi_2^j2:> = sum_{k1,k2} C(k1,j1) C(k2,j2) / (C(N,j1) C(N,j2)) c_{k1,k2}`
//!   applied to a joint click table;
//! * analytic: `<:pi_1^j1 pi_2^j2:>` expanded into generating-function values
//!   `E[t_i1^n1 t_i2^n2]` of the two output photon numbers, with
//!   `t_i = 1 - eta i / N`.
//!
//! The analytic route evaluates `E[t1^n1 t2^n2]` without forming the two-mode
//! state. With `s_i = 1 - t_i`, the quantity is the normally ordered
//! `<:exp(-s1 n1 - s2 n2):>`; substituting the coherent LO and completing the
//! square in the signal mode gives
//! `exp(-s1 s2 |beta|^2 / lambda) sum_n (1 - lambda)^n |(D(delta) psi)_n|^2`
//! with `lambda = (s1 + s2)/2` and `delta = (s1 - s2) beta / (2 lambda)`,
//! a single-mode displacement instead of a two-mode mix.
//! [`x_moments_from_photons`] evaluates the same expansion on an explicit
//! joint photon distribution.
//!
//! Both are combined as `<:X^m:> = N^m sum_j C(m,j) (-1)^(m-j) <:pi_1^j pi_2^(m-j):>`.

use num_complex::Complex64;
use serde::Serialize;
use statrs::function::factorial::binomial;

use crate::detector::{DetectorConfig, JointClickDistribution};
use crate::error::{Error, Result};
use crate::fock::{power_series, FockVector, NORM_SLACK};
use crate::interferometer::{
    displace, JointPhotonDistribution, LocalOscillator, MIX_TRUNCATION_LOSS,
};
use crate::sum::CompensatedSum;

/// `<:X^m(phi):>` for `m = 0..=max_order` at one LO phase.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentSet {
    moments: Vec<f64>,
    phase: f64,
    n_apds: usize,
}

impl MomentSet {
    /// `moments[0]` is overwritten with exactly 1.
    pub fn new(mut moments: Vec<f64>, phase: f64, n_apds: usize) -> Result<Self> {
        if moments.is_empty() {
            return Err(Error::arg("a moment set needs at least order 0"));
        }
        if n_apds == 0 {
            return Err(Error::arg("moment set needs N >= 1"));
        }
        moments[0] = 1.0;
        Ok(MomentSet {
            moments,
            phase,
            n_apds,
        })
    }

    pub fn moments(&self) -> &[f64] {
        &self.moments
    }

    pub fn get(&self, m: usize) -> Option<f64> {
        self.moments.get(m).copied()
    }

    pub fn max_order(&self) -> usize {
        self.moments.len() - 1
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }

    pub fn n_apds(&self) -> usize {
        self.n_apds
    }
}

/// `2 floor(N/2)`, the highest order the matrix of moments needs.
pub fn default_max_order(cfg: &DetectorConfig) -> usize {
    2 * (cfg.n_apds() / 2)
}

/// `C(k, j) / C(N, j)` as a product of ratios.
fn binomial_ratio(k: usize, j: usize, n: usize) -> f64 {
    (0..j).map(|i| (k - i) as f64 / (n - i) as f64).product()
}

fn sign(parity: usize) -> f64 {
    if parity.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// `<:pi_1^j1 pi_2^j2:>` from a joint click table.
pub fn pi_moment_from_counts(joint: &JointClickDistribution, j1: usize, j2: usize) -> Result<f64> {
    let n = joint.n_apds();
    if j1 > n || j2 > n {
        return Err(Error::arg(format!(
            "sampling formula needs j1, j2 <= N = {n}, got ({j1}, {j2})"
        )));
    }
    let w2: Vec<f64> = (0..=n)
        .map(|k2| {
            if k2 < j2 {
                0.0
            } else {
                binomial_ratio(k2, j2, n)
            }
        })
        .collect();
    let mut total = 0.0;
    for k1 in j1..=n {
        let inner: f64 = (j2..=n).map(|k2| w2[k2] * joint.get(k1, k2)).sum();
        total += binomial_ratio(k1, j1, n) * inner;
    }
    Ok(total)
}

fn combine_pi_moments(
    m: usize,
    n_apds: usize,
    pi: impl Fn(usize, usize) -> Result<f64>,
) -> Result<f64> {
    let mut total = 0.0;
    for j in 0..=m {
        total += binomial(m as u64, j as u64) * sign(m - j) * pi(j, m - j)?;
    }
    Ok((n_apds as f64).powi(m as i32) * total)
}

/// `<:X^m(phi):>` from a joint click table; needs `m <= N`.
pub fn x_moment_from_counts(joint: &JointClickDistribution, m: usize) -> Result<f64> {
    let n = joint.n_apds();
    if m > n {
        return Err(Error::arg(format!(
            "counts route only reaches order N = {n}, requested {m}"
        )));
    }
    combine_pi_moments(m, n, |j1, j2| pi_moment_from_counts(joint, j1, j2))
}

pub fn x_moments_from_counts(
    joint: &JointClickDistribution,
    max_order: usize,
) -> Result<MomentSet> {
    let moments = (0..=max_order)
        .map(|m| x_moment_from_counts(joint, m))
        .collect::<Result<Vec<_>>>()?;
    MomentSet::new(moments, joint.phase(), joint.n_apds())
}

/// Generating-function values `E[t_i1^n1 t_i2^n2]` for `i1 + i2 <= max_order`.
struct GeneratingTable {
    values: Vec<Vec<f64>>,
}

impl GeneratingTable {
    fn from_photons(
        joint: &JointPhotonDistribution,
        cfg: &DetectorConfig,
        max_order: usize,
    ) -> Self {
        let mut values = vec![Vec::new(); max_order + 1];
        for (i2, out) in values.iter_mut().enumerate() {
            let partial = joint.partial_generating_2(cfg.attenuation(i2));
            *out = (0..=max_order - i2)
                .map(|i1| power_series(&partial, cfg.attenuation(i1)))
                .collect();
        }
        GeneratingTable { values }
    }

    fn from_signal(
        signal: &FockVector,
        lo: &LocalOscillator,
        cfg: &DetectorConfig,
        max_order: usize,
    ) -> Result<Self> {
        let mut values = vec![Vec::new(); max_order + 1];
        for (i2, out) in values.iter_mut().enumerate() {
            *out = (0..=max_order - i2)
                .map(|i1| {
                    output_generating_function(signal, lo, cfg.attenuation(i1), cfg.attenuation(i2))
                })
                .collect::<Result<Vec<_>>>()?;
        }
        Ok(GeneratingTable { values })
    }

    fn get(&self, i1: usize, i2: usize) -> f64 {
        self.values[i2][i1]
    }
}

/// `D(delta) psi`, with enough rows that the norm lost to the row cut stays
/// below `MIX_TRUNCATION_LOSS`.
///
/// `||a D psi|| = ||(a + delta) psi|| <= ||a psi|| + |delta|`, so the displaced
/// photon amplitude `sqrt(n)` is confined near `sqrt(D) + |delta|`; the margin
/// `c` is widened until the norm check confirms it. Rounding in the
/// displacement elements grows with `|delta|^2`, so the check allows for it.
fn displace_within_loss(signal: &FockVector, delta: Complex64) -> Result<Vec<Complex64>> {
    let root = (signal.cutoff() as f64).sqrt() + delta.norm();
    let rounding = NORM_SLACK * (1.0 + delta.norm_sqr());
    let target = signal.retained_norm() - MIX_TRUNCATION_LOSS - rounding;
    let mut last = (0.0, 0);
    for margin in [6.0, 9.0, 14.0, 22.0] {
        let rows = ((root + margin) * (root + margin)).ceil() as usize;
        let displaced = displace(delta, signal.amplitudes(), rows);
        let mut norm = CompensatedSum::default();
        for c in &displaced {
            norm.add(c.norm_sqr());
        }
        let norm = norm.value();
        if norm >= target {
            return Ok(displaced);
        }
        last = (norm, rows);
    }
    Err(Error::Truncation {
        retained: last.0,
        budget: signal.budget(),
        cutoff: last.1,
    })
}

/// `E[t1^n1 t2^n2]` for the beam-splitter outputs of `signal` and `lo`,
/// evaluated in the signal mode alone (see the module notes).
pub fn output_generating_function(
    signal: &FockVector,
    lo: &LocalOscillator,
    t1: f64,
    t2: f64,
) -> Result<f64> {
    for t in [t1, t2] {
        // |t| <= 1 keeps every power series bounded; the orders above N use t < 0.
        if !(-1.0..=1.0).contains(&t) {
            return Err(Error::arg(format!(
                "generating argument must lie in [-1, 1], got {t}"
            )));
        }
    }
    let (s1, s2) = (1.0 - t1, 1.0 - t2);
    let lambda = 0.5 * (s1 + s2);
    if lambda == 0.0 {
        return Ok(signal.retained_norm());
    }
    let kappa = 0.5 * (s1 - s2);
    let beta = lo.amplitude();
    let prefactor = (-s1 * s2 * beta.norm_sqr() / lambda).exp();
    if kappa == 0.0 || beta.norm_sqr() == 0.0 {
        let probs: Vec<f64> = signal.amplitudes().iter().map(|c| c.norm_sqr()).collect();
        return Ok(prefactor * power_series(&probs, 1.0 - lambda));
    }
    let delta = beta * (kappa / lambda);
    let displaced = displace_within_loss(signal, delta)?;
    let probs: Vec<f64> = displaced.iter().map(|c| c.norm_sqr()).collect();
    Ok(prefactor * power_series(&probs, 1.0 - lambda))
}

fn pi_moment_from_table(
    table: &GeneratingTable,
    cfg: &DetectorConfig,
    j1: usize,
    j2: usize,
) -> f64 {
    let mut total = 0.0;
    for i1 in 0..=j1 {
        for i2 in 0..=j2 {
            total += sign(i1 + i2)
                * binomial(j1 as u64, i1 as u64)
                * binomial(j2 as u64, i2 as u64)
                * (-((i1 + i2) as f64) * cfg.nu()).exp()
                * table.get(i1, i2);
        }
    }
    total
}

/// `<:pi_1^j1 pi_2^j2:>` from the joint photon distribution.
pub fn pi_moment_analytic(
    joint: &JointPhotonDistribution,
    cfg: &DetectorConfig,
    j1: usize,
    j2: usize,
) -> f64 {
    let table = GeneratingTable::from_photons(joint, cfg, j1 + j2);
    pi_moment_from_table(&table, cfg, j1, j2)
}

/// Moments from the joint photon distribution of the interferometer outputs.
pub fn x_moments_from_photons(
    joint: &JointPhotonDistribution,
    cfg: &DetectorConfig,
    max_order: usize,
) -> Result<MomentSet> {
    check_analytic_order(cfg, max_order)?;
    let table = GeneratingTable::from_photons(joint, cfg, max_order);
    moments_from_table(&table, cfg, max_order, joint.lo().phi())
}

fn check_analytic_order(cfg: &DetectorConfig, max_order: usize) -> Result<()> {
    if max_order > 2 * cfg.n_apds() {
        return Err(Error::arg(format!(
            "analytic moments are limited to order 2N = {}, requested {max_order}",
            2 * cfg.n_apds()
        )));
    }
    Ok(())
}

fn moments_from_table(
    table: &GeneratingTable,
    cfg: &DetectorConfig,
    max_order: usize,
    phase: f64,
) -> Result<MomentSet> {
    let moments = (0..=max_order)
        .map(|m| {
            combine_pi_moments(m, cfg.n_apds(), |j1, j2| {
                Ok(pi_moment_from_table(table, cfg, j1, j2))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    MomentSet::new(moments, phase, cfg.n_apds())
}

/// Moments through the POVM expansion, with the output generating function
/// evaluated from the signal directly.
pub fn x_moments_analytic(
    signal: &FockVector,
    lo: &LocalOscillator,
    cfg: &DetectorConfig,
    max_order: usize,
) -> Result<MomentSet> {
    check_analytic_order(cfg, max_order)?;
    let table = GeneratingTable::from_signal(signal, lo, cfg, max_order)?;
    moments_from_table(&table, cfg, max_order, lo.phi())
}

/// `<X(phi)>` for a coherent signal by amplitude substitution:
/// `2N exp(-eta r^2/(2N) - nu) exp(-eta |alpha|^2/(2N)) sinh(eta r x / (2N))`
/// with `x = alpha e^{-i phi} + c.c.`.
pub fn closed_form_coherent_x(alpha: Complex64, lo: &LocalOscillator, cfg: &DetectorConfig) -> f64 {
    let two_n = 2.0 * cfg.n_apds() as f64;
    let eta = cfg.eta();
    let r = lo.r();
    let x = 2.0 * (alpha * Complex64::from_polar(1.0, -lo.phi())).re;
    two_n
        * (-eta * r * r / two_n - cfg.nu() - eta * alpha.norm_sqr() / two_n).exp()
        * (eta * r * x / two_n).sinh()
}

/// The `N -> infinity` reference `exp(-nu) eta r <x(phi)>`.
pub fn linear_limit_x(signal: &FockVector, lo: &LocalOscillator, cfg: &DetectorConfig) -> f64 {
    let x = 2.0 * (signal.mean_field() * Complex64::from_polar(1.0, -lo.phi())).re;
    (-cfg.nu()).exp() * cfg.eta() * lo.r() * x
}
