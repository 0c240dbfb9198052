//! 50:50 mixing of the signal with a coherent local oscillator.
//!
//! Output arm 1 carries `(a_SI + a_LO)/sqrt(2)`, arm 2 `(a_SI - a_LO)/sqrt(2)`.
//! Two-mode data are stored on the triangle `n1 + n2 <= S`, where the total
//! photon budget `S` is picked from the signal and Poisson(r^2) distributions.
//!
//! [`mix_on_beamsplitter`] splits the signal against vacuum and then displaces
//! output 1 by `beta/sqrt(2)` and output 2 by `-beta/sqrt(2)`. Displacement
//! matrix elements come from a normalized Laguerre recurrence that stays
//! accurate for LO amplitudes and photon numbers in the thousands. The test
//! suite cross-checks this against the other textbook construction, explicit
//! beam-splitter matrix elements for `|n>_SI |m>_LO` summed over the LO's
//! Fock amplitudes.

use std::f64::consts::{FRAC_1_SQRT_2, LN_2, TAU};

use num_complex::Complex64;
use statrs::function::factorial::{ln_binomial, ln_factorial};

use crate::error::{Error, Result};
use crate::fock::{photon_distribution, FockVector, PhotonDistribution, NORM_SLACK};
use crate::sum::compensated;

/// Probability mass the total photon budget may discard.
pub const MIX_TRUNCATION_LOSS: f64 = 1e-14;

/// Coherent local oscillator `beta = r exp(i phi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalOscillator {
    r: f64,
    phi: f64,
}

impl LocalOscillator {
    pub fn new(r: f64, phi: f64) -> Result<Self> {
        if !(r >= 0.0 && r.is_finite()) {
            return Err(Error::arg(format!(
                "LO amplitude r must be finite and >= 0, got {r}"
            )));
        }
        if !phi.is_finite() {
            return Err(Error::arg(format!("LO phase must be finite, got {phi}")));
        }
        Ok(LocalOscillator {
            r,
            phi: phi.rem_euclid(TAU),
        })
    }

    /// From a complex amplitude; `r = |beta|`, `phi = arg beta`.
    pub fn from_amplitude(beta: Complex64) -> Result<Self> {
        Self::new(beta.norm(), beta.arg())
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    /// Phase reduced to `[0, 2pi)`.
    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn amplitude(&self) -> Complex64 {
        Complex64::from_polar(self.r, self.phi)
    }

    pub fn with_phase(&self, phi: f64) -> Result<Self> {
        Self::new(self.r, phi)
    }
}

/// Index arithmetic for the triangle `{(p, q) : p + q <= total}`, stored row by row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Triangle {
    total: usize,
}

impl Triangle {
    pub(crate) fn new(total: usize) -> Self {
        Triangle { total }
    }

    pub(crate) fn len(&self) -> usize {
        (self.total + 1) * (self.total + 2) / 2
    }

    pub(crate) fn offset(&self, p: usize) -> usize {
        p * (self.total + 1) - p * p.saturating_sub(1) / 2
    }

    pub(crate) fn row_len(&self, p: usize) -> usize {
        self.total + 1 - p
    }

    pub(crate) fn index(&self, p: usize, q: usize) -> Option<usize> {
        (p + q <= self.total).then(|| self.offset(p) + q)
    }
}

/// Output state of the beam splitter on the triangle `n1 + n2 <= total`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoModeState {
    tri: Triangle,
    amplitudes: Vec<Complex64>,
    lo: LocalOscillator,
}

impl TwoModeState {
    /// Largest retained total photon number `n1 + n2`.
    pub fn total_budget(&self) -> usize {
        self.tri.total
    }

    pub fn lo(&self) -> LocalOscillator {
        self.lo
    }

    /// Amplitude of `|n1, n2>`; zero outside the stored triangle.
    pub fn amplitude(&self, n1: usize, n2: usize) -> Complex64 {
        self.tri
            .index(n1, n2)
            .map_or(Complex64::new(0.0, 0.0), |i| self.amplitudes[i])
    }

    pub fn norm_sqr(&self) -> f64 {
        compensated(self.amplitudes.iter().map(|c| c.norm_sqr()))
    }

    /// Iterates `(n1, n2, amplitude)` over the stored triangle.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        let tri = self.tri;
        (0..=tri.total).flat_map(move |p| {
            let off = tri.offset(p);
            (0..tri.row_len(p)).map(move |q| (p, q, self.amplitudes[off + q]))
        })
    }
}

/// Joint photon-number probabilities `p(n1, n2)` of the two outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPhotonDistribution {
    tri: Triangle,
    probabilities: Vec<f64>,
    lo: LocalOscillator,
}

impl JointPhotonDistribution {
    pub fn total_budget(&self) -> usize {
        self.tri.total
    }

    /// LO setting the distribution was computed for.
    pub fn lo(&self) -> LocalOscillator {
        self.lo
    }

    pub fn get(&self, n1: usize, n2: usize) -> f64 {
        self.tri
            .index(n1, n2)
            .map_or(0.0, |i| self.probabilities[i])
    }

    /// Row `n1` as a slice over `n2 = 0..=total - n1`.
    pub fn row(&self, n1: usize) -> &[f64] {
        let off = self.tri.offset(n1);
        &self.probabilities[off..off + self.tri.row_len(n1)]
    }

    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    pub fn marginal_1(&self) -> PhotonDistribution {
        let probs = (0..=self.tri.total)
            .map(|p| self.row(p).iter().sum())
            .collect();
        PhotonDistribution::new(probs).expect("sums of probabilities are non-negative")
    }

    pub fn marginal_2(&self) -> PhotonDistribution {
        let mut probs = vec![0.0; self.tri.total + 1];
        for p in 0..=self.tri.total {
            for (q, v) in self.row(p).iter().enumerate() {
                probs[q] += v;
            }
        }
        PhotonDistribution::new(probs).expect("sums of probabilities are non-negative")
    }

    /// Distribution of `n1 + n2`.
    pub fn total_number_distribution(&self) -> PhotonDistribution {
        let mut probs = vec![0.0; self.tri.total + 1];
        for p in 0..=self.tri.total {
            for (q, v) in self.row(p).iter().enumerate() {
                probs[p + q] += v;
            }
        }
        PhotonDistribution::new(probs).expect("sums of probabilities are non-negative")
    }

    /// `sum_{n2} p(n1, n2) t^n2` for every `n1`.
    pub fn partial_generating_2(&self, t: f64) -> Vec<f64> {
        (0..=self.tri.total)
            .map(|p| crate::fock::power_series(self.row(p), t))
            .collect()
    }

    /// `E[t1^n1 t2^n2]`.
    pub fn generating(&self, t1: f64, t2: f64) -> f64 {
        crate::fock::power_series(&self.partial_generating_2(t2), t1)
    }
}

pub fn joint_photon_distribution(state: &TwoModeState) -> JointPhotonDistribution {
    JointPhotonDistribution {
        tri: state.tri,
        probabilities: state.amplitudes.iter().map(|c| c.norm_sqr()).collect(),
        lo: state.lo,
    }
}

/// Poisson(`mean`) probabilities, cut once the remaining tail is below `tail`.
fn poisson_probabilities(mean: f64, tail: f64) -> Vec<f64> {
    if mean == 0.0 {
        return vec![1.0];
    }
    let ln_mean = mean.ln();
    let mut probs = Vec::new();
    for m in 0usize.. {
        let p = (-mean + m as f64 * ln_mean - ln_factorial(m as u64)).exp();
        probs.push(p);
        // past the mode the ratio p_{k+1}/p_k = mean/(k+1) keeps falling,
        // so the tail is below a geometric series
        let ratio = mean / (m + 1) as f64;
        if ratio < 1.0 && p * ratio / (1.0 - ratio) < tail {
            break;
        }
    }
    probs
}

/// Smallest total budget `S` with `P(n_SI + n_P > S) <= loss`, where `n_P` is
/// Poisson with mean `|beta|^2`.
pub(crate) fn total_photon_budget(signal: &PhotonDistribution, beta_sqr: f64, loss: f64) -> usize {
    let lo_probs = poisson_probabilities(beta_sqr, 1e-3 * loss);
    let sig = signal.probabilities();
    let mut conv = vec![0.0; sig.len() + lo_probs.len() - 1];
    for (n, ps) in sig.iter().enumerate() {
        if *ps == 0.0 {
            continue;
        }
        for (m, pl) in lo_probs.iter().enumerate() {
            conv[n + m] += ps * pl;
        }
    }
    let mut tail = 0.0;
    for s in (0..conv.len()).rev() {
        if tail + conv[s] > 0.999 * loss {
            return s;
        }
        tail += conv[s];
    }
    0
}

/// `U_BS |psi>|0>`: photon `n` of the signal goes to `|i, n-i>` with amplitude
/// `c_n sqrt(C(n, i) / 2^n)`.
fn split_signal(signal: &FockVector, tri: Triangle) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); tri.len()];
    for (n, c) in signal.amplitudes().iter().enumerate().take(tri.total + 1) {
        if *c == Complex64::new(0.0, 0.0) {
            continue;
        }
        for i in 0..=n {
            let weight = (0.5 * (ln_binomial(n as u64, i as u64) - n as f64 * LN_2)).exp();
            out[tri.offset(i) + (n - i)] = c * weight;
        }
    }
    out
}

/// Calls `f(m, n, <m|D(gamma)|n>)` for every `m <= rows`, `n <= cols`, diagonal
/// by diagonal.
///
/// With `a = |m - n|` and `k = min(m, n)` the elements are
/// `<k+a|D|k> = gamma^a / |gamma|^a * l_k` and
/// `<k|D|k+a> = (-conj gamma)^a / |gamma|^a * l_k`, where
/// `l_k = sqrt(k!/(k+a)!) |gamma|^a e^{-|gamma|^2/2} L_k^(a)(|gamma|^2)`
/// obeys the normalized Laguerre recurrence
/// `sqrt(k (k+a)) l_k = (2k - 1 + a - x) l_{k-1} - sqrt((k-1)(k-1+a)) l_{k-2}`.
/// The running pair is rescaled in the log domain, so neither the tiny
/// starting values nor large intermediate ones leave the floating-point range.
///
/// The first-order recurrence in `n` alone is simpler but amplifies rounding
/// by roughly `|gamma|^n / sqrt(n!)`, which is fatal for large LOs.
pub(crate) fn for_each_displacement_element(
    gamma: Complex64,
    rows: usize,
    cols: usize,
    mut f: impl FnMut(usize, usize, Complex64),
) {
    let x = gamma.norm_sqr();
    if x == 0.0 {
        for k in 0..=rows.min(cols) {
            f(k, k, Complex64::new(1.0, 0.0));
        }
        return;
    }
    const BIG: f64 = 1e150;
    let ln_big = BIG.ln();
    let ln_g = gamma.norm().ln();
    let theta = gamma.arg();
    for alpha in 0..=rows.max(cols) {
        let below = (alpha <= rows).then(|| (rows - alpha).min(cols));
        let above = (alpha > 0 && alpha <= cols).then(|| rows.min(cols - alpha));
        let Some(k_max) = below.max(above) else {
            continue;
        };
        let a = alpha as f64;
        let phase_below = Complex64::from_polar(1.0, a * theta);
        let phase_above = Complex64::from_polar(1.0, a * (std::f64::consts::PI - theta));
        let mut ln_scale = a * ln_g - 0.5 * x - 0.5 * ln_factorial(alpha as u64);
        let mut factor = ln_scale.exp();
        let (mut prev, mut cur) = (0.0f64, 1.0f64);
        for k in 0..=k_max {
            if k >= 1 {
                let kf = k as f64;
                let next = ((2.0 * kf - 1.0 + a - x) * cur
                    - ((kf - 1.0) * (kf - 1.0 + a)).sqrt() * prev)
                    / (kf * (kf + a)).sqrt();
                prev = cur;
                cur = next;
                if cur.abs() > BIG {
                    cur /= BIG;
                    prev /= BIG;
                    ln_scale += ln_big;
                    factor = ln_scale.exp();
                } else if cur.abs() < 1.0 / BIG && prev.abs() < 1.0 / BIG && cur != 0.0 {
                    cur *= BIG;
                    prev *= BIG;
                    ln_scale -= ln_big;
                    factor = ln_scale.exp();
                }
            }
            let mag = cur * factor;
            if below.is_some_and(|kb| k <= kb) {
                f(k + alpha, k, phase_below * mag);
            }
            if above.is_some_and(|ka| k <= ka) {
                f(k, k + alpha, phase_above * mag);
            }
        }
    }
}

/// Dense `<m|D(gamma)|n>` for `m <= rows`, `n <= cols`.
fn displacement_matrix(gamma: Complex64, rows: usize, cols: usize) -> Vec<Vec<Complex64>> {
    let mut d = vec![vec![Complex64::new(0.0, 0.0); cols + 1]; rows + 1];
    for_each_displacement_element(gamma, rows, cols, |m, n, v| d[m][n] = v);
    d
}

/// `(D(gamma) psi)_m` for `m <= rows`.
pub(crate) fn displace(gamma: Complex64, psi: &[Complex64], rows: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); rows + 1];
    let cols = psi.len() - 1;
    for_each_displacement_element(gamma, rows, cols, |m, n, v| out[m] += v * psi[n]);
    out
}

/// Mixes `signal` with the coherent `lo` on the 50:50 beam splitter.
///
/// The signal is split against vacuum, then output 1 is displaced by
/// `beta/sqrt(2)` and output 2 by `-beta/sqrt(2)`: a coherent LO entering the
/// second port acts on the outputs exactly as this pair of displacements.
pub fn mix_on_beamsplitter(signal: &FockVector, lo: &LocalOscillator) -> Result<TwoModeState> {
    let total = total_photon_budget(
        &photon_distribution(signal),
        lo.r() * lo.r(),
        MIX_TRUNCATION_LOSS,
    );
    mix_on_beamsplitter_with_total(signal, lo, total)
}

/// Like [`mix_on_beamsplitter`] with an explicit total photon budget.
pub fn mix_on_beamsplitter_with_total(
    signal: &FockVector,
    lo: &LocalOscillator,
    total: usize,
) -> Result<TwoModeState> {
    let d_sig = signal.cutoff().min(total);
    let split_tri = Triangle::new(d_sig);
    let split = split_signal(signal, split_tri);
    let gamma = lo.amplitude() * FRAC_1_SQRT_2;
    let d1 = displacement_matrix(gamma, total, d_sig);
    let d2 = displacement_matrix(-gamma, total, d_sig);

    // half[i][q] = sum_l <q|D(-gamma)|l> split(i, l)
    let mut half = vec![vec![Complex64::new(0.0, 0.0); total + 1]; d_sig + 1];
    for (i, h) in half.iter_mut().enumerate() {
        for l in 0..=(d_sig - i) {
            let s = split[split_tri.offset(i) + l];
            if s == Complex64::new(0.0, 0.0) {
                continue;
            }
            for (hq, row) in h.iter_mut().zip(&d2) {
                *hq += row[l] * s;
            }
        }
    }
    // amplitude(p, q) = sum_i <p|D(gamma)|i> half[i][q]
    let tri = Triangle::new(total);
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); tri.len()];
    for p in 0..=total {
        let off = tri.offset(p);
        let out = &mut amplitudes[off..off + tri.row_len(p)];
        for (i, h) in half.iter().enumerate() {
            let w = d1[p][i];
            if w == Complex64::new(0.0, 0.0) {
                continue;
            }
            for (o, hq) in out.iter_mut().zip(h) {
                *o += w * hq;
            }
        }
    }
    let state = TwoModeState {
        tri,
        amplitudes,
        lo: *lo,
    };
    check_retained(&state, signal, lo)?;
    Ok(state)
}

/// The signal's own deficit is bounded by its budget and the total photon
/// budget drops at most [`MIX_TRUNCATION_LOSS`] more; anything beyond (plus
/// summation rounding) is an overflowing truncation.
/// Rounding in the displacement elements grows with the LO intensity, so the
/// allowance scales with `1 + |beta|^2`.
fn check_retained(state: &TwoModeState, signal: &FockVector, lo: &LocalOscillator) -> Result<()> {
    let norm = state.norm_sqr();
    let rounding = NORM_SLACK * (1.0 + lo.r() * lo.r());
    if norm < 1.0 - signal.budget() - MIX_TRUNCATION_LOSS - rounding {
        return Err(Error::Truncation {
            retained: norm,
            budget: signal.budget(),
            cutoff: state.tri.total,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{coherent_state, squeezed_vacuum, superposition_0n, Signal};
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn triangle_indexing() {
        let t = Triangle::new(3);
        assert_eq!(t.len(), 10);
        let mut k = 0;
        for p in 0..=3 {
            for q in 0..=(3 - p) {
                assert_eq!(t.index(p, q), Some(k));
                k += 1;
            }
        }
        assert_eq!(t.index(2, 2), None);
    }

    #[test]
    fn lo_phase_is_reduced() {
        let lo = LocalOscillator::new(1.0, -0.5).unwrap();
        assert_abs_diff_eq!(lo.phi(), TAU - 0.5, epsilon = 1e-15);
        assert!(LocalOscillator::new(-1.0, 0.0).is_err());
    }

    #[test]
    fn vacuum_signal_gives_product_of_coherent_states() {
        let beta = Complex64::from_polar(2.0, 0.7);
        let lo = LocalOscillator::from_amplitude(beta).unwrap();
        let out = mix_on_beamsplitter(&FockVector::vacuum(0), &lo).unwrap();
        let a1 = coherent_state(beta * FRAC_1_SQRT_2, 40).unwrap();
        let a2 = coherent_state(-beta * FRAC_1_SQRT_2, 40).unwrap();
        for (p, q, amp) in out.iter() {
            if p <= 40 && q <= 40 {
                let want = a1.amplitudes()[p] * a2.amplitudes()[q];
                assert_abs_diff_eq!((amp - want).norm(), 0.0, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn single_photon_without_lo_splits_evenly() {
        let lo = LocalOscillator::new(0.0, 0.0).unwrap();
        let out = mix_on_beamsplitter(&FockVector::number(1, 1).unwrap(), &lo).unwrap();
        assert_abs_diff_eq!(out.amplitude(1, 0).re, FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(out.amplitude(0, 1).re, FRAC_1_SQRT_2, epsilon = 1e-15);
        let joint = joint_photon_distribution(&out);
        assert_abs_diff_eq!(joint.get(1, 0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(joint.get(0, 1), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(joint.get(0, 0), 0.0);
    }

    #[test]
    fn vacuum_on_vacuum() {
        let lo = LocalOscillator::new(0.0, 1.0).unwrap();
        let joint =
            joint_photon_distribution(&mix_on_beamsplitter(&FockVector::vacuum(3), &lo).unwrap());
        assert_eq!(joint.get(0, 0), 1.0);
    }

    /// Explicit matrix element of the splitter for `|n>_SI |m>_LO -> |p, q>`,
    /// expanding `(c1† + c2†)^n (c1† - c2†)^m` term by term.
    fn explicit_element(n: usize, m: usize, p: usize) -> f64 {
        let q = n + m - p;
        let binom = |a: usize, b: usize| statrs::function::factorial::binomial(a as u64, b as u64);
        let fact = |a: usize| statrs::function::factorial::factorial(a as u64);
        let mut sum = 0.0;
        for j in 0..=m {
            if j > p || p - j > n {
                continue;
            }
            let sign = if (m - j).is_multiple_of(2) { 1.0 } else { -1.0 };
            sum += sign * binom(n, p - j) * binom(m, j);
        }
        sum * (fact(p) * fact(q) / (fact(n) * fact(m))).sqrt() / 2f64.powi((n + m) as i32).sqrt()
    }

    /// Output amplitude built from explicit splitter matrix elements summed
    /// over the Fock amplitudes of signal and LO.
    fn explicit_amplitude(
        sig: &FockVector,
        lo_state: &FockVector,
        p: usize,
        q: usize,
    ) -> Complex64 {
        let mut want = c(0.0, 0.0);
        for (n, cn) in sig.amplitudes().iter().enumerate() {
            if p + q < n || p + q - n > lo_state.cutoff() {
                continue;
            }
            let m = p + q - n;
            want += cn * lo_state.amplitudes()[m] * explicit_element(n, m, p);
        }
        want
    }

    #[test]
    fn displacement_route_matches_explicit_matrix_elements() {
        for (sig, lo) in [
            (
                superposition_0n(3, 3).unwrap(),
                LocalOscillator::new(0.8, 1.1).unwrap(),
            ),
            (
                squeezed_vacuum(0.5, 40).unwrap(),
                LocalOscillator::new(2.0, 0.3).unwrap(),
            ),
            (
                superposition_0n(2, 2).unwrap(),
                LocalOscillator::new(2.0, 1.9).unwrap(),
            ),
            (
                coherent_state(c(1.0, -1.5), 40).unwrap(),
                LocalOscillator::new(1.2, 4.0).unwrap(),
            ),
        ] {
            let out = mix_on_beamsplitter(&sig, &lo).unwrap();
            let lo_state =
                crate::fock::coherent_state_with_budget(lo.amplitude(), 60, 1e-25).unwrap();
            for p in 0..=12 {
                for q in 0..=12 {
                    if p + q > out.total_budget() {
                        continue;
                    }
                    let want = explicit_amplitude(&sig, &lo_state, p, q);
                    assert_abs_diff_eq!((out.amplitude(p, q) - want).norm(), 0.0, epsilon = 1e-13);
                }
            }
        }
    }

    /// `<m|D|n>` from the first-order recurrence in `n`; reliable for small `|gamma|`.
    fn recurrence_displacement(gamma: Complex64, rows: usize, cols: usize) -> Vec<Vec<Complex64>> {
        let mut d = vec![vec![c(0.0, 0.0); cols + 1]; rows + 1];
        for (m, row) in d.iter_mut().enumerate() {
            let ln_amp = -0.5 * gamma.norm_sqr() + m as f64 * gamma.norm().ln()
                - 0.5 * ln_factorial(m as u64);
            row[0] = Complex64::from_polar(ln_amp.exp(), gamma.arg() * m as f64);
        }
        for n in 0..cols {
            for m in 0..=rows {
                let up = if m > 0 {
                    d[m - 1][n] * (m as f64).sqrt()
                } else {
                    c(0.0, 0.0)
                };
                d[m][n + 1] = (up - gamma.conj() * d[m][n]) / ((n + 1) as f64).sqrt();
            }
        }
        d
    }

    #[test]
    fn laguerre_elements_match_recurrence_for_small_amplitudes() {
        for gamma in [c(0.3, 0.1), c(-0.7, 0.9), c(0.0, -1.2)] {
            let want = recurrence_displacement(gamma, 30, 20);
            let got = displacement_matrix(gamma, 30, 20);
            for m in 0..=30 {
                for n in 0..=20 {
                    let diff = (got[m][n] - want[m][n]).norm();
                    assert!(
                        diff < 1e-12,
                        "gamma={gamma} m={m} n={n}: {} vs {}",
                        got[m][n],
                        want[m][n]
                    );
                }
            }
        }
    }

    #[test]
    fn displacement_columns_stay_orthonormal_for_large_amplitudes() {
        let gamma = Complex64::from_polar(13.0, 0.4);
        let rows = 500;
        let d = displacement_matrix(gamma, rows, 40);
        for n in [0, 1, 17, 40] {
            for n2 in [0, 5, 40] {
                let dot: Complex64 = (0..=rows).map(|m| d[m][n].conj() * d[m][n2]).sum();
                let want = if n == n2 { 1.0 } else { 0.0 };
                assert_abs_diff_eq!((dot - want).norm(), 0.0, epsilon = 1e-12);
            }
        }
        // column 0 is the coherent state
        let coh = crate::fock::coherent_state_with_budget(gamma, rows, 1e-12).unwrap();
        for m in 0..=rows {
            assert_abs_diff_eq!((d[m][0] - coh.amplitudes()[m]).norm(), 0.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn large_signals_and_large_los_keep_their_norm() {
        for (xi, r) in [(2.0, 2.0), (0.5, 18.0), (1.5, 6.0)] {
            let sig = Signal::Squeezed { xi }.build(1e-10).unwrap();
            let lo = LocalOscillator::new(r, 0.3).unwrap();
            let out = mix_on_beamsplitter(&sig, &lo).unwrap();
            assert_abs_diff_eq!(out.norm_sqr(), sig.retained_norm(), epsilon = 1e-12);
            let joint = joint_photon_distribution(&out);
            let mean = |d: &PhotonDistribution| -> f64 {
                d.probabilities()
                    .iter()
                    .enumerate()
                    .map(|(n, p)| n as f64 * p)
                    .sum()
            };
            let total = mean(&joint.marginal_1()) + mean(&joint.marginal_2());
            assert_abs_diff_eq!(
                total,
                sig.mean_photon_number() + r * r,
                epsilon = 1e-8 * (1.0 + r * r)
            );
        }
    }

    #[test]
    fn unitarity_and_number_conservation() {
        let sig = squeezed_vacuum(0.5, 40).unwrap();
        let lo = LocalOscillator::new(2.0, 0.9).unwrap();
        let joint = joint_photon_distribution(&mix_on_beamsplitter(&sig, &lo).unwrap());
        assert_abs_diff_eq!(joint.total(), sig.retained_norm(), epsilon = 1e-12);

        let sp = photon_distribution(&sig);
        let poisson: Vec<f64> = (0..80)
            .map(|m| (-4.0 + m as f64 * 4f64.ln() - ln_factorial(m)).exp())
            .collect();
        let tot = joint.total_number_distribution();
        for (s, got) in tot.probabilities().iter().enumerate() {
            let want: f64 = (0..=s.min(sp.cutoff()))
                .map(|n| sp.probabilities()[n] * poisson[s - n])
                .sum();
            assert_abs_diff_eq!(*got, want, epsilon = 1e-10);
        }
        let m1 = joint.marginal_1();
        let m2 = joint.marginal_2();
        let mean = |d: &PhotonDistribution| -> f64 {
            d.probabilities()
                .iter()
                .enumerate()
                .map(|(n, p)| n as f64 * p)
                .sum()
        };
        assert_abs_diff_eq!(
            mean(&m1) + mean(&m2),
            sig.mean_photon_number() + 4.0,
            epsilon = 1e-9
        );
    }

    #[test]
    fn phase_covariance_and_swap_symmetry() {
        let sig = Signal::coherent(c(0.7, 0.4)).build(1e-12).unwrap();
        let delta = 0.83;
        let lo = LocalOscillator::new(1.5, 0.2).unwrap();
        let a = joint_photon_distribution(&mix_on_beamsplitter(&sig, &lo).unwrap());
        let b = joint_photon_distribution(
            &mix_on_beamsplitter(&sig.rotated(delta), &lo.with_phase(0.2 + delta).unwrap())
                .unwrap(),
        );
        for p in 0..20 {
            for q in 0..20 {
                assert_abs_diff_eq!(a.get(p, q), b.get(p, q), epsilon = 1e-13);
            }
        }
        let sig = squeezed_vacuum(0.4, 40).unwrap();
        let x = joint_photon_distribution(&mix_on_beamsplitter(&sig, &lo).unwrap());
        let y = joint_photon_distribution(
            &mix_on_beamsplitter(&sig, &lo.with_phase(0.2 + std::f64::consts::PI).unwrap())
                .unwrap(),
        );
        for (g, w) in x
            .marginal_1()
            .probabilities()
            .iter()
            .zip(y.marginal_2().probabilities())
        {
            assert_abs_diff_eq!(*g, *w, epsilon = 1e-13);
        }
    }

    #[test]
    fn too_small_budget_is_a_truncation_error() {
        let sig = squeezed_vacuum(0.5, 40).unwrap();
        let lo = LocalOscillator::new(2.0, 0.0).unwrap();
        assert!(matches!(
            mix_on_beamsplitter_with_total(&sig, &lo, 5),
            Err(Error::Truncation { .. })
        ));
    }
}
