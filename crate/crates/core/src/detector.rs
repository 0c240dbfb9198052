//! Click-counting statistics of arrays of on-off detectors.
//!
//! With `E = exp(-nu) :exp(-eta n / N):` the no-click operator of one APD, the
//! POVM element for `k` clicks out of `N` is
//!
//! ```text
//! Pi_k(n) = C(N,k) sum_{j=0}^{k} (-1)^j C(k,j) exp(-(N-k+j) nu) (1 - eta (N-k+j)/N)^n
//! ```
//!
//! on the Fock state `|n>`. All POVMs are diagonal in photon number, so click
//! statistics are computed from photon distributions only.

use serde::{Deserialize, Serialize};
use statrs::function::factorial::{binomial, ln_binomial};

use crate::error::{Error, Result};
use crate::fock::PhotonDistribution;
use crate::interferometer::JointPhotonDistribution;
use crate::sum::CompensatedSum;

/// Negative probabilities above this are roundoff and get clamped.
pub const NEGATIVE_FLOOR: f64 = -1e-12;

/// Above this many APDs the alternating sum is replaced by an occupancy recursion.
///
/// The alternating sum carries an absolute error of roughly `3^N` ulp, which
/// reaches 1e-12 around `N = 9`.
pub const ALTERNATING_SUM_MAX_APDS: usize = 8;

/// Identical APD array used on both output arms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    n_apds: usize,
    eta: f64,
    nu: f64,
}

impl DetectorConfig {
    pub fn new(n_apds: usize, eta: f64, nu: f64) -> Result<Self> {
        if n_apds == 0 {
            return Err(Error::arg("detector needs at least one APD"));
        }
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::arg(format!(
                "quantum efficiency eta must lie in [0, 1], got {eta}"
            )));
        }
        if !(nu >= 0.0 && nu.is_finite()) {
            return Err(Error::arg(format!(
                "dark count rate nu must be finite and >= 0, got {nu}"
            )));
        }
        Ok(DetectorConfig { n_apds, eta, nu })
    }

    pub fn n_apds(&self) -> usize {
        self.n_apds
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// `t_i = 1 - eta i / N`, the geometric argument of `:E^i:`.
    pub fn attenuation(&self, i: usize) -> f64 {
        1.0 - self.eta * i as f64 / self.n_apds as f64
    }
}

/// Table of `Pi_k(n)` for `k = 0..=N`, `n = 0..=max_photons`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClickPovm {
    n_apds: usize,
    max_photons: usize,
    values: Vec<f64>,
}

impl ClickPovm {
    pub fn new(cfg: &DetectorConfig, max_photons: usize) -> Result<Self> {
        let n_apds = cfg.n_apds();
        let mut values = if n_apds <= ALTERNATING_SUM_MAX_APDS {
            alternating_table(cfg, max_photons)
        } else {
            occupancy_table(cfg, max_photons)
        };
        let width = max_photons + 1;
        for n in 0..width {
            let mut clamped = false;
            for k in 0..=n_apds {
                let v = &mut values[k * width + n];
                if *v < NEGATIVE_FLOOR {
                    return Err(Error::Numerical(format!(
                        "POVM element Pi_{k}({n}) = {v:.3e} is negative beyond roundoff"
                    )));
                }
                if *v < 0.0 {
                    *v = 0.0;
                    clamped = true;
                }
            }
            if clamped {
                let total: f64 = (0..=n_apds).map(|k| values[k * width + n]).sum();
                for k in 0..=n_apds {
                    values[k * width + n] /= total;
                }
            }
        }
        Ok(ClickPovm {
            n_apds,
            max_photons,
            values,
        })
    }

    pub fn n_apds(&self) -> usize {
        self.n_apds
    }

    pub fn max_photons(&self) -> usize {
        self.max_photons
    }

    /// `Pi_k(n)`.
    pub fn get(&self, k: usize, n: usize) -> f64 {
        self.values[k * (self.max_photons + 1) + n]
    }

    /// `Pi_k(n)` for `n = 0..=max_photons`.
    pub fn row(&self, k: usize) -> &[f64] {
        let w = self.max_photons + 1;
        &self.values[k * w..(k + 1) * w]
    }
}

fn alternating_table(cfg: &DetectorConfig, max_photons: usize) -> Vec<f64> {
    let n_apds = cfg.n_apds();
    let width = max_photons + 1;
    // powers[i][n] = exp(-i nu) t_i^n
    let powers: Vec<Vec<f64>> = (0..=n_apds)
        .map(|i| {
            let t = cfg.attenuation(i);
            let mut p = (-(i as f64) * cfg.nu()).exp();
            (0..width)
                .map(|_| {
                    let v = p;
                    p *= t;
                    v
                })
                .collect()
        })
        .collect();
    let mut values = vec![0.0; (n_apds + 1) * width];
    for k in 0..=n_apds {
        let outer = binomial(n_apds as u64, k as u64);
        for n in 0..width {
            let mut acc = CompensatedSum::default();
            for j in 0..=k {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                acc.add(sign * binomial(k as u64, j as u64) * powers[n_apds - k + j][n]);
            }
            values[k * width + n] = outer * acc.value();
        }
    }
    values
}

/// Nonnegative-term evaluation for large arrays: photons land uniformly on the
/// APDs and are registered with probability `eta`, tracking how many APDs have
/// fired; every APD left dark then clicks with probability `1 - exp(-nu)`.
fn occupancy_table(cfg: &DetectorConfig, max_photons: usize) -> Vec<f64> {
    let n_apds = cfg.n_apds();
    let nf = n_apds as f64;
    let width = max_photons + 1;
    let dark = -(-cfg.nu()).exp_m1();

    // dark_pmf[free][extra] = Binomial(free, dark) pmf
    let dark_pmf = |free: usize, extra: usize| -> f64 {
        if dark == 0.0 {
            return if extra == 0 { 1.0 } else { 0.0 };
        }
        if dark == 1.0 {
            return if extra == free { 1.0 } else { 0.0 };
        }
        (ln_binomial(free as u64, extra as u64)
            + extra as f64 * dark.ln()
            + (free - extra) as f64 * (-cfg.nu()))
        .exp()
    };
    let dark_table: Vec<Vec<f64>> = (0..=n_apds)
        .map(|free| (0..=free).map(|e| dark_pmf(free, e)).collect())
        .collect();

    let mut values = vec![0.0; (n_apds + 1) * width];
    let mut occ = vec![0.0; n_apds + 1];
    occ[0] = 1.0;
    for n in 0..width {
        for (k0, p0) in occ.iter().enumerate() {
            if *p0 == 0.0 {
                continue;
            }
            for (extra, pd) in dark_table[n_apds - k0].iter().enumerate() {
                values[(k0 + extra) * width + n] += p0 * pd;
            }
        }
        let mut next = vec![0.0; n_apds + 1];
        for k in 0..=n_apds {
            let hit_new = cfg.eta() * (nf - k as f64) / nf;
            next[k] += occ[k] * (1.0 - hit_new);
            if k < n_apds {
                next[k + 1] += occ[k] * hit_new;
            }
        }
        occ = next;
    }
    values
}

fn clamp_probabilities(probs: &mut [f64], what: &str) -> Result<()> {
    let before: f64 = probs.iter().sum();
    let mut clamped = false;
    for (i, p) in probs.iter_mut().enumerate() {
        if *p < NEGATIVE_FLOOR || !p.is_finite() {
            return Err(Error::Numerical(format!(
                "{what}[{i}] = {p:.3e} is negative beyond roundoff"
            )));
        }
        if *p < 0.0 {
            *p = 0.0;
            clamped = true;
        }
    }
    if clamped {
        let after: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p *= before / after);
    }
    Ok(())
}

/// Click-number distribution `c_k` of a single arm.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClickDistribution {
    probabilities: Vec<f64>,
}

impl ClickDistribution {
    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn n_apds(&self) -> usize {
        self.probabilities.len() - 1
    }
}

/// Joint click statistics `c_{k1,k2}` of both arms at one LO phase.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointClickDistribution {
    n_apds: usize,
    probabilities: Vec<f64>,
    phase: f64,
}

impl JointClickDistribution {
    /// Row-major `(k1, k2)` probabilities over `{0..=N}^2`.
    pub fn from_probabilities(
        n_apds: usize,
        mut probabilities: Vec<f64>,
        phase: f64,
    ) -> Result<Self> {
        if n_apds == 0 || probabilities.len() != (n_apds + 1) * (n_apds + 1) {
            return Err(Error::arg(format!(
                "joint click table for N = {n_apds} needs {} entries, got {}",
                (n_apds + 1) * (n_apds + 1),
                probabilities.len()
            )));
        }
        clamp_probabilities(&mut probabilities, "c")?;
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::Numerical(format!(
                "joint click probabilities sum to {total}"
            )));
        }
        Ok(JointClickDistribution {
            n_apds,
            probabilities,
            phase,
        })
    }

    pub fn n_apds(&self) -> usize {
        self.n_apds
    }

    /// LO phase the statistics belong to.
    pub fn phase(&self) -> f64 {
        self.phase
    }

    pub fn get(&self, k1: usize, k2: usize) -> f64 {
        self.probabilities[k1 * (self.n_apds + 1) + k2]
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn marginal_1(&self) -> ClickDistribution {
        let w = self.n_apds + 1;
        ClickDistribution {
            probabilities: (0..w)
                .map(|k1| self.probabilities[k1 * w..(k1 + 1) * w].iter().sum())
                .collect(),
        }
    }

    pub fn marginal_2(&self) -> ClickDistribution {
        let w = self.n_apds + 1;
        ClickDistribution {
            probabilities: (0..w)
                .map(|k2| (0..w).map(|k1| self.get(k1, k2)).sum())
                .collect(),
        }
    }
}

/// Distribution of `k1 - k2` over `-N..=N`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DifferenceDistribution {
    n_apds: usize,
    probabilities: Vec<f64>,
    phase: f64,
}

impl DifferenceDistribution {
    pub fn n_apds(&self) -> usize {
        self.n_apds
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }

    /// `c_{dk}`; zero outside `-N..=N`.
    pub fn get(&self, dk: i64) -> f64 {
        let n = self.n_apds as i64;
        if dk.abs() > n {
            0.0
        } else {
            self.probabilities[(dk + n) as usize]
        }
    }

    /// `(dk, c_dk)` pairs in increasing `dk`.
    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        let n = self.n_apds as i64;
        self.probabilities
            .iter()
            .enumerate()
            .map(move |(i, p)| (i as i64 - n, *p))
    }

    /// `sum_dk dk c_dk`.
    pub fn mean(&self) -> f64 {
        self.iter().map(|(dk, p)| dk as f64 * p).sum()
    }
}

pub fn single_click_distribution(
    dist: &PhotonDistribution,
    cfg: &DetectorConfig,
) -> Result<ClickDistribution> {
    let povm = ClickPovm::new(cfg, dist.cutoff())?;
    let mut probabilities: Vec<f64> = (0..=cfg.n_apds())
        .map(|k| {
            povm.row(k)
                .iter()
                .zip(dist.probabilities())
                .map(|(a, b)| a * b)
                .sum()
        })
        .collect();
    clamp_probabilities(&mut probabilities, "c")?;
    Ok(ClickDistribution { probabilities })
}

/// Product-POVM joint statistics; the phase is taken from the LO of `joint`.
pub fn joint_click_distribution(
    joint: &JointPhotonDistribution,
    cfg: &DetectorConfig,
) -> Result<JointClickDistribution> {
    let n_apds = cfg.n_apds();
    let w = n_apds + 1;
    let total = joint.total_budget();
    let povm = ClickPovm::new(cfg, total)?;

    // half[n1][k2] = sum_{n2} p(n1, n2) Pi_k2(n2)
    let half: Vec<Vec<f64>> = (0..=total)
        .map(|n1| {
            let row = joint.row(n1);
            (0..w)
                .map(|k2| row.iter().zip(povm.row(k2)).map(|(p, pi)| p * pi).sum())
                .collect()
        })
        .collect();
    let mut probabilities = vec![0.0; w * w];
    for k1 in 0..w {
        let pi1 = povm.row(k1);
        for (n1, h) in half.iter().enumerate() {
            for k2 in 0..w {
                probabilities[k1 * w + k2] += pi1[n1] * h[k2];
            }
        }
    }
    clamp_probabilities(&mut probabilities, "c")?;
    Ok(JointClickDistribution {
        n_apds,
        probabilities,
        phase: joint.lo().phi(),
    })
}

pub fn difference_distribution(joint: &JointClickDistribution) -> DifferenceDistribution {
    let n = joint.n_apds();
    let mut probabilities = vec![0.0; 2 * n + 1];
    for k1 in 0..=n {
        for k2 in 0..=n {
            probabilities[k1 + n - k2] += joint.get(k1, k2);
        }
    }
    DifferenceDistribution {
        n_apds: n,
        probabilities,
        phase: joint.phase(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{photon_distribution, FockVector, Signal};
    use crate::interferometer::{joint_photon_distribution, mix_on_beamsplitter, LocalOscillator};
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;

    fn binomial_pmf(n: usize, p: f64, k: usize) -> f64 {
        binomial(n as u64, k as u64) * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)
    }

    /// Brute force over which APDs absorbed a registered photon (bit mask),
    /// then over which of the remaining APDs dark-click.
    fn enumerated_povm(cfg: &DetectorConfig, n: usize) -> Vec<f64> {
        let big_n = cfg.n_apds();
        let states = 1usize << big_n;
        let mut occ = vec![0.0; states];
        occ[0] = 1.0;
        for _ in 0..n {
            let mut next = vec![0.0; states];
            for (mask, p) in occ.iter().enumerate() {
                next[mask] += p * (1.0 - cfg.eta());
                for a in 0..big_n {
                    next[mask | (1 << a)] += p * cfg.eta() / big_n as f64;
                }
            }
            occ = next;
        }
        let dark = 1.0 - (-cfg.nu()).exp();
        let mut out = vec![0.0; big_n + 1];
        for (mask, p) in occ.iter().enumerate() {
            for dark_mask in 0..states {
                if dark_mask & mask != 0 {
                    continue;
                }
                let free = big_n - mask.count_ones() as usize;
                let d = dark_mask.count_ones() as usize;
                let pd = dark.powi(d as i32) * (1.0 - dark).powi((free - d) as i32);
                out[(mask | dark_mask).count_ones() as usize] += p * pd;
            }
        }
        out
    }

    /// Expands `:(1-E)^k E^(N-k):` term by term, with `<n|:exp(-x n):|n>` written
    /// as `sum_l (-x)^l <n|a†^l a^l|n>/l! = sum_l (-x)^l C(n, l)`.
    fn normally_ordered_povm(cfg: &DetectorConfig, k: usize, n: usize) -> f64 {
        let big_n = cfg.n_apds();
        let mut total = 0.0;
        for j in 0..=k {
            let i = big_n - k + j;
            let x = cfg.eta() * i as f64 / big_n as f64;
            let expect: f64 = (0..=n)
                .map(|l| (-x).powi(l as i32) * binomial(n as u64, l as u64))
                .sum();
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            total += sign * binomial(k as u64, j as u64) * (-(i as f64) * cfg.nu()).exp() * expect;
        }
        binomial(big_n as u64, k as u64) * total
    }

    #[test]
    fn povm_matches_brute_force_oracles() {
        for big_n in 1..=4 {
            for (eta, nu) in [(1.0, 0.0), (0.5, 0.25), (0.3, 1.1)] {
                let cfg = DetectorConfig::new(big_n, eta, nu).unwrap();
                let povm = ClickPovm::new(&cfg, 10).unwrap();
                for n in 0..=10 {
                    let brute = enumerated_povm(&cfg, n);
                    for k in 0..=big_n {
                        assert_abs_diff_eq!(povm.get(k, n), brute[k], epsilon = 1e-12);
                        assert_abs_diff_eq!(
                            povm.get(k, n),
                            normally_ordered_povm(&cfg, k, n),
                            epsilon = 1e-9
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn occupancy_path_agrees_with_alternating_sum() {
        for (big_n, tol) in [(4, 1e-13), (8, 1e-12), (16, 1e-9)] {
            let cfg = DetectorConfig::new(big_n, 0.7, 0.3).unwrap();
            let a = alternating_table(&cfg, 40);
            let b = occupancy_table(&cfg, 40);
            for (x, y) in a.iter().zip(&b) {
                assert_abs_diff_eq!(x, y, epsilon = tol);
            }
        }
    }

    #[test]
    fn povm_completeness_large_and_small() {
        for big_n in [1, 4, 8, 9, 33, 200] {
            let cfg = DetectorConfig::new(big_n, 0.8, 0.1).unwrap();
            let povm = ClickPovm::new(&cfg, 60).unwrap();
            for n in 0..=60 {
                let s: f64 = (0..=big_n).map(|k| povm.get(k, n)).sum();
                assert_abs_diff_eq!(s, 1.0, epsilon = 1e-12);
                assert!((0..=big_n).all(|k| povm.get(k, n) >= 0.0));
            }
        }
    }

    #[test]
    fn vacuum_without_dark_counts_never_clicks() {
        let cfg = DetectorConfig::new(4, 0.5, 0.0).unwrap();
        let c =
            single_click_distribution(&photon_distribution(&FockVector::vacuum(5)), &cfg).unwrap();
        assert_eq!(c.probabilities()[0], 1.0);
        assert!(c.probabilities()[1..].iter().all(|p| *p == 0.0));
    }

    #[test]
    fn coherent_state_gives_binomial() {
        for (alpha, big_n, eta, nu) in
            [(2.0, 4, 0.5, 0.25), (1.3, 6, 0.9, 0.0), (0.0, 4, 0.5, 0.25)]
        {
            let cfg = DetectorConfig::new(big_n, eta, nu).unwrap();
            let s = Signal::coherent(Complex64::new(alpha, 0.0))
                .build(1e-12)
                .unwrap();
            let c = single_click_distribution(&photon_distribution(&s), &cfg).unwrap();
            let p = 1.0 - (-eta * alpha * alpha / big_n as f64 - nu).exp();
            for k in 0..=big_n {
                assert_abs_diff_eq!(
                    c.probabilities()[k],
                    binomial_pmf(big_n, p, k),
                    epsilon = 1e-11
                );
            }
        }
    }

    #[test]
    fn dark_counts_reduce_no_click_probability() {
        let vac = photon_distribution(&FockVector::vacuum(0));
        let mut last = 1.1;
        for nu in [0.0, 0.1, 0.25, 0.5, 1.0] {
            let cfg = DetectorConfig::new(4, 0.5, nu).unwrap();
            let c0 = single_click_distribution(&vac, &cfg)
                .unwrap()
                .probabilities()[0];
            assert!(c0 < last);
            last = c0;
        }
    }

    #[test]
    fn blind_detector_never_clicks() {
        let cfg = DetectorConfig::new(4, 0.0, 0.0).unwrap();
        let s = Signal::Squeezed { xi: 1.0 }.build(1e-10).unwrap();
        let c = single_click_distribution(&photon_distribution(&s), &cfg).unwrap();
        assert_abs_diff_eq!(c.probabilities()[0], s.retained_norm(), epsilon = 1e-15);
    }

    fn joint_clicks(
        signal: Signal,
        r: f64,
        phi: f64,
        cfg: &DetectorConfig,
    ) -> JointClickDistribution {
        let s = signal.build(1e-10).unwrap();
        let lo = LocalOscillator::new(r, phi).unwrap();
        let joint = joint_photon_distribution(&mix_on_beamsplitter(&s, &lo).unwrap());
        joint_click_distribution(&joint, cfg).unwrap()
    }

    #[test]
    fn joint_statistics_properties() {
        let cfg = DetectorConfig::new(4, 0.5, 0.25).unwrap();
        let vac = joint_clicks(
            Signal::Vacuum,
            0.0,
            0.0,
            &DetectorConfig::new(4, 0.5, 0.0).unwrap(),
        );
        assert_abs_diff_eq!(vac.get(0, 0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(difference_distribution(&vac).get(0), 1.0, epsilon = 1e-15);

        let vac = joint_clicks(Signal::Vacuum, 2.0, 0.7, &cfg);
        for k1 in 0..=4 {
            for k2 in 0..=4 {
                assert_abs_diff_eq!(vac.get(k1, k2), vac.get(k2, k1), epsilon = 1e-14);
            }
        }
        let diff = difference_distribution(&vac);
        for dk in 0..=4 {
            assert_abs_diff_eq!(diff.get(dk), diff.get(-dk), epsilon = 1e-14);
        }

        let sig = Signal::Squeezed { xi: 0.5 }.build(1e-10).unwrap();
        let lo = LocalOscillator::new(2.0, 0.4).unwrap();
        let joint = joint_photon_distribution(&mix_on_beamsplitter(&sig, &lo).unwrap());
        let clicks = joint_click_distribution(&joint, &cfg).unwrap();
        assert_abs_diff_eq!(
            clicks.probabilities().iter().sum::<f64>(),
            1.0,
            epsilon = 1e-10
        );
        assert_abs_diff_eq!(clicks.phase(), 0.4);
        let direct = single_click_distribution(&joint.marginal_1(), &cfg).unwrap();
        for (a, b) in clicks
            .marginal_1()
            .probabilities()
            .iter()
            .zip(direct.probabilities())
        {
            assert_abs_diff_eq!(a, b, epsilon = 1e-14);
        }
    }

    #[test]
    fn coherent_difference_peaks_positive_near_zero_phase() {
        let cfg = DetectorConfig::new(4, 1.0, 0.0).unwrap();
        let at = |phi: f64| {
            difference_distribution(&joint_clicks(
                Signal::coherent(Complex64::new(2.0, 0.0)),
                2.0,
                phi,
                &cfg,
            ))
        };
        let d0 = at(0.0);
        let dpi = at(std::f64::consts::PI);
        assert!(d0.mean() > 3.0);
        assert_abs_diff_eq!(d0.mean(), -dpi.mean(), epsilon = 1e-12);
        let (best, _) = d0.iter().fold(
            (0, 0.0),
            |acc, (dk, p)| if p > acc.1 { (dk, p) } else { acc },
        );
        assert!(best > 0);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(DetectorConfig::new(0, 0.5, 0.0).is_err());
        assert!(DetectorConfig::new(4, 1.5, 0.0).is_err());
        assert!(DetectorConfig::new(4, 0.5, -0.1).is_err());
        assert!(
            JointClickDistribution::from_probabilities(1, vec![0.5, 0.5, -1e-3, 0.001], 0.0)
                .is_err()
        );
        let ok =
            JointClickDistribution::from_probabilities(1, vec![0.5, 0.5 + 1e-13, -1e-13, 0.0], 0.0)
                .unwrap();
        assert!(ok.probabilities().iter().all(|p| *p >= 0.0));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]
            #[test]
            fn joint_clicks_normalised(xi in 0.0f64..1.2, phi in 0.0f64..6.3, eta in 0.0f64..1.0, nu in 0.0f64..1.0) {
                let cfg = DetectorConfig::new(4, eta, nu).unwrap();
                let c = joint_clicks(Signal::Squeezed { xi }, 2.0, phi, &cfg);
                prop_assert!((c.probabilities().iter().sum::<f64>() - 1.0).abs() < 1e-10);
                prop_assert!(c.probabilities().iter().all(|p| *p >= 0.0));
            }
        }
    }
}
