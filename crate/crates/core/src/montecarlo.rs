//! Finite-shot emulation: sample click events from a joint click table,
//! estimate moments and witnesses from the empirical frequencies, and attach
//! bootstrap standard errors.
//!
//! Randomness is keyed by `(seed, domain, task index)`: every sampling batch
//! and every bootstrap resample owns its own ChaCha8 stream, so results are
//! identical for any thread count. Reductions run in task order.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Binomial;
use serde::Serialize;

use crate::detector::JointClickDistribution;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::moments::{x_moments_from_counts, MomentSet};
use crate::witness::{minor_determinant_with_tolerance, MomentMatrix, Verdict};

/// Bootstrap resamples used unless the caller asks otherwise.
pub const DEFAULT_BOOTSTRAP_RESAMPLES: usize = 200;

/// A witness counts as nonclassical only below `-WITNESS_SIGMAS * SE`.
/// A heuristic default, not a calibrated error rate.
pub const WITNESS_SIGMAS: f64 = 3.0;

/// Shots drawn per RNG stream.
const BATCH_SHOTS: u64 = 1 << 16;

const SAMPLING_DOMAIN: u64 = 1;
const BOOTSTRAP_DOMAIN: u64 = 2;

/// A generator owned by one task, independent of every other `(domain, index)`.
fn keyed_rng(seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&domain.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// Empirical joint click counts over `{0..=N}^2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClickHistogram {
    n_apds: usize,
    counts: Vec<u64>,
    shots: u64,
    seed: u64,
    phase: f64,
}

impl ClickHistogram {
    /// Row-major `(k1, k2)` counts; `shots` is their sum.
    pub fn from_counts(n_apds: usize, counts: Vec<u64>, seed: u64, phase: f64) -> Result<Self> {
        if n_apds == 0 || counts.len() != (n_apds + 1) * (n_apds + 1) {
            return Err(Error::arg(format!(
                "click histogram for N = {n_apds} needs {} cells, got {}",
                (n_apds + 1) * (n_apds + 1),
                counts.len()
            )));
        }
        let shots: u64 = counts.iter().sum();
        if shots == 0 {
            return Err(Error::arg("click histogram holds no shots"));
        }
        Ok(ClickHistogram {
            n_apds,
            counts,
            shots,
            seed,
            phase,
        })
    }

    pub fn n_apds(&self) -> usize {
        self.n_apds
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn get(&self, k1: usize, k2: usize) -> u64 {
        self.counts[k1 * (self.n_apds + 1) + k2]
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }

    /// Relative frequencies as a click table.
    pub fn frequencies(&self) -> Result<JointClickDistribution> {
        frequencies_of(self.n_apds, &self.counts, self.shots, self.phase)
    }
}

fn frequencies_of(
    n_apds: usize,
    counts: &[u64],
    shots: u64,
    phase: f64,
) -> Result<JointClickDistribution> {
    let total = shots as f64;
    let probs = counts.iter().map(|&c| c as f64 / total).collect();
    JointClickDistribution::from_probabilities(n_apds, probs, phase)
}

/// How an estimate's error was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateMethod {
    /// Point estimate only; the standard error is reported as 0.
    PlugIn,
    /// Plug-in value with a nonparametric bootstrap standard error.
    Bootstrap,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimateWithError {
    pub value: f64,
    pub standard_error: f64,
    pub method: EstimateMethod,
}

/// A determinant estimated from counts, with its statistical verdict.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessEstimate {
    pub index_set: Vec<usize>,
    pub estimate: EstimateWithError,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapOptions {
    /// 0 skips the bootstrap; otherwise at least 2.
    pub resamples: usize,
    pub execution: Execution,
}

impl Default for BootstrapOptions {
    fn default() -> Self {
        BootstrapOptions {
            resamples: DEFAULT_BOOTSTRAP_RESAMPLES,
            execution: Execution::default(),
        }
    }
}

/// Draws `shots` i.i.d. `(k1, k2)` events from `joint`.
pub fn sample_clicks(
    joint: &JointClickDistribution,
    shots: u64,
    seed: u64,
) -> Result<ClickHistogram> {
    sample_clicks_with(joint, shots, seed, Execution::default())
}

pub fn sample_clicks_with(
    joint: &JointClickDistribution,
    shots: u64,
    seed: u64,
    exec: Execution,
) -> Result<ClickHistogram> {
    if shots == 0 {
        return Err(Error::arg("shots must be at least 1"));
    }
    let index = WeightedIndex::new(joint.probabilities())
        .map_err(|e| Error::Numerical(format!("cannot sample from the click table: {e}")))?;
    let cells = joint.probabilities().len();
    let batches = shots.div_ceil(BATCH_SHOTS) as usize;
    let partial = exec.map_range(batches, |b| {
        let start = b as u64 * BATCH_SHOTS;
        let size = BATCH_SHOTS.min(shots - start);
        let mut rng = keyed_rng(seed, SAMPLING_DOMAIN, b as u64);
        let mut counts = vec![0u64; cells];
        for _ in 0..size {
            counts[index.sample(&mut rng)] += 1;
        }
        counts
    });
    let mut counts = vec![0u64; cells];
    for batch in partial {
        for (c, b) in counts.iter_mut().zip(batch) {
            *c += b;
        }
    }
    ClickHistogram::from_counts(joint.n_apds(), counts, seed, joint.phase())
}

/// Resampling `shots` events with replacement from `counts`: a multinomial
/// draw, taken as a chain of conditional binomials.
fn resample_counts(rng: &mut ChaCha8Rng, counts: &[u64], shots: u64) -> Result<Vec<u64>> {
    let mut out = vec![0u64; counts.len()];
    let (mut left, mut mass) = (shots, shots);
    for (o, &c) in out.iter_mut().zip(counts) {
        if left == 0 || mass == 0 {
            break;
        }
        let p = (c as f64 / mass as f64).min(1.0);
        let k = Binomial::new(left, p)
            .map_err(|e| Error::Numerical(format!("bootstrap binomial: {e}")))?
            .sample(rng);
        *o = k;
        left -= k;
        mass -= c;
    }
    Ok(out)
}

fn standard_deviation(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Plug-in statistics of `hist` and their bootstrap standard errors.
fn bootstrap(
    hist: &ClickHistogram,
    options: BootstrapOptions,
    statistic: impl Fn(&JointClickDistribution) -> Result<Vec<f64>> + Sync + Send,
) -> Result<Vec<EstimateWithError>> {
    if options.resamples == 1 {
        return Err(Error::arg("a bootstrap needs at least 2 resamples"));
    }
    let point = statistic(&hist.frequencies()?)?;
    if options.resamples == 0 {
        return Ok(point
            .into_iter()
            .map(|value| EstimateWithError {
                value,
                standard_error: 0.0,
                method: EstimateMethod::PlugIn,
            })
            .collect());
    }
    let replicates = options
        .execution
        .map_range(options.resamples, |b| {
            let mut rng = keyed_rng(hist.seed, BOOTSTRAP_DOMAIN, b as u64);
            let counts = resample_counts(&mut rng, &hist.counts, hist.shots)?;
            statistic(&frequencies_of(
                hist.n_apds,
                &counts,
                hist.shots,
                hist.phase,
            )?)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(point
        .into_iter()
        .enumerate()
        .map(|(i, value)| {
            let column: Vec<f64> = replicates.iter().map(|r| r[i]).collect();
            EstimateWithError {
                value,
                standard_error: standard_deviation(&column),
                method: EstimateMethod::Bootstrap,
            }
        })
        .collect())
}

/// The plug-in moment estimator applied to any click table; on an exact
/// table it returns the exact counts-route moments.
pub fn plug_in_moments(joint: &JointClickDistribution, max_order: usize) -> Result<MomentSet> {
    x_moments_from_counts(joint, max_order)
}

/// `<:X^m:>` for `m = 0..=max_order` with bootstrap errors; needs `max_order <= N`.
pub fn estimate_moments(hist: &ClickHistogram, max_order: usize) -> Result<Vec<EstimateWithError>> {
    estimate_moments_with(hist, max_order, BootstrapOptions::default())
}

pub fn estimate_moments_with(
    hist: &ClickHistogram,
    max_order: usize,
    options: BootstrapOptions,
) -> Result<Vec<EstimateWithError>> {
    bootstrap(hist, options, |f| {
        Ok(plug_in_moments(f, max_order)?.moments().to_vec())
    })
}

fn sampled_minor(freqs: &JointClickDistribution, index_set: &[usize], dim: usize) -> Result<f64> {
    let moments = plug_in_moments(freqs, 2 * (dim - 1))?;
    let matrix = MomentMatrix::with_dim(&moments, dim)?;
    Ok(minor_determinant_with_tolerance(&matrix, index_set, 0.0)?.determinant)
}

/// Principal minor `index_set` of the sampled moment matrix. The verdict is
/// nonclassical only when the value lies below `-3 SE`.
pub fn estimate_witness(hist: &ClickHistogram, index_set: &[usize]) -> Result<WitnessEstimate> {
    estimate_witness_with(hist, index_set, BootstrapOptions::default())
}

pub fn estimate_witness_with(
    hist: &ClickHistogram,
    index_set: &[usize],
    options: BootstrapOptions,
) -> Result<WitnessEstimate> {
    let dim = index_set
        .iter()
        .max()
        .map(|&m| m + 1)
        .ok_or_else(|| Error::arg("empty index set"))?;
    if 2 * (dim - 1) > hist.n_apds {
        return Err(Error::arg(format!(
            "index set {index_set:?} needs moments up to order {}, counts reach N = {}",
            2 * (dim - 1),
            hist.n_apds
        )));
    }
    let estimate = bootstrap(hist, options, |f| {
        Ok(vec![sampled_minor(f, index_set, dim)?])
    })?[0];
    Ok(WitnessEstimate {
        index_set: index_set.to_vec(),
        estimate,
        verdict: Verdict::from_threshold(estimate.value, WITNESS_SIGMAS * estimate.standard_error),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::joint_click_distribution;
    use crate::interferometer::{joint_photon_distribution, mix_on_beamsplitter, LocalOscillator};
    use crate::moments::x_moments_analytic;
    use crate::witness::normally_ordered_variance;
    use crate::{DetectorConfig, Signal};
    use num_complex::Complex64;

    fn reference_cfg() -> DetectorConfig {
        DetectorConfig::new(4, 0.5, 0.25).unwrap()
    }

    fn clicks(signal: Signal, phi: f64) -> JointClickDistribution {
        let s = signal.build(1e-12).unwrap();
        let lo = LocalOscillator::new(2.0, phi).unwrap();
        joint_click_distribution(
            &joint_photon_distribution(&mix_on_beamsplitter(&s, &lo).unwrap()),
            &reference_cfg(),
        )
        .unwrap()
    }

    #[test]
    fn point_mass_lands_in_one_cell() {
        let mut probs = vec![0.0; 25];
        probs[0] = 1.0;
        let joint = JointClickDistribution::from_probabilities(4, probs, 0.0).unwrap();
        let hist = sample_clicks(&joint, 1000, 7).unwrap();
        assert_eq!(hist.get(0, 0), 1000);
        assert_eq!(hist.counts().iter().sum::<u64>(), 1000);
    }

    #[test]
    fn zero_shots_rejected() {
        let joint = clicks(Signal::Vacuum, 0.0);
        assert!(sample_clicks(&joint, 0, 1).is_err());
        assert!(ClickHistogram::from_counts(4, vec![0; 25], 0, 0.0).is_err());
        assert!(ClickHistogram::from_counts(4, vec![1; 24], 0, 0.0).is_err());
    }

    #[test]
    fn sampling_is_deterministic_and_thread_independent() {
        let joint = clicks(Signal::coherent(Complex64::new(1.0, 0.5)), 0.3);
        let shots = 3 * BATCH_SHOTS + 17;
        let a = sample_clicks_with(&joint, shots, 42, Execution::Parallel).unwrap();
        let b = sample_clicks_with(&joint, shots, 42, Execution::Sequential).unwrap();
        let c = sample_clicks(&joint, shots, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.counts(), c.counts());
        assert_eq!(a.shots(), shots);
        let opts = |execution| BootstrapOptions {
            resamples: 50,
            execution,
        };
        assert_eq!(
            estimate_moments_with(&a, 2, opts(Execution::Parallel)).unwrap(),
            estimate_moments_with(&a, 2, opts(Execution::Sequential)).unwrap()
        );
    }

    #[test]
    fn frequencies_within_five_sigma() {
        let joint = clicks(Signal::coherent(Complex64::new(2.0, 0.0)), 0.0);
        let shots = 1_000_000u64;
        let hist = sample_clicks(&joint, shots, 2024).unwrap();
        for (&c, &p) in hist.counts().iter().zip(joint.probabilities()) {
            let sigma = (shots as f64 * p * (1.0 - p)).sqrt();
            let dev = (c as f64 - shots as f64 * p).abs();
            assert!(
                dev <= 5.0 * sigma.max(1e-300) || (p == 0.0 && c == 0),
                "count {c} vs p {p}"
            );
        }
    }

    #[test]
    fn plug_in_on_exact_table_reproduces_exact_moments() {
        let cfg = reference_cfg();
        for (signal, phi) in [
            (Signal::Squeezed { xi: 0.5 }, 0.0),
            (Signal::Superposition { n: 2 }, 0.7),
        ] {
            let s = signal.build(1e-12).unwrap();
            let lo = LocalOscillator::new(2.0, phi).unwrap();
            let exact = x_moments_analytic(&s, &lo, &cfg, 4).unwrap();
            let plug = plug_in_moments(&clicks(signal, phi), 4).unwrap();
            for m in 0..=4 {
                assert!(
                    (exact.moments()[m] - plug.moments()[m]).abs() < 1e-12,
                    "m={m}"
                );
            }
        }
    }

    #[test]
    fn squeezed_mean_within_five_standard_errors() {
        let hist = sample_clicks(&clicks(Signal::Squeezed { xi: 0.5 }, 0.0), 1_000_000, 5).unwrap();
        let est = estimate_moments(&hist, 2).unwrap();
        assert_eq!(est[0].value, 1.0);
        assert_eq!(est[1].method, EstimateMethod::Bootstrap);
        // odd moments of squeezed vacuum vanish: X -> -X swaps the arms
        assert!(
            est[1].value.abs() < 5.0 * est[1].standard_error,
            "{:?}",
            est[1]
        );
    }

    #[test]
    fn standard_error_scales_with_inverse_root_shots() {
        let joint = clicks(Signal::Squeezed { xi: 0.5 }, 0.0);
        let small = estimate_moments(&sample_clicks(&joint, 10_000, 11).unwrap(), 2).unwrap();
        let large = estimate_moments(&sample_clicks(&joint, 1_000_000, 11).unwrap(), 2).unwrap();
        for m in 1..=2 {
            let ratio = small[m].standard_error / large[m].standard_error;
            assert!((7.0..=13.0).contains(&ratio), "m={m}: ratio {ratio}");
        }
    }

    #[test]
    fn witness_verdicts() {
        let coherent = sample_clicks(
            &clicks(Signal::coherent(Complex64::new(1.0, 0.0)), 0.0),
            1_000_000,
            3,
        )
        .unwrap();
        let w = estimate_witness(&coherent, &[0, 1]).unwrap();
        assert_eq!(w.verdict, Verdict::Inconclusive, "{w:?}");

        let joint = clicks(Signal::Squeezed { xi: 0.5 }, 0.0);
        let squeezed = sample_clicks(&joint, 1_000_000, 3).unwrap();
        let w = estimate_witness(&squeezed, &[0, 1]).unwrap();
        assert_eq!(w.verdict, Verdict::NonclassicalWitnessed, "{w:?}");
        let exact = normally_ordered_variance(&plug_in_moments(&joint, 2).unwrap()).unwrap();
        assert!((w.estimate.value - exact).abs() < 5.0 * w.estimate.standard_error);

        let tiny = sample_clicks(&joint, 100, 3).unwrap();
        let w = estimate_witness(&tiny, &[0, 1]).unwrap();
        assert!(w.estimate.standard_error > 1e-2, "{w:?}");

        assert!(estimate_witness(&squeezed, &[0, 3]).is_err());
        assert!(estimate_witness(&squeezed, &[]).is_err());
    }

    #[test]
    fn skipping_the_bootstrap_gives_plug_in_estimates() {
        let hist = sample_clicks(&clicks(Signal::Vacuum, 0.0), 1000, 1).unwrap();
        let opts = BootstrapOptions {
            resamples: 0,
            ..Default::default()
        };
        let est = estimate_moments_with(&hist, 2, opts).unwrap();
        assert!(est
            .iter()
            .all(|e| e.method == EstimateMethod::PlugIn && e.standard_error == 0.0));
        let opts = BootstrapOptions {
            resamples: 1,
            ..Default::default()
        };
        assert!(estimate_moments_with(&hist, 2, opts).is_err());
    }

    #[test]
    fn resampling_preserves_shot_count() {
        let mut rng = keyed_rng(9, BOOTSTRAP_DOMAIN, 0);
        let counts = vec![5, 0, 17, 3, 0, 75];
        for _ in 0..20 {
            let r = resample_counts(&mut rng, &counts, 100).unwrap();
            assert_eq!(r.iter().sum::<u64>(), 100);
            assert_eq!((r[1], r[4]), (0, 0));
        }
    }

    #[test]
    fn three_sigma_interval_covers_the_mean() {
        let joint = clicks(Signal::Squeezed { xi: 0.5 }, 0.0);
        let truth = plug_in_moments(&joint, 1).unwrap().moments()[1];
        let covered = (0..100u64)
            .filter(|&seed| {
                let hist = sample_clicks(&joint, 100_000, 1000 + seed).unwrap();
                let e = estimate_moments(&hist, 1).unwrap()[1];
                (e.value - truth).abs() <= 3.0 * e.standard_error
            })
            .count();
        assert!(covered >= 95, "covered {covered} of 100");
    }
}
