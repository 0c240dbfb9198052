//! Classical Gaussian fluctuations of the local oscillator.
//!
//! The LO amplitude is written `beta = (x + i p) e^{i phi}` in the frame rotated
//! by the mean phase, with independent Gaussians `x ~ N(r, sigma_x^2)` and
//! `p ~ N(0, sigma_p^2)`. Noisy moments are the average of the noiseless
//! moments over this distribution; each node `(x, p)` is an LO with modulus
//! `|x + i p|` and phase `phi + atan2(p, x)`.
//!
//! The average is taken with a tensor-product Gauss-Hermite rule. A dimension
//! with zero width collapses to a single node, and node pairs whose joint
//! weight is negligible are dropped before any state is mixed.

use gauss_quad::hermite::GaussHermite;
use num_complex::Complex64;
use serde::Serialize;

use crate::detector::DetectorConfig;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::fock::FockVector;
use crate::interferometer::LocalOscillator;
use crate::moments::{x_moments_analytic, MomentSet};
use crate::sum::CompensatedSum;
use crate::witness::normally_ordered_variance;

/// Node count per noisy dimension before adaptive refinement.
pub const DEFAULT_NODES: usize = 21;

/// Largest node count per dimension the adaptive refinement may reach.
pub const MAX_NODES: usize = 168;

/// Doubling the node counts must change every moment by less than this.
pub const STABILITY_TOLERANCE: f64 = 1e-8;

/// Node pairs with normalized joint weight below this are skipped. Moments
/// are bounded by `N^m`, so the dropped mass contributes far below the
/// stability tolerance.
const PRUNE_WEIGHT: f64 = 1e-16;

/// Gaussian LO fluctuations around the mean amplitude `r e^{i phi}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LoNoiseModel {
    sigma_x: f64,
    sigma_p: f64,
    mean_r: f64,
    mean_phi: f64,
}

impl LoNoiseModel {
    pub fn new(sigma_x: f64, sigma_p: f64, mean_r: f64, mean_phi: f64) -> Result<Self> {
        for (name, v) in [("sigma_x", sigma_x), ("sigma_p", sigma_p)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::arg(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        // Validates r and phi the same way a noiseless LO would.
        let lo = LocalOscillator::new(mean_r, mean_phi)?;
        Ok(LoNoiseModel {
            sigma_x,
            sigma_p,
            mean_r: lo.r(),
            mean_phi: lo.phi(),
        })
    }

    /// No fluctuations around `lo`.
    pub fn noiseless(lo: &LocalOscillator) -> Self {
        LoNoiseModel {
            sigma_x: 0.0,
            sigma_p: 0.0,
            mean_r: lo.r(),
            mean_phi: lo.phi(),
        }
    }

    pub fn sigma_x(&self) -> f64 {
        self.sigma_x
    }

    pub fn sigma_p(&self) -> f64 {
        self.sigma_p
    }

    pub fn mean_r(&self) -> f64 {
        self.mean_r
    }

    pub fn mean_phi(&self) -> f64 {
        self.mean_phi
    }

    pub fn is_noiseless(&self) -> bool {
        self.sigma_x == 0.0 && self.sigma_p == 0.0
    }

    pub fn mean_lo(&self) -> LocalOscillator {
        LocalOscillator::new(self.mean_r, self.mean_phi).expect("validated on construction")
    }

    pub fn with_phase(&self, phi: f64) -> Result<Self> {
        LoNoiseModel::new(self.sigma_x, self.sigma_p, self.mean_r, phi)
    }
}

/// Standard-normal nodes `u` and normalized weights for one dimension.
#[derive(Debug, Clone, PartialEq)]
struct Rule1d {
    nodes: Vec<(f64, f64)>,
}

impl Rule1d {
    fn gauss_hermite(n: usize) -> Result<Self> {
        if n == 1 {
            return Ok(Rule1d {
                nodes: vec![(0.0, 1.0)],
            });
        }
        let gh = GaussHermite::new(n)
            .map_err(|e| Error::arg(format!("cannot build a {n}-node Gauss-Hermite rule: {e}")))?;
        // int e^{-z^2} f(z) dz with z = u / sqrt(2) turns into an expectation
        // over u ~ N(0, 1) after dividing by sqrt(pi).
        let norm = std::f64::consts::PI.sqrt();
        let mut nodes: Vec<(f64, f64)> = gh
            .as_node_weight_pairs()
            .iter()
            .map(|&(z, w)| (std::f64::consts::SQRT_2 * z, w / norm))
            .collect();
        nodes.sort_by(|a, b| a.0.total_cmp(&b.0));
        // The exact rule is symmetric about 0; enforcing that in floating point
        // makes odd moments vanish exactly instead of to rounding.
        for i in 0..n / 2 {
            let j = n - 1 - i;
            let u = 0.5 * (nodes[j].0 - nodes[i].0);
            let w = 0.5 * (nodes[i].1 + nodes[j].1);
            nodes[i] = (-u, w);
            nodes[j] = (u, w);
        }
        if n % 2 == 1 {
            nodes[n / 2].0 = 0.0;
        }
        Ok(Rule1d { nodes })
    }
}

/// Tensor-product Gauss-Hermite rule over the `(x, p)` plane.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    n_x: usize,
    n_p: usize,
    max_nodes: usize,
    x: Rule1d,
    p: Rule1d,
}

impl QuadratureRule {
    /// `n_x x n_p` nodes; exact for polynomials of degree `2 n - 1` in each
    /// standardized coordinate. A count of 1 is the one-point rule at the mean.
    pub fn gauss_hermite(n_x: usize, n_p: usize) -> Result<Self> {
        for (name, n) in [("n_x", n_x), ("n_p", n_p)] {
            if n == 0 {
                return Err(Error::arg(format!("{name} must be >= 1")));
            }
        }
        Ok(QuadratureRule {
            n_x,
            n_p,
            max_nodes: MAX_NODES,
            x: Rule1d::gauss_hermite(n_x)?,
            p: Rule1d::gauss_hermite(n_p)?,
        })
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_p(&self) -> usize {
        self.n_p
    }

    /// Caps the per-dimension node count adaptive refinement may reach.
    pub fn with_max_nodes(mut self, max_nodes: usize) -> Self {
        self.max_nodes = max_nodes;
        self
    }

    pub fn max_nodes(&self) -> usize {
        self.max_nodes
    }

    pub fn doubled(&self) -> Result<Self> {
        Ok(QuadratureRule::gauss_hermite(2 * self.n_x, 2 * self.n_p)?
            .with_max_nodes(self.max_nodes))
    }

    /// The rule actually used for `noise`: zero-width dimensions collapse to
    /// one node.
    fn adapted_to(&self, noise: &LoNoiseModel) -> Result<Self> {
        let n_x = if noise.sigma_x == 0.0 { 1 } else { self.n_x };
        let n_p = if noise.sigma_p == 0.0 { 1 } else { self.n_p };
        if (n_x, n_p) == (self.n_x, self.n_p) {
            Ok(self.clone())
        } else {
            Ok(QuadratureRule::gauss_hermite(n_x, n_p)?.with_max_nodes(self.max_nodes))
        }
    }

    /// `E[f(u, v)]` for independent standard normals `u, v`.
    pub fn expectation(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        let mut acc = CompensatedSum::default();
        for &(u, wu) in &self.x.nodes {
            for &(v, wv) in &self.p.nodes {
                acc.add(wu * wv * f(u, v));
            }
        }
        acc.value()
    }

    /// LO amplitudes and weights for `noise`, negligible weights dropped,
    /// in a fixed order.
    pub fn lo_nodes(&self, noise: &LoNoiseModel) -> Vec<(Complex64, f64)> {
        let rotation = Complex64::from_polar(1.0, noise.mean_phi);
        let mut out = Vec::with_capacity(self.x.nodes.len() * self.p.nodes.len());
        for &(u, wu) in &self.x.nodes {
            for &(v, wv) in &self.p.nodes {
                let w = wu * wv;
                if w < PRUNE_WEIGHT {
                    continue;
                }
                let beta =
                    Complex64::new(noise.mean_r + noise.sigma_x * u, noise.sigma_p * v) * rotation;
                out.push((beta, w));
            }
        }
        out
    }
}

impl Default for QuadratureRule {
    fn default() -> Self {
        QuadratureRule::gauss_hermite(DEFAULT_NODES, DEFAULT_NODES)
            .expect("default node count is valid")
    }
}

/// Noise-averaged moments with the quadrature that produced them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoisyMoments {
    pub moments: MomentSet,
    /// Node counts of the accepted (finer) rule.
    pub n_x: usize,
    pub n_p: usize,
    /// Largest moment change between the accepted rule and the one before it.
    pub change: f64,
}

fn average_over_rule(
    signal: &FockVector,
    noise: &LoNoiseModel,
    cfg: &DetectorConfig,
    max_order: usize,
    rule: &QuadratureRule,
    exec: Execution,
) -> Result<Vec<f64>> {
    let nodes = rule.lo_nodes(noise);
    let per_node = exec.try_map(&nodes, |&(beta, _)| {
        let lo = LocalOscillator::from_amplitude(beta)?;
        x_moments_analytic(signal, &lo, cfg, max_order)
    })?;
    let mut weight = CompensatedSum::default();
    let mut sums = vec![CompensatedSum::default(); max_order + 1];
    for ((_, w), ms) in nodes.iter().zip(&per_node) {
        weight.add(*w);
        for (acc, m) in sums.iter_mut().zip(ms.moments()) {
            acc.add(w * m);
        }
    }
    // Renormalizing over the retained nodes keeps <:X^0:> = 1 exactly.
    let total = weight.value();
    Ok(sums.iter().map(|s| s.value() / total).collect())
}

/// `int d^2 beta P_LO(beta) <:X^m(phi_beta):>` for `m = 0..=max_order`,
/// refining `rule` by doubling until the result is stable.
pub fn noisy_moments(
    signal: &FockVector,
    noise: &LoNoiseModel,
    cfg: &DetectorConfig,
    max_order: usize,
    rule: &QuadratureRule,
) -> Result<MomentSet> {
    noisy_moments_with(signal, noise, cfg, max_order, rule, Execution::default()).map(|n| n.moments)
}

pub fn noisy_moments_with(
    signal: &FockVector,
    noise: &LoNoiseModel,
    cfg: &DetectorConfig,
    max_order: usize,
    rule: &QuadratureRule,
    exec: Execution,
) -> Result<NoisyMoments> {
    if noise.is_noiseless() {
        let moments = x_moments_analytic(signal, &noise.mean_lo(), cfg, max_order)?;
        return Ok(NoisyMoments {
            moments,
            n_x: 1,
            n_p: 1,
            change: 0.0,
        });
    }
    let mut coarse_rule = rule.adapted_to(noise)?;
    let mut coarse = average_over_rule(signal, noise, cfg, max_order, &coarse_rule, exec)?;
    loop {
        let fine_rule = coarse_rule.doubled()?.adapted_to(noise)?;
        let fine = average_over_rule(signal, noise, cfg, max_order, &fine_rule, exec)?;
        let change = coarse
            .iter()
            .zip(&fine)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if change < STABILITY_TOLERANCE {
            return Ok(NoisyMoments {
                moments: MomentSet::new(fine, noise.mean_phi, cfg.n_apds())?,
                n_x: fine_rule.n_x,
                n_p: fine_rule.n_p,
                change,
            });
        }
        if 2 * fine_rule.n_x.max(fine_rule.n_p) > fine_rule.max_nodes {
            return Err(Error::Quadrature {
                nodes: fine_rule.n_x * fine_rule.n_p,
                change,
                tolerance: STABILITY_TOLERANCE,
            });
        }
        coarse_rule = fine_rule;
        coarse = fine;
    }
}

/// `<:[Delta X(phi)]^2:>` from noise-averaged moments at every phase of `phases`.
pub fn noisy_variance_sweep(
    signal: &FockVector,
    noise: &LoNoiseModel,
    cfg: &DetectorConfig,
    phases: &[f64],
    rule: &QuadratureRule,
) -> Result<Vec<(f64, f64)>> {
    noisy_variance_sweep_with(signal, noise, cfg, phases, rule, Execution::default())
}

pub fn noisy_variance_sweep_with(
    signal: &FockVector,
    noise: &LoNoiseModel,
    cfg: &DetectorConfig,
    phases: &[f64],
    rule: &QuadratureRule,
    exec: Execution,
) -> Result<Vec<(f64, f64)>> {
    phases
        .iter()
        .map(|&phi| {
            let at_phi = noise.with_phase(phi)?;
            let noisy = noisy_moments_with(signal, &at_phi, cfg, 2, rule, exec)?;
            Ok((phi, normally_ordered_variance(&noisy.moments)?))
        })
        .collect()
}
