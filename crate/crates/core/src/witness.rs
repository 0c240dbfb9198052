//! Matrix of moments and its principal minors.
//!
//! `M[m][m'] = <:X^(m+m')(phi):>` for `m, m' = 0..=floor(N/2)`. For a state
//! with a non-negative P function every principal minor is non-negative, so a
//! negative minor witnesses nonclassicality. The `{0, 1}` minor is the
//! normally ordered variance `<:X^2:> - <:X:>^2`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::moments::MomentSet;

/// Absolute tolerance below which a minor counts as negative.
pub const DEFAULT_WITNESS_TOLERANCE: f64 = 1e-10;

/// Matrices up to this dimension use cofactor expansion.
const COFACTOR_MAX_DIM: usize = 4;

/// Hankel matrix of click-quadrature moments at one LO phase.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentMatrix {
    dim: usize,
    moments: Vec<f64>,
    phase: f64,
}

impl MomentMatrix {
    /// Full matrix of dimension `floor(N/2) + 1`.
    pub fn from_moments(moments: &MomentSet) -> Result<Self> {
        Self::with_dim(moments, moments.n_apds() / 2 + 1)
    }

    /// Leading `dim x dim` block; needs moments up to order `2 (dim - 1)`.
    pub fn with_dim(moments: &MomentSet, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::arg("moment matrix dimension must be at least 1"));
        }
        let needed = 2 * (dim - 1);
        if moments.max_order() < needed {
            return Err(Error::arg(format!(
                "a {dim}x{dim} moment matrix needs moments up to order {needed}, got {}",
                moments.max_order()
            )));
        }
        Ok(MomentMatrix {
            dim,
            moments: moments.moments()[..=needed].to_vec(),
            phase: moments.phase(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }

    pub fn get(&self, m: usize, mp: usize) -> f64 {
        assert!(
            m < self.dim && mp < self.dim,
            "moment matrix index out of range"
        );
        self.moments[m + mp]
    }

    /// Principal submatrix on `index_set` (assumed valid).
    fn submatrix(&self, index_set: &[usize]) -> Vec<Vec<f64>> {
        index_set
            .iter()
            .map(|&i| index_set.iter().map(|&j| self.get(i, j)).collect())
            .collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        let all: Vec<usize> = (0..self.dim).collect();
        self.submatrix(&all)
    }
}

/// `moment_matrix(moments)`: the full `(floor(N/2)+1)`-dimensional matrix.
pub fn moment_matrix(moments: &MomentSet) -> Result<MomentMatrix> {
    MomentMatrix::from_moments(moments)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    NonclassicalWitnessed,
    Inconclusive,
}

impl Verdict {
    pub fn from_threshold(value: f64, threshold: f64) -> Self {
        if value < -threshold {
            Verdict::NonclassicalWitnessed
        } else {
            Verdict::Inconclusive
        }
    }

    pub fn is_nonclassical(self) -> bool {
        self == Verdict::NonclassicalWitnessed
    }

    pub fn label(self) -> &'static str {
        match self {
            Verdict::NonclassicalWitnessed => "nonclassical-witnessed",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// One principal minor and its verdict.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessReport {
    pub index_set: Vec<usize>,
    pub determinant: f64,
    pub verdict: Verdict,
    pub tolerance: f64,
}

fn validate_index_set(dim: usize, index_set: &[usize]) -> Result<()> {
    if index_set.is_empty() {
        return Err(Error::arg("index set must be nonempty"));
    }
    for (pos, &i) in index_set.iter().enumerate() {
        if i >= dim {
            return Err(Error::arg(format!(
                "index {i} out of range for a {dim}x{dim} moment matrix"
            )));
        }
        if index_set[..pos].contains(&i) {
            return Err(Error::arg(format!("index {i} repeated in index set")));
        }
    }
    Ok(())
}

pub fn minor_determinant(matrix: &MomentMatrix, index_set: &[usize]) -> Result<WitnessReport> {
    minor_determinant_with_tolerance(matrix, index_set, DEFAULT_WITNESS_TOLERANCE)
}

pub fn minor_determinant_with_tolerance(
    matrix: &MomentMatrix,
    index_set: &[usize],
    tolerance: f64,
) -> Result<WitnessReport> {
    if tolerance.is_nan() || tolerance < 0.0 {
        return Err(Error::arg(format!(
            "witness tolerance must be >= 0, got {tolerance}"
        )));
    }
    validate_index_set(matrix.dim(), index_set)?;
    let det = symmetric_determinant(&matrix.submatrix(index_set));
    Ok(WitnessReport {
        index_set: index_set.to_vec(),
        determinant: det,
        verdict: Verdict::from_threshold(det, tolerance),
        tolerance,
    })
}

/// `<:[Delta X]^2:> = <:X^2:> - <:X:>^2`, bitwise equal to the `{0, 1}` minor.
pub fn normally_ordered_variance(moments: &MomentSet) -> Result<f64> {
    if moments.max_order() < 2 {
        return Err(Error::arg(format!(
            "variance needs moments up to order 2, got {}",
            moments.max_order()
        )));
    }
    let m = moments.moments();
    Ok(m[0] * m[2] - m[1] * m[1])
}

/// Which principal minors [`scan_witnesses_with`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOptions {
    /// Scan every nonempty subset rather than only those containing index 0.
    pub all_subsets: bool,
    pub tolerance: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            all_subsets: false,
            tolerance: DEFAULT_WITNESS_TOLERANCE,
        }
    }
}

/// All minors containing index 0, most negative first.
pub fn scan_witnesses(matrix: &MomentMatrix) -> Vec<WitnessReport> {
    scan_witnesses_with(matrix, ScanOptions::default())
}

pub fn scan_witnesses_with(matrix: &MomentMatrix, options: ScanOptions) -> Vec<WitnessReport> {
    let dim = matrix.dim();
    assert!(
        dim < usize::BITS as usize,
        "moment matrix too large to scan"
    );
    let mut reports: Vec<WitnessReport> = (1usize..1 << dim)
        .filter(|mask| options.all_subsets || mask & 1 == 1)
        .map(|mask| {
            let set: Vec<usize> = (0..dim).filter(|i| mask >> i & 1 == 1).collect();
            let det = symmetric_determinant(&matrix.submatrix(&set));
            WitnessReport {
                index_set: set,
                determinant: det,
                verdict: Verdict::from_threshold(det, options.tolerance),
                tolerance: options.tolerance,
            }
        })
        .collect();
    // Stable sort keeps the subset enumeration order for ties.
    reports.sort_by(|a, b| a.determinant.total_cmp(&b.determinant));
    reports
}

/// Determinant of a small symmetric matrix: cofactor expansion up to 4x4,
/// Bunch-Parlett symmetric-indefinite factorization above.
pub fn symmetric_determinant(a: &[Vec<f64>]) -> f64 {
    if a.len() <= COFACTOR_MAX_DIM {
        cofactor_determinant(a)
    } else {
        bunch_parlett_determinant(a)
    }
}

fn cofactor_determinant(a: &[Vec<f64>]) -> f64 {
    match a.len() {
        0 => 1.0,
        1 => a[0][0],
        2 => a[0][0] * a[1][1] - a[0][1] * a[1][0],
        n => {
            let mut total = 0.0;
            for col in 0..n {
                let minor: Vec<Vec<f64>> = a[1..]
                    .iter()
                    .map(|row| {
                        row.iter()
                            .enumerate()
                            .filter(|&(j, _)| j != col)
                            .map(|(_, &v)| v)
                            .collect()
                    })
                    .collect();
                let term = a[0][col] * cofactor_determinant(&minor);
                if col % 2 == 0 {
                    total += term;
                } else {
                    total -= term;
                }
            }
            total
        }
    }
}

/// `P A P^T = L D L^T` with 1x1 and 2x2 diagonal blocks and complete
/// symmetric pivoting; `det A = prod det(D_k)`.
fn bunch_parlett_determinant(input: &[Vec<f64>]) -> f64 {
    let alpha = (1.0 + 17f64.sqrt()) / 8.0;
    let n = input.len();
    let mut a: Vec<Vec<f64>> = input.to_vec();
    let mut det = 1.0;
    let mut k = 0;

    let swap_sym = |a: &mut Vec<Vec<f64>>, i: usize, j: usize| {
        if i != j {
            a.swap(i, j);
            for row in a.iter_mut() {
                row.swap(i, j);
            }
        }
    };

    while k < n {
        let mut diag_max = (0.0f64, k);
        for i in k..n {
            if a[i][i].abs() > diag_max.0 {
                diag_max = (a[i][i].abs(), i);
            }
        }
        let mut off_max = (0.0f64, k, k);
        for i in k..n {
            for j in (i + 1)..n {
                if a[i][j].abs() > off_max.0 {
                    off_max = (a[i][j].abs(), i, j);
                }
            }
        }
        if diag_max.0 == 0.0 && off_max.0 == 0.0 {
            return 0.0;
        }

        if diag_max.0 >= alpha * off_max.0 {
            swap_sym(&mut a, k, diag_max.1);
            let d = a[k][k];
            det *= d;
            for i in (k + 1)..n {
                let l = a[i][k] / d;
                for j in (k + 1)..n {
                    a[i][j] -= l * a[k][j];
                }
            }
            k += 1;
        } else {
            let (_, p, q) = off_max;
            swap_sym(&mut a, k, p);
            swap_sym(&mut a, k + 1, q);
            let (e11, e12, e22) = (a[k][k], a[k][k + 1], a[k + 1][k + 1]);
            let det_e = e11 * e22 - e12 * e12;
            det *= det_e;
            // E^{-1} = [e22, -e12; -e12, e11] / det_e
            for i in (k + 2)..n {
                let (ci1, ci2) = (a[i][k], a[i][k + 1]);
                let w1 = (e22 * ci1 - e12 * ci2) / det_e;
                let w2 = (e11 * ci2 - e12 * ci1) / det_e;
                for j in (k + 2)..n {
                    a[i][j] -= w1 * a[k][j] + w2 * a[k + 1][j];
                }
            }
            k += 2;
        }
    }
    det
}
