//! Entanglement and distance measures.
//!
//! All entropies are in bits. Square roots of density matrices are avoided:
//! both the concurrence and the Uhlmann fidelity are evaluated as singular
//! values of products of "square-root factors" `V = U sqrt(P)` of the
//! eigendecomposition `rho = U P U^dagger`, which keeps pure-state results
//! accurate to rounding.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{EsuError, Result};
use crate::ising::TwoSpinDensityMatrix;
use crate::lmg::DickeSector;

/// Eigenvalues below `-NEGATIVE_CLIP` are an error, those in
/// `[-NEGATIVE_CLIP, 0)` are treated as zero.
pub const NEGATIVE_CLIP: f64 = 1e-10;
/// Eigenvalues below this are rejected outright by the entropy.
pub const INVALID_EIGENVALUE: f64 = 1e-8;
/// Trace, Hermiticity, and positivity tolerance for [`DensityMatrix`].
pub const DENSITY_TOLERANCE: f64 = 1e-10;

/// Normalized, positive semidefinite Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub fn new(entries: DMatrix<Complex64>) -> Result<Self> {
        if !entries.is_square() {
            return Err(EsuError::InvalidDensityMatrix("not square".into()));
        }
        let n = entries.nrows();
        for j in 0..n {
            for i in 0..=j {
                let d = (entries[(i, j)] - entries[(j, i)].conj()).norm();
                if !(d <= DENSITY_TOLERANCE) {
                    return Err(EsuError::InvalidDensityMatrix(format!(
                        "not Hermitian (deviation {d:e})"
                    )));
                }
            }
        }
        let trace = entries.trace();
        if (trace.re - 1.0).abs() > DENSITY_TOLERANCE || trace.im.abs() > DENSITY_TOLERANCE {
            return Err(EsuError::InvalidDensityMatrix(format!("trace {trace}")));
        }
        let rho = Self { entries };
        let min = rho.spectrum().into_iter().fold(f64::INFINITY, f64::min);
        if min < -DENSITY_TOLERANCE {
            return Err(EsuError::InvalidDensityMatrix(format!(
                "negative eigenvalue {min:e}"
            )));
        }
        Ok(rho)
    }

    /// `|psi><psi|` for normalized amplitudes.
    pub fn from_pure(psi: &DVector<Complex64>) -> Result<Self> {
        Self::new(psi * psi.adjoint())
    }

    pub(crate) fn from_entries_unchecked(entries: DMatrix<Complex64>) -> Self {
        Self { entries }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    /// Eigenvalues (unsorted).
    pub fn spectrum(&self) -> Vec<f64> {
        hermitian_eigen(&self.entries).0
    }

    /// `U sqrt(P)` restricted to strictly positive eigenvalues, so that
    /// `rho = V V^dagger`.
    fn sqrt_factor(&self) -> DMatrix<Complex64> {
        let (vals, vecs) = hermitian_eigen(&self.entries);
        let keep: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] > 0.0).collect();
        let mut v = DMatrix::zeros(self.dim(), keep.len().max(1));
        for (c, &i) in keep.iter().enumerate() {
            let s = vals[i].sqrt();
            for r in 0..self.dim() {
                v[(r, c)] = vecs[(r, i)] * s;
            }
        }
        v
    }
}

fn hermitian_eigen(m: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    if m.iter().all(|z| z.im == 0.0) {
        let eig = SymmetricEigen::new(m.map(|z| z.re));
        (
            eig.eigenvalues.iter().copied().collect(),
            eig.eigenvectors.map(|x| Complex64::new(x, 0.0)),
        )
    } else {
        let eig = SymmetricEigen::new(m.clone());
        (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
    }
}

/// `-sum p log2 p` with `0 log 0 = 0`.
pub fn entropy_of_spectrum(probabilities: &[f64]) -> Result<f64> {
    let mut s = 0.0;
    for &p in probabilities {
        if p < -INVALID_EIGENVALUE {
            return Err(EsuError::InvalidDensityMatrix(format!(
                "eigenvalue {p:e} is negative beyond tolerance"
            )));
        }
        if p > 0.0 {
            s -= p * p.log2();
        }
    }
    Ok(s.max(0.0))
}

pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    let spectrum: Vec<f64> = rho
        .spectrum()
        .into_iter()
        .map(|p| if p < 0.0 && p >= -NEGATIVE_CLIP { 0.0 } else { p })
        .collect();
    entropy_of_spectrum(&spectrum)
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut t = vec![0.0; n + 1];
    for i in 1..=n {
        t[i] = t[i - 1] + (i as f64).ln();
    }
    t
}

/// Reduced density matrix of a block of `block` spins for a state of the
/// Dicke sector, in the block's own Dicke basis `l = 0..=block` flips.
///
/// A Dicke state with `k` flips splits as
/// `|D_N^k> = sum_l sqrt(C(L,l) C(N-L,k-l) / C(N,k)) |D_L^l> |D_{N-L}^{k-l}>`.
pub fn symmetric_block_density(
    sector: &DickeSector,
    amplitudes: &DVector<Complex64>,
    block: usize,
) -> Result<DMatrix<Complex64>> {
    let n = sector.spins();
    if amplitudes.len() != sector.dim() {
        return Err(EsuError::DimensionMismatch {
            expected: sector.dim(),
            found: amplitudes.len(),
        });
    }
    if block == 0 || block >= n {
        return Err(EsuError::BlockOutOfRange { block, n });
    }
    let norm = amplitudes.norm();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(EsuError::NotNormalized { norm });
    }
    let rest = n - block;
    let lf = ln_factorials(n);
    let ln_binom = |a: usize, b: usize| lf[a] - lf[b] - lf[a - b];

    let mut a = DMatrix::<Complex64>::zeros(block + 1, rest + 1);
    for (i, &c) in amplitudes.iter().enumerate() {
        if c.re == 0.0 && c.im == 0.0 {
            continue;
        }
        let k = sector.flips(i);
        let lo = k.saturating_sub(rest);
        let hi = k.min(block);
        for l in lo..=hi {
            let w = (0.5 * (ln_binom(block, l) + ln_binom(rest, k - l) - ln_binom(n, k))).exp();
            a[(l, k - l)] += c * w;
        }
    }
    Ok(&a * a.adjoint())
}

/// Von Neumann entropy (bits) of a block of `block` spins for a Dicke-sector
/// state.
pub fn symmetric_block_entropy(
    sector: &DickeSector,
    amplitudes: &DVector<Complex64>,
    block: usize,
) -> Result<f64> {
    let rho = symmetric_block_density(sector, amplitudes, block)?;
    let spectrum: Vec<f64> = hermitian_eigen(&rho)
        .0
        .into_iter()
        .map(|p| if p < 0.0 && p >= -NEGATIVE_CLIP { 0.0 } else { p })
        .collect();
    entropy_of_spectrum(&spectrum)
}

/// `(sigma_y ⊗ sigma_y)`, real in the `|00>, |01>, |10>, |11>` basis.
fn sigma_yy() -> DMatrix<Complex64> {
    let mut m = DMatrix::zeros(4, 4);
    let one = Complex64::new(1.0, 0.0);
    m[(0, 3)] = -one;
    m[(1, 2)] = one;
    m[(2, 1)] = one;
    m[(3, 0)] = -one;
    m
}

/// Wootters concurrence `max(0, e1 - e2 - e3 - e4)`.
///
/// With `rho = V V^dagger` the `e_i` are the singular values of the symmetric
/// matrix `V^T (sigma_y ⊗ sigma_y) V`, which equal the square roots of the
/// eigenvalues of `rho rho~`.
pub fn concurrence(rho: &TwoSpinDensityMatrix) -> f64 {
    let v = rho.as_density().sqrt_factor();
    let tau = v.transpose() * sigma_yy() * &v;
    let mut e: Vec<f64> = tau.singular_values().iter().copied().collect();
    e.sort_by(|a, b| b.total_cmp(a));
    e.resize(4, 0.0);
    (e[0] - e[1] - e[2] - e[3]).clamp(0.0, 1.0)
}

/// Uhlmann fidelity `(Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2`, computed as the
/// squared trace norm of `V_rho^dagger V_sigma`.
pub fn uhlmann_fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(EsuError::DimensionMismatch {
            expected: rho.dim(),
            found: sigma.dim(),
        });
    }
    let m = rho.sqrt_factor().adjoint() * sigma.sqrt_factor();
    let trace_norm: f64 = m.singular_values().iter().sum();
    Ok((trace_norm * trace_norm).clamp(0.0, 1.0))
}

/// Reduces a fully general `rho` by tracing out a subsystem; `keep_first`
/// keeps the leading factor of a `d_a x d_b` split.
pub fn partial_trace(rho: &DMatrix<Complex64>, d_a: usize, d_b: usize, keep_first: bool) -> DMatrix<Complex64> {
    assert_eq!(rho.nrows(), d_a * d_b);
    if keep_first {
        DMatrix::from_fn(d_a, d_a, |i, j| (0..d_b).map(|k| rho[(i * d_b + k, j * d_b + k)]).sum())
    } else {
        DMatrix::from_fn(d_b, d_b, |i, j| (0..d_a).map(|k| rho[(k * d_b + i, k * d_b + j)]).sum())
    }
}

/// Crate-internal wrapper for already validated matrices.
pub(crate) fn density_unchecked(m: DMatrix<Complex64>) -> DensityMatrix {
    DensityMatrix::from_entries_unchecked(m)
}
