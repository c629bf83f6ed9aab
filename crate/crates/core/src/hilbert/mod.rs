//! Dense Hermitian linear algebra and exact time stepping.
//!
//! Conventions: energies are in units of the spin-spin coupling `C` and
//! `hbar = 1`, so a step of length `dt` applies `exp(-i H dt)`.
//!
//! Both spin models used in this crate have real symmetric Hamiltonians in
//! their computational bases. [`HermitianMatrix`] remembers whether its
//! entries are real so that diagonalization and propagation can stay in real
//! arithmetic for the eigenvectors.

mod chebyshev;

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{EsuError, Result};
use crate::lmg::Parity;

pub use chebyshev::{ChebyshevPropagator, SparseReal};

/// Numerical tolerances shared by the library. The defaults are the values
/// the test-suite and the acceptance checks are pinned against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Max entry of `|H - H^dagger|` accepted for a Hermitian matrix.
    pub hermiticity: f64,
    /// Max deviation of `||psi||` from one accepted for a state.
    pub normalization: f64,
    /// Components below this magnitude are ignored by the eigenvector phase
    /// convention.
    pub phase_cutoff: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermiticity: 1e-12,
            normalization: 1e-10,
            phase_cutoff: 1e-10,
        }
    }
}

/// Which basis a [`StateVector`] is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisTag {
    /// Maximal-spin Dicke states of `spins` spins with fixed flip parity.
    Dicke { spins: usize, parity: Parity },
    /// Computational product basis of an open chain; site 1 is the most
    /// significant bit and bit value 0 is spin up.
    SpinChain { spins: usize },
    /// Anything else, labeled only by its dimension.
    Plain { dim: usize },
}

impl BasisTag {
    pub fn dim(&self) -> usize {
        match *self {
            BasisTag::Dicke { spins, parity } => match parity {
                Parity::Even => spins / 2 + 1,
                Parity::Odd => spins / 2,
            },
            BasisTag::SpinChain { spins } => 1usize << spins,
            BasisTag::Plain { dim } => dim,
        }
    }
}

/// Normalized pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    basis: BasisTag,
    amplitudes: DVector<Complex64>,
}

impl StateVector {
    /// Wraps amplitudes that are already normalized.
    pub fn new(basis: BasisTag, amplitudes: DVector<Complex64>) -> Result<Self> {
        Self::with_tolerance(basis, amplitudes, Tolerances::default().normalization)
    }

    pub fn with_tolerance(
        basis: BasisTag,
        amplitudes: DVector<Complex64>,
        tolerance: f64,
    ) -> Result<Self> {
        if amplitudes.len() != basis.dim() {
            return Err(EsuError::DimensionMismatch {
                expected: basis.dim(),
                found: amplitudes.len(),
            });
        }
        let norm = amplitudes.norm();
        if !norm.is_finite() || (norm - 1.0).abs() > tolerance {
            return Err(EsuError::NotNormalized { norm });
        }
        Ok(Self { basis, amplitudes })
    }

    /// Rescales arbitrary nonzero amplitudes to unit norm.
    pub fn normalized(basis: BasisTag, amplitudes: DVector<Complex64>) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(EsuError::NotNormalized { norm });
        }
        Self::new(basis, amplitudes.unscale(norm))
    }

    /// The basis vector `|index>`.
    pub fn basis_state(basis: BasisTag, index: usize) -> Result<Self> {
        let dim = basis.dim();
        if index >= dim {
            return Err(EsuError::DimensionMismatch {
                expected: dim,
                found: index + 1,
            });
        }
        let mut amps = DVector::zeros(dim);
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(Self {
            basis,
            amplitudes: amps,
        })
    }

    pub fn basis(&self) -> BasisTag {
        self.basis
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> DVector<Complex64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        self.check_dim(other.dim())?;
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// `|<self|other>|^2`.
    pub fn overlap_probability(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    pub(crate) fn check_dim(&self, dim: usize) -> Result<()> {
        if self.dim() != dim {
            return Err(EsuError::DimensionMismatch {
                expected: dim,
                found: self.dim(),
            });
        }
        Ok(())
    }

    pub(crate) fn from_parts_unchecked(basis: BasisTag, amplitudes: DVector<Complex64>) -> Self {
        Self { basis, amplitudes }
    }
}

/// Dense Hermitian operator.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    entries: DMatrix<Complex64>,
    real: bool,
}

impl HermitianMatrix {
    pub fn new(entries: DMatrix<Complex64>) -> Result<Self> {
        Self::with_tolerance(entries, Tolerances::default().hermiticity)
    }

    pub fn with_tolerance(entries: DMatrix<Complex64>, tolerance: f64) -> Result<Self> {
        if !entries.is_square() {
            return Err(EsuError::DimensionMismatch {
                expected: entries.nrows(),
                found: entries.ncols(),
            });
        }
        let deviation = hermiticity_deviation(&entries);
        if !(deviation <= tolerance) {
            return Err(EsuError::NotHermitian {
                deviation,
                tolerance,
            });
        }
        let real = entries.iter().all(|z| z.im == 0.0);
        Ok(Self { entries, real })
    }

    /// Builds from a real symmetric matrix.
    pub fn from_real(entries: DMatrix<f64>) -> Result<Self> {
        Self::new(entries.map(|x| Complex64::new(x, 0.0)))
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            entries: DMatrix::zeros(dim, dim),
            real: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `a * self + b * other`, which stays Hermitian for real `a`, `b`.
    pub fn linear_combination(&self, a: f64, other: &HermitianMatrix, b: f64) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(EsuError::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(Self {
            entries: self.entries.scale(a) + other.entries.scale(b),
            real: self.real && other.real,
        })
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            entries: self.entries.scale(a),
            real: self.real,
        }
    }

    /// `H psi` on raw amplitudes.
    pub fn apply(&self, psi: &DVector<Complex64>) -> DVector<Complex64> {
        &self.entries * psi
    }

    /// `<psi|H|psi>`, real for Hermitian `H`.
    pub fn expectation(&self, psi: &StateVector) -> Result<f64> {
        psi.check_dim(self.dim())?;
        Ok(psi.amplitudes.dotc(&self.apply(&psi.amplitudes)).re)
    }
}

fn hermiticity_deviation(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in 0..=j {
            let d = (m[(i, j)] - m[(j, i)].conj()).norm();
            if d.is_nan() {
                return f64::NAN;
            }
            worst = worst.max(d);
        }
    }
    worst
}

/// Eigensystem of a [`HermitianMatrix`]: eigenvalues ascending, eigenvectors
/// as orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<Complex64>,
    real_vectors: Option<DMatrix<f64>>,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<Complex64> {
        &self.eigenvectors
    }

    /// Eigenvector `n` (0-based, ascending energy) as a state in `basis`.
    pub fn eigenstate(&self, basis: BasisTag, n: usize) -> Result<StateVector> {
        if n >= self.dim() {
            return Err(EsuError::DimensionMismatch {
                expected: self.dim(),
                found: n + 1,
            });
        }
        StateVector::new(basis, self.eigenvectors.column(n).into_owned())
    }

    /// Coefficients of `psi` in the eigenbasis, `c_n = <n|psi>`.
    pub fn coefficients(&self, psi: &DVector<Complex64>) -> DVector<Complex64> {
        match &self.real_vectors {
            Some(v) => real_transpose_apply(v, psi),
            None => self.eigenvectors.ad_mul(psi),
        }
    }

    /// Rebuilds a vector from eigenbasis coefficients.
    pub fn synthesize(&self, coeffs: &DVector<Complex64>) -> DVector<Complex64> {
        match &self.real_vectors {
            Some(v) => real_apply(v, coeffs),
            None => &self.eigenvectors * coeffs,
        }
    }

    /// `exp(-i H dt) psi`, exact for the decomposed `H`.
    pub fn evolve(&self, psi: &DVector<Complex64>, dt: f64) -> DVector<Complex64> {
        if dt == 0.0 {
            return psi.clone();
        }
        let mut c = self.coefficients(psi);
        for (ci, &e) in c.iter_mut().zip(self.eigenvalues.iter()) {
            let (s, co) = (-e * dt).sin_cos();
            *ci *= Complex64::new(co, s);
        }
        self.synthesize(&c)
    }

    /// `V diag(lambda) V^dagger`.
    pub fn reconstruct(&self) -> DMatrix<Complex64> {
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (j, &e) in self.eigenvalues.iter().enumerate() {
            scaled.column_mut(j).scale_mut(e);
        }
        scaled * v.adjoint()
    }
}

fn real_transpose_apply(v: &DMatrix<f64>, psi: &DVector<Complex64>) -> DVector<Complex64> {
    let n = v.nrows();
    let mut out = DVector::zeros(v.ncols());
    for j in 0..v.ncols() {
        let col = v.column(j);
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..n {
            acc += psi[i] * col[i];
        }
        out[j] = acc;
    }
    out
}

fn real_apply(v: &DMatrix<f64>, c: &DVector<Complex64>) -> DVector<Complex64> {
    let n = v.nrows();
    let mut out = DVector::<Complex64>::zeros(n);
    for j in 0..v.ncols() {
        let cj = c[j];
        if cj.re == 0.0 && cj.im == 0.0 {
            continue;
        }
        let col = v.column(j);
        for i in 0..n {
            out[i] += cj * col[i];
        }
    }
    out
}

/// Full eigendecomposition with ascending eigenvalues.
///
/// Each eigenvector is phase-fixed so that its first component above
/// [`Tolerances::phase_cutoff`] is real and positive. Exactly degenerate
/// eigenvalues keep the order of the position of that leading component.
pub fn eig_hermitian(h: &HermitianMatrix) -> SpectralDecomposition {
    let cutoff = Tolerances::default().phase_cutoff;
    let n = h.dim();
    if h.real {
        eig_real(h.entries.map(|z| z.re))
    } else {
        let eig = SymmetricEigen::new(h.entries.clone());
        let mut vecs = eig.eigenvectors;
        let mut leads = Vec::with_capacity(n);
        for j in 0..n {
            let mut col = vecs.column_mut(j);
            let lead = col.iter().position(|z| z.norm() > cutoff).unwrap_or(0);
            let z = col[lead];
            if z.norm() > 0.0 {
                let phase = z.conj() / z.norm();
                for x in col.iter_mut() {
                    *x *= phase;
                }
            }
            leads.push(lead);
        }
        let order = ascending_order(&eig.eigenvalues, &leads);
        let eigenvalues = DVector::from_iterator(n, order.iter().map(|&j| eig.eigenvalues[j]));
        let eigenvectors = DMatrix::from_fn(n, n, |i, j| vecs[(i, order[j])]);
        SpectralDecomposition {
            eigenvalues,
            eigenvectors,
            real_vectors: None,
        }
    }
}

/// [`eig_hermitian`] for a real symmetric matrix, keeping real eigenvectors.
pub fn eig_real(m: DMatrix<f64>) -> SpectralDecomposition {
    let cutoff = Tolerances::default().phase_cutoff;
    let n = m.nrows();
    let eig = SymmetricEigen::new(m);
    let mut vecs = eig.eigenvectors;
    let mut leads = Vec::with_capacity(n);
    for j in 0..n {
        let mut col = vecs.column_mut(j);
        let lead = col.iter().position(|x| x.abs() > cutoff).unwrap_or(0);
        if col[lead] < 0.0 {
            col.neg_mut();
        }
        leads.push(lead);
    }
    let order = ascending_order(&eig.eigenvalues, &leads);
    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&j| eig.eigenvalues[j]));
    let real_vectors = DMatrix::from_fn(n, n, |i, j| vecs[(i, order[j])]);
    SpectralDecomposition {
        eigenvalues,
        eigenvectors: real_vectors.map(|x| Complex64::new(x, 0.0)),
        real_vectors: Some(real_vectors),
    }
}

fn ascending_order(values: &DVector<f64>, leads: &[usize]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        values[a]
            .total_cmp(&values[b])
            .then_with(|| leads[a].cmp(&leads[b]))
    });
    order
}

/// One exact step `psi -> exp(-i H dt) psi` through the eigendecomposition
/// of `H`. Prefer [`SpectralDecomposition::evolve`] when the same `H` is used
/// for many steps.
pub fn propagate_step(h: &HermitianMatrix, psi: &StateVector, dt: f64) -> Result<StateVector> {
    psi.check_dim(h.dim())?;
    if dt == 0.0 {
        return Ok(psi.clone());
    }
    let eig = eig_hermitian(h);
    Ok(StateVector::from_parts_unchecked(
        psi.basis,
        eig.evolve(&psi.amplitudes, dt),
    ))
}

/// Energy and energy fluctuation of a state with respect to a Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyStats {
    /// `<psi|H|psi>`.
    pub energy: f64,
    /// `sqrt(<psi|H^2|psi> - energy^2)`, never negative.
    pub fluctuation: f64,
}

/// `(E, dE)` for `psi` under `H`.
///
/// The variance is evaluated as `||(H - E) psi||^2`, which equals
/// `<H^2> - <H>^2` but does not cancel catastrophically on eigenstates.
pub fn energy_stats(h: &HermitianMatrix, psi: &StateVector) -> Result<EnergyStats> {
    psi.check_dim(h.dim())?;
    let h_psi = h.apply(&psi.amplitudes);
    Ok(energy_stats_from_action(&psi.amplitudes, &h_psi))
}

/// Same as [`energy_stats`] given the precomputed action `H psi`.
pub fn energy_stats_from_action(
    psi: &DVector<Complex64>,
    h_psi: &DVector<Complex64>,
) -> EnergyStats {
    let energy = psi.dotc(h_psi).re;
    let variance: f64 = h_psi
        .iter()
        .zip(psi.iter())
        .map(|(hp, p)| (hp - p * energy).norm_sqr())
        .sum();
    EnergyStats {
        energy,
        fluctuation: variance.max(0.0).sqrt(),
    }
}

type CacheKey = (u64, u64);

/// Thread-safe memo of decompositions keyed by the two real coefficients of a
/// two-term Hamiltonian `a * H_0 + b * H_1`.
#[derive(Debug, Default)]
pub struct DecompositionCache {
    entries: Mutex<HashMap<CacheKey, Arc<SpectralDecomposition>>>,
    capacity: usize,
}

impl DecompositionCache {
    pub fn with_capacity(capacity: usize) -> Self {
        Self {
            entries: Mutex::new(HashMap::new()),
            capacity: capacity.max(1),
        }
    }

    pub fn get_or_insert_with<F>(&self, a: f64, b: f64, build: F) -> Arc<SpectralDecomposition>
    where
        F: FnOnce() -> SpectralDecomposition,
    {
        let key = (a.to_bits(), b.to_bits());
        if let Some(hit) = self.entries.lock().expect("cache poisoned").get(&key) {
            return Arc::clone(hit);
        }
        let built = Arc::new(build());
        let mut map = self.entries.lock().expect("cache poisoned");
        if map.len() >= self.capacity {
            map.clear();
        }
        Arc::clone(map.entry(key).or_insert(built))
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
