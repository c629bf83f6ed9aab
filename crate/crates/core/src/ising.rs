//! Open transverse-field Ising chain
//! `H(Gamma) = -C sum_{i<N} sigma^x_i sigma^x_{i+1} - Gamma sum_i sigma^z_i`
//! in the full `2^N` product basis.
//!
//! Basis convention: site 1 is the most significant bit of the basis index
//! and bit value 0 is spin up (`sigma^z = +1`).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::entanglement::{density_unchecked, DensityMatrix, DENSITY_TOLERANCE};
use crate::error::{EsuError, Result};
use crate::hilbert::{BasisTag, ChebyshevPropagator, HermitianMatrix, SparseReal, StateVector};

pub const MIN_SPINS: usize = 2;
pub const MAX_SPINS: usize = 12;

#[derive(Debug, Clone)]
pub struct IsingOperators {
    spins: usize,
    coupling: SparseReal,
    field_diagonal: Vec<f64>,
}

pub fn build_ising(spins: usize) -> Result<IsingOperators> {
    if !(MIN_SPINS..=MAX_SPINS).contains(&spins) {
        return Err(EsuError::InvalidSpinCount {
            n: spins,
            reason: "chain length must be in 2..=12",
        });
    }
    let dim = 1usize << spins;
    let mut triplets = Vec::with_capacity(dim * (spins - 1));
    for b in 0..dim {
        for bond in 0..spins - 1 {
            // Sites bond+1 and bond+2 sit at bit positions spins-1-bond and spins-2-bond.
            let mask = 0b11usize << (spins - 2 - bond);
            triplets.push((b, b ^ mask, -1.0));
        }
    }
    let field_diagonal = (0..dim)
        .map(|b| -(spins as f64 - 2.0 * (b.count_ones() as f64)))
        .collect();
    Ok(IsingOperators {
        spins,
        coupling: SparseReal::from_triplets(dim, triplets),
        field_diagonal,
    })
}

impl IsingOperators {
    pub fn spins(&self) -> usize {
        self.spins
    }

    pub fn dim(&self) -> usize {
        1 << self.spins
    }

    pub fn basis_tag(&self) -> BasisTag {
        BasisTag::SpinChain { spins: self.spins }
    }

    /// Dense `-sum sigma^x_i sigma^x_{i+1}`.
    pub fn coupling(&self) -> HermitianMatrix {
        HermitianMatrix::from_real(self.coupling.to_dense()).expect("symmetric by construction")
    }

    /// Dense `-sum sigma^z_i`.
    pub fn field(&self) -> HermitianMatrix {
        let d = DVector::from_column_slice(&self.field_diagonal);
        HermitianMatrix::from_real(DMatrix::from_diagonal(&d)).expect("diagonal")
    }

    pub fn coupling_sparse(&self) -> &SparseReal {
        &self.coupling
    }

    pub fn field_diagonal(&self) -> &[f64] {
        &self.field_diagonal
    }

    pub fn hamiltonian(&self, field: f64) -> HermitianMatrix {
        self.scaled_hamiltonian(1.0, field)
    }

    /// `coupling * H_coupling + field * H_field`, dense.
    pub fn scaled_hamiltonian(&self, coupling: f64, field: f64) -> HermitianMatrix {
        let mut m = self.coupling.to_dense().scale(coupling);
        for (i, d) in self.field_diagonal.iter().enumerate() {
            m[(i, i)] += field * d;
        }
        HermitianMatrix::from_real(m).expect("symmetric by construction")
    }

    pub fn propagator(&self, coupling: f64, field: f64) -> ChebyshevPropagator<'_> {
        let diag = self.field_diagonal.iter().map(|d| d * field).collect();
        ChebyshevPropagator::new(&self.coupling, coupling, diag)
    }

    pub(crate) fn apply_scaled(&self, coupling: f64, field: f64, psi: &DVector<Complex64>) -> DVector<Complex64> {
        let mut out = DVector::zeros(psi.len());
        self.propagator(coupling, field)
            .apply_hamiltonian(psi.as_slice(), out.as_mut_slice());
        out
    }

    /// `|up ... up>`, the ground state for large positive field.
    pub fn polarized_state(&self) -> StateVector {
        StateVector::basis_state(self.basis_tag(), 0).expect("index 0 exists")
    }

    /// Global spin-flip parity `prod_i sigma^z_i` as a diagonal.
    pub fn parity_diagonal(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|b| if b.count_ones() % 2 == 0 { 1.0 } else { -1.0 })
            .collect()
    }
}

/// Reduced state of two spins, basis `|s_i s_j>` in order 00, 01, 10, 11.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoSpinDensityMatrix(DensityMatrix);

impl TwoSpinDensityMatrix {
    pub fn new(entries: DMatrix<Complex64>) -> Result<Self> {
        if entries.nrows() != 4 || entries.ncols() != 4 {
            return Err(EsuError::DimensionMismatch {
                expected: 4,
                found: entries.nrows(),
            });
        }
        Ok(Self(DensityMatrix::new(entries)?))
    }

    pub fn as_density(&self) -> &DensityMatrix {
        &self.0
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        self.0.entries()
    }

    /// Traces out the second spin.
    pub fn first_spin(&self) -> DMatrix<Complex64> {
        crate::entanglement::partial_trace(self.0.entries(), 2, 2, true)
    }

    /// Traces out the first spin.
    pub fn second_spin(&self) -> DMatrix<Complex64> {
        crate::entanglement::partial_trace(self.0.entries(), 2, 2, false)
    }

    pub(crate) fn from_unchecked(m: DMatrix<Complex64>) -> Self {
        Self(density_unchecked(m))
    }
}

fn site_shift(spins: usize, site: usize) -> Result<usize> {
    if site == 0 || site > spins {
        return Err(EsuError::SiteOutOfRange { site, n: spins });
    }
    Ok(spins - site)
}

fn chain_spins(psi: &StateVector) -> Result<usize> {
    let dim = psi.dim();
    if !dim.is_power_of_two() || dim < 2 {
        return Err(EsuError::DimensionMismatch {
            expected: dim.next_power_of_two(),
            found: dim,
        });
    }
    Ok(dim.trailing_zeros() as usize)
}

/// Partial trace of a chain state onto sites `i` and `j` (1-based).
pub fn reduced_two_spin(psi: &StateVector, i: usize, j: usize) -> Result<TwoSpinDensityMatrix> {
    let spins = chain_spins(psi)?;
    let si = site_shift(spins, i)?;
    let sj = site_shift(spins, j)?;
    if i == j {
        return Err(EsuError::RepeatedSite(i));
    }
    let amps = psi.amplitudes();
    let (mi, mj) = (1usize << si, 1usize << sj);
    let mut rho = DMatrix::<Complex64>::zeros(4, 4);
    for rest in 0..psi.dim() {
        if rest & (mi | mj) != 0 {
            continue;
        }
        let idx = [rest, rest | mj, rest | mi, rest | mi | mj];
        let a = idx.map(|b| amps[b]);
        for r in 0..4 {
            if a[r].re == 0.0 && a[r].im == 0.0 {
                continue;
            }
            for c in 0..4 {
                rho[(r, c)] += a[r] * a[c].conj();
            }
        }
    }
    let trace = rho.trace().re;
    if (trace - 1.0).abs() > DENSITY_TOLERANCE {
        return Err(EsuError::NotNormalized { norm: trace.sqrt() });
    }
    Ok(TwoSpinDensityMatrix::from_unchecked(rho))
}

/// Reduced state of a single site.
pub fn reduced_one_spin(psi: &StateVector, i: usize) -> Result<DMatrix<Complex64>> {
    let spins = chain_spins(psi)?;
    let m = 1usize << site_shift(spins, i)?;
    let amps = psi.amplitudes();
    let mut rho = DMatrix::<Complex64>::zeros(2, 2);
    for rest in 0..psi.dim() {
        if rest & m != 0 {
            continue;
        }
        let a = [amps[rest], amps[rest | m]];
        for r in 0..2 {
            for c in 0..2 {
                rho[(r, c)] += a[r] * a[c].conj();
            }
        }
    }
    Ok(rho)
}

/// Reduced state of the first `block` sites of the chain.
pub fn reduced_leading_block(psi: &StateVector, block: usize) -> Result<DMatrix<Complex64>> {
    let spins = chain_spins(psi)?;
    if block == 0 || block >= spins {
        return Err(EsuError::BlockOutOfRange { block, n: spins });
    }
    let rows = 1usize << block;
    let cols = 1usize << (spins - block);
    let m = DMatrix::from_fn(rows, cols, |r, c| psi.amplitudes()[r * cols + c]);
    Ok(&m * m.adjoint())
}
