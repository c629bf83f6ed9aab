//! Lipkin-Meshkov-Glick model in the maximal-spin Dicke sector.
//!
//! With `J = sum_i sigma_i / 2` the collective Hamiltonian is
//! `H = -(1/N) J_x^2 - Gamma J_z`. Only the `J = N/2` multiplet is kept, and
//! inside it only one parity of the number of flipped spins `k = N/2 - m`,
//! because `J_x^2` changes `m` by 0 or 2. Sector index `i` holds the Dicke
//! state with `k = 2i` (even) or `k = 2i + 1` (odd) flipped spins.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::entanglement::symmetric_block_entropy;
use crate::error::{EsuError, Result};
use crate::hilbert::{
    eig_hermitian, BasisTag, ChebyshevPropagator, HermitianMatrix, SparseReal, SpectralDecomposition, StateVector,
};

pub const MIN_SPINS: usize = 4;
pub const MAX_SPINS: usize = 1024;

/// Parity of the number of flipped spins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    /// Contains the fully polarized state `m = N/2`.
    #[default]
    Even,
    Odd,
}

impl Parity {
    fn offset(self) -> usize {
        match self {
            Parity::Even => 0,
            Parity::Odd => 1,
        }
    }
}

/// Fixed-parity slice of the `J = N/2` multiplet.
#[derive(Debug, Clone, PartialEq)]
pub struct DickeSector {
    spins: usize,
    parity: Parity,
    m_values: Vec<i64>,
}

impl DickeSector {
    pub fn new(spins: usize, parity: Parity) -> Result<Self> {
        if spins % 2 != 0 {
            return Err(EsuError::InvalidSpinCount {
                n: spins,
                reason: "odd spin counts give half-integer sectors",
            });
        }
        if !(MIN_SPINS..=MAX_SPINS).contains(&spins) {
            return Err(EsuError::InvalidSpinCount {
                n: spins,
                reason: "supported range is 4..=1024",
            });
        }
        let j = (spins / 2) as i64;
        let m_values = (parity.offset()..=spins)
            .step_by(2)
            .map(|k| j - k as i64)
            .collect();
        Ok(Self {
            spins,
            parity,
            m_values,
        })
    }

    pub fn spins(&self) -> usize {
        self.spins
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn dim(&self) -> usize {
        self.m_values.len()
    }

    /// `J_z` eigenvalues, descending from `N/2` in steps of 2.
    pub fn m_values(&self) -> &[i64] {
        &self.m_values
    }

    /// Number of flipped spins carried by sector index `i`.
    pub fn flips(&self, i: usize) -> usize {
        2 * i + self.parity.offset()
    }

    pub fn basis_tag(&self) -> BasisTag {
        BasisTag::Dicke {
            spins: self.spins,
            parity: self.parity,
        }
    }
}

/// `J_z` and `J_x^2` restricted to a [`DickeSector`].
#[derive(Debug, Clone)]
pub struct LmgOperators {
    sector: DickeSector,
    jz: HermitianMatrix,
    jx2: HermitianMatrix,
    jz_real: DMatrix<f64>,
    jx2_real: DMatrix<f64>,
    jx2_off: SparseReal,
}

/// Builds `J_z` and `J_x^2` from the ladder algebra
/// `J_± |J,m> = sqrt(J(J+1) - m(m±1)) |J,m±1>`, `J_x = (J_+ + J_-)/2`.
pub fn build_dicke_sector(spins: usize, parity: Parity) -> Result<LmgOperators> {
    let sector = DickeSector::new(spins, parity)?;
    let dim = sector.dim();
    let j = spins as f64 / 2.0;
    let casimir = j * (j + 1.0);
    let raise = |m: f64| (casimir - m * (m + 1.0)).max(0.0).sqrt();

    let mut jz = DMatrix::zeros(dim, dim);
    let mut jx2 = DMatrix::zeros(dim, dim);
    let mut off = Vec::with_capacity(2 * dim);
    for (i, &m) in sector.m_values.iter().enumerate() {
        let m = m as f64;
        jz[(i, i)] = m;
        // (J_+ J_- + J_- J_+) / 4 on |m>.
        jx2[(i, i)] = 0.5 * (casimir - m * m);
        if i + 1 < dim {
            // <m|J_+^2|m-2> / 4, index i+1 carries m - 2.
            let below = m - 2.0;
            let v = 0.25 * raise(below) * raise(below + 1.0);
            jx2[(i, i + 1)] = v;
            jx2[(i + 1, i)] = v;
            off.push((i, i + 1, v));
            off.push((i + 1, i, v));
        }
    }
    Ok(LmgOperators {
        sector,
        jz: HermitianMatrix::from_real(jz.clone())?,
        jx2: HermitianMatrix::from_real(jx2.clone())?,
        jz_real: jz,
        jx2_real: jx2,
        jx2_off: SparseReal::from_triplets(dim, off),
    })
}

/// `H = -(1/N) J_x^2 - Gamma J_z`.
pub fn lmg_hamiltonian(ops: &LmgOperators, field: f64) -> HermitianMatrix {
    ops.hamiltonian(field)
}

impl LmgOperators {
    pub fn sector(&self) -> &DickeSector {
        &self.sector
    }

    pub fn spins(&self) -> usize {
        self.sector.spins
    }

    pub fn dim(&self) -> usize {
        self.sector.dim()
    }

    pub fn jz(&self) -> &HermitianMatrix {
        &self.jz
    }

    pub fn jx2(&self) -> &HermitianMatrix {
        &self.jx2
    }

    pub fn hamiltonian(&self, field: f64) -> HermitianMatrix {
        self.scaled_hamiltonian(1.0, field)
    }

    /// `-(coupling / N) J_x^2 - field J_z`; the noisy model multiplies the
    /// coupling by `1 + I_alpha alpha(t)` and the field by `1 + I_beta beta(t)`.
    pub fn scaled_hamiltonian(&self, coupling: f64, field: f64) -> HermitianMatrix {
        HermitianMatrix::from_real(self.scaled_real(coupling, field))
            .expect("real symmetric by construction")
    }

    pub(crate) fn scaled_real(&self, coupling: f64, field: f64) -> DMatrix<f64> {
        let a = -coupling / self.spins() as f64;
        let mut h = self.jx2_real.scale(a);
        for i in 0..self.dim() {
            h[(i, i)] -= field * self.jz_real[(i, i)];
        }
        h
    }

    /// Polynomial propagator for `-(coupling / N) J_x^2 - field J_z`, cheaper
    /// than a decomposition when the Hamiltonian is used for a single step.
    pub fn propagator(&self, coupling: f64, field: f64) -> ChebyshevPropagator<'_> {
        let a = -coupling / self.spins() as f64;
        let diag = (0..self.dim())
            .map(|i| a * self.jx2_real[(i, i)] - field * self.jz_real[(i, i)])
            .collect();
        ChebyshevPropagator::new(&self.jx2_off, a, diag)
    }

    pub(crate) fn apply_scaled(
        &self,
        coupling: f64,
        field: f64,
        psi: &nalgebra::DVector<Complex64>,
    ) -> nalgebra::DVector<Complex64> {
        let a = -coupling / self.spins() as f64;
        let n = self.dim();
        let mut out = nalgebra::DVector::zeros(n);
        for i in 0..n {
            let mut acc = psi[i] * (a * self.jx2_real[(i, i)] - field * self.jz_real[(i, i)]);
            if i > 0 {
                acc += psi[i - 1] * (a * self.jx2_real[(i, i - 1)]);
            }
            if i + 1 < n {
                acc += psi[i + 1] * (a * self.jx2_real[(i, i + 1)]);
            }
            out[i] = acc;
        }
        out
    }

    /// Fully polarized state `|J, m = N/2>` (only in the even sector).
    pub fn polarized_state(&self) -> Result<StateVector> {
        if self.sector.parity != Parity::Even {
            return Err(EsuError::InvalidParameter(
                "the polarized state lives in the even sector".into(),
            ));
        }
        StateVector::basis_state(self.sector.basis_tag(), 0)
    }

    pub fn spectrum(&self, field: f64) -> SpectralDecomposition {
        eig_hermitian(&self.hamiltonian(field))
    }
}

/// One eigenstate of the scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenstateEntropy {
    /// 1-based, ascending in energy; 1 is the ground state.
    pub index: usize,
    pub energy: f64,
    /// Half-block entropy `S_{N/2,N}` in bits.
    pub entropy: f64,
}

/// Half-block entropy of every sector eigenstate of `H[field]`.
pub fn eigenstate_entropy_scan(
    spins: usize,
    field: f64,
    parity: Parity,
) -> Result<Vec<EigenstateEntropy>> {
    let ops = build_dicke_sector(spins, parity)?;
    let eig = ops.spectrum(field);
    let tag = ops.sector.basis_tag();
    (0..eig.dim())
        .map(|n| {
            let state = eig.eigenstate(tag, n)?;
            Ok(EigenstateEntropy {
                index: n + 1,
                energy: eig.eigenvalues()[n],
                entropy: symmetric_block_entropy(ops.sector(), state.amplitudes(), spins / 2)?,
            })
        })
        .collect()
}

/// Index (0-based) of the central eigenstate of a sector of `dim` states.
pub fn central_index(dim: usize) -> usize {
    dim / 2
}

/// `log2(N/2 + 1)`, the largest half-block entropy a symmetric state can have.
pub fn max_symmetric_entropy(spins: usize) -> f64 {
    (spins as f64 / 2.0 + 1.0).log2()
}
