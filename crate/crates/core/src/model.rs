//! A controllable two-term spin model `H(a, b) = a * H_coupling + b * H_field`.
//!
//! The control field is `b = Gamma(t)` with `a = 1`; the telegraph-noise model
//! rescales both terms. [`Model`] hides whether the state lives in an LMG
//! Dicke sector (dense spectral steps) or in an Ising chain (sparse
//! Chebyshev steps).

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::entanglement::{
    entropy_of_spectrum, symmetric_block_density, symmetric_block_entropy, uhlmann_fidelity, concurrence,
    NEGATIVE_CLIP,
};
use crate::error::{EsuError, Result};
use crate::hilbert::{
    eig_hermitian, energy_stats_from_action, BasisTag, ChebyshevPropagator, DecompositionCache, EnergyStats,
    HermitianMatrix, SpectralDecomposition, StateVector,
};
use crate::ising::{build_ising, reduced_leading_block, reduced_two_spin, IsingOperators, TwoSpinDensityMatrix};
use crate::lmg::{build_dicke_sector, LmgOperators, Parity};

/// Which entanglement measure a cost or trajectory uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    /// Half-system von Neumann entropy, in bits.
    #[default]
    Entropy,
    /// Wootters concurrence between the first and last spin.
    Concurrence,
}

/// How the survival probability `P(t)` is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SurvivalKind {
    /// `|<psi(0)|psi(t)>|^2`.
    #[default]
    Overlap,
    /// Uhlmann fidelity between the extremal two-spin reductions at `0` and `t`.
    ExtremalFidelity,
}

#[derive(Debug, Clone)]
enum Kind {
    Lmg(LmgOperators),
    Ising(IsingOperators),
}

#[derive(Debug)]
pub struct Model {
    kind: Kind,
    cache: DecompositionCache,
}

/// Exact propagator for one fixed Hamiltonian.
#[derive(Debug, Clone)]
pub enum Stepper<'a> {
    Spectral(Arc<SpectralDecomposition>),
    Chebyshev(ChebyshevPropagator<'a>),
}

impl Stepper<'_> {
    /// `psi <- exp(-i H dt) psi`.
    pub fn step(&self, psi: &mut DVector<Complex64>, dt: f64) {
        match self {
            Stepper::Spectral(eig) => *psi = eig.evolve(psi, dt),
            Stepper::Chebyshev(prop) => prop.step(psi, dt),
        }
    }
}

const CACHE_CAPACITY: usize = 256;

impl Model {
    pub fn lmg(spins: usize, parity: Parity) -> Result<Self> {
        Ok(Self::from_lmg(build_dicke_sector(spins, parity)?))
    }

    pub fn ising(spins: usize) -> Result<Self> {
        Ok(Self::from_ising(build_ising(spins)?))
    }

    pub fn from_lmg(ops: LmgOperators) -> Self {
        Self {
            kind: Kind::Lmg(ops),
            cache: DecompositionCache::with_capacity(CACHE_CAPACITY),
        }
    }

    pub fn from_ising(ops: IsingOperators) -> Self {
        Self {
            kind: Kind::Ising(ops),
            cache: DecompositionCache::with_capacity(CACHE_CAPACITY),
        }
    }

    pub fn as_lmg(&self) -> Option<&LmgOperators> {
        match &self.kind {
            Kind::Lmg(ops) => Some(ops),
            Kind::Ising(_) => None,
        }
    }

    pub fn as_ising(&self) -> Option<&IsingOperators> {
        match &self.kind {
            Kind::Ising(ops) => Some(ops),
            Kind::Lmg(_) => None,
        }
    }

    pub fn spins(&self) -> usize {
        match &self.kind {
            Kind::Lmg(ops) => ops.spins(),
            Kind::Ising(ops) => ops.spins(),
        }
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            Kind::Lmg(ops) => ops.dim(),
            Kind::Ising(ops) => ops.dim(),
        }
    }

    pub fn basis_tag(&self) -> BasisTag {
        match &self.kind {
            Kind::Lmg(ops) => ops.sector().basis_tag(),
            Kind::Ising(ops) => ops.basis_tag(),
        }
    }

    /// All spins up: the ground state deep in the paramagnet.
    pub fn polarized_state(&self) -> Result<StateVector> {
        match &self.kind {
            Kind::Lmg(ops) => ops.polarized_state(),
            Kind::Ising(ops) => Ok(ops.polarized_state()),
        }
    }

    /// Control Hamiltonian `H[field]`, dense.
    pub fn hamiltonian(&self, field: f64) -> HermitianMatrix {
        self.scaled_hamiltonian(1.0, field)
    }

    pub fn scaled_hamiltonian(&self, coupling: f64, field: f64) -> HermitianMatrix {
        match &self.kind {
            Kind::Lmg(ops) => ops.scaled_hamiltonian(coupling, field),
            Kind::Ising(ops) => ops.scaled_hamiltonian(coupling, field),
        }
    }

    /// `H(coupling, field) psi` without forming a dense matrix.
    pub fn apply(&self, coupling: f64, field: f64, psi: &DVector<Complex64>) -> DVector<Complex64> {
        match &self.kind {
            Kind::Lmg(ops) => ops.apply_scaled(coupling, field, psi),
            Kind::Ising(ops) => ops.apply_scaled(coupling, field, psi),
        }
    }

    /// Energy and fluctuation with respect to `H[field]`.
    pub fn energy_stats(&self, field: f64, psi: &StateVector) -> Result<EnergyStats> {
        psi.check_dim(self.dim())?;
        let h_psi = self.apply(1.0, field, psi.amplitudes());
        Ok(energy_stats_from_action(psi.amplitudes(), &h_psi))
    }

    /// Exact propagator for `H(coupling, field)`; spectral decompositions are
    /// memoized by the coefficient pair when `cached` is set.
    pub fn stepper(&self, coupling: f64, field: f64, cached: bool) -> Stepper<'_> {
        match &self.kind {
            Kind::Lmg(ops) => {
                let build = || crate::hilbert::eig_real(ops.scaled_real(coupling, field));
                if cached {
                    Stepper::Spectral(self.cache.get_or_insert_with(coupling, field, build))
                } else {
                    Stepper::Spectral(Arc::new(build()))
                }
            }
            Kind::Ising(ops) => Stepper::Chebyshev(ops.propagator(coupling, field)),
        }
    }

    /// Propagator for a Hamiltonian that is applied for one short step
    /// only, as inside a control pulse.
    pub fn pulse_stepper(&self, coupling: f64, field: f64) -> Stepper<'_> {
        match &self.kind {
            Kind::Lmg(ops) => Stepper::Chebyshev(ops.propagator(coupling, field)),
            Kind::Ising(ops) => Stepper::Chebyshev(ops.propagator(coupling, field)),
        }
    }

    /// Full eigensystem of `H[field]`.
    pub fn spectrum(&self, field: f64) -> Arc<SpectralDecomposition> {
        match &self.kind {
            Kind::Lmg(ops) => self
                .cache
                .get_or_insert_with(1.0, field, || crate::hilbert::eig_real(ops.scaled_real(1.0, field))),
            Kind::Ising(_) => self
                .cache
                .get_or_insert_with(1.0, field, || eig_hermitian(&self.hamiltonian(field))),
        }
    }

    /// Entanglement of a pure state under `measure`.
    pub fn entanglement(&self, psi: &StateVector, measure: Measure) -> Result<f64> {
        psi.check_dim(self.dim())?;
        match measure {
            Measure::Concurrence => Ok(concurrence(&self.extremal_pair(psi)?)),
            Measure::Entropy => match &self.kind {
                Kind::Lmg(ops) => symmetric_block_entropy(ops.sector(), psi.amplitudes(), ops.spins() / 2),
                Kind::Ising(ops) => {
                    let rho = reduced_leading_block(psi, ops.spins() / 2)?;
                    let spectrum: Vec<f64> = nalgebra::SymmetricEigen::new(rho)
                        .eigenvalues
                        .iter()
                        .map(|&p| if p < 0.0 && p >= -NEGATIVE_CLIP { 0.0 } else { p })
                        .collect();
                    entropy_of_spectrum(&spectrum)
                }
            },
        }
    }

    /// Reduced state of spins 1 and N.
    pub fn extremal_pair(&self, psi: &StateVector) -> Result<TwoSpinDensityMatrix> {
        match &self.kind {
            Kind::Ising(ops) => reduced_two_spin(psi, 1, ops.spins()),
            Kind::Lmg(ops) => {
                // Every pair of a symmetric state is equivalent; the two-spin
                // block lives on the triplet |00>, (|01>+|10>)/sqrt2, |11>.
                let rho3 = symmetric_block_density(ops.sector(), psi.amplitudes(), 2)?;
                let s = 0.5f64.sqrt();
                let mut w = DMatrix::<Complex64>::zeros(4, 3);
                w[(0, 0)] = Complex64::new(1.0, 0.0);
                w[(1, 1)] = Complex64::new(s, 0.0);
                w[(2, 1)] = Complex64::new(s, 0.0);
                w[(3, 2)] = Complex64::new(1.0, 0.0);
                TwoSpinDensityMatrix::new(&w * rho3 * w.transpose())
            }
        }
    }

    /// `P(t)` between the initial and the current state.
    pub fn survival(&self, initial: &StateVector, current: &StateVector, kind: SurvivalKind) -> Result<f64> {
        match kind {
            SurvivalKind::Overlap => Ok(initial.overlap_probability(current)?.min(1.0)),
            SurvivalKind::ExtremalFidelity => uhlmann_fidelity(
                self.extremal_pair(current)?.as_density(),
                self.extremal_pair(initial)?.as_density(),
            ),
        }
    }

    /// Checks pairing of a state with this model.
    pub fn check_state(&self, psi: &StateVector) -> Result<()> {
        if psi.basis() != self.basis_tag() {
            return Err(EsuError::DimensionMismatch {
                expected: self.dim(),
                found: psi.dim(),
            });
        }
        Ok(())
    }
}
