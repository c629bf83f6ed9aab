//! Entanglement storage in spin models: exact LMG and Ising dynamics, CRAB
//! pulse optimization and telegraph-noise robustness analysis.

pub mod crab;
pub mod dynamics;
pub mod entanglement;
pub mod error;
pub mod hilbert;
pub mod ising;
pub mod lmg;
pub mod model;
pub mod seeds;

pub use error::{EsuError, Result};
pub use hilbert::{BasisTag, HermitianMatrix, SpectralDecomposition, StateVector};
pub use model::{Measure, Model, SurvivalKind};
