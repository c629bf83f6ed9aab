//! Shared pieces of the acceptance run: verdict lines, cached CRAB
//! preparations reused by several criteria, and small numeric helpers.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::fmt;
use std::rc::Rc;
use std::time::Instant;

use esu_cli::{CliError, ExperimentConfig, ModelKind};
use esu_core::crab::{optimize, ControlProblem, OptimizationResult};
use esu_core::dynamics::Lifetime;
use esu_core::{Model, StateVector};
use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Outcome of one acceptance criterion.
#[derive(Debug, Clone)]
pub struct Verdict {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(id: u8, title: &'static str, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            id,
            title,
            passed,
            detail: detail.into(),
        }
    }

    /// A criterion that could not be evaluated counts as failed.
    pub fn from_result(id: u8, title: &'static str, r: Result<(bool, String), Box<dyn std::error::Error>>) -> Self {
        match r {
            Ok((passed, detail)) => Self::new(id, title, passed, detail),
            Err(e) => Self::new(id, title, false, format!("error: {e}")),
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] criterion {}: {}: {}", self.id, self.title, self.detail)
    }
}

/// An optimized preparation `psi(0)` with the model it lives in.
pub struct Prepared {
    pub model: Model,
    pub result: OptimizationResult,
    pub state: StateVector,
    pub seconds: f64,
}

/// Memoizes optimizations by `(spins, lambda)` under one configuration.
pub struct Preparations {
    cfg: ExperimentConfig,
    cache: RefCell<BTreeMap<(usize, u64), Rc<Prepared>>>,
}

impl Preparations {
    pub fn new(cfg: ExperimentConfig) -> Self {
        Self {
            cfg,
            cache: RefCell::new(BTreeMap::new()),
        }
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.cfg
    }

    /// Optimizes from the initial eigenstate in `config().initial_eigenstates[0]`.
    pub fn get(&self, spins: usize, lambda: f64) -> Result<Rc<Prepared>, CliError> {
        let key = (spins, lambda.to_bits());
        if let Some(p) = self.cache.borrow().get(&key) {
            return Ok(p.clone());
        }
        let start = Instant::now();
        let cfg = &self.cfg;
        let model = match cfg.model {
            ModelKind::Lmg => Model::lmg(spins, cfg.parity)?,
            ModelKind::Ising => Model::ising(spins)?,
        };
        let initial = model
            .spectrum(cfg.reference_field)
            .eigenstate(model.basis_tag(), cfg.initial_eigenstates[0] - 1)?;
        let problem = ControlProblem {
            model: &model,
            initial: &initial,
            reference_field: cfg.reference_field,
            duration: cfg.control.duration,
            components: cfg.control.components,
            boundary_stiffness: cfg.control.boundary_stiffness,
            cost: cfg.cost_spec(lambda)?,
        };
        let result = optimize(&problem, &cfg.optimizer_config(cfg.optimizer.seed))?;
        let state = result.final_state().clone();
        let prepared = Rc::new(Prepared {
            model,
            result,
            state,
            seconds: start.elapsed().as_secs_f64(),
        });
        self.cache.borrow_mut().insert(key, prepared.clone());
        Ok(prepared)
    }
}

/// Lifetime value, with the horizon standing in as a lower bound when the
/// threshold is never crossed. The flag reports that substitution.
pub fn lifetime_or_horizon(l: &Lifetime, horizon: f64) -> (f64, bool) {
    match l.time() {
        Some(t) => (t, false),
        None => (horizon, true),
    }
}

/// Normalized state with independent uniform real and imaginary parts.
pub fn random_state(model: &Model, seed: u64) -> StateVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amps = DVector::from_fn(model.dim(), |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    StateVector::normalized(model.basis_tag(), amps).expect("nonzero random vector")
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    esu_cli::power_law_fit(x, y).0
}
