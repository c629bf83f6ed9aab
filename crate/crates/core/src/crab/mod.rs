//! Chopped random basis control: pulse ansatz, cost and optimizer loop.

mod simplex;

pub use simplex::{minimize, SimplexOutcome, SimplexSettings};

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{EsuError, Result};
use crate::hilbert::StateVector;
use crate::model::{Measure, Model};
use crate::seeds::derive_seed;

/// Smallest |Ẽ| accepted by the relative fluctuation form.
pub const ENERGY_FLOOR: f64 = 1e-12;

/// Stream tag for restart seeds.
const RESTART_STREAM: u64 = 0x43_52_41_42;

/// Control field Γ(t) on [−T, 0].
///
/// Γ(t) = Γ̃ (1 + g(t) Σ_k [A_k sin(ω_k t) + B_k cos(ω_k t)]) with
/// ω_k = 2πk(1 + r_k)/T and g(t) = sin^(2p)(π(t + T)/T).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrabPulse {
    pub duration: f64,
    pub reference_field: f64,
    pub randomizers: Vec<f64>,
    pub sin_amplitudes: Vec<f64>,
    pub cos_amplitudes: Vec<f64>,
    pub boundary_stiffness: u32,
}

impl CrabPulse {
    /// Zero-amplitude pulse with the given frequency randomizers.
    pub fn new(duration: f64, reference_field: f64, randomizers: Vec<f64>) -> Result<Self> {
        if !(duration.is_finite() && duration > 0.0) {
            return Err(EsuError::InvalidParameter(format!("duration must be positive, got {duration}")));
        }
        if !reference_field.is_finite() {
            return Err(EsuError::InvalidParameter("reference field must be finite".into()));
        }
        if let Some(r) = randomizers.iter().find(|r| !(-0.5..=0.5).contains(*r)) {
            return Err(EsuError::InvalidParameter(format!("randomizer {r} outside [-0.5, 0.5]")));
        }
        let n = randomizers.len();
        Ok(Self {
            duration,
            reference_field,
            randomizers,
            sin_amplitudes: vec![0.0; n],
            cos_amplitudes: vec![0.0; n],
            boundary_stiffness: 1,
        })
    }

    /// Draws `components` randomizers uniformly from [−0.5, 0.5].
    pub fn random(duration: f64, reference_field: f64, components: usize, rng: &mut impl Rng) -> Result<Self> {
        let r = (0..components).map(|_| rng.random_range(-0.5..=0.5)).collect();
        Self::new(duration, reference_field, r)
    }

    pub fn components(&self) -> usize {
        self.randomizers.len()
    }

    /// ω_k for the 1-based component index k.
    pub fn frequency(&self, k: usize) -> f64 {
        2.0 * std::f64::consts::PI * k as f64 * (1.0 + self.randomizers[k - 1]) / self.duration
    }

    pub fn envelope(&self, t: f64) -> f64 {
        let s = (std::f64::consts::PI * (t + self.duration) / self.duration).sin();
        (s * s).powi(self.boundary_stiffness as i32)
    }

    /// Amplitudes packed as `[A_1..A_n, B_1..B_n]`.
    pub fn parameters(&self) -> Vec<f64> {
        let mut p = self.sin_amplitudes.clone();
        p.extend_from_slice(&self.cos_amplitudes);
        p
    }

    pub fn set_parameters(&mut self, params: &[f64]) {
        let n = self.components();
        assert_eq!(params.len(), 2 * n, "expected {} amplitudes", 2 * n);
        self.sin_amplitudes.copy_from_slice(&params[..n]);
        self.cos_amplitudes.copy_from_slice(&params[n..]);
    }

    pub fn with_parameters(&self, params: &[f64]) -> Self {
        let mut p = self.clone();
        p.set_parameters(params);
        p
    }

    /// Γ(t) for t in [−T, 0]; the endpoints return Γ̃ exactly.
    pub fn value(&self, t: f64) -> f64 {
        if t <= -self.duration || t >= 0.0 {
            return self.reference_field;
        }
        let g = self.envelope(t);
        if g == 0.0 {
            return self.reference_field;
        }
        let mut sum = 0.0;
        for k in 1..=self.components() {
            let w = self.frequency(k);
            sum += self.sin_amplitudes[k - 1] * (w * t).sin() + self.cos_amplitudes[k - 1] * (w * t).cos();
        }
        self.reference_field * (1.0 + g * sum)
    }

    /// Piecewise-constant fields for `steps` equal intervals, sampled at
    /// interval midpoints.
    pub fn control_fields(&self, steps: usize) -> Vec<f64> {
        let dt = self.duration / steps as f64;
        (0..steps)
            .map(|j| self.value(-self.duration + (j as f64 + 0.5) * dt))
            .collect()
    }
}

/// Samples `p` on an ascending grid inside [−T, 0].
pub fn sample_pulse(p: &CrabPulse, grid: &[f64]) -> Result<Vec<f64>> {
    let slack = 1e-12 * p.duration;
    let mut prev = f64::NEG_INFINITY;
    for &t in grid {
        if !(t >= -p.duration - slack && t <= slack) || t < prev {
            return Err(EsuError::GridOutsideWindow { t, start: -p.duration });
        }
        prev = t;
    }
    Ok(grid.iter().map(|&t| p.value(t)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FluctuationForm {
    /// ΔẼ/|Ẽ|.
    #[default]
    Relative,
    /// ΔẼ.
    Absolute,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostSpec {
    pub lambda: f64,
    pub measure: Measure,
    pub fluctuation_form: FluctuationForm,
}

impl CostSpec {
    pub fn new(lambda: f64, measure: Measure, fluctuation_form: FluctuationForm) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(EsuError::InvalidParameter(format!("lambda must be finite and >= 0, got {lambda}")));
        }
        Ok(Self {
            lambda,
            measure,
            fluctuation_form,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub cost: f64,
    pub entanglement: f64,
    pub energy: f64,
    pub fluctuation: f64,
    /// ΔẼ/|Ẽ| or ΔẼ, depending on the form.
    pub fluctuation_term: f64,
}

/// Evolves `psi_in` through the discretized pulse.
pub fn apply_pulse(model: &Model, psi_in: &StateVector, pulse: &CrabPulse, steps: usize) -> Result<StateVector> {
    model.check_state(psi_in)?;
    if steps == 0 {
        return Err(EsuError::InvalidParameter("time_steps must be positive".into()));
    }
    let dt = pulse.duration / steps as f64;
    let mut psi: DVector<Complex64> = psi_in.amplitudes().clone();
    for field in pulse.control_fields(steps) {
        if field == pulse.reference_field {
            // The clamped value recurs at every step of a zero pulse.
            model.stepper(1.0, field, true).step(&mut psi, dt);
        } else {
            model.pulse_stepper(1.0, field).step(&mut psi, dt);
        }
    }
    Ok(StateVector::from_parts_unchecked(psi_in.basis(), psi))
}

/// Cost of an evolved state `psi0` against `H[Γ̃]`.
pub fn cost_of_state(model: &Model, psi0: &StateVector, reference_field: f64, spec: &CostSpec) -> Result<CostBreakdown> {
    let entanglement = model.entanglement(psi0, spec.measure)?;
    let stats = model.energy_stats(reference_field, psi0)?;
    let fluctuation_term = match spec.fluctuation_form {
        FluctuationForm::Absolute => stats.fluctuation,
        FluctuationForm::Relative => {
            if stats.energy.abs() < ENERGY_FLOOR {
                return Err(EsuError::DegenerateNormalization {
                    energy: stats.energy,
                    threshold: ENERGY_FLOOR,
                });
            }
            stats.fluctuation / stats.energy.abs()
        }
    };
    Ok(CostBreakdown {
        cost: -entanglement + spec.lambda * fluctuation_term,
        entanglement,
        energy: stats.energy,
        fluctuation: stats.fluctuation,
        fluctuation_term,
    })
}

/// F = −S + λ·(fluctuation term) on ψ(0), plus ψ(0) itself.
pub fn evaluate_cost(
    pulse: &CrabPulse,
    model: &Model,
    psi_in: &StateVector,
    spec: &CostSpec,
    steps: usize,
) -> Result<(CostBreakdown, StateVector)> {
    let psi0 = apply_pulse(model, psi_in, pulse, steps)?;
    let breakdown = cost_of_state(model, &psi0, pulse.reference_field, spec)?;
    Ok((breakdown, psi0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub max_evaluations: usize,
    pub restarts: usize,
    pub simplex_scale: f64,
    pub seed: u64,
    pub time_steps: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_evaluations: 20_000,
            restarts: 4,
            simplex_scale: 1.0,
            seed: 0,
            time_steps: 1000,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_evaluations == 0 || self.restarts == 0 || self.time_steps == 0 {
            return Err(EsuError::InvalidParameter(
                "max_evaluations, restarts and time_steps must be positive".into(),
            ));
        }
        if !(self.simplex_scale.is_finite() && self.simplex_scale > 0.0) {
            return Err(EsuError::InvalidParameter("simplex_scale must be positive".into()));
        }
        if self.max_evaluations < self.restarts {
            return Err(EsuError::InvalidParameter("fewer evaluations than restarts".into()));
        }
        Ok(())
    }
}

/// Fixed part of an optimization problem.
#[derive(Debug, Clone, Copy)]
pub struct ControlProblem<'a> {
    pub model: &'a Model,
    pub initial: &'a StateVector,
    pub reference_field: f64,
    pub duration: f64,
    pub components: usize,
    pub boundary_stiffness: u32,
    pub cost: CostSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizationStatus {
    Improved,
    /// No candidate beat the zero pulse within the budget.
    NoProgress,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartSummary {
    pub seed: u64,
    pub randomizers: Vec<f64>,
    pub evaluations: usize,
    pub best_cost: f64,
    pub rebuilds: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryPoint {
    pub evaluation: usize,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub status: OptimizationStatus,
    pub pulse: CrabPulse,
    pub breakdown: CostBreakdown,
    #[serde(skip)]
    pub final_state: Option<StateVector>,
    pub zero_pulse_cost: f64,
    pub seed: u64,
    pub evaluations: usize,
    pub restarts: Vec<RestartSummary>,
    /// Best cost so far, at every improvement across all restarts.
    pub history: Vec<HistoryPoint>,
}

impl OptimizationResult {
    pub fn final_state(&self) -> &StateVector {
        self.final_state.as_ref().expect("final state is set by optimize")
    }
}

/// Splits `total` into `parts` near-equal shares.
fn split_budget(total: usize, parts: usize) -> Vec<usize> {
    (0..parts)
        .map(|i| total / parts + usize::from(i < total % parts))
        .collect()
}

/// Simplex search over the 2·n_f amplitudes with independent randomizers
/// per restart. Each restart starts at the zero pulse.
pub fn optimize(problem: &ControlProblem<'_>, cfg: &OptimizerConfig) -> Result<OptimizationResult> {
    cfg.validate()?;
    problem.model.check_state(problem.initial)?;
    if problem.components == 0 {
        return Err(EsuError::InvalidParameter("at least one Fourier component is required".into()));
    }

    let template = CrabPulse::new(problem.duration, problem.reference_field, vec![0.0; problem.components])?;
    let zero = CrabPulse {
        boundary_stiffness: problem.boundary_stiffness,
        ..template
    };
    let (zero_breakdown, _) = evaluate_cost(&zero, problem.model, problem.initial, &problem.cost, cfg.time_steps)?;
    let zero_pulse_cost = zero_breakdown.cost;

    let mut best_pulse = zero.clone();
    let mut best_cost = zero_pulse_cost;
    let mut history = Vec::new();
    let mut summaries = Vec::with_capacity(cfg.restarts);
    let mut used = 0;

    for (r, budget) in split_budget(cfg.max_evaluations, cfg.restarts).into_iter().enumerate() {
        let seed = derive_seed(cfg.seed, RESTART_STREAM, r as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pulse = CrabPulse::random(problem.duration, problem.reference_field, problem.components, &mut rng)?;
        pulse.boundary_stiffness = problem.boundary_stiffness;

        let objective = |x: &[f64]| {
            let candidate = pulse.with_parameters(x);
            match evaluate_cost(&candidate, problem.model, problem.initial, &problem.cost, cfg.time_steps) {
                Ok((b, _)) => b.cost,
                Err(_) => f64::INFINITY,
            }
        };
        let settings = SimplexSettings {
            initial_scale: cfg.simplex_scale,
            max_evaluations: budget,
            ..SimplexSettings::default()
        };
        let outcome = minimize(objective, &vec![0.0; 2 * problem.components], &settings);

        for &(e, c) in &outcome.improvements {
            if c < best_cost || history.is_empty() {
                history.push(HistoryPoint {
                    evaluation: used + e,
                    cost: c.min(best_cost),
                });
            }
            if c < best_cost {
                best_cost = c;
                best_pulse = pulse.with_parameters(&outcome.best);
            }
        }
        used += outcome.evaluations;
        summaries.push(RestartSummary {
            seed,
            randomizers: pulse.randomizers.clone(),
            evaluations: outcome.evaluations,
            best_cost: outcome.best_value,
            rebuilds: outcome.rebuilds,
        });
    }

    let status = if best_cost < zero_pulse_cost {
        OptimizationStatus::Improved
    } else {
        OptimizationStatus::NoProgress
    };
    let (breakdown, psi0) = evaluate_cost(&best_pulse, problem.model, problem.initial, &problem.cost, cfg.time_steps)?;
    Ok(OptimizationResult {
        status,
        pulse: best_pulse,
        breakdown,
        final_state: Some(psi0),
        zero_pulse_cost,
        seed: cfg.seed,
        evaluations: used,
        restarts: summaries,
        history,
    })
}
