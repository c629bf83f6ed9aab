//! Experiment configuration read from TOML.
//!
//! Every key is optional; see the `Default` impls for the values used when
//! a key is absent. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use esu_core::crab::{CostSpec, FluctuationForm, OptimizerConfig};
use esu_core::dynamics::Dwell;
use esu_core::lmg::Parity;
use esu_core::Measure;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    #[default]
    Lmg,
    Ising,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub model: ModelKind,
    /// System sizes; every command loops over this list.
    pub spins: Vec<usize>,
    pub parity: Parity,
    /// Γ̃, the field outside the control window.
    pub reference_field: f64,
    /// Field of the critical ground state reported by `spectrum`.
    pub critical_field: f64,
    pub lambda: Vec<f64>,
    /// Defaults to entropy for LMG and concurrence for Ising.
    pub measure: Option<Measure>,
    /// Defaults to relative for LMG and absolute for Ising.
    pub fluctuation_form: Option<FluctuationForm>,
    /// 1-based energy index of the initial eigenstate of `H[Γ̃]`.
    pub initial_eigenstates: Vec<usize>,
    pub control: ControlConfig,
    pub optimizer: OptimizerSection,
    pub evolution: EvolutionConfig,
    pub noise: NoiseConfig,
    pub inputs: InputsConfig,
    pub output: OutputConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::Lmg,
            spins: vec![32],
            parity: Parity::Even,
            reference_field: 10.0,
            critical_field: 1.0,
            lambda: vec![1.8],
            measure: None,
            fluctuation_form: None,
            initial_eigenstates: vec![1],
            control: ControlConfig::default(),
            optimizer: OptimizerSection::default(),
            evolution: EvolutionConfig::default(),
            noise: NoiseConfig::default(),
            inputs: InputsConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControlConfig {
    /// T, length of the control window [−T, 0].
    pub duration: f64,
    /// n_f.
    pub components: usize,
    pub boundary_stiffness: u32,
    pub time_steps: usize,
}

impl Default for ControlConfig {
    fn default() -> Self {
        Self {
            duration: 20.0,
            components: 8,
            boundary_stiffness: 1,
            time_steps: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerSection {
    pub max_evaluations: usize,
    pub restarts: usize,
    pub simplex_scale: f64,
    pub seed: u64,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        let d = OptimizerConfig::default();
        Self {
            max_evaluations: d.max_evaluations,
            restarts: d.restarts,
            simplex_scale: d.simplex_scale,
            seed: d.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolutionConfig {
    pub horizon: f64,
    pub dt: f64,
    pub threshold: f64,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            horizon: 100.0,
            dt: 0.05,
            threshold: 0.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    /// I_α and I_β; `lifetime` sweeps `intensities` instead, setting both.
    pub coupling_intensity: f64,
    pub field_intensity: f64,
    pub frequencies: Vec<f64>,
    pub intensities: Vec<f64>,
    pub instances: usize,
    pub dwell: Dwell,
    /// Write every instance trace, not just mean and spread.
    pub instance_traces: bool,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            coupling_intensity: 0.2,
            field_intensity: 0.2,
            frequencies: vec![0.8, 2.6, 7.8, 26.0, 78.0],
            intensities: vec![0.2],
            instances: 30,
            dwell: Dwell::Fixed,
            instance_traces: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InputsConfig {
    /// Run records from `optimize` (or `ising`) supplying prepared states.
    pub records: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::MissingInput(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.spins.is_empty() {
            return bad("spins must list at least one size".into());
        }
        if self.model == ModelKind::Lmg && self.spins.iter().any(|&n| n < 2 || n % 2 == 1) {
            return bad("lmg spin counts must be even and >= 2".into());
        }
        if self.model == ModelKind::Ising && self.spins.iter().any(|&n| n < 2) {
            return bad("ising chains need at least 2 spins".into());
        }
        if self.lambda.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return bad("lambda values must be finite and >= 0".into());
        }
        if !self.reference_field.is_finite() || !self.critical_field.is_finite() {
            return bad("fields must be finite".into());
        }
        if self.initial_eigenstates.is_empty() || self.initial_eigenstates.contains(&0) {
            return bad("initial_eigenstates are 1-based and must be non-empty".into());
        }
        let c = &self.control;
        if !(c.duration.is_finite() && c.duration > 0.0) || c.components == 0 || c.time_steps == 0 {
            return bad("control duration, components and time_steps must be positive".into());
        }
        self.optimizer_config(0)
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        let e = &self.evolution;
        if !(e.dt > 0.0 && e.horizon >= e.dt && e.threshold > 0.0 && e.threshold < 1.0) {
            return bad("evolution needs dt > 0, horizon >= dt and threshold in (0, 1)".into());
        }
        let n = &self.noise;
        if n.instances == 0 {
            return bad("noise.instances must be >= 1".into());
        }
        if n.frequencies.iter().any(|f| !(f.is_finite() && *f > 0.0)) {
            return bad("noise frequencies must be positive".into());
        }
        let nonneg = |x: f64| x.is_finite() && x >= 0.0;
        if !nonneg(n.coupling_intensity) || !nonneg(n.field_intensity) || !n.intensities.iter().all(|&i| nonneg(i)) {
            return bad("noise intensities must be finite and >= 0".into());
        }
        Ok(())
    }

    pub fn measure(&self) -> Measure {
        self.measure.unwrap_or(match self.model {
            ModelKind::Lmg => Measure::Entropy,
            ModelKind::Ising => Measure::Concurrence,
        })
    }

    pub fn fluctuation_form(&self) -> FluctuationForm {
        self.fluctuation_form.unwrap_or(match self.model {
            ModelKind::Lmg => FluctuationForm::Relative,
            ModelKind::Ising => FluctuationForm::Absolute,
        })
    }

    pub fn cost_spec(&self, lambda: f64) -> Result<CostSpec, CliError> {
        CostSpec::new(lambda, self.measure(), self.fluctuation_form()).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn optimizer_config(&self, seed: u64) -> OptimizerConfig {
        OptimizerConfig {
            max_evaluations: self.optimizer.max_evaluations,
            restarts: self.optimizer.restarts,
            simplex_scale: self.optimizer.simplex_scale,
            seed,
            time_steps: self.control.time_steps,
        }
    }

    /// Configuration with the effective seed written in and the output
    /// location cleared, as embedded in records and hashed into file names.
    pub fn snapshot(&self, seed: u64) -> Self {
        let mut snap = self.clone();
        snap.optimizer.seed = seed;
        snap.output = OutputConfig::default();
        snap
    }

    /// First 12 hex digits of the SHA-256 of the snapshot's JSON form.
    pub fn hash(&self, seed: u64) -> String {
        let json = serde_json::to_string(&self.snapshot(seed)).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().take(6).map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = ExperimentConfig::from_toml("").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.measure(), Measure::Entropy);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(ExperimentConfig::from_toml("spinz = [4]"), Err(CliError::Config(_))));
        assert!(ExperimentConfig::from_toml("[noise]\nnu = 3.0").is_err());
    }

    #[test]
    fn parses_nested_sections() {
        let cfg = ExperimentConfig::from_toml(
            "model = \"ising\"\nspins = [10]\nlambda = [0.0, 0.1]\n[noise]\nfrequencies = [7.8]\ndwell = \"exponential\"\n",
        )
        .unwrap();
        assert_eq!(cfg.model, ModelKind::Ising);
        assert_eq!(cfg.fluctuation_form(), FluctuationForm::Absolute);
        assert_eq!(cfg.noise.dwell, Dwell::Exponential);
        assert_eq!(cfg.noise.instances, 30);
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(ExperimentConfig::from_toml("lambda = [-1.0]").is_err());
        assert!(ExperimentConfig::from_toml("[evolution]\ndt = 0.0").is_err());
        assert!(ExperimentConfig::from_toml("initial_eigenstates = [0]").is_err());
    }

    #[test]
    fn hash_ignores_output_dir_but_not_seed() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        b.output.dir = PathBuf::from("/elsewhere");
        assert_eq!(a.hash(1), b.hash(1));
        assert_ne!(a.hash(1), a.hash(2));
        assert_eq!(a.hash(1).len(), 12);
    }
}
