//! Persisted run records and tabular output.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use esu_core::crab::OptimizationResult;
use esu_core::dynamics::Lifetime;
use esu_core::lmg::Parity;
use esu_core::{Model, StateVector};
use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, ModelKind};
use crate::error::CliError;

/// Wall-clock bounds of a run, in milliseconds since the Unix epoch. The
/// only non-reproducible part of a record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timestamps {
    pub started_ms: u64,
    pub finished_ms: u64,
}

pub fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenOverlap {
    /// 1-based energy index in `H[Γ̃]`.
    pub index: usize,
    pub energy: f64,
    pub weight: f64,
}

/// One optimized preparation and its noiseless follow-up.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub model: ModelKind,
    pub spins: usize,
    pub parity: Parity,
    pub reference_field: f64,
    pub lambda: f64,
    pub initial_eigenstate: usize,
    pub optimization: OptimizationResult,
    /// ψ(0) as `[re, im]` pairs.
    pub final_state: Vec<[f64; 2]>,
    /// Largest eigenstate weights of ψ(0), descending.
    pub overlaps: Vec<EigenOverlap>,
    pub peak_entanglement: f64,
    pub min_survival: f64,
    pub lifetime: Lifetime,
}

impl RunRecord {
    pub fn model(&self) -> Result<Model, CliError> {
        Ok(match self.model {
            ModelKind::Lmg => Model::lmg(self.spins, self.parity)?,
            ModelKind::Ising => Model::ising(self.spins)?,
        })
    }

    pub fn state(&self, model: &Model) -> Result<StateVector, CliError> {
        Ok(StateVector::new(model.basis_tag(), unpack_state(&self.final_state))?)
    }

    /// `esu` for states optimized with an energy-fluctuation penalty.
    pub fn state_kind(&self) -> &'static str {
        if self.lambda > 0.0 {
            "esu"
        } else {
            "lambda0"
        }
    }
}

pub fn pack_state(psi: &StateVector) -> Vec<[f64; 2]> {
    psi.amplitudes().iter().map(|z| [z.re, z.im]).collect()
}

pub fn unpack_state(packed: &[[f64; 2]]) -> DVector<Complex64> {
    DVector::from_iterator(packed.len(), packed.iter().map(|[re, im]| Complex64::new(*re, *im)))
}

/// A command invocation with its records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFile {
    pub command: String,
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub timestamps: Timestamps,
    pub runs: Vec<RunRecord>,
}

impl RunFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::MissingInput(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::MissingInput(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

/// Output naming `<command>-<hash>-<seed>[-suffix].<ext>` inside `dir`.
#[derive(Debug, Clone)]
pub struct OutputNames {
    pub dir: PathBuf,
    pub command: &'static str,
    pub hash: String,
    pub seed: u64,
}

impl OutputNames {
    pub fn path(&self, suffix: Option<&str>, ext: &str) -> PathBuf {
        let stem = match suffix {
            Some(s) => format!("{}-{}-{}-{s}", self.command, self.hash, self.seed),
            None => format!("{}-{}-{}", self.command, self.hash, self.seed),
        };
        self.dir.join(format!("{stem}.{ext}"))
    }
}

/// CSV with a `# config_hash=.. seed=..` comment line before the header.
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write(&self, path: &Path, hash: &str, seed: u64) -> Result<(), CliError> {
        let mut buf = format!("# config_hash={hash} seed={seed}\n").into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(&self.header)?;
            for r in &self.rows {
                w.write_record(r)?;
            }
            w.flush()?;
        }
        std::fs::write(path, buf)?;
        Ok(())
    }
}

pub fn fmt_lifetime(l: &Lifetime) -> String {
    match l {
        Lifetime::At(t) => t.to_string(),
        Lifetime::ExceedsHorizon => "exceeds-horizon".into(),
    }
}

/// Reads a CSV written by [`Table::write`], skipping the comment line.
pub fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>), CliError> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?;
    let header = r.headers()?.iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|rec| rec.iter().map(String::from).collect()))
        .collect::<Result<_, _>>()?;
    Ok((header, rows))
}
