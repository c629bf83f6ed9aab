//! Experiment driver behind the `esu` binary.

pub mod config;
pub mod error;
pub mod records;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use esu_core::crab::{optimize, ControlProblem, OptimizationStatus};
use esu_core::dynamics::{evolve_free, frequency_sweep, lifetime, Lifetime, Recording, SweepSettings};
use esu_core::lmg::{central_index, eigenstate_entropy_scan, max_symmetric_entropy};
use esu_core::{Model, SurvivalKind};

pub use config::{ExperimentConfig, ModelKind};
pub use error::CliError;
use records::{fmt_lifetime, now_ms, pack_state, EigenOverlap, OutputNames, RunFile, RunRecord, Table, Timestamps};

/// Largest Ising chain the `ising` command accepts.
pub const MAX_ISING_SPINS: usize = 12;

#[derive(Debug, Parser)]
#[command(name = "esu", version, about = "Entanglement storage experiments on LMG and Ising spin models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Spectrum,
    Optimize,
    Noise,
    Lifetime,
    Ising,
}

#[derive(Debug, Clone, clap::Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides `optimizer.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides `output.dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Eigenstate energies and half-block entropies.
    Spectrum(RunArgs),
    /// CRAB preparation followed by free evolution.
    Optimize(RunArgs),
    /// Survival under telegraph noise over a frequency list.
    Noise(RunArgs),
    /// Noise lifetimes versus system size and intensity.
    Lifetime(RunArgs),
    /// Concurrence preparation on the Ising chain.
    Ising(RunArgs),
}

impl Command {
    pub fn kind(&self) -> CommandKind {
        match self {
            Command::Spectrum(_) => CommandKind::Spectrum,
            Command::Optimize(_) => CommandKind::Optimize,
            Command::Noise(_) => CommandKind::Noise,
            Command::Lifetime(_) => CommandKind::Lifetime,
            Command::Ising(_) => CommandKind::Ising,
        }
    }

    pub fn args(&self) -> &RunArgs {
        match self {
            Command::Spectrum(a) | Command::Optimize(a) | Command::Noise(a) | Command::Lifetime(a) | Command::Ising(a) => a,
        }
    }
}

impl CommandKind {
    pub fn name(&self) -> &'static str {
        match self {
            CommandKind::Spectrum => "spectrum",
            CommandKind::Optimize => "optimize",
            CommandKind::Noise => "noise",
            CommandKind::Lifetime => "lifetime",
            CommandKind::Ising => "ising",
        }
    }
}

/// Files produced by one invocation.
#[derive(Debug, Clone, Default)]
pub struct Outputs {
    pub tables: Vec<PathBuf>,
    pub record: Option<PathBuf>,
}

/// Loads the config named in `cmd` and runs it.
pub fn run(cmd: &Command) -> Result<Outputs, CliError> {
    let args = cmd.args();
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(out) = &args.out {
        cfg.output.dir = out.clone();
    }
    let seed = args.seed.unwrap_or(cfg.optimizer.seed);
    run_config(cmd.kind(), &cfg, seed)
}

/// Runs `kind` on an already parsed configuration.
pub fn run_config(kind: CommandKind, cfg: &ExperimentConfig, seed: u64) -> Result<Outputs, CliError> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.output.dir)?;
    let names = OutputNames {
        dir: cfg.output.dir.clone(),
        command: kind.name(),
        hash: cfg.hash(seed),
        seed,
    };
    match kind {
        CommandKind::Spectrum => cmd_spectrum(cfg, &names),
        CommandKind::Optimize => cmd_optimize(cfg, seed, &names, ModelKind::Lmg),
        CommandKind::Ising => cmd_optimize(cfg, seed, &names, ModelKind::Ising),
        CommandKind::Noise => cmd_noise(cfg, seed, &names),
        CommandKind::Lifetime => cmd_lifetime(cfg, seed, &names),
    }
}

fn fmt(x: f64) -> String {
    x.to_string()
}

/// Least-squares `A` in `y ≈ A x`.
pub fn fit_through_origin(x: &[f64], y: &[f64]) -> f64 {
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    sxy / sxx
}

/// `(gamma, a)` for the least-squares fit of `y = a x^gamma` in log-log space.
pub fn power_law_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, (my - slope * mx).exp())
}

fn cmd_spectrum(cfg: &ExperimentConfig, names: &OutputNames) -> Result<Outputs, CliError> {
    if cfg.model != ModelKind::Lmg {
        return Err(CliError::Config("spectrum requires model = \"lmg\"".into()));
    }
    let mut table = Table::new(&["N", "n", "E_n", "S_n"]);
    let mut bounds = Vec::new();
    let mut central = Vec::new();
    let mut critical = Vec::new();
    for &n in &cfg.spins {
        let rows = eigenstate_entropy_scan(n, cfg.reference_field, cfg.parity)?;
        for r in &rows {
            table.push(vec![n.to_string(), r.index.to_string(), fmt(r.energy), fmt(r.entropy)]);
        }
        central.push(rows[central_index(rows.len())].entropy);
        critical.push(eigenstate_entropy_scan(n, cfg.critical_field, cfg.parity)?[0].entropy);
        bounds.push(max_symmetric_entropy(n));
    }
    let mut fit = Table::new(&["series", "field", "A", "sizes"]);
    let sizes = cfg.spins.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(";");
    fit.push(vec![
        "central-eigenstate".into(),
        fmt(cfg.reference_field),
        fmt(fit_through_origin(&bounds, &central)),
        sizes.clone(),
    ]);
    fit.push(vec![
        "critical-ground-state".into(),
        fmt(cfg.critical_field),
        fmt(fit_through_origin(&bounds, &critical)),
        sizes,
    ]);
    let main = names.path(None, "csv");
    let fit_path = names.path(Some("fit"), "csv");
    table.write(&main, &names.hash, names.seed)?;
    fit.write(&fit_path, &names.hash, names.seed)?;
    Ok(Outputs {
        tables: vec![main, fit_path],
        record: None,
    })
}

fn build_model(kind: ModelKind, spins: usize, cfg: &ExperimentConfig) -> Result<Model, CliError> {
    Ok(match kind {
        ModelKind::Lmg => Model::lmg(spins, cfg.parity)?,
        ModelKind::Ising => {
            if spins > MAX_ISING_SPINS {
                return Err(CliError::Config(format!("ising chains are limited to {MAX_ISING_SPINS} spins")));
            }
            Model::ising(spins)?
        }
    })
}

fn survival_kind(kind: ModelKind) -> SurvivalKind {
    match kind {
        ModelKind::Lmg => SurvivalKind::Overlap,
        ModelKind::Ising => SurvivalKind::ExtremalFidelity,
    }
}

fn top_overlaps(model: &Model, field: f64, psi: &esu_core::StateVector, count: usize) -> Vec<EigenOverlap> {
    let eig = model.spectrum(field);
    let c = eig.coefficients(psi.amplitudes());
    let mut w: Vec<EigenOverlap> = c
        .iter()
        .enumerate()
        .map(|(i, z)| EigenOverlap {
            index: i + 1,
            energy: eig.eigenvalues()[i],
            weight: z.norm_sqr(),
        })
        .collect();
    w.sort_by(|a, b| b.weight.total_cmp(&a.weight).then(a.index.cmp(&b.index)));
    w.truncate(count);
    w
}

fn cmd_optimize(cfg: &ExperimentConfig, seed: u64, names: &OutputNames, expect: ModelKind) -> Result<Outputs, CliError> {
    if cfg.model != expect {
        return Err(CliError::Config(format!(
            "{} requires model = \"{}\"",
            names.command,
            if expect == ModelKind::Lmg { "lmg" } else { "ising" }
        )));
    }
    let started_ms = now_ms();
    let measure = cfg.measure();
    let survival = survival_kind(cfg.model);
    let rec = Recording {
        survival,
        measure: Some(measure),
        energy: true,
    };
    let mut table = Table::new(&[
        "N",
        "lambda",
        "initial",
        "t",
        "S",
        "P",
        "E",
        "dE",
    ]);
    let mut runs = Vec::new();
    let mut stalled = Vec::new();
    for &n in &cfg.spins {
        let model = build_model(cfg.model, n, cfg)?;
        let eig = model.spectrum(cfg.reference_field);
        for &initial in &cfg.initial_eigenstates {
            let psi_in = eig.eigenstate(model.basis_tag(), initial - 1)?;
            for &lambda in &cfg.lambda {
                let problem = ControlProblem {
                    model: &model,
                    initial: &psi_in,
                    reference_field: cfg.reference_field,
                    duration: cfg.control.duration,
                    components: cfg.control.components,
                    boundary_stiffness: cfg.control.boundary_stiffness,
                    cost: cfg.cost_spec(lambda)?,
                };
                let result = optimize(&problem, &cfg.optimizer_config(seed))?;
                if result.status == OptimizationStatus::NoProgress {
                    stalled.push(format!("N={n} lambda={lambda} initial={initial}"));
                }
                let psi0 = result.final_state().clone();
                let traj = evolve_free(&model, &psi0, cfg.reference_field, cfg.evolution.horizon, cfg.evolution.dt, &rec)?;
                for i in 0..traj.times.len() {
                    table.push(vec![
                        n.to_string(),
                        fmt(lambda),
                        initial.to_string(),
                        fmt(traj.times[i]),
                        fmt(traj.entanglement[i]),
                        fmt(traj.survival[i]),
                        fmt(traj.energy[i]),
                        fmt(traj.fluctuation[i]),
                    ]);
                }
                runs.push(RunRecord {
                    model: cfg.model,
                    spins: n,
                    parity: cfg.parity,
                    reference_field: cfg.reference_field,
                    lambda,
                    initial_eigenstate: initial,
                    final_state: pack_state(&psi0),
                    overlaps: top_overlaps(&model, cfg.reference_field, &psi0, 5),
                    peak_entanglement: traj.entanglement.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                    min_survival: traj.survival.iter().copied().fold(f64::INFINITY, f64::min),
                    lifetime: lifetime(&traj.times, &traj.survival, cfg.evolution.threshold),
                    optimization: result,
                });
            }
        }
    }
    let main = names.path(None, "csv");
    table.write(&main, &names.hash, names.seed)?;
    let record_path = names.path(None, "json");
    RunFile {
        command: names.command.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_hash: names.hash.clone(),
        seed,
        config: cfg.snapshot(seed),
        timestamps: Timestamps {
            started_ms,
            finished_ms: now_ms(),
        },
        runs,
    }
    .save(&record_path)?;
    if !stalled.is_empty() {
        return Err(CliError::NoProgress(stalled.join(", ")));
    }
    Ok(Outputs {
        tables: vec![main],
        record: Some(record_path),
    })
}

fn load_runs(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>, CliError> {
    if cfg.inputs.records.is_empty() {
        return Err(CliError::MissingInput("inputs.records lists no run records".into()));
    }
    let mut runs = Vec::new();
    for path in &cfg.inputs.records {
        runs.extend(RunFile::load(path)?.runs);
    }
    Ok(runs)
}

fn sweep_settings(cfg: &ExperimentConfig, seed: u64, run: &RunRecord, intensity: Option<f64>) -> SweepSettings {
    let n = &cfg.noise;
    SweepSettings {
        coupling_intensity: intensity.unwrap_or(n.coupling_intensity),
        field_intensity: intensity.unwrap_or(n.field_intensity),
        seed,
        dwell: n.dwell,
        instances: n.instances,
        horizon: cfg.evolution.horizon,
        dt: cfg.evolution.dt,
        threshold: cfg.evolution.threshold,
        survival: survival_kind(run.model),
        keep_traces: n.instance_traces,
    }
}

fn cmd_noise(cfg: &ExperimentConfig, seed: u64, names: &OutputNames) -> Result<Outputs, CliError> {
    let runs = load_runs(cfg)?;
    let instances = cfg.noise.instances;
    let mut header = vec!["N", "lambda", "nu", "t", "P_mean", "P_std"];
    let instance_cols: Vec<String> = (0..instances).map(|i| format!("P_{i}")).collect();
    if cfg.noise.instance_traces {
        header.extend(instance_cols.iter().map(String::as_str));
    }
    let mut table = Table::new(&header);
    let mut summary = Table::new(&["N", "lambda", "nu", "T", "instance_T_mean", "instance_T_std", "crossed", "resonant"]);
    for run in &runs {
        let model = run.model()?;
        let psi0 = run.state(&model)?;
        let settings = sweep_settings(cfg, seed, run, None);
        let rows = frequency_sweep(&model, &psi0, run.reference_field, &cfg.noise.frequencies, &settings)?;
        let resonant = esu_core::dynamics::resonant_frequency(&rows);
        for row in &rows {
            for (i, t) in row.times.iter().enumerate() {
                let mut line = vec![
                    run.spins.to_string(),
                    fmt(run.lambda),
                    fmt(row.frequency),
                    fmt(*t),
                    fmt(row.mean_survival[i]),
                    fmt(row.std_survival[i]),
                ];
                line.extend(row.instance_traces.iter().map(|p| fmt(p[i])));
                table.push(line);
            }
            let crossed: Vec<f64> = row.instance_lifetimes.iter().filter_map(Lifetime::time).collect();
            let (mean, std) = if crossed.is_empty() {
                (f64::NAN, f64::NAN)
            } else {
                let (m, s) = esu_core::dynamics::mean_and_std(&crossed.iter().map(|&x| vec![x]).collect::<Vec<_>>());
                (m[0], s[0])
            };
            summary.push(vec![
                run.spins.to_string(),
                fmt(run.lambda),
                fmt(row.frequency),
                fmt_lifetime(&row.lifetime),
                fmt(mean),
                fmt(std),
                crossed.len().to_string(),
                (resonant == Some(row.frequency)).to_string(),
            ]);
        }
    }
    let main = names.path(None, "csv");
    let sum_path = names.path(Some("lifetimes"), "csv");
    table.write(&main, &names.hash, names.seed)?;
    summary.write(&sum_path, &names.hash, names.seed)?;
    Ok(Outputs {
        tables: vec![main, sum_path],
        record: None,
    })
}

fn cmd_lifetime(cfg: &ExperimentConfig, seed: u64, names: &OutputNames) -> Result<Outputs, CliError> {
    let runs = load_runs(cfg)?;
    let mut table = Table::new(&["N", "state_kind", "I", "nu", "T"]);
    // (kind, I, nu) -> (N, T) points with a finite lifetime.
    let mut points: Vec<(&'static str, f64, f64, Vec<(f64, f64)>, usize)> = Vec::new();
    for run in &runs {
        let model = run.model()?;
        let psi0 = run.state(&model)?;
        for &intensity in &cfg.noise.intensities {
            let settings = sweep_settings(cfg, seed, run, Some(intensity));
            let rows = frequency_sweep(&model, &psi0, run.reference_field, &cfg.noise.frequencies, &settings)?;
            for row in rows {
                table.push(vec![
                    run.spins.to_string(),
                    run.state_kind().into(),
                    fmt(intensity),
                    fmt(row.frequency),
                    fmt_lifetime(&row.lifetime),
                ]);
                let key = (run.state_kind(), intensity, row.frequency);
                let slot = match points.iter().position(|p| (p.0, p.1, p.2) == key) {
                    Some(i) => i,
                    None => {
                        points.push((key.0, key.1, key.2, Vec::new(), 0));
                        points.len() - 1
                    }
                };
                points[slot].4 += 1;
                if let Some(t) = row.lifetime.time() {
                    points[slot].3.push((run.spins as f64, t));
                }
            }
        }
    }
    let mut fit = Table::new(&["state_kind", "I", "nu", "gamma", "prefactor", "sizes_fitted", "sizes_total"]);
    for (kind, intensity, nu, pts, total) in &points {
        let mut sizes: Vec<f64> = pts.iter().map(|p| p.0).collect();
        sizes.dedup();
        let (gamma, pre) = if sizes.len() >= 2 {
            let x: Vec<f64> = pts.iter().map(|p| p.0).collect();
            let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
            power_law_fit(&x, &y)
        } else {
            (f64::NAN, f64::NAN)
        };
        fit.push(vec![
            kind.to_string(),
            fmt(*intensity),
            fmt(*nu),
            fmt(gamma),
            fmt(pre),
            pts.len().to_string(),
            total.to_string(),
        ]);
    }
    let main = names.path(None, "csv");
    let fit_path = names.path(Some("fit"), "csv");
    table.write(&main, &names.hash, names.seed)?;
    fit.write(&fit_path, &names.hash, names.seed)?;
    Ok(Outputs {
        tables: vec![main, fit_path],
        record: None,
    })
}
