//! Free and noisy evolution after the control window, the short-time
//! deviation law, and lifetime extraction.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{EsuError, Result};
use crate::hilbert::{eig_hermitian, energy_stats, HermitianMatrix, SpectralDecomposition, StateVector};
use crate::model::{Measure, Model, SurvivalKind};
use crate::seeds::derive_seed;

/// Stream tag for noise instance seeds.
const NOISE_STREAM: u64 = 0x52_54_4e;

/// Default survival threshold defining T₀.₈.
pub const DEFAULT_THRESHOLD: f64 = 0.8;

/// How long the telegraph signal holds a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dwell {
    /// Every segment lasts exactly 1/ν.
    #[default]
    Fixed,
    /// Exponentially distributed segments with mean 1/ν.
    Exponential,
}

/// Piecewise-constant noise on the coupling (α) and the field (β).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TelegraphNoise {
    pub coupling_intensity: f64,
    pub field_intensity: f64,
    pub frequency: f64,
    pub seed: u64,
    #[serde(default)]
    pub dwell: Dwell,
}

/// One constant stretch `[start, end)` of the noisy Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSegment {
    pub start: f64,
    pub end: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl TelegraphNoise {
    pub fn new(coupling_intensity: f64, field_intensity: f64, frequency: f64, seed: u64) -> Result<Self> {
        let noise = Self {
            coupling_intensity,
            field_intensity,
            frequency,
            seed,
            dwell: Dwell::Fixed,
        };
        noise.validate()?;
        Ok(noise)
    }

    pub fn with_dwell(mut self, dwell: Dwell) -> Self {
        self.dwell = dwell;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x.is_finite() && x >= 0.0;
        if !ok(self.coupling_intensity) || !ok(self.field_intensity) {
            return Err(EsuError::InvalidParameter("noise intensities must be finite and >= 0".into()));
        }
        if !(self.frequency.is_finite() && self.frequency > 0.0) {
            return Err(EsuError::InvalidParameter(format!(
                "noise frequency must be positive, got {}",
                self.frequency
            )));
        }
        Ok(())
    }

    pub fn is_silent(&self) -> bool {
        self.coupling_intensity == 0.0 && self.field_intensity == 0.0
    }

    /// Signal segments covering `[0, horizon]`; α and β are uniform in [−1, 1].
    pub fn segments(&self, horizon: f64) -> Vec<NoiseSegment> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut out = Vec::new();
        let mut start = 0.0;
        let mut k = 0u64;
        while start < horizon {
            let end = match self.dwell {
                // Boundaries at k/ν exactly, not accumulated.
                Dwell::Fixed => (k + 1) as f64 / self.frequency,
                Dwell::Exponential => {
                    let u: f64 = rng.random();
                    start - (1.0 - u).ln() / self.frequency
                }
            };
            let alpha = rng.random_range(-1.0..=1.0);
            let beta = rng.random_range(-1.0..=1.0);
            out.push(NoiseSegment { start, end, alpha, beta });
            start = end;
            k += 1;
        }
        out
    }
}

/// Recorded observables on the evolution grid.
///
/// `entanglement`, `energy` and `fluctuation` are empty when not requested.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub survival: Vec<f64>,
    pub entanglement: Vec<f64>,
    pub energy: Vec<f64>,
    pub fluctuation: Vec<f64>,
}

/// What to record along a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Recording {
    pub survival: SurvivalKind,
    pub measure: Option<Measure>,
    pub energy: bool,
}

impl Default for Recording {
    fn default() -> Self {
        Self {
            survival: SurvivalKind::Overlap,
            measure: Some(Measure::Entropy),
            energy: true,
        }
    }
}

impl Recording {
    /// Survival only, for Monte Carlo loops.
    pub fn survival_only(survival: SurvivalKind) -> Self {
        Self {
            survival,
            measure: None,
            energy: false,
        }
    }
}

/// Constant-coefficient stretch of the evolution: `H(coupling, field)` on
/// `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Stretch {
    end: f64,
    coupling: f64,
    field: f64,
}

fn time_grid(horizon: f64, dt: f64) -> Result<Vec<f64>> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(EsuError::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    if !(horizon.is_finite() && horizon >= dt) {
        return Err(EsuError::InvalidParameter(format!("horizon {horizon} shorter than dt {dt}")));
    }
    let steps = (horizon / dt).round() as usize;
    Ok((0..=steps).map(|i| i as f64 * dt).collect())
}

fn evolve_stretches(
    model: &Model,
    psi0: &StateVector,
    reference_field: f64,
    stretches: &[Stretch],
    times: &[f64],
    rec: &Recording,
) -> Result<Trajectory> {
    model.check_state(psi0)?;
    let mut traj = Trajectory {
        times: times.to_vec(),
        survival: Vec::with_capacity(times.len()),
        entanglement: Vec::new(),
        energy: Vec::new(),
        fluctuation: Vec::new(),
    };
    let basis = psi0.basis();
    let record = |psi: &DVector<Complex64>, traj: &mut Trajectory| -> Result<()> {
        let state = StateVector::from_parts_unchecked(basis, psi.clone());
        traj.survival.push(model.survival(psi0, &state, rec.survival)?.clamp(0.0, 1.0));
        if let Some(m) = rec.measure {
            traj.entanglement.push(model.entanglement(&state, m)?);
        }
        if rec.energy {
            let s = model.energy_stats(reference_field, &state)?;
            traj.energy.push(s.energy);
            traj.fluctuation.push(s.fluctuation);
        }
        Ok(())
    };

    let mut psi = psi0.amplitudes().clone();
    record(&psi, &mut traj)?;
    let mut now = 0.0;
    let mut next = 1;
    for (si, s) in stretches.iter().enumerate() {
        if next >= times.len() {
            break;
        }
        let last = si + 1 == stretches.len();
        // A single noiseless stretch reuses one memoized decomposition.
        let stepper = model.stepper(s.coupling, s.field, stretches.len() == 1);
        while next < times.len() && (last || times[next] <= s.end) {
            stepper.step(&mut psi, times[next] - now);
            now = times[next];
            record(&psi, &mut traj)?;
            next += 1;
        }
        if !last && now < s.end {
            stepper.step(&mut psi, s.end - now);
            now = s.end;
        }
    }
    Ok(traj)
}

/// Merges adjacent segments whose Hamiltonian coefficients coincide.
fn merge_stretches(raw: impl IntoIterator<Item = Stretch>) -> Vec<Stretch> {
    let mut out: Vec<Stretch> = Vec::new();
    for s in raw {
        match out.last_mut() {
            Some(prev) if prev.coupling == s.coupling && prev.field == s.field => prev.end = s.end,
            _ => out.push(s),
        }
    }
    out
}

/// Evolution under `H[Γ̃]` recorded on `0, dt, 2dt, ..`.
pub fn evolve_free(
    model: &Model,
    psi0: &StateVector,
    reference_field: f64,
    horizon: f64,
    dt: f64,
    rec: &Recording,
) -> Result<Trajectory> {
    let times = time_grid(horizon, dt)?;
    let stretch = Stretch {
        end: f64::INFINITY,
        coupling: 1.0,
        field: reference_field,
    };
    evolve_stretches(model, psi0, reference_field, &[stretch], &times, rec)
}

/// Evolution under `−(1/N)[1 + I_α α(t)] Jx² − Γ̃[1 + I_β β(t)] Jz` (and
/// the analogous scaling of the Ising terms). Propagation is exact inside
/// each noise segment; `dt` sets the recording grid.
pub fn evolve_noisy(
    model: &Model,
    psi0: &StateVector,
    reference_field: f64,
    noise: &TelegraphNoise,
    horizon: f64,
    dt: f64,
    rec: &Recording,
) -> Result<Trajectory> {
    noise.validate()?;
    let segment = 1.0 / noise.frequency;
    if dt > 0.5 * segment {
        return Err(EsuError::NoiseUnderResolved { dt, segment });
    }
    let times = time_grid(horizon, dt)?;
    let end = *times.last().expect("grid is non-empty");
    let stretches = merge_stretches(noise.segments(end).into_iter().map(|s| Stretch {
        end: s.end,
        coupling: 1.0 + noise.coupling_intensity * s.alpha,
        field: reference_field * (1.0 + noise.field_intensity * s.beta),
    }));
    evolve_stretches(model, psi0, reference_field, &stretches, &times, rec)
}

/// Both sides of `1 − |⟨ψ|e^{−iHdt}|ψ⟩|² ≈ ΔẼ² dt²`.
pub fn deviation_check(psi: &StateVector, h: &HermitianMatrix, dt: f64) -> Result<(f64, f64)> {
    let eig = eig_hermitian(h);
    deviation_check_with(&eig, h, psi, dt)
}

/// As [`deviation_check`] with a precomputed decomposition of `h`.
pub fn deviation_check_with(
    eig: &SpectralDecomposition,
    h: &HermitianMatrix,
    psi: &StateVector,
    dt: f64,
) -> Result<(f64, f64)> {
    let stats = energy_stats(h, psi)?;
    let c = eig.coefficients(psi.amplitudes());
    let p: Vec<f64> = c.iter().map(|z| z.norm_sqr()).collect();
    let e = eig.eigenvalues();
    // 1 − |Σ p_n e^{−iE_n dt}|² = Σ_{m,n} p_m p_n 2 sin²((E_m − E_n) dt / 2),
    // free of the cancellation in the direct form.
    let mut lhs = 0.0;
    for m in 0..p.len() {
        for n in (m + 1)..p.len() {
            let s = ((e[m] - e[n]) * dt * 0.5).sin();
            lhs += 4.0 * p[m] * p[n] * s * s;
        }
    }
    let rhs = stats.fluctuation * stats.fluctuation * dt * dt;
    Ok((lhs, rhs))
}

/// First crossing of a survival threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Lifetime {
    At(f64),
    ExceedsHorizon,
}

impl Lifetime {
    pub fn time(&self) -> Option<f64> {
        match self {
            Lifetime::At(t) => Some(*t),
            Lifetime::ExceedsHorizon => None,
        }
    }

    /// Orders never-crossed traces after every finite lifetime.
    pub fn sort_key(&self) -> f64 {
        self.time().unwrap_or(f64::INFINITY)
    }
}

/// First time `P < threshold`, interpolated linearly between grid points.
pub fn lifetime(times: &[f64], survival: &[f64], threshold: f64) -> Lifetime {
    assert!(threshold > 0.0 && threshold < 1.0, "threshold must lie in (0, 1)");
    assert_eq!(times.len(), survival.len());
    for i in 0..survival.len() {
        if survival[i] < threshold {
            if i == 0 {
                return Lifetime::At(times[0]);
            }
            let (p0, p1) = (survival[i - 1], survival[i]);
            let frac = (p0 - threshold) / (p0 - p1);
            return Lifetime::At(times[i - 1] + frac * (times[i] - times[i - 1]));
        }
    }
    Lifetime::ExceedsHorizon
}

/// Seed of Monte Carlo instance `index`; shared across frequencies.
pub fn instance_seed(seed: u64, index: usize) -> u64 {
    derive_seed(seed, NOISE_STREAM, index as u64)
}

/// Per-frequency Monte Carlo summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub frequency: f64,
    pub times: Vec<f64>,
    pub mean_survival: Vec<f64>,
    pub std_survival: Vec<f64>,
    /// Crossing of the mean trace.
    pub lifetime: Lifetime,
    pub instance_lifetimes: Vec<Lifetime>,
    #[serde(skip)]
    pub instance_traces: Vec<Vec<f64>>,
}

/// Sweep settings apart from the frequency list.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSettings {
    pub coupling_intensity: f64,
    pub field_intensity: f64,
    pub seed: u64,
    pub dwell: Dwell,
    pub instances: usize,
    pub horizon: f64,
    /// Recording step; each frequency uses `min(dt, 1/(2ν))`.
    pub dt: f64,
    pub threshold: f64,
    pub survival: SurvivalKind,
    pub keep_traces: bool,
}

/// Mean-trace lifetime per noise frequency over `instances` realizations.
pub fn frequency_sweep(
    model: &Model,
    psi0: &StateVector,
    reference_field: f64,
    frequencies: &[f64],
    settings: &SweepSettings,
) -> Result<Vec<SweepRow>> {
    if settings.instances == 0 {
        return Err(EsuError::InvalidParameter("instances must be >= 1".into()));
    }
    let rec = Recording::survival_only(settings.survival);
    let mut rows = Vec::with_capacity(frequencies.len());
    for &nu in frequencies {
        let dt = settings.dt.min(0.5 / nu);
        let mut traces = Vec::with_capacity(settings.instances);
        let mut times = Vec::new();
        for i in 0..settings.instances {
            let noise = TelegraphNoise::new(
                settings.coupling_intensity,
                settings.field_intensity,
                nu,
                instance_seed(settings.seed, i),
            )?
            .with_dwell(settings.dwell);
            let traj = evolve_noisy(model, psi0, reference_field, &noise, settings.horizon, dt, &rec)?;
            times = traj.times;
            traces.push(traj.survival);
        }
        let (mean, std) = mean_and_std(&traces);
        let instance_lifetimes = traces
            .iter()
            .map(|p| lifetime(&times, p, settings.threshold))
            .collect();
        rows.push(SweepRow {
            frequency: nu,
            lifetime: lifetime(&times, &mean, settings.threshold),
            times,
            mean_survival: mean,
            std_survival: std,
            instance_lifetimes,
            instance_traces: if settings.keep_traces { traces } else { Vec::new() },
        });
    }
    Ok(rows)
}

/// Frequency with the shortest mean-trace lifetime; `None` if no trace
/// crossed the threshold.
pub fn resonant_frequency(rows: &[SweepRow]) -> Option<f64> {
    rows.iter()
        .filter(|r| r.lifetime.time().is_some())
        .min_by(|a, b| a.lifetime.sort_key().total_cmp(&b.lifetime.sort_key()))
        .map(|r| r.frequency)
}

/// Pointwise mean and population standard deviation of equal-length traces.
pub fn mean_and_std(traces: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let n = traces.len() as f64;
    let len = traces.first().map_or(0, Vec::len);
    let mut mean = vec![0.0; len];
    let mut var = vec![0.0; len];
    for t in traces {
        for (m, x) in mean.iter_mut().zip(t) {
            *m += x / n;
        }
    }
    for t in traces {
        for ((v, x), m) in var.iter_mut().zip(t).zip(&mean) {
            *v += (x - m) * (x - m) / n;
        }
    }
    (mean, var.into_iter().map(f64::sqrt).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lmg::Parity;

    #[test]
    fn fixed_segments_on_exact_grid() {
        let noise = TelegraphNoise::new(0.2, 0.2, 7.8, 5).unwrap();
        let segs = noise.segments(2.0);
        assert_eq!(segs[0].start, 0.0);
        for (k, s) in segs.iter().enumerate() {
            assert_eq!(s.end, (k + 1) as f64 / 7.8);
            assert!(s.alpha.abs() <= 1.0 && s.beta.abs() <= 1.0);
        }
        assert!(segs.last().unwrap().end >= 2.0);
        assert_eq!(segs, noise.segments(2.0));
        assert_ne!(segs, noise.with_seed(6).segments(2.0));
    }

    #[test]
    fn exponential_segments_have_mean_dwell() {
        let noise = TelegraphNoise::new(0.1, 0.1, 2.0, 9).unwrap().with_dwell(Dwell::Exponential);
        let segs = noise.segments(5000.0);
        let mean = 5000.0 / segs.len() as f64;
        assert!((mean - 0.5).abs() < 0.03, "{mean}");
    }

    #[test]
    fn under_resolved_noise_rejected() {
        let model = Model::lmg(8, Parity::Even).unwrap();
        let psi = model.polarized_state().unwrap();
        let noise = TelegraphNoise::new(0.1, 0.1, 10.0, 0).unwrap();
        let r = evolve_noisy(&model, &psi, 1.0, &noise, 1.0, 0.06, &Recording::default());
        assert!(matches!(r, Err(EsuError::NoiseUnderResolved { .. })));
        assert!(TelegraphNoise::new(-0.1, 0.0, 1.0, 0).is_err());
        assert!(TelegraphNoise::new(0.1, 0.0, 0.0, 0).is_err());
    }

    #[test]
    fn silent_noise_matches_free_evolution_bitwise() {
        let model = Model::lmg(12, Parity::Even).unwrap();
        let psi = model.polarized_state().unwrap();
        let free = evolve_free(&model, &psi, 3.0, 5.0, 0.01, &Recording::default()).unwrap();
        let noise = TelegraphNoise::new(0.0, 0.0, 7.8, 1).unwrap();
        let noisy = evolve_noisy(&model, &psi, 3.0, &noise, 5.0, 0.01, &Recording::default()).unwrap();
        assert_eq!(free, noisy);
    }

    #[test]
    fn eigenstate_survives() {
        let model = Model::lmg(16, Parity::Even).unwrap();
        let psi = model.spectrum(10.0).eigenstate(model.basis_tag(), 3).unwrap();
        let traj = evolve_free(&model, &psi, 10.0, 20.0, 0.1, &Recording::default()).unwrap();
        assert!((traj.survival[0] - 1.0).abs() < 1e-12);
        assert!(traj.survival.iter().all(|p| (p - 1.0).abs() < 1e-9));
        assert_eq!(lifetime(&traj.times, &traj.survival, 0.8), Lifetime::ExceedsHorizon);
    }

    #[test]
    fn two_level_superposition_follows_rabi() {
        let model = Model::lmg(10, Parity::Even).unwrap();
        let eig = model.spectrum(2.0);
        let e = eig.eigenvalues();
        let gap = e[1] - e[0];
        let amps = (eig.eigenvectors().column(0) + eig.eigenvectors().column(1)).into_owned();
        let psi = StateVector::normalized(model.basis_tag(), amps).unwrap();
        let traj = evolve_free(&model, &psi, 2.0, 10.0, 0.05, &Recording::survival_only(SurvivalKind::Overlap)).unwrap();
        for (t, p) in traj.times.iter().zip(&traj.survival) {
            let expected = (gap * t / 2.0).cos().powi(2);
            assert!((p - expected).abs() < 1e-9, "t={t}: {p} vs {expected}");
        }
    }

    #[test]
    fn lifetime_interpolates_cosine() {
        let times: Vec<f64> = (0..=2000).map(|i| i as f64 * 1e-3).collect();
        let p: Vec<f64> = times.iter().map(|t| (t / 2.0).cos().powi(2)).collect();
        let t = lifetime(&times, &p, 0.8).time().unwrap();
        let exact = 2.0 * 0.8f64.sqrt().acos();
        assert!((t - exact).abs() < 1e-6, "{t} vs {exact}");
        assert!((exact - 0.9273).abs() < 1e-4);
        assert_eq!(lifetime(&[0.0, 1.0], &[1.0, 1.0], 0.8), Lifetime::ExceedsHorizon);
    }

    #[test]
    fn deviation_vanishes_for_eigenstate_and_zero_step() {
        let model = Model::lmg(8, Parity::Even).unwrap();
        let h = model.hamiltonian(10.0);
        let psi = model.spectrum(10.0).eigenstate(model.basis_tag(), 2).unwrap();
        let (l, r) = deviation_check(&psi, &h, 1e-2).unwrap();
        assert!(l.abs() < 1e-12 && r.abs() < 1e-12, "{l} {r}");
        let mixed = model.polarized_state().unwrap();
        assert_eq!(deviation_check(&mixed, &h, 0.0).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn sweep_without_noise_never_decays() {
        let model = Model::lmg(8, Parity::Even).unwrap();
        let psi = model.spectrum(10.0).eigenstate(model.basis_tag(), 1).unwrap();
        let settings = SweepSettings {
            coupling_intensity: 0.0,
            field_intensity: 0.0,
            seed: 1,
            dwell: Dwell::Fixed,
            instances: 2,
            horizon: 5.0,
            dt: 0.05,
            threshold: 0.8,
            survival: SurvivalKind::Overlap,
            keep_traces: false,
        };
        let rows = frequency_sweep(&model, &psi, 10.0, &[3.0], &settings).unwrap();
        assert_eq!(rows[0].lifetime, Lifetime::ExceedsHorizon);
        assert_eq!(resonant_frequency(&rows), None);
    }

    #[test]
    fn merging_joins_equal_coefficients() {
        let s = |end, c| Stretch { end, coupling: c, field: 1.0 };
        let merged = merge_stretches([s(1.0, 1.0), s(2.0, 1.0), s(3.0, 0.5), s(4.0, 1.0)]);
        assert_eq!(merged, vec![s(2.0, 1.0), s(3.0, 0.5), s(4.0, 1.0)]);
    }
}
