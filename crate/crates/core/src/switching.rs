//! Switching figures of merit built on top of the NESS machinery:
//! reflection coefficients, OFF/ON power ratios, switching-event
//! transients, control-strength sweeps, pulse-mismatch robustness and the
//! absorption spectrum.

use crate::lindblad::{
    evolve, fingerprint, ness_cycle, static_steady_state, DensityMatrix, DissipatorSpec,
    NessCycle, Trajectory,
};
use crate::models::ModelConfig;
use crate::{r, Real, Result, SimError};
use num_complex::Complex;

/// Input-output relation of the transmission-line device:
/// `r = η (iγ₁₀/Ω_p) ρ₁₀`, `t' = 1 - r`, reflected power `R = |r|²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectionModel<T> {
    pub eta: T,
    pub g10: T,
    pub omega_p: T,
}

impl<T: Real> ReflectionModel<T> {
    pub fn new(eta: T, g10: T, omega_p: T) -> Self {
        Self { eta, g10, omega_p }
    }

    pub fn reflection(&self, rho10: Complex<T>) -> Complex<T> {
        Complex::<T>::i() * rho10 * Complex::from(self.eta * self.g10 / self.omega_p)
    }

    pub fn transmission(&self, rho10: Complex<T>) -> Complex<T> {
        Complex::from(T::one()) - self.reflection(rho10)
    }

    pub fn reflected_power(&self, rho10: Complex<T>) -> T {
        let rc = self.reflection(rho10);
        rc.norm_sqr()
    }
}

/// Figures of merit of one OFF/ON configuration pair. Means and standard
/// deviations describe `Im ρ₁₀` over one NESS period of the ON state; the
/// powers `R̄` are period means of `[Im ρ₁₀]²`, whose device prefactor
/// cancels in `ratio_db`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchingMetrics<T> {
    pub mean_im_rho10: T,
    pub std_im_rho10: T,
    pub r_off: T,
    pub r_on: T,
    pub ratio_db: T,
    pub fingerprint: u64,
}

/// Convergence and sampling parameters for NESS computations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NessSolve<T> {
    pub samples_per_period: usize,
    pub tol: T,
    pub max_periods: usize,
}

impl<T: Real> Default for NessSolve<T> {
    fn default() -> Self {
        Self { samples_per_period: 1000, tol: r(1e-8), max_periods: 100_000 }
    }
}

impl<T: Real> NessSolve<T> {
    pub fn solve(&self, cfg: &ModelConfig<T>, diss: &DissipatorSpec<T>) -> Result<NessCycle<T>> {
        ness_cycle(cfg, diss, self.samples_per_period, self.tol, self.max_periods)
    }
}

/// Arithmetic mean and population standard deviation of uniform samples.
pub fn ness_statistics<T: Real>(samples: &[T]) -> Result<(T, T)> {
    if samples.is_empty() {
        return Err(SimError::EmptySamples);
    }
    let n = r::<T>(samples.len() as f64);
    let mean = samples.iter().fold(T::zero(), |a, &b| a + b) / n;
    let var = samples.iter().fold(T::zero(), |a, &b| a + (b - mean) * (b - mean)) / n;
    Ok((mean, var.sqrt()))
}

fn mean_power<T: Real>(samples: &[T]) -> T {
    let n = r::<T>(samples.len() as f64);
    samples.iter().fold(T::zero(), |a, &b| a + b * b) / n
}

/// Time-averaged reflected-power ratio of the OFF and ON steady states, in
/// dB, together with the ON-state `Im ρ₁₀` statistics.
pub fn off_on_ratio<T: Real>(
    off: &ModelConfig<T>,
    on: &ModelConfig<T>,
    diss: &DissipatorSpec<T>,
    solve: &NessSolve<T>,
) -> Result<SwitchingMetrics<T>> {
    let off_cycle = solve.solve(off, diss)?;
    let on_cycle = solve.solve(on, diss)?;
    let off_im = off_cycle.im_rho10();
    let on_im = on_cycle.im_rho10();
    let (mean, std) = ness_statistics(&on_im)?;
    let r_off = mean_power(&off_im);
    let r_on = mean_power(&on_im);
    let ten = r::<T>(10.0);
    Ok(SwitchingMetrics {
        mean_im_rho10: mean,
        std_im_rho10: std,
        r_off,
        r_on,
        ratio_db: ten * (r_off / r_on).log10(),
        fingerprint: fingerprint(on, diss),
    })
}

/// Time-domain switching event: control off until `toggle_time` (a period
/// boundary), then on until `t_end`. Returns a single stitched trajectory.
pub fn switching_event<T: Real>(
    cfg: &ModelConfig<T>,
    diss: &DissipatorSpec<T>,
    toggle_time: T,
    t_end: T,
    dt: T,
    sample_stride: usize,
) -> Result<Trajectory<T>> {
    let tau = cfg.period();
    let periods = toggle_time / tau;
    if (periods - periods.round()).abs() > r(1e-9) {
        return Err(SimError::InvalidStep("toggle time must be a period boundary".into()));
    }
    if t_end < toggle_time {
        return Err(SimError::InvalidStep("t_end must not precede the toggle".into()));
    }
    let off_cfg = cfg.control_removed();
    let ground = DensityMatrix::ground_state(off_cfg.dim());
    let mut traj = evolve(&off_cfg, diss, &ground, toggle_time, dt, sample_stride)?;

    // re-embed the off-phase states into the full space
    let dim = cfg.dim();
    let embed = |state: &DensityMatrix<T>| {
        let small = state.matrix();
        let mut m = crate::CMat::<T>::zeros(dim, dim);
        for i in 0..small.nrows() {
            for j in 0..small.ncols() {
                m[(i, j)] = small[(i, j)];
            }
        }
        DensityMatrix::new_unchecked(m)
    };
    for state in traj.states.iter_mut() {
        *state = embed(state);
    }
    let start_on = traj.last_state().clone();
    let on_part = evolve(cfg, diss, &start_on, t_end - toggle_time, dt, sample_stride)?;
    for (&t, state) in on_part.times.iter().zip(&on_part.states).skip(1) {
        traj.times.push(toggle_time + t);
        traj.states.push(state.clone());
    }
    if on_part.max_trace_defect > traj.max_trace_defect {
        traj.max_trace_defect = on_part.max_trace_defect;
    }
    traj.fingerprint = fingerprint(cfg, diss);
    Ok(traj)
}

/// One row of a robustness scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustnessPoint<T> {
    pub mismatch: T,
    pub control_peak: T,
    pub metrics: SwitchingMetrics<T>,
}

/// OFF/ON ratios of the square-wave-controlled switch for every
/// (mismatch, control peak) combination. The base configuration supplies
/// the probe and the control envelope shape; its control peak is replaced
/// by each entry of `control_peaks` (angular) and its mismatch by each
/// entry of `mismatches`.
pub fn robustness_scan<T: Real>(
    cfg: &ModelConfig<T>,
    diss: &DissipatorSpec<T>,
    mismatches: &[T],
    control_peaks: &[T],
    solve: &NessSolve<T>,
) -> Result<Vec<RobustnessPoint<T>>> {
    let base_env = cfg
        .control_envelope()
        .ok_or_else(|| SimError::InvalidModel("robustness scan needs a square-wave control".into()))?;
    let mut table = Vec::with_capacity(mismatches.len() * control_peaks.len());
    for &alpha in mismatches {
        for &peak in control_peaks {
            let env = base_env.with_peak(peak)?.with_mismatch(alpha)?;
            let on = ModelConfig::three_level_sw(cfg.detuning(), *cfg.probe(), env)?;
            let off = on.control_removed();
            let metrics = off_on_ratio(&off, &on, diss, solve)?;
            table.push(RobustnessPoint { mismatch: alpha, control_peak: peak, metrics });
        }
    }
    Ok(table)
}

/// Steady absorption `Im ρ̃₁₀` of the time-averaged model as a function of
/// detuning. Each point is a static linear solve on the rebuilt `H₀`.
pub fn absorption_spectrum<T: Real>(
    cfg: &ModelConfig<T>,
    diss: &DissipatorSpec<T>,
    detunings: &[T],
) -> Result<Vec<(T, T)>> {
    let mut out = Vec::with_capacity(detunings.len());
    for &delta in detunings {
        let h0 = cfg.with_detuning(delta).floquet_blocks(1)?.h0().clone();
        let rho = static_steady_state(&h0, diss)?;
        out.push((delta, rho.rho10().im));
    }
    Ok(out)
}
