//! Rotating-frame Hamiltonians for the three switching models and their
//! Floquet Fourier blocks.
//!
//! Basis order is fixed as (|0⟩, |1⟩, |2⟩). The probe couples (0,1), the
//! control couples (1,2); the control carrier is always resonant, so only
//! the probe detuning appears on the diagonal. `γ₂₀ = 0` throughout: the
//! 0↔2 transition is forbidden.

use crate::drive::SquareWaveEnvelope;
use crate::{c, r, CMat, Real, Result, SimError};
use nalgebra::ComplexField;
use num_complex::Complex;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    TwoLevel,
    ThreeLevelCw,
    ThreeLevelSw,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ControlField<T> {
    /// No control field (two-level dynamics).
    Absent,
    /// Constant angular Rabi frequency.
    Continuous { rabi: T },
    /// Square-wave modulated Rabi frequency.
    SquareWave(SquareWaveEnvelope<T>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig<T> {
    detuning: T,
    probe: SquareWaveEnvelope<T>,
    control: ControlField<T>,
}

impl<T: Real> ModelConfig<T> {
    pub fn two_level(detuning: T, probe: SquareWaveEnvelope<T>) -> Self {
        Self { detuning, probe, control: ControlField::Absent }
    }

    pub fn three_level_cw(detuning: T, probe: SquareWaveEnvelope<T>, control_rabi: T) -> Result<Self> {
        if control_rabi < T::zero() {
            return Err(SimError::InvalidModel("control Rabi frequency must be nonnegative".into()));
        }
        Ok(Self { detuning, probe, control: ControlField::Continuous { rabi: control_rabi } })
    }

    /// The SW control must share the probe's period and phase; only the
    /// mismatch deformation may differ.
    pub fn three_level_sw(
        detuning: T,
        probe: SquareWaveEnvelope<T>,
        control: SquareWaveEnvelope<T>,
    ) -> Result<Self> {
        let tol = probe.period() * r(1e-12);
        if (control.period() - probe.period()).abs() > tol
            || (control.phase_offset() - probe.phase_offset()).abs() > tol
        {
            return Err(SimError::InvalidModel(
                "SW control must share the probe's period and phase offset".into(),
            ));
        }
        Ok(Self { detuning, probe, control: ControlField::SquareWave(control) })
    }

    pub fn kind(&self) -> ModelKind {
        match self.control {
            ControlField::Absent => ModelKind::TwoLevel,
            ControlField::Continuous { .. } => ModelKind::ThreeLevelCw,
            ControlField::SquareWave(_) => ModelKind::ThreeLevelSw,
        }
    }

    pub fn dim(&self) -> usize {
        match self.control {
            ControlField::Absent => 2,
            _ => 3,
        }
    }

    pub fn detuning(&self) -> T {
        self.detuning
    }

    pub fn probe(&self) -> &SquareWaveEnvelope<T> {
        &self.probe
    }

    pub fn control(&self) -> &ControlField<T> {
        &self.control
    }

    /// The square-wave control envelope, if this is the SW model.
    pub fn control_envelope(&self) -> Option<&SquareWaveEnvelope<T>> {
        match &self.control {
            ControlField::SquareWave(env) => Some(env),
            _ => None,
        }
    }

    pub fn period(&self) -> T {
        self.probe.period()
    }

    /// Angular Floquet frequency of the drive.
    pub fn omega(&self) -> T {
        self.probe.omega()
    }

    pub fn with_detuning(&self, detuning: T) -> Self {
        let mut cfg = self.clone();
        cfg.detuning = detuning;
        cfg
    }

    /// Same probe and detuning with the control removed (the OFF state).
    pub fn control_removed(&self) -> Self {
        Self { detuning: self.detuning, probe: self.probe, control: ControlField::Absent }
    }

    /// Time-domain rotating-frame Hamiltonian; Hermitian by construction.
    pub fn hamiltonian_at(&self, t: T) -> CMat<T> {
        let probe_amp = self.probe.value(t);
        match &self.control {
            ControlField::Absent => two_level_hamiltonian(self.detuning, probe_amp),
            ControlField::Continuous { rabi } => {
                three_level_hamiltonian(self.detuning, probe_amp, *rabi)
            }
            ControlField::SquareWave(env) => {
                three_level_hamiltonian(self.detuning, probe_amp, env.value(t))
            }
        }
    }

    /// Fourier blocks of the drive, truncated at `n_max` odd harmonics.
    ///
    /// The dc block `H₀` carries the half-amplitude of every square-wave
    /// envelope (and the full amplitude of a CW control); the odd blocks are
    /// purely imaginary symmetric with entries `-i Ω_n/4` so that
    /// `H₀ + Σ_m (H_m e^{-imωt} + H_m* e^{imωt})` reproduces the time-domain
    /// Hamiltonian.
    pub fn floquet_blocks(&self, n_max: usize) -> Result<FloquetBlocks<T>> {
        let probe_series = self.probe.fourier_coefficients(n_max)?;
        let (h0, control_series) = match &self.control {
            ControlField::Absent => (two_level_hamiltonian(self.detuning, probe_series.dc()), None),
            ControlField::Continuous { rabi } => {
                (three_level_hamiltonian(self.detuning, probe_series.dc(), *rabi), None)
            }
            ControlField::SquareWave(env) => {
                let series = env.fourier_coefficients(n_max)?;
                (three_level_hamiltonian(self.detuning, probe_series.dc(), series.dc()), Some(series))
            }
        };
        let dim = self.dim();
        let quarter = c::<T>(0.0, -0.25);
        let odd = (0..n_max)
            .map(|i| {
                let mut block = CMat::<T>::zeros(dim, dim);
                let p = quarter * Complex::from(probe_series.harmonics()[i].amplitude);
                block[(0, 1)] = p;
                block[(1, 0)] = p;
                if let Some(series) = &control_series {
                    let q = quarter * Complex::from(series.harmonics()[i].amplitude);
                    block[(1, 2)] = q;
                    block[(2, 1)] = q;
                }
                block
            })
            .collect();
        Ok(FloquetBlocks { h0, odd, omega: self.omega() })
    }

    /// Sorted, deduplicated envelope edge times within `[0, period)`.
    pub fn breakpoints(&self) -> Vec<T> {
        let tau = self.period();
        let mut points: Vec<T> = vec![T::zero()];
        points.extend(self.probe.edges());
        if let ControlField::SquareWave(env) = &self.control {
            points.extend(env.edges());
        }
        points.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let tol = tau * r(1e-12);
        let mut dedup: Vec<T> = Vec::with_capacity(points.len());
        for p in points {
            if dedup.last().map_or(true, |&last| p - last > tol) && tau - p > tol {
                dedup.push(p);
            }
        }
        dedup
    }
}

fn two_level_hamiltonian<T: Real>(detuning: T, probe_amp: T) -> CMat<T> {
    let half = r::<T>(0.5);
    let mut h = CMat::<T>::zeros(2, 2);
    h[(0, 0)] = Complex::from(-half * detuning);
    h[(1, 1)] = Complex::from(half * detuning);
    let coupling = Complex::from(-half * probe_amp);
    h[(0, 1)] = coupling;
    h[(1, 0)] = coupling;
    h
}

fn three_level_hamiltonian<T: Real>(detuning: T, probe_amp: T, control_amp: T) -> CMat<T> {
    let half = r::<T>(0.5);
    let mut h = CMat::<T>::zeros(3, 3);
    h[(0, 0)] = Complex::from(-half * detuning);
    h[(1, 1)] = Complex::from(half * detuning);
    h[(2, 2)] = Complex::from(half * detuning);
    let probe = Complex::from(-half * probe_amp);
    h[(0, 1)] = probe;
    h[(1, 0)] = probe;
    let control = Complex::from(-half * control_amp);
    h[(1, 2)] = control;
    h[(2, 1)] = control;
    h
}

/// Fourier blocks `H₀` and `H_{2n-1}` of a periodically driven Hamiltonian.
///
/// Even blocks vanish identically and are not stored; the negative blocks
/// follow from `H_{-m} = H_m*` (elementwise conjugate), which for these
/// purely imaginary symmetric blocks equals `-H_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct FloquetBlocks<T> {
    h0: CMat<T>,
    odd: Vec<CMat<T>>,
    omega: T,
}

impl<T: Real> FloquetBlocks<T> {
    pub fn h0(&self) -> &CMat<T> {
        &self.h0
    }

    /// `odd()[n-1]` is the block at harmonic `m = 2n - 1`.
    pub fn odd(&self) -> &[CMat<T>] {
        &self.odd
    }

    pub fn n_max(&self) -> usize {
        self.odd.len()
    }

    pub fn omega(&self) -> T {
        self.omega
    }

    pub fn dim(&self) -> usize {
        self.h0.nrows()
    }

    /// `H₀ + Σ_m (H_m e^{-imωt} + H_m* e^{+imωt})` over the stored harmonics.
    pub fn reconstruct(&self, t: T) -> CMat<T> {
        let mut h = self.h0.clone();
        for (i, block) in self.odd.iter().enumerate() {
            let m = r::<T>((2 * i + 1) as f64);
            let phase = (-Complex::<T>::i() * Complex::from(m * self.omega * t)).exp();
            h.zip_apply(block, |acc, b| {
                *acc += b * phase + b.conj() * phase.conj();
            });
        }
        h
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::max_abs;
    use approx::assert_relative_eq;
    use std::f64::consts::TAU;

    fn probe() -> SquareWaveEnvelope<f64> {
        SquareWaveEnvelope::symmetric(TAU * 0.5, 0.01).unwrap()
    }

    #[test]
    fn two_level_hamiltonian_windows() {
        let cfg = ModelConfig::two_level(0.0, probe());
        let h_on = cfg.hamiltonian_at(0.0025);
        assert_eq!(h_on[(0, 0)], C64::from(0.0));
        assert_relative_eq!(h_on[(0, 1)].re, -TAU * 0.25, max_relative = 1e-14);
        let cfg_det = ModelConfig::two_level(TAU, probe());
        let h_off = cfg_det.hamiltonian_at(0.0075);
        assert_eq!(h_off[(0, 1)], C64::from(0.0));
        assert_relative_eq!(h_off[(0, 0)].re, -TAU / 2.0, max_relative = 1e-14);
        assert_relative_eq!(h_off[(1, 1)].re, TAU / 2.0, max_relative = 1e-14);
    }

    use crate::C64;

    #[test]
    fn cw_three_level_off_window_keeps_control_coupling() {
        let cfg = ModelConfig::three_level_cw(0.0, probe(), TAU * 50.0).unwrap();
        let h = cfg.hamiltonian_at(0.0075);
        assert_eq!(h[(0, 1)], C64::from(0.0));
        assert_relative_eq!(h[(1, 2)].re, -TAU * 25.0, max_relative = 1e-14);
        assert_relative_eq!(h[(2, 1)].re, -TAU * 25.0, max_relative = 1e-14);
        assert_eq!(h[(0, 2)], C64::from(0.0));
    }

    #[test]
    fn hamiltonian_always_hermitian() {
        let control = SquareWaveEnvelope::symmetric(TAU * 10.0, 0.01).unwrap();
        let cfg = ModelConfig::three_level_sw(TAU * 0.3, probe(), control).unwrap();
        for i in 0..40 {
            let h = cfg.hamiltonian_at(0.01 * i as f64 / 40.0);
            assert_eq!(max_abs(&(h.clone() - h.adjoint())), 0.0);
        }
    }

    #[test]
    fn h0_carries_half_the_square_wave_amplitude() {
        let cfg = ModelConfig::two_level(0.0, probe());
        let blocks = cfg.floquet_blocks(4).unwrap();
        assert_relative_eq!(blocks.h0()[(0, 1)].re, -TAU * 0.125, max_relative = 1e-14);

        let sw = ModelConfig::three_level_sw(
            0.0,
            probe(),
            SquareWaveEnvelope::symmetric(TAU * 10.0, 0.01).unwrap(),
        )
        .unwrap();
        let blocks = sw.floquet_blocks(4).unwrap();
        assert_relative_eq!(blocks.h0()[(1, 2)].re, -TAU * 2.5, max_relative = 1e-14);

        let cw = ModelConfig::three_level_cw(0.0, probe(), TAU * 50.0).unwrap();
        let blocks = cw.floquet_blocks(4).unwrap();
        assert_relative_eq!(blocks.h0()[(1, 2)].re, -TAU * 25.0, max_relative = 1e-14);
    }

    #[test]
    fn first_odd_block_entries() {
        let cfg = ModelConfig::two_level(0.0, probe());
        let blocks = cfg.floquet_blocks(1).unwrap();
        let b = &blocks.odd()[0];
        // |entry| = Ω_p1/4 with Ω_p1/(2π) = 1/π; purely imaginary symmetric
        let expected = TAU / std::f64::consts::PI / 4.0;
        assert_relative_eq!(-b[(0, 1)].im, expected, max_relative = 1e-14);
        assert_eq!(b[(0, 1)].re, 0.0);
        assert_eq!(b[(0, 1)], b[(1, 0)]);
    }

    #[test]
    fn blocks_reject_deformed_envelopes() {
        let deformed = probe().with_mismatch(0.0001).unwrap();
        let cfg = ModelConfig::two_level(0.0, deformed);
        assert!(cfg.floquet_blocks(4).is_err());
    }

    #[test]
    fn fourier_reconstruction_matches_time_domain() {
        let control = SquareWaveEnvelope::symmetric(TAU * 10.0, 0.01).unwrap();
        for cfg in [
            ModelConfig::two_level(0.0, probe()),
            ModelConfig::three_level_cw(0.0, probe(), TAU * 50.0).unwrap(),
            ModelConfig::three_level_sw(0.0, probe(), control).unwrap(),
        ] {
            let blocks = cfg.floquet_blocks(500).unwrap();
            let t = 0.0025; // interior of the on-window
            let diff = blocks.reconstruct(t) - cfg.hamiltonian_at(t);
            let scale = max_abs(&cfg.hamiltonian_at(t));
            assert!(max_abs(&diff) <= 1e-3 * scale, "deviation {}", max_abs(&diff) / scale);
        }
    }

    #[test]
    fn breakpoints_merge_shared_edges() {
        let cfg = ModelConfig::three_level_sw(
            0.0,
            probe(),
            SquareWaveEnvelope::symmetric(TAU * 10.0, 0.01).unwrap(),
        )
        .unwrap();
        assert_eq!(cfg.breakpoints().len(), 2);

        let deformed = ModelConfig::three_level_sw(
            0.0,
            probe(),
            SquareWaveEnvelope::symmetric(TAU * 10.0, 0.01)
                .unwrap()
                .with_mismatch(0.0001)
                .unwrap(),
        )
        .unwrap();
        // probe edges at {0, τ/2}, control edges at {τ-α, τ/2+α}
        assert_eq!(deformed.breakpoints().len(), 4);
    }
}
