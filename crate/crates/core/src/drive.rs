//! Square-wave amplitude envelopes and their Fourier decomposition.
//!
//! An envelope is two-valued (`peak` inside the on-window, `0` outside) and
//! periodic. The on-window is left-closed, right-open so that integrators
//! sampling exactly at an edge get a deterministic value. The signed
//! mismatch `alpha` deforms the on-window symmetrically, each edge moving
//! by `alpha/2`: `alpha > 0` extends it, `alpha < 0` shrinks it, and `|alpha|`
//! is the nonoverlap time against the undeformed window.

use crate::{r, Real, Result, SimError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquareWaveEnvelope<T> {
    peak: T,
    period: T,
    duty: T,
    phase_offset: T,
    mismatch: T,
}

impl<T: Real> SquareWaveEnvelope<T> {
    /// `peak` is angular; `period`, `phase_offset` and `mismatch` are times;
    /// `duty` is the on-fraction in `(0, 1]`.
    pub fn new(peak: T, period: T, duty: T, phase_offset: T, mismatch: T) -> Result<Self> {
        if !(period > T::zero()) {
            return Err(SimError::InvalidEnvelope("period must be positive".into()));
        }
        if !(duty > T::zero() && duty <= T::one()) {
            return Err(SimError::InvalidEnvelope("duty must lie in (0, 1]".into()));
        }
        if peak < T::zero() {
            return Err(SimError::InvalidEnvelope("peak must be nonnegative".into()));
        }
        if mismatch.abs() >= duty * period {
            return Err(SimError::InvalidEnvelope(
                "mismatch must satisfy |alpha| < duty*period".into(),
            ));
        }
        if duty * period + mismatch > period {
            return Err(SimError::InvalidEnvelope(
                "on-window must not exceed the period".into(),
            ));
        }
        Ok(Self { peak, period, duty, phase_offset, mismatch })
    }

    /// 50%-duty wave starting its on-window at `t = 0`, no mismatch.
    pub fn symmetric(peak: T, period: T) -> Result<Self> {
        Self::new(peak, period, r(0.5), T::zero(), T::zero())
    }

    pub fn peak(&self) -> T {
        self.peak
    }

    pub fn period(&self) -> T {
        self.period
    }

    pub fn duty(&self) -> T {
        self.duty
    }

    pub fn phase_offset(&self) -> T {
        self.phase_offset
    }

    pub fn mismatch(&self) -> T {
        self.mismatch
    }

    /// Angular Floquet frequency `2π / period`.
    pub fn omega(&self) -> T {
        T::two_pi() / self.period
    }

    pub fn with_mismatch(&self, mismatch: T) -> Result<Self> {
        Self::new(self.peak, self.period, self.duty, self.phase_offset, mismatch)
    }

    pub fn with_peak(&self, peak: T) -> Result<Self> {
        Self::new(peak, self.period, self.duty, self.phase_offset, self.mismatch)
    }

    /// Envelope value at `t`: exactly `peak` inside the on-window
    /// `[-alpha/2, duty*period + alpha/2)` (relative to `phase_offset`,
    /// wrapped onto one period), exactly `0` outside.
    pub fn value(&self, t: T) -> T {
        let tau = self.period;
        let half = self.mismatch / r(2.0);
        // shifted = (t - phase_offset + alpha/2) mod tau; the window then
        // becomes [0, duty*tau + alpha) which needs no wrap handling.
        let x = t - self.phase_offset + half;
        let mut shifted = x - tau * (x / tau).floor();
        if shifted >= tau {
            shifted -= tau; // guards against floor roundoff at the seam
        }
        if shifted < self.duty * tau + self.mismatch {
            self.peak
        } else {
            T::zero()
        }
    }

    /// Edge times of the on-window inside `[0, period)`, unsorted.
    pub fn edges(&self) -> [T; 2] {
        let tau = self.period;
        let wrap = |x: T| {
            let mut u = x - tau * (x / tau).floor();
            if u >= tau {
                u -= tau;
            }
            u
        };
        let half = self.mismatch / r(2.0);
        [
            wrap(self.phase_offset - half),
            wrap(self.phase_offset + self.duty * tau + half),
        ]
    }

    /// Truncated Fourier series of the undeformed 50%-duty wave.
    pub fn fourier_coefficients(&self, n_terms: usize) -> Result<FourierSeries<T>> {
        let eps = r::<T>(1e-9);
        let deformed = (self.duty - r(0.5)).abs() > eps
            || self.mismatch.abs() > T::zero()
            || self.phase_offset.abs() > T::zero();
        if deformed {
            return Err(SimError::SeriesUndefined);
        }
        if n_terms == 0 {
            return Err(SimError::InvalidEnvelope("n_terms must be at least 1".into()));
        }
        let omega = self.omega();
        let harmonics = (1..=n_terms)
            .map(|n| {
                let odd = r::<T>((2 * n - 1) as f64);
                Harmonic {
                    frequency: odd * omega,
                    amplitude: r::<T>(2.0) * self.peak / (odd * T::pi()),
                }
            })
            .collect();
        Ok(FourierSeries { dc: self.peak / r(2.0), harmonics })
    }
}

/// One `c_n sin(ω_n t)` term; both fields are angular.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Harmonic<T> {
    pub frequency: T,
    pub amplitude: T,
}

/// `dc + Σ c_n sin(ω_n t)` truncated at a finite number of odd harmonics.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierSeries<T> {
    dc: T,
    harmonics: Vec<Harmonic<T>>,
}

impl<T: Real> FourierSeries<T> {
    pub fn dc(&self) -> T {
        self.dc
    }

    pub fn harmonics(&self) -> &[Harmonic<T>] {
        &self.harmonics
    }

    pub fn n_terms(&self) -> usize {
        self.harmonics.len()
    }

    pub fn partial_sum(&self, t: T) -> T {
        let mut acc = self.dc;
        for h in &self.harmonics {
            acc += h.amplitude * (h.frequency * t).sin();
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::TAU;

    fn reference_probe() -> SquareWaveEnvelope<f64> {
        SquareWaveEnvelope::symmetric(TAU * 0.5, 0.01).unwrap()
    }

    #[test]
    fn value_inside_windows() {
        let env = reference_probe();
        assert_eq!(env.value(0.0025), TAU * 0.5);
        assert_eq!(env.value(0.0075), 0.0);
        // left-closed, right-open edges
        assert_eq!(env.value(0.0), TAU * 0.5);
        assert_eq!(env.value(0.005), 0.0);
    }

    #[test]
    fn mismatch_extends_window_past_half_period() {
        let env = reference_probe().with_mismatch(0.0001).unwrap();
        assert_eq!(env.value(0.00504), TAU * 0.5);
        assert_eq!(env.value(0.00506), 0.0);
        assert_eq!(env.value(-0.00004), TAU * 0.5);
        let shrunk = reference_probe().with_mismatch(-0.0001).unwrap();
        assert_eq!(shrunk.value(0.00004), 0.0);
        assert_eq!(shrunk.value(0.00006), TAU * 0.5);
        assert_eq!(shrunk.value(0.00494), TAU * 0.5);
        assert_eq!(shrunk.value(0.00496), 0.0);
    }

    #[test]
    fn invalid_envelopes_rejected() {
        assert!(SquareWaveEnvelope::new(1.0, 0.0, 0.5, 0.0, 0.0).is_err());
        assert!(SquareWaveEnvelope::new(1.0, 0.01, 0.0, 0.0, 0.0).is_err());
        assert!(SquareWaveEnvelope::new(1.0, 0.01, 0.5, 0.0, 0.0051).is_err());
        assert!(SquareWaveEnvelope::new(1.0, 0.01, 1.0, 0.0, 0.001).is_err());
    }

    #[test]
    fn fourier_coefficients_match_odd_harmonic_law() {
        let series = reference_probe().fourier_coefficients(2).unwrap();
        assert_relative_eq!(series.dc() / TAU, 0.25, max_relative = 1e-14);
        let h = series.harmonics();
        assert_relative_eq!(h[0].amplitude / TAU, 1.0 / std::f64::consts::PI, max_relative = 1e-14);
        assert_relative_eq!(h[0].frequency / TAU, 100.0, max_relative = 1e-14);
        assert_relative_eq!(h[1].amplitude, h[0].amplitude / 3.0, max_relative = 1e-14);
        assert_relative_eq!(h[1].frequency / TAU, 300.0, max_relative = 1e-14);
        assert!(h[0].amplitude > h[1].amplitude && h[1].amplitude > 0.0);
    }

    #[test]
    fn fourier_zero_peak() {
        let env = SquareWaveEnvelope::symmetric(0.0f64, 0.01).unwrap();
        let series = env.fourier_coefficients(5).unwrap();
        assert_eq!(series.dc(), 0.0);
        assert!(series.harmonics().iter().all(|h| h.amplitude == 0.0));
    }

    #[test]
    fn fourier_rejects_deformed_envelope() {
        let env = reference_probe().with_mismatch(0.0001).unwrap();
        assert!(matches!(env.fourier_coefficients(5), Err(SimError::SeriesUndefined)));
        let env = SquareWaveEnvelope::new(1.0, 0.01, 0.3, 0.0, 0.0).unwrap();
        assert!(matches!(env.fourier_coefficients(5), Err(SimError::SeriesUndefined)));
    }

    #[test]
    fn partial_sum_at_jump_gives_midpoint() {
        let series = reference_probe().fourier_coefficients(100).unwrap();
        assert_relative_eq!(series.partial_sum(0.0), TAU * 0.25, max_relative = 1e-14);
    }

    #[test]
    fn partial_sum_converges_at_window_interiors() {
        let env = reference_probe();
        let series = env.fourier_coefficients(500).unwrap();
        let peak = TAU * 0.5;
        let t_on = 0.0025;
        let t_off = 0.0075;
        assert!((series.partial_sum(t_on) - peak).abs() / peak < 1e-3);
        assert!((series.partial_sum(t_off)).abs() < peak * 1e-3);
        // deviation at tau/4 shrinks monotonically with the truncation order
        let devs: Vec<f64> = [10, 100, 500]
            .iter()
            .map(|&n| (env.fourier_coefficients(n).unwrap().partial_sum(t_on) - peak).abs())
            .collect();
        assert!(devs[0] > devs[1] && devs[1] > devs[2]);
    }

    #[test]
    fn odd_square_series_sums_to_pi_sq_over_8() {
        // classical series used by the micromotion amplitude checks
        let sum: f64 = (1..=500).map(|n| 1.0 / ((2 * n - 1) as f64).powi(2)).sum();
        assert!((sum - std::f64::consts::PI.powi(2) / 8.0).abs() < 5e-4);
    }

    proptest! {
        #[test]
        fn value_is_periodic_and_two_valued(
            t in -0.05f64..0.05,
            alpha in -0.0024f64..0.0024,
            phase in -0.01f64..0.01,
        ) {
            let env = SquareWaveEnvelope::new(TAU * 0.5, 0.01, 0.5, phase, alpha).unwrap();
            let v = env.value(t);
            prop_assert!(v == 0.0 || v == TAU * 0.5);
            prop_assert_eq!(v, env.value(t + 0.01));
            prop_assert_eq!(v, env.value(t - 0.03));
        }

        #[test]
        fn mean_over_period_matches_window_fraction(alpha in -0.002f64..0.002) {
            let env = SquareWaveEnvelope::new(1.0, 0.01, 0.5, 0.0, alpha).unwrap();
            let n = 100_000usize;
            let mean: f64 = (0..n)
                .map(|i| env.value(0.01 * (i as f64 + 0.5) / n as f64))
                .sum::<f64>() / n as f64;
            let expect = 0.5 + alpha / 0.01;
            prop_assert!((mean - expect).abs() < 1e-4);
        }
    }
}
