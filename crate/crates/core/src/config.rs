//! Run-configuration schema: one JSON file describes one batch run.
//!
//! All frequencies and rates in the file are cyclic (the `x/(2π)` numbers);
//! they are converted to angular values when the engine types are built.

use crate::drive::SquareWaveEnvelope;
use crate::lindblad::DissipatorSpec;
use crate::models::ModelConfig;
use crate::switching::NessSolve;
use serde::{Deserialize, Serialize};

/// Schema or semantic problem in a run configuration; messages name the
/// offending key.
#[derive(Debug, thiserror::Error)]
#[error("invalid config: {0}")]
pub struct ConfigError(pub String);

fn d_omega_p() -> f64 {
    0.5
}
fn d_tau() -> f64 {
    0.01
}
fn d_duty() -> f64 {
    0.5
}
fn d_dt() -> f64 {
    1e-5
}
fn d_t_max() -> f64 {
    10.0
}
fn d_ness_tol() -> f64 {
    1e-8
}
fn d_fourier_terms() -> usize {
    500
}
fn d_stride() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKindCfg {
    TwoLevel,
    ThreeLevelCw,
    ThreeLevelSw,
}

impl Default for ModelKindCfg {
    fn default() -> Self {
        Self::TwoLevel
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    #[serde(default)]
    pub kind: ModelKindCfg,
    /// Probe detuning, cyclic.
    #[serde(default)]
    pub delta: f64,
    /// Probe peak Rabi frequency, cyclic.
    #[serde(default = "d_omega_p")]
    pub omega_p: f64,
    /// Control peak Rabi frequency, cyclic; required for three-level kinds.
    #[serde(default)]
    pub omega_c: Option<f64>,
    /// Drive period (dimensionless time).
    #[serde(default = "d_tau")]
    pub tau: f64,
    /// On-fraction of the square-wave envelopes.
    #[serde(default = "d_duty")]
    pub duty: f64,
    /// Control-envelope mismatch time (SW control only).
    #[serde(default)]
    pub alpha: f64,
}

impl Default for ModelBlock {
    fn default() -> Self {
        Self {
            kind: ModelKindCfg::TwoLevel,
            delta: 0.0,
            omega_p: d_omega_p(),
            omega_c: None,
            tau: d_tau(),
            duty: d_duty(),
            alpha: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RatePreset {
    /// Electromagnetically-induced-transparency rates:
    /// `g21 = 0.1`, `g22 = 0.01` (cyclic).
    Eit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RatesBlock {
    #[serde(default)]
    pub preset: Option<RatePreset>,
    #[serde(default)]
    pub g10: Option<f64>,
    #[serde(default)]
    pub g11: Option<f64>,
    #[serde(default)]
    pub g21: Option<f64>,
    #[serde(default)]
    pub g22: Option<f64>,
}

impl RatesBlock {
    /// Cyclic rates after applying defaults, preset, then explicit values.
    pub fn resolved(&self) -> (f64, f64, f64, f64) {
        let (mut g21, mut g22) = (1.2, 0.2);
        if self.preset == Some(RatePreset::Eit) {
            g21 = 0.1;
            g22 = 0.01;
        }
        (
            self.g10.unwrap_or(1.0),
            self.g11.unwrap_or(0.2),
            self.g21.unwrap_or(g21),
            self.g22.unwrap_or(g22),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimBlock {
    #[serde(default = "d_dt")]
    pub dt: f64,
    #[serde(default = "d_t_max")]
    pub t_max: f64,
    #[serde(default = "d_ness_tol")]
    pub ness_tol: f64,
    #[serde(default = "d_fourier_terms")]
    pub fourier_terms: usize,
    #[serde(default = "d_stride")]
    pub sample_stride: usize,
}

impl Default for SimBlock {
    fn default() -> Self {
        Self {
            dt: d_dt(),
            t_max: d_t_max(),
            ness_tol: d_ness_tol(),
            fourier_terms: d_fourier_terms(),
            sample_stride: d_stride(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlMode {
    Cw,
    Sw,
}

impl ControlMode {
    pub fn label(&self) -> &'static str {
        match self {
            ControlMode::Cw => "cw",
            ControlMode::Sw => "sw",
        }
    }
}

fn d_modes() -> Vec<ControlMode> {
    vec![ControlMode::Cw, ControlMode::Sw]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum CommandBlock {
    /// Time evolution from the ground state over `[0, t_max]`.
    Evolve,
    /// One NESS period on a uniform grid.
    Ness,
    /// Numeric NESS period next to the leading-order analytic NESS.
    AnalyticCompare,
    /// OFF/ON metrics over a control-strength grid (cyclic, inclusive).
    Sweep {
        omega_c_start: f64,
        omega_c_stop: f64,
        omega_c_step: f64,
        #[serde(default = "d_modes")]
        modes: Vec<ControlMode>,
    },
    /// Control off until `toggle_time`, then on until `t_max`.
    SwitchEvent { toggle_time: f64 },
    /// OFF/ON metrics for every (mismatch, control strength) pair.
    Robustness { alphas: Vec<f64>, omega_c_values: Vec<f64> },
    /// Steady absorption over a detuning grid (cyclic, inclusive).
    Spectrum { delta_start: f64, delta_stop: f64, delta_step: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub model: ModelBlock,
    #[serde(default)]
    pub rates: RatesBlock,
    #[serde(default)]
    pub sim: SimBlock,
    pub command: CommandBlock,
}

impl RunConfig {
    /// The same configuration with every optional field pinned to its
    /// resolved value, so re-running the echoed config reproduces the run.
    pub fn resolved(&self) -> Self {
        let mut out = self.clone();
        let (g10, g11, g21, g22) = self.rates.resolved();
        out.rates = RatesBlock {
            preset: self.rates.preset,
            g10: Some(g10),
            g11: Some(g11),
            g21: Some(g21),
            g22: Some(g22),
        };
        out
    }

    pub fn probe_envelope(&self) -> Result<SquareWaveEnvelope<f64>, ConfigError> {
        SquareWaveEnvelope::new(
            crate::angular(self.model.omega_p),
            self.model.tau,
            self.model.duty,
            0.0,
            0.0,
        )
        .map_err(|e| ConfigError(format!("model.omega_p/tau/duty: {e}")))
    }

    fn control_peak(&self) -> Result<f64, ConfigError> {
        let cyc = self
            .model
            .omega_c
            .ok_or_else(|| ConfigError("model.omega_c is required for three-level kinds".into()))?;
        if cyc < 0.0 {
            return Err(ConfigError("model.omega_c must be nonnegative".into()));
        }
        Ok(crate::angular(cyc))
    }

    /// Engine model for the configured kind (angular units).
    pub fn to_model(&self) -> Result<ModelConfig<f64>, ConfigError> {
        let probe = self.probe_envelope()?;
        let delta = crate::angular(self.model.delta);
        match self.model.kind {
            ModelKindCfg::TwoLevel => Ok(ModelConfig::two_level(delta, probe)),
            ModelKindCfg::ThreeLevelCw => {
                ModelConfig::three_level_cw(delta, probe, self.control_peak()?)
                    .map_err(|e| ConfigError(format!("model: {e}")))
            }
            ModelKindCfg::ThreeLevelSw => {
                let env = SquareWaveEnvelope::new(
                    self.control_peak()?,
                    self.model.tau,
                    self.model.duty,
                    0.0,
                    self.model.alpha,
                )
                .map_err(|e| ConfigError(format!("model.alpha: {e}")))?;
                ModelConfig::three_level_sw(delta, probe, env)
                    .map_err(|e| ConfigError(format!("model: {e}")))
            }
        }
    }

    /// Engine dissipator (angular units).
    pub fn to_dissipator(&self) -> Result<DissipatorSpec<f64>, ConfigError> {
        let (g10, g11, g21, g22) = self.rates.resolved();
        DissipatorSpec::new(
            crate::angular(g10),
            crate::angular(g11),
            crate::angular(g21),
            crate::angular(g22),
        )
        .map_err(|e| ConfigError(format!("rates: {e}")))
    }

    /// NESS solve parameters: the sample grid matches the integrator grid
    /// (`τ/(dt·stride)` samples per period) and the period budget matches
    /// `t_max`.
    pub fn ness_solve(&self) -> Result<NessSolve<f64>, ConfigError> {
        let per_period = self.model.tau / (self.sim.dt * self.sim.sample_stride as f64);
        if per_period < 1.0 || (per_period - per_period.round()).abs() > 1e-6 {
            return Err(ConfigError(
                "sim.dt and sim.sample_stride must divide the period evenly".into(),
            ));
        }
        Ok(NessSolve {
            samples_per_period: per_period.round() as usize,
            tol: self.sim.ness_tol,
            max_periods: (self.sim.t_max / self.model.tau).ceil() as usize,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ModelKind;

    #[test]
    fn defaults_match_documented_values() {
        let cfg: RunConfig = serde_json::from_str(r#"{"command": {"name": "ness"}}"#).unwrap();
        assert_eq!(cfg.model.omega_p, 0.5);
        assert_eq!(cfg.model.tau, 0.01);
        assert_eq!(cfg.rates.resolved(), (1.0, 0.2, 1.2, 0.2));
        assert_eq!(cfg.sim.dt, 1e-5);
        assert_eq!(cfg.sim.ness_tol, 1e-8);
        assert_eq!(cfg.sim.fourier_terms, 500);
        assert_eq!(cfg.ness_solve().unwrap().samples_per_period, 1000);
        assert_eq!(cfg.to_model().unwrap().kind(), ModelKind::TwoLevel);
    }

    #[test]
    fn eit_preset_overrides_control_rates() {
        let cfg: RunConfig = serde_json::from_str(
            r#"{"rates": {"preset": "eit"}, "command": {"name": "ness"}}"#,
        )
        .unwrap();
        assert_eq!(cfg.rates.resolved(), (1.0, 0.2, 0.1, 0.01));
        let explicit: RunConfig = serde_json::from_str(
            r#"{"rates": {"preset": "eit", "g21": 0.3}, "command": {"name": "ness"}}"#,
        )
        .unwrap();
        assert_eq!(explicit.rates.resolved().2, 0.3);
    }

    #[test]
    fn unknown_keys_are_named() {
        let err = serde_json::from_str::<RunConfig>(
            r#"{"model": {"omega_P": 0.5}, "command": {"name": "ness"}}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("omega_P"), "{err}");
    }

    #[test]
    fn three_level_requires_omega_c() {
        let cfg: RunConfig = serde_json::from_str(
            r#"{"model": {"kind": "three_level_sw"}, "command": {"name": "ness"}}"#,
        )
        .unwrap();
        let err = cfg.to_model().unwrap_err();
        assert!(err.to_string().contains("omega_c"));
    }

    #[test]
    fn resolved_config_round_trips() {
        let cfg: RunConfig = serde_json::from_str(
            r#"{"model": {"kind": "three_level_sw", "omega_c": 50.0, "alpha": 0.0001},
                "rates": {"preset": "eit"},
                "command": {"name": "sweep", "omega_c_start": 20.0, "omega_c_stop": 40.0,
                            "omega_c_step": 10.0}}"#,
        )
        .unwrap();
        let resolved = cfg.resolved();
        let text = serde_json::to_string(&resolved).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, resolved);
        assert_eq!(back.resolved(), resolved);
        assert_eq!(back.rates.g21, Some(0.1));
    }

    #[test]
    fn sweep_modes_default_to_both() {
        let cfg: RunConfig = serde_json::from_str(
            r#"{"command": {"name": "sweep", "omega_c_start": 20.0, "omega_c_stop": 160.0,
                            "omega_c_step": 10.0}}"#,
        )
        .unwrap();
        match cfg.command {
            CommandBlock::Sweep { modes, .. } => {
                assert_eq!(modes, vec![ControlMode::Cw, ControlMode::Sw]);
            }
            _ => panic!("expected sweep"),
        }
    }

    #[test]
    fn mismatched_stride_rejected() {
        let cfg: RunConfig = serde_json::from_str(
            r#"{"sim": {"sample_stride": 7}, "command": {"name": "ness"}}"#,
        )
        .unwrap();
        assert!(cfg.ness_solve().is_err());
    }
}
