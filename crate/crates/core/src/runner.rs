//! Batch execution: dispatches a parsed run configuration to the engine
//! and writes `result.csv` plus `meta.json` into an output directory.

use crate::config::{CommandBlock, ConfigError, ControlMode, ModelKindCfg, RunConfig};
use crate::floquet::NessDecomposition;
use crate::lindblad::{evolve, DensityMatrix, Trajectory};
use crate::models::ModelConfig;
use crate::switching::{absorption_spectrum, off_on_ratio, robustness_scan, switching_event};
use crate::SimError;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("numerical failure: {0}")]
    Numerical(#[from] SimError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    /// Process exit code: 1 for config/usage problems, 2 for numerical
    /// failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Io(_) => 1,
            RunError::Numerical(_) => 2,
        }
    }
}

/// Paths of the files a successful run produced.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub csv_path: PathBuf,
    pub meta_path: PathBuf,
}

/// 12-significant-digit float formatting used for every CSV number.
fn fmt(x: f64) -> String {
    format!("{x:.11e}")
}

fn inclusive_grid(start: f64, stop: f64, step: f64, key: &str) -> Result<Vec<f64>, ConfigError> {
    if step <= 0.0 || stop < start {
        return Err(ConfigError(format!("{key}: need step > 0 and stop >= start")));
    }
    let n = ((stop - start) / step).round() as usize;
    Ok((0..=n).map(|i| start + step * i as f64).collect())
}

fn state_row(t: f64, state: &DensityMatrix<f64>) -> Vec<String> {
    let mut row = vec![
        fmt(t),
        fmt(state.rho10().re),
        fmt(state.rho10().im),
        fmt(state.population(0)),
        fmt(state.population(1)),
    ];
    if state.dim() > 2 {
        row.push(fmt(state.population(2)));
    }
    row
}

fn state_header(dim: usize) -> Vec<&'static str> {
    let mut h = vec!["t", "re_rho10", "im_rho10", "rho00", "rho11"];
    if dim > 2 {
        h.push("rho22");
    }
    h
}

fn trajectory_rows(traj: &Trajectory<f64>) -> Vec<Vec<String>> {
    traj.times
        .iter()
        .zip(&traj.states)
        .map(|(&t, s)| vec![fmt(t), fmt(s.rho10().re), fmt(s.rho10().im)])
        .collect()
}

/// The ON-state model for one sweep point.
fn sweep_model(
    cfg: &RunConfig,
    mode: ControlMode,
    omega_c_cyc: f64,
) -> Result<ModelConfig<f64>, RunError> {
    let probe = cfg.probe_envelope()?;
    let delta = crate::angular(cfg.model.delta);
    let peak = crate::angular(omega_c_cyc);
    let model = match mode {
        ControlMode::Cw => ModelConfig::three_level_cw(delta, probe, peak)?,
        ControlMode::Sw => {
            let env = crate::drive::SquareWaveEnvelope::new(
                peak,
                cfg.model.tau,
                cfg.model.duty,
                0.0,
                cfg.model.alpha,
            )?;
            ModelConfig::three_level_sw(delta, probe, env)?
        }
    };
    Ok(model)
}

fn execute(cfg: &RunConfig) -> Result<(Vec<&'static str>, Vec<Vec<String>>), RunError> {
    let diss = cfg.to_dissipator()?;
    match &cfg.command {
        CommandBlock::Evolve => {
            let model = cfg.to_model()?;
            let ground = DensityMatrix::ground_state(model.dim());
            let traj = evolve(
                &model,
                &diss,
                &ground,
                cfg.sim.t_max,
                cfg.sim.dt,
                cfg.sim.sample_stride,
            )?;
            let rows = traj
                .times
                .iter()
                .zip(&traj.states)
                .map(|(&t, s)| state_row(t, s))
                .collect();
            Ok((state_header(model.dim()), rows))
        }
        CommandBlock::Ness => {
            let model = cfg.to_model()?;
            let cycle = cfg.ness_solve()?.solve(&model, &diss)?;
            let rows = cycle
                .times
                .iter()
                .zip(&cycle.states)
                .map(|(&t, s)| state_row(t, s))
                .collect();
            Ok((state_header(model.dim()), rows))
        }
        CommandBlock::AnalyticCompare => {
            let model = cfg.to_model()?;
            let cycle = cfg.ness_solve()?.solve(&model, &diss)?;
            let analytic = NessDecomposition::new(&model, &diss, cfg.sim.fourier_terms)?;
            let mut rows = Vec::with_capacity(cycle.times.len());
            for (&t, state) in cycle.times.iter().zip(&cycle.states) {
                let a = analytic.evaluate(t)?;
                rows.push(vec![fmt(t), fmt(state.rho10().im), fmt(a.rho10().im)]);
            }
            Ok((vec!["t", "im_rho10_numeric", "im_rho10_analytic"], rows))
        }
        CommandBlock::Sweep { omega_c_start, omega_c_stop, omega_c_step, modes } => {
            let grid = inclusive_grid(*omega_c_start, *omega_c_stop, *omega_c_step, "omega_c")?;
            let off = ModelConfig::two_level(crate::angular(cfg.model.delta), cfg.probe_envelope()?);
            let solve = cfg.ness_solve()?;
            let mut rows = Vec::with_capacity(grid.len() * modes.len());
            for &omega_c in &grid {
                for &mode in modes {
                    let on = sweep_model(cfg, mode, omega_c)?;
                    let m = off_on_ratio(&off, &on, &diss, &solve)?;
                    rows.push(vec![
                        fmt(omega_c),
                        mode.label().to_string(),
                        fmt(m.mean_im_rho10),
                        fmt(m.std_im_rho10),
                        fmt(m.ratio_db),
                    ]);
                }
            }
            Ok((vec!["omega_c", "mode", "mean_im", "std_im", "ratio_db"], rows))
        }
        CommandBlock::SwitchEvent { toggle_time } => {
            let model = cfg.to_model()?;
            if model.dim() != 3 {
                return Err(ConfigError(
                    "model.kind: switch-event needs a three-level model".into(),
                )
                .into());
            }
            let traj = switching_event(
                &model,
                &diss,
                *toggle_time,
                cfg.sim.t_max,
                cfg.sim.dt,
                cfg.sim.sample_stride,
            )?;
            Ok((vec!["t", "re_rho10", "im_rho10"], trajectory_rows(&traj)))
        }
        CommandBlock::Robustness { alphas, omega_c_values } => {
            let model = cfg.to_model()?;
            let peaks: Vec<f64> = omega_c_values.iter().map(|&x| crate::angular(x)).collect();
            let solve = cfg.ness_solve()?;
            let table = robustness_scan(&model, &diss, alphas, &peaks, &solve)?;
            let rows = table
                .iter()
                .map(|p| {
                    vec![
                        fmt(p.mismatch),
                        fmt(crate::cyclic(p.control_peak)),
                        fmt(p.metrics.mean_im_rho10),
                        fmt(p.metrics.std_im_rho10),
                        fmt(p.metrics.ratio_db),
                    ]
                })
                .collect();
            Ok((vec!["alpha", "omega_c", "mean_im", "std_im", "ratio_db"], rows))
        }
        CommandBlock::Spectrum { delta_start, delta_stop, delta_step } => {
            let model = cfg.to_model()?;
            let grid = inclusive_grid(*delta_start, *delta_stop, *delta_step, "delta")?;
            let deltas: Vec<f64> = grid.iter().map(|&x| crate::angular(x)).collect();
            let spec = absorption_spectrum(&model, &diss, &deltas)?;
            let rows = spec
                .iter()
                .map(|&(d, im)| vec![fmt(crate::cyclic(d)), fmt(im)])
                .collect();
            Ok((vec!["delta", "im_rho10"], rows))
        }
    }
}

fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>, RunError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(header).map_err(std::io::Error::other)?;
    for row in rows {
        writer.write_record(row).map_err(std::io::Error::other)?;
    }
    Ok(writer.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?)
}

/// Execute the configuration and write `result.csv` and `meta.json` into
/// `out_dir` (created if missing). Identical configs produce byte-identical
/// CSV files.
pub fn run(config: &RunConfig, out_dir: &Path) -> Result<RunOutput, RunError> {
    let (header, rows) = execute(config)?;
    let bytes = csv_bytes(&header, &rows)?;
    let digest = hex(&Sha256::digest(&bytes));
    std::fs::create_dir_all(out_dir)?;
    let csv_path = out_dir.join("result.csv");
    std::fs::write(&csv_path, &bytes)?;
    let meta = serde_json::json!({
        "version": env!("CARGO_PKG_VERSION"),
        "config": config.resolved(),
        "csv_sha256": digest,
    });
    let meta_path = out_dir.join("meta.json");
    std::fs::write(&meta_path, serde_json::to_string_pretty(&meta)? + "\n")?;
    Ok(RunOutput { csv_path, meta_path })
}

impl From<serde_json::Error> for RunError {
    fn from(e: serde_json::Error) -> Self {
        RunError::Config(ConfigError(e.to_string()))
    }
}

fn hex(digest: &[u8]) -> String {
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Parse a config file and run it.
pub fn run_file(config_path: &Path, out_dir: &Path) -> Result<RunOutput, RunError> {
    let text = std::fs::read_to_string(config_path)?;
    let config: RunConfig = serde_json::from_str(&text)?;
    run(&config, out_dir)
}

fn figure_configs() -> Vec<(&'static str, &'static str, RunConfig)> {
    let base = || RunConfig {
        model: Default::default(),
        rates: Default::default(),
        sim: Default::default(),
        command: CommandBlock::Ness,
    };
    let mut pack = Vec::new();

    let mut fig2 = base();
    fig2.command = CommandBlock::AnalyticCompare;
    pack.push((
        "fig2.json",
        "two-level NESS: im_rho10_numeric (solid) vs im_rho10_analytic (dashed) over one period",
        fig2,
    ));

    let mut fig3 = base();
    fig3.model.kind = ModelKindCfg::ThreeLevelCw;
    fig3.model.omega_c = Some(50.0);
    fig3.command = CommandBlock::AnalyticCompare;
    pack.push((
        "fig3.json",
        "CW control, omega_c=50: im_rho10_numeric vs im_rho10_analytic over one NESS period",
        fig3,
    ));

    let mut fig4 = base();
    fig4.model.kind = ModelKindCfg::ThreeLevelSw;
    fig4.model.omega_c = Some(10.0);
    fig4.command = CommandBlock::AnalyticCompare;
    pack.push((
        "fig4.json",
        "SW control, omega_c=10: im_rho10_numeric vs im_rho10_analytic over one NESS period",
        fig4,
    ));

    let mut fig5a = base();
    fig5a.model.kind = ModelKindCfg::ThreeLevelCw;
    fig5a.model.omega_c = Some(120.0);
    fig5a.sim.t_max = 3.0;
    fig5a.sim.sample_stride = 100;
    fig5a.command = CommandBlock::SwitchEvent { toggle_time: 1.0 };
    pack.push((
        "fig5a.json",
        "switching event, CW control toggled on at t=1: im_rho10 transient",
        fig5a,
    ));

    let mut fig5b = base();
    fig5b.model.kind = ModelKindCfg::ThreeLevelSw;
    fig5b.model.omega_c = Some(120.0);
    fig5b.sim.t_max = 3.0;
    fig5b.sim.sample_stride = 100;
    fig5b.command = CommandBlock::SwitchEvent { toggle_time: 1.0 };
    pack.push((
        "fig5b.json",
        "switching event, SW control toggled on at t=1: im_rho10 transient",
        fig5b,
    ));

    let mut fig5c = base();
    fig5c.command = CommandBlock::Sweep {
        omega_c_start: 20.0,
        omega_c_stop: 160.0,
        omega_c_step: 10.0,
        modes: vec![ControlMode::Cw, ControlMode::Sw],
    };
    pack.push((
        "fig5c.json",
        "OFF/ON ratio_db vs omega_c per mode; mean_im/std_im columns give the ON-state error bars",
        fig5c,
    ));

    let mut fig6 = base();
    fig6.model.kind = ModelKindCfg::ThreeLevelSw;
    fig6.model.omega_c = Some(50.0);
    fig6.command = CommandBlock::Robustness {
        alphas: vec![-0.0001, 0.0, 0.0001],
        omega_c_values: (2..=16).map(|i| 10.0 * i as f64).collect(),
    };
    pack.push((
        "fig6.json",
        "ratio_db vs omega_c for alpha in {-tau/100, 0, +tau/100} (mismatched control pulses)",
        fig6,
    ));

    let mut fig7a = base();
    fig7a.model.kind = ModelKindCfg::ThreeLevelCw;
    fig7a.model.omega_c = Some(5.0);
    fig7a.rates.preset = Some(crate::config::RatePreset::Eit);
    fig7a.command =
        CommandBlock::Spectrum { delta_start: -6.0, delta_stop: 6.0, delta_step: 0.1 };
    pack.push((
        "fig7a.json",
        "EIT absorption spectrum im_rho10 vs delta; transparency dip at delta=0",
        fig7a,
    ));

    let mut fig7b = base();
    fig7b.rates.preset = Some(crate::config::RatePreset::Eit);
    fig7b.sim.t_max = 100.0;
    fig7b.command = CommandBlock::Sweep {
        omega_c_start: 11.0,
        omega_c_stop: 101.0,
        omega_c_step: 10.0,
        modes: vec![ControlMode::Cw, ControlMode::Sw],
    };
    pack.push((
        "fig7b.json",
        "EIT-rate sweep: ratio_db and ON-state mean_im/std_im per mode; grid starts at 11 because SW modulation halves the field intensity",
        fig7b,
    ));

    pack
}

/// Write one ready-to-run config per reproduced figure plus a manifest
/// mapping each file to the curves its CSV columns contain.
pub fn emit_figure_pack(out_dir: &Path) -> Result<Vec<PathBuf>, RunError> {
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    let mut manifest = Vec::new();
    for (name, description, config) in figure_configs() {
        let path = out_dir.join(name);
        std::fs::write(&path, serde_json::to_string_pretty(&config)? + "\n")?;
        manifest.push(serde_json::json!({ "file": name, "description": description }));
        written.push(path);
    }
    let manifest_path = out_dir.join("manifest.json");
    std::fs::write(
        &manifest_path,
        serde_json::to_string_pretty(&serde_json::json!({ "figures": manifest }))? + "\n",
    )?;
    written.push(manifest_path);
    Ok(written)
}
