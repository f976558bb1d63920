//! End-to-end acceptance checks for the switching pipeline. Each test
//! prints one pass/fail line with the measured numbers so a full run
//! doubles as a verification report.

use pulse_switch::drive::SquareWaveEnvelope;
use pulse_switch::floquet::{
    cw_three_level_closed_form, effective_hamiltonian, micromotion_part, ness_leading_order,
    two_level_closed_form, two_level_ness_rho10, NessDecomposition,
};
use pulse_switch::lindblad::{
    evolve, ness_cycle, propagate_piecewise, static_steady_state, DensityMatrix, DissipatorSpec,
};
use pulse_switch::models::ModelConfig;
use pulse_switch::switching::{
    absorption_spectrum, off_on_ratio, robustness_scan, switching_event, NessSolve,
};
use pulse_switch::max_abs;

const TAU: f64 = std::f64::consts::TAU;

fn check(n: u32, name: &str, f: impl FnOnce() -> Result<String, String> + std::panic::UnwindSafe) {
    let outcome = std::panic::catch_unwind(f).unwrap_or_else(|payload| {
        let msg = payload
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".to_string());
        Err(format!("panicked: {msg}"))
    });
    match outcome {
        Ok(detail) => println!("criterion {n:2} [{name}]: PASS ({detail})"),
        Err(detail) => {
            println!("criterion {n:2} [{name}]: FAIL ({detail})");
            panic!("criterion {n} [{name}] failed: {detail}");
        }
    }
}

macro_rules! ensure {
    ($cond:expr, $($arg:tt)*) => {
        if !$cond {
            return Err(format!($($arg)*));
        }
    };
}

fn sim<T>(r: Result<T, pulse_switch::SimError>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn probe(tau: f64) -> SquareWaveEnvelope<f64> {
    SquareWaveEnvelope::symmetric(TAU * 0.5, tau).unwrap()
}

fn rates() -> DissipatorSpec<f64> {
    DissipatorSpec::new(TAU * 1.0, TAU * 0.2, TAU * 1.2, TAU * 0.2).unwrap()
}

fn eit_rates() -> DissipatorSpec<f64> {
    DissipatorSpec::new(TAU * 1.0, TAU * 0.2, TAU * 0.1, TAU * 0.01).unwrap()
}

fn two_level_rates() -> DissipatorSpec<f64> {
    DissipatorSpec::two_level(TAU * 1.0, TAU * 0.2).unwrap()
}

fn cw_config(omega_c_cyc: f64, tau: f64) -> ModelConfig<f64> {
    ModelConfig::three_level_cw(0.0, probe(tau), TAU * omega_c_cyc).unwrap()
}

fn sw_config(omega_c_cyc: f64, tau: f64) -> ModelConfig<f64> {
    let control = SquareWaveEnvelope::symmetric(TAU * omega_c_cyc, tau).unwrap();
    ModelConfig::three_level_sw(0.0, probe(tau), control).unwrap()
}

/// Worst-case gap between the numeric two-level NESS coherence and its
/// leading-order analytic form over one period.
fn two_level_discrepancy(tau: f64) -> Result<f64, String> {
    let cfg = ModelConfig::two_level(0.0, probe(tau));
    let diss = two_level_rates();
    let cycle = sim(ness_cycle(&cfg, &diss, 1000, 1e-9, 100_000))?;
    let omega = TAU / tau;
    let mut worst = 0.0f64;
    for (&t, state) in cycle.times.iter().zip(&cycle.states) {
        let analytic = two_level_ness_rho10(TAU * 0.5, omega, &diss, t, 500);
        worst = worst.max((state.rho10().im - analytic.im).abs());
    }
    Ok(worst)
}

#[test]
fn criterion_01_two_level_analytics_vs_numerics() {
    check(1, "two-level NESS analytics vs numerics", || {
        let worst = two_level_discrepancy(0.01)?;
        let bound = 0.01 * 0.1639;
        ensure!(worst <= bound, "max |Im rho10| gap {worst:.3e} exceeds {bound:.3e}");
        Ok(format!("max gap {worst:.3e} <= {bound:.3e}"))
    });
}

#[test]
fn criterion_02_closed_forms_vs_solver() {
    check(2, "closed-form steady states vs linear solver", || {
        let diss = two_level_rates();
        let mut worst = 0.0f64;
        for delta_cyc in [-2.0, -0.5, 0.0, 1.0, 3.0] {
            let delta = TAU * delta_cyc;
            let cfg = ModelConfig::two_level(delta, probe(0.01));
            let h0 = sim(cfg.floquet_blocks(1))?.h0().clone();
            let solver = sim(static_steady_state(&h0, &diss))?;
            let closed = two_level_closed_form(delta, TAU * 0.5, &diss);
            worst = worst.max((solver.rho10() - closed.rho10).norm());
            worst = worst.max((solver.population(1) - closed.rho11).abs());
        }
        ensure!(worst < 1e-10, "two-level closed-form residual {worst:.3e}");

        // the CW forms are first order in the probe, so their relative
        // residual must shrink 4x (+-20%) when the probe halves
        let diss3 = rates();
        let residual = |omega_p: f64, omega_c: f64| -> Result<f64, String> {
            let probe_env = SquareWaveEnvelope::new(omega_p, 0.01, 0.5, 0.0, 0.0).unwrap();
            let cfg = ModelConfig::three_level_cw(0.0, probe_env, omega_c).unwrap();
            let h0 = sim(cfg.floquet_blocks(1))?.h0().clone();
            let solver = sim(static_steady_state(&h0, &diss3))?;
            let closed = cw_three_level_closed_form(omega_p, omega_c, &diss3);
            Ok((solver.rho10() - closed.rho10).norm() / closed.rho10.norm())
        };
        let mut ratios = Vec::new();
        for omega_c_cyc in [10.0, 50.0, 100.0] {
            let omega_c = TAU * omega_c_cyc;
            let full = residual(TAU * 0.5, omega_c)?;
            let half = residual(TAU * 0.25, omega_c)?;
            let ratio = full / half;
            ensure!(
                (3.2..=4.8).contains(&ratio),
                "residual shrink ratio {ratio:.3} at omega_c {omega_c_cyc} outside 4 +- 20%"
            );
            ratios.push(ratio);
        }
        Ok(format!(
            "closed-form residual {worst:.2e}; CW residual shrink ratios {ratios:.3?}"
        ))
    });
}

#[test]
fn criterion_03_micromotion_triangle_peak_to_peak() {
    check(3, "micromotion triangle peak-to-peak", || {
        let cfg = ModelConfig::two_level(0.0, probe(0.01));
        let cycle = sim(ness_cycle(&cfg, &two_level_rates(), 1000, 1e-9, 100_000))?;
        let samples = cycle.im_rho10();
        let mean = samples.iter().sum::<f64>() / samples.len() as f64;
        let max = samples.iter().cloned().fold(f64::MIN, f64::max) - mean;
        let min = samples.iter().cloned().fold(f64::MAX, f64::min) - mean;
        let pp = max - min;
        let expected = 3.73e-3;
        ensure!(
            (pp - expected).abs() <= 0.05 * expected,
            "peak-to-peak {pp:.4e} outside {expected:.2e} +- 5%"
        );
        Ok(format!("peak-to-peak {pp:.4e} within {expected:.2e} +- 5%"))
    });
}

#[test]
fn criterion_04_cw_fluctuation_exceeds_sw() {
    check(4, "CW vs SW ON-state fluctuation at omega_c=100", || {
        let solve = NessSolve::default();
        let diss = rates();
        let cw = sim(solve.solve(&cw_config(100.0, 0.01), &diss))?;
        let sw = sim(solve.solve(&sw_config(100.0, 0.01), &diss))?;
        let std = |cycle: &pulse_switch::lindblad::NessCycle<f64>| {
            let s = cycle.im_rho10();
            let mean = s.iter().sum::<f64>() / s.len() as f64;
            (s.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / s.len() as f64).sqrt()
        };
        let (std_cw, std_sw) = (std(&cw), std(&sw));
        ensure!(
            std_cw > 5.0 * std_sw,
            "std CW {std_cw:.3e} not 5x above std SW {std_sw:.3e}"
        );
        Ok(format!("std CW {std_cw:.3e} > 5x std SW {std_sw:.3e}"))
    });
}

#[test]
fn criterion_05_off_on_ratio_sweep() {
    check(5, "OFF/ON ratio sweep 20..160", || {
        let solve = NessSolve::default();
        let diss = rates();
        let off = ModelConfig::two_level(0.0, probe(0.01));
        let mut cw_db = Vec::new();
        let mut sw_db = Vec::new();
        for i in 0..15 {
            let omega_c_cyc = 20.0 + 10.0 * i as f64;
            let cw = sim(off_on_ratio(&off, &cw_config(omega_c_cyc, 0.01), &diss, &solve))?;
            let sw = sim(off_on_ratio(&off, &sw_config(omega_c_cyc, 0.01), &diss, &solve))?;
            cw_db.push(cw.ratio_db);
            sw_db.push(sw.ratio_db);
        }
        for i in 0..15 {
            ensure!(
                sw_db[i] > cw_db[i],
                "SW ratio {:.2} dB not above CW {:.2} dB at point {i}",
                sw_db[i],
                cw_db[i]
            );
            if i > 0 {
                ensure!(
                    sw_db[i] >= sw_db[i - 1] - 1e-6,
                    "SW ratio decreases at point {i}: {:.4} -> {:.4}",
                    sw_db[i - 1],
                    sw_db[i]
                );
                ensure!(
                    cw_db[i] <= cw_db[i - 1] + 1e-6,
                    "CW ratio increases at point {i}: {:.4} -> {:.4}",
                    cw_db[i - 1],
                    cw_db[i]
                );
            }
        }
        let top = *sw_db.last().unwrap();
        ensure!(
            (55.0..=75.0).contains(&top),
            "SW ratio at omega_c=160 is {top:.2} dB, outside [55, 75]"
        );
        Ok(format!(
            "SW above CW everywhere, monotone; SW at 160 = {top:.1} dB, CW range [{:.1}, {:.1}] dB",
            cw_db.last().unwrap(),
            cw_db[0]
        ))
    });
}

#[test]
fn criterion_06_switching_transient_settles() {
    check(6, "switching transient settles within 1.5/Gamma", || {
        let diss = rates();
        let solve = NessSolve::default();
        let off = ModelConfig::two_level(0.0, probe(0.01));
        let off_cycle = sim(solve.solve(&off, &diss))?;
        let off_mean =
            off_cycle.im_rho10().iter().sum::<f64>() / off_cycle.times.len() as f64;
        let toggle = 1.0;
        let settle = toggle + 1.0; // 1.5 / Gamma with Gamma = 1.5
        let mut details = Vec::new();
        for (label, cfg) in [("CW", cw_config(120.0, 0.01)), ("SW", sw_config(120.0, 0.01))] {
            let on_cycle = sim(solve.solve(&cfg, &diss))?;
            let on_mean =
                on_cycle.im_rho10().iter().sum::<f64>() / on_cycle.times.len() as f64;
            let gap = (off_mean - on_mean).abs();
            let traj = sim(switching_event(&cfg, &diss, toggle, 2.5, 1e-5, 100))?;
            let mut worst = 0.0f64;
            for (&t, state) in traj.times.iter().zip(&traj.states) {
                if t >= settle {
                    worst = worst.max((state.rho10().im - on_mean).abs());
                }
            }
            ensure!(
                worst <= 0.05 * gap,
                "{label}: residual {worst:.3e} beyond 5% of gap {gap:.3e} after t={settle}"
            );
            details.push(format!("{label} residual {:.1}% of gap", 100.0 * worst / gap));
        }
        Ok(details.join(", "))
    });
}

#[test]
fn criterion_07_mismatch_robustness() {
    check(7, "ratio robust to +-0.01 tau mismatch", || {
        let diss = rates();
        let solve = NessSolve::default();
        let cfg = sw_config(50.0, 0.01);
        let alphas = [-1e-4, 0.0, 1e-4];
        let peaks: Vec<f64> = [50.0, 75.0, 100.0].iter().map(|x| TAU * x).collect();
        let table = sim(robustness_scan(&cfg, &diss, &alphas, &peaks, &solve))?;
        let mut worst = 0.0f64;
        for &peak in &peaks {
            let db = |alpha: f64| {
                table
                    .iter()
                    .find(|p| p.mismatch == alpha && p.control_peak == peak)
                    .map(|p| p.metrics.ratio_db)
                    .unwrap()
            };
            let base = db(0.0);
            for alpha in [-1e-4, 1e-4] {
                worst = worst.max((db(alpha) - base).abs());
            }
        }
        ensure!(worst <= 1.0, "ratio shift {worst:.3} dB exceeds 1 dB");
        Ok(format!("max ratio shift {worst:.3} dB <= 1 dB"))
    });
}

#[test]
fn criterion_08_eit_spectrum() {
    check(8, "EIT transparency dip", || {
        let diss = eit_rates();
        let deltas: Vec<f64> = (-60..=60).map(|i| TAU * i as f64 / 10.0).collect();
        let spec = sim(absorption_spectrum(&cw_config(5.0, 0.01), &diss, &deltas))?;
        let center = spec.len() / 2;
        let dip = spec[center].1;
        let max = spec.iter().map(|&(_, im)| im).fold(f64::MIN, f64::max);
        ensure!(dip < 0.5 * max, "dip {dip:.3e} not below half of max {max:.3e}");
        ensure!(
            dip < spec[center - 1].1 && dip < spec[center + 1].1,
            "no local minimum at delta=0"
        );

        let bare = sim(absorption_spectrum(
            &ModelConfig::two_level(0.0, probe(0.01)),
            &diss,
            &deltas,
        ))?;
        for i in 1..bare.len() {
            let rising = i <= center;
            ensure!(
                (bare[i].1 > bare[i - 1].1) == rising,
                "control-free spectrum is not single-peaked at point {i}"
            );
        }
        Ok(format!("dip {dip:.3e} < half of max {max:.3e}; control-free single peak"))
    });
}

#[test]
fn criterion_09_engine_property_suite() {
    check(9, "engine property suite", || {
        let diss = rates();

        // invariants on a 10^6-step run
        let cfg = sw_config(50.0, 0.01);
        let traj = sim(evolve(
            &cfg,
            &diss,
            &DensityMatrix::ground_state(3),
            10.0,
            1e-5,
            100,
        ))?;
        ensure!(
            traj.max_trace_defect < 1e-12,
            "trace defect {:.3e} on long run",
            traj.max_trace_defect
        );
        for state in &traj.states {
            ensure!(state.hermiticity_defect() < 1e-12, "hermiticity defect on long run");
            ensure!(state.min_eigenvalue() > -1e-8, "negative eigenvalue on long run");
        }

        // integrator vs exact piecewise propagation over 10 periods
        let models = [
            ModelConfig::two_level(0.0, probe(0.01)),
            cw_config(50.0, 0.01),
            sw_config(50.0, 0.01),
        ];
        let mut worst_step = 0.0f64;
        for cfg in &models {
            let rho0 = DensityMatrix::ground_state(cfg.dim());
            let rk = sim(evolve(cfg, &diss, &rho0, 0.1, 1e-5, usize::MAX))?;
            let exact = sim(propagate_piecewise(cfg, &diss, &rho0, 10))?;
            let gap = max_abs(&(rk.last_state().matrix() - exact.last_state().matrix()));
            ensure!(gap <= 1e-8, "integrator gap {gap:.3e} over 10 periods");
            worst_step = worst_step.max(gap);
        }

        // exact cancellations of the first-order corrections
        let mut worst_mm_mean = 0.0f64;
        for cfg in &models {
            let blocks = sim(cfg.floquet_blocks(500))?;
            let (_, delta_h) = effective_hamiltonian(&blocks);
            ensure!(max_abs(&delta_h) == 0.0, "delta H_eff nonzero");
            let decomp = sim(NessDecomposition::new(cfg, &diss, 500))?;
            ensure!(max_abs(&decomp.sigma_fe) == 0.0, "sigma_FE nonzero");

            let n = 1000;
            let mut mean = pulse_switch::CMat64::zeros(cfg.dim(), cfg.dim());
            for k in 0..n {
                let t = cfg.period() * k as f64 / n as f64;
                mean += micromotion_part(&blocks, &decomp.rho_tilde, t);
            }
            mean /= pulse_switch::C64::from(n as f64);
            worst_mm_mean = worst_mm_mean.max(max_abs(&mean));
        }
        ensure!(worst_mm_mean <= 1e-12, "micromotion mean {worst_mm_mean:.3e}");

        // integrator order on a stiff configuration
        let stiff_probe = SquareWaveEnvelope::new(TAU * 40.0, 0.01, 0.5, 0.0, 0.0).unwrap();
        let stiff = ModelConfig::two_level(TAU * 30.0, stiff_probe);
        let stiff_diss = DissipatorSpec::two_level(TAU * 5.0, TAU * 2.0).unwrap();
        let rho0 = DensityMatrix::ground_state(2);
        let exact = sim(propagate_piecewise(&stiff, &stiff_diss, &rho0, 1))?;
        let err = |dt: f64| -> Result<f64, String> {
            let t = sim(evolve(&stiff, &stiff_diss, &rho0, 0.01, dt, usize::MAX))?;
            Ok(max_abs(&(t.last_state().matrix() - exact.last_state().matrix())))
        };
        let order = (err(1e-4)? / err(5e-5)?).log2();
        ensure!((order - 4.0).abs() < 0.3, "integrator order {order:.2}");

        Ok(format!(
            "trace defect {:.1e}; integrator gap {worst_step:.1e}; micromotion mean {worst_mm_mean:.1e}; order {order:.2}",
            traj.max_trace_defect
        ))
    });
}

#[test]
fn criterion_10_expansion_order_scaling() {
    check(10, "discrepancy shrinks 4x when tau halves", || {
        let coarse = two_level_discrepancy(0.01)?;
        let fine = two_level_discrepancy(0.005)?;
        let ratio = coarse / fine;
        ensure!(
            (2.8..=5.2).contains(&ratio),
            "shrink ratio {ratio:.3} outside 4 +- 30% (gaps {coarse:.3e} -> {fine:.3e})"
        );
        Ok(format!("gap {coarse:.3e} -> {fine:.3e}, ratio {ratio:.2} within 4 +- 30%"))
    });
}
