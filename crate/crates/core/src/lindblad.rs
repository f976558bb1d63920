//! Dissipative-dynamics engine: Lindblad right-hand side, fixed-step
//! integration, Liouvillian superoperators, exact piecewise-constant
//! propagation, static steady states and NESS detection.
//!
//! Dissipation acts in the bare basis (|0⟩, |1⟩, |2⟩): `γ₁₀` damps
//! |1⟩ → |0⟩ (jump operator |0⟩⟨1|), `γ₂₁` damps |2⟩ → |1⟩ (jump operator
//! |1⟩⟨2|), and `γ₁₁`, `γ₂₂` are pure dephasing (jump operators |1⟩⟨1|,
//! |2⟩⟨2| at rate `2γ_ii`, so `γ_ii` is the coherence decay rate).

use crate::models::ModelConfig;
use crate::{max_abs, r, CMat, CVec, Real, Result, SimError};
use nalgebra::Normed;
use num_complex::Complex;
use num_traits::{One, Zero};
use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};

/// Decay and dephasing rates, all angular and nonnegative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DissipatorSpec<T> {
    pub g10: T,
    pub g11: T,
    pub g21: T,
    pub g22: T,
}

/// One Lindblad jump `|to⟩⟨from|` with its rate.
#[derive(Debug, Clone, Copy)]
pub struct Jump<T> {
    pub to: usize,
    pub from: usize,
    pub rate: T,
}

impl<T: Real> DissipatorSpec<T> {
    pub fn new(g10: T, g11: T, g21: T, g22: T) -> Result<Self> {
        for g in [g10, g11, g21, g22] {
            if g < T::zero() {
                return Err(SimError::InvalidModel("rates must be nonnegative".into()));
            }
        }
        Ok(Self { g10, g11, g21, g22 })
    }

    pub fn two_level(g10: T, g11: T) -> Result<Self> {
        Self::new(g10, g11, T::zero(), T::zero())
    }

    /// Probe coherence decay rate `Γ₁ = γ₁₀/2 + γ₁₁`.
    pub fn gamma1(&self) -> T {
        self.g10 / r(2.0) + self.g11
    }

    /// Control coherence decay rate `Γ₂ = γ₂₁/2 + γ₂₂`.
    pub fn gamma2(&self) -> T {
        self.g21 / r(2.0) + self.g22
    }

    /// `Γ = Γ₁ + Γ₂`.
    pub fn gamma_total(&self) -> T {
        self.gamma1() + self.gamma2()
    }

    /// Jump operators restricted to a `dim`-level system. Dephasing jumps
    /// carry rate `2γ_ii` so that `γ_ii` is the coherence decay it causes,
    /// which is what `Γ₁ = γ₁₀/2 + γ₁₁` and `Γ₂ = γ₂₁/2 + γ₂₂` assume.
    pub fn jumps(&self, dim: usize) -> Vec<Jump<T>> {
        let two = r::<T>(2.0);
        let mut all = vec![
            Jump { to: 0, from: 1, rate: self.g10 },
            Jump { to: 1, from: 1, rate: two * self.g11 },
        ];
        if dim > 2 {
            all.push(Jump { to: 1, from: 2, rate: self.g21 });
            all.push(Jump { to: 2, from: 2, rate: two * self.g22 });
        }
        all.retain(|j| j.rate > T::zero());
        all
    }

    /// Rate labeled `γ_ij`; zero for every pair not in the model.
    pub fn rate(&self, i: usize, j: usize) -> T {
        match (i, j) {
            (1, 0) => self.g10,
            (1, 1) => self.g11,
            (2, 1) => self.g21,
            (2, 2) => self.g22,
            _ => T::zero(),
        }
    }
}

/// Hermitian, unit-trace, positive-semidefinite (up to numerical slack)
/// complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix<T>(CMat<T>);

impl<T: Real> DensityMatrix<T> {
    pub const HERMITICITY_TOL: f64 = 1e-10;
    pub const TRACE_TOL: f64 = 1e-10;
    pub const POSITIVITY_SLACK: f64 = -1e-8;

    pub fn from_matrix(m: CMat<T>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(SimError::DimensionMismatch { expected: m.nrows(), got: m.ncols() });
        }
        let dm = Self(m);
        if dm.hermiticity_defect() > r(Self::HERMITICITY_TOL) {
            return Err(SimError::InvalidState("matrix is not Hermitian".into()));
        }
        if (dm.trace().re - T::one()).abs() > r(Self::TRACE_TOL)
            || dm.trace().im.abs() > r(Self::TRACE_TOL)
        {
            return Err(SimError::InvalidState("trace is not one".into()));
        }
        if dm.min_eigenvalue() < r(Self::POSITIVITY_SLACK) {
            return Err(SimError::InvalidState("matrix is not positive semidefinite".into()));
        }
        Ok(dm)
    }

    pub fn new_unchecked(m: CMat<T>) -> Self {
        Self(m)
    }

    pub fn ground_state(dim: usize) -> Self {
        let mut m = CMat::<T>::zeros(dim, dim);
        m[(0, 0)] = Complex::one();
        Self(m)
    }

    pub fn matrix(&self) -> &CMat<T> {
        &self.0
    }

    pub fn into_matrix(self) -> CMat<T> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex<T> {
        self.0[(i, j)]
    }

    /// The probe coherence `ρ₁₀`.
    pub fn rho10(&self) -> Complex<T> {
        self.0[(1, 0)]
    }

    pub fn population(&self, i: usize) -> T {
        self.0[(i, i)].re
    }

    pub fn trace(&self) -> Complex<T> {
        self.0.trace()
    }

    pub fn hermiticity_defect(&self) -> T {
        max_abs(&(self.0.clone() - self.0.adjoint()))
    }

    pub fn min_eigenvalue(&self) -> T {
        let eigs = self.0.clone().symmetric_eigen().eigenvalues;
        eigs.iter().copied().fold(T::max_value().unwrap(), |a, b| if b < a { b } else { a })
    }

    /// Restore exact Hermiticity and unit trace after a numerical step.
    pub fn project(&mut self) {
        let sym = (&self.0 + self.0.adjoint()).scale(r(0.5));
        self.0 = sym;
        let tr = self.0.trace().re;
        self.0.apply(|z| *z /= Complex::from(tr));
    }
}

/// `dρ/dt = -i[H, ρ] + Σ γ (L ρ L† - ½{L†L, ρ})`; traceless and Hermitian.
pub fn lindblad_rhs<T: Real>(
    h: &CMat<T>,
    diss: &DissipatorSpec<T>,
    rho: &CMat<T>,
) -> Result<CMat<T>> {
    let dim = rho.nrows();
    if h.nrows() != dim || h.ncols() != dim || rho.ncols() != dim {
        return Err(SimError::DimensionMismatch { expected: dim, got: h.nrows() });
    }
    let mut out = (h * rho - rho * h) * Complex::<T>::new(T::zero(), -T::one());
    for jump in diss.jumps(dim) {
        let g = Complex::from(jump.rate);
        let half_g = Complex::from(jump.rate * r::<T>(0.5));
        // L ρ L† = ρ_{from,from} |to⟩⟨to|
        out[(jump.to, jump.to)] += g * rho[(jump.from, jump.from)];
        // -½{L†L, ρ} with L†L = |from⟩⟨from|
        for k in 0..dim {
            out[(jump.from, k)] -= half_g * rho[(jump.from, k)];
            out[(k, jump.from)] -= half_g * rho[(k, jump.from)];
        }
    }
    Ok(out)
}

/// Column-vectorization `vec(ρ)` (column-major stacking).
pub fn vectorize<T: Real>(m: &CMat<T>) -> CVec<T> {
    CVec::from_column_slice(m.as_slice())
}

pub fn unvectorize<T: Real>(v: &CVec<T>, dim: usize) -> CMat<T> {
    CMat::from_column_slice(dim, dim, v.as_slice())
}

/// Dense matrix form of `ℒ` acting on column-vectorized density matrices,
/// built from `vec(AρB) = (Bᵀ ⊗ A) vec(ρ)`.
#[derive(Debug, Clone)]
pub struct Liouvillian<T> {
    matrix: CMat<T>,
    dim: usize,
}

impl<T: Real> Liouvillian<T> {
    pub fn new(h: &CMat<T>, diss: &DissipatorSpec<T>) -> Result<Self> {
        let dim = h.nrows();
        if h.ncols() != dim {
            return Err(SimError::DimensionMismatch { expected: dim, got: h.ncols() });
        }
        let eye = CMat::<T>::identity(dim, dim);
        let minus_i = Complex::<T>::new(T::zero(), -T::one());
        let mut m = (eye.kronecker(h) - h.transpose().kronecker(&eye)) * minus_i;
        for jump in diss.jumps(dim) {
            let mut l = CMat::<T>::zeros(dim, dim);
            l[(jump.to, jump.from)] = Complex::one();
            let ldl = l.adjoint() * &l;
            let g = Complex::from(jump.rate);
            let half = Complex::from(jump.rate * r::<T>(0.5));
            // jump operators are real, so conj(L) = L
            m += l.kronecker(&l) * g;
            m -= (eye.kronecker(&ldl) + ldl.transpose().kronecker(&eye)) * half;
        }
        Ok(Self { matrix: m, dim })
    }

    pub fn matrix(&self) -> &CMat<T> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn apply(&self, rho: &CMat<T>) -> CMat<T> {
        unvectorize(&(&self.matrix * vectorize(rho)), self.dim)
    }

    /// `exp(ℒ Δt)` via Padé scaling-and-squaring.
    pub fn propagator(&self, dt: T) -> CMat<T> {
        (&self.matrix * Complex::from(dt)).exp()
    }
}

/// Solve `-i[H₀, ρ̃] + 𝒟(ρ̃) = 0` with the trace-one constraint replacing
/// the last (redundant) row of the static Liouvillian.
pub fn static_steady_state<T: Real>(h0: &CMat<T>, diss: &DissipatorSpec<T>) -> Result<DensityMatrix<T>> {
    let dim = h0.nrows();
    let liouv = Liouvillian::new(h0, diss)?;
    let n = dim * dim;

    // kernel must be one-dimensional: exactly one vanishing singular value
    let sv = liouv.matrix.clone().svd(false, false).singular_values;
    let smax = sv.iter().copied().fold(T::zero(), |a, b| if b > a { b } else { a });
    let tol = (smax + T::one()) * T::default_epsilon() * r(1e4);
    let null_count = sv.iter().filter(|&&s| s < tol).count();
    if null_count != 1 {
        return Err(SimError::DegenerateSteadyState);
    }

    let mut system = liouv.matrix.clone();
    for col in 0..n {
        system[(n - 1, col)] = Complex::zero();
    }
    for i in 0..dim {
        system[(n - 1, i * dim + i)] = Complex::one();
    }
    let mut rhs = CVec::<T>::zeros(n);
    rhs[n - 1] = Complex::one();
    let solution = system.lu().solve(&rhs).ok_or(SimError::DegenerateSteadyState)?;
    let mut rho = DensityMatrix::new_unchecked(unvectorize(&solution, dim));
    rho.project();
    let residual = max_abs(&liouv.apply(rho.matrix()));
    if residual > (smax + T::one()) * T::default_epsilon() * r(1e4) {
        return Err(SimError::DegenerateSteadyState);
    }
    Ok(rho)
}

/// Uniformly stepped (possibly strided) samples of a Lindblad evolution.
#[derive(Debug, Clone)]
pub struct Trajectory<T> {
    pub times: Vec<T>,
    pub states: Vec<DensityMatrix<T>>,
    /// Largest per-step `|tr ρ - 1|` observed before renormalization.
    pub max_trace_defect: T,
    pub fingerprint: u64,
}

impl<T: Real> Trajectory<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_state(&self) -> &DensityMatrix<T> {
        self.states.last().expect("trajectory is never empty")
    }
}

/// Stable fingerprint of a (model, dissipator) pair for trajectory metadata.
pub fn fingerprint<T: Real>(cfg: &ModelConfig<T>, diss: &DissipatorSpec<T>) -> u64 {
    let mut hasher = DefaultHasher::new();
    format!("{cfg:?}|{diss:?}").hash(&mut hasher);
    hasher.finish()
}

fn check_alignment<T: Real>(cfg: &ModelConfig<T>, dt: T) -> Result<()> {
    let tau = cfg.period();
    if dt > tau / r(100.0) {
        return Err(SimError::InvalidStep("dt must be at most period/100".into()));
    }
    let near_integer = |x: T| (x - x.round()).abs() < r(1e-6);
    if !near_integer(tau / dt) {
        return Err(SimError::InvalidStep("period must be an integer number of steps".into()));
    }
    for b in cfg.breakpoints() {
        if !near_integer(b / dt) {
            return Err(SimError::InvalidStep(
                "envelope edges must land on step boundaries".into(),
            ));
        }
    }
    Ok(())
}

/// Classical fixed-step 4th-order integration of the Lindblad equation.
///
/// Envelope jumps are aligned to step boundaries, so the Hamiltonian is
/// constant within each step and is sampled once at the step midpoint.
/// Samples are stored every `sample_stride` steps (plus the initial and
/// final states) and re-projected onto Hermitian unit-trace form.
pub fn evolve<T: Real>(
    cfg: &ModelConfig<T>,
    diss: &DissipatorSpec<T>,
    rho0: &DensityMatrix<T>,
    t_end: T,
    dt: T,
    sample_stride: usize,
) -> Result<Trajectory<T>> {
    check_alignment(cfg, dt)?;
    if rho0.dim() != cfg.dim() {
        return Err(SimError::DimensionMismatch { expected: cfg.dim(), got: rho0.dim() });
    }
    let stride = sample_stride.max(1);
    let n_steps_t = t_end / dt;
    if (n_steps_t - n_steps_t.round()).abs() > r(1e-6) {
        return Err(SimError::InvalidStep("t_end must be an integer number of steps".into()));
    }
    let n_steps = num_traits::ToPrimitive::to_usize(&n_steps_t.round())
        .ok_or_else(|| SimError::InvalidStep("t_end/dt does not fit in usize".into()))?;

    let mut rho = rho0.matrix().clone();
    let mut times = Vec::with_capacity(n_steps / stride + 2);
    let mut states = Vec::with_capacity(n_steps / stride + 2);
    times.push(T::zero());
    states.push(rho0.clone());
    let mut max_defect = T::zero();
    let half_dt = dt * r(0.5);
    let sixth_dt = dt / r(6.0);

    for step in 0..n_steps {
        let t = r::<T>(step as f64) * dt;
        let h = cfg.hamiltonian_at(t + half_dt);
        let k1 = lindblad_rhs(&h, diss, &rho)?;
        let k2 = lindblad_rhs(&h, diss, &(&rho + &k1 * Complex::from(half_dt)))?;
        let k3 = lindblad_rhs(&h, diss, &(&rho + &k2 * Complex::from(half_dt)))?;
        let k4 = lindblad_rhs(&h, diss, &(&rho + &k3 * Complex::from(dt)))?;
        rho += (k1 + k2 * Complex::from(r::<T>(2.0)) + k3 * Complex::from(r::<T>(2.0)) + k4)
            * Complex::from(sixth_dt);

        let defect = (rho.trace().re - T::one()).abs();
        if defect > max_defect {
            max_defect = defect;
        }
        let mut dm = DensityMatrix::new_unchecked(rho);
        dm.project();
        rho = dm.into_matrix();

        if (step + 1) % stride == 0 || step + 1 == n_steps {
            let sample = DensityMatrix::new_unchecked(rho.clone());
            if sample.min_eigenvalue() < r(-1e-6) {
                return Err(SimError::Unstable(format!(
                    "positivity violated at step {}",
                    step + 1
                )));
            }
            times.push(r::<T>((step + 1) as f64) * dt);
            states.push(sample);
        }
    }
    Ok(Trajectory { times, states, max_trace_defect: max_defect, fingerprint: fingerprint(cfg, diss) })
}

/// One maximal interval of constant Hamiltonian within a drive period.
#[derive(Debug, Clone)]
pub struct Piece<T> {
    pub start: T,
    pub duration: T,
    pub liouvillian: Liouvillian<T>,
}

/// Split one drive period into constant-Hamiltonian pieces.
pub fn period_pieces<T: Real>(cfg: &ModelConfig<T>, diss: &DissipatorSpec<T>) -> Result<Vec<Piece<T>>> {
    let tau = cfg.period();
    let mut bounds = cfg.breakpoints();
    bounds.push(tau);
    let mut pieces = Vec::with_capacity(bounds.len() - 1);
    for w in bounds.windows(2) {
        let (start, end) = (w[0], w[1]);
        let h = cfg.hamiltonian_at((start + end) * r(0.5));
        pieces.push(Piece { start, duration: end - start, liouvillian: Liouvillian::new(&h, diss)? });
    }
    Ok(pieces)
}

/// Exact propagation through `n_periods` drive periods, applying
/// `exp(ℒ Δt)` on each constant-Hamiltonian piece. Samples are stored at
/// every piece boundary.
pub fn propagate_piecewise<T: Real>(
    cfg: &ModelConfig<T>,
    diss: &DissipatorSpec<T>,
    rho0: &DensityMatrix<T>,
    n_periods: usize,
) -> Result<Trajectory<T>> {
    if rho0.dim() != cfg.dim() {
        return Err(SimError::DimensionMismatch { expected: cfg.dim(), got: rho0.dim() });
    }
    let tau = cfg.period();
    let pieces = period_pieces(cfg, diss)?;
    let propagators: Vec<CMat<T>> =
        pieces.iter().map(|p| p.liouvillian.propagator(p.duration)).collect();

    let mut v = vectorize(rho0.matrix());
    let dim = cfg.dim();
    let mut times = vec![T::zero()];
    let mut states = vec![rho0.clone()];
    for k in 0..n_periods {
        let period_start = r::<T>(k as f64) * tau;
        for (piece, prop) in pieces.iter().zip(&propagators) {
            v = prop * v;
            let mut dm = DensityMatrix::new_unchecked(unvectorize(&v, dim));
            dm.project();
            v = vectorize(dm.matrix());
            let boundary = piece.start + piece.duration;
            times.push(period_start + boundary);
            states.push(dm);
        }
        if states.last().unwrap().min_eigenvalue() < r(-1e-6) {
            return Err(SimError::Unstable(format!("positivity violated in period {}", k + 1)));
        }
    }
    Ok(Trajectory {
        times,
        states,
        max_trace_defect: T::zero(),
        fingerprint: fingerprint(cfg, diss),
    })
}

/// Find the first period whose stroboscopic state agrees with the previous
/// one to `tol` (max-abs entry difference); returns that period's index and
/// all trajectory samples inside it.
pub fn detect_ness<T: Real>(
    traj: &Trajectory<T>,
    tau: T,
    tol: T,
) -> Result<(usize, Vec<(T, DensityMatrix<T>)>)> {
    if traj.is_empty() {
        return Err(SimError::EmptySamples);
    }
    let near = |t: T, target: T| (t - target).abs() < tau * r(1e-9);
    // indices of samples sitting exactly on period boundaries
    let mut strobe: Vec<(usize, usize)> = Vec::new(); // (period number, sample index)
    for (idx, &t) in traj.times.iter().enumerate() {
        let k = (t / tau).round();
        let k_usize = num_traits::ToPrimitive::to_usize(&k).unwrap_or(0);
        if near(t, k * tau) {
            strobe.push((k_usize, idx));
        }
    }
    if strobe.len() < 4 {
        return Err(SimError::InvalidStep(
            "trajectory must cover at least 3 periods with boundary-aligned samples".into(),
        ));
    }
    let mut last_residual = T::zero();
    for w in strobe.windows(2) {
        let (k_prev, i_prev) = w[0];
        let (k, i) = w[1];
        if k != k_prev + 1 {
            continue;
        }
        let diff = max_abs(&(traj.states[i].matrix() - traj.states[i_prev].matrix()));
        last_residual = diff;
        if diff <= tol {
            let start = r::<T>(k_prev as f64) * tau;
            let end = r::<T>(k as f64) * tau;
            let cycle = traj
                .times
                .iter()
                .zip(&traj.states)
                .filter(|(&t, _)| t >= start - tau * r(1e-9) && t <= end + tau * r(1e-9))
                .map(|(&t, s)| (t, s.clone()))
                .collect();
            return Ok((k, cycle));
        }
    }
    Err(SimError::NotConverged {
        periods: strobe.last().map(|&(k, _)| k).unwrap_or(0),
        residual: num_traits::ToPrimitive::to_f64(&last_residual).unwrap_or(f64::NAN),
    })
}

/// One NESS drive cycle sampled on a uniform grid.
#[derive(Debug, Clone)]
pub struct NessCycle<T> {
    /// First period at which the stroboscopic Cauchy criterion was met.
    pub period_index: usize,
    /// Sample times relative to the period start, uniform, length `n`.
    pub times: Vec<T>,
    pub states: Vec<DensityMatrix<T>>,
}

impl<T: Real> NessCycle<T> {
    pub fn im_rho10(&self) -> Vec<T> {
        self.states.iter().map(|s| s.rho10().im).collect()
    }

    /// Entrywise time average of the cycle.
    pub fn mean_state(&self) -> CMat<T> {
        let dim = self.states[0].dim();
        let mut acc = CMat::<T>::zeros(dim, dim);
        for s in &self.states {
            acc += s.matrix();
        }
        acc.scale(T::one() / r(self.states.len() as f64))
    }
}

/// Drive the system from the ground state to its NESS with the exact
/// period map, then sample one period at `samples_per_period` uniform
/// points. Convergence is the stroboscopic Cauchy criterion at `tol`.
pub fn ness_cycle<T: Real>(
    cfg: &ModelConfig<T>,
    diss: &DissipatorSpec<T>,
    samples_per_period: usize,
    tol: T,
    max_periods: usize,
) -> Result<NessCycle<T>> {
    if samples_per_period == 0 {
        return Err(SimError::EmptySamples);
    }
    let tau = cfg.period();
    let dim = cfg.dim();
    let pieces = period_pieces(cfg, diss)?;
    let period_map = pieces
        .iter()
        .fold(CMat::<T>::identity(dim * dim, dim * dim), |acc, p| {
            p.liouvillian.propagator(p.duration) * acc
        });

    let mut v = vectorize(DensityMatrix::<T>::ground_state(dim).matrix());
    let mut period_index = None;
    for k in 1..=max_periods {
        let next = &period_map * &v;
        let diff = v
            .iter()
            .zip(next.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(T::zero(), |m, x| if x > m { x } else { m });
        v = next;
        if diff <= tol {
            period_index = Some(k);
            break;
        }
    }
    let Some(period_index) = period_index else {
        return Err(SimError::NotConverged { periods: max_periods, residual: f64::NAN });
    };

    // walk one period, caching exp(ℒ Δt) per (piece, quantized Δt)
    let n = samples_per_period;
    let sample_dt = tau / r(n as f64);
    let tol_t = tau * r(1e-12);
    let mut events: Vec<T> = (1..n).map(|j| r::<T>(j as f64) * sample_dt).collect();
    for p in pieces.iter().skip(1) {
        events.push(p.start);
    }
    events.push(tau);
    events.sort_by(|a, b| a.partial_cmp(b).expect("event times are finite"));
    events.dedup_by(|a, b| (*a - *b).abs() <= tol_t);

    let mut cache: HashMap<(usize, i64), CMat<T>> = HashMap::new();
    let mut times = Vec::with_capacity(n);
    let mut states = Vec::with_capacity(n);
    let record = |t: T, v: &CVec<T>, times: &mut Vec<T>, states: &mut Vec<DensityMatrix<T>>| -> Result<()> {
        let mut dm = DensityMatrix::new_unchecked(unvectorize(v, dim));
        dm.project();
        if dm.min_eigenvalue() < r(-1e-6) {
            return Err(SimError::Unstable("NESS sample lost positivity".into()));
        }
        times.push(t);
        states.push(dm);
        Ok(())
    };
    record(T::zero(), &v, &mut times, &mut states)?;

    let mut t = T::zero();
    for e in events {
        let dt = e - t;
        let mid = (t + e) * r(0.5);
        let pi = pieces
            .iter()
            .position(|p| mid >= p.start && mid < p.start + p.duration)
            .expect("midpoint lies inside some piece");
        let key = (pi, num_traits::ToPrimitive::to_i64(&(dt / tau * r(1e12)).round()).unwrap_or(0));
        let prop = cache
            .entry(key)
            .or_insert_with(|| pieces[pi].liouvillian.propagator(dt));
        v = &*prop * &v;
        t = e;
        let j = (t / sample_dt).round();
        if (t - j * sample_dt).abs() <= tol_t && t < tau - tol_t {
            record(t, &v, &mut times, &mut states)?;
        }
    }
    debug_assert_eq!(states.len(), n);
    Ok(NessCycle { period_index, times, states })
}
