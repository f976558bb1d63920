//! Simulation of square-wave-driven dissipative two- and three-level systems.
//!
//! The crate computes nonequilibrium steady states (NESS) of periodically
//! driven Lindblad dynamics three independent ways (fixed-step integration,
//! exact piecewise-constant propagation, and high-frequency-expansion
//! analytics) and turns the results into switching figures of merit
//! (OFF/ON power ratio, pulse-mismatch robustness, absorption spectra).
//!
//! Units convention: every config-facing frequency or rate is a *cyclic*
//! value (the `x/(2π)` numbers); everything inside the library is *angular*
//! (`angular = 2π · cyclic`). Time is dimensionless throughout.

pub mod config;
pub mod drive;
pub mod floquet;
pub mod lindblad;
pub mod models;
pub mod runner;
pub mod switching;

use nalgebra::{DMatrix, DVector, Normed, RealField};
use num_complex::Complex;
use num_traits::{FromPrimitive, ToPrimitive};

/// Scalar type the whole engine is generic over: `f32` or `f64`.
pub trait Real: RealField + FromPrimitive + ToPrimitive + Copy {}
impl<T: RealField + FromPrimitive + ToPrimitive + Copy> Real for T {}

pub type CMat<T> = DMatrix<Complex<T>>;
pub type CVec<T> = DVector<Complex<T>>;

pub type CMat32 = CMat<f32>;
pub type CMat64 = CMat<f64>;
pub type C32 = Complex<f32>;
pub type C64 = Complex<f64>;

/// Lossless-enough conversion from an `f64` literal into the working scalar.
pub(crate) fn r<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal must be representable in the scalar type")
}

pub(crate) fn c<T: Real>(re: f64, im: f64) -> Complex<T> {
    Complex::new(r(re), r(im))
}

/// Angular from cyclic: `2π x`.
pub fn angular<T: Real>(cyclic: T) -> T {
    T::two_pi() * cyclic
}

/// Cyclic from angular: `x / 2π`.
pub fn cyclic<T: Real>(angular: T) -> T {
    angular / T::two_pi()
}

/// Largest absolute entry of a complex matrix.
pub fn max_abs<T: Real>(m: &CMat<T>) -> T {
    m.iter()
        .map(|z| z.norm())
        .fold(T::zero(), |a, b| if b > a { b } else { a })
}

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid envelope: {0}")]
    InvalidEnvelope(String),
    #[error("series undefined for deformed envelope")]
    SeriesUndefined,
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid density matrix: {0}")]
    InvalidState(String),
    #[error("steady state not unique")]
    DegenerateSteadyState,
    #[error("resonant degeneracy in the effective-Hamiltonian spectrum")]
    ResonantDegeneracy,
    #[error("integration unstable: {0}")]
    Unstable(String),
    #[error("not converged after {periods} periods (residual {residual})")]
    NotConverged { periods: usize, residual: f64 },
    #[error("invalid step size: {0}")]
    InvalidStep(String),
    #[error("empty sample set")]
    EmptySamples,
}

pub type Result<V> = std::result::Result<V, SimError>;
