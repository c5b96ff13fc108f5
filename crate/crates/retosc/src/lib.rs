//! Numerical laboratory for a damped harmonic oscillator driven by a
//! retarded potential with state-dependent Gaussian delay:
//!
//! ```text
//! m x''(t) + mu x'(t) + k x(t) + alpha x(t - tau(x)) = 0,
//! tau(x) = tau0 exp(-x^2 / (2 sigma^2)),    x(t) = A sin(omega t + phi) for t <= 0
//! ```
//!
//! The crate integrates the model with a fixed-step RK4 scheme and dense
//! cubic Hermite output, reduces it to a Liénard system for small delays,
//! sweeps bifurcation diagrams of the maxima map, classifies basins of
//! attraction over the history plane, and provides energy, spectral,
//! wavelet and largest-Lyapunov-exponent diagnostics.
//!
//! All numerics are generic over the scalar type via [`scalar::Real`]
//! (`f32` or `f64`); the `*64` aliases below fix the common choice.

pub mod analysis;
pub mod basins;
pub mod dde;
pub mod error;
pub mod lienard;
pub mod params;
pub mod rng;
pub mod scalar;
pub mod sweep;
pub mod trajectory;

pub use error::{AnalysisError, IntegrateError, InvalidInput, LienardError};
pub use params::{HistorySpec, OscillatorParams, SolverConfig};
pub use scalar::Real;
pub use trajectory::Trajectory;

/// `f64` instantiations of the core types.
pub type Params64 = params::OscillatorParams<f64>;
pub type History64 = params::HistorySpec<f64>;
pub type Solver64 = params::SolverConfig<f64>;
pub type Trajectory64 = trajectory::Trajectory<f64>;
pub type Diagram64 = sweep::BifurcationDiagram<f64>;
pub type Library64 = basins::AttractorLibrary<f64>;
pub type BasinGrid64 = basins::BasinGrid<f64>;
