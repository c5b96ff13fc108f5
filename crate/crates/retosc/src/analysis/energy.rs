//! Lyapunov energy function and orbit-averaged energy statistics.

use crate::error::AnalysisError;
use crate::scalar::Real;
use crate::trajectory::Trajectory;
use serde::Serialize;

/// `E(x, y) = (x^2 + y^2) / 2`.
#[inline]
pub fn energy<T: Real>(x: T, y: T) -> T {
    (x * x + y * y) / T::lit(2.0)
}

/// Time-averaged energy and shell excursion bounds over a window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyStats<T> {
    /// Trapezoidal time-average of E.
    pub mean: T,
    pub min: T,
    pub max: T,
    /// Window used, as (t_start, t_end).
    pub window: (T, T),
}

/// Energy statistics over the post-transient window of a trajectory.
pub fn orbit_energy_stats<T: Real>(
    traj: &Trajectory<T>,
    transient_fraction: T,
) -> Result<EnergyStats<T>, AnalysisError> {
    let tail = traj.tail(transient_fraction);
    if tail.len() < 2 {
        return Err(AnalysisError::EmptyWindow);
    }
    let es: Vec<T> = tail.iter().map(|s| energy(s[0], s[1])).collect();
    let n = es.len();
    let sum: T = es.iter().copied().sum();
    let mean = (sum - (es[0] + es[n - 1]) / T::lit(2.0)) / T::from_usize_(n - 1);
    let min = es.iter().copied().fold(T::infinity(), T::min);
    let max = es.iter().copied().fold(T::neg_infinity(), T::max);
    let cut = traj.transient_cut(transient_fraction);
    Ok(EnergyStats {
        mean,
        min,
        max,
        window: (traj.time_at(cut), traj.end_time()),
    })
}
