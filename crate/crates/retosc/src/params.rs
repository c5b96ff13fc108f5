//! Model parameters, history functions and solver configuration.

use crate::error::InvalidInput;
use crate::scalar::Real;
use serde::{Deserialize, Serialize};

/// Constants of the retarded oscillator
/// `m x'' + mu x' + k x + alpha x(t - tau(x)) = 0` with the Gaussian
/// state-dependent delay `tau(x) = tau0 exp(-x^2 / (2 sigma^2))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillatorParams<T> {
    /// Oscillator mass (1 by default).
    pub mass: T,
    /// Linear damping rate (mu).
    pub damping: T,
    /// External spring stiffness (k).
    pub stiffness: T,
    /// Signed strength of the retarded potential (alpha).
    pub feedback: T,
    /// Maximum time delay, attained at x = 0 (tau0, >= 0).
    pub max_delay: T,
    /// Width of the Gaussian delay kernel (sigma, > 0).
    pub kernel_width: T,
}

impl<T: Real> OscillatorParams<T> {
    /// Parameters with unit mass and the default kernel width 1/sqrt(2).
    pub fn new(damping: T, stiffness: T, feedback: T, max_delay: T) -> Self {
        Self {
            mass: T::one(),
            damping,
            stiffness,
            feedback,
            max_delay,
            kernel_width: T::FRAC_1_SQRT_2(),
        }
    }

    pub fn with_kernel_width(mut self, sigma: T) -> Self {
        self.kernel_width = sigma;
        self
    }

    pub fn with_mass(mut self, mass: T) -> Self {
        self.mass = mass;
        self
    }

    pub fn validate(&self) -> Result<(), InvalidInput> {
        if !(self.mass > T::zero()) {
            return Err(InvalidInput::NonPositiveMass(self.mass.as_f64()));
        }
        if !(self.kernel_width > T::zero()) {
            return Err(InvalidInput::NonPositiveSigma(self.kernel_width.as_f64()));
        }
        if !(self.max_delay >= T::zero()) {
            return Err(InvalidInput::NegativeMaxDelay(self.max_delay.as_f64()));
        }
        Ok(())
    }

    /// State-dependent delay `tau(x) = tau0 exp(-x^2 / (2 sigma^2))`.
    ///
    /// Total, even in `x`, with values in `[0, tau0]`.
    #[inline]
    pub fn delay_at(&self, x: T) -> T {
        let s = x / self.kernel_width;
        self.max_delay * (-s * s / T::lit(2.0)).exp()
    }

    /// True when the model degenerates to a linear damped oscillator
    /// (no feedback or no retardation).
    pub fn is_effectively_linear(&self) -> bool {
        self.feedback == T::zero() || self.max_delay == T::zero()
    }
}

/// Sinusoidal pre-history `x(t) = A sin(omega t + phi)` for `t <= 0`,
/// with `y = x'` defined consistently.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistorySpec<T> {
    pub amplitude: T,
    pub frequency: T,
    pub phase: T,
}

impl<T: Real> HistorySpec<T> {
    pub fn new(amplitude: T, frequency: T, phase: T) -> Self {
        Self {
            amplitude,
            frequency,
            phase,
        }
    }

    /// Evaluate the history at `t <= 0`; rejects positive times.
    pub fn eval(&self, t: T) -> Result<(T, T), InvalidInput> {
        if t > T::zero() {
            return Err(InvalidInput::HistoryDomain(t.as_f64()));
        }
        Ok(self.eval_extended(t))
    }

    /// The same sinusoid without the domain check. The integrator uses this
    /// to extend the history smoothly into the first step when a short delay
    /// looks back past t = 0 but no completed segment exists yet.
    #[inline]
    pub(crate) fn eval_extended(&self, t: T) -> (T, T) {
        let arg = self.frequency * t + self.phase;
        (
            self.amplitude * arg.sin(),
            self.amplitude * self.frequency * arg.cos(),
        )
    }

    /// The mirror history (phase shifted by pi), generating the reflected
    /// trajectory `(-x, -y)`.
    pub fn mirrored(&self) -> Self {
        Self {
            amplitude: self.amplitude,
            frequency: self.frequency,
            phase: self.phase + T::PI(),
        }
    }
}

/// Fixed-step solver configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig<T> {
    /// Step size (default 0.01).
    pub dt: T,
    /// Final time of integration.
    pub t_end: T,
    /// Fraction of the series discarded before analysis (default 0.7).
    pub transient_fraction: T,
    /// Store every `record_stride`-th node (>= 1).
    pub record_stride: usize,
    /// Re-run a step once with its own fresh interpolant whenever a delayed
    /// lookup landed inside that step (verification aid; off by default).
    pub refine_overlap: bool,
}

impl<T: Real> SolverConfig<T> {
    pub fn new(t_end: T) -> Self {
        Self {
            dt: T::lit(0.01),
            t_end,
            transient_fraction: T::lit(0.7),
            record_stride: 1,
            refine_overlap: false,
        }
    }

    pub fn with_dt(mut self, dt: T) -> Self {
        self.dt = dt;
        self
    }

    pub fn with_transient_fraction(mut self, f: T) -> Self {
        self.transient_fraction = f;
        self
    }

    pub fn with_record_stride(mut self, stride: usize) -> Self {
        self.record_stride = stride;
        self
    }

    pub fn with_refine_overlap(mut self, on: bool) -> Self {
        self.refine_overlap = on;
        self
    }

    pub fn validate(&self) -> Result<(), InvalidInput> {
        if !(self.dt > T::zero()) {
            return Err(InvalidInput::NonPositiveDt(self.dt.as_f64()));
        }
        if !(self.t_end > T::zero()) {
            return Err(InvalidInput::NonPositiveTEnd(self.t_end.as_f64()));
        }
        if !(self.transient_fraction >= T::zero() && self.transient_fraction < T::one()) {
            return Err(InvalidInput::BadTransientFraction(
                self.transient_fraction.as_f64(),
            ));
        }
        if self.record_stride == 0 {
            return Err(InvalidInput::ZeroStride);
        }
        Ok(())
    }

    /// Number of integration steps (rounded to the closest whole step).
    pub fn n_steps(&self) -> usize {
        let n = (self.t_end / self.dt).as_f64().round();
        n.max(1.0) as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn delay_at_zero_is_tau0() {
        let p = OscillatorParams::new(0.1, 1.0, 0.9, 5.87);
        assert_eq!(p.delay_at(0.0), 5.87);
    }

    #[test]
    fn delay_is_even_and_bounded() {
        let p = OscillatorParams::new(0.1, 1.0, 0.5, 3.0);
        for &x in &[0.3, 1.0, 2.5, 7.0] {
            let v = p.delay_at(x);
            assert_eq!(v, p.delay_at(-x));
            assert!(v >= 0.0 && v <= p.max_delay);
        }
    }

    #[test]
    fn delay_closed_form() {
        // tau0 = 1, sigma = 1/sqrt(2): tau(1) = e^-1
        let p = OscillatorParams::new(0.1, 1.0, 0.5, 1.0);
        assert_relative_eq!(p.delay_at(1.0), 0.36787944117144233, max_relative = 1e-15);
    }

    #[test]
    fn history_values() {
        let h = HistorySpec::new(0.0, 2.0, 1.0);
        assert_eq!(h.eval(-3.0).unwrap(), (0.0, 0.0));

        let h = HistorySpec::new(1.0, 1.0, 0.0);
        let (x, y) = h.eval(0.0).unwrap();
        assert_eq!(x, 0.0);
        assert_eq!(y, 1.0);

        // A=0.43, omega=2, phi=pi/2 at t=-1
        let h = HistorySpec::new(0.43, 2.0, std::f64::consts::FRAC_PI_2);
        let (x, y) = h.eval(-1.0).unwrap();
        assert_relative_eq!(x, 0.43 * (-2.0f64 + std::f64::consts::FRAC_PI_2).sin(), max_relative = 1e-15);
        assert_relative_eq!(y, 0.86 * (-2.0f64 + std::f64::consts::FRAC_PI_2).cos(), max_relative = 1e-15);
    }

    #[test]
    fn history_rejects_future() {
        let h = HistorySpec::new(1.0, 1.0, 0.0);
        assert!(matches!(
            h.eval(0.5),
            Err(InvalidInput::HistoryDomain(_))
        ));
    }

    #[test]
    fn validation_errors() {
        let mut p = OscillatorParams::new(0.1, 1.0, 0.5, 1.0);
        p.max_delay = -1.0;
        assert!(p.validate().is_err());
        p.max_delay = 1.0;
        p.kernel_width = 0.0;
        assert!(p.validate().is_err());

        let mut c = SolverConfig::new(10.0);
        assert!(c.validate().is_ok());
        c.transient_fraction = 1.0;
        assert!(c.validate().is_err());
        c.transient_fraction = 0.7;
        c.record_stride = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn step_count_rounding() {
        let c: SolverConfig<f64> = SolverConfig::new(2000.0);
        assert_eq!(c.n_steps(), 200_000);
    }
}
