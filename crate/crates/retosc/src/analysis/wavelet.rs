//! Continuous wavelet transform with the analytic generalized Morse
//! wavelet, applied per scale by frequency-domain multiplication.

use crate::error::AnalysisError;
use crate::scalar::Real;
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::Serialize;
use std::sync::Arc;

/// Generalized Morse wavelet, frequency-domain form
/// `Psi(w) = a w^beta exp(-w^gamma)` for `w > 0`, zero otherwise, with
/// `beta = P^2 / gamma` (`P^2` the time-bandwidth product) and `a` chosen
/// so the peak value is 2 (analytic convention: a unit-amplitude tone
/// produces a unit-magnitude ridge).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MorseWavelet<T> {
    pub gamma: T,
    pub beta: T,
}

impl<T: Real> MorseWavelet<T> {
    pub fn new(gamma: T, time_bandwidth: T) -> Result<Self, AnalysisError> {
        if !(gamma > T::zero()) || !(time_bandwidth > T::zero()) {
            return Err(AnalysisError::BadParameter(
                "gamma and time-bandwidth must be positive".into(),
            ));
        }
        Ok(Self {
            gamma,
            beta: time_bandwidth / gamma,
        })
    }

    /// Angular frequency of the wavelet's spectral peak.
    pub fn peak_omega(&self) -> T {
        (self.beta / self.gamma).powf(self.gamma.recip())
    }

    /// Peak-normalized frequency response at angular frequency `w >= 0`.
    pub fn response(&self, w: T) -> T {
        if w <= T::zero() {
            return T::zero();
        }
        let wc = self.peak_omega();
        // log-space to dodge overflow of w^beta at large beta
        let ln = self.beta * (w.ln() - wc.ln()) - w.powf(self.gamma) + wc.powf(self.gamma);
        T::lit(2.0) * ln.exp()
    }
}

/// Magnitude scalogram on a log-spaced frequency grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scalogram<T> {
    pub times: Vec<T>,
    /// Analyzed frequencies, cycles per time unit, ascending.
    pub frequencies: Vec<T>,
    /// `magnitude[time][scale]`.
    pub magnitude: Vec<Vec<T>>,
    pub gamma: T,
    pub time_bandwidth: T,
}

/// Continuous wavelet transform of the mean-removed series.
///
/// Scales are log-spaced so that the wavelet peak sweeps `band`
/// (min, max frequency in cycles per time unit).
pub fn cwt_scalogram<T: Real>(
    series: &[T],
    dt: T,
    gamma: T,
    time_bandwidth: T,
    n_scales: usize,
    band: (T, T),
) -> Result<Scalogram<T>, AnalysisError> {
    let n = series.len();
    if n < 16 {
        return Err(AnalysisError::TooShort { need: 16, got: n });
    }
    if n_scales < 2 {
        return Err(AnalysisError::BadParameter("need at least 2 scales".into()));
    }
    let (f_lo, f_hi) = band;
    let nyquist = (T::lit(2.0) * dt).recip();
    if !(f_lo > T::zero()) || f_lo >= f_hi || f_hi > nyquist {
        return Err(AnalysisError::DegenerateBand);
    }
    let wavelet = MorseWavelet::new(gamma, time_bandwidth)?;

    let mean = series.iter().copied().sum::<T>() / T::from_usize_(n);
    let mut planner = FftPlanner::new();
    let forward = planner.plan_fft_forward(n);
    let inverse: Arc<dyn rustfft::Fft<T>> = planner.plan_fft_inverse(n);

    let mut spectrum: Vec<Complex<T>> = series
        .iter()
        .map(|&x| Complex::new(x - mean, T::zero()))
        .collect();
    forward.process(&mut spectrum);

    let frequencies: Vec<T> = (0..n_scales)
        .map(|j| {
            let t = T::from_usize_(j) / T::from_usize_(n_scales - 1);
            f_lo * (f_hi / f_lo).powf(t)
        })
        .collect();

    let wc = wavelet.peak_omega();
    let two_pi = T::lit(2.0) * T::PI();
    let nf = T::from_usize_(n);

    // One filtered inverse transform per scale; columns are independent.
    let columns: Vec<Vec<T>> = frequencies
        .par_iter()
        .map(|&fj| {
            let scale = wc / (two_pi * fj);
            let mut buf: Vec<Complex<T>> = vec![Complex::new(T::zero(), T::zero()); n];
            let top = n / 2;
            for (k, slot) in buf.iter_mut().enumerate().take(top + 1) {
                let wk = two_pi * T::from_usize_(k) / (nf * dt);
                let h = wavelet.response(scale * wk);
                *slot = spectrum[k] * h;
            }
            inverse.process(&mut buf);
            buf.iter().map(|c| c.norm() / nf).collect()
        })
        .collect();

    let magnitude: Vec<Vec<T>> = (0..n)
        .map(|t| columns.iter().map(|col| col[t]).collect())
        .collect();

    Ok(Scalogram {
        times: (0..n).map(|i| dt * T::from_usize_(i)).collect(),
        frequencies,
        magnitude,
        gamma,
        time_bandwidth,
    })
}

impl<T: Real> Scalogram<T> {
    /// Scale index with the largest magnitude at time index `t`.
    pub fn ridge_at(&self, t: usize) -> usize {
        let row = &self.magnitude[t];
        let mut best = 0;
        for (j, &v) in row.iter().enumerate() {
            if v > row[best] {
                best = j;
            }
        }
        best
    }
}
