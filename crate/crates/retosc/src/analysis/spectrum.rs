//! Single-taper periodogram power spectra.

use crate::error::AnalysisError;
use crate::scalar::Real;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::Serialize;

/// Taper applied before the transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum WindowKind {
    /// Hann taper (default; suppresses leakage).
    Hann,
    /// No taper; mostly useful for debugging.
    Rectangular,
}

/// One-sided power spectrum.
///
/// Power is normalized so the total over all bins equals the windowed
/// signal's mean square (discrete Parseval identity).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum<T> {
    /// Frequencies in cycles per time unit.
    pub frequencies: Vec<T>,
    pub power: Vec<T>,
    pub window_kind: WindowKind,
}

/// Hann-tapered periodogram of the mean-removed series.
pub fn power_spectrum<T: Real>(
    series: &[T],
    dt: T,
    window_kind: WindowKind,
) -> Result<Spectrum<T>, AnalysisError> {
    let n = series.len();
    if n < 64 {
        return Err(AnalysisError::TooShort { need: 64, got: n });
    }

    let mean = series.iter().copied().sum::<T>() / T::from_usize_(n);
    let mut buf: Vec<Complex<T>> = series
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let w = match window_kind {
                WindowKind::Hann => {
                    let phase =
                        T::lit(2.0) * T::PI() * T::from_usize_(i) / T::from_usize_(n);
                    T::lit(0.5) * (T::one() - phase.cos())
                }
                WindowKind::Rectangular => T::one(),
            };
            Complex::new((x - mean) * w, T::zero())
        })
        .collect();

    FftPlanner::new().plan_fft_forward(n).process(&mut buf);

    let n_bins = n / 2 + 1;
    let nf = T::from_usize_(n);
    let mut frequencies = Vec::with_capacity(n_bins);
    let mut power = Vec::with_capacity(n_bins);
    for k in 0..n_bins {
        frequencies.push(T::from_usize_(k) / (nf * dt));
        let mag2 = buf[k].norm_sqr();
        // One-sided fold: interior bins carry the conjugate half too.
        let fold = if k == 0 || (n % 2 == 0 && k == n / 2) {
            T::one()
        } else {
            T::lit(2.0)
        };
        power.push(fold * mag2 / (nf * nf));
    }

    Ok(Spectrum {
        frequencies,
        power,
        window_kind,
    })
}

impl<T: Real> Spectrum<T> {
    /// Total power (equals the windowed signal's mean square).
    pub fn total_power(&self) -> T {
        self.power.iter().copied().sum()
    }

    /// Frequency of the strongest bin.
    pub fn dominant_frequency(&self) -> T {
        let mut best = 0;
        for k in 1..self.power.len() {
            if self.power[k] > self.power[best] {
                best = k;
            }
        }
        self.frequencies[best]
    }

    /// Frequency resolution (bin spacing).
    pub fn bin_width(&self) -> T {
        if self.frequencies.len() > 1 {
            self.frequencies[1] - self.frequencies[0]
        } else {
            T::zero()
        }
    }

    /// Power at the bin closest to `f`.
    pub fn power_at(&self, f: T) -> T {
        let bw = self.bin_width();
        if bw == T::zero() {
            return self.power[0];
        }
        let k = (f / bw).as_f64().round().max(0.0) as usize;
        self.power[k.min(self.power.len() - 1)]
    }
}

/// Local spectral peaks sorted by descending power, as (frequency, power).
pub fn spectral_peaks<T: Real>(spectrum: &Spectrum<T>, max_peaks: usize) -> Vec<(T, T)> {
    let p = &spectrum.power;
    let mut peaks: Vec<(T, T)> = (1..p.len().saturating_sub(1))
        .filter(|&k| p[k - 1] < p[k] && p[k] >= p[k + 1])
        .map(|k| (spectrum.frequencies[k], p[k]))
        .collect();
    peaks.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    peaks.truncate(max_peaks);
    peaks
}
