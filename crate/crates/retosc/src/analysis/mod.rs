//! Time-series diagnostics: energy statistics, periodogram power spectra,
//! Morse-wavelet scalograms, delay embedding and Rosenstein LLE estimation.

mod embed;
mod energy;
mod lle;
mod spectrum;
mod wavelet;

pub use embed::{embed, nearest_neighbors, Embedding};
pub use energy::{energy, orbit_energy_stats, EnergyStats};
pub use lle::{rosenstein_lle, LleConfig, LleResult};
pub use spectrum::{power_spectrum, spectral_peaks, Spectrum, WindowKind};
pub use wavelet::{cwt_scalogram, MorseWavelet, Scalogram};
