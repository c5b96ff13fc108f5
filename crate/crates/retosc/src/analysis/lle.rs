//! Largest Lyapunov exponent from a scalar series (Rosenstein's method):
//! embed, pair every point with its nearest neighbour outside a temporal
//! window, then fit the initial linear region of the mean log-divergence.

use super::embed::{embed, nearest_neighbors};
use crate::error::AnalysisError;
use crate::scalar::Real;
use serde::Serialize;

/// Embedding and tracking parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LleConfig {
    pub embed_dim: usize,
    pub embed_lag: usize,
    /// Theiler window: neighbours must be more than this many samples away.
    pub mean_period: usize,
    /// Divergence-tracking horizon in samples.
    pub max_iter: usize,
}

impl Default for LleConfig {
    fn default() -> Self {
        Self {
            embed_dim: 3,
            embed_lag: 10,
            mean_period: 35,
            max_iter: 1500,
        }
    }
}

impl LleConfig {
    pub fn validate(&self) -> Result<(), AnalysisError> {
        if self.embed_dim < 2 || self.embed_lag == 0 || self.mean_period == 0 || self.max_iter == 0
        {
            return Err(AnalysisError::BadParameter(
                "embed_dim >= 2 and positive lag, mean period, max iterations required".into(),
            ));
        }
        Ok(())
    }
}

/// Estimation output: the exponent, the divergence curve and the fit used.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LleResult<T> {
    /// Slope of the fitted linear region per unit time.
    pub lambda_max: T,
    /// Mean log-divergence at sample offsets 0..len.
    pub divergence: Vec<T>,
    /// Pairs contributing to each curve entry.
    pub counts: Vec<usize>,
    /// Fitted window [start, end] (sample offsets) and its R^2.
    pub fit_start: usize,
    pub fit_end: usize,
    pub fit_r2: T,
    /// Slope per sample (lambda_max = slope / dt).
    pub slope_per_sample: T,
    /// Sample spacing of the input series.
    pub dt: T,
}

/// Minimum fit length accepted before falling back to the fixed window.
const MIN_FIT_LEN: usize = 10;
const FIT_R2_TARGET: f64 = 0.98;

/// Rosenstein LLE of a uniformly sampled scalar series.
pub fn rosenstein_lle<T: Real>(
    series: &[T],
    dt: T,
    cfg: &LleConfig,
) -> Result<LleResult<T>, AnalysisError> {
    cfg.validate()?;
    let emb = embed(series, cfg.embed_dim, cfg.embed_lag)?;
    let n = emb.len();
    if n < cfg.mean_period + MIN_FIT_LEN {
        return Err(AnalysisError::NoNeighbours);
    }
    let nn = nearest_neighbors(&emb, cfg.mean_period);
    if nn.iter().all(Option::is_none) {
        return Err(AnalysisError::NoNeighbours);
    }

    let horizon = cfg.max_iter.min(n.saturating_sub(1));
    let mut sums = vec![T::zero(); horizon + 1];
    let mut counts = vec![0usize; horizon + 1];
    for i in 0..n {
        let Some(j) = nn[i] else { continue };
        let steps = horizon.min(n - 1 - i.max(j));
        for k in 0..=steps {
            let d = emb.distance(i + k, j + k);
            if d > T::zero() {
                sums[k] += d.ln();
                counts[k] += 1;
            }
        }
    }

    // Truncate at the first empty offset so the curve stays contiguous.
    let mut len = sums.len();
    for (k, &c) in counts.iter().enumerate() {
        if c == 0 {
            len = k;
            break;
        }
    }
    if len < MIN_FIT_LEN + 1 {
        return Err(AnalysisError::NoNeighbours);
    }
    let divergence: Vec<T> = (0..len).map(|k| sums[k] / T::from_usize_(counts[k])).collect();
    counts.truncate(len);

    let (fit_start, fit_end, slope, r2) = select_fit(&divergence, cfg.max_iter);
    let lambda_max = slope / dt;

    Ok(LleResult {
        lambda_max,
        divergence,
        counts,
        fit_start,
        fit_end,
        fit_r2: r2,
        slope_per_sample: slope,
        dt,
    })
}

/// Least-squares slope and R^2 of `ys[a..=b]` against the sample index.
fn line_fit<T: Real>(ys: &[T], a: usize, b: usize) -> (T, T) {
    let n = T::from_usize_(b - a + 1);
    let mut sx = T::zero();
    let mut sy = T::zero();
    let mut sxx = T::zero();
    let mut sxy = T::zero();
    let mut syy = T::zero();
    for (i, &y) in ys[a..=b].iter().enumerate() {
        let x = T::from_usize_(a + i);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
    }
    let denom = n * sxx - sx * sx;
    if denom == T::zero() {
        return (T::zero(), T::one());
    }
    let slope = (n * sxy - sx * sy) / denom;
    let ss_tot = syy - sy * sy / n;
    if ss_tot <= T::lit(1e-30) {
        // flat curve: a zero-slope line is a perfect explanation
        return (slope, T::one());
    }
    let ss_reg = slope * slope * denom / n;
    let r2 = (ss_reg / ss_tot).min(T::one());
    (slope, r2)
}

/// Auto-select the linear region: the longest window `[i1, i2]`, `i1 >= 1`,
/// whose prefix keeps R^2 >= 0.98; falls back to `[1, max_iter / 5]`.
fn select_fit<T: Real>(curve: &[T], max_iter: usize) -> (usize, usize, T, T) {
    let last = curve.len() - 1;
    let mut best: Option<(usize, usize)> = None;
    let start_cap = (curve.len() / 10).clamp(1, 50);
    for i1 in 1..=start_cap {
        if i1 + MIN_FIT_LEN > last {
            break;
        }
        let mut i2_best = None;
        let mut i2 = i1 + MIN_FIT_LEN;
        while i2 <= last {
            let (_, r2) = line_fit(curve, i1, i2);
            if r2 >= T::lit(FIT_R2_TARGET) {
                i2_best = Some(i2);
                i2 += 1;
            } else {
                break;
            }
        }
        if let Some(i2) = i2_best {
            if best.map_or(true, |(a, b)| i2 - i1 > b - a) {
                best = Some((i1, i2));
            }
        }
    }
    let (a, b) = best.unwrap_or_else(|| {
        let end = (max_iter / 5).clamp(MIN_FIT_LEN, last);
        (1, end.min(last))
    });
    let (slope, r2) = line_fit(curve, a, b);
    (a, b, slope, r2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sine_series_has_near_zero_exponent() {
        let dt = 0.2;
        let series: Vec<f64> = (0..8000)
            .map(|i| (2.0 * std::f64::consts::PI * 0.15 * i as f64 * dt).sin())
            .collect();
        let cfg = LleConfig::default();
        let r = rosenstein_lle(&series, dt, &cfg).unwrap();
        assert!(
            r.lambda_max.abs() < 0.01,
            "lambda = {} (fit {}..{}, r2 {})",
            r.lambda_max,
            r.fit_start,
            r.fit_end,
            r.fit_r2
        );
    }

    #[test]
    fn scale_invariance() {
        let dt = 0.1;
        // mildly structured bounded series
        let series: Vec<f64> = (0..4000)
            .map(|i| {
                let t = i as f64 * dt;
                (1.3 * t).sin() + 0.5 * (0.37 * t + 1.0).sin()
            })
            .collect();
        let scaled: Vec<f64> = series.iter().map(|&x| 7.5 * x).collect();
        let cfg = LleConfig {
            max_iter: 300,
            ..LleConfig::default()
        };
        let a = rosenstein_lle(&series, dt, &cfg).unwrap();
        let b = rosenstein_lle(&scaled, dt, &cfg).unwrap();
        // <ln d> shifts by ln 7.5, slope unchanged
        assert!(
            (a.lambda_max - b.lambda_max).abs() < 1e-6,
            "{} vs {}",
            a.lambda_max,
            b.lambda_max
        );
        let shift = (b.divergence[0] - a.divergence[0] - 7.5f64.ln()).abs();
        assert!(shift < 1e-9, "curve offset error {shift}");
    }

    #[test]
    fn short_series_rejected() {
        let series = vec![0.0f64; 40];
        assert!(rosenstein_lle(&series, 0.1, &LleConfig::default()).is_err());
    }

    #[test]
    fn config_validation() {
        let mut cfg = LleConfig::default();
        cfg.embed_dim = 1;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn flat_fit_r2_is_one() {
        let ys = vec![2.0f64; 50];
        let (slope, r2) = line_fit(&ys, 0, 49);
        assert_eq!(slope, 0.0);
        assert_eq!(r2, 1.0);
    }
}
