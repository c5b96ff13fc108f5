//! Maxima-map bifurcation sweeps over the maximum delay.
//!
//! Each (grid point, history) cell integrates one seeded random history,
//! extracts the post-transient local maxima of `x`, and classifies the
//! asymptotic set. Cells are independent work items; the merge happens in
//! deterministic index order, so a sweep is reproducible bit-for-bit from
//! its seed regardless of thread count.

use crate::dde;
use crate::error::AnalysisError;
use crate::params::{HistorySpec, OscillatorParams, SolverConfig};
use crate::rng::SplitMix64;
use crate::scalar::Real;
use crate::trajectory::Trajectory;
use rayon::prelude::*;
use serde::Serialize;
use std::fmt;
use std::io::{self, Write};

/// Fixed-point detection threshold on the asymptotic half-range of `x`.
pub const FIXED_POINT_AMPLITUDE: f64 = 1e-3;

/// Relative clustering tolerance (fraction of the orbit's half-range).
pub const CLUSTER_RELATIVE: f64 = 0.02;

/// Absolute floor of the clustering tolerance.
pub const CLUSTER_FLOOR: f64 = 1e-3;

/// Largest cluster count still reported as periodic.
pub const MAX_PERIOD: usize = 12;

/// Threshold on |mean_x| (relative to half-range) separating the two
/// mirror branches of a symmetry-broken attractor from symmetric sets.
pub const ASYMMETRY_RELATIVE: f64 = 0.05;

/// Ratio between sorted peak amplitudes that opens a new amplitude class.
pub const CLASS_GAP_RATIO: f64 = 2.0;

/// Sorted local extrema of the post-transient series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaximaSet<T> {
    /// Extremum values, ascending, refined by quadratic interpolation.
    pub values: Vec<T>,
    /// Number of raw extrema found before refinement.
    pub count_raw: usize,
    /// Trapezoidal time-average of `x` over the window.
    pub mean_x: T,
}

pub(crate) fn extract_extrema<T: Real>(
    tail: &[[T; 2]],
    minima: bool,
) -> Result<MaximaSet<T>, AnalysisError> {
    if tail.len() < 3 {
        return Err(AnalysisError::TooShort {
            need: 3,
            got: tail.len(),
        });
    }
    let sign = if minima { -T::one() } else { T::one() };
    let xs: Vec<T> = tail.iter().map(|s| sign * s[0]).collect();

    let mut values = Vec::new();
    for i in 1..xs.len() - 1 {
        let (a, b, c) = (xs[i - 1], xs[i], xs[i + 1]);
        if a < b && b >= c {
            // Quadratic refinement through the three samples; plateaus
            // report their first sample.
            let den = a - (b + b) + c;
            let peak = if den.abs() > T::lit(1e-30) {
                let d = a - c;
                b - d * d / (T::lit(8.0) * den)
            } else {
                b
            };
            values.push(sign * peak);
        }
    }
    values.sort_unstable_by(|p, q| p.partial_cmp(q).unwrap());
    let count_raw = values.len();

    // Trapezoid average of x over the window.
    let n = tail.len();
    let sum: T = tail.iter().map(|s| s[0]).sum();
    let mean_x = (sum - (tail[0][0] + tail[n - 1][0]) / T::lit(2.0)) / T::from_usize_(n - 1);

    Ok(MaximaSet {
        values,
        count_raw,
        mean_x,
    })
}

/// Local maxima of the post-transient `x` series. A sample is a maximum iff
/// `x[i-1] < x[i] >= x[i+1]`.
pub fn extract_maxima<T: Real>(
    traj: &Trajectory<T>,
    transient_fraction: T,
) -> Result<MaximaSet<T>, AnalysisError> {
    extract_extrema(traj.tail(transient_fraction), false)
}

/// Local minima, with the same refinement rules as [`extract_maxima`].
pub fn extract_minima<T: Real>(
    traj: &Trajectory<T>,
    transient_fraction: T,
) -> Result<MaximaSet<T>, AnalysisError> {
    extract_extrema(traj.tail(transient_fraction), true)
}

/// Asymptotic set classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AttractorKind {
    FixedPoint,
    Periodic(usize),
    /// Maxima do not settle into tight clusters: quasiperiodic or chaotic.
    Aperiodic,
}

impl fmt::Display for AttractorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttractorKind::FixedPoint => write!(f, "fixed-point"),
            AttractorKind::Periodic(n) => write!(f, "periodic({n})"),
            AttractorKind::Aperiodic => write!(f, "quasiperiodic-or-chaotic"),
        }
    }
}

/// Canonical fingerprint of an attractor.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttractorLabel<T> {
    pub kind: AttractorKind,
    /// Energy-level index within a diagram point; 0 is the rest state,
    /// oscillating classes count upward by peak amplitude. Assigned during
    /// diagram assembly.
    pub amplitude_class: usize,
    /// Sorted maxima cluster centres.
    pub signature: Vec<T>,
    /// Time-average of `x` (pitchfork branch indicator).
    pub mean_x: T,
    /// Half-range of the post-transient `x` excursion.
    pub half_range: T,
}

impl<T: Real> AttractorLabel<T> {
    /// Largest maximum of the signature (0 for a fixed point).
    pub fn peak(&self) -> T {
        self.signature.last().copied().unwrap_or_else(T::zero)
    }

    /// Clustering tolerance associated with this orbit's scale.
    pub fn tolerance(&self) -> T {
        cluster_tolerance(self.half_range)
    }

    /// -1 / 0 / +1 mirror-branch indicator.
    pub fn mean_sign(&self) -> i8 {
        let thr = (T::lit(ASYMMETRY_RELATIVE) * self.half_range).max(T::lit(CLUSTER_FLOOR));
        if self.mean_x > thr {
            1
        } else if self.mean_x < -thr {
            -1
        } else {
            0
        }
    }
}

#[inline]
pub fn cluster_tolerance<T: Real>(half_range: T) -> T {
    (T::lit(CLUSTER_RELATIVE) * half_range).max(T::lit(CLUSTER_FLOOR))
}

/// Single-linkage gap clustering of sorted values; returns (centre, spread).
fn gap_clusters<T: Real>(sorted: &[T], tol: T) -> Vec<(T, T)> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=sorted.len() {
        if i == sorted.len() || sorted[i] - sorted[i - 1] > tol {
            let chunk = &sorted[start..i];
            let mean = chunk.iter().copied().sum::<T>() / T::from_usize_(chunk.len());
            let spread = chunk[chunk.len() - 1] - chunk[0];
            out.push((mean, spread));
            start = i;
        }
    }
    out
}

/// Classify the asymptotic set behind a maxima map.
///
/// `amplitude_class` is initialised to 0; diagram assembly reassigns it
/// relative to the other attractors found at the same parameter point.
pub fn classify<T: Real>(
    maxima: &MaximaSet<T>,
    traj: &Trajectory<T>,
    transient_fraction: T,
) -> AttractorLabel<T> {
    classify_tail(maxima, traj.tail(transient_fraction))
}

pub(crate) fn classify_tail<T: Real>(maxima: &MaximaSet<T>, tail: &[[T; 2]]) -> AttractorLabel<T> {
    let (mut lo, mut hi) = (T::infinity(), T::neg_infinity());
    for s in tail {
        lo = lo.min(s[0]);
        hi = hi.max(s[0]);
    }
    let half_range = (hi - lo) / T::lit(2.0);

    if half_range < T::lit(FIXED_POINT_AMPLITUDE) {
        return AttractorLabel {
            kind: AttractorKind::FixedPoint,
            amplitude_class: 0,
            signature: Vec::new(),
            mean_x: maxima.mean_x,
            half_range,
        };
    }

    let tol = cluster_tolerance(half_range);
    let clusters = gap_clusters(&maxima.values, tol);
    let tight = !clusters.is_empty() && clusters.iter().all(|&(_, spread)| spread < tol);
    let kind = if tight && clusters.len() <= MAX_PERIOD {
        AttractorKind::Periodic(clusters.len())
    } else {
        AttractorKind::Aperiodic
    };

    AttractorLabel {
        kind,
        amplitude_class: 0,
        signature: clusters.iter().map(|&(c, _)| c).collect(),
        mean_x: maxima.mean_x,
        half_range,
    }
}

/// Attractor identity rule: sorted signatures match pairwise within the
/// (larger) cluster tolerance and the mirror-branch signs agree. Mirror
/// partners are distinct attractors under this rule.
pub fn same_attractor<T: Real>(a: &AttractorLabel<T>, b: &AttractorLabel<T>) -> bool {
    if (a.kind == AttractorKind::FixedPoint) != (b.kind == AttractorKind::FixedPoint) {
        return false;
    }
    if a.kind == AttractorKind::FixedPoint {
        return true;
    }
    if a.signature.len() != b.signature.len() {
        return false;
    }
    if a.mean_sign() != b.mean_sign() {
        return false;
    }
    let tol = a.tolerance().max(b.tolerance());
    a.signature
        .iter()
        .zip(&b.signature)
        .all(|(&p, &q)| (p - q).abs() <= tol)
}

/// One sweep cell: the seeded history and what became of it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCell<T> {
    pub history: HistorySpec<T>,
    pub outcome: Result<LabeledCell<T>, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabeledCell<T> {
    pub maxima: MaximaSet<T>,
    pub label: AttractorLabel<T>,
}

/// Maxima map over a grid of maximum delays, several histories per point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BifurcationDiagram<T> {
    pub tau0_values: Vec<T>,
    pub rng_seed: u64,
    pub n_histories: usize,
    /// `cells[point][history]`.
    pub cells: Vec<Vec<SweepCell<T>>>,
}

/// Draw one history from the paper's sampling boxes:
/// `A in [0, 3]`, `omega in [-pi, pi]`, `phi in [0, pi]`.
pub fn seeded_history<T: Real>(seed: u64, point: u64, history: u64) -> HistorySpec<T> {
    let mut rng = SplitMix64::for_cell(seed, point, history);
    let a = rng.next_range(T::zero(), T::lit(3.0));
    let om = rng.next_range(-T::PI(), T::PI());
    let ph = rng.next_range(T::zero(), T::PI());
    HistorySpec::new(a, om, ph)
}

/// Run the full sweep. Cells are mapped in parallel and merged in
/// `(point, history)` order; rerunning with the same seed and grid is
/// bit-identical.
pub fn run_sweep<T: Real>(
    base: &OscillatorParams<T>,
    tau0_range: (T, T),
    n_points: usize,
    n_histories: usize,
    cfg: &SolverConfig<T>,
    seed: u64,
) -> BifurcationDiagram<T> {
    assert!(n_points >= 2, "need at least two grid points");
    assert!(n_histories >= 1, "need at least one history");

    let (lo, hi) = tau0_range;
    let tau0_values: Vec<T> = (0..n_points)
        .map(|i| lo + (hi - lo) * T::from_usize_(i) / T::from_usize_(n_points - 1))
        .collect();

    let flat: Vec<SweepCell<T>> = (0..n_points * n_histories)
        .into_par_iter()
        .map(|idx| {
            let i = idx / n_histories;
            let j = idx % n_histories;
            let history = seeded_history::<T>(seed, i as u64, j as u64);
            let mut params = *base;
            params.max_delay = tau0_values[i];
            let outcome = dde::integrate(&params, &history, cfg)
                .map_err(|e| e.to_string())
                .and_then(|traj| {
                    let maxima = extract_maxima(&traj, cfg.transient_fraction)
                        .map_err(|e| e.to_string())?;
                    let label = classify(&maxima, &traj, cfg.transient_fraction);
                    Ok(LabeledCell { maxima, label })
                });
            SweepCell { history, outcome }
        })
        .collect();

    let mut cells: Vec<Vec<SweepCell<T>>> = flat
        .chunks(n_histories)
        .map(|chunk| chunk.to_vec())
        .collect();

    for point in &mut cells {
        assign_amplitude_classes(point);
    }

    BifurcationDiagram {
        tau0_values,
        rng_seed: seed,
        n_histories,
        cells,
    }
}

/// Group the oscillating attractors of one parameter point into amplitude
/// classes: peaks sorted ascending, a gap ratio above [`CLASS_GAP_RATIO`]
/// opens the next class. The rest state is always class 0, so mirror pairs
/// share a class while well-separated energy levels do not.
fn assign_amplitude_classes<T: Real>(point: &mut [SweepCell<T>]) {
    let mut peaks: Vec<T> = point
        .iter()
        .filter_map(|c| c.outcome.as_ref().ok())
        .filter(|l| l.label.kind != AttractorKind::FixedPoint)
        .map(|l| l.label.peak())
        .collect();
    peaks.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    peaks.dedup();
    if peaks.is_empty() {
        return;
    }

    // Class boundary peaks: class k covers peaks below boundary[k].
    let mut boundaries: Vec<T> = Vec::new();
    for w in peaks.windows(2) {
        let (p, q) = (w[0], w[1]);
        if q > p.max(T::lit(CLUSTER_FLOOR)) * T::lit(CLASS_GAP_RATIO) {
            boundaries.push((p + q) / T::lit(2.0));
        }
    }

    for cell in point.iter_mut() {
        if let Ok(l) = cell.outcome.as_mut() {
            if l.label.kind == AttractorKind::FixedPoint {
                l.label.amplitude_class = 0;
            } else {
                let peak = l.label.peak();
                let below = boundaries.iter().filter(|&&b| peak > b).count();
                l.label.amplitude_class = 1 + below;
            }
        }
    }
}

/// Detected structure of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary<T> {
    /// First grid point whose asymptotic amplitude exceeds the fixed-point
    /// threshold for at least one history.
    pub hopf_onset: Option<T>,
    /// Largest maximum over the whole sweep and where it occurred.
    pub peak_amplitude: Option<PeakAmplitude<T>>,
    /// Interior windows where every history decays (amplitude death).
    pub amplitude_death_windows: Vec<(T, T)>,
    /// Windows with at least two coexisting amplitude classes.
    pub multistability_windows: Vec<(T, T)>,
    pub multistability_onset: Option<T>,
    /// First point carrying two attractors with opposite-sign mean x.
    pub symmetry_breaking_onset: Option<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeakAmplitude<T> {
    pub tau0: T,
    pub value: T,
}

impl<T: Real> BifurcationDiagram<T> {
    fn point_oscillates(&self, i: usize) -> bool {
        self.cells[i].iter().any(|c| {
            matches!(&c.outcome, Ok(l) if l.label.kind != AttractorKind::FixedPoint)
        })
    }

    fn point_all_fixed(&self, i: usize) -> bool {
        self.cells[i]
            .iter()
            .all(|c| matches!(&c.outcome, Ok(l) if l.label.kind == AttractorKind::FixedPoint))
    }

    fn point_classes(&self, i: usize) -> usize {
        let mut classes: Vec<usize> = self.cells[i]
            .iter()
            .filter_map(|c| c.outcome.as_ref().ok())
            .filter(|l| l.label.kind != AttractorKind::FixedPoint)
            .map(|l| l.label.amplitude_class)
            .collect();
        classes.sort_unstable();
        classes.dedup();
        classes.len()
    }

    fn point_has_opposite_branches(&self, i: usize) -> bool {
        let signs: Vec<i8> = self.cells[i]
            .iter()
            .filter_map(|c| c.outcome.as_ref().ok())
            .filter(|l| l.label.kind != AttractorKind::FixedPoint)
            .map(|l| l.label.mean_sign())
            .collect();
        signs.contains(&1) && signs.contains(&-1)
    }

    pub fn summary(&self) -> SweepSummary<T> {
        let n = self.tau0_values.len();

        let hopf_onset = (0..n)
            .find(|&i| self.point_oscillates(i))
            .map(|i| self.tau0_values[i]);

        let mut peak_amplitude: Option<PeakAmplitude<T>> = None;
        for i in 0..n {
            for c in &self.cells[i] {
                if let Ok(l) = &c.outcome {
                    let p = l.label.peak();
                    if l.label.kind != AttractorKind::FixedPoint
                        && peak_amplitude.as_ref().map_or(true, |m| p > m.value)
                    {
                        peak_amplitude = Some(PeakAmplitude {
                            tau0: self.tau0_values[i],
                            value: p,
                        });
                    }
                }
            }
        }

        // Interior all-decayed runs, bounded by oscillating points on both
        // sides so the pre-onset region does not count as amplitude death.
        let mut amplitude_death_windows = Vec::new();
        let mut i = 0;
        while i < n {
            if self.point_all_fixed(i) {
                let start = i;
                while i < n && self.point_all_fixed(i) {
                    i += 1;
                }
                let before = (0..start).any(|k| self.point_oscillates(k));
                let after = i < n;
                if before && after {
                    amplitude_death_windows
                        .push((self.tau0_values[start], self.tau0_values[i - 1]));
                }
            } else {
                i += 1;
            }
        }

        let mut multistability_windows = Vec::new();
        let mut i = 0;
        while i < n {
            if self.point_classes(i) >= 2 {
                let start = i;
                while i < n && self.point_classes(i) >= 2 {
                    i += 1;
                }
                multistability_windows.push((self.tau0_values[start], self.tau0_values[i - 1]));
            } else {
                i += 1;
            }
        }
        let multistability_onset = multistability_windows.first().map(|w| w.0);

        let symmetry_breaking_onset = (0..n)
            .find(|&i| self.point_has_opposite_branches(i))
            .map(|i| self.tau0_values[i]);

        SweepSummary {
            hopf_onset,
            peak_amplitude,
            amplitude_death_windows,
            multistability_windows,
            multistability_onset,
            symmetry_breaking_onset,
        }
    }

    /// CSV rows `tau0,history_index,max_value,label_kind,amplitude_class`,
    /// one row per recorded maximum (none for error cells).
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "tau0,history_index,max_value,label_kind,amplitude_class")?;
        for (i, point) in self.cells.iter().enumerate() {
            for (j, cell) in point.iter().enumerate() {
                if let Ok(l) = &cell.outcome {
                    for &v in &l.maxima.values {
                        writeln!(
                            w,
                            "{},{},{},{},{}",
                            self.tau0_values[i], j, v, l.label.kind, l.label.amplitude_class
                        )?;
                    }
                }
            }
        }
        Ok(())
    }
}
