//! Basins of attraction over the periodic-history plane (omega, phi) at
//! fixed amplitude, with basin stability fractions and basin entropy.

use crate::analysis::orbit_energy_stats;
use crate::dde::{self, DdeIntegrator};
use crate::error::AnalysisError;
use crate::params::{HistorySpec, OscillatorParams, SolverConfig};
use crate::rng::SplitMix64;
use crate::scalar::Real;
use crate::sweep::{classify_tail, extract_extrema, same_attractor, AttractorLabel};
use rayon::prelude::*;
use serde::Serialize;
use std::io::{self, Write};

/// A reference attractor of the library: fingerprint plus metadata used for
/// mirror bookkeeping and energy reporting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReferenceAttractor<T> {
    pub label: AttractorLabel<T>,
    /// Sorted minima cluster centres (mirror matching needs both sides).
    pub minima_signature: Vec<T>,
    pub mean_energy: T,
    /// One history known to reach this attractor.
    pub history: HistorySpec<T>,
}

/// Library of reference attractors; pairwise distinct under the sweep
/// identity rule.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttractorLibrary<T> {
    pub references: Vec<ReferenceAttractor<T>>,
}

fn reference_from_trajectory<T: Real>(
    traj: &crate::trajectory::Trajectory<T>,
    history: HistorySpec<T>,
    transient_fraction: T,
) -> Option<ReferenceAttractor<T>> {
    let tail = traj.tail(transient_fraction);
    let maxima = extract_extrema(tail, false).ok()?;
    let minima = extract_extrema(tail, true).ok()?;
    let label = classify_tail(&maxima, tail);
    let tol = label.tolerance();
    let minima_signature = cluster_means(&minima.values, tol);
    let stats = orbit_energy_stats(traj, transient_fraction).ok()?;
    Some(ReferenceAttractor {
        label,
        minima_signature,
        mean_energy: stats.mean,
        history,
    })
}

fn cluster_means<T: Real>(sorted: &[T], tol: T) -> Vec<T> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=sorted.len() {
        if i == sorted.len() || sorted[i] - sorted[i - 1] > tol {
            let chunk = &sorted[start..i];
            out.push(chunk.iter().copied().sum::<T>() / T::from_usize_(chunk.len()));
            start = i;
        }
    }
    out
}

impl<T: Real> AttractorLibrary<T> {
    /// Build a library from explicit histories known to reach the target
    /// attractors. Duplicates (under the identity rule) collapse.
    pub fn from_histories(
        params: &OscillatorParams<T>,
        cfg: &SolverConfig<T>,
        histories: &[HistorySpec<T>],
    ) -> Self {
        let mut lib = Self {
            references: Vec::new(),
        };
        for &h in histories {
            if let Ok(traj) = dde::integrate(params, &h, cfg) {
                if let Some(r) = reference_from_trajectory(&traj, h, cfg.transient_fraction) {
                    lib.insert(r);
                }
            }
        }
        lib
    }

    /// Probe seeded random histories (and, optionally, the mirror of every
    /// asymmetric find) until `n_probes` histories have been examined.
    /// Probes run in parallel; insertion order is by probe index, so the
    /// library is deterministic in (params, cfg, seed, n_probes).
    pub fn discover(
        params: &OscillatorParams<T>,
        cfg: &SolverConfig<T>,
        n_probes: usize,
        seed: u64,
        include_mirrors: bool,
    ) -> Self {
        let found: Vec<Option<ReferenceAttractor<T>>> = (0..n_probes)
            .into_par_iter()
            .map(|j| {
                let h = crate::sweep::seeded_history::<T>(seed, 0, j as u64);
                dde::integrate(params, &h, cfg)
                    .ok()
                    .and_then(|traj| reference_from_trajectory(&traj, h, cfg.transient_fraction))
            })
            .collect();

        let mut lib = Self {
            references: Vec::new(),
        };
        for r in found.into_iter().flatten() {
            lib.insert(r);
        }
        if include_mirrors {
            let mirrors: Vec<HistorySpec<T>> = lib
                .references
                .iter()
                .filter(|r| r.label.mean_sign() != 0)
                .map(|r| r.history.mirrored())
                .collect();
            for h in mirrors {
                if let Ok(traj) = dde::integrate(params, &h, cfg) {
                    if let Some(r) = reference_from_trajectory(&traj, h, cfg.transient_fraction) {
                        lib.insert(r);
                    }
                }
            }
        }
        lib
    }

    fn insert(&mut self, r: ReferenceAttractor<T>) {
        if self.match_label(&r.label).is_none() {
            self.references.push(r);
        }
    }

    pub fn len(&self) -> usize {
        self.references.len()
    }

    pub fn is_empty(&self) -> bool {
        self.references.is_empty()
    }

    /// Index of the reference this label matches, if any.
    pub fn match_label(&self, label: &AttractorLabel<T>) -> Option<usize> {
        self.references
            .iter()
            .position(|r| same_attractor(&r.label, label))
    }

    /// Mirror partner of reference `i`: maxima of one match the negated,
    /// reversed minima of the other. A symmetric attractor is its own
    /// partner.
    pub fn mirror_partner(&self, i: usize) -> Option<usize> {
        let a = &self.references[i];
        if a.label.mean_sign() == 0 {
            return Some(i);
        }
        self.references.iter().position(|b| {
            if b.label.mean_sign() != -a.label.mean_sign() {
                return false;
            }
            if b.minima_signature.len() != a.label.signature.len() {
                return false;
            }
            let tol = a.label.tolerance().max(b.label.tolerance());
            a.label
                .signature
                .iter()
                .zip(b.minima_signature.iter().rev())
                .all(|(&p, &q)| (p + q).abs() <= tol)
        })
    }
}

/// Basin membership over the (omega, phi) history plane.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BasinGrid<T> {
    pub amplitude: T,
    /// Cell-centre grids.
    pub omega_axis: Vec<T>,
    pub phi_axis: Vec<T>,
    /// Row-major `labels[phi_index * n_omega + omega_index]`;
    /// -1 marks an unresolved cell, other values index the library.
    pub labels: Vec<i32>,
    pub n_omega: usize,
    pub n_phi: usize,
}

pub const UNRESOLVED: i32 = -1;

/// Integration checkpoints at which a cell is tested against the library
/// (fractions of `t_end`).
const CHECKPOINTS: [f64; 3] = [0.5, 0.75, 1.0];

/// Classify one history against the library, integrating only as far as
/// needed: at each checkpoint the post-transient signature of the series so
/// far is matched; `t_end` without a match leaves the cell unresolved.
pub fn classify_cell<T: Real>(
    params: &OscillatorParams<T>,
    history: &HistorySpec<T>,
    cfg: &SolverConfig<T>,
    library: &AttractorLibrary<T>,
) -> i32 {
    let mut it = match DdeIntegrator::new(params, history, cfg) {
        Ok(it) => it,
        Err(_) => return UNRESOLVED,
    };
    let total = it.steps_total();
    for frac in CHECKPOINTS {
        let target = ((total as f64) * frac).round() as usize;
        if it.advance_to(target).is_err() {
            return UNRESOLVED;
        }
        let stored = it.stored();
        let cut = ((stored.len() as f64) * cfg.transient_fraction.as_f64()).floor() as usize;
        let tail = &stored[cut.min(stored.len() - 1)..];
        if let Ok(maxima) = extract_extrema(tail, false) {
            let label = classify_tail(&maxima, tail);
            if let Some(idx) = library.match_label(&label) {
                return idx as i32;
            }
        }
    }
    UNRESOLVED
}

/// Compute the basin grid: cells are independent work items merged in
/// row-major order.
pub fn compute_basin_grid<T: Real>(
    params: &OscillatorParams<T>,
    amplitude: T,
    resolution: (usize, usize),
    cfg: &SolverConfig<T>,
    library: &AttractorLibrary<T>,
) -> BasinGrid<T> {
    assert!(!library.is_empty(), "attractor library must be non-empty");
    let (n_omega, n_phi) = resolution;
    assert!(n_omega >= 1 && n_phi >= 1);

    let omega_axis: Vec<T> = (0..n_omega)
        .map(|i| {
            -T::PI() + (T::from_usize_(i) + T::lit(0.5)) * (T::lit(2.0) * T::PI())
                / T::from_usize_(n_omega)
        })
        .collect();
    let phi_axis: Vec<T> = (0..n_phi)
        .map(|j| (T::from_usize_(j) + T::lit(0.5)) * T::PI() / T::from_usize_(n_phi))
        .collect();

    let labels: Vec<i32> = (0..n_omega * n_phi)
        .into_par_iter()
        .map(|idx| {
            let j = idx / n_omega;
            let i = idx % n_omega;
            let h = HistorySpec::new(amplitude, omega_axis[i], phi_axis[j]);
            classify_cell(params, &h, cfg, library)
        })
        .collect();

    BasinGrid {
        amplitude,
        omega_axis,
        phi_axis,
        labels,
        n_omega,
        n_phi,
    }
}

impl<T: Real> BasinGrid<T> {
    pub fn label_at(&self, omega_index: usize, phi_index: usize) -> i32 {
        self.labels[phi_index * self.n_omega + omega_index]
    }

    /// Integer label matrix, one row per phi value.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        for j in 0..self.n_phi {
            let row: Vec<String> = (0..self.n_omega)
                .map(|i| self.label_at(i, j).to_string())
                .collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Basin volume fractions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BasinStability<T> {
    /// Per-library-index cell fraction.
    pub fractions: Vec<T>,
    pub unresolved_fraction: T,
    /// Fractions of mirror pairs merged into one level (index pairs are
    /// (low, high); symmetric attractors merge with themselves).
    pub merged_levels: Vec<MergedLevel<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MergedLevel<T> {
    pub members: (usize, usize),
    pub fraction: T,
}

/// Count cells per label. Fractions (including unresolved) sum to 1.
pub fn basin_stability<T: Real>(
    grid: &BasinGrid<T>,
    library: &AttractorLibrary<T>,
) -> BasinStability<T> {
    let total = T::from_usize_(grid.labels.len());
    let mut counts = vec![0usize; library.len()];
    let mut unresolved = 0usize;
    for &l in &grid.labels {
        if l < 0 {
            unresolved += 1;
        } else {
            counts[l as usize] += 1;
        }
    }
    let fractions: Vec<T> = counts
        .iter()
        .map(|&c| T::from_usize_(c) / total)
        .collect();

    let mut merged_levels = Vec::new();
    let mut seen = vec![false; library.len()];
    for i in 0..library.len() {
        if seen[i] {
            continue;
        }
        if let Some(j) = library.mirror_partner(i) {
            seen[i] = true;
            if j != i {
                seen[j] = true;
                let (a, b) = (i.min(j), i.max(j));
                merged_levels.push(MergedLevel {
                    members: (a, b),
                    fraction: fractions[a] + fractions[b],
                });
            } else {
                merged_levels.push(MergedLevel {
                    members: (i, i),
                    fraction: fractions[i],
                });
            }
        }
    }

    BasinStability {
        fractions,
        unresolved_fraction: T::from_usize_(unresolved) / total,
        merged_levels,
    }
}

/// Box-averaged Gibbs entropy of the basin labels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BasinEntropy<T> {
    /// Mean over all boxes.
    pub basin_entropy: T,
    /// Mean over boxes containing at least two labels.
    pub boundary_entropy: T,
    pub n_boxes: usize,
    pub n_boundary_boxes: usize,
}

/// Partition the grid into `box_size` x `box_size` tiles (edge tiles keep
/// their actual cell counts) and average the per-box Gibbs entropy
/// `-sum p_i ln p_i` over the label proportions. Unresolved cells count as
/// their own category.
pub fn basin_entropy<T: Real>(
    grid: &BasinGrid<T>,
    box_size: usize,
) -> Result<BasinEntropy<T>, AnalysisError> {
    if grid.labels.is_empty() || box_size == 0 {
        return Err(AnalysisError::BadParameter(
            "empty grid or zero box size".into(),
        ));
    }
    let mut total = T::zero();
    let mut boundary_total = T::zero();
    let mut n_boxes = 0usize;
    let mut n_boundary = 0usize;

    let mut counts: Vec<(i32, usize)> = Vec::new();
    let mut j0 = 0;
    while j0 < grid.n_phi {
        let mut i0 = 0;
        while i0 < grid.n_omega {
            counts.clear();
            let mut n_cells = 0usize;
            for j in j0..(j0 + box_size).min(grid.n_phi) {
                for i in i0..(i0 + box_size).min(grid.n_omega) {
                    let l = grid.label_at(i, j);
                    n_cells += 1;
                    match counts.iter_mut().find(|(k, _)| *k == l) {
                        Some((_, c)) => *c += 1,
                        None => counts.push((l, 1)),
                    }
                }
            }
            let n = T::from_usize_(n_cells);
            let mut s = T::zero();
            for &(_, c) in &counts {
                let p = T::from_usize_(c) / n;
                s -= p * p.ln();
            }
            total += s;
            n_boxes += 1;
            if counts.len() >= 2 {
                boundary_total += s;
                n_boundary += 1;
            }
            i0 += box_size;
        }
        j0 += box_size;
    }

    Ok(BasinEntropy {
        basin_entropy: total / T::from_usize_(n_boxes),
        boundary_entropy: if n_boundary > 0 {
            boundary_total / T::from_usize_(n_boundary)
        } else {
            T::zero()
        },
        n_boxes,
        n_boundary_boxes: n_boundary,
    })
}

/// Result of the mirror-symmetry spot check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MirrorCheck {
    /// Resolved sampled cells whose mirrored history also resolved.
    pub checked: usize,
    /// How many of those landed on the mirror partner label.
    pub consistent: usize,
}

/// Sample resolved cells and verify that integrating the phi + pi history
/// converges to the mirror partner attractor. The shifted phase leaves the
/// grid's phi range, so partners are integrated directly.
pub fn mirror_spot_check<T: Real>(
    grid: &BasinGrid<T>,
    params: &OscillatorParams<T>,
    cfg: &SolverConfig<T>,
    library: &AttractorLibrary<T>,
    n_samples: usize,
    seed: u64,
) -> MirrorCheck {
    let mut rng = SplitMix64::new(seed);
    let mut picks = Vec::with_capacity(n_samples);
    let mut attempts = 0;
    while picks.len() < n_samples && attempts < n_samples * 50 {
        attempts += 1;
        let i = (rng.next_u64() % grid.n_omega as u64) as usize;
        let j = (rng.next_u64() % grid.n_phi as u64) as usize;
        let l = grid.label_at(i, j);
        if l >= 0 {
            picks.push((i, j, l as usize));
        }
    }

    let outcomes: Vec<Option<bool>> = picks
        .par_iter()
        .map(|&(i, j, l)| {
            let expected = library.mirror_partner(l)?;
            let h = HistorySpec::new(grid.amplitude, grid.omega_axis[i], grid.phi_axis[j])
                .mirrored();
            let got = classify_cell(params, &h, cfg, library);
            if got < 0 {
                None
            } else {
                Some(got as usize == expected)
            }
        })
        .collect();

    let mut checked = 0;
    let mut consistent = 0;
    for o in outcomes.into_iter().flatten() {
        checked += 1;
        if o {
            consistent += 1;
        }
    }
    MirrorCheck {
        checked,
        consistent,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sweep::AttractorKind;

    fn params(alpha: f64, tau0: f64) -> OscillatorParams<f64> {
        OscillatorParams::new(0.1, 1.0, alpha, tau0)
    }

    fn grid_from(labels: Vec<i32>, n_omega: usize, n_phi: usize) -> BasinGrid<f64> {
        BasinGrid {
            amplitude: 1.0,
            omega_axis: (0..n_omega).map(|i| i as f64).collect(),
            phi_axis: (0..n_phi).map(|j| j as f64).collect(),
            labels,
            n_omega,
            n_phi,
        }
    }

    #[test]
    fn single_attractor_grid_below_hopf() {
        // Globally stable rest state: every cell matches the origin.
        let p = params(0.5, 0.1);
        let cfg = SolverConfig::new(400.0);
        let lib =
            AttractorLibrary::from_histories(&p, &cfg, &[HistorySpec::new(1.0, 1.0, 0.5)]);
        assert_eq!(lib.len(), 1);
        assert_eq!(lib.references[0].label.kind, AttractorKind::FixedPoint);
        let grid = compute_basin_grid(&p, 0.43, (6, 6), &cfg, &lib);
        assert!(grid.labels.iter().all(|&l| l == 0));
        let stab = basin_stability(&grid, &lib);
        assert_eq!(stab.fractions[0], 1.0);
        assert_eq!(stab.unresolved_fraction, 0.0);
    }

    #[test]
    fn stability_fractions_sum_to_one() {
        let labels = vec![0, 1, -1, 0, 1, 1, 0, -1, 0];
        let grid = grid_from(labels, 3, 3);
        let lib = AttractorLibrary::<f64> {
            references: Vec::new(),
        };
        // hand-build a two-reference library shape by counting directly
        let mut counts = [0usize; 2];
        let mut unresolved = 0;
        for &l in &grid.labels {
            match l {
                -1 => unresolved += 1,
                l => counts[l as usize] += 1,
            }
        }
        let total: f64 = grid.labels.len() as f64;
        let sum = counts.iter().map(|&c| c as f64 / total).sum::<f64>()
            + unresolved as f64 / total;
        assert!((sum - 1.0).abs() < 1e-12);
        drop(lib);
    }

    #[test]
    fn entropy_zero_for_uniform_grid() {
        let grid = grid_from(vec![2; 36], 6, 6);
        let e = basin_entropy(&grid, 3).unwrap();
        assert_eq!(e.basin_entropy, 0.0);
        assert_eq!(e.n_boundary_boxes, 0);
    }

    #[test]
    fn entropy_ln2_for_checkerboard() {
        let mut labels = Vec::with_capacity(64);
        for j in 0..8 {
            for i in 0..8 {
                labels.push(((i + j) % 2) as i32);
            }
        }
        let grid = grid_from(labels, 8, 8);
        let e = basin_entropy(&grid, 2).unwrap();
        assert!((e.basin_entropy - std::f64::consts::LN_2).abs() < 1e-12);
        assert_eq!(e.n_boxes, 16);
        assert_eq!(e.n_boundary_boxes, 16);
    }

    #[test]
    fn entropy_invariant_under_relabeling() {
        let labels: Vec<i32> = (0..144).map(|i| (i % 3) as i32).collect();
        let grid = grid_from(labels.clone(), 12, 12);
        let swapped = grid_from(
            labels.iter().map(|&l| (l + 1) % 3).collect(),
            12,
            12,
        );
        let a = basin_entropy(&grid, 5).unwrap();
        let b = basin_entropy(&swapped, 5).unwrap();
        assert_eq!(a.basin_entropy, b.basin_entropy);
    }

    #[test]
    fn entropy_bounded_by_label_count() {
        let labels: Vec<i32> = (0..100).map(|i| (i % 4) as i32).collect();
        let grid = grid_from(labels, 10, 10);
        let e = basin_entropy(&grid, 4).unwrap();
        assert!(e.basin_entropy >= 0.0);
        assert!(e.basin_entropy <= (4.0f64).ln() + 1e-12);
    }

    #[test]
    fn partial_edge_boxes_use_actual_counts() {
        // 5x5 grid, box 2: edge boxes have 2 or 1 cells.
        let grid = grid_from(vec![0; 25], 5, 5);
        let e = basin_entropy(&grid, 2).unwrap();
        assert_eq!(e.n_boxes, 9);
        assert_eq!(e.basin_entropy, 0.0);
    }

    #[test]
    fn csv_matrix_shape() {
        let grid = grid_from(vec![0, 1, -1, 0, 1, 0], 3, 2);
        let mut buf = Vec::new();
        grid.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let rows: Vec<&str> = text.lines().collect();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0], "0,1,-1");
        assert_eq!(rows[1], "0,1,0");
    }

    #[test]
    fn discover_finds_mirror_pair_on_pitchfork() {
        // alpha=-0.9, tau0=3.0: two mirror limit cycles.
        let p = params(-0.9, 3.0);
        let cfg = SolverConfig::new(1500.0);
        let lib = AttractorLibrary::discover(&p, &cfg, 6, 11, true);
        assert!(lib.len() >= 2, "found {} references", lib.len());
        let signs: Vec<i8> = lib.references.iter().map(|r| r.label.mean_sign()).collect();
        assert!(signs.contains(&1) && signs.contains(&-1), "{signs:?}");
        // each asymmetric reference has a mirror partner in the library
        for i in 0..lib.len() {
            if lib.references[i].label.mean_sign() != 0 {
                let j = lib.mirror_partner(i).expect("mirror partner");
                assert_ne!(i, j);
                assert_eq!(
                    lib.references[j].label.mean_sign(),
                    -lib.references[i].label.mean_sign()
                );
            }
        }
    }
}
