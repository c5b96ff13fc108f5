//! Delay-coordinate embedding and exact nearest-neighbour search.

use crate::error::AnalysisError;
use crate::scalar::Real;
use rayon::prelude::*;
use std::collections::HashMap;

/// Delay-coordinate vectors `[s_i, s_{i+lag}, ..., s_{i+(dim-1) lag}]`,
/// stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding<T> {
    data: Vec<T>,
    pub dim: usize,
    pub lag: usize,
    n_points: usize,
}

/// Embed a scalar series; requires `len > (dim - 1) * lag`.
pub fn embed<T: Real>(series: &[T], dim: usize, lag: usize) -> Result<Embedding<T>, AnalysisError> {
    if dim == 0 || (dim > 1 && lag == 0) {
        return Err(AnalysisError::BadParameter(
            "embedding needs dim >= 1 and lag >= 1".into(),
        ));
    }
    let span = (dim - 1) * lag;
    if series.len() <= span {
        return Err(AnalysisError::TooShort {
            need: span + 1,
            got: series.len(),
        });
    }
    let n_points = series.len() - span;
    let mut data = Vec::with_capacity(n_points * dim);
    for i in 0..n_points {
        for d in 0..dim {
            data.push(series[i + d * lag]);
        }
    }
    Ok(Embedding {
        data,
        dim,
        lag,
        n_points,
    })
}

impl<T: Real> Embedding<T> {
    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        self.n_points == 0
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[T] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    fn dist2(&self, i: usize, j: usize) -> T {
        let a = self.point(i);
        let b = self.point(j);
        let mut s = T::zero();
        for d in 0..self.dim {
            let diff = a[d] - b[d];
            s += diff * diff;
        }
        s
    }

    #[inline]
    pub fn distance(&self, i: usize, j: usize) -> T {
        self.dist2(i, j).sqrt()
    }
}

const MAX_GRID_DIM: usize = 8;
const MAX_CELLS_PER_AXIS: usize = 1 << 14;

/// Uniform-grid spatial hash over the embedding cloud.
struct CellGrid<T> {
    cells: HashMap<[u16; MAX_GRID_DIM], Vec<u32>>,
    origin: Vec<T>,
    cell: T,
    dim: usize,
}

impl<T: Real> CellGrid<T> {
    fn build(emb: &Embedding<T>) -> Option<Self> {
        let dim = emb.dim;
        if dim > MAX_GRID_DIM || emb.len() < 2 {
            return None;
        }
        let mut lo = vec![T::infinity(); dim];
        let mut hi = vec![T::neg_infinity(); dim];
        for i in 0..emb.len() {
            let p = emb.point(i);
            for d in 0..dim {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        let max_range = (0..dim)
            .map(|d| hi[d] - lo[d])
            .fold(T::zero(), T::max);
        if !(max_range > T::zero()) {
            return None;
        }
        // about one point per cell along the occupied diagonal
        let per_axis = ((emb.len() as f64).powf(1.0 / dim as f64).ceil() as usize)
            .clamp(1, MAX_CELLS_PER_AXIS);
        let cell = max_range / T::from_usize_(per_axis);

        let mut grid = Self {
            cells: HashMap::with_capacity(emb.len()),
            origin: lo,
            cell,
            dim,
        };
        for i in 0..emb.len() {
            let key = grid.key_of(emb.point(i));
            grid.cells.entry(key).or_default().push(i as u32);
        }
        Some(grid)
    }

    #[inline]
    fn coord(&self, v: T, d: usize) -> i64 {
        ((v - self.origin[d]) / self.cell).as_f64().floor() as i64
    }

    fn key_of(&self, p: &[T]) -> [u16; MAX_GRID_DIM] {
        let mut key = [0u16; MAX_GRID_DIM];
        for d in 0..self.dim {
            key[d] = self.coord(p[d], d).clamp(0, u16::MAX as i64) as u16;
        }
        key
    }

    /// Exact nearest admissible neighbour of point `i` by expanding
    /// Chebyshev rings until no closer cell can remain.
    fn nearest(&self, emb: &Embedding<T>, i: usize, theiler: usize) -> Option<usize> {
        let p = emb.point(i);
        let centre: Vec<i64> = (0..self.dim).map(|d| self.coord(p[d], d)).collect();
        let mut best: Option<(T, usize)> = None;
        let mut ring: i64 = 0;
        loop {
            let mut any_cell = false;
            self.for_ring(&centre, ring, |key| {
                if let Some(members) = self.cells.get(key) {
                    any_cell = true;
                    for &jj in members {
                        let j = jj as usize;
                        let sep = i.abs_diff(j);
                        if sep <= theiler {
                            continue;
                        }
                        let d2 = emb.dist2(i, j);
                        if d2 > T::zero() && best.map_or(true, |(b, _)| d2 < b) {
                            best = Some((d2, j));
                        }
                    }
                }
            });
            // points in ring r+1 are at least r * cell away from p
            if let Some((b, _)) = best {
                if T::from_usize_(ring as usize) * self.cell > b.sqrt() {
                    break;
                }
            }
            ring += 1;
            if !any_cell && ring as usize > 2 * MAX_CELLS_PER_AXIS {
                break;
            }
        }
        best.map(|(_, j)| j)
    }

    /// Visit every cell at Chebyshev distance exactly `ring` from `centre`.
    fn for_ring<F: FnMut(&[u16; MAX_GRID_DIM])>(&self, centre: &[i64], ring: i64, mut f: F) {
        let mut offsets = vec![0i64; self.dim];
        self.ring_rec(centre, ring, 0, false, &mut offsets, &mut f);
    }

    #[allow(clippy::too_many_arguments)]
    fn ring_rec<F: FnMut(&[u16; MAX_GRID_DIM])>(
        &self,
        centre: &[i64],
        ring: i64,
        d: usize,
        pinned: bool,
        offsets: &mut Vec<i64>,
        f: &mut F,
    ) {
        if d == self.dim {
            if pinned || ring == 0 {
                let mut key = [0u16; MAX_GRID_DIM];
                for (dd, off) in offsets.iter().enumerate() {
                    let c = centre[dd] + off;
                    if !(0..=u16::MAX as i64).contains(&c) {
                        return;
                    }
                    key[dd] = c as u16;
                }
                f(&key);
            }
            return;
        }
        // last unpinned dimension must take an extreme offset to stay on the ring surface
        for off in -ring..=ring {
            let is_extreme = off == -ring || off == ring;
            if d == self.dim - 1 && !pinned && !is_extreme && ring != 0 {
                continue;
            }
            offsets[d] = off;
            self.ring_rec(centre, ring, d + 1, pinned || is_extreme, offsets, f);
        }
    }
}

/// Exact nearest neighbour for every embedded point, excluding temporal
/// companions within `theiler` samples. Grid-accelerated with a brute-force
/// fallback for degenerate clouds.
pub fn nearest_neighbors<T: Real>(emb: &Embedding<T>, theiler: usize) -> Vec<Option<usize>> {
    let n = emb.len();
    match CellGrid::build(emb) {
        Some(grid) => (0..n)
            .into_par_iter()
            .map(|i| grid.nearest(emb, i, theiler))
            .collect(),
        None => (0..n)
            .into_par_iter()
            .map(|i| {
                let mut best: Option<(T, usize)> = None;
                for j in 0..n {
                    if i.abs_diff(j) <= theiler {
                        continue;
                    }
                    let d2 = emb.dist2(i, j);
                    if d2 > T::zero() && best.map_or(true, |(b, _)| d2 < b) {
                        best = Some((d2, j));
                    }
                }
                best.map(|(_, j)| j)
            })
            .collect(),
    }
}
