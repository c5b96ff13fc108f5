//! Uniform-grid trajectories with cubic Hermite dense output.

use crate::scalar::Real;
use std::io::{self, Read, Write};

/// Little-endian binary trajectory layout: magic, version, dt, count,
/// interleaved (x, y) pairs as f64.
pub const TRAJECTORY_MAGIC: [u8; 4] = *b"ROSC";
pub const TRAJECTORY_VERSION: u32 = 1;

/// Samples of `(x, y)` on a uniform time grid together with the node
/// derivatives, which parameterize a C1 cubic Hermite interpolant.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    t0: T,
    dt: T,
    states: Vec<[T; 2]>,
    derivs: Vec<[T; 2]>,
}

impl<T: Real> Trajectory<T> {
    pub(crate) fn new(t0: T, dt: T, states: Vec<[T; 2]>, derivs: Vec<[T; 2]>) -> Self {
        debug_assert_eq!(states.len(), derivs.len());
        debug_assert!(states.len() >= 2);
        Self {
            t0,
            dt,
            states,
            derivs,
        }
    }

    /// Build a trajectory from explicit samples of a known smooth signal.
    /// Mostly useful for feeding synthetic series into the analysis layer.
    pub fn from_samples(t0: T, dt: T, states: Vec<[T; 2]>, derivs: Vec<[T; 2]>) -> Self {
        Self::new(t0, dt, states, derivs)
    }

    pub fn start_time(&self) -> T {
        self.t0
    }

    /// Stored sample spacing.
    pub fn sample_dt(&self) -> T {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn end_time(&self) -> T {
        self.time_at(self.len() - 1)
    }

    #[inline]
    pub fn time_at(&self, i: usize) -> T {
        self.t0 + self.dt * T::from_usize_(i)
    }

    #[inline]
    pub fn state_at(&self, i: usize) -> [T; 2] {
        self.states[i]
    }

    pub fn states(&self) -> &[[T; 2]] {
        &self.states
    }

    pub fn derivs(&self) -> &[[T; 2]] {
        &self.derivs
    }

    /// Copy of the position component.
    pub fn positions(&self) -> Vec<T> {
        self.states.iter().map(|s| s[0]).collect()
    }

    /// Index of the first post-transient sample for a given discard fraction.
    pub fn transient_cut(&self, transient_fraction: T) -> usize {
        let n = self.len();
        let cut = (T::from_usize_(n) * transient_fraction).as_f64().floor() as usize;
        cut.min(n - 1)
    }

    /// Post-transient view of the stored states.
    pub fn tail(&self, transient_fraction: T) -> &[[T; 2]] {
        &self.states[self.transient_cut(transient_fraction)..]
    }

    /// Dense evaluation of `(x, y)` at an arbitrary time inside the stored
    /// span. Node times reproduce the stored values exactly; between nodes
    /// the cubic Hermite interpolant is C1 across segment boundaries.
    pub fn eval(&self, t: T) -> [T; 2] {
        let n_seg = self.len() - 1;
        let s = (t - self.t0) / self.dt;
        let mut i = s.as_f64().floor() as isize;
        if i < 0 {
            i = 0;
        }
        let mut i = i as usize;
        if i >= n_seg {
            i = n_seg - 1;
        }
        let u = s - T::from_usize_(i);
        hermite_pair(
            self.states[i],
            self.states[i + 1],
            self.derivs[i],
            self.derivs[i + 1],
            self.dt,
            u,
        )
    }

    /// CSV export with header `t,x,y`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,x,y")?;
        for (i, s) in self.states.iter().enumerate() {
            writeln!(w, "{},{},{}", self.time_at(i), s[0], s[1])?;
        }
        Ok(())
    }

    /// Binary export (see [`TRAJECTORY_MAGIC`] for the layout).
    pub fn write_binary<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(&TRAJECTORY_MAGIC)?;
        w.write_all(&TRAJECTORY_VERSION.to_le_bytes())?;
        w.write_all(&self.dt.as_f64().to_le_bytes())?;
        w.write_all(&(self.len() as u64).to_le_bytes())?;
        for s in &self.states {
            w.write_all(&s[0].as_f64().to_le_bytes())?;
            w.write_all(&s[1].as_f64().to_le_bytes())?;
        }
        Ok(())
    }

    /// Inverse of [`write_binary`](Self::write_binary). Derivative data is
    /// not part of the format, so the result supports sample access but
    /// re-derives Hermite slopes by finite differences.
    pub fn read_binary<R: Read>(mut r: R) -> io::Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if magic != TRAJECTORY_MAGIC {
            return Err(io::Error::new(io::ErrorKind::InvalidData, "bad magic"));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        if u32::from_le_bytes(b4) != TRAJECTORY_VERSION {
            return Err(io::Error::new(io::ErrorKind::InvalidData, "bad version"));
        }
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8)?;
        let dt = f64::from_le_bytes(b8);
        r.read_exact(&mut b8)?;
        let count = u64::from_le_bytes(b8) as usize;
        let mut states = Vec::with_capacity(count);
        for _ in 0..count {
            r.read_exact(&mut b8)?;
            let x = f64::from_le_bytes(b8);
            r.read_exact(&mut b8)?;
            let y = f64::from_le_bytes(b8);
            states.push([T::lit(x), T::lit(y)]);
        }
        if states.len() < 2 {
            return Err(io::Error::new(io::ErrorKind::InvalidData, "too short"));
        }
        let dt = T::lit(dt);
        let mut derivs = vec![[T::zero(); 2]; states.len()];
        let n = states.len();
        for i in 0..n {
            let (a, b, h) = if i == 0 {
                (0, 1, dt)
            } else if i == n - 1 {
                (n - 2, n - 1, dt)
            } else {
                (i - 1, i + 1, dt + dt)
            };
            derivs[i] = [
                (states[b][0] - states[a][0]) / h,
                (states[b][1] - states[a][1]) / h,
            ];
        }
        Ok(Self::new(T::zero(), dt, states, derivs))
    }
}

/// Cubic Hermite basis evaluation for both components on one segment.
#[inline]
pub(crate) fn hermite_pair<T: Real>(
    s0: [T; 2],
    s1: [T; 2],
    d0: [T; 2],
    d1: [T; 2],
    h: T,
    u: T,
) -> [T; 2] {
    let u2 = u * u;
    let u3 = u2 * u;
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    let h00 = two * u3 - three * u2 + T::one();
    let h10 = u3 - two * u2 + u;
    let h01 = -two * u3 + three * u2;
    let h11 = u3 - u2;
    [
        h00 * s0[0] + h10 * h * d0[0] + h01 * s1[0] + h11 * h * d1[0],
        h00 * s0[1] + h10 * h * d0[1] + h01 * s1[1] + h11 * h * d1[1],
    ]
}

/// Interpolate a single scalar component (used by the integrator's
/// history ring, which only needs the position).
#[inline]
pub(crate) fn hermite_scalar<T: Real>(x0: T, x1: T, d0: T, d1: T, h: T, u: T) -> T {
    let u2 = u * u;
    let u3 = u2 * u;
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    (two * u3 - three * u2 + T::one()) * x0
        + (u3 - two * u2 + u) * h * d0
        + (-two * u3 + three * u2) * x1
        + (u3 - u2) * h * d1
}
