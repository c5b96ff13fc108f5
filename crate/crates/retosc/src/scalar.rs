//! Scalar abstraction: all numerics are generic over [`Real`], implemented
//! for `f32` and `f64`. Concrete `f64` aliases live at the crate root.

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, Signed, ToPrimitive};
use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

/// Floating-point scalar of the oscillator lab.
///
/// The supertrait set is what the integrator, the spectral code (`rustfft`)
/// and the parallel sweeps jointly need.
pub trait Real:
    Float
    + FloatConst
    + NumAssign
    + FromPrimitive
    + ToPrimitive
    + Signed
    + Sum
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Convert an `f64` literal to `Self` (exact for `f64`).
    fn lit(v: f64) -> Self;

    /// Widen to `f64` (exact for `f32` and `f64`).
    fn as_f64(self) -> f64;

    fn from_usize_(n: usize) -> Self {
        Self::lit(n as f64)
    }
}

impl Real for f32 {
    #[inline]
    fn lit(v: f64) -> f32 {
        v as f32
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    #[inline]
    fn lit(v: f64) -> f64 {
        v
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}

/// Error function, accurate to about 1e-14 in `f64`.
///
/// Maclaurin series on |x| <= 3, asymptotic complement beyond (where
/// erf is within 2.2e-5 of +-1 and the tail expansion converges fast).
pub fn erf<T: Real>(x: T) -> T {
    let ax = x.abs();
    if ax <= T::lit(3.0) {
        // 2/sqrt(pi) * sum_{n>=0} (-1)^n x^(2n+1) / (n! (2n+1))
        let x2 = x * x;
        let mut term = x;
        let mut sum = x;
        let mut n = T::one();
        loop {
            term = term * (-x2) / n;
            let contrib = term / (n + n + T::one());
            let next = sum + contrib;
            if next == sum {
                break;
            }
            sum = next;
            n += T::one();
        }
        sum * T::lit(2.0) * T::FRAC_1_PI().sqrt()
    } else {
        // erf(x) = sign(x) * (1 - erfc(|x|)), erfc via the asymptotic series
        // e^(-x^2)/(x sqrt(pi)) * (1 - 1/(2x^2) + 3/(4x^4) - ...)
        let inv2x2 = (T::lit(2.0) * ax * ax).recip();
        let mut term = T::one();
        let mut sum = T::one();
        let mut m = T::one();
        for _ in 0..20 {
            term = -term * m * inv2x2;
            if term.abs() >= m.abs() {
                break;
            }
            let next = sum + term;
            if next == sum {
                break;
            }
            sum = next;
            m += T::lit(2.0);
        }
        let erfc = (-ax * ax).exp() / (ax * T::PI().sqrt()) * sum;
        (T::one() - erfc).copysign(x)
    }
}
