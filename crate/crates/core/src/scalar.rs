//! Scalar abstraction shared by every numerical routine in the crate.
//!
//! All signal-processing code is written against [`Real`], so the same
//! pipeline runs in single or double precision. The simulation harness
//! instantiates it with `f64`.

use std::fmt::{Debug, Display};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use rustfft::FftNum;

/// Floating-point scalar usable by the DSP, channel and detection layers.
pub trait Real:
    Float
    + NumAssign
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + FftNum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`; every supported scalar can represent
    /// (an approximation of) any finite `f64`.
    #[inline]
    fn of(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("finite f64 converts to scalar")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex baseband sample.
pub type Cplx<T> = Complex<T>;

/// `e^{-j 2π k d / n}` for integer `k`, `d`, `n`.
#[inline]
pub fn twiddle<T: Real>(k: usize, d: i64, n: usize) -> Cplx<T> {
    let n = n as i64;
    // reduce the product first so the phase argument stays small
    let r = ((k as i64 % n) * (d.rem_euclid(n))).rem_euclid(n);
    let theta = -2.0 * std::f64::consts::PI * r as f64 / n as f64;
    Cplx::new(T::of(theta.cos()), T::of(theta.sin()))
}

#[inline]
pub fn cplx<T: Real>(re: f64, im: f64) -> Cplx<T> {
    Cplx::new(T::of(re), T::of(im))
}
