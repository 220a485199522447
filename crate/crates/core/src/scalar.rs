//! Scalar abstraction shared by every numerical module.
//!
//! All kernels are written against [`Real`], which is implemented for `f32`
//! and `f64`. Physical constants are stored as `f64` and converted with
//! [`Real::lit`].

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rustfft::FftNum;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Floating-point scalar usable by the simulator.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + FftNum
    + Sum
    + Default
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + serde::Serialize
    + 'static
{
    /// Converts an `f64` literal or constant.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 value is representable")
    }

    /// Converts a count or index.
    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count is representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Tolerance floor used where a check is specified at f64 precision.
    #[inline]
    fn tolerance(f64_tol: f64) -> Self {
        Self::lit(f64_tol).max(Self::epsilon() * Self::lit(64.0))
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `sin(x)/x` with the removable singularity filled in.
#[inline]
pub fn sinc<T: Real>(x: T) -> T {
    if x.abs() < T::lit(1e-4) {
        let x2 = x * x;
        T::one() - x2 / T::lit(6.0) + x2 * x2 / T::lit(120.0)
    } else {
        x.sin() / x
    }
}

/// Neumaier-compensated accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum<T> {
    sum: T,
    compensation: T,
}

impl<T: Real> CompensatedSum<T> {
    pub fn new() -> Self {
        Self {
            sum: T::zero(),
            compensation: T::zero(),
        }
    }

    #[inline]
    pub fn add(&mut self, x: T) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation = self.compensation + ((self.sum - t) + x);
        } else {
            self.compensation = self.compensation + ((x - t) + self.sum);
        }
        self.sum = t;
    }

    #[inline]
    pub fn total(&self) -> T {
        self.sum + self.compensation
    }
}

impl<T: Real> FromIterator<T> for CompensatedSum<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut acc = Self::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Compensated sum of an iterator.
pub fn compensated_sum<T: Real, I: IntoIterator<Item = T>>(iter: I) -> T {
    iter.into_iter().collect::<CompensatedSum<T>>().total()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sinc_limits() {
        assert_eq!(sinc(0.0_f64), 1.0);
        assert!((sinc(std::f64::consts::FRAC_PI_2) - 2.0 / std::f64::consts::PI).abs() < 1e-15);
        // series branch joins the closed form smoothly
        let x = 0.999e-4_f64;
        assert!((sinc(x) - x.sin() / x).abs() < 1e-16);
        assert!((sinc(1e-4_f32) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut terms = vec![1.0_f64];
        terms.extend(std::iter::repeat_n(1e-16, 10_000));
        terms.push(-1.0);
        let naive: f64 = terms.iter().sum();
        let comp = compensated_sum(terms.iter().copied());
        assert!((comp - 1e-12).abs() < 1e-20);
        assert!((naive - 1e-12).abs() > 1e-14);
    }
}
