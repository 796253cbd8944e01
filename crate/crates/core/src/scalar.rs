//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real floating-point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + LowerExp
    + Default
    + Send
    + Sync
    + 'static
{
    /// Probabilities below this are treated as exact zeros when forming angle ratios.
    const UNDERFLOW: Self;
    /// Target relative accuracy for iterative routines (AGM, Jacobi sweeps).
    const TOLERANCE: Self;

    /// Lossless-enough conversion from an `f64` literal.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable")
    }

    /// Conversion from an integer count or index.
    #[inline]
    fn from_usize_lossy(v: usize) -> Self {
        Self::from_usize(v).expect("integer representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite conversion to f64")
    }
}

impl Real for f64 {
    const UNDERFLOW: Self = 1e-300;
    const TOLERANCE: Self = 1e-15;
}

impl Real for f32 {
    const UNDERFLOW: Self = 1e-37;
    const TOLERANCE: Self = 1e-7;
}

/// Error-free transformation `a + b = s + e` (Knuth two-sum).
#[inline]
pub fn two_sum<T: Real>(a: T, b: T) -> (T, T) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

/// Compensated (Neumaier) accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum<T: Real> {
    sum: T,
    carry: T,
}

impl<T: Real> CompensatedSum<T> {
    pub fn new() -> Self {
        Self {
            sum: T::zero(),
            carry: T::zero(),
        }
    }

    #[inline]
    pub fn add(&mut self, v: T) {
        let (s, e) = two_sum(self.sum, v);
        self.sum = s;
        self.carry = self.carry + e;
    }

    pub fn value(&self) -> T {
        self.sum + self.carry
    }
}

impl<T: Real> FromIterator<T> for CompensatedSum<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut acc = Self::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// Compensated sum of a slice.
pub fn compensated_sum<T: Real>(values: &[T]) -> T {
    values.iter().copied().collect::<CompensatedSum<T>>().value()
}

/// Format with 17 significant digits, the shortest width that round-trips an `f64`.
pub fn fmt17<T: Real>(v: T) -> String {
    format!("{:.16e}", v.as_f64())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut values = vec![1.0f64];
        values.extend(std::iter::repeat_n(1e-16, 10_000));
        let naive: f64 = values.iter().sum();
        let comp = compensated_sum(&values);
        assert_eq!(naive, 1.0);
        assert!((comp - (1.0 + 1e-12)).abs() < 1e-15);
    }

    #[test]
    fn fmt17_round_trips() {
        for v in [std::f64::consts::PI, -1e-300, 0.1 + 0.2, 123456789.0] {
            let s = fmt17(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
        }
    }
}
