//! Scalar abstraction for the closed-form models.
//!
//! Everything that is pure arithmetic over probabilities (patch survival,
//! Ochiai, expected mutation scores, selection metrics) is written against
//! [`Real`] so it can be evaluated in `f32` or `f64`. Sampling code works in
//! `f64` and converts at the boundary.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point: `f32` or `f64`.
pub trait Real: Float + FromPrimitive + ToPrimitive + Sum + Default + Debug + Display + Send + Sync + 'static {
    /// Converts an `f64` literal or input value.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 is representable in every Real")
    }

    /// Converts a count.
    fn of_count(n: u64) -> Self {
        Self::from_u64(n).expect("counts are representable in every Real")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `(1 - p)^k` evaluated as `exp(k * ln(1 - p))`.
///
/// Stays accurate for large `k` (hundreds of covering tests) and returns
/// exactly 1 for `k = 0`, including the `p = 1` corner where the naive
/// log-space product would be `0 * -inf`.
pub fn survival_power<T: Real>(p: T, k: u64) -> T {
    if k == 0 {
        return T::one();
    }
    if p >= T::one() {
        return T::zero();
    }
    (T::of_count(k) * (-p).ln_1p()).exp()
}
