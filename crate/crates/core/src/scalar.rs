//! Scalar abstraction for the queueing and decision math.
//!
//! Everything in [`crate::demand`], [`crate::queues`] and [`crate::policy`] is
//! written against [`Scalar`] so it can be evaluated in `f32` or `f64`. The
//! market engine itself runs on [`crate::Real`].

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar usable by the decision rules: `f32` or `f64`.
pub trait Scalar: Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static {
    /// Converts an `f64` literal. Panics only if the target cannot represent
    /// finite `f64` values at all, which is never the case for `f32`/`f64`.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("finite literal representable in scalar type")
    }

    /// Converts a task count.
    #[inline]
    fn count(n: u64) -> Self {
        Self::from_u64(n).expect("task count representable in scalar type")
    }

    /// Largest integer task count not exceeding `self` (0 for negatives / NaN).
    #[inline]
    fn floor_count(self) -> u64 {
        if self > Self::zero() {
            self.floor().to_u64().unwrap_or(u64::MAX)
        } else {
            0
        }
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
