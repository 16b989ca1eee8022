//! Scalar abstraction for the numeric kernels.
//!
//! Everything that is pure math (models, allocator, budget, coding, simulator)
//! is generic over [`Real`] so the same code runs on `f32` and `f64`. The
//! crate-root aliases pin `f64`, which is what the acceptance tolerances
//! assume; `f32` is available for callers that want cheap matrices.

use num_traits::{Float, NumCast};

/// Floating-point scalar: `f32` or `f64`.
pub trait Real: Float + core::fmt::Debug + core::fmt::Display + Send + Sync + 'static {
    /// Converts an `f64` constant into `Self`, rounding if needed.
    fn of(value: f64) -> Self {
        NumCast::from(value).expect("finite f64 constant")
    }

    /// Converts a row count into `Self`.
    fn of_count(value: u64) -> Self {
        NumCast::from(value).expect("row count fits the scalar type")
    }

    /// Widens `self` to `f64`.
    fn as_f64(self) -> f64 {
        self.to_f64().expect("real scalar converts to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}
