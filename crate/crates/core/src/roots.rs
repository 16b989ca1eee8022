//! Scalar root finding: bisection with bracket expansion.
//!
//! The transcendental equations solved here (the per-worker λ equation and the
//! budget factor equation) are monotone past their trivial roots, so bisection
//! is unconditionally convergent and needs no derivatives.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Doubles the bracket width above `lo` until `f` changes sign.
///
/// `f(lo)` must be negative; returns `(a, b)` with `f(a) < 0 <= f(b)`.
pub fn expand_bracket<R: Real>(lo: R, initial_width: R, f: impl Fn(R) -> R) -> Result<(R, R)> {
    let f_lo = f(lo);
    if f_lo == R::zero() {
        return Ok((lo, lo));
    }
    if f_lo > R::zero() {
        return Err(Error::RootSearch(format!(
            "f({lo}) = {f_lo} is not negative at the lower bracket end"
        )));
    }
    let mut width = initial_width;
    let mut a = lo;
    for _ in 0..512 {
        let b = lo + width;
        let fb = f(b);
        if fb >= R::zero() {
            return Ok((a, b));
        }
        a = b;
        width = width + width;
    }
    Err(Error::RootSearch(
        "no sign change found while expanding the bracket".into(),
    ))
}

/// Bisection on `[lo, hi]` with `f(lo) <= 0 <= f(hi)`.
///
/// Stops when the bracket is narrower than `tol` or cannot shrink further at
/// the working precision.
pub fn bisect<R: Real>(mut lo: R, mut hi: R, tol: R, f: impl Fn(R) -> R) -> Result<R> {
    let mut f_lo = f(lo);
    if f_lo == R::zero() {
        return Ok(lo);
    }
    if f(hi) < R::zero() || f_lo > R::zero() {
        return Err(Error::RootSearch(format!(
            "bisection bracket [{lo}, {hi}] does not straddle a root"
        )));
    }
    for _ in 0..4096 {
        let mid = (lo + hi) * R::of(0.5);
        if mid <= lo || mid >= hi {
            break; // bracket no longer representable
        }
        let f_mid = f(mid);
        if f_mid == R::zero() {
            return Ok(mid);
        }
        if (f_mid < R::zero()) == (f_lo < R::zero()) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
        if hi - lo <= tol {
            break;
        }
    }
    Ok((lo + hi) * R::of(0.5))
}
