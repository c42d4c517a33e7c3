//! Bracketing root finding for strictly monotone functions.
//!
//! Only bracket-preserving methods are used: the functions we solve
//! (Laplace transforms, balance gaps) are strictly monotone, and bisection
//! on a sign change cannot be fooled by a bad derivative.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Expands `hi` by doubling until `f(hi)` changes sign relative to `f(lo)`.
///
/// `f(lo)` must be nonzero; gives up after `max_doublings`.
pub fn expand_upper<R: Real>(
    f: &impl Fn(R) -> R,
    lo: R,
    mut hi: R,
    max_doublings: u32,
) -> Result<(R, R)> {
    let f_lo = f(lo);
    if f_lo == R::zero() {
        return Ok((lo, lo));
    }
    for _ in 0..max_doublings {
        let f_hi = f(hi);
        if f_hi == R::zero() || (f_lo > R::zero()) != (f_hi > R::zero()) {
            return Ok((lo, hi));
        }
        hi *= R::of(2.0);
    }
    Err(Error::Numerical(format!(
        "no sign change found while expanding bracket up to {hi}"
    )))
}

/// Bisection on a sign-changing bracket `[lo, hi]`.
///
/// Iterates until the bracket width falls below `x_tol` (absolute) or the
/// midpoint evaluates to exactly zero. Returns the midpoint of the final
/// bracket.
pub fn bisect<R: Real>(f: impl Fn(R) -> R, lo: R, hi: R, x_tol: R) -> Result<R> {
    let (mut lo, mut hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == R::zero() {
        return Ok(lo);
    }
    if f_hi == R::zero() {
        return Ok(hi);
    }
    if (f_lo > R::zero()) == (f_hi > R::zero()) {
        return Err(Error::Numerical(format!(
            "bisection bracket [{lo}, {hi}] does not change sign"
        )));
    }
    // 200 iterations is far more than enough to exhaust f64 resolution.
    for _ in 0..200 {
        let mid = R::of(0.5) * (lo + hi);
        if hi - lo <= x_tol || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let f_mid = f(mid);
        if f_mid == R::zero() {
            return Ok(mid);
        }
        if (f_mid > R::zero()) == (f_lo > R::zero()) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(R::of(0.5) * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_simple_root() {
        let root = bisect(|x: f64| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((root - 2.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn expand_then_bisect() {
        let f = |x: f64| 3.0 - x;
        let (lo, hi) = expand_upper(&f, 1e-8, 1.0, 60).unwrap();
        assert!(f(lo) > 0.0 && f(hi) <= 0.0);
        let root = bisect(f, lo, hi, 1e-13).unwrap();
        assert!((root - 3.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bracket_without_sign_change() {
        assert!(bisect(|x: f64| x * x + 1.0, -1.0, 1.0, 1e-12).is_err());
    }
}
