//! Bracketing root finders for monotone scalar maps.

use crate::error::{Error, Result};
use crate::num::Real;

/// Hard cap on bisection halvings; beyond ~1100 an `f64` interval cannot shrink.
const MAX_BISECTIONS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket<T> {
    pub lo: T,
    pub hi: T,
    pub iterations: usize,
}

impl<T: Real> Bracket<T> {
    pub fn midpoint(&self) -> T {
        (self.lo + self.hi) / T::lit(2.0)
    }
}

/// Bisection on `[lo, hi]` for a function whose values at the two ends have
/// opposite signs (or vanish). Stops when the bracket is narrower than `tol`
/// or cannot shrink further. The returned bracket keeps the sign pattern of
/// the input, so `f(lo)` and `f(hi)` retain their original signs.
pub fn bisect<T: Real>(mut f: impl FnMut(T) -> T, lo: T, hi: T, tol: T) -> Result<Bracket<T>> {
    let (mut lo, mut hi) = (lo, hi);
    let f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == T::zero() {
        return Ok(Bracket { lo, hi: lo, iterations: 0 });
    }
    if f_hi == T::zero() {
        return Ok(Bracket { lo: hi, hi, iterations: 0 });
    }
    if f_lo.signum() == f_hi.signum() || f_lo.is_nan() || f_hi.is_nan() {
        return Err(Error::NoBracket {
            lo: lo.as_f64(),
            hi: hi.as_f64(),
            f_lo: f_lo.as_f64(),
            f_hi: f_hi.as_f64(),
        });
    }
    let lo_positive = f_lo > T::zero();
    let mut iterations = 0;
    while (hi - lo).abs() > tol && iterations < MAX_BISECTIONS {
        let mid = (lo + hi) / T::lit(2.0);
        if mid == lo || mid == hi {
            break;
        }
        let fm = f(mid);
        iterations += 1;
        if fm == T::zero() {
            return Ok(Bracket { lo: mid, hi: mid, iterations });
        }
        if (fm > T::zero()) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Bracket { lo, hi, iterations })
}

/// Root of a continuous, strictly decreasing function by the Illinois variant
/// of regula falsi. Exact in finitely many steps for piecewise-linear maps and
/// superlinear for smooth ones.
pub fn illinois<T: Real>(
    mut f: impl FnMut(T) -> T,
    lo: T,
    hi: T,
    tol: T,
    max_iter: usize,
) -> Result<(T, usize)> {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == T::zero() {
        return Ok((a, 0));
    }
    if fb == T::zero() {
        return Ok((b, 0));
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NoBracket {
            lo: a.as_f64(),
            hi: b.as_f64(),
            f_lo: fa.as_f64(),
            f_hi: fb.as_f64(),
        });
    }
    let mut side = 0i8;
    for it in 1..=max_iter {
        let mut c = (a * fb - b * fa) / (fb - fa);
        if !(c > a.min(b) && c < a.max(b)) {
            c = (a + b) / T::lit(2.0);
        }
        let fc = f(c);
        if fc == T::zero() || (b - a).abs() <= tol || fc.abs() <= tol * T::lit(1e-3) {
            return Ok((c, it));
        }
        if fc.signum() == fb.signum() {
            b = c;
            fb = fc;
            if side == -1 {
                fa /= T::lit(2.0);
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb /= T::lit(2.0);
            }
            side = 1;
        }
    }
    Err(Error::NotConverged {
        what: "regula falsi",
        iterations: max_iter,
        last_change: (b - a).abs().as_f64(),
    })
}
