//! Lévy measures and Radon intensities on `(0, ∞)`, described by tail functions.

mod intensity;
mod marks;
mod measure;
mod tabulated;

pub use intensity::RadonIntensity;
pub use marks::MarkDistribution;
pub use measure::{LevyKind, LevyMeasure, ValidityReport};
pub use tabulated::{Extrapolation, TabulatedTail};

use crate::real::Real;

/// `inf{x > 0 : tail(x) ≤ y}` for a nonincreasing `tail`, by geometric
/// bracketing and bisection in `ln x`. Returns `0` when `y` dominates the
/// whole tail and `+∞` when the tail never falls to `y`.
pub(crate) fn generalized_inverse<T: Real, F: Fn(T) -> T>(tail: F, y: T, hint: Option<T>) -> T {
    let range = T::log_range();
    let min_x = (-range).exp();
    let max_x = range.exp();
    let mut x = match hint {
        Some(h) if h > T::zero() && h.is_finite() => h,
        _ => T::one(),
    };
    let two = T::lit(2.0);
    let (mut lo, mut hi);
    if tail(x) > y {
        // move right until tail(hi) ≤ y
        let mut step = two;
        lo = x;
        loop {
            x = x * step;
            if x >= max_x {
                return if tail(max_x) <= y { max_x } else { T::infinity() };
            }
            if tail(x) <= y {
                hi = x;
                break;
            }
            lo = x;
            step = step * step;
        }
    } else {
        let mut step = two;
        hi = x;
        loop {
            x = x / step;
            if x <= min_x {
                return T::zero();
            }
            if tail(x) > y {
                lo = x;
                break;
            }
            hi = x;
            step = step * step;
        }
    }
    let tol = T::inverse_tol();
    while hi - lo > tol * hi {
        let mid = (lo * hi).sqrt();
        let mid = if mid <= lo || mid >= hi {
            (lo + hi) / two
        } else {
            mid
        };
        if mid <= lo || mid >= hi {
            break;
        }
        if tail(mid) <= y {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_of_power_tail() {
        let x = generalized_inverse(|x: f64| x.powf(-0.5), 4.0, None);
        assert!((x - 0.0625).abs() < 1e-10);
        let x = generalized_inverse(|x: f64| x.powf(-0.5), 1e-3, Some(0.5));
        assert!((x / 1e6 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn inverse_of_finite_tail() {
        let tail = |x: f64| if x < 1.0 { 2.0 } else if x < 3.0 { 1.0 } else { 0.0 };
        assert_eq!(generalized_inverse(tail, 5.0, None), 0.0);
        assert_eq!(generalized_inverse(tail, 2.0, None), 0.0);
        assert!((generalized_inverse(tail, 1.5, None) - 1.0).abs() < 1e-9);
        assert!((generalized_inverse(tail, 0.5, None) - 3.0).abs() < 1e-9);
    }
}
