//! Adaptive quadrature.
//!
//! Everything is built on a 15-point Gauss–Kronrod rule with global
//! bisection of the worst interval. Integrals over `(0, ∞)` are taken in the
//! variable `u = ln x`, which turns power-law behaviour at either end into
//! exponential decay (or growth, which is how divergence is detected).

use num_complex::Complex;

use crate::real::Real;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadStatus {
    Converged,
    /// Partial values exceeded the divergence cap or kept growing.
    Diverged,
    NotConverged,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral<T> {
    pub value: T,
    pub error: T,
    pub status: QuadStatus,
}

impl<T: Real> Integral<T> {
    pub fn is_converged(&self) -> bool {
        self.status == QuadStatus::Converged
    }

    /// Value with divergence mapped to `+∞`; `None` when unresolved.
    pub fn finite_or_infinite(&self) -> Option<T> {
        match self.status {
            QuadStatus::Converged => Some(self.value),
            QuadStatus::Diverged => Some(T::infinity()),
            QuadStatus::NotConverged => None,
        }
    }

    fn combine(self, other: Integral<T>) -> Integral<T> {
        let status = match (self.status, other.status) {
            (QuadStatus::Diverged, _) | (_, QuadStatus::Diverged) => QuadStatus::Diverged,
            (QuadStatus::NotConverged, _) | (_, QuadStatus::NotConverged) => {
                QuadStatus::NotConverged
            }
            _ => QuadStatus::Converged,
        };
        Integral {
            value: self.value + other.value,
            error: self.error + other.error,
            status,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerance<T> {
    pub abs: T,
    pub rel: T,
    pub max_intervals: usize,
    /// Magnitude above which a partial result is declared divergent.
    pub cap: T,
}

impl<T: Real> Default for Tolerance<T> {
    fn default() -> Self {
        Tolerance {
            abs: T::quad_tol(),
            rel: T::quad_tol(),
            max_intervals: 400,
            cap: T::lit(1e12),
        }
    }
}

impl<T: Real> Tolerance<T> {
    pub fn with_cap(mut self, cap: T) -> Self {
        self.cap = cap;
        self
    }

    fn target(&self, value: T) -> T {
        self.abs.max(self.rel * value.abs())
    }
}

fn gauss_kronrod<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T) -> (T, T) {
    let half = (b - a) * T::lit(0.5);
    let center = (a + b) * T::lit(0.5);
    let fc = f(center);
    let mut kronrod = fc * T::lit(WGK[7]);
    let mut gauss = fc * T::lit(WG[3]);
    for j in 0..7 {
        let dx = half * T::lit(XGK[j]);
        let pair = f(center - dx) + f(center + dx);
        kronrod = kronrod + T::lit(WGK[j]) * pair;
        if j % 2 == 1 {
            gauss = gauss + T::lit(WG[j / 2]) * pair;
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).abs();
    (value, error)
}

/// Adaptive integral of `f` over the finite interval `[a, b]`.
pub fn integrate<T: Real, F: Fn(T) -> T>(f: F, a: T, b: T, tol: &Tolerance<T>) -> Integral<T> {
    if a == b {
        return Integral {
            value: T::zero(),
            error: T::zero(),
            status: QuadStatus::Converged,
        };
    }
    let (v, e) = gauss_kronrod(&f, a, b);
    let mut pieces = vec![(a, b, v, e)];
    let mut total = v;
    let mut total_err = e;
    loop {
        if !total.is_finite() || total.abs() > tol.cap {
            return Integral {
                value: total,
                error: total_err,
                status: QuadStatus::Diverged,
            };
        }
        if total_err <= tol.target(total) {
            return Integral {
                value: total,
                error: total_err,
                status: QuadStatus::Converged,
            };
        }
        if pieces.len() >= tol.max_intervals {
            return Integral {
                value: total,
                error: total_err,
                status: QuadStatus::NotConverged,
            };
        }
        let (worst, _) = pieces
            .iter()
            .enumerate()
            .fold((0, T::neg_infinity()), |acc, (i, p)| {
                if p.3 > acc.1 {
                    (i, p.3)
                } else {
                    acc
                }
            });
        let (lo, hi, pv, pe) = pieces.swap_remove(worst);
        let mid = (lo + hi) * T::lit(0.5);
        if mid <= lo || mid >= hi {
            // Interval can no longer be split in this precision.
            return Integral {
                value: total,
                error: total_err,
                status: if total_err <= tol.target(total) * T::lit(1e3) {
                    QuadStatus::Converged
                } else {
                    QuadStatus::NotConverged
                },
            };
        }
        let (v1, e1) = gauss_kronrod(&f, lo, mid);
        let (v2, e2) = gauss_kronrod(&f, mid, hi);
        total = total - pv + v1 + v2;
        total_err = total_err - pe + e1 + e2;
        if total_err < T::zero() {
            total_err = pieces.iter().map(|p| p.3).sum::<T>() + e1 + e2;
        }
        pieces.push((lo, mid, v1, e1));
        pieces.push((mid, hi, v2, e2));
    }
}

/// Integrates `g` from `start` towards `±∞` (sign of `direction`) over
/// windows of doubling width, stopping once a window contributes nothing
/// significant.
fn expand<T: Real, G: Fn(T) -> T>(
    g: &G,
    start: T,
    direction: T,
    limit: T,
    tol: &Tolerance<T>,
) -> Integral<T> {
    let mut total = T::zero();
    let mut err = T::zero();
    let mut width = T::one();
    let mut pos = start;
    let mut prev_contrib = T::infinity();
    let mut windows = 0usize;
    loop {
        let remaining = limit - pos * direction;
        if remaining <= T::zero() {
            let last = prev_contrib;
            let small = last <= tol.target(total);
            return Integral {
                value: total,
                error: err + last,
                status: if small {
                    QuadStatus::Converged
                } else {
                    QuadStatus::Diverged
                },
            };
        }
        let w = width.min(remaining);
        let next = pos + direction * w;
        let (lo, hi) = if direction > T::zero() {
            (pos, next)
        } else {
            (next, pos)
        };
        let piece = integrate(g, lo, hi, tol);
        total = total + piece.value;
        err = err + piece.error;
        windows += 1;
        if piece.status == QuadStatus::Diverged || !total.is_finite() || total.abs() > tol.cap {
            return Integral {
                value: total,
                error: err,
                status: QuadStatus::Diverged,
            };
        }
        let contrib = piece.value.abs();
        if windows >= 2 && contrib <= tol.target(total) * T::lit(0.1) && prev_contrib <= tol.target(total) {
            return Integral {
                value: total,
                error: err + contrib,
                status: if piece.status == QuadStatus::NotConverged {
                    QuadStatus::NotConverged
                } else {
                    QuadStatus::Converged
                },
            };
        }
        prev_contrib = contrib;
        pos = next;
        width = width * T::lit(2.0);
    }
}

fn log_breaks<T: Real>(breaks: &[T]) -> Vec<T> {
    let mut u: Vec<T> = breaks
        .iter()
        .filter(|b| b.is_finite() && **b > T::zero())
        .map(|b| b.ln())
        .collect();
    u.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));
    u.dedup();
    if u.is_empty() {
        u.push(T::zero());
    }
    u
}

/// `∫_0^∞ f(x) dx`, splitting at the given breakpoints (kinks, support ends).
pub fn integrate_positive<T: Real, F: Fn(T) -> T>(
    f: F,
    breaks: &[T],
    tol: &Tolerance<T>,
) -> Integral<T> {
    let g = |u: T| {
        let x = u.exp();
        if x == T::zero() || !x.is_finite() {
            T::zero()
        } else {
            f(x) * x
        }
    };
    let u = log_breaks(breaks);
    let limit = T::log_range();
    let mut acc = expand(&g, u[0], -T::one(), limit, tol);
    for w in u.windows(2) {
        acc = acc.combine(integrate(g, w[0], w[1], tol));
    }
    acc.combine(expand(&g, *u.last().expect("nonempty"), T::one(), limit, tol))
}

/// `∫_a^∞ f(x) dx` for `a > 0`.
pub fn integrate_above<T: Real, F: Fn(T) -> T>(f: F, a: T, tol: &Tolerance<T>) -> Integral<T> {
    let g = |u: T| {
        let x = u.exp();
        if !x.is_finite() {
            T::zero()
        } else {
            f(x) * x
        }
    };
    expand(&g, a.ln(), T::one(), T::log_range(), tol)
}

/// `∫_0^b f(x) dx` for `b > 0`, tolerating integrable singularities at 0.
pub fn integrate_below<T: Real, F: Fn(T) -> T>(f: F, b: T, tol: &Tolerance<T>) -> Integral<T> {
    let g = |u: T| {
        let x = u.exp();
        if x == T::zero() {
            T::zero()
        } else {
            f(x) * x
        }
    };
    expand(&g, b.ln(), -T::one(), T::log_range(), tol)
}

/// Wynn's epsilon extrapolation of a sequence of partial sums.
pub fn wynn_epsilon<T: Real>(seq: &[T]) -> T {
    let n = seq.len();
    if n < 3 {
        return *seq.last().expect("nonempty sequence");
    }
    // Use an odd number of terms so the final column is an even one.
    let start = if n.is_multiple_of(2) { 1 } else { 0 };
    let mut prev: Vec<T> = vec![T::zero(); n - start + 1];
    let mut cur: Vec<T> = seq[start..].to_vec();
    let mut best = *cur.last().expect("nonempty");
    let mut column = 0usize;
    while cur.len() > 1 {
        let mut next = Vec::with_capacity(cur.len() - 1);
        for i in 0..cur.len() - 1 {
            let diff = cur[i + 1] - cur[i];
            if diff == T::zero() || !diff.is_finite() {
                return if column.is_multiple_of(2) { cur[i + 1] } else { best };
            }
            next.push(prev[i + 1] + T::one() / diff);
        }
        prev = cur;
        cur = next;
        column += 1;
        if column.is_multiple_of(2) {
            let candidate = *cur.last().expect("nonempty");
            if candidate.is_finite() {
                best = candidate;
            }
        }
    }
    best
}

/// `∫_0^∞ e^{iωx} h(x) dx` for a nonincreasing `h` vanishing at infinity
/// (integrable singularity at 0 allowed). Half-period pieces are summed and
/// the partial sums accelerated with the epsilon algorithm.
pub fn fourier_positive<T: Real, H: Fn(T) -> T>(
    h: H,
    omega: T,
    tol: &Tolerance<T>,
) -> Result<Complex<T>, Integral<T>> {
    if omega == T::zero() {
        return Err(Integral {
            value: T::nan(),
            error: T::nan(),
            status: QuadStatus::NotConverged,
        });
    }
    let sign = omega.signum();
    let w = omega.abs();
    let period = T::PI() / w;
    let first_re = integrate_below(|x| h(x) * (w * x).cos(), period, tol);
    let first_im = integrate_below(|x| h(x) * (w * x).sin(), period, tol);
    if !first_re.is_converged() || !first_im.is_converged() {
        let bad = if first_re.is_converged() { first_im } else { first_re };
        return Err(bad);
    }
    let mut re_sums = vec![first_re.value];
    let mut im_sums = vec![first_im.value];
    let mut err = first_re.error + first_im.error;
    let mut last_estimate = Complex::new(first_re.value, first_im.value);
    let mut stable_count = 0;
    const WINDOW: usize = 31;
    for k in 1..20_000usize {
        let a = period * T::from_usize(k).expect("index");
        let b = a + period;
        let re = integrate(|x| h(x) * (w * x).cos(), a, b, tol);
        let im = integrate(|x| h(x) * (w * x).sin(), a, b, tol);
        err = err + re.error + im.error;
        let re_next = *re_sums.last().expect("nonempty") + re.value;
        let im_next = *im_sums.last().expect("nonempty") + im.value;
        re_sums.push(re_next);
        im_sums.push(im_next);
        let from = re_sums.len().saturating_sub(WINDOW);
        let estimate = Complex::new(
            wynn_epsilon(&re_sums[from..]),
            wynn_epsilon(&im_sums[from..]),
        );
        let change = (estimate - last_estimate).norm();
        let scale = estimate.norm();
        let term = Complex::new(re.value, im.value).norm();
        if k >= 6 && (change <= tol.target(scale) || term <= tol.target(scale) * T::lit(1e-3)) {
            stable_count += 1;
            if stable_count >= 3 {
                return Ok(Complex::new(estimate.re, sign * estimate.im));
            }
        } else {
            stable_count = 0;
        }
        last_estimate = estimate;
    }
    Err(Integral {
        value: last_estimate.re,
        error: err,
        status: QuadStatus::NotConverged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerance<f64> {
        Tolerance::default()
    }

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x: f64| x * x, 0.0, 3.0, &tol());
        assert!(r.is_converged());
        assert!((r.value - 9.0).abs() < 1e-12);
    }

    #[test]
    fn halfline_with_power_singularity() {
        // ∫_0^∞ x^{-1/2} e^{-x} dx = √π
        let r = integrate_positive(|x: f64| x.powf(-0.5) * (-x).exp(), &[], &tol());
        assert!(r.is_converged(), "{r:?}");
        assert!((r.value - std::f64::consts::PI.sqrt()).abs() < 1e-8);
    }

    #[test]
    fn detects_power_divergence_at_zero() {
        let r = integrate_below(|x: f64| x.powi(-2), 1.0, &tol());
        assert_eq!(r.status, QuadStatus::Diverged);
    }

    #[test]
    fn detects_log_divergence_at_infinity() {
        let r = integrate_above(|x: f64| 1.0 / x, 1.0, &tol());
        assert_eq!(r.status, QuadStatus::Diverged);
    }

    #[test]
    fn single_precision_quadrature() {
        let r = integrate_positive(|x: f32| (-x).exp(), &[], &Tolerance::default());
        assert!(r.is_converged());
        assert!((r.value - 1.0).abs() < 1e-4);
    }

    #[test]
    fn compact_support_with_breaks() {
        let f = |x: f64| if (2.0..=5.0).contains(&x) { 1.0 } else { 0.0 };
        let r = integrate_positive(f, &[2.0, 5.0], &tol());
        assert!((r.value - 3.0).abs() < 1e-9, "{r:?}");
    }

    #[test]
    fn wynn_accelerates_alternating_series() {
        // partial sums of ln 2 = 1 - 1/2 + 1/3 - ...
        let mut s = 0.0;
        let sums: Vec<f64> = (1..=15)
            .map(|k| {
                s += if k % 2 == 1 { 1.0 } else { -1.0 } / k as f64;
                s
            })
            .collect();
        assert!((wynn_epsilon(&sums) - 2f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn fourier_of_power_law() {
        // ∫_0^∞ e^{ix} x^{-1/2} dx = √(π/2) (1 + i)
        let r = fourier_positive(|x: f64| x.powf(-0.5), 1.0, &tol()).unwrap();
        let expect = (std::f64::consts::PI / 2.0).sqrt();
        assert!((r.re - expect).abs() < 1e-7, "{r}");
        assert!((r.im - expect).abs() < 1e-7, "{r}");
        let neg = fourier_positive(|x: f64| x.powf(-0.5), -1.0, &tol()).unwrap();
        assert!((neg.im + expect).abs() < 1e-7);
    }

    #[test]
    fn fourier_of_exponential() {
        // ∫_0^∞ e^{2ix} e^{-x} dx = 1/(1 - 2i)
        let r = fourier_positive(|x: f64| (-x).exp(), 2.0, &tol()).unwrap();
        let expect = Complex::new(1.0, 0.0) / Complex::new(1.0, -2.0);
        assert!((r - expect).norm() < 1e-8, "{r}");
    }
}
