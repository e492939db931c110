//! Special functions needed by the parametric Lévy measures.

use crate::real::Real;

/// Exponential integral `E₁(x) = ∫_x^∞ t⁻¹ e^{-t} dt` for `x > 0`.
pub fn exp_int_e1<T: Real>(x: T) -> T {
    if x <= T::zero() {
        return T::infinity();
    }
    let eps = T::epsilon();
    if x <= T::one() {
        // -γ - ln x - Σ (-x)^k / (k k!)
        let euler = T::lit(0.577_215_664_901_532_9);
        let mut sum = T::zero();
        let mut term = T::one();
        let mut k = 1usize;
        loop {
            let kf = T::from_usize(k).expect("small integer");
            term = term * (-x) / kf;
            let add = term / kf;
            sum = sum + add;
            if add.abs() <= eps * sum.abs().max(eps) || k > 200 {
                break;
            }
            k += 1;
        }
        -euler - x.ln() - sum
    } else {
        if x > T::log_range() {
            return T::zero();
        }
        // Modified Lentz evaluation of the continued fraction.
        let tiny = T::min_positive_value() / eps;
        let mut b = x + T::one();
        let mut c = T::one() / tiny;
        let mut d = T::one() / b;
        let mut h = d;
        for i in 1..500usize {
            let fi = T::from_usize(i).expect("small integer");
            let a = -fi * fi;
            b = b + T::lit(2.0);
            d = T::one() / (a * d + b);
            c = b + a / c;
            let del = c * d;
            h = h * del;
            if (del - T::one()).abs() <= eps {
                break;
            }
        }
        h * (-x).exp()
    }
}

/// Standard normal upper tail `P(N > z)`.
pub fn normal_sf(z: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(z / std::f64::consts::SQRT_2)
}

/// Regularized lower incomplete gamma `P(a, x)`, the Gamma(a) CDF at `x`.
pub fn regularized_gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x.is_infinite() {
        return 1.0;
    }
    let log_prefix = a * x.ln() - x - ln_gamma(a);
    if x < a + 1.0 {
        // Σ x^k / (a (a+1) … (a+k))
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut ap = a;
        for _ in 0..1000 {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * f64::EPSILON {
                break;
            }
        }
        (sum.ln() + log_prefix).exp().min(1.0)
    } else {
        // Lentz evaluation of the continued fraction for Q(a, x).
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..1000 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < f64::EPSILON {
                break;
            }
        }
        1.0 - (log_prefix.exp() * h).min(1.0)
    }
}

/// `ln Γ(a)` for `a > 0` (Lanczos, g = 7).
pub fn ln_gamma(a: f64) -> f64 {
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if a < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * a).sin()).ln() - ln_gamma(1.0 - a);
    }
    let x = a - 1.0;
    let mut s = COEF[0];
    for (i, c) in COEF.iter().enumerate().skip(1) {
        s += c / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + s.ln()
}
