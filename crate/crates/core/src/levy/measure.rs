use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::{generalized_inverse, MarkDistribution, RadonIntensity, TabulatedTail};
use crate::error::{invalid, Error, Result};
use crate::quad::{integrate, integrate_below, integrate_positive, Integral, QuadStatus, Tolerance};
use crate::real::Real;
use crate::special::exp_int_e1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub enum LevyKind<T> {
    /// `H(x) = gamma · x^{-alpha}`.
    Stable { alpha: T, gamma: T },
    /// `H(x) = alpha · E₁(x)`, the jump measure of the Gamma(alpha) law.
    GammaLevy { alpha: T },
    /// `H(x) = ∫ ν(x/w, ∞) F(dw)`.
    ProductConvolution {
        nu: RadonIntensity<T>,
        marks: MarkDistribution<T>,
    },
    TabulatedTail(TabulatedTail<T>),
}

/// A Lévy measure on `(0, ∞)` described by its tail `H(x) = ρ(x, ∞)`.
#[derive(Debug, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
#[serde(try_from = "LevyKind<T>", into = "LevyKind<T>")]
pub struct LevyMeasure<T: Real> {
    kind: LevyKind<T>,
    small_jump_mean: OnceLock<Result<T>>,
}

impl<T: Real> Clone for LevyMeasure<T> {
    fn clone(&self) -> Self {
        let cell = OnceLock::new();
        if let Some(v) = self.small_jump_mean.get() {
            let _ = cell.set(v.clone());
        }
        LevyMeasure {
            kind: self.kind.clone(),
            small_jump_mean: cell,
        }
    }
}

impl<T: Real> PartialEq for LevyMeasure<T> {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl<T: Real> TryFrom<LevyKind<T>> for LevyMeasure<T> {
    type Error = Error;
    fn try_from(kind: LevyKind<T>) -> Result<Self> {
        LevyMeasure::new(kind)
    }
}

impl<T: Real> From<LevyMeasure<T>> for LevyKind<T> {
    fn from(m: LevyMeasure<T>) -> Self {
        m.kind
    }
}

/// Numerical evidence for the Lévy and small-jump integrability conditions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidityReport {
    pub is_levy: bool,
    pub small_jump_finite: bool,
    /// `∫ x²/(1+x²) ρ(dx)`, `+∞` when divergent.
    pub levy_integral: f64,
    pub levy_error: f64,
    /// `∫_(0,1] x ρ(dx)`, `+∞` when divergent.
    pub small_jump_mean: f64,
    pub small_jump_error: f64,
}

fn quad_error<T: Real>(context: &str, r: &Integral<T>) -> Error {
    Error::Quadrature {
        context: context.into(),
        value: r.value.as_f64(),
        error: r.error.as_f64(),
    }
}

fn centering_weight<T: Real>(x: T) -> T {
    if x.is_infinite() {
        T::zero()
    } else {
        x / (T::one() + x * x)
    }
}

impl<T: Real> LevyMeasure<T> {
    pub fn new(kind: LevyKind<T>) -> Result<Self> {
        match &kind {
            LevyKind::Stable { alpha, gamma } => {
                if !(*alpha > T::zero() && *alpha < T::lit(2.0)) {
                    return Err(invalid("alpha", format!("stable index must lie in (0, 2), got {alpha}")));
                }
                if !(*gamma > T::zero() && gamma.is_finite()) {
                    return Err(invalid("gamma", format!("must be positive, got {gamma}")));
                }
            }
            LevyKind::GammaLevy { alpha } => {
                if !(*alpha > T::zero() && alpha.is_finite()) {
                    return Err(invalid("alpha", format!("must be positive, got {alpha}")));
                }
            }
            LevyKind::ProductConvolution { nu, marks } => {
                marks.validate()?;
                if let RadonIntensity::PowerTail { alpha, .. } = nu {
                    if !(*alpha < T::lit(2.0)) {
                        return Err(invalid("alpha", format!("tail exponent must be below 2, got {alpha}")));
                    }
                }
            }
            LevyKind::TabulatedTail(_) => {}
        }
        Ok(LevyMeasure {
            kind,
            small_jump_mean: OnceLock::new(),
        })
    }

    pub fn stable(alpha: T, gamma: T) -> Result<Self> {
        Self::new(LevyKind::Stable { alpha, gamma })
    }

    pub fn gamma(alpha: T) -> Result<Self> {
        Self::new(LevyKind::GammaLevy { alpha })
    }

    pub fn product(nu: RadonIntensity<T>, marks: MarkDistribution<T>) -> Result<Self> {
        Self::new(LevyKind::ProductConvolution { nu, marks })
    }

    pub fn tabulated(table: TabulatedTail<T>) -> Result<Self> {
        Self::new(LevyKind::TabulatedTail(table))
    }

    pub fn kind(&self) -> &LevyKind<T> {
        &self.kind
    }

    /// `H(x) = ρ(x, ∞)` for `x > 0`.
    pub fn tail(&self, x: T) -> Result<T> {
        if !(x > T::zero()) {
            return Err(invalid("x", format!("tail argument must be positive, got {x}")));
        }
        match &self.kind {
            LevyKind::TabulatedTail(t) => t.tail(x),
            LevyKind::ProductConvolution { nu, marks } => {
                if let RadonIntensity::Tabulated(t) = nu {
                    // surface out-of-grid lookups instead of extrapolating silently
                    if let Some(atoms) = marks.atoms() {
                        for (w, _) in atoms {
                            t.tail(x / w)?;
                        }
                    }
                }
                marks.expect(|w| nu.tail_value(x / w))
            }
            _ => Ok(self.tail_value(x)),
        }
    }

    pub(crate) fn tail_value(&self, x: T) -> T {
        match &self.kind {
            LevyKind::Stable { alpha, gamma } => *gamma * x.powf(-*alpha),
            LevyKind::GammaLevy { alpha } => *alpha * exp_int_e1(x),
            LevyKind::ProductConvolution { nu, marks } => marks
                .expect(|w| nu.tail_value(x / w))
                .unwrap_or_else(|_| T::nan()),
            LevyKind::TabulatedTail(t) => t.tail_value(x),
        }
    }

    /// Generalized inverse `inf{x > 0 : H(x) ≤ y}`.
    pub fn tail_inverse(&self, y: T) -> T {
        self.tail_inverse_near(y, None)
    }

    /// Generalized inverse, starting the bracket search at `hint`.
    pub fn tail_inverse_near(&self, y: T, hint: Option<T>) -> T {
        if y.is_nan() {
            return T::nan();
        }
        match &self.kind {
            LevyKind::Stable { alpha, gamma } => {
                if y <= T::zero() {
                    T::infinity()
                } else {
                    (*gamma / y).powf(T::one() / *alpha)
                }
            }
            LevyKind::ProductConvolution {
                nu: RadonIntensity::PowerTail { alpha, scale },
                marks,
            } => {
                // ρ(x, ∞) = scale · E[W^α] · x^{-α}
                if y <= T::zero() {
                    T::infinity()
                } else {
                    (*scale * marks.alpha_moment(*alpha) / y).powf(T::one() / *alpha)
                }
            }
            LevyKind::TabulatedTail(t) => t.tail_inverse(y),
            _ => {
                if y <= T::zero() && self.mass_at_infinity() > T::zero() {
                    return T::infinity();
                }
                generalized_inverse(|x| self.tail_value(x), y, hint)
            }
        }
    }

    /// `lim_{x→∞} H(x)`; positive only for tabulated tails held constant past the grid.
    pub fn mass_at_infinity(&self) -> T {
        match &self.kind {
            LevyKind::TabulatedTail(t) => t.limit_at_infinity(),
            LevyKind::ProductConvolution {
                nu: RadonIntensity::Tabulated(t),
                ..
            } => t.limit_at_infinity(),
            _ => T::zero(),
        }
    }

    /// `sup_x H(x) = ρ(0, ∞)`.
    pub fn total_mass(&self) -> T {
        match &self.kind {
            LevyKind::TabulatedTail(t) => t.limit_at_zero(),
            LevyKind::ProductConvolution {
                nu: RadonIntensity::Tabulated(t),
                ..
            } => t.limit_at_zero(),
            _ => T::infinity(),
        }
    }

    /// Breakpoints where `H` may have kinks.
    pub(crate) fn kinks(&self) -> Vec<T> {
        let mut k = match &self.kind {
            LevyKind::TabulatedTail(t) => t.xs().to_vec(),
            LevyKind::ProductConvolution { nu, marks } => match marks.atoms() {
                Some(atoms) => nu
                    .kinks()
                    .into_iter()
                    .flat_map(|x| atoms.iter().map(move |(w, _)| x * *w))
                    .collect(),
                None => Vec::new(),
            },
            _ => Vec::new(),
        };
        k.push(T::one());
        k
    }

    /// `∫_(0,1] x ρ(dx)`, `+∞` when divergent.
    pub fn small_jump_mean(&self) -> Result<T> {
        self.small_jump_mean
            .get_or_init(|| self.small_jump_integral().and_then(|r| match r.status {
                QuadStatus::Converged => Ok(r.value),
                QuadStatus::Diverged => Ok(T::infinity()),
                QuadStatus::NotConverged => Err(quad_error("small-jump mean", &r)),
            }))
            .clone()
    }

    fn small_jump_integral(&self) -> Result<Integral<T>> {
        let exact = |value: T| Integral {
            value,
            error: T::zero(),
            status: if value.is_finite() {
                QuadStatus::Converged
            } else {
                QuadStatus::Diverged
            },
        };
        match &self.kind {
            LevyKind::Stable { alpha, gamma } => Ok(exact(if *alpha < T::one() {
                *alpha * *gamma / (T::one() - *alpha)
            } else {
                T::infinity()
            })),
            LevyKind::GammaLevy { alpha } => Ok(exact(*alpha * (T::one() - (-T::one()).exp()))),
            _ => {
                // ∫_(0,1] x ρ(dx) = ∫_0^1 (H(t) - H(1)) dt
                let at_one = self.tail_value(T::one());
                let kinks: Vec<T> = self.kinks().into_iter().filter(|k| *k < T::one()).collect();
                let tol = Tolerance::default();
                let mut lo = T::zero();
                let mut acc = Integral {
                    value: T::zero(),
                    error: T::zero(),
                    status: QuadStatus::Converged,
                };
                let mut points = kinks;
                points.push(T::one());
                points.sort_by(|a, b| a.partial_cmp(b).expect("finite kinks"));
                for p in points {
                    let piece = if lo == T::zero() {
                        integrate_below(|t| self.tail_value(t) - at_one, p, &tol)
                    } else {
                        integrate(|t| self.tail_value(t) - at_one, lo, p, &tol)
                    };
                    acc.value = acc.value + piece.value;
                    acc.error = acc.error + piece.error;
                    if piece.status != QuadStatus::Converged {
                        acc.status = piece.status;
                        if piece.status == QuadStatus::Diverged {
                            break;
                        }
                    }
                    lo = p;
                }
                Ok(acc)
            }
        }
    }

    /// `∫ x²/(1+x²) ρ(dx) = ∫ 2x/(1+x²)² H(x) dx`.
    fn levy_integral(&self) -> Integral<T> {
        if let LevyKind::Stable { alpha, gamma } = &self.kind {
            let two = T::lit(2.0);
            return Integral {
                value: *alpha * *gamma * T::PI() / (two * (T::PI() * *alpha / two).sin()),
                error: T::zero(),
                status: QuadStatus::Converged,
            };
        }
        let two = T::lit(2.0);
        integrate_positive(
            |x| {
                let d = T::one() + x * x;
                two * x / (d * d) * self.tail_value(x)
            },
            &self.kinks(),
            &Tolerance::default(),
        )
    }

    pub fn validate_levy(&self) -> Result<ValidityReport> {
        let levy = self.levy_integral();
        if levy.status == QuadStatus::NotConverged {
            return Err(quad_error("Lévy integral", &levy));
        }
        let small = self.small_jump_integral()?;
        if small.status == QuadStatus::NotConverged {
            return Err(quad_error("small-jump mean", &small));
        }
        let finite = |r: &Integral<T>| r.status == QuadStatus::Converged;
        Ok(ValidityReport {
            is_levy: finite(&levy) && self.mass_at_infinity() == T::zero(),
            small_jump_finite: finite(&small),
            levy_integral: if finite(&levy) { levy.value.as_f64() } else { f64::INFINITY },
            levy_error: levy.error.as_f64(),
            small_jump_mean: if finite(&small) { small.value.as_f64() } else { f64::INFINITY },
            small_jump_error: small.error.as_f64(),
        })
    }

    /// Centering constants `c_i = ∫_{i-1}^{i} g(H⁻¹(y)) dy` with `g(x) = x/(1+x²)`,
    /// i.e. the mass of `x/(1+x²) ρ(dx)` between `H⁻¹(i)` and `H⁻¹(i-1)`.
    pub fn centering_constants(&self, count: usize) -> Result<Vec<T>> {
        let tol = Tolerance::default();
        let total = self.total_mass();
        let mut out = Vec::with_capacity(count);
        for i in 1..=count {
            let a = T::from_usize(i - 1).expect("index");
            if a >= total {
                out.push(T::zero());
                continue;
            }
            let b = T::from_usize(i).expect("index");
            let r = integrate(|y| centering_weight(self.tail_inverse(y)), a, b.min(total), &tol);
            if !r.is_converged() {
                return Err(quad_error("centering constant", &r));
            }
            out.push(r.value);
        }
        Ok(out)
    }

    /// `∫ x/(1+x²) ρ(dx)`, evaluated in the jump variable as
    /// `∫ (1-x²)/(1+x²)² H(x) dx`; `+∞` when divergent.
    pub fn centering_total(&self) -> Result<T> {
        let r = integrate_positive(
            |x| {
                let d = T::one() + x * x;
                (T::one() - x * x) / (d * d) * self.tail_value(x)
            },
            &self.kinks(),
            &Tolerance::default(),
        );
        match r.status {
            QuadStatus::Converged => Ok(r.value),
            QuadStatus::Diverged => Ok(T::infinity()),
            QuadStatus::NotConverged => Err(quad_error("centering total", &r)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::Extrapolation;

    fn stable(alpha: f64) -> LevyMeasure<f64> {
        LevyMeasure::stable(alpha, 1.0).unwrap()
    }

    /// Measure with `H = 2` on (0,1), linear to 0 on [1,2].
    fn finite_on_one_two(mass: f64) -> LevyMeasure<f64> {
        let t = TabulatedTail::new(vec![1.0, 2.0], vec![mass, 0.0]).unwrap();
        LevyMeasure::tabulated(t).unwrap()
    }

    #[test]
    fn tail_examples() {
        assert_eq!(stable(0.5).tail(4.0).unwrap(), 0.5);
        let prod = LevyMeasure::product(
            RadonIntensity::power_tail(0.5).unwrap(),
            MarkDistribution::PointMass { w: 2.0 },
        )
        .unwrap();
        assert!((prod.tail(1.0).unwrap() - 2f64.sqrt()).abs() < 1e-14);
        let g = LevyMeasure::gamma(2.0).unwrap();
        // 2·E₁(1), checked against a direct quadrature of the defining integral
        let direct = crate::quad::integrate_above(|t: f64| 2.0 * (-t).exp() / t, 1.0, &Tolerance::default());
        assert!((g.tail(1.0).unwrap() - direct.value).abs() < 1e-9);
        assert!((g.tail(1.0).unwrap() - 0.438_767_868_791_041).abs() < 1e-12);
    }

    #[test]
    fn inverse_examples() {
        assert!((stable(0.5).tail_inverse(4.0) - 0.0625).abs() < 1e-15);
        assert_eq!(finite_on_one_two(1.0).tail_inverse(1e30), 0.0);
        let g = LevyMeasure::gamma(1.0f64).unwrap();
        let y = g.tail(1.0).unwrap();
        assert!((g.tail_inverse(y) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn small_jump_examples() {
        assert!((stable(0.5).small_jump_mean().unwrap() - 1.0).abs() < 1e-15);
        assert!(stable(1.2).small_jump_mean().unwrap().is_infinite());
        let g = LevyMeasure::gamma(3.0f64).unwrap();
        assert!((g.small_jump_mean().unwrap() - 1.896_361_676_485_673).abs() < 1e-12);
    }

    #[test]
    fn small_jump_quadrature_matches_closed_forms() {
        // tabulated power law with α = 0.5 extrapolated as a power law
        let xs: Vec<f64> = (0..40).map(|k| 10f64.powf(-6.0 + 0.25 * k as f64)).collect();
        let hs: Vec<f64> = xs.iter().map(|x| x.powf(-0.5)).collect();
        let t = TabulatedTail::new(xs, hs)
            .unwrap()
            .with_extrapolation(Extrapolation::PowerLaw, Extrapolation::PowerLaw)
            .unwrap();
        let m = LevyMeasure::tabulated(t).unwrap();
        assert!((m.small_jump_mean().unwrap() - 1.0).abs() < 1e-7);
        let report = m.validate_levy().unwrap();
        let stable_report = stable(0.5).validate_levy().unwrap();
        assert!((report.levy_integral - stable_report.levy_integral).abs() < 1e-6);
    }

    #[test]
    fn validity_reports() {
        let r = stable(0.7).validate_levy().unwrap();
        assert!(r.is_levy && r.small_jump_finite);
        let r = stable(1.5).validate_levy().unwrap();
        assert!(r.is_levy && !r.small_jump_finite);
        // H(x) = x^{-3} tabulated near 0 and continued as a power law below the grid
        let xs: Vec<f64> = (0..20).map(|k| 0.01 * 1.5f64.powi(k)).collect();
        let hs: Vec<f64> = xs.iter().map(|x| x.powi(-3)).collect();
        let t = TabulatedTail::new(xs, hs)
            .unwrap()
            .with_extrapolation(Extrapolation::PowerLaw, Extrapolation::PowerLaw)
            .unwrap();
        let r = LevyMeasure::tabulated(t).unwrap().validate_levy().unwrap();
        assert!(!r.is_levy);
        assert!(r.levy_integral.is_infinite());
    }

    #[test]
    fn stable_levy_integral_matches_quadrature() {
        let m = stable(0.7);
        let closed = m.validate_levy().unwrap().levy_integral;
        let quad = integrate_positive(
            |x: f64| x * x / (1.0 + x * x) * 0.7 * x.powf(-1.7),
            &[1.0],
            &Tolerance::default(),
        );
        assert!((closed - quad.value).abs() < 1e-7);
    }

    #[test]
    fn centering_examples() {
        let c = finite_on_one_two(2.5).centering_constants(10).unwrap();
        assert!(c[..3].iter().all(|v| *v > 0.0));
        assert!(c[3..].iter().all(|v| *v == 0.0));
        let sum: f64 = c.iter().sum();
        assert!((sum - finite_on_one_two(2.5).centering_total().unwrap()).abs() < 1e-8);

        let g = LevyMeasure::gamma(1.0f64).unwrap();
        let sum: f64 = g.centering_constants(50).unwrap().iter().sum();
        let direct = integrate_positive(|x: f64| (-x).exp() / (1.0 + x * x), &[], &Tolerance::default());
        assert!((sum - direct.value).abs() < 1e-8, "{sum} vs {}", direct.value);
        assert!((sum - 0.621_449_624_235_813_6).abs() < 1e-8);
    }

    #[test]
    fn stable_centering_sum_converges() {
        let m = stable(0.5);
        let c = m.centering_constants(4000).unwrap();
        let sum: f64 = c.iter().sum();
        // remaining mass beyond y = 4000 is about ∫ y^{-2} dy = 1/4000
        let target = std::f64::consts::PI / 2f64.sqrt() / 2.0;
        assert!((sum - target).abs() < 3e-4, "{sum}");
        assert!((m.centering_total().unwrap() - target).abs() < 1e-8);
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert!(LevyMeasure::stable(2.0f64, 1.0).is_err());
        assert!(LevyMeasure::stable(0.5f64, 0.0).is_err());
        assert!(LevyMeasure::gamma(-1.0f64).is_err());
    }

    #[test]
    fn serde_round_trip() {
        let m = stable(0.7);
        let json = serde_json::to_string(&m).unwrap();
        let back: LevyMeasure<f64> = serde_json::from_str(&json).unwrap();
        assert_eq!(m, back);
        assert!(serde_json::from_str::<LevyMeasure<f64>>(r#"{"kind":"stable","alpha":3.0,"gamma":1.0}"#).is_err());
    }
}
