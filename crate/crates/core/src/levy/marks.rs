use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quad::{integrate, Tolerance};
use crate::real::Real;

/// Probability law `F` of the multiplicative marks `W` on `(0, ∞)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MarkDistribution<T> {
    PointMass { w: T },
    /// `W = exp(mu + sigma·N)` with `N` standard normal.
    LogNormal { mu: T, sigma: T },
    /// Degenerate law of `Σ_{j≥0} θ^j = 1/(1-θ)`.
    GeometricWeightsSum { theta: T },
    /// Uniform over the listed values.
    Empirical { values: Vec<T> },
}

const NORMAL_SPAN: f64 = 10.0;

impl<T: Real> MarkDistribution<T> {
    pub fn validate(&self) -> Result<()> {
        match self {
            MarkDistribution::PointMass { w } if !(*w > T::zero() && w.is_finite()) => {
                Err(invalid("w", format!("mark must be positive, got {w}")))
            }
            MarkDistribution::LogNormal { mu, sigma }
                if !(mu.is_finite() && sigma.is_finite() && *sigma >= T::zero()) =>
            {
                Err(invalid("sigma", format!("need finite mu and sigma >= 0, got ({mu}, {sigma})")))
            }
            MarkDistribution::GeometricWeightsSum { theta }
                if !(*theta >= T::zero() && *theta < T::one()) =>
            {
                Err(invalid("theta", format!("must lie in [0, 1), got {theta}")))
            }
            MarkDistribution::Empirical { values }
                if values.is_empty() || !values.iter().all(|v| *v > T::zero() && v.is_finite()) =>
            {
                Err(invalid("values", "need a nonempty list of positive marks"))
            }
            _ => Ok(()),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        match self {
            MarkDistribution::PointMass { w } => *w,
            MarkDistribution::LogNormal { mu, sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                (*mu + *sigma * T::lit(z)).exp()
            }
            MarkDistribution::GeometricWeightsSum { theta } => T::one() / (T::one() - *theta),
            MarkDistribution::Empirical { values } => values[rng.random_range(0..values.len())],
        }
    }

    /// Atoms `(w, probability)` when the law is discrete.
    pub fn atoms(&self) -> Option<Vec<(T, T)>> {
        match self {
            MarkDistribution::PointMass { w } => Some(vec![(*w, T::one())]),
            MarkDistribution::GeometricWeightsSum { theta } => {
                Some(vec![(T::one() / (T::one() - *theta), T::one())])
            }
            MarkDistribution::Empirical { values } => {
                let p = T::one() / T::from_usize(values.len()).expect("length");
                Some(values.iter().map(|v| (*v, p)).collect())
            }
            MarkDistribution::LogNormal { sigma, mu } if *sigma == T::zero() => {
                Some(vec![(mu.exp(), T::one())])
            }
            MarkDistribution::LogNormal { .. } => None,
        }
    }

    /// `∫ w^α F(dw)`.
    pub fn alpha_moment(&self, alpha: T) -> T {
        match self {
            MarkDistribution::LogNormal { mu, sigma } => {
                (alpha * *mu + alpha * alpha * *sigma * *sigma / T::lit(2.0)).exp()
            }
            _ => self
                .atoms()
                .expect("discrete law")
                .into_iter()
                .map(|(w, p)| p * w.powf(alpha))
                .sum(),
        }
    }

    /// `E g(W)`, exact for discrete laws and by quadrature over the normal
    /// variable otherwise.
    pub fn expect<G: Fn(T) -> T>(&self, g: G) -> Result<T> {
        if let Some(atoms) = self.atoms() {
            return Ok(atoms.into_iter().map(|(w, p)| p * g(w)).sum());
        }
        let (mu, sigma) = match self {
            MarkDistribution::LogNormal { mu, sigma } => (*mu, *sigma),
            _ => unreachable!("continuous marks are lognormal"),
        };
        let norm = T::one() / (T::lit(2.0) * T::PI()).sqrt();
        let integrand = |z: T| norm * (-z * z / T::lit(2.0)).exp() * g((mu + sigma * z).exp());
        let span = T::lit(NORMAL_SPAN);
        let tol = Tolerance::default();
        let mut total = T::zero();
        // split at the mode so kinks of g near the bulk are resolved quickly
        for (a, b) in [(-span, T::zero()), (T::zero(), span)] {
            let r = integrate(integrand, a, b, &tol);
            if !r.is_converged() {
                return Err(Error::Quadrature {
                    context: "mark expectation".into(),
                    value: r.value.as_f64(),
                    error: r.error.as_f64(),
                });
            }
            total = total + r.value;
        }
        Ok(total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Seed;

    #[test]
    fn alpha_moments() {
        let pm = MarkDistribution::PointMass { w: 2.0 };
        assert!((pm.alpha_moment(0.5) - 2f64.sqrt()).abs() < 1e-15);
        let geo = MarkDistribution::GeometricWeightsSum { theta: 0.5 };
        assert!((geo.alpha_moment(0.7) - 2f64.powf(0.7)).abs() < 1e-15);
        let ln = MarkDistribution::LogNormal { mu: 0.0, sigma: 0.5 };
        let by_quad = ln.expect(|w: f64| w.powf(0.8)).unwrap();
        assert!((by_quad - ln.alpha_moment(0.8)).abs() < 1e-9);
    }

    #[test]
    fn lognormal_sample_mean() {
        let ln = MarkDistribution::LogNormal { mu: 0.0, sigma: 0.5 };
        let mut rng = Seed(3).rng();
        let n = 200_000;
        let mean: f64 = (0..n).map(|_| ln.sample(&mut rng)).sum::<f64>() / n as f64;
        let exact = (0.125f64).exp();
        // sd of W is about 0.6
        assert!((mean - exact).abs() < 3.0 * 0.6 / (n as f64).sqrt());
    }

    #[test]
    fn validation() {
        assert!(MarkDistribution::PointMass { w: 0.0f64 }.validate().is_err());
        assert!(MarkDistribution::GeometricWeightsSum { theta: 1.0f64 }.validate().is_err());
        assert!(MarkDistribution::<f64>::Empirical { values: vec![] }.validate().is_err());
        assert!(MarkDistribution::LogNormal { mu: 0.0f64, sigma: 1.0 }.validate().is_ok());
    }
}
