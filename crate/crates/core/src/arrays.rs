//! Stationary heavy-tailed triangular arrays with known row-wise dependence.
//!
//! All models are driven by exact Pareto noise `P(Z > x) = x^{-α}`, `x ≥ 1`,
//! and rows are scaled by `a_n = n^{1/α}`.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::cluster::{PointConfiguration, Window};
use crate::error::{invalid, Result};
use crate::real::Real;
use crate::rng::Seed;
use crate::special::normal_sf;

/// Remaining α-moment mass of the coefficients allowed after truncation.
pub const COEFFICIENT_MASS_CUTOFF: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoefficientLaw<T> {
    /// `C_{i,j} = θ^j`.
    Geometric { theta: T },
    /// `C_{i,j} = θ^j · exp(σ N_{i,j})` with i.i.d. standard normal `N_{i,j}`.
    RandomGeometric { theta: T, sigma: T },
}

impl<T: Real> CoefficientLaw<T> {
    fn theta(&self) -> T {
        match self {
            CoefficientLaw::Geometric { theta } | CoefficientLaw::RandomGeometric { theta, .. } => *theta,
        }
    }

    /// `E[C_0^α]`; the j-th moment is this times `θ^{jα}`.
    fn base_moment(&self, alpha: T) -> T {
        match self {
            CoefficientLaw::Geometric { .. } => T::one(),
            CoefficientLaw::RandomGeometric { sigma, .. } => {
                (alpha * alpha * *sigma * *sigma / T::lit(2.0)).exp()
            }
        }
    }

    /// `Σ_j E[C_j^α]`.
    pub fn alpha_mass(&self, alpha: T) -> T {
        self.base_moment(alpha) / (T::one() - self.theta().powf(alpha))
    }

    /// Law of `W = Σ_j C_j` when it is degenerate.
    pub fn deterministic_sum(&self) -> Option<T> {
        match self {
            CoefficientLaw::Geometric { theta } => Some(T::one() / (T::one() - *theta)),
            CoefficientLaw::RandomGeometric { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VolatilityLaw<T> {
    /// `σ_j = max(V_j, …, V_{j-m+1})` with i.i.d. lognormal `V = exp(s N)`;
    /// `m`-dependent.
    MovingMax { m: usize, s: T },
    /// `σ_j = exp(s G_j)` with `G` a stationary Gaussian AR(1), correlation `r^k`.
    LogGaussian { s: T, r: T },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ArrayModel<T> {
    IidHeavyTail {
        alpha: T,
    },
    /// `X_j = (Z_j + … + Z_{j-m+1}) / a_n`: entries `m` or more apart are independent.
    MDependentMovingSum {
        alpha: T,
        m: usize,
    },
    /// `X_i = Σ_{j≤J} C_{i,j} Z_{i-j} / a_n`, rows of coefficients i.i.d.
    LinearProcess {
        alpha: T,
        coefficients: CoefficientLaw<T>,
        /// Largest lag `J` the truncated series may use.
        series_cutoff: usize,
    },
    /// `X_j = σ_j Z_j / a_n` with the volatility independent of the noise.
    StochasticVolatility {
        alpha: T,
        volatility: VolatilityLaw<T>,
    },
    /// `X_j = Φ̄(G_j)^{-1/α} / a_n` with `G` a stationary Gaussian AR(1),
    /// correlation `r^k ≥ 0`; nondecreasing in `G`, hence associated.
    AssociatedGaussian {
        alpha: T,
        r: T,
    },
}

/// Exact Pareto draw `U^{-1/α}` with `U` uniform on `(0, 1]`.
#[inline]
pub fn pareto<T: Real, R: Rng + ?Sized>(alpha: T, rng: &mut R) -> T {
    let u: f64 = 1.0 - rng.random::<f64>();
    T::lit(u).powf(-T::one() / alpha)
}

#[inline]
fn normal<T: Real, R: Rng + ?Sized>(rng: &mut R) -> T {
    let z: f64 = StandardNormal.sample(rng);
    T::lit(z)
}

/// `a_n = n^{1/α}`, so that `n P(Z > a_n) = 1`.
pub fn scaling<T: Real>(alpha: T, n: usize) -> Result<T> {
    if !(alpha > T::zero() && alpha < T::lit(2.0)) {
        return Err(invalid("alpha", format!("tail index must lie in (0, 2), got {alpha}")));
    }
    if n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    Ok(T::from_usize(n).expect("row length").powf(T::one() / alpha))
}

impl<T: Real> ArrayModel<T> {
    pub fn alpha(&self) -> T {
        match self {
            ArrayModel::IidHeavyTail { alpha }
            | ArrayModel::MDependentMovingSum { alpha, .. }
            | ArrayModel::LinearProcess { alpha, .. }
            | ArrayModel::StochasticVolatility { alpha, .. }
            | ArrayModel::AssociatedGaussian { alpha, .. } => *alpha,
        }
    }

    /// Declared dependence order: entries this far apart are independent
    /// (`None` when no finite order exists).
    pub fn dependence_order(&self) -> Option<usize> {
        match self {
            ArrayModel::IidHeavyTail { .. } => Some(1),
            ArrayModel::MDependentMovingSum { m, .. } => Some(*m),
            ArrayModel::LinearProcess { coefficients, .. } => {
                if coefficients.theta() == T::zero() {
                    Some(1)
                } else {
                    None
                }
            }
            ArrayModel::StochasticVolatility { volatility, .. } => match volatility {
                VolatilityLaw::MovingMax { m, .. } => Some(*m),
                VolatilityLaw::LogGaussian { r, .. } if *r == T::zero() => Some(1),
                VolatilityLaw::LogGaussian { .. } => None,
            },
            ArrayModel::AssociatedGaussian { r, .. } => {
                if *r == T::zero() {
                    Some(1)
                } else {
                    None
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        scaling(self.alpha(), 1)?;
        match self {
            ArrayModel::MDependentMovingSum { m, .. } if *m == 0 => Err(invalid("m", "window must be at least 1")),
            ArrayModel::LinearProcess { .. } => self.series_length().map(|_| ()),
            ArrayModel::StochasticVolatility { volatility, .. } => match volatility {
                VolatilityLaw::MovingMax { m, s } => {
                    if *m == 0 {
                        Err(invalid("m", "window must be at least 1"))
                    } else if !(*s >= T::zero() && s.is_finite()) {
                        Err(invalid("s", "volatility scale must be finite and nonnegative"))
                    } else {
                        Ok(())
                    }
                }
                VolatilityLaw::LogGaussian { s, r } => {
                    if !(*r >= T::zero() && *r < T::one()) {
                        Err(invalid("r", format!("correlation must lie in [0, 1), got {r}")))
                    } else if !(*s >= T::zero() && s.is_finite()) {
                        Err(invalid("s", "volatility scale must be finite and nonnegative"))
                    } else {
                        Ok(())
                    }
                }
            },
            ArrayModel::AssociatedGaussian { r, .. } if !(*r >= T::zero() && *r < T::one()) => {
                Err(invalid("r", format!("correlation must lie in [0, 1), got {r}")))
            }
            _ => Ok(()),
        }
    }

    /// Number of coefficients `J + 1` the linear series keeps.
    fn series_length(&self) -> Result<usize> {
        let ArrayModel::LinearProcess {
            alpha,
            coefficients,
            series_cutoff,
        } = self
        else {
            return Ok(1);
        };
        let theta = coefficients.theta();
        if !(theta >= T::zero() && theta < T::one()) {
            return Err(invalid("theta", format!("must lie in [0, 1), got {theta}")));
        }
        if let CoefficientLaw::RandomGeometric { sigma, .. } = coefficients {
            if !(*sigma >= T::zero() && sigma.is_finite()) {
                return Err(invalid("sigma", "must be finite and nonnegative"));
            }
        }
        let base = coefficients.base_moment(*alpha);
        let ratio = theta.powf(*alpha);
        let cutoff = T::lit(COEFFICIENT_MASS_CUTOFF);
        // mass beyond lag J is base · ratio^{J+1} / (1 - ratio)
        let mut terms = 1usize;
        let mut tail = base * ratio / (T::one() - ratio);
        while tail >= cutoff {
            if terms > *series_cutoff {
                return Err(invalid(
                    "series_cutoff",
                    format!(
                        "{series_cutoff} lags leave coefficient mass {tail} above {COEFFICIENT_MASS_CUTOFF}"
                    ),
                ));
            }
            tail = tail * ratio;
            terms += 1;
        }
        Ok(terms)
    }

    /// Unscaled stationary sequence `X_1, …, X_len`.
    pub fn raw_sequence<R: Rng + ?Sized>(&self, len: usize, rng: &mut R) -> Result<Vec<T>> {
        self.validate()?;
        let alpha = self.alpha();
        Ok(match self {
            ArrayModel::IidHeavyTail { .. } => (0..len).map(|_| pareto(alpha, rng)).collect(),
            ArrayModel::MDependentMovingSum { m, .. } => {
                let z: Vec<T> = (0..len + m - 1).map(|_| pareto(alpha, rng)).collect();
                let mut out = Vec::with_capacity(len);
                for j in 0..len {
                    out.push(z[j..j + m].iter().copied().sum());
                }
                out
            }
            ArrayModel::LinearProcess { coefficients, .. } => {
                let terms = self.series_length()?;
                let z: Vec<T> = (0..len + terms - 1).map(|_| pareto(alpha, rng)).collect();
                let theta = coefficients.theta();
                let powers: Vec<T> = std::iter::successors(Some(T::one()), |p| Some(*p * theta))
                    .take(terms)
                    .collect();
                let mut out = Vec::with_capacity(len);
                for i in 0..len {
                    // Z_{i-j} sits at index i + terms - 1 - j
                    let top = i + terms - 1;
                    let x = match coefficients {
                        CoefficientLaw::Geometric { .. } => {
                            (0..terms).map(|j| powers[j] * z[top - j]).sum()
                        }
                        CoefficientLaw::RandomGeometric { sigma, .. } => (0..terms)
                            .map(|j| powers[j] * (*sigma * normal::<T, R>(rng)).exp() * z[top - j])
                            .sum(),
                    };
                    out.push(x);
                }
                out
            }
            ArrayModel::StochasticVolatility { .. } => {
                let (sigma, z) = self.volatility_parts(len, rng)?.expect("volatility model");
                sigma.into_iter().zip(z).map(|(s, z)| s * z).collect()
            }
            ArrayModel::AssociatedGaussian { r, .. } => gaussian_ar1(len, *r, rng)
                .into_iter()
                .map(|g| {
                    let u = T::lit(normal_sf(g.as_f64())).max(T::min_positive_value());
                    u.powf(-T::one() / alpha)
                })
                .collect(),
        })
    }

    /// Unscaled volatility path and noise `(σ_j, Z_j)` behind a stochastic
    /// volatility sequence; `None` for other models.
    pub fn volatility_parts<R: Rng + ?Sized>(&self, len: usize, rng: &mut R) -> Result<Option<(Vec<T>, Vec<T>)>> {
        let ArrayModel::StochasticVolatility { alpha, volatility } = self else {
            return Ok(None);
        };
        self.validate()?;
        let sigma: Vec<T> = match volatility {
            VolatilityLaw::MovingMax { m, s } => {
                let v: Vec<T> = (0..len + m - 1).map(|_| (*s * normal::<T, R>(rng)).exp()).collect();
                (0..len)
                    .map(|j| v[j..j + m].iter().fold(T::zero(), |a, b| a.max(*b)))
                    .collect()
            }
            VolatilityLaw::LogGaussian { s, r } => {
                gaussian_ar1(len, *r, rng).into_iter().map(|g| (*s * g).exp()).collect()
            }
        };
        let z = (0..len).map(|_| pareto(*alpha, rng)).collect();
        Ok(Some((sigma, z)))
    }

    /// Row `(X_{1,n}, …, X_{n,n})`, already divided by `a_n`.
    pub fn row<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<T>> {
        self.prefix(n, n, rng)
    }

    /// First `len` entries of row `n` (stationarity makes any window equivalent).
    pub fn prefix<R: Rng + ?Sized>(&self, n: usize, len: usize, rng: &mut R) -> Result<Vec<T>> {
        let a = scaling(self.alpha(), n)?;
        let mut x = self.raw_sequence(len, rng)?;
        for v in &mut x {
            *v = *v / a;
        }
        Ok(x)
    }
}

/// Stationary Gaussian AR(1) with unit variance and lag-k correlation `r^k`.
fn gaussian_ar1<T: Real, R: Rng + ?Sized>(len: usize, r: T, rng: &mut R) -> Vec<T> {
    let innovation = (T::one() - r * r).sqrt();
    let mut g = normal::<T, R>(rng);
    let mut out = Vec::with_capacity(len);
    for k in 0..len {
        if k > 0 {
            g = r * g + innovation * normal::<T, R>(rng);
        }
        out.push(g);
    }
    out
}

pub fn generate_row<T: Real>(model: &ArrayModel<T>, n: usize, seed: Seed) -> Result<Vec<T>> {
    model.row(n, &mut seed.rng())
}

/// `S_n = Σ_j X_{j,n}`.
pub fn partial_sum<T: Real>(row: &[T]) -> T {
    row.iter().copied().sum()
}

/// `(S_n(ε, ∞), S_n(0, ε])`: the sums over entries above and at most `ε`.
pub fn split_sum<T: Real>(row: &[T], epsilon: T) -> (T, T) {
    row.iter().fold((T::zero(), T::zero()), |(big, small), x| {
        if *x > epsilon {
            (big + *x, small)
        } else {
            (big, small + *x)
        }
    })
}

/// `N_n = Σ_j δ_{X_{j,n}}` restricted to `|x| > floor`.
pub fn empirical_point_process<T: Real>(row: &[T], floor: T) -> Result<PointConfiguration<T>> {
    if !(floor > T::zero()) {
        return Err(invalid("floor", "window floor must be positive"));
    }
    Ok(PointConfiguration::new(row.to_vec(), Window::Modulus { floor }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn scaling_examples() {
        assert_eq!(scaling(0.5f64, 100).unwrap(), 10_000.0);
        assert_eq!(scaling(1.0f64, 7).unwrap(), 7.0);
        assert!(scaling(2.0f64, 7).is_err());
        let grid: Vec<f64> = (1..200).map(|n| scaling(0.7, n).unwrap()).collect();
        assert!(grid.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn empirical_point_process_example() {
        let c = empirical_point_process(&[0.5f64, 2.0, 3.0], 1.0).unwrap();
        assert_eq!(c.points(), &[2.0, 3.0]);
        assert_eq!(c.len(), 2);
    }

    #[test]
    fn partial_sum_of_ones() {
        assert_eq!(partial_sum(&[1.0f64; 5]), 5.0);
    }

    #[test]
    fn series_cutoff_too_small_is_an_error() {
        let m = ArrayModel::LinearProcess {
            alpha: 0.7f64,
            coefficients: CoefficientLaw::Geometric { theta: 0.5 },
            series_cutoff: 10,
        };
        assert!(m.validate().is_err());
        let m = ArrayModel::LinearProcess {
            alpha: 0.7f64,
            coefficients: CoefficientLaw::Geometric { theta: 0.5 },
            series_cutoff: 100,
        };
        assert!(m.validate().is_ok());
        // remaining α-mass after the kept lags is below the cutoff
        let kept = m.series_length().unwrap();
        let rest: f64 = (kept..2000).map(|j| 0.5f64.powf(0.7 * j as f64)).sum();
        assert!(rest < COEFFICIENT_MASS_CUTOFF);
        let one_less: f64 = (kept - 1..2000).map(|j| 0.5f64.powf(0.7 * j as f64)).sum();
        assert!(one_less >= COEFFICIENT_MASS_CUTOFF);
    }

    #[test]
    fn zero_theta_linear_process_is_iid() {
        let lin = ArrayModel::LinearProcess {
            alpha: 0.7f64,
            coefficients: CoefficientLaw::Geometric { theta: 0.0 },
            series_cutoff: 10,
        };
        let iid = ArrayModel::IidHeavyTail { alpha: 0.7f64 };
        assert_eq!(lin.row(50, &mut Seed(4).rng()).unwrap(), iid.row(50, &mut Seed(4).rng()).unwrap());
    }

    #[test]
    fn rows_are_deterministic_and_positive() {
        let models = vec![
            ArrayModel::IidHeavyTail { alpha: 0.5f64 },
            ArrayModel::MDependentMovingSum { alpha: 0.5, m: 2 },
            ArrayModel::StochasticVolatility {
                alpha: 0.8,
                volatility: VolatilityLaw::MovingMax { m: 3, s: 0.5 },
            },
            ArrayModel::StochasticVolatility {
                alpha: 0.8,
                volatility: VolatilityLaw::LogGaussian { s: 0.5, r: 0.6 },
            },
            ArrayModel::AssociatedGaussian { alpha: 1.0, r: 0.5 },
            ArrayModel::LinearProcess {
                alpha: 0.7,
                coefficients: CoefficientLaw::RandomGeometric { theta: 0.5, sigma: 0.3 },
                series_cutoff: 200,
            },
        ];
        for m in models {
            let a = generate_row(&m, 300, Seed(11)).unwrap();
            let b = generate_row(&m, 300, Seed(11)).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.len(), 300);
            assert!(a.iter().all(|x| *x > 0.0 && x.is_finite()), "{m:?}");
        }
    }

    proptest! {
        #[test]
        fn split_sum_partitions_the_row(seed in 0u64..1000, eps in prop::sample::select(vec![0.1f64, 1.0, 10.0])) {
            let row = generate_row(&ArrayModel::IidHeavyTail { alpha: 0.8f64 }, 200, Seed(seed)).unwrap();
            let (big, small) = split_sum(&row, eps);
            let above: f64 = row.iter().filter(|x| **x > eps).sum();
            let below: f64 = row.iter().filter(|x| **x <= eps).sum();
            prop_assert_eq!(big, above);
            prop_assert_eq!(small, below);
            let total = partial_sum(&row);
            prop_assert!((big + small - total).abs() <= 1e-12 * total);
        }

        #[test]
        fn counts_are_additive(seed in 0u64..1000, cut in 1.0f64..5.0) {
            let row = generate_row(&ArrayModel::IidHeavyTail { alpha: 1.0f64 }, 100, Seed(seed)).unwrap();
            let c = empirical_point_process(&row, 0.01).unwrap();
            prop_assert_eq!(c.count(0.01, cut) + c.count(cut, f64::INFINITY), c.len());
        }
    }
}
