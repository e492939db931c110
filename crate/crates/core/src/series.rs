//! Series representation of infinitely divisible laws on `(0, ∞)`: the jumps
//! `U_i = H⁻¹(Γ_i)` of a Lévy measure, driven by standard Poisson arrivals.

use num_complex::Complex;
use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy::{LevyKind, LevyMeasure};
use crate::quad::{fourier_positive, integrate_below, integrate_positive, QuadStatus, Tolerance};
use crate::real::Real;
use crate::rng::Seed;

/// Stream tag for the jump times of a path, kept apart from the arrivals.
const TIME_STREAM: u64 = 0x7469_6d65;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Truncation<T> {
    pub max_terms: usize,
    /// Jumps at or below this size are dropped.
    pub point_floor: T,
    /// Add the expected discarded mass to sums.
    pub compensate: bool,
}

impl<T: Real> Default for Truncation<T> {
    fn default() -> Self {
        Truncation {
            max_terms: 10_000,
            point_floor: T::lit(1e-8),
            compensate: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxTerms,
    Floor,
    /// All the mass of a finite measure has been used.
    Exhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesSample<T> {
    /// Nonincreasing jumps.
    pub points: Vec<T>,
    pub truncation_index: usize,
    /// Expected sum of the discarded jumps.
    pub truncation_bound: T,
    pub total: T,
    pub stop: StopReason,
    /// Arrival time of the last retained jump (0 when none).
    pub last_arrival: T,
}

/// Cumulative sums `Γ_1 < Γ_2 < …` of i.i.d. unit exponentials.
pub fn poisson_arrivals<T: Real, R: Rng + ?Sized>(rng: &mut R, count: usize) -> Vec<T> {
    let mut gamma = 0.0f64;
    (0..count)
        .map(|_| {
            let e: f64 = Exp1.sample(rng);
            gamma += e;
            T::lit(gamma)
        })
        .collect()
}

/// Reusable sampler for one measure and truncation rule.
#[derive(Debug, Clone)]
pub struct FkSampler<T: Real> {
    measure: LevyMeasure<T>,
    truncation: Truncation<T>,
    stop_level: T,
    total_mass: T,
    /// Prefix sums of the centering constants, present for centered sampling.
    centering: Option<Vec<T>>,
}

impl<T: Real> FkSampler<T> {
    pub fn new(measure: &LevyMeasure<T>, truncation: Truncation<T>) -> Result<Self> {
        let small = measure.small_jump_mean()?;
        if !small.is_finite() {
            return Err(Error::Precondition(
                "small jumps are not integrable (∫_(0,1] x ρ(dx) = ∞); use the centered sampler".into(),
            ));
        }
        Self::build(measure, truncation, false)
    }

    /// Sampler for `Σ (U_i - c_i)`, valid for any Lévy measure.
    pub fn centered(measure: &LevyMeasure<T>, truncation: Truncation<T>) -> Result<Self> {
        let report = measure.validate_levy()?;
        if !report.is_levy {
            return Err(Error::Precondition("measure fails the Lévy integrability condition".into()));
        }
        Self::build(measure, truncation, true)
    }

    fn build(measure: &LevyMeasure<T>, truncation: Truncation<T>, centered: bool) -> Result<Self> {
        if truncation.max_terms == 0 {
            return Err(crate::error::invalid("max_terms", "must be at least 1"));
        }
        if !(truncation.point_floor >= T::zero()) {
            return Err(crate::error::invalid("point_floor", "must be nonnegative"));
        }
        if measure.mass_at_infinity() > T::zero() {
            return Err(Error::Precondition(
                "tail does not vanish at infinity; extend the table or use power-law extrapolation".into(),
            ));
        }
        let stop_level = if truncation.point_floor > T::zero() {
            measure.tail_value(truncation.point_floor)
        } else {
            T::infinity()
        };
        let centering = if centered {
            let c = measure.centering_constants(truncation.max_terms)?;
            let mut prefix = Vec::with_capacity(c.len() + 1);
            let mut acc = T::zero();
            prefix.push(acc);
            for v in c {
                acc = acc + v;
                prefix.push(acc);
            }
            Some(prefix)
        } else {
            None
        };
        Ok(FkSampler {
            measure: measure.clone(),
            truncation,
            stop_level,
            total_mass: measure.total_mass(),
            centering,
        })
    }

    pub fn measure(&self) -> &LevyMeasure<T> {
        &self.measure
    }

    pub fn truncation(&self) -> &Truncation<T> {
        &self.truncation
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> (Vec<T>, T, StopReason) {
        let mut points = Vec::new();
        let mut gamma = 0.0f64;
        let mut last = T::zero();
        let mut hint = None;
        let stop = loop {
            if points.len() == self.truncation.max_terms {
                break StopReason::MaxTerms;
            }
            let e: f64 = Exp1.sample(rng);
            gamma += e;
            let g = T::lit(gamma);
            if g >= self.total_mass {
                break StopReason::Exhausted;
            }
            if g >= self.stop_level {
                break StopReason::Floor;
            }
            let u = self.measure.tail_inverse_near(g, hint);
            if u == T::zero() {
                break StopReason::Exhausted;
            }
            if u <= self.truncation.point_floor {
                break StopReason::Floor;
            }
            points.push(u);
            last = g;
            hint = Some(u);
        };
        (points, last, stop)
    }

    /// Jumps and the quadrature estimate of the discarded mass.
    pub fn points<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<SeriesSample<T>> {
        let (points, last, stop) = self.draw(rng);
        let bound = match stop {
            StopReason::Exhausted => T::zero(),
            _ => self.discarded_mass(last)?,
        };
        let total = points.iter().copied().sum();
        Ok(SeriesSample {
            truncation_index: points.len(),
            points,
            truncation_bound: bound,
            total,
            stop,
            last_arrival: last,
        })
    }

    /// `Σ U_i` over the retained jumps, plus the expected remainder when
    /// compensation is enabled.
    pub fn sum<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<T> {
        let (points, last, stop) = self.draw(rng);
        let total: T = points.iter().copied().sum();
        if self.truncation.compensate && stop != StopReason::Exhausted {
            Ok(total + self.discarded_mass(last)?)
        } else {
            Ok(total)
        }
    }

    /// `Σ_{i≤N} (U_i - c_i)` over the retained terms; for a finite measure
    /// every nonzero `c_i` is subtracted.
    pub fn centered_sum<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<T> {
        let prefix = self.centering.as_ref().ok_or_else(|| {
            Error::Precondition("sampler was built without centering constants".into())
        })?;
        let (points, _, stop) = self.draw(rng);
        let total: T = points.iter().copied().sum();
        let k = match stop {
            StopReason::Exhausted => prefix.len() - 1,
            _ => points.len(),
        };
        Ok(total - prefix[k])
    }

    /// `Σ_{i≥1} c_i` as far as the constants were computed.
    pub fn centering_sum(&self) -> Option<T> {
        self.centering.as_ref().map(|p| *p.last().expect("nonempty prefix"))
    }

    pub fn path<R: Rng + ?Sized, S: Rng + ?Sized>(
        &self,
        rng: &mut R,
        time_rng: &mut S,
        law: TimeLaw<T>,
    ) -> LevyPath<T> {
        let (sizes, _, _) = self.draw(rng);
        let times = sizes.iter().map(|_| law.sample(time_rng)).collect();
        LevyPath { times, sizes }
    }

    /// `E Σ_{i>N} U_i = ∫_{Γ_N}^∞ H⁻¹(y) dy = ∫ (H(x) - Γ_N)⁺ dx`.
    pub fn discarded_mass(&self, last_arrival: T) -> Result<T> {
        if let LevyKind::Stable { alpha, gamma } = self.measure.kind() {
            if *alpha >= T::one() {
                return Ok(T::infinity());
            }
            if last_arrival <= T::zero() {
                return Ok(T::infinity());
            }
            let p = T::one() / *alpha;
            return Ok(gamma.powf(p) * last_arrival.powf(T::one() - p) / (p - T::one()));
        }
        let tol = Tolerance::default();
        let r = if last_arrival <= T::zero() {
            integrate_positive(|x| self.measure.tail_value(x), &self.measure.kinks(), &tol)
        } else {
            let edge = self.measure.tail_inverse(last_arrival);
            if edge == T::zero() {
                return Ok(T::zero());
            }
            integrate_below(
                |x| (self.measure.tail_value(x) - last_arrival).max(T::zero()),
                edge,
                &tol,
            )
        };
        match r.status {
            QuadStatus::Converged => Ok(r.value),
            QuadStatus::Diverged => Ok(T::infinity()),
            QuadStatus::NotConverged => Err(Error::Quadrature {
                context: "discarded series mass".into(),
                value: r.value.as_f64(),
                error: r.error.as_f64(),
            }),
        }
    }
}

/// Law `G` of the jump times on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimeLaw<T> {
    Uniform,
    PointMass { at: T },
}

impl<T: Real> TimeLaw<T> {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        match self {
            TimeLaw::Uniform => T::lit(rng.random::<f64>()),
            TimeLaw::PointMass { at } => *at,
        }
    }
}

/// Pure-jump nondecreasing path `Y_t = Σ U_i 1{V_i ≤ t}` on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevyPath<T> {
    pub times: Vec<T>,
    pub sizes: Vec<T>,
}

impl<T: Real> LevyPath<T> {
    pub fn value(&self, t: T) -> T {
        self.times
            .iter()
            .zip(&self.sizes)
            .filter(|(v, _)| **v <= t)
            .map(|(_, u)| *u)
            .sum()
    }

    /// `Y_t - Y_s` for `s ≤ t`, summed over the jumps in `(s, t]`.
    pub fn increment(&self, s: T, t: T) -> T {
        self.times
            .iter()
            .zip(&self.sizes)
            .filter(|(v, _)| **v > s && **v <= t)
            .map(|(_, u)| *u)
            .sum()
    }

    /// `(t, Y_t)` on `resolution + 1` equally spaced times.
    pub fn grid(&self, resolution: usize) -> Vec<(T, T)> {
        let res = resolution.max(1);
        (0..=res)
            .map(|k| {
                let t = T::from_usize(k).expect("index") / T::from_usize(res).expect("index");
                (t, self.value(t))
            })
            .collect()
    }
}

pub fn fk_points<T: Real>(
    measure: &LevyMeasure<T>,
    seed: Seed,
    truncation: Truncation<T>,
) -> Result<SeriesSample<T>> {
    FkSampler::new(measure, truncation)?.points(&mut seed.rng())
}

pub fn fk_sum<T: Real>(measure: &LevyMeasure<T>, seed: Seed, truncation: Truncation<T>) -> Result<T> {
    FkSampler::new(measure, truncation)?.sum(&mut seed.rng())
}

/// Path driven by the same arrival stream as [`fk_sum`] with this seed.
pub fn fk_path<T: Real>(
    measure: &LevyMeasure<T>,
    law: TimeLaw<T>,
    seed: Seed,
    truncation: Truncation<T>,
) -> Result<LevyPath<T>> {
    let sampler = FkSampler::new(measure, truncation)?;
    Ok(sampler.path(&mut seed.rng(), &mut seed.derive(TIME_STREAM).rng(), law))
}

pub fn time_seed(seed: Seed) -> Seed {
    seed.derive(TIME_STREAM)
}

pub fn fk_centered_sum<T: Real>(
    measure: &LevyMeasure<T>,
    seed: Seed,
    truncation: Truncation<T>,
) -> Result<T> {
    FkSampler::centered(measure, truncation)?.centered_sum(&mut seed.rng())
}

/// `E e^{iuX} = exp(iu ∫_0^∞ e^{iux} H(x) dx)`, the integrated-by-parts form
/// of `exp ∫ (e^{iux} - 1) ρ(dx)`.
pub fn id_char_function<T: Real>(measure: &LevyMeasure<T>, u: T) -> Result<Complex<T>> {
    let small = measure.small_jump_mean()?;
    if !small.is_finite() {
        return Err(Error::Precondition(
            "small jumps are not integrable (∫_(0,1] x ρ(dx) = ∞)".into(),
        ));
    }
    if u == T::zero() {
        return Ok(Complex::new(T::one(), T::zero()));
    }
    let integral = fourier_positive(|x| measure.tail_value(x), u, &Tolerance::default()).map_err(|r| {
        Error::Quadrature {
            context: "characteristic exponent".into(),
            value: r.value.as_f64(),
            error: r.error.as_f64(),
        }
    })?;
    let exponent = Complex::new(T::zero(), u) * integral;
    Ok(exponent.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::{MarkDistribution, RadonIntensity, TabulatedTail};

    fn finite_unit_mass() -> LevyMeasure<f64> {
        // mass 1 spread over (1, 2)
        LevyMeasure::tabulated(TabulatedTail::new(vec![1.0, 2.0], vec![1.0, 0.0]).unwrap()).unwrap()
    }

    #[test]
    fn arrivals_are_increasing_and_reproducible() {
        let a: Vec<f64> = poisson_arrivals(&mut Seed(1).rng(), 50);
        let b: Vec<f64> = poisson_arrivals(&mut Seed(1).rng(), 50);
        assert_eq!(a, b);
        assert!(a.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn rejects_infinite_small_jump_mean() {
        let m = LevyMeasure::stable(1.2f64, 1.0).unwrap();
        assert!(matches!(
            fk_sum(&m, Seed(0), Truncation::default()),
            Err(Error::Precondition(_))
        ));
        assert!(fk_centered_sum(&m, Seed(0), Truncation::default()).is_ok());
    }

    #[test]
    fn stable_points_are_nonincreasing_with_analytic_bound() {
        let m = LevyMeasure::stable(0.5f64, 1.0).unwrap();
        let s = fk_points(&m, Seed(9), Truncation::default()).unwrap();
        assert!(s.points.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(s.truncation_index, s.points.len());
        assert_eq!(s.total, s.points.iter().sum::<f64>());
        // ∫_Γ^∞ y^{-2} dy = 1/Γ
        assert!((s.truncation_bound - 1.0 / s.last_arrival).abs() < 1e-12);
    }

    #[test]
    fn quadrature_bound_matches_closed_form() {
        // product measure with the same tail as Stable(0.5, √2) but generic bound path
        let prod = LevyMeasure::product(
            RadonIntensity::power_tail(0.5f64).unwrap(),
            MarkDistribution::PointMass { w: 2.0 },
        )
        .unwrap();
        let sampler = FkSampler::new(&prod, Truncation::default()).unwrap();
        let bound = sampler.discarded_mass(100.0).unwrap();
        // ∫_100^∞ 2 y^{-2} dy
        assert!((bound - 0.02).abs() < 1e-8, "{bound}");
    }

    #[test]
    fn empty_measure_sums_to_zero() {
        let m = LevyMeasure::tabulated(TabulatedTail::new(vec![1.0f64, 2.0], vec![0.0, 0.0]).unwrap()).unwrap();
        for s in 0..20 {
            assert_eq!(fk_sum(&m, Seed(s), Truncation::default()).unwrap(), 0.0);
        }
    }

    #[test]
    fn path_properties() {
        let m = LevyMeasure::gamma(1.0f64).unwrap();
        let t = Truncation::default();
        let path = fk_path(&m, TimeLaw::Uniform, Seed(4), t).unwrap();
        let total = fk_sum(&m, Seed(4), t).unwrap();
        assert_eq!(path.value(1.0), total);
        let grid = path.grid(50);
        assert!(grid.windows(2).all(|w| w[1].1 >= w[0].1));
        let half = path.value(0.5);
        let rest = path.increment(0.5, 1.0);
        assert!((half + rest - total).abs() <= 4.0 * f64::EPSILON * total);

        let at_one = fk_path(&m, TimeLaw::PointMass { at: 1.0 }, Seed(4), t).unwrap();
        assert_eq!(at_one.value(0.999), 0.0);
        assert_eq!(at_one.value(1.0), total);
    }

    #[test]
    fn finite_measure_centering_is_exact() {
        let m = finite_unit_mass();
        let t = Truncation::default();
        let sampler = FkSampler::centered(&m, t).unwrap();
        let gamma = sampler.centering_sum().unwrap();
        assert!((gamma - m.centering_total().unwrap()).abs() < 1e-9);
        for s in 0..20 {
            let plain = fk_sum(&m, Seed(s), t).unwrap();
            let centered = sampler.centered_sum(&mut Seed(s).rng()).unwrap();
            assert_eq!(centered, plain - gamma);
        }
    }

    #[test]
    fn char_function_examples() {
        let g = LevyMeasure::gamma(1.0f64).unwrap();
        assert_eq!(id_char_function(&g, 0.0).unwrap(), Complex::new(1.0, 0.0));
        let phi = id_char_function(&g, 1.0).unwrap();
        assert!((phi - Complex::new(0.5, 0.5)).norm() < 1e-7, "{phi}");
        let phi = id_char_function(&g, -2.0).unwrap();
        let expect = Complex::new(1.0, 2.0).inv();
        assert!((phi - expect).norm() < 1e-7, "{phi}");
    }

    #[test]
    fn stable_char_function_closed_form() {
        // exponent -γ Γ(1-α) |u|^α e^{-iπα sign(u)/2}
        let alpha = 0.7f64;
        let m = LevyMeasure::stable(alpha, 1.0).unwrap();
        let gamma_fn = statrs::function::gamma::gamma(1.0 - alpha);
        for u in [0.5f64, 1.0, 2.0, -1.5] {
            let phase = Complex::new(0.0, -std::f64::consts::PI * alpha * u.signum() / 2.0).exp();
            let expect = (-gamma_fn * u.abs().powf(alpha) * phase).exp();
            let got = id_char_function(&m, u).unwrap();
            assert!((got - expect).norm() < 1e-7, "u={u}: {got} vs {expect}");
            assert!(got.norm() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn single_precision_sampler() {
        let m = LevyMeasure::gamma(1.5f32).unwrap();
        let s = fk_points(&m, Seed(2), Truncation::default()).unwrap();
        assert!(s.points.windows(2).all(|w| w[1] <= w[0]));
        assert!(s.total > 0.0);
    }
}
