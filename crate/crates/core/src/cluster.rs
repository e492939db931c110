//! Poisson and cluster point processes on `(0, ∞)` and `ℝ∖{0}`, the
//! summation map from clusters to their point-sums, and Laplace functionals.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::levy::{MarkDistribution, RadonIntensity};
use crate::mc::{batch_estimate, replicate, McEstimate, DEFAULT_BATCHES};
use crate::quad::{integrate, Tolerance};
use crate::real::Real;
use crate::rng::{Seed, StreamRng};
use crate::testfn::TestFunction;

/// Default lower edge of the simulation window.
pub const DEFAULT_FLOOR: f64 = 1e-3;

/// Cluster points below this modulus are dropped by the geometric law.
pub const GEOMETRIC_CUTOFF: f64 = 1e-8;

/// Running point-sums beyond this are treated as non-summable.
pub const SUM_CAP: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Window<T> {
    /// `(floor, ∞)`
    Above { floor: T },
    /// `{|x| > floor}`
    Modulus { floor: T },
}

impl<T: Real> Window<T> {
    pub fn floor(&self) -> T {
        match self {
            Window::Above { floor } | Window::Modulus { floor } => *floor,
        }
    }

    pub fn contains(&self, x: T) -> bool {
        match self {
            Window::Above { floor } => x > *floor,
            Window::Modulus { floor } => x.abs() > *floor,
        }
    }
}

/// Finite configuration of nonzero points inside a window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointConfiguration<T> {
    points: Vec<T>,
    window: Window<T>,
}

impl<T: Real> PointConfiguration<T> {
    /// Keeps the points that fall inside `window`.
    pub fn new(points: Vec<T>, window: Window<T>) -> Self {
        let points = points.into_iter().filter(|x| window.contains(*x)).collect();
        PointConfiguration { points, window }
    }

    pub fn points(&self) -> &[T] {
        &self.points
    }

    pub fn into_points(self) -> Vec<T> {
        self.points
    }

    pub fn window(&self) -> Window<T> {
        self.window
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Number of points in `(lo, hi]`.
    pub fn count(&self, lo: T, hi: T) -> usize {
        self.points.iter().filter(|x| **x > lo && **x <= hi).count()
    }

    /// Number of points with modulus in `(lo, hi]`.
    pub fn count_modulus(&self, lo: T, hi: T) -> usize {
        self.points
            .iter()
            .filter(|x| x.abs() > lo && x.abs() <= hi)
            .count()
    }

    /// `μ(f) = Σ f(x)`.
    pub fn integrate(&self, f: &TestFunction<T>) -> T {
        f.integrate(&self.points)
    }
}

fn check_floor<T: Real>(floor: T) -> Result<()> {
    if floor > T::zero() && floor.is_finite() {
        Ok(())
    } else {
        Err(invalid("floor", format!("window floor must be positive, got {floor}")))
    }
}

fn poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive finite mean").sample(rng) as u64
}

/// Poisson process with intensity `ν` restricted to `(floor, ∞)`: a
/// Poisson(ν(floor, ∞)) number of i.i.d. points drawn by inverting the tail.
pub fn poisson_sample<T: Real, R: Rng + ?Sized>(
    intensity: &RadonIntensity<T>,
    floor: T,
    rng: &mut R,
) -> Result<PointConfiguration<T>> {
    check_floor(floor)?;
    let mass = intensity.tail(floor)?;
    if !mass.is_finite() {
        return Err(Error::OutOfDomain {
            value: floor.as_f64(),
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    let count = poisson_count(mass.as_f64(), rng);
    let mut points = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let u = loop {
            let u: f64 = rng.random();
            if u > 0.0 {
                break u;
            }
        };
        points.push(intensity.tail_inverse(mass * T::lit(u)));
    }
    Ok(PointConfiguration::new(points, Window::Above { floor }))
}

/// Law of a single cluster `(Q_1, Q_2, …)` with every `|Q_j| ≤ 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClusterLaw<T> {
    Deterministic { points: Vec<T> },
    /// `Q_j = θ^j` for `j ≥ 0`, stopped once below the geometric cutoff.
    Geometric { theta: T },
    /// Uniform choice among the listed clusters.
    Empirical { clusters: Vec<Vec<T>> },
}

impl<T: Real> ClusterLaw<T> {
    pub fn validate(&self) -> Result<()> {
        for (cluster, _) in self.support()? {
            check_cluster(&cluster)?;
        }
        Ok(())
    }

    /// Reads clusters from CSV lines of comma-separated points (header row required).
    pub fn empirical_from_csv(text: &str) -> Result<Self> {
        let mut clusters = Vec::new();
        for (i, line) in text.lines().enumerate().skip(1) {
            let line = line.trim();
            if line.is_empty() {
                clusters.push(Vec::new());
                continue;
            }
            let cluster = line
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map(T::lit)
                        .map_err(|_| Error::Table(format!("cluster row {i}: cannot parse `{s}`")))
                })
                .collect::<Result<Vec<T>>>()?;
            clusters.push(cluster);
        }
        if clusters.is_empty() {
            return Err(Error::Table("no clusters listed".into()));
        }
        let law = ClusterLaw::Empirical { clusters };
        law.validate()?;
        Ok(law)
    }

    fn geometric(theta: T) -> Result<Vec<T>> {
        if !(theta >= T::zero() && theta < T::one()) {
            return Err(invalid("theta", format!("must lie in [0, 1), got {theta}")));
        }
        let mut out = vec![T::one()];
        let cutoff = T::lit(GEOMETRIC_CUTOFF);
        let mut q = theta;
        while q >= cutoff {
            out.push(q);
            q = q * theta;
        }
        Ok(out)
    }

    /// All clusters with their probabilities.
    pub fn support(&self) -> Result<Vec<(Vec<T>, T)>> {
        Ok(match self {
            ClusterLaw::Deterministic { points } => vec![(points.clone(), T::one())],
            ClusterLaw::Geometric { theta } => vec![(Self::geometric(*theta)?, T::one())],
            ClusterLaw::Empirical { clusters } => {
                if clusters.is_empty() {
                    return Err(invalid("clusters", "empirical law needs at least one cluster"));
                }
                let p = T::one() / T::from_usize(clusters.len()).expect("length");
                clusters.iter().map(|c| (c.clone(), p)).collect()
            }
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<T>> {
        let cluster = match self {
            ClusterLaw::Deterministic { points } => points.clone(),
            ClusterLaw::Geometric { theta } => Self::geometric(*theta)?,
            ClusterLaw::Empirical { clusters } => {
                if clusters.is_empty() {
                    return Err(invalid("clusters", "empirical law needs at least one cluster"));
                }
                clusters[rng.random_range(0..clusters.len())].clone()
            }
        };
        check_cluster(&cluster)?;
        Ok(cluster)
    }

    pub fn has_negative_points(&self) -> bool {
        match self {
            ClusterLaw::Deterministic { points } => points.iter().any(|q| *q < T::zero()),
            ClusterLaw::Geometric { .. } => false,
            ClusterLaw::Empirical { clusters } => clusters.iter().flatten().any(|q| *q < T::zero()),
        }
    }
}

fn check_cluster<T: Real>(cluster: &[T]) -> Result<()> {
    match cluster.iter().find(|q| !(q.abs() <= T::one())) {
        Some(q) => Err(Error::ClusterBound { value: q.as_f64() }),
        None => Ok(()),
    }
}

/// Centers `P_i` from a Poisson process with intensity `ν` and i.i.d. clusters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct ClusterModel<T> {
    pub intensity: RadonIntensity<T>,
    pub law: ClusterLaw<T>,
}

/// Centers with their cluster marks, before the product `P_i Q_ij` is formed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterRealization<T> {
    pub centers: Vec<T>,
    pub clusters: Vec<Vec<T>>,
}

impl<T: Real> ClusterModel<T> {
    pub fn new(intensity: RadonIntensity<T>, law: ClusterLaw<T>) -> Result<Self> {
        law.validate()?;
        Ok(ClusterModel { intensity, law })
    }

    fn window(&self, floor: T) -> Window<T> {
        if self.law.has_negative_points() {
            Window::Modulus { floor }
        } else {
            Window::Above { floor }
        }
    }

    /// Since `|Q| ≤ 1`, only centers above the floor can put points in the window.
    pub fn realize<R: Rng + ?Sized>(&self, floor: T, rng: &mut R) -> Result<ClusterRealization<T>> {
        let centers = poisson_sample(&self.intensity, floor, rng)?.into_points();
        let clusters = centers
            .iter()
            .map(|_| self.law.sample(rng))
            .collect::<Result<Vec<_>>>()?;
        Ok(ClusterRealization { centers, clusters })
    }
}

impl<T: Real> ClusterRealization<T> {
    pub fn points(&self, window: Window<T>) -> PointConfiguration<T> {
        let pts = self
            .centers
            .iter()
            .zip(&self.clusters)
            .flat_map(|(p, c)| c.iter().map(move |q| *p * *q))
            .collect();
        PointConfiguration::new(pts, window)
    }
}

/// `N = Σ_{i,j} δ_{P_i Q_ij}` restricted to the window above `floor`.
pub fn cluster_sample<T: Real, R: Rng + ?Sized>(
    model: &ClusterModel<T>,
    floor: T,
    rng: &mut R,
) -> Result<PointConfiguration<T>> {
    check_floor(floor)?;
    Ok(model.realize(floor, rng)?.points(model.window(floor)))
}

/// Point-sums `U_i = Σ_j P_i Q_ij` of the clusters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummedProcess<T> {
    pub points: Vec<T>,
}

impl<T: Real> SummedProcess<T> {
    pub fn count_above(&self, x: T) -> usize {
        self.points.iter().filter(|u| **u > x).count()
    }
}

pub fn sum_points<T: Real>(realization: &ClusterRealization<T>) -> Result<SummedProcess<T>> {
    sum_points_capped(realization, T::lit(SUM_CAP))
}

pub fn sum_points_capped<T: Real>(realization: &ClusterRealization<T>, cap: T) -> Result<SummedProcess<T>> {
    let mut points = Vec::with_capacity(realization.centers.len());
    for (p, cluster) in realization.centers.iter().zip(&realization.clusters) {
        let mut acc = T::zero();
        for q in cluster {
            acc = acc + *p * *q;
            if !(acc.abs() <= cap) {
                return Err(Error::NotSummable { cap: cap.as_f64() });
            }
        }
        points.push(acc);
    }
    Ok(SummedProcess { points })
}

/// Product-type model: `U_i = P_i W_i` with `(P_i)` Poisson(ν) and i.i.d. `W_i ~ F`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct ProductModel<T> {
    pub intensity: RadonIntensity<T>,
    pub marks: MarkDistribution<T>,
}

impl<T: Real> ProductModel<T> {
    pub fn new(intensity: RadonIntensity<T>, marks: MarkDistribution<T>) -> Result<Self> {
        marks.validate()?;
        Ok(ProductModel { intensity, marks })
    }

    /// Centers above `floor` with their marks.
    pub fn realize<R: Rng + ?Sized>(&self, floor: T, rng: &mut R) -> Result<ClusterRealization<T>> {
        let centers = poisson_sample(&self.intensity, floor, rng)?.into_points();
        let clusters = centers.iter().map(|_| vec![self.marks.sample(rng)]).collect();
        Ok(ClusterRealization { centers, clusters })
    }

    pub fn sample_summed<R: Rng + ?Sized>(&self, floor: T, rng: &mut R) -> Result<SummedProcess<T>> {
        sum_points(&self.realize(floor, rng)?)
    }
}

/// Anything that produces a finite point configuration from a random stream.
pub trait PointSampler<T>: Sync {
    fn sample_points(&self, rng: &mut StreamRng) -> Result<Vec<T>>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub enum ProcessModel<T> {
    Poisson { intensity: RadonIntensity<T>, floor: T },
    /// The cluster points `P_i Q_ij`.
    Cluster { model: ClusterModel<T>, floor: T },
    /// The summed points `P_i W_i`.
    Product { model: ProductModel<T>, floor: T },
    /// Independent superposition.
    Superposition { parts: Vec<ProcessModel<T>> },
}

impl<T: Real> PointSampler<T> for ProcessModel<T> {
    fn sample_points(&self, rng: &mut StreamRng) -> Result<Vec<T>> {
        self.sample(rng)
    }
}

impl<T: Real> ProcessModel<T> {
    pub fn validate(&self) -> Result<()> {
        match self {
            ProcessModel::Poisson { intensity, floor } => {
                check_floor(*floor)?;
                intensity.validate()
            }
            ProcessModel::Cluster { model, floor } => {
                check_floor(*floor)?;
                model.intensity.validate()?;
                model.law.validate()
            }
            ProcessModel::Product { model, floor } => {
                check_floor(*floor)?;
                model.intensity.validate()?;
                model.marks.validate()
            }
            ProcessModel::Superposition { parts } => {
                if parts.is_empty() {
                    return Err(invalid("parts", "superposition needs at least one process"));
                }
                parts.iter().try_for_each(|p| p.validate())
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<T>> {
        match self {
            ProcessModel::Poisson { intensity, floor } => {
                Ok(poisson_sample(intensity, *floor, rng)?.into_points())
            }
            ProcessModel::Cluster { model, floor } => Ok(cluster_sample(model, *floor, rng)?.into_points()),
            ProcessModel::Product { model, floor } => {
                check_floor(*floor)?;
                Ok(model.sample_summed(*floor, rng)?.points)
            }
            ProcessModel::Superposition { parts } => {
                let mut out = Vec::new();
                for p in parts {
                    out.extend(p.sample(rng)?);
                }
                Ok(out)
            }
        }
    }

    /// `L(f) = E exp(-Σ f(x))` in closed form up to quadrature.
    pub fn laplace_analytic(&self, f: &TestFunction<T>) -> Result<T> {
        Ok((-self.log_laplace(f)?).exp())
    }

    /// `-ln L(f)`.
    pub fn log_laplace(&self, f: &TestFunction<T>) -> Result<T> {
        if f.is_zero() {
            return Ok(T::zero());
        }
        match self {
            ProcessModel::Poisson { intensity, floor } => {
                check_support(f, *floor, T::one())?;
                cluster_exponent(intensity, &[T::one()], f)
            }
            ProcessModel::Cluster { model, floor } => {
                check_support(f, *floor, T::one())?;
                let mut total = T::zero();
                for (cluster, p) in model.law.support()? {
                    total = total + p * cluster_exponent(&model.intensity, &cluster, f)?;
                }
                Ok(total)
            }
            ProcessModel::Product { model, floor } => {
                if let Some(atoms) = model.marks.atoms() {
                    let mut total = T::zero();
                    for (w, p) in atoms {
                        check_support(f, *floor, w)?;
                        total = total + p * cluster_exponent(&model.intensity, &[w], f)?;
                    }
                    return Ok(total);
                }
                let failure = std::cell::Cell::new(None);
                let value = model.marks.expect(|w| match cluster_exponent(&model.intensity, &[w], f) {
                    Ok(v) => v,
                    Err(e) => {
                        failure.set(Some(e));
                        T::zero()
                    }
                })?;
                match failure.into_inner() {
                    Some(e) => Err(e),
                    None => Ok(value),
                }
            }
            ProcessModel::Superposition { parts } => {
                let mut total = T::zero();
                for p in parts {
                    total = total + p.log_laplace(f)?;
                }
                Ok(total)
            }
        }
    }
}

/// The window must not cut into the support of `f(w ·)`.
fn check_support<T: Real>(f: &TestFunction<T>, floor: T, scale: T) -> Result<()> {
    if floor * scale.abs() > f.lo {
        Err(Error::Precondition(format!(
            "window floor {floor} (scaled by {scale}) cuts the support of `{}` starting at {}",
            f.name, f.lo
        )))
    } else {
        Ok(())
    }
}

/// `∫ (1 - exp(-Σ_j f(y q_j))) ν(dy)`, computed as `∫_0^{N(y_0)} ψ(N⁻¹(s)) ds`
/// with breakpoints at the images of the kinks of `f`.
fn cluster_exponent<T: Real>(intensity: &RadonIntensity<T>, cluster: &[T], f: &TestFunction<T>) -> Result<T> {
    let qmax = cluster.iter().fold(T::zero(), |m, q| m.max(q.abs()));
    if qmax == T::zero() {
        return Ok(T::zero());
    }
    let lower = f.lo / qmax;
    let top = intensity.tail(lower)?;
    let psi = |y: T| T::one() - (-cluster.iter().map(|q| f.eval(y * *q)).sum::<T>()).exp();
    let mut cuts: Vec<T> = cluster
        .iter()
        .filter(|q| **q != T::zero())
        .flat_map(|q| f.kinks().into_iter().map(move |k| k / q.abs()))
        .filter(|y| *y > lower)
        .map(|y| intensity.tail_value(y))
        .filter(|s| *s > T::zero() && *s < top)
        .collect();
    cuts.push(T::zero());
    cuts.push(top);
    cuts.sort_by(|a, b| a.partial_cmp(b).expect("finite tail values"));
    cuts.dedup();
    let tol = Tolerance::default();
    let mut total = T::zero();
    for w in cuts.windows(2) {
        let r = integrate(|s| psi(intensity.tail_inverse(s)), w[0], w[1], &tol);
        if !r.is_converged() {
            return Err(Error::Quadrature {
                context: "Laplace exponent".into(),
                value: r.value.as_f64(),
                error: r.error.as_f64(),
            });
        }
        total = total + r.value;
    }
    Ok(total)
}

/// Monte Carlo `E exp(-Σ f(x))` for each function, sharing the replicates.
pub fn laplace_mc_bank<T: Real, S: PointSampler<T>>(
    sampler: &S,
    functions: &[TestFunction<T>],
    replicates: usize,
    seed: Seed,
) -> Result<Vec<McEstimate>> {
    if replicates < 2 {
        return Err(invalid("replicates", "need at least 2"));
    }
    let rows = replicate(seed, replicates, |_, rng| -> Result<Vec<f64>> {
        let pts = sampler.sample_points(rng)?;
        Ok(functions
            .iter()
            .map(|f| (-f.integrate(&pts)).exp().as_f64())
            .collect())
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    Ok((0..functions.len())
        .map(|k| {
            let col: Vec<f64> = rows.iter().map(|r| r[k]).collect();
            batch_estimate(&col, DEFAULT_BATCHES)
        })
        .collect())
}

pub fn laplace_mc<T: Real, S: PointSampler<T>>(
    sampler: &S,
    f: &TestFunction<T>,
    replicates: usize,
    seed: Seed,
) -> Result<McEstimate> {
    Ok(laplace_mc_bank(sampler, std::slice::from_ref(f), replicates, seed)?[0])
}
