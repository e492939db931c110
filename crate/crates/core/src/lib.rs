//! Series samplers for infinitely divisible laws on `(0, ∞)`, Poisson and
//! cluster point processes, heavy-tailed triangular arrays with known
//! dependence, and Monte Carlo estimators for the weak-dependence conditions
//! under which their partial sums and point processes converge.
//!
//! The numeric core is generic over [`Real`] (`f32` or `f64`); the aliases at
//! the crate root fix the scalar to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arrays;
pub mod cluster;
pub mod diagnostics;
pub mod error;
pub mod levy;
pub mod mc;
pub mod quad;
pub mod real;
pub mod rng;
pub mod series;
pub mod special;
pub mod testfn;

pub use error::{Error, Result};
pub use real::Real;
pub use rng::{Seed, StreamRng};

pub type LevyMeasure = levy::LevyMeasure<f64>;
pub type LevyKind = levy::LevyKind<f64>;
pub type RadonIntensity = levy::RadonIntensity<f64>;
pub type MarkDistribution = levy::MarkDistribution<f64>;
pub type TabulatedTail = levy::TabulatedTail<f64>;
pub type Truncation = series::Truncation<f64>;
pub type SeriesSample = series::SeriesSample<f64>;
pub type FkSampler = series::FkSampler<f64>;
pub type LevyPath = series::LevyPath<f64>;
pub type TestFunction = testfn::TestFunction<f64>;
pub type PointConfiguration = cluster::PointConfiguration<f64>;
pub type ClusterModel = cluster::ClusterModel<f64>;
pub type ProductModel = cluster::ProductModel<f64>;
pub type ProcessModel = cluster::ProcessModel<f64>;
pub type ArrayModel = arrays::ArrayModel<f64>;
