use std::path::Path;

use serde::{Deserialize, Serialize};

use super::generalized_inverse;
use crate::error::{Error, Result};
use crate::real::Real;

/// How a tabulated tail continues past the end of its grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extrapolation {
    /// Hold the boundary value. Past the right end with a positive last
    /// value, the public tail reports an out-of-domain error instead.
    #[default]
    Constant,
    /// Continue the log-log slope of the two boundary grid points.
    PowerLaw,
}

/// Tail function known on a grid, interpolated linearly in `(ln x, ln H)`
/// where both neighbours are positive and linearly otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
#[serde(try_from = "TableSpec<T>")]
pub struct TabulatedTail<T> {
    xs: Vec<T>,
    hs: Vec<T>,
    #[serde(default)]
    left: Extrapolation,
    #[serde(default)]
    right: Extrapolation,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TableSpec<T> {
    xs: Vec<T>,
    hs: Vec<T>,
    #[serde(default)]
    left: Extrapolation,
    #[serde(default)]
    right: Extrapolation,
}

impl<T: Real> TryFrom<TableSpec<T>> for TabulatedTail<T> {
    type Error = Error;
    fn try_from(spec: TableSpec<T>) -> Result<Self> {
        TabulatedTail::new(spec.xs, spec.hs)?.with_extrapolation(spec.left, spec.right)
    }
}

impl<T: Real> TabulatedTail<T> {
    pub fn new(xs: Vec<T>, hs: Vec<T>) -> Result<Self> {
        if xs.len() != hs.len() {
            return Err(Error::Table(format!(
                "{} abscissae but {} tail values",
                xs.len(),
                hs.len()
            )));
        }
        if xs.len() < 2 {
            return Err(Error::Table("need at least two grid points".into()));
        }
        if !xs.iter().all(|x| x.is_finite() && *x > T::zero()) {
            return Err(Error::Table("abscissae must be positive and finite".into()));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Table("abscissae must be strictly increasing".into()));
        }
        if !hs.iter().all(|h| h.is_finite() && *h >= T::zero()) {
            return Err(Error::Table("tail values must be finite and nonnegative".into()));
        }
        if hs.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::Table("tail values must be nonincreasing".into()));
        }
        Ok(TabulatedTail {
            xs,
            hs,
            left: Extrapolation::Constant,
            right: Extrapolation::Constant,
        })
    }

    pub fn with_extrapolation(mut self, left: Extrapolation, right: Extrapolation) -> Result<Self> {
        let n = self.xs.len();
        if left == Extrapolation::PowerLaw && !(self.hs[1] > T::zero() && self.hs[0] > self.hs[1]) {
            return Err(Error::Table(
                "power-law extrapolation to the left needs a strictly decreasing positive start".into(),
            ));
        }
        if right == Extrapolation::PowerLaw
            && !(self.hs[n - 1] > T::zero() && self.hs[n - 2] > self.hs[n - 1])
        {
            return Err(Error::Table(
                "power-law extrapolation to the right needs a strictly decreasing positive end".into(),
            ));
        }
        self.left = left;
        self.right = right;
        Ok(self)
    }

    /// Reads a two-column CSV `x,H(x)` with a header row.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Table("empty table".into()))?;
        if header.split(',').count() != 2 || header.split(',').any(|f| f.trim().parse::<f64>().is_ok()) {
            return Err(Error::Table(format!("expected a two-column header row, got `{header}`")));
        }
        let mut xs = Vec::new();
        let mut hs = Vec::new();
        for (i, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 2 {
                return Err(Error::Table(format!("row {} has {} fields", i + 1, fields.len())));
            }
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::Table(format!("row {}: cannot parse `{s}`", i + 1)))
            };
            xs.push(T::lit(parse(fields[0])?));
            hs.push(T::lit(parse(fields[1])?));
        }
        Self::new(xs, hs)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| Error::Table(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_csv_str(&text)
    }

    pub fn xs(&self) -> &[T] {
        &self.xs
    }

    pub fn values(&self) -> &[T] {
        &self.hs
    }

    pub fn scaled(&self, factor: T) -> Result<Self> {
        let hs = self.hs.iter().map(|h| *h * factor).collect();
        Self::new(self.xs.clone(), hs)?.with_extrapolation(self.left, self.right)
    }

    /// Value of the tail as `x → ∞` under the chosen extrapolation.
    pub fn limit_at_infinity(&self) -> T {
        match self.right {
            Extrapolation::PowerLaw => T::zero(),
            Extrapolation::Constant => *self.hs.last().expect("nonempty grid"),
        }
    }

    /// Value as `x → 0`.
    pub fn limit_at_zero(&self) -> T {
        match self.left {
            Extrapolation::PowerLaw => T::infinity(),
            Extrapolation::Constant => self.hs[0],
        }
    }

    pub fn tail(&self, x: T) -> Result<T> {
        let last = self.xs.len() - 1;
        if x > self.xs[last] && self.right == Extrapolation::Constant && self.hs[last] > T::zero() {
            return Err(Error::OutOfDomain {
                value: x.as_f64(),
                lo: self.xs[0].as_f64(),
                hi: self.xs[last].as_f64(),
            });
        }
        Ok(self.tail_value(x))
    }

    fn slope(&self, i: usize, j: usize) -> T {
        (self.hs[j] / self.hs[i]).ln() / (self.xs[j] / self.xs[i]).ln()
    }

    pub(crate) fn tail_value(&self, x: T) -> T {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return match self.left {
                Extrapolation::Constant => self.hs[0],
                Extrapolation::PowerLaw => self.hs[0] * (x / self.xs[0]).powf(self.slope(0, 1)),
            };
        }
        if x >= self.xs[n - 1] {
            return match self.right {
                Extrapolation::Constant => self.hs[n - 1],
                Extrapolation::PowerLaw => {
                    self.hs[n - 1] * (x / self.xs[n - 1]).powf(self.slope(n - 2, n - 1))
                }
            };
        }
        let j = self.xs.partition_point(|v| *v <= x);
        let i = j - 1;
        let (x0, x1, h0, h1) = (self.xs[i], self.xs[j], self.hs[i], self.hs[j]);
        if h0 > T::zero() && h1 > T::zero() {
            let t = (x / x0).ln() / (x1 / x0).ln();
            (h0.ln() + t * (h1 / h0).ln()).exp().min(h0).max(h1)
        } else {
            let t = (x - x0) / (x1 - x0);
            h0 + t * (h1 - h0)
        }
    }

    pub fn tail_inverse(&self, y: T) -> T {
        if y >= self.limit_at_zero() {
            return T::zero();
        }
        if y < self.limit_at_infinity() {
            return T::infinity();
        }
        generalized_inverse(|x| self.tail_value(x), y, None)
    }
}
