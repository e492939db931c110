//! Nonnegative Lipschitz test functions with support bounded away from 0.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::real::Real;

const BANK_V1: &str = include_str!("../fixtures/test_bank_v1.csv");

/// Version tag of the built-in test bank.
pub const BANK_VERSION: &str = "v1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape<T> {
    /// `height` on `[lo + ramp, hi - ramp]`, linear ramps to 0 at `lo` and `hi`.
    SmoothedIndicator { ramp: T },
    /// Triangle peaking at the midpoint of `[lo, hi]`.
    Hat,
    /// `height · 1_[lo, hi)`; not Lipschitz, used for closed-form checks.
    Indicator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFunction<T> {
    pub name: String,
    pub lo: T,
    /// May be `+∞` for indicator-like shapes.
    pub hi: T,
    pub height: T,
    pub shape: Shape<T>,
    /// Evaluate at `|x|`, so that the support is `{lo ≤ |x| ≤ hi}`.
    #[serde(default)]
    pub symmetric: bool,
}

impl<T: Real> TestFunction<T> {
    pub fn new(name: impl Into<String>, lo: T, hi: T, height: T, shape: Shape<T>) -> Result<Self> {
        if !(lo > T::zero() && lo.is_finite()) {
            return Err(invalid("lo", format!("support must start above 0, got {lo}")));
        }
        if !(hi > lo) {
            return Err(invalid("hi", format!("support end {hi} must exceed start {lo}")));
        }
        if !(height >= T::zero() && height.is_finite()) {
            return Err(invalid("height", format!("must be finite and nonnegative, got {height}")));
        }
        match shape {
            Shape::SmoothedIndicator { ramp } => {
                if !(ramp > T::zero()) {
                    return Err(invalid("ramp", "must be positive"));
                }
                if hi.is_finite() && ramp * T::lit(2.0) > hi - lo {
                    return Err(invalid("ramp", "ramps overlap"));
                }
            }
            Shape::Hat if !hi.is_finite() => {
                return Err(invalid("hi", "a hat needs a bounded support"));
            }
            _ => {}
        }
        Ok(TestFunction {
            name: name.into(),
            lo,
            hi,
            height,
            shape,
            symmetric: false,
        })
    }

    /// Rechecks the constructor's conditions, e.g. after deserializing.
    pub fn validate(&self) -> Result<()> {
        Self::new(self.name.clone(), self.lo, self.hi, self.height, self.shape).map(|_| ())
    }

    pub fn smoothed_indicator(lo: T, hi: T, height: T, ramp: T) -> Result<Self> {
        Self::new(format!("plateau_{lo}_{hi}"), lo, hi, height, Shape::SmoothedIndicator { ramp })
    }

    pub fn hat(lo: T, hi: T, height: T) -> Result<Self> {
        Self::new(format!("hat_{lo}_{hi}"), lo, hi, height, Shape::Hat)
    }

    pub fn indicator(lo: T, hi: T, height: T) -> Result<Self> {
        Self::new(format!("indicator_{lo}_{hi}"), lo, hi, height, Shape::Indicator)
    }

    pub fn symmetric(mut self) -> Self {
        self.symmetric = true;
        self
    }

    pub fn scaled(&self, factor: T) -> Self {
        let mut f = self.clone();
        f.height = f.height * factor;
        f
    }

    pub fn is_zero(&self) -> bool {
        self.height == T::zero()
    }

    pub fn eval(&self, x: T) -> T {
        let x = if self.symmetric { x.abs() } else { x };
        if !(x >= self.lo) || x > self.hi {
            return T::zero();
        }
        match self.shape {
            Shape::Indicator => {
                if x < self.hi {
                    self.height
                } else {
                    T::zero()
                }
            }
            Shape::SmoothedIndicator { ramp } => {
                let up = (x - self.lo) / ramp;
                let down = if self.hi.is_finite() {
                    (self.hi - x) / ramp
                } else {
                    T::one()
                };
                self.height * up.min(down).min(T::one())
            }
            Shape::Hat => {
                let half = (self.hi - self.lo) / T::lit(2.0);
                let mid = self.lo + half;
                self.height * (T::one() - (x - mid).abs() / half)
            }
        }
    }

    /// `sup f`.
    pub fn sup(&self) -> T {
        self.height
    }

    /// Lipschitz constant (`+∞` for indicators).
    pub fn lipschitz(&self) -> T {
        match self.shape {
            Shape::Indicator => T::infinity(),
            Shape::SmoothedIndicator { ramp } => self.height / ramp,
            Shape::Hat => self.height * T::lit(2.0) / (self.hi - self.lo),
        }
    }

    /// Points where `f` is not differentiable (positive side).
    pub fn kinks(&self) -> Vec<T> {
        let mut k = vec![self.lo];
        match self.shape {
            Shape::Indicator => {}
            Shape::SmoothedIndicator { ramp } => {
                k.push(self.lo + ramp);
                if self.hi.is_finite() {
                    k.push(self.hi - ramp);
                }
            }
            Shape::Hat => k.push((self.lo + self.hi) / T::lit(2.0)),
        }
        if self.hi.is_finite() {
            k.push(self.hi);
        }
        k
    }

    /// Sum of `f` over a configuration, `μ(f)`.
    pub fn integrate(&self, points: &[T]) -> T {
        points.iter().map(|x| self.eval(*x)).sum()
    }
}

/// The versioned standard bank of test functions.
pub fn standard_bank<T: Real>() -> Vec<TestFunction<T>> {
    parse_bank(BANK_V1).expect("built-in test bank is well formed")
}

/// Parses a bank CSV with columns `name,shape,lo,hi,height,ramp`.
pub fn parse_bank<T: Real>(text: &str) -> Result<Vec<TestFunction<T>>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 6 {
            return Err(Error::Table(format!("bank row {i}: expected 6 columns")));
        }
        let num = |s: &str| -> Result<T> {
            let v = if s == "inf" {
                f64::INFINITY
            } else {
                s.parse::<f64>()
                    .map_err(|_| Error::Table(format!("bank row {i}: cannot parse `{s}`")))?
            };
            Ok(T::lit(v))
        };
        let shape = match cols[1] {
            "smoothed_indicator" => Shape::SmoothedIndicator { ramp: num(cols[5])? },
            "hat" => Shape::Hat,
            "indicator" => Shape::Indicator,
            other => return Err(Error::Table(format!("bank row {i}: unknown shape `{other}`"))),
        };
        out.push(TestFunction::new(cols[0], num(cols[2])?, num(cols[3])?, num(cols[4])?, shape)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn bank_loads() {
        let bank = standard_bank::<f64>();
        assert_eq!(bank.len(), 6);
        assert!(bank.iter().all(|f| f.lo >= 0.5 && f.lipschitz().is_finite()));
    }

    #[test]
    fn shapes() {
        let f = TestFunction::smoothed_indicator(1.0, f64::INFINITY, 2.0, 0.5).unwrap();
        assert_eq!(f.eval(0.9), 0.0);
        assert_eq!(f.eval(1.25), 1.0);
        assert_eq!(f.eval(100.0), 2.0);
        let h = TestFunction::hat(1.0, 3.0, 1.0).unwrap();
        assert_eq!(h.eval(2.0), 1.0);
        assert_eq!(h.eval(1.5), 0.5);
        assert_eq!(h.eval(3.5), 0.0);
        let s = h.clone().symmetric();
        assert_eq!(s.eval(-2.0), 1.0);
        assert_eq!(h.eval(-2.0), 0.0);
        assert!(TestFunction::hat(0.0, 1.0, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn lipschitz_bound_holds(x in 0.0f64..10.0, y in 0.0f64..10.0, idx in 0usize..6) {
            let f = &standard_bank::<f64>()[idx];
            prop_assert!(f.eval(x) >= 0.0);
            prop_assert!((f.eval(x) - f.eval(y)).abs() <= f.lipschitz() * (x - y).abs() + 1e-12);
        }
    }
}
