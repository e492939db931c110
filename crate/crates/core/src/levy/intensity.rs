use serde::{Deserialize, Serialize};

use super::tabulated::TabulatedTail;
use crate::error::{invalid, Result};
use crate::real::Real;

/// Radon measure `ν` on `(0, ∞)` given by its tail `N(x) = ν(x, ∞)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub enum RadonIntensity<T> {
    /// `ν(x, ∞) = scale · x^{-alpha}`.
    PowerTail { alpha: T, scale: T },
    Tabulated(TabulatedTail<T>),
}

impl<T: Real> RadonIntensity<T> {
    pub fn power_tail(alpha: T) -> Result<Self> {
        Self::scaled_power_tail(alpha, T::one())
    }

    pub fn scaled_power_tail(alpha: T, scale: T) -> Result<Self> {
        if !(alpha > T::zero() && alpha.is_finite()) {
            return Err(invalid("alpha", format!("must be positive, got {alpha}")));
        }
        if !(scale > T::zero() && scale.is_finite()) {
            return Err(invalid("scale", format!("must be positive, got {scale}")));
        }
        Ok(RadonIntensity::PowerTail { alpha, scale })
    }

    /// The same intensity multiplied by `factor`.
    pub fn scaled(&self, factor: T) -> Result<Self> {
        match self {
            RadonIntensity::PowerTail { alpha, scale } => {
                Self::scaled_power_tail(*alpha, *scale * factor)
            }
            RadonIntensity::Tabulated(t) => Ok(RadonIntensity::Tabulated(t.scaled(factor)?)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            RadonIntensity::PowerTail { alpha, scale } => Self::scaled_power_tail(*alpha, *scale).map(|_| ()),
            RadonIntensity::Tabulated(_) => Ok(()),
        }
    }

    pub fn tail(&self, x: T) -> Result<T> {
        if !(x > T::zero()) {
            return Err(invalid("x", format!("tail argument must be positive, got {x}")));
        }
        match self {
            RadonIntensity::Tabulated(t) => t.tail(x),
            _ => Ok(self.tail_value(x)),
        }
    }

    pub(crate) fn tail_value(&self, x: T) -> T {
        match self {
            RadonIntensity::PowerTail { alpha, scale } => *scale * x.powf(-*alpha),
            RadonIntensity::Tabulated(t) => t.tail_value(x),
        }
    }

    pub fn tail_inverse(&self, y: T) -> T {
        match self {
            RadonIntensity::PowerTail { alpha, scale } => {
                if y <= T::zero() {
                    T::infinity()
                } else {
                    (*scale / y).powf(T::one() / *alpha)
                }
            }
            RadonIntensity::Tabulated(t) => t.tail_inverse(y),
        }
    }

    /// Points where the tail is not smooth.
    pub(crate) fn kinks(&self) -> Vec<T> {
        match self {
            RadonIntensity::PowerTail { .. } => Vec::new(),
            RadonIntensity::Tabulated(t) => t.xs().to_vec(),
        }
    }
}
