//! Replicate loops and Monte Carlo standard errors.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::rng::{Seed, StreamRng};

/// Number of batches used for batch-means standard errors.
pub const DEFAULT_BATCHES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub se: f64,
    pub replicates: usize,
}

impl McEstimate {
    pub fn z_score(&self, target: f64) -> f64 {
        if self.se == 0.0 {
            if self.mean == target {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.mean - target) / self.se
        }
    }

    pub fn within(&self, target: f64, sigmas: f64) -> bool {
        (self.mean - target).abs() <= sigmas * self.se
    }
}

/// Runs `task(r, rng_r)` for `r = 0..replicates` on the current rayon pool.
/// Results come back in replicate order whatever the thread count.
pub fn replicate<T, F>(seed: Seed, replicates: usize, task: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, &mut StreamRng) -> T + Sync + Send,
{
    (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = seed.stream(r);
            task(r, &mut rng)
        })
        .collect()
}

/// Mean with a batch-means standard error over contiguous batches.
pub fn batch_estimate(values: &[f64], batches: usize) -> McEstimate {
    let n = values.len();
    if n == 0 {
        return McEstimate {
            mean: f64::NAN,
            se: f64::NAN,
            replicates: 0,
        };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let b = batches.min(n).max(1);
    if b < 2 {
        return McEstimate {
            mean,
            se: f64::NAN,
            replicates: n,
        };
    }
    let means: Vec<f64> = (0..b)
        .map(|k| {
            let lo = k * n / b;
            let hi = (k + 1) * n / b;
            values[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect();
    // weight batches by size so unequal splits stay unbiased
    let sizes: Vec<f64> = (0..b).map(|k| ((k + 1) * n / b - k * n / b) as f64).collect();
    let var = means
        .iter()
        .zip(&sizes)
        .map(|(m, s)| s * (m - mean) * (m - mean))
        .sum::<f64>()
        / (b - 1) as f64;
    McEstimate {
        mean,
        se: (var / n as f64).sqrt(),
        replicates: n,
    }
}

/// Mean with the i.i.d. standard error `s/√n`.
pub fn iid_estimate(values: &[f64]) -> McEstimate {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = if n > 1 {
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64
    } else {
        f64::NAN
    };
    McEstimate {
        mean,
        se: (var / n as f64).sqrt(),
        replicates: n,
    }
}

/// Sample mean and unbiased variance.
pub fn mean_var(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Standard error of a sample variance, from the fourth central moment.
pub fn variance_se(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let (mean, var) = mean_var(values);
    let m4 = values.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
    ((m4 - var * var * (n - 3.0) / (n - 1.0)) / n).max(0.0).sqrt()
}
