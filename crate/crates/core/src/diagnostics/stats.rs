use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub level: f64,
    /// Largest statistic not rejected at `level`.
    pub critical: f64,
    pub reject: bool,
}

/// Kolmogorov distribution survival function `P(K > λ)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = sign * (-2.0 * kf * kf * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn sorted(sample: &[f64]) -> Vec<f64> {
    let mut v = sample.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    v
}

/// `λ` with `P(K > λ) = level`, by bisection.
fn kolmogorov_quantile(level: f64) -> f64 {
    let (mut lo, mut hi) = (0.2, 10.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if kolmogorov_sf(mid) > level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

fn ks_result(statistic: f64, effective_n: f64, level: f64) -> KsResult {
    let en = effective_n.sqrt();
    let factor = en + 0.12 + 0.11 / en;
    let p_value = kolmogorov_sf(factor * statistic);
    KsResult {
        statistic,
        p_value,
        level,
        critical: kolmogorov_quantile(level) / factor,
        reject: p_value < level,
    }
}

/// Two-sample Kolmogorov–Smirnov test with the asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64], level: f64) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InsufficientData("both samples must be nonempty".into()));
    }
    let (a, b) = (sorted(a), sorted(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(ks_result(d, na * nb / (na + nb), level))
}

/// One-sample Kolmogorov–Smirnov test against a continuous CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(sample: &[f64], cdf: F, level: f64) -> Result<KsResult> {
    if sample.is_empty() {
        return Err(Error::InsufficientData("sample must be nonempty".into()));
    }
    let s = sorted(sample);
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    for (i, x) in s.iter().enumerate() {
        let f = cdf(*x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    Ok(ks_result(d, n, level))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoissonityResult {
    pub replicates: usize,
    pub mean: f64,
    pub variance: f64,
    /// variance / mean
    pub dispersion: f64,
    /// Two-sided p-value of the dispersion statistic `(n-1)s²/mean ~ χ²_{n-1}`.
    pub dispersion_p: f64,
    pub chi_square: f64,
    pub chi_square_dof: usize,
    pub chi_square_p: f64,
    pub level: f64,
    pub pass: bool,
    pub warnings: Vec<String>,
}

/// Dispersion test and chi-square goodness of fit against Poisson(sample mean).
pub fn poissonity_check(counts: &[u64], level: f64) -> Result<PoissonityResult> {
    let n = counts.len();
    if n < 2 {
        return Err(Error::InsufficientData("need at least two counts".into()));
    }
    let nf = n as f64;
    let mean = counts.iter().map(|c| *c as f64).sum::<f64>() / nf;
    let variance = counts.iter().map(|c| (*c as f64 - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let mut warnings = Vec::new();
    if mean == 0.0 {
        warnings.push("all counts are zero; Poisson fit is degenerate".to_string());
        return Ok(PoissonityResult {
            replicates: n,
            mean,
            variance,
            dispersion: f64::NAN,
            dispersion_p: f64::NAN,
            chi_square: f64::NAN,
            chi_square_dof: 0,
            chi_square_p: f64::NAN,
            level,
            pass: false,
            warnings,
        });
    }
    let dispersion = variance / mean;
    let dof = nf - 1.0;
    let chi = ChiSquared::new(dof).expect("positive degrees of freedom");
    let stat = dof * dispersion;
    let dispersion_p = (2.0 * chi.cdf(stat).min(chi.sf(stat))).min(1.0);

    // bins 0..K-1 plus an open tail bin, each with expected count at least 5
    let max = *counts.iter().max().expect("nonempty") as usize;
    let mut observed = vec![0usize; max + 1];
    for c in counts {
        observed[*c as usize] += 1;
    }
    let mut probs = Vec::new();
    let mut p = (-mean).exp();
    let mut k = 0usize;
    let mut cumulative = 0.0;
    while nf * p >= 5.0 || k <= mean as usize {
        probs.push(p);
        cumulative += p;
        k += 1;
        p *= mean / k as f64;
        if nf * (1.0 - cumulative) < 5.0 {
            break;
        }
    }
    let bins = probs.len();
    let mut chi_square = 0.0;
    let mut used = 0usize;
    let mut merged_expected = 0.0;
    let mut merged_observed = 0usize;
    let mut cells = 0usize;
    for (k, p) in probs.iter().enumerate() {
        merged_expected += nf * p;
        merged_observed += observed.get(k).copied().unwrap_or(0);
        used += observed.get(k).copied().unwrap_or(0);
        if merged_expected >= 5.0 {
            chi_square += (merged_observed as f64 - merged_expected).powi(2) / merged_expected;
            cells += 1;
            merged_expected = 0.0;
            merged_observed = 0;
        }
    }
    let tail_expected = nf * (1.0 - cumulative) + merged_expected;
    let tail_observed = n - used + merged_observed;
    if tail_expected > 0.0 {
        chi_square += (tail_observed as f64 - tail_expected).powi(2) / tail_expected;
        cells += 1;
    } else if tail_observed > 0 {
        chi_square = f64::INFINITY;
    }
    let _ = bins;
    let chi_square_dof = cells.saturating_sub(2).max(1);
    let chi_square_p = ChiSquared::new(chi_square_dof as f64)
        .expect("positive degrees of freedom")
        .sf(chi_square);
    if cells < 3 {
        warnings.push(format!("only {cells} chi-square cells; goodness of fit is weak"));
    }
    Ok(PoissonityResult {
        replicates: n,
        mean,
        variance,
        dispersion,
        dispersion_p,
        chi_square,
        chi_square_dof,
        chi_square_p,
        level,
        pass: dispersion_p >= level && chi_square_p >= level,
        warnings,
    })
}

/// Hill estimate of the tail index from the largest `top_fraction` of the
/// positive values.
pub fn hill_tail_index(sample: &[f64], top_fraction: f64) -> Result<f64> {
    let mut pos: Vec<f64> = sample.iter().copied().filter(|x| *x > 0.0 && x.is_finite()).collect();
    if pos.len() < 100 {
        return Err(Error::InsufficientData(format!(
            "Hill estimator needs at least 100 positive values, got {}",
            pos.len()
        )));
    }
    if !(top_fraction > 0.0 && top_fraction < 1.0) {
        return Err(crate::error::invalid("top_fraction", "must lie in (0, 1)"));
    }
    pos.sort_by(|a, b| b.total_cmp(a));
    let k = ((top_fraction * pos.len() as f64) as usize).max(2);
    let threshold = pos[k];
    let mean_log = pos[..k].iter().map(|x| (x / threshold).ln()).sum::<f64>() / k as f64;
    if mean_log <= 0.0 {
        return Err(Error::InsufficientData("top order statistics are constant".into()));
    }
    Ok(1.0 / mean_log)
}
