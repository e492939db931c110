//! Row-averaged Monte Carlo estimators for the negligibility and
//! asymptotic-dependence conditions.
//!
//! Every estimator draws `replicates` independent rows of length `n`. Within a
//! row all stationary windows are averaged, and test functions are evaluated
//! only on the sparse set of entries inside their support.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::DiagnosticEntry;
use crate::arrays::ArrayModel;
use crate::error::{invalid, Error, Result};
use crate::mc::{batch_estimate, replicate, DEFAULT_BATCHES};
use crate::rng::Seed;
use crate::testfn::TestFunction;

fn rows<T, F>(model: &ArrayModel<f64>, n: usize, replicates: usize, seed: Seed, stat: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&[f64]) -> T + Sync + Send,
{
    model.validate()?;
    if n == 0 {
        return Err(invalid("n", "row length must be at least 1"));
    }
    if replicates < 2 {
        return Err(invalid("replicates", "need at least two replicates"));
    }
    replicate(seed, replicates, |_, rng| model.row(n, rng).map(|row| stat(&row)))
        .into_iter()
        .collect()
}

/// Positions and values of the nonzero entries of `f(row)`.
fn sparse(row: &[f64], f: &TestFunction<f64>) -> Vec<(usize, f64)> {
    if f.is_zero() {
        return Vec::new();
    }
    row.iter()
        .enumerate()
        .filter(|(_, x)| x.abs() >= f.lo)
        .filter_map(|(i, x)| {
            let v = f.eval(*x);
            (v > 0.0).then_some((i, v))
        })
        .collect()
}

/// Sum of `f` over row positions `[lo, hi)` given the sparse list.
fn window_sum(hits: &[(usize, f64)], lo: usize, hi: usize) -> f64 {
    let start = hits.partition_point(|(i, _)| *i < lo);
    hits[start..].iter().take_while(|(i, _)| *i < hi).map(|(_, v)| v).sum()
}

/// `n Σ_{L=m}^{upto-1} E[u_0 u_L]` from one row, with each lag averaged over
/// its `n - L` stationary pairs.
fn lagged_cross_sum(hits: &[(usize, f64)], n: usize, m: usize, upto: usize) -> f64 {
    let nf = n as f64;
    let mut total = 0.0;
    for (a, (i, u)) in hits.iter().enumerate() {
        for (j, v) in &hits[a + 1..] {
            let lag = j - i;
            if lag >= upto {
                break;
            }
            if lag >= m {
                total += u * v / (nf - lag as f64);
            }
        }
    }
    nf * total
}

fn entry(name: String, values: &[f64]) -> DiagnosticEntry {
    DiagnosticEntry::from_estimate(name, batch_estimate(values, DEFAULT_BATCHES))
}

/// `n P(X_{1,n} ∈ (lo, hi))`.
pub fn estimate_an(
    model: &ArrayModel<f64>,
    n: usize,
    lo: f64,
    hi: f64,
    replicates: usize,
    seed: Seed,
) -> Result<DiagnosticEntry> {
    if !(lo >= 0.0 && hi > lo) {
        return Err(invalid("window", format!("need 0 ≤ lo < hi, got ({lo}, {hi})")));
    }
    let counts = rows(model, n, replicates, seed, |row| {
        row.iter().filter(|x| **x > lo && **x < hi).count() as f64
    })?;
    Ok(entry(format!("an[{lo},{hi}]"), &counts))
}

/// `n E[X_{1,n} 1{X_{1,n} ≤ ε}]`.
pub fn estimate_an_prime(
    model: &ArrayModel<f64>,
    n: usize,
    epsilon: f64,
    replicates: usize,
    seed: Seed,
) -> Result<DiagnosticEntry> {
    if !(epsilon > 0.0) {
        return Err(invalid("epsilon", "must be positive"));
    }
    let sums = rows(model, n, replicates, seed, |row| {
        row.iter().filter(|x| **x <= epsilon).sum::<f64>()
    })?;
    let mut e = entry(format!("an_prime[{epsilon}]"), &sums);
    if model.alpha() >= 1.0 {
        e = e.with_warning("tail index ≥ 1: the truncated mean grows with n");
    }
    Ok(e)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ad2Estimate {
    pub smooth: DiagnosticEntry,
    /// Same sum with `f` replaced by `1{|x| ≥ η}`, `η` the support start of `f`.
    pub indicator: DiagnosticEntry,
}

/// `n Σ_{j=m+1}^{r} E[f(X_{1,n}) f(X_{j,n})]` and its indicator variant.
pub fn estimate_ad2(
    model: &ArrayModel<f64>,
    n: usize,
    r: usize,
    m: usize,
    f: &TestFunction<f64>,
    replicates: usize,
    seed: Seed,
) -> Result<Ad2Estimate> {
    if r > n {
        return Err(invalid("r", format!("block length {r} exceeds row length {n}")));
    }
    let name = format!("ad2[{},n={n},r={r},m={m}]", f.name);
    let iname = format!("ad2_indicator[{},n={n},r={r},m={m}]", f.name);
    if m >= r {
        let w = format!("m = {m} ≥ r = {r}: empty sum");
        return Ok(Ad2Estimate {
            smooth: DiagnosticEntry::new(name, 0.0, 0.0, 0).with_warning(w.clone()),
            indicator: DiagnosticEntry::new(iname, 0.0, 0.0, 0).with_warning(w),
        });
    }
    let eta = f.lo;
    let pairs = rows(model, n, replicates, seed, |row| {
        let hits = sparse(row, f);
        let marks: Vec<(usize, f64)> = row
            .iter()
            .enumerate()
            .filter(|(_, x)| x.abs() >= eta)
            .map(|(i, _)| (i, 1.0))
            .collect();
        (lagged_cross_sum(&hits, n, m, r), lagged_cross_sum(&marks, n, m, r))
    })?;
    let (smooth, indicator): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    Ok(Ad2Estimate {
        smooth: entry(name, &smooth),
        indicator: entry(iname, &indicator),
    })
}

fn blocks_of(n: usize, r: usize) -> Result<usize> {
    if r == 0 || r > n {
        return Err(Error::InvalidParameter {
            name: "r",
            reason: format!("block length must lie in [1, n = {n}], got {r}"),
        });
    }
    Ok(n / r)
}

/// `k_n (1 - L_{r_n,n}(f))` with `k_n = ⌊n / r_n⌋`, averaging over the `k_n`
/// disjoint blocks of each row.
pub fn estimate_kallenberg(
    model: &ArrayModel<f64>,
    n: usize,
    r: usize,
    f: &TestFunction<f64>,
    replicates: usize,
    seed: Seed,
) -> Result<DiagnosticEntry> {
    let k = blocks_of(n, r)?;
    let values = rows(model, n, replicates, seed, |row| {
        let hits = sparse(row, f);
        (0..k)
            .map(|b| -(-window_sum(&hits, b * r, (b + 1) * r)).exp_m1())
            .sum::<f64>()
    })?;
    Ok(entry(format!("kallenberg[{},n={n},r={r}]", f.name), &values))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pairing {
    /// Both Laplace terms from the same windows (common random numbers).
    Paired,
    /// Each term from its own independent row.
    Unpaired,
}

/// `n (L_{m-1,n}(f) - L_{m,n}(f))` with `L_{0,n} = 1`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_incremental_gap(
    model: &ArrayModel<f64>,
    n: usize,
    m: usize,
    f: &TestFunction<f64>,
    pairing: Pairing,
    replicates: usize,
    seed: Seed,
) -> Result<DiagnosticEntry> {
    if m < 1 || m > n {
        return Err(invalid("m", format!("must lie in [1, n = {n}], got {m}")));
    }
    let nf = n as f64;
    let windows = (n - m + 1) as f64;
    let name = format!("incremental_gap[{},n={n},m={m}]", f.name);
    let values = match pairing {
        Pairing::Paired => rows(model, n, replicates, seed, |row| {
            // e^{-S_{m-1}} - e^{-S_m} = e^{-S_{m-1}} (1 - e^{-f(last)})
            let hits = sparse(row, f);
            let total: f64 = hits
                .iter()
                .filter(|(p, _)| *p + 1 >= m)
                .map(|(p, v)| {
                    let head = window_sum(&hits, p + 1 - m, *p);
                    (-head).exp() * -(-v).exp_m1()
                })
                .sum();
            nf * total / windows
        })?,
        Pairing::Unpaired => {
            // deficit 1 - e^{-S} over all windows of a given length
            let deficit = |row: &[f64], len: usize| -> f64 {
                if len == 0 {
                    return 0.0;
                }
                let hits = sparse(row, f);
                let count = n - len + 1;
                let mut starts: Vec<usize> = hits
                    .iter()
                    .flat_map(|(p, _)| (p + 1).saturating_sub(len)..=(*p).min(count - 1))
                    .collect();
                starts.sort_unstable();
                starts.dedup();
                starts
                    .iter()
                    .map(|s| -(-window_sum(&hits, *s, s + len)).exp_m1())
                    .sum::<f64>()
                    / count as f64
            };
            let first = rows(model, n, replicates, seed.derive(1), |row| deficit(row, m))?;
            let second = rows(model, n, replicates, seed.derive(2), |row| deficit(row, m - 1))?;
            first.iter().zip(&second).map(|(a, b)| nf * (a - b)).collect()
        }
    };
    Ok(entry(name, &values))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ad1Gap {
    /// Signed `E e^{-S_n} - (E e^{-S_{r_n}})^{k_n}` with a delta-method SE.
    pub gap: DiagnosticEntry,
    pub joint: DiagnosticEntry,
    pub block: DiagnosticEntry,
    /// `|E e^{-S_n} - E e^{-S_{k_n r_n}}|` and its bound `(n - r_n k_n) E f(X_{1,n})`.
    pub remainder: f64,
    pub remainder_bound: f64,
    pub k: usize,
}

/// Both Laplace terms of the block-factorization gap, estimated from the same
/// rows.
pub fn estimate_ad1_gap(
    model: &ArrayModel<f64>,
    n: usize,
    r: usize,
    f: &TestFunction<f64>,
    replicates: usize,
    seed: Seed,
) -> Result<Ad1Gap> {
    let k = blocks_of(n, r)?;
    let per_row = rows(model, n, replicates, seed, |row| {
        let hits = sparse(row, f);
        let covered = window_sum(&hits, 0, k * r);
        let all: f64 = hits.iter().map(|(_, v)| v).sum();
        let blocks = (0..k)
            .map(|b| (-window_sum(&hits, b * r, (b + 1) * r)).exp())
            .sum::<f64>()
            / k as f64;
        ((-all).exp(), blocks, (-covered).exp(), all - covered)
    })?;
    let rf = per_row.len() as f64;
    let joint: Vec<f64> = per_row.iter().map(|t| t.0).collect();
    let block: Vec<f64> = per_row.iter().map(|t| t.1).collect();
    let a = joint.iter().sum::<f64>() / rf;
    let b = block.iter().sum::<f64>() / rf;
    let slope = k as f64 * b.powi(k as i32 - 1);
    let influence: Vec<f64> = per_row.iter().map(|t| t.0 - slope * t.1).collect();
    let spread = batch_estimate(&influence, DEFAULT_BATCHES);
    let gap = a - b.powi(k as i32);
    let remainder = per_row.iter().map(|t| t.2 - t.0).sum::<f64>() / rf;
    // by stationarity the leftover sum has mean (n - k r) E f(X_{1,n})
    let remainder_bound = per_row.iter().map(|t| t.3).sum::<f64>() / rf;
    let tag = format!("{},n={n},r={r}", f.name);
    let mut gap_entry = DiagnosticEntry::new(format!("ad1_gap[{tag}]"), gap, spread.se, per_row.len());
    if remainder > remainder_bound {
        gap_entry = gap_entry.with_warning(format!(
            "remainder {remainder:e} exceeds its bound {remainder_bound:e}"
        ));
    }
    Ok(Ad1Gap {
        gap: gap_entry,
        joint: entry(format!("ad1_joint[{tag}]"), &joint),
        block: entry(format!("ad1_block[{tag}]"), &block),
        remainder,
        remainder_bound,
        k,
    })
}

/// `g(x) = min(max(x, lo), hi)`: bounded, nondecreasing and the identity on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Clamp {
    pub lo: f64,
    pub hi: f64,
}

impl Clamp {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return Err(invalid("clamp", format!("need 0 < lo < hi < ∞, got [{lo}, {hi}]")));
        }
        Ok(Clamp { lo, hi })
    }

    pub fn eval(&self, x: f64) -> f64 {
        x.clamp(self.lo, self.hi)
    }
}

/// `n Σ_{j=m+1}^{n} Cov(g(X_{1,n}), g(X_{j,n}))`.
pub fn estimate_ad3(
    model: &ArrayModel<f64>,
    n: usize,
    m: usize,
    g: Clamp,
    replicates: usize,
    seed: Seed,
) -> Result<DiagnosticEntry> {
    let name = format!("ad3[{},{}],n={n},m={m}", g.lo, g.hi);
    if m >= n {
        return Ok(DiagnosticEntry::new(name, 0.0, 0.0, 0).with_warning(format!("m = {m} ≥ n = {n}: empty sum")));
    }
    let nf = n as f64;
    // h = g - lo shares the covariances of g and vanishes below lo
    let per_row = rows(model, n, replicates, seed, |row| {
        let hits: Vec<(usize, f64)> = row
            .iter()
            .enumerate()
            .filter(|(_, x)| **x > g.lo)
            .map(|(i, x)| (i, g.eval(*x) - g.lo))
            .collect();
        let mean = hits.iter().map(|(_, v)| v).sum::<f64>() / nf;
        (lagged_cross_sum(&hits, n, m, n), mean)
    })?;
    let rf = per_row.len() as f64;
    let total: f64 = per_row.iter().map(|t| t.1).sum();
    let squares: f64 = per_row.iter().map(|t| t.1 * t.1).sum();
    let mu = total / rf;
    // unbiased estimate of μ² from distinct rows
    let mu_sq = (total * total - squares) / (rf * (rf - 1.0));
    let scale = nf * (nf - m as f64);
    let cross = per_row.iter().map(|t| t.0).sum::<f64>() / rf;
    let estimate = cross - scale * mu_sq;
    let influence: Vec<f64> = per_row.iter().map(|t| t.0 - 2.0 * scale * mu * t.1).collect();
    let spread = batch_estimate(&influence, DEFAULT_BATCHES);
    Ok(DiagnosticEntry::new(name, estimate, spread.se, per_row.len()))
}

/// Runs `estimator` over every test function and appends a `worst` entry
/// holding the one with the largest `|estimate|`.
pub fn over_bank<F>(bank: &[TestFunction<f64>], label: &str, estimator: F) -> Result<Vec<DiagnosticEntry>>
where
    F: Fn(&TestFunction<f64>) -> Result<DiagnosticEntry> + Sync + Send,
{
    if bank.is_empty() {
        return Err(invalid("bank", "test bank is empty"));
    }
    let mut entries: Vec<DiagnosticEntry> = bank.par_iter().map(&estimator).collect::<Result<_>>()?;
    let worst = entries
        .iter()
        .max_by(|a, b| a.estimate.abs().total_cmp(&b.estimate.abs()))
        .expect("nonempty")
        .clone();
    let source = worst.name.clone();
    entries.push(worst.renamed(format!("{label}[worst]")).with_warning(format!("attained by {source}")));
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn iid() -> ArrayModel<f64> {
        ArrayModel::IidHeavyTail { alpha: 0.5 }
    }

    fn plateau() -> TestFunction<f64> {
        TestFunction::smoothed_indicator(1.0, f64::INFINITY, 1.0, 0.05).unwrap()
    }

    fn zero() -> TestFunction<f64> {
        plateau().scaled(0.0)
    }

    #[test]
    fn window_sum_and_lags() {
        let hits = vec![(1, 1.0), (3, 2.0), (4, 0.5), (9, 1.0)];
        assert_eq!(window_sum(&hits, 0, 4), 3.0);
        assert_eq!(window_sum(&hits, 4, 9), 0.5);
        assert_eq!(window_sum(&hits, 5, 9), 0.0);
        // lags: (1,3)=2 (1,4)=3 (3,4)=1 (1,9)=8 (3,9)=6 (4,9)=5
        let n = 10;
        let direct = 10.0 * (2.0 / 8.0 + 0.5 / 7.0 + 1.0 / 9.0);
        assert!((lagged_cross_sum(&hits, n, 1, 4) - direct).abs() < 1e-12);
        assert_eq!(lagged_cross_sum(&hits, n, 4, 4), 0.0);
    }

    #[test]
    fn an_far_window_is_zero() {
        let e = estimate_an(&iid(), 1000, 1e12, f64::INFINITY, 200, Seed(1)).unwrap();
        assert_eq!(e.estimate, 0.0);
        let e = estimate_an(&iid(), 1000, 1.0, f64::INFINITY, 2000, Seed(1)).unwrap();
        assert!(e.se > 0.0);
        assert!((e.estimate - 1.0).abs() < 4.0 * e.se, "{e:?}");
    }

    #[test]
    fn an_prime_below_support_is_zero() {
        // entries are at least a_n^{-1} = 1e-6
        let e = estimate_an_prime(&iid(), 1000, 1e-7, 50, Seed(1)).unwrap();
        assert_eq!(e.estimate, 0.0);
    }

    #[test]
    fn an_prime_monotone_in_epsilon() {
        let grid = [0.05, 0.1, 0.25, 0.5];
        let e: Vec<f64> = grid
            .iter()
            .map(|eps| estimate_an_prime(&iid(), 1000, *eps, 200, Seed(4)).unwrap().estimate)
            .collect();
        assert!(e.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn zero_function_gives_exact_zero() {
        let f = zero();
        assert_eq!(estimate_kallenberg(&iid(), 1000, 100, &f, 20, Seed(2)).unwrap().estimate, 0.0);
        for pairing in [Pairing::Paired, Pairing::Unpaired] {
            let e = estimate_incremental_gap(&iid(), 1000, 3, &f, pairing, 20, Seed(2)).unwrap();
            assert_eq!(e.estimate, 0.0);
        }
        assert_eq!(estimate_ad1_gap(&iid(), 1000, 300, &f, 20, Seed(2)).unwrap().gap.estimate, 0.0);
    }

    #[test]
    fn empty_sums() {
        let e = estimate_ad2(&iid(), 1000, 100, 100, &plateau(), 20, Seed(3)).unwrap();
        assert_eq!(e.smooth.estimate, 0.0);
        assert!(!e.smooth.warnings.is_empty());
        let g = Clamp::new(0.5, 5.0).unwrap();
        assert_eq!(estimate_ad3(&iid(), 100, 100, g, 20, Seed(3)).unwrap().estimate, 0.0);
    }

    #[test]
    fn domain_errors() {
        let f = plateau();
        assert!(estimate_ad1_gap(&iid(), 100, 101, &f, 10, Seed(0)).is_err());
        assert!(estimate_incremental_gap(&iid(), 100, 0, &f, Pairing::Paired, 10, Seed(0)).is_err());
        assert!(estimate_incremental_gap(&iid(), 100, 101, &f, Pairing::Paired, 10, Seed(0)).is_err());
        assert!(Clamp::new(1.0, 1.0).is_err());
    }

    #[test]
    fn ad1_without_remainder_is_zero() {
        // n = r: both terms are the same per-row value
        let e = estimate_ad1_gap(&iid(), 500, 500, &plateau(), 200, Seed(6)).unwrap();
        assert!(e.gap.estimate.abs() < 1e-12);
        assert_eq!(e.k, 1);
        assert_eq!(e.remainder_bound, 0.0);
    }

    #[test]
    fn unpaired_window_deficit_matches_direct_count() {
        let f = TestFunction::indicator(1.0, f64::INFINITY, 1.0).unwrap();
        let e = estimate_incremental_gap(&iid(), 200, 1, &f, Pairing::Unpaired, 400, Seed(9)).unwrap();
        let p = estimate_incremental_gap(&iid(), 200, 1, &f, Pairing::Paired, 400, Seed(9).derive(1)).unwrap();
        assert!((e.estimate - p.estimate).abs() < 1e-12);
    }

    #[test]
    fn bank_worst_case() {
        let bank = crate::testfn::standard_bank::<f64>();
        let entries = over_bank(&bank, "kallenberg", |f| estimate_kallenberg(&iid(), 400, 40, f, 50, Seed(5))).unwrap();
        assert_eq!(entries.len(), bank.len() + 1);
        let worst = entries.last().unwrap();
        let max = entries[..bank.len()].iter().map(|e| e.estimate.abs()).fold(0.0, f64::max);
        assert_eq!(worst.estimate.abs(), max);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn laplace_terms_in_unit_interval(seed in 0u64..1000, r in 10usize..200) {
            let e = estimate_ad1_gap(&iid(), 400, r, &plateau(), 20, Seed(seed)).unwrap();
            prop_assert!((0.0..=1.0).contains(&e.joint.estimate));
            prop_assert!((0.0..=1.0).contains(&e.block.estimate));
            prop_assert!(e.remainder <= e.remainder_bound + 1e-15);
            prop_assert!(e.gap.se >= 0.0);
        }
    }
}
