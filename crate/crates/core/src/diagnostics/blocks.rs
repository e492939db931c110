use serde::Serialize;

use crate::error::{invalid, Result};

/// Big-block/small-block sizes for a row of length `n` under mixing rate `α(·)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlockScheme {
    pub n: u64,
    pub rho: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub eta: f64,
    pub r: u64,
    pub k: u64,
    pub m: u64,
    /// `α(m_n)`
    pub mixing_at_m: f64,
}

fn isqrt(n: u64) -> u64 {
    let mut x = (n as f64).sqrt() as u64;
    while x * x > n {
        x -= 1;
    }
    while (x + 1) * (x + 1) <= n {
        x += 1;
    }
    x
}

fn inverse_fourth_root(n: u64) -> f64 {
    1.0 / (n as f64).sqrt().sqrt()
}

/// With `ρ_n = α(⌊√n⌋)`: `ε_n = max(n^{-1/4}, √ρ_n)`, `δ_n = n^{-1/2}/ε_n`,
/// `η_n = ρ_n/(2ε_n)`, `r_n = ⌊n ε_n⌋`, `k_n = ⌊n/r_n⌋`, `m_n = ⌊√n⌋`.
pub fn block_scheme<A: Fn(u64) -> f64>(n: u64, alpha: A) -> Result<BlockScheme> {
    if n < 4 {
        return Err(invalid("n", "block scheme needs n ≥ 4"));
    }
    let m = isqrt(n);
    let rho = alpha(m);
    if !(0.0..=1.0).contains(&rho) {
        return Err(invalid("alpha", format!("mixing coefficient must lie in [0, 1], got {rho}")));
    }
    let nf = n as f64;
    let epsilon = inverse_fourth_root(n).max(rho.sqrt());
    let delta = 1.0 / nf.sqrt() / epsilon;
    let eta = rho / (2.0 * epsilon);
    let r = ((nf * epsilon).floor() as u64).max(1);
    let k = n / r;
    Ok(BlockScheme {
        n,
        rho,
        epsilon,
        delta,
        eta,
        r,
        k,
        m,
        mixing_at_m: rho,
    })
}

impl BlockScheme {
    /// `k_n α(m_n)`.
    pub fn k_alpha(&self) -> f64 {
        self.k as f64 * self.mixing_at_m
    }

    pub fn m_over_r(&self) -> f64 {
        self.m as f64 / self.r as f64
    }

    /// Recomputes every derived field from `n` and `ρ_n`.
    pub fn is_consistent(&self) -> bool {
        let nf = self.n as f64;
        let epsilon = inverse_fourth_root(self.n).max(self.rho.sqrt());
        epsilon == self.epsilon
            && 1.0 / nf.sqrt() / epsilon == self.delta
            && self.rho / (2.0 * epsilon) == self.eta
            && ((nf * epsilon).floor() as u64).max(1) == self.r
            && self.n / self.r == self.k
            && isqrt(self.n) == self.m
    }

    /// Bounds established alongside the construction.
    pub fn satisfies_bounds(&self) -> bool {
        let nf = self.n as f64;
        self.r as f64 >= nf.powf(0.75) / 2.0
            && self.k as f64 >= 1.0 / (2.0 * self.epsilon)
            && self.m_over_r() <= 2.0 * self.delta
            && self.k_alpha() <= 4.0 * self.eta + 1e-15
    }
}
