//! Monte Carlo estimators for the negligibility and weak-dependence
//! conditions, the big-block/small-block construction, and the statistical
//! tests used to compare samples with their predicted limits.

mod blocks;
mod conditions;
mod report;
mod stats;

pub use blocks::{block_scheme, BlockScheme};
pub use conditions::{
    estimate_ad1_gap, estimate_ad2, estimate_ad3, estimate_an, estimate_an_prime, estimate_incremental_gap,
    estimate_kallenberg, over_bank, Ad1Gap, Ad2Estimate, Clamp, Pairing,
};
pub use report::{DiagnosticEntry, DiagnosticReport, Verdict};
pub use stats::{
    hill_tail_index, kolmogorov_sf, ks_one_sample, ks_two_sample, poissonity_check, KsResult, PoissonityResult,
};
