//! Exact condition values for rows of i.i.d. Pareto entries, where
//! `n P(X_{1,n} > x) = x^{-α}` for every `x ≥ 1/a_n`.

use idpoint::quad::{integrate, QuadStatus, Tolerance};
use idpoint::{Error, Result, TestFunction};

/// `∫ g dν` for `ν(x, ∞) = x^{-α}` and `g` vanishing below `lo`, computed
/// in `t = x^{-α}`.
fn power_integral<G: Fn(f64) -> f64>(alpha: f64, g: G, lo: f64, kinks: &[f64]) -> Result<f64> {
    let mut cuts: Vec<f64> = kinks
        .iter()
        .filter(|k| k.is_finite() && **k >= lo)
        .map(|k| k.powf(-alpha))
        .collect();
    cuts.push(0.0);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let tol = Tolerance::default();
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let r = integrate(
            |t: f64| if t <= 0.0 { g(f64::INFINITY) } else { g(t.powf(-1.0 / alpha)) },
            w[0],
            w[1],
            &tol,
        );
        if r.status != QuadStatus::Converged {
            return Err(Error::Quadrature {
                context: "i.i.d. oracle".into(),
                value: r.value,
                error: r.error,
            });
        }
        total += r.value;
    }
    Ok(total)
}

/// `∫ f dν`.
pub fn iid_mass(alpha: f64, f: &TestFunction) -> Result<f64> {
    power_integral(alpha, |x| f.eval(x), f.lo, &f.kinks())
}

/// `∫ (1 - e^{-f}) dν`.
pub fn iid_laplace_mass(alpha: f64, f: &TestFunction) -> Result<f64> {
    power_integral(alpha, |x| -(-f.eval(x)).exp_m1(), f.lo, &f.kinks())
}
