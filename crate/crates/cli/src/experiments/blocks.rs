use idpoint::diagnostics::{block_scheme, BlockScheme, DiagnosticEntry};

use super::{decided, Outcome};
use crate::config::BlocksSpec;
use crate::error::{CliError, CliResult};

type Key = fn(&BlockScheme) -> f64;

pub(super) fn run(spec: &BlocksSpec, out: &mut Outcome) -> CliResult<()> {
    let mut grid = spec.n.clone();
    grid.sort_unstable();
    grid.dedup();
    let rows: Vec<BlockScheme> = grid
        .iter()
        .map(|&n| block_scheme(n, |m| spec.mixing.eval(m)).map_err(CliError::model(format!("block scheme n={n}"))))
        .collect::<CliResult<_>>()?;

    let mut csv = String::from("n,rho,epsilon,delta,eta,r,k,m,mixing_at_m,k_alpha,m_over_r\n");
    for b in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            b.n,
            b.rho,
            b.epsilon,
            b.delta,
            b.eta,
            b.r,
            b.k,
            b.m,
            b.mixing_at_m,
            b.k_alpha(),
            b.m_over_r()
        ));
    }
    out.artifact("blocks.csv", csv);

    let count = |f: &dyn Fn(&BlockScheme) -> bool| rows.iter().filter(|b| !f(b)).count() as f64;
    out.report.push(
        DiagnosticEntry::new("blocks:inconsistent_rows", count(&|b| b.is_consistent()), 0.0, rows.len())
            .with_target(0.0, "recomputed from the defining formulas", 0.0),
    );
    out.report.push(
        DiagnosticEntry::new("blocks:bound_violations", count(&|b| b.satisfies_bounds()), 0.0, rows.len())
            .with_target(0.0, "block-length constraints", 0.0),
    );
    let breaks = |key: &dyn Fn(&BlockScheme) -> f64, increasing: bool| {
        rows.windows(2)
            .filter(|w| {
                let (a, b) = (key(&w[0]), key(&w[1]));
                if increasing {
                    b <= a
                } else {
                    b >= a
                }
            })
            .count() as f64
    };
    let trends: [(&str, Key, bool); 4] = [
        ("r_increasing", |b| b.r as f64, true),
        ("k_increasing", |b| b.k as f64, true),
        ("m_over_r_decreasing", |b| b.m_over_r(), false),
        ("k_alpha_decreasing", |b| b.k_alpha(), false),
    ];
    for (name, key, increasing) in trends {
        out.report.push(
            DiagnosticEntry::new(format!("blocks:trend_{name}"), breaks(&key, increasing), 0.0, rows.len())
                .with_target(0.0, "strict monotone trend", 0.0),
        );
    }

    if let Some(w) = spec.expect {
        let b = block_scheme(w.n, |m| spec.mixing.eval(m)).map_err(CliError::model("worked row"))?;
        let exact = b.r == w.r && b.k == w.k && b.m == w.m;
        let gap = (b.k_alpha() - w.k_alpha).abs();
        out.report.push(decided(
            format!("blocks:worked_row[n={}]", w.n),
            gap,
            exact && gap <= 1e-12 * w.k_alpha.abs().max(1.0),
            "worked row r, k, m exact and k·α(m) to 1e-12",
        ));
    }
    Ok(())
}
