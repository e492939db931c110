use idpoint::arrays::scaling;
use idpoint::diagnostics::{
    estimate_ad1_gap, estimate_ad2, estimate_ad3, estimate_an, estimate_an_prime, estimate_incremental_gap,
    estimate_kallenberg, over_bank, Clamp, DiagnosticEntry, Pairing,
};
use idpoint::{ArrayModel, Error, Result, Seed, TestFunction};

use super::oracle::{iid_laplace_mass, iid_mass};
use super::{trend_violations, Outcome};
use crate::config::{DiagnoseSpec, DiagnoseTask, Estimator, ExperimentConfig, TargetSpec, Trend};
use crate::error::{CliError, CliResult};

const MIN_REPLICATES: usize = 100;

/// Row entries as in the i.i.d. oracle: Pareto(α) scaled so `n P(X > x) = x^{-α}`.
struct IidOracle {
    alpha: f64,
    n: usize,
    /// `1/a_n`, the smallest row value.
    lower: f64,
}

impl IidOracle {
    fn new(model: &ArrayModel, n: usize) -> Result<Self> {
        let ArrayModel::IidHeavyTail { alpha } = model else {
            return Err(Error::Precondition("the `iid` target needs an iid_heavy_tail model".into()));
        };
        Ok(IidOracle {
            alpha: *alpha,
            n,
            lower: 1.0 / scaling(*alpha, n)?,
        })
    }

    fn above_floor(&self, lo: f64) -> Result<()> {
        if lo >= self.lower {
            Ok(())
        } else {
            Err(Error::Precondition(format!(
                "the `iid` target is exact only for supports above 1/a_n = {}, got {lo}",
                self.lower
            )))
        }
    }

    fn tail(&self, x: f64) -> f64 {
        if x.is_infinite() {
            0.0
        } else {
            x.powf(-self.alpha)
        }
    }

    /// `1 - E[1 - e^{-f(X)}]`, the per-entry Laplace factor.
    fn laplace_factor(&self, f: &TestFunction) -> Result<f64> {
        self.above_floor(f.lo)?;
        Ok(1.0 - iid_laplace_mass(self.alpha, f)? / self.n as f64)
    }
}

struct GridPoint {
    n: usize,
    r: Option<usize>,
    m: Option<usize>,
    replicates: usize,
    seed: Seed,
}

enum Functions {
    None,
    One(TestFunction),
    Bank(Vec<TestFunction>),
}

pub(super) fn run(config: &ExperimentConfig, spec: &DiagnoseSpec, base: Seed, out: &mut Outcome) -> CliResult<()> {
    for (index, task) in spec.tasks.iter().enumerate() {
        let name = task
            .name
            .clone()
            .unwrap_or_else(|| format!("{}-{}-{index}", estimator_label(task.estimator), task.model));
        let seed = out.seed(format!("diagnose/{name}"), base.derive(index as u64 + 1));
        run_task(config, task, &name, seed, out)?;
    }
    Ok(())
}

fn estimator_label(e: Estimator) -> &'static str {
    match e {
        Estimator::An => "an",
        Estimator::AnPrime => "an_prime",
        Estimator::Ad2 => "ad2",
        Estimator::Kallenberg => "kallenberg",
        Estimator::IncrementalGap => "incremental_gap",
        Estimator::Ad1Gap => "ad1_gap",
        Estimator::Ad3 => "ad3",
    }
}

fn run_task(config: &ExperimentConfig, task: &DiagnoseTask, name: &str, seed: Seed, out: &mut Outcome) -> CliResult<()> {
    let model = config.model(&task.model)?;
    let scale = |f: TestFunction| match task.scale {
        Some(s) => f.scaled(s),
        None => f,
    };
    let functions = match task.function.as_deref() {
        None => Functions::None,
        Some("bank") => Functions::Bank(config.bank().into_iter().map(scale).collect()),
        Some(f) => Functions::One(scale(config.function(f)?)),
    };
    let uses_function = matches!(
        task.estimator,
        Estimator::Ad2 | Estimator::Kallenberg | Estimator::IncrementalGap | Estimator::Ad1Gap
    );
    if uses_function && matches!(functions, Functions::None) {
        return Err(CliError::MissingField("function".into()));
    }
    let iid = match &task.target {
        Some(TargetSpec::Oracle(s)) if s == "iid" => true,
        Some(TargetSpec::Oracle(s)) => return Err(CliError::Config(format!("unknown target `{s}`"))),
        _ => false,
    };
    let ms: Vec<Option<usize>> = if task.m.is_empty() {
        vec![None]
    } else {
        task.m.iter().copied().map(Some).collect()
    };

    // primary[i][j]: the entry for n[i], m[j] that trends and final targets use
    let mut primary: Vec<Vec<DiagnosticEntry>> = Vec::new();
    for (i, &n) in task.n.iter().enumerate() {
        let r = match task.r.len() {
            0 => None,
            1 => Some(task.r[0]),
            _ => Some(task.r[i]),
        };
        let replicates = task
            .replicates
            .or(task.draws.map(|d| ((d / n as u64) as usize).max(MIN_REPLICATES)))
            .unwrap_or(config.default_replicates());
        let mut row = Vec::new();
        for (j, &m) in ms.iter().enumerate() {
            let point = GridPoint {
                n,
                r,
                m,
                replicates,
                seed: seed.derive(((i as u64) << 16) | j as u64),
            };
            out.seeds.insert(format!("diagnose/{name}/n={n},m={}", m.map_or("-".into(), |m| m.to_string())), point.seed.0);
            let ctx = format!("task `{name}` at n={n}");
            let entries = match &functions {
                Functions::Bank(bank) => {
                    let label = match m {
                        Some(m) => format!("{}[n={n},m={m}]", estimator_label(task.estimator)),
                        None => format!("{}[n={n}]", estimator_label(task.estimator)),
                    };
                    over_bank(bank, &label, |f| {
                        Ok(evaluate(&model, task, &point, Some(f), iid)?.remove(0))
                    })
                    .map_err(CliError::model(ctx))?
                    .into_iter()
                    .rev()
                    .collect()
                }
                Functions::One(f) => evaluate(&model, task, &point, Some(f), iid).map_err(CliError::model(ctx))?,
                Functions::None => evaluate(&model, task, &point, None, iid).map_err(CliError::model(ctx))?,
            };
            let mut entries: Vec<DiagnosticEntry> = entries
                .into_iter()
                .map(|e| {
                    let label = if e.name.contains("n=") {
                        format!("{name}:{}", e.name)
                    } else {
                        format!("{name}:{}[n={n}]", e.name)
                    };
                    let e = e.renamed(label);
                    match task.target {
                        Some(TargetSpec::Value(v)) => e.with_target(v, "declared target", task.tolerance),
                        _ => e,
                    }
                })
                .collect();
            if model.dependence_order().is_none()
                && m.is_some()
                && matches!(task.estimator, Estimator::Ad2 | Estimator::IncrementalGap | Estimator::Ad3)
            {
                entries = entries
                    .into_iter()
                    .map(|e| if e.target.is_none() { e.trend_only() } else { e })
                    .collect();
            }
            row.push(entries[0].clone());
            for e in entries {
                out.report.push(e);
            }
        }
        primary.push(row);
    }

    if let Some(final_target) = task.final_target {
        for e in primary.last().expect("nonempty grid") {
            let e = e.clone().with_target(final_target, "declared limit", task.tolerance);
            out.report.push(e.clone().renamed(format!("{}:final", e.name)));
        }
    }
    if let Some(trend) = task.trend {
        let decreasing = trend == Trend::Decreasing;
        let word = if decreasing { "decreasing" } else { "increasing" };
        let mut series: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
        if task.n.len() > 1 {
            for (j, m) in ms.iter().enumerate() {
                let label = m.map_or(String::new(), |m| format!("[m={m}]"));
                series.push((label, primary.iter().map(|row| (row[j].estimate, row[j].se)).collect()));
            }
        } else {
            series.push((String::new(), primary[0].iter().map(|e| (e.estimate, e.se)).collect()));
        }
        for (label, pts) in series {
            let violations = trend_violations(&pts, decreasing) as f64;
            out.report.push(
                DiagnosticEntry::new(format!("{name}:trend_{word}{label}"), violations, 0.0, pts.len())
                    .with_target(0.0, format!("{word} within 3 combined SE"), 0.0),
            );
        }
    }
    Ok(())
}

/// Runs one estimator at one grid point; the first entry is the primary one.
fn evaluate(
    model: &ArrayModel,
    task: &DiagnoseTask,
    p: &GridPoint,
    f: Option<&TestFunction>,
    iid: bool,
) -> Result<Vec<DiagnosticEntry>> {
    let oracle = if iid { Some(IidOracle::new(model, p.n)?) } else { None };
    let param = |value: Option<usize>, name: &'static str| {
        value.ok_or_else(|| Error::InvalidParameter {
            name,
            reason: "required by this estimator".into(),
        })
    };
    let function = || f.ok_or_else(|| Error::InvalidParameter { name: "function", reason: "required".into() });
    let iid_target = |e: DiagnosticEntry, v: f64| e.with_target(v, "i.i.d. Pareto oracle", task.tolerance);
    Ok(match task.estimator {
        Estimator::An => {
            let [lo, hi] = task.window.unwrap_or([1.0, f64::INFINITY]);
            let mut e = estimate_an(model, p.n, lo, hi, p.replicates, p.seed)?;
            if let Some(o) = &oracle {
                o.above_floor(lo)?;
                e = iid_target(e, o.tail(lo) - o.tail(hi));
            }
            vec![e]
        }
        Estimator::AnPrime => {
            let eps = task.epsilon.ok_or_else(|| Error::InvalidParameter {
                name: "epsilon",
                reason: "required by this estimator".into(),
            })?;
            let mut e = estimate_an_prime(model, p.n, eps, p.replicates, p.seed)?;
            if let Some(o) = &oracle {
                o.above_floor(eps)?;
                if o.alpha >= 1.0 {
                    return Err(Error::Precondition("the `iid` truncated-mean target needs α < 1".into()));
                }
                let a = o.alpha;
                e = iid_target(e, a / (1.0 - a) * (eps.powf(1.0 - a) - (p.n as f64).powf(1.0 - 1.0 / a)));
            }
            vec![e]
        }
        Estimator::Ad2 => {
            let f = function()?;
            let (r, m) = (param(p.r, "r")?, param(p.m, "m")?);
            let est = estimate_ad2(model, p.n, r, m, f, p.replicates, p.seed)?;
            let (mut smooth, mut indicator) = (est.smooth, est.indicator);
            if let Some(o) = &oracle {
                o.above_floor(f.lo)?;
                let lag = r.saturating_sub(m) as f64;
                let mass = iid_mass(o.alpha, f)?;
                smooth = iid_target(smooth, lag * mass * mass / p.n as f64);
                indicator = iid_target(indicator, lag * o.tail(f.lo).powi(2) / p.n as f64);
            }
            vec![smooth, indicator]
        }
        Estimator::Kallenberg => {
            let f = function()?;
            let r = param(p.r, "r")?;
            let mut e = estimate_kallenberg(model, p.n, r, f, p.replicates, p.seed)?;
            if let Some(o) = &oracle {
                let q = o.laplace_factor(f)?;
                let k = (p.n / r) as f64;
                e = iid_target(e, k * (1.0 - q.powi(r as i32)));
            }
            vec![e]
        }
        Estimator::IncrementalGap => {
            let f = function()?;
            let m = param(p.m, "m")?;
            let pairing = task.pairing.unwrap_or(Pairing::Paired);
            let mut e = estimate_incremental_gap(model, p.n, m, f, pairing, p.replicates, p.seed)?;
            if let Some(o) = &oracle {
                let q = o.laplace_factor(f)?;
                e = iid_target(e, iid_laplace_mass(o.alpha, f)? * q.powi(m as i32 - 1));
            }
            vec![e]
        }
        Estimator::Ad1Gap => {
            let f = function()?;
            let r = param(p.r, "r")?;
            let est = estimate_ad1_gap(model, p.n, r, f, p.replicates, p.seed)?;
            let mut gap = est.gap;
            if est.remainder.abs() > est.remainder_bound + 1e-12 {
                gap = gap.with_warning(format!(
                    "leftover term {} exceeds its bound {}",
                    est.remainder, est.remainder_bound
                ));
            }
            if let Some(o) = &oracle {
                let q = o.laplace_factor(f)?;
                gap = iid_target(gap, q.powi(p.n as i32) - q.powi((r * est.k) as i32));
            }
            vec![gap, est.joint, est.block]
        }
        Estimator::Ad3 => {
            let m = param(p.m, "m")?;
            let [lo, hi] = task.clamp.unwrap_or([1.0, 2.0]);
            let mut e = estimate_ad3(model, p.n, m, Clamp::new(lo, hi)?, p.replicates, p.seed)?;
            if oracle.is_some() {
                e = iid_target(e, 0.0);
            }
            vec![e]
        }
    })
}
