use std::collections::BTreeMap;

use idpoint::cluster::laplace_mc_bank;
use idpoint::diagnostics::{ks_two_sample, poissonity_check, DiagnosticEntry, PoissonityResult};
use idpoint::mc::{iid_estimate, replicate, variance_se};
use idpoint::{FkSampler, LevyMeasure, ProcessModel, Seed, TestFunction};

use super::{decided, Outcome};
use crate::config::{ClusterSpec, ExperimentConfig};
use crate::error::{CliError, CliResult};

const DEFAULT_LAPLACE_REL_TOL: f64 = 0.01;
const DEFAULT_KS_LEVEL: f64 = 0.01;
const DEFAULT_EXPORT: usize = 10;

struct Replicate {
    count: u64,
    sum: f64,
    points: Option<Vec<f64>>,
}

/// `E N(lo, hi)` when the window lies above every floor, `None` otherwise.
fn expected_count(process: &ProcessModel, lo: f64, hi: f64) -> idpoint::Result<Option<f64>> {
    let mass = |tail: &dyn Fn(f64) -> idpoint::Result<f64>| -> idpoint::Result<f64> {
        let upper = if hi.is_finite() { tail(hi)? } else { 0.0 };
        Ok(tail(lo)? - upper)
    };
    match process {
        ProcessModel::Poisson { intensity, floor } if lo >= *floor => Ok(Some(mass(&|x| intensity.tail(x))?)),
        ProcessModel::Product { model, floor } => {
            // the floor cuts centres, so the window must clear floor·w for every mark
            let Some(atoms) = model.marks.atoms() else { return Ok(None) };
            let top = atoms.iter().map(|a| a.0).fold(0.0, f64::max);
            if lo < floor * top {
                return Ok(None);
            }
            let law = LevyMeasure::product(model.intensity.clone(), model.marks.clone())?;
            Ok(Some(mass(&|x| law.tail(x))?))
        }
        ProcessModel::Superposition { parts } => {
            let mut total = 0.0;
            for p in parts {
                match expected_count(p, lo, hi)? {
                    Some(v) => total += v,
                    None => return Ok(None),
                }
            }
            Ok(Some(total))
        }
        _ => Ok(None),
    }
}

pub(super) fn run(config: &ExperimentConfig, spec: &ClusterSpec, base: Seed, out: &mut Outcome) -> CliResult<()> {
    let replicates = spec.replicates.unwrap_or(config.default_replicates());
    let export = spec.export_replicates.unwrap_or(DEFAULT_EXPORT);
    let functions: Vec<TestFunction> = if spec.functions.is_empty() {
        config.bank()
    } else {
        spec.functions.iter().map(|f| config.function(f)).collect::<CliResult<_>>()?
    };
    let reference = match &spec.compare_sum {
        Some(name) => Some((name.clone(), config.measure(name)?)),
        None => None,
    };

    let mut points_csv = BTreeMap::new();
    let mut counts_csv = String::from("process,replicate_id,count\n");
    let mut sums_csv = String::from("process,replicate_id,sum\n");
    let mut poissonity: BTreeMap<String, PoissonityResult> = BTreeMap::new();

    for (index, label) in spec.processes.iter().enumerate() {
        let process = config.process(label)?;
        let ctx = || format!("process `{label}`");
        let seed = out.seed(format!("cluster/{label}"), base.derive(index as u64 + 1));
        let window = spec.count_window;
        let draws = replicate(seed, replicates, |r, rng| -> idpoint::Result<Replicate> {
            let pts = process.sample(rng)?;
            let count = match window {
                Some([lo, hi]) => pts.iter().filter(|x| **x > lo && **x < hi).count() as u64,
                None => 0,
            };
            Ok(Replicate {
                count,
                sum: pts.iter().sum(),
                points: ((r as usize) < export).then_some(pts),
            })
        })
        .into_iter()
        .collect::<idpoint::Result<Vec<_>>>()
        .map_err(CliError::model(ctx()))?;

        let mut pts = String::from("replicate_id,point\n");
        for (r, d) in draws.iter().enumerate() {
            for x in d.points.iter().flatten() {
                pts.push_str(&format!("{r},{x}\n"));
            }
        }
        points_csv.insert(format!("points_{label}.csv"), pts);

        if let Some([lo, hi]) = window {
            let counts: Vec<u64> = draws.iter().map(|d| d.count).collect();
            for (r, c) in counts.iter().enumerate() {
                counts_csv.push_str(&format!("{label},{r},{c}\n"));
            }
            let as_f: Vec<f64> = counts.iter().map(|c| *c as f64).collect();
            let (_, var) = idpoint::mc::mean_var(&as_f);
            let mut mean = DiagnosticEntry::from_estimate(format!("count_mean[{label},({lo},{hi})]"), iid_estimate(&as_f));
            let mut variance = DiagnosticEntry::new(
                format!("count_variance[{label},({lo},{hi})]"),
                var,
                variance_se(&as_f),
                as_f.len(),
            );
            match expected_count(&process, lo, hi).map_err(CliError::model(ctx()))? {
                Some(target) => {
                    mean = mean.with_target(target, "intensity of the window", 0.0);
                    variance = variance.with_target(target, "Poisson variance equals the mean", 0.0);
                }
                None => {
                    let w = "window intensity unavailable for this process";
                    mean = mean.with_warning(w);
                    variance = variance.with_warning(w);
                }
            }
            out.report.push(mean);
            out.report.push(variance);
            let check = poissonity_check(&counts, DEFAULT_KS_LEVEL).map_err(CliError::model(ctx()))?;
            out.report.push(decided(
                format!("poissonity[{label},({lo},{hi})]"),
                check.dispersion,
                check.pass,
                "dispersion and chi-square tests",
            ));
            poissonity.insert(label.clone(), check);
        }

        if spec.laplace {
            let lseed = out.seed(format!("laplace/{label}"), seed.derive(1));
            let mc = laplace_mc_bank(&process, &functions, replicates, lseed).map_err(CliError::model(ctx()))?;
            let tol = spec.laplace_rel_tol.unwrap_or(DEFAULT_LAPLACE_REL_TOL);
            for (f, est) in functions.iter().zip(mc) {
                let exact = process
                    .laplace_analytic(f)
                    .map_err(CliError::model(format!("Laplace functional of `{label}` at `{}`", f.name)))?;
                out.report.push(
                    DiagnosticEntry::from_estimate(format!("laplace[{label},{}]", f.name), est)
                        .with_target(exact, "analytic Laplace functional", 0.0),
                );
                out.report.push(
                    DiagnosticEntry::new(
                        format!("laplace_rel[{label},{}]", f.name),
                        (est.mean - exact).abs() / exact,
                        0.0,
                        est.replicates,
                    )
                    .with_target(0.0, "relative Laplace tolerance", tol),
                );
            }
        }

        if let Some((name, measure)) = &reference {
            let sums: Vec<f64> = draws.iter().map(|d| d.sum).collect();
            for (r, s) in sums.iter().enumerate() {
                sums_csv.push_str(&format!("{label},{r},{s}\n"));
            }
            let sampler =
                FkSampler::new(measure, spec.sum_truncation.build()).map_err(CliError::model(format!("measure `{name}`")))?;
            let rseed = out.seed(format!("reference/{label}"), seed.derive(2));
            let series = replicate(rseed, replicates, |_, rng| sampler.sum(rng))
                .into_iter()
                .collect::<idpoint::Result<Vec<f64>>>()
                .map_err(CliError::model(format!("measure `{name}`")))?;
            let level = spec.ks_level.unwrap_or(DEFAULT_KS_LEVEL);
            let ks = ks_two_sample(&sums, &series, level).map_err(CliError::model(ctx()))?;
            out.report.push(
                DiagnosticEntry::new(format!("ks_sum[{label} vs {name}]"), ks.statistic, 0.0, sums.len())
                    .with_target(0.0, format!("two-sample KS critical value at level {level}"), ks.critical),
            );
            out.report
                .push(DiagnosticEntry::new(format!("ks_sum_p_value[{label} vs {name}]"), ks.p_value, 0.0, sums.len()));
            let mut s = String::from("replicate_id,sum\n");
            for (r, v) in series.iter().enumerate() {
                s.push_str(&format!("{r},{v}\n"));
            }
            out.artifact(format!("reference_sums_{label}.csv"), s);
        }
    }

    for (name, body) in points_csv {
        out.artifact(name, body);
    }
    if spec.count_window.is_some() {
        out.artifact("counts.csv", counts_csv);
        let json = serde_json::to_string_pretty(&poissonity).expect("poissonity serializes");
        out.artifact("poissonity.json", json + "\n");
    }
    if reference.is_some() {
        out.artifact("sums.csv", sums_csv);
    }
    Ok(())
}
