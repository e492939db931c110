use idpoint::diagnostics::{ks_one_sample, DiagnosticEntry};
use idpoint::levy::LevyKind;
use idpoint::mc::{iid_estimate, replicate};
use idpoint::series::{fk_path, id_char_function, TimeLaw};
use idpoint::special::regularized_gamma_p;
use idpoint::{FkSampler, Seed};

use super::{csv_column, Outcome};
use crate::config::{ExperimentConfig, Reference, SampleSpec};
use crate::error::{CliError, CliResult};

const DEFAULT_KS_THRESHOLD: f64 = 0.01;

pub(super) fn run(config: &ExperimentConfig, spec: &SampleSpec, base: Seed, out: &mut Outcome) -> CliResult<()> {
    let label = &spec.measure;
    let measure = config.measure(label)?;
    let truncation = spec.truncation.build();
    let ctx = || format!("sample `{label}`");
    let sampler = if spec.centered {
        FkSampler::centered(&measure, truncation)
    } else {
        FkSampler::new(&measure, truncation)
    }
    .map_err(CliError::model(ctx()))?;
    if spec.centered && (spec.reference.is_some() || !spec.char_function.is_empty()) {
        return Err(CliError::Config(
            "`reference` and `char_function` apply to uncentered sums only".into(),
        ));
    }
    let replicates = spec.replicates.unwrap_or(config.default_replicates());
    let seed = out.seed("sample", base.derive(1));
    let values = replicate(seed, replicates, |_, rng| {
        if spec.centered {
            sampler.centered_sum(rng)
        } else {
            sampler.sum(rng)
        }
    })
    .into_iter()
    .collect::<idpoint::Result<Vec<f64>>>()
    .map_err(CliError::model(ctx()))?;

    let mut mean = DiagnosticEntry::from_estimate(format!("mean[{label}]"), iid_estimate(&values));
    if let Some(Reference::Gamma) = spec.reference {
        let LevyKind::GammaLevy { alpha } = measure.kind() else {
            return Err(CliError::Config(format!(
                "reference `gamma` needs a gamma_levy measure, `{label}` is not one"
            )));
        };
        let alpha = *alpha;
        mean = mean.with_target(alpha, "Gamma(α) mean", 0.0);
        let ks = ks_one_sample(&values, |x| regularized_gamma_p(alpha, x), 0.01).map_err(CliError::model(ctx()))?;
        let threshold = spec.ks_threshold.unwrap_or(DEFAULT_KS_THRESHOLD);
        out.report.push(
            DiagnosticEntry::new(format!("ks_distance[{label} vs gamma]"), ks.statistic, 0.0, values.len())
                .with_target(0.0, "KS distance bound", threshold),
        );
        out.report
            .push(DiagnosticEntry::new(format!("ks_p_value[{label} vs gamma]"), ks.p_value, 0.0, values.len()));
    }
    out.report.push(mean);

    for &u in &spec.char_function {
        let exact = id_char_function(&measure, u).map_err(CliError::model(format!("characteristic function of `{label}`")))?;
        let cos: Vec<f64> = values.iter().map(|x| (u * x).cos()).collect();
        let sin: Vec<f64> = values.iter().map(|x| (u * x).sin()).collect();
        out.report.push(
            DiagnosticEntry::from_estimate(format!("cf_re[{label},u={u}]"), iid_estimate(&cos))
                .with_target(exact.re, "characteristic function by quadrature", 0.0),
        );
        out.report.push(
            DiagnosticEntry::from_estimate(format!("cf_im[{label},u={u}]"), iid_estimate(&sin))
                .with_target(exact.im, "characteristic function by quadrature", 0.0),
        );
    }

    out.artifact("samples.csv", csv_column("value", &values));
    if let Some(resolution) = spec.path_resolution {
        let seed = out.seed("path", base.derive(2));
        let path = fk_path(&measure, TimeLaw::Uniform, seed, truncation).map_err(CliError::model(ctx()))?;
        let mut s = String::from("t,value\n");
        for (t, y) in path.grid(resolution) {
            s.push_str(&format!("{t},{y}\n"));
        }
        out.artifact("path.csv", s);
    }
    Ok(())
}
