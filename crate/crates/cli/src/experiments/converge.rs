use idpoint::arrays::partial_sum;
use idpoint::diagnostics::{ks_two_sample, DiagnosticEntry, KsResult};
use idpoint::mc::replicate;
use idpoint::{ArrayModel, Error, FkSampler, LevyMeasure, Seed, Truncation};

use super::{decided, Outcome};
use crate::config::{ConvergeSpec, ExperimentConfig};
use crate::error::{CliError, CliResult};

const DEFAULT_THRESHOLD: f64 = 0.05;
const KS_LEVEL: f64 = 0.01;
const DEFAULT_QUANTILES: [f64; 7] = [0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95];

#[derive(Debug, Clone)]
pub struct ConvergeResult {
    /// Row sums `S_n`.
    pub array: Vec<f64>,
    /// Series draws from the target law.
    pub target: Vec<f64>,
    pub ks: KsResult,
}

impl ConvergeResult {
    /// `(level, array quantile, target quantile)`.
    pub fn quantiles(&self, levels: &[f64]) -> Vec<(f64, f64, f64)> {
        let mut a = self.array.clone();
        let mut t = self.target.clone();
        a.sort_by(f64::total_cmp);
        t.sort_by(f64::total_cmp);
        levels
            .iter()
            .map(|&q| (q, empirical_quantile(&a, q), empirical_quantile(&t, q)))
            .collect()
    }
}

fn empirical_quantile(sorted: &[f64], q: f64) -> f64 {
    let i = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[i - 1]
}

fn target_sums(target: &LevyMeasure, truncation: Truncation, replicates: usize, seed: Seed) -> idpoint::Result<Vec<f64>> {
    let report = target.validate_levy()?;
    if !report.is_levy {
        return Err(Error::Precondition(format!(
            "hypothesis `levy_measure` fails: ∫ x²/(1+x²) dρ = {} and mass at infinity must vanish",
            report.levy_integral
        )));
    }
    if !report.small_jump_finite {
        return Err(Error::Precondition(
            "hypothesis `small_jump_mean` fails: ∫_(0,1] x dρ is infinite".into(),
        ));
    }
    let sampler = FkSampler::new(target, truncation)?;
    replicate(seed, replicates, |_, rng| sampler.sum(rng)).into_iter().collect()
}

/// Draws `replicates` row sums of `model` at length `n` and as many series
/// draws from the law with Lévy measure `target`, and compares them by a
/// two-sample KS test.
pub fn converge_experiment(
    model: &ArrayModel,
    target: &LevyMeasure,
    n: usize,
    replicates: usize,
    seed: Seed,
    truncation: Truncation,
) -> idpoint::Result<ConvergeResult> {
    let target_draws = target_sums(target, truncation, replicates, seed.derive(2))?;
    let array = replicate(seed.derive(1), replicates, |_, rng| model.row(n, rng).map(|r| partial_sum(&r)))
        .into_iter()
        .collect::<idpoint::Result<Vec<f64>>>()?;
    let ks = ks_two_sample(&array, &target_draws, KS_LEVEL)?;
    Ok(ConvergeResult {
        array,
        target: target_draws,
        ks,
    })
}

pub(super) fn run(config: &ExperimentConfig, spec: &ConvergeSpec, base: Seed, out: &mut Outcome) -> CliResult<()> {
    let model = config.model(&spec.model)?;
    let target = config.measure(&spec.target)?;
    let replicates = spec.replicates.unwrap_or(config.default_replicates());
    let truncation = spec.truncation.build();
    let threshold = spec.threshold.unwrap_or(DEFAULT_THRESHOLD);
    let seed = out.seed("converge", base.derive(1));
    let ctx = format!("converge `{}` to `{}`", spec.model, spec.target);
    let result = converge_experiment(&model, &target, spec.n, replicates, seed, truncation).map_err(CliError::model(ctx))?;
    let label = format!("{} vs {}", spec.model, spec.target);
    out.report.push(
        DiagnosticEntry::new(format!("converge:ks_distance[{label}]"), result.ks.statistic, 0.0, replicates)
            .with_target(0.0, "KS distance bound", threshold),
    );
    out.report.push(DiagnosticEntry::new(
        format!("converge:ks_p_value[{label}]"),
        result.ks.p_value,
        0.0,
        replicates,
    ));

    let mut controls = Vec::new();
    for (c, name) in spec.negative_controls.iter().enumerate() {
        let measure = config.measure(name)?;
        let cseed = out.seed(format!("control/{name}"), base.derive(c as u64 + 2));
        let draws = target_sums(&measure, truncation, replicates, cseed).map_err(CliError::model(format!("control `{name}`")))?;
        let ks = ks_two_sample(&result.array, &draws, KS_LEVEL).map_err(CliError::model(format!("control `{name}`")))?;
        out.report.push(decided(
            format!("converge:control[{} vs {name}]", spec.model),
            ks.statistic,
            ks.statistic >= threshold,
            "negative control: distance must reach the bound",
        ));
        controls.push((name.clone(), draws));
    }

    let mut csv = String::from("replicate_id,array,target");
    for (name, _) in &controls {
        csv.push_str(&format!(",control:{name}"));
    }
    csv.push('\n');
    for r in 0..replicates {
        csv.push_str(&format!("{r},{},{}", result.array[r], result.target[r]));
        for (_, d) in &controls {
            csv.push_str(&format!(",{}", d[r]));
        }
        csv.push('\n');
    }
    out.artifact("converge_samples.csv", csv);

    let levels = if spec.quantiles.is_empty() {
        DEFAULT_QUANTILES.to_vec()
    } else {
        spec.quantiles.clone()
    };
    let mut q = String::from("level,array,target\n");
    for (level, a, t) in result.quantiles(&levels) {
        q.push_str(&format!("{level},{a},{t}\n"));
    }
    out.artifact("quantiles.csv", q);
    Ok(())
}
