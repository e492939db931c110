//! One runner per experiment kind. Each fills an [`Outcome`] that the caller
//! persists.

mod blocks;
mod cluster;
mod converge;
mod diagnose;
mod oracle;
mod sample;

use std::collections::BTreeMap;

use idpoint::diagnostics::{DiagnosticEntry, DiagnosticReport, Verdict};
use idpoint::Seed;

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::CliResult;

pub use converge::{converge_experiment, ConvergeResult};
pub use oracle::{iid_laplace_mass, iid_mass};

/// A file produced by an experiment, relative to the output directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub contents: Vec<u8>,
}

#[derive(Debug, Default)]
pub struct Outcome {
    pub report: DiagnosticReport,
    pub artifacts: Vec<Artifact>,
    /// Seed of every independent task, by label.
    pub seeds: BTreeMap<String, u64>,
}

impl Outcome {
    fn seed(&mut self, label: impl Into<String>, seed: Seed) -> Seed {
        self.seeds.insert(label.into(), seed.0);
        seed
    }

    fn artifact(&mut self, name: impl Into<String>, contents: impl Into<Vec<u8>>) {
        self.artifacts.push(Artifact {
            name: name.into(),
            contents: contents.into(),
        });
    }
}

/// Runs the experiment declared by a validated config on the current rayon pool.
pub fn execute(config: &ExperimentConfig) -> CliResult<Outcome> {
    config.validate()?;
    let base = Seed(config.require_seed()?);
    let mut out = Outcome::default();
    match config.require_kind()? {
        ExperimentKind::Sample => sample::run(config, config.sample.as_ref().expect("validated"), base, &mut out)?,
        ExperimentKind::Cluster => cluster::run(config, config.cluster.as_ref().expect("validated"), base, &mut out)?,
        ExperimentKind::Diagnose => {
            diagnose::run(config, config.diagnose.as_ref().expect("validated"), base, &mut out)?
        }
        ExperimentKind::Blocks => blocks::run(config.blocks.as_ref().expect("validated"), &mut out)?,
        ExperimentKind::Converge => {
            converge::run(config, config.converge.as_ref().expect("validated"), base, &mut out)?
        }
    }
    Ok(out)
}

/// Entry whose verdict is decided by the caller rather than by a 3 SE band.
fn decided(name: impl Into<String>, value: f64, pass: bool, provenance: &str) -> DiagnosticEntry {
    let mut e = DiagnosticEntry::new(name, value, 0.0, 0);
    e.target_provenance = Some(provenance.to_string());
    e.verdict = if pass { Verdict::Pass } else { Verdict::Fail };
    e
}

/// Counts of adjacent pairs that break a monotone trend by more than 3
/// combined standard errors.
fn trend_violations(points: &[(f64, f64)], decreasing: bool) -> usize {
    points
        .windows(2)
        .filter(|w| {
            let slack = 3.0 * (w[0].1 * w[0].1 + w[1].1 * w[1].1).sqrt();
            if decreasing {
                w[1].0 > w[0].0 + slack
            } else {
                w[1].0 < w[0].0 - slack
            }
        })
        .count()
}

fn csv_column(header: &str, values: &[f64]) -> String {
    let mut s = String::with_capacity(values.len() * 20);
    s.push_str(header);
    s.push('\n');
    for v in values {
        s.push_str(&format!("{v}\n"));
    }
    s
}
