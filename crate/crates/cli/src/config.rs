//! Experiment configuration read from TOML.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use idpoint::diagnostics::Pairing;
use idpoint::levy::{Extrapolation, TabulatedTail};
use idpoint::testfn::standard_bank;
use idpoint::{ArrayModel, LevyMeasure, ProcessModel, TestFunction, Truncation};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Replicate budget when neither the section nor the file sets one.
pub const DEFAULT_REPLICATES: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Sample,
    Cluster,
    Diagnose,
    Blocks,
    Converge,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::Sample => "sample",
            ExperimentKind::Cluster => "cluster",
            ExperimentKind::Diagnose => "diagnose",
            ExperimentKind::Blocks => "blocks",
            ExperimentKind::Converge => "converge",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Option<ExperimentKind>,
    pub name: Option<String>,
    pub seed: Option<u64>,
    pub replicates: Option<usize>,
    pub threads: Option<usize>,
    pub output: Option<PathBuf>,
    /// Lévy measures by name; `kind = "tabulated_file"` loads a CSV table.
    #[serde(default)]
    pub measures: BTreeMap<String, toml::Value>,
    #[serde(default)]
    pub models: BTreeMap<String, ArrayModel>,
    #[serde(default)]
    pub processes: BTreeMap<String, ProcessModel>,
    /// Test functions added to the standard bank.
    #[serde(default)]
    pub functions: BTreeMap<String, TestFunction>,
    pub sample: Option<SampleSpec>,
    pub cluster: Option<ClusterSpec>,
    pub diagnose: Option<DiagnoseSpec>,
    pub blocks: Option<BlocksSpec>,
    pub converge: Option<ConvergeSpec>,
    /// Directory that relative table paths are resolved against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationSpec {
    pub max_terms: Option<usize>,
    pub point_floor: Option<f64>,
    pub compensate: Option<bool>,
}

impl TruncationSpec {
    pub fn build(&self) -> Truncation {
        let d = Truncation::default();
        Truncation {
            max_terms: self.max_terms.unwrap_or(d.max_terms),
            point_floor: self.point_floor.unwrap_or(d.point_floor),
            compensate: self.compensate.unwrap_or(d.compensate),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reference {
    /// The Gamma(α) law of a `gamma_levy` measure.
    Gamma,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleSpec {
    pub measure: String,
    #[serde(default)]
    pub truncation: TruncationSpec,
    #[serde(default)]
    pub centered: bool,
    pub replicates: Option<usize>,
    pub reference: Option<Reference>,
    /// Largest KS distance accepted against the reference.
    pub ks_threshold: Option<f64>,
    /// Frequencies at which the empirical characteristic function is checked.
    #[serde(default)]
    pub char_function: Vec<f64>,
    /// Export the path of replicate 0 on this many steps.
    pub path_resolution: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterSpec {
    pub processes: Vec<String>,
    pub replicates: Option<usize>,
    /// Compare Monte Carlo and analytic Laplace functionals.
    #[serde(default)]
    pub laplace: bool,
    /// Function names; empty means the standard bank.
    #[serde(default)]
    pub functions: Vec<String>,
    /// Largest accepted relative Laplace difference.
    pub laplace_rel_tol: Option<f64>,
    /// Count points in `(lo, hi)`.
    pub count_window: Option<[f64; 2]>,
    /// Measure whose series sum is compared with the summed points.
    pub compare_sum: Option<String>,
    #[serde(default)]
    pub sum_truncation: TruncationSpec,
    pub ks_level: Option<f64>,
    pub export_replicates: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    An,
    AnPrime,
    Ad2,
    Kallenberg,
    IncrementalGap,
    Ad1Gap,
    Ad3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TargetSpec {
    Value(f64),
    /// `"iid"`: exact value for i.i.d. Pareto rows.
    Oracle(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Decreasing,
    Increasing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnoseTask {
    pub name: Option<String>,
    pub estimator: Estimator,
    pub model: String,
    /// Row lengths.
    pub n: Vec<usize>,
    /// Block lengths: one per `n`, or a single value for all.
    #[serde(default)]
    pub r: Vec<usize>,
    #[serde(default)]
    pub m: Vec<usize>,
    /// Function name, or `"bank"` for every function with a worst case.
    pub function: Option<String>,
    pub scale: Option<f64>,
    pub window: Option<[f64; 2]>,
    pub epsilon: Option<f64>,
    pub clamp: Option<[f64; 2]>,
    pub pairing: Option<Pairing>,
    pub replicates: Option<usize>,
    /// Total entries drawn per grid point; sets `replicates = draws / n`.
    pub draws: Option<u64>,
    pub target: Option<TargetSpec>,
    #[serde(default)]
    pub tolerance: f64,
    pub trend: Option<Trend>,
    /// Target for the largest `n`.
    pub final_target: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnoseSpec {
    pub tasks: Vec<DiagnoseTask>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MixingProfile {
    /// `α(m) = min(1, m^{-exponent})`.
    Power { exponent: f64 },
    /// `α(m) = rate^m`.
    Geometric { rate: f64 },
    Zero,
}

impl MixingProfile {
    pub fn eval(&self, m: u64) -> f64 {
        match self {
            MixingProfile::Power { exponent } => (m as f64).powf(-exponent).min(1.0),
            MixingProfile::Geometric { rate } => rate.powf(m as f64),
            MixingProfile::Zero => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkedRow {
    pub n: u64,
    pub r: u64,
    pub k: u64,
    pub m: u64,
    pub k_alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlocksSpec {
    pub n: Vec<u64>,
    pub mixing: MixingProfile,
    pub expect: Option<WorkedRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeSpec {
    pub model: String,
    pub target: String,
    pub n: usize,
    pub replicates: Option<usize>,
    pub threshold: Option<f64>,
    #[serde(default)]
    pub truncation: TruncationSpec,
    /// Mismatched targets that must be rejected.
    #[serde(default)]
    pub negative_controls: Vec<String>,
    #[serde(default)]
    pub quantiles: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableFile {
    #[allow(dead_code)]
    kind: String,
    path: PathBuf,
    #[serde(default)]
    left: Extrapolation,
    #[serde(default)]
    right: Extrapolation,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.message().to_string()))
    }

    pub fn from_path(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        let mut config = Self::from_toml_str(&text)?;
        config.base_dir = path.parent().map(Path::to_path_buf);
        Ok(config)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn require_seed(&self) -> CliResult<u64> {
        self.seed.ok_or_else(|| CliError::MissingField("seed".into()))
    }

    pub fn require_kind(&self) -> CliResult<ExperimentKind> {
        self.kind.ok_or_else(|| CliError::MissingField("kind".into()))
    }

    pub fn default_replicates(&self) -> usize {
        self.replicates.unwrap_or(DEFAULT_REPLICATES)
    }

    pub fn measure(&self, name: &str) -> CliResult<LevyMeasure> {
        let value = self.measures.get(name).ok_or_else(|| CliError::Unresolved {
            kind: "measure",
            name: name.into(),
        })?;
        let context = format!("measure `{name}`");
        if value.get("kind").and_then(|k| k.as_str()) == Some("tabulated_file") {
            let spec: TableFile = value
                .clone()
                .try_into()
                .map_err(|e: toml::de::Error| CliError::Config(format!("{context}: {}", e.message())))?;
            let path = match &self.base_dir {
                Some(dir) if spec.path.is_relative() => dir.join(&spec.path),
                _ => spec.path.clone(),
            };
            let table = TabulatedTail::from_csv_path(&path)
                .and_then(|t| t.with_extrapolation(spec.left, spec.right))
                .map_err(CliError::model(context))?;
            return LevyMeasure::tabulated(table).map_err(CliError::model(format!("measure `{name}`")));
        }
        value
            .clone()
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(format!("{context}: {}", e.message())))
    }

    pub fn model(&self, name: &str) -> CliResult<ArrayModel> {
        let model = self.models.get(name).ok_or_else(|| CliError::Unresolved {
            kind: "model",
            name: name.into(),
        })?;
        model.validate().map_err(CliError::model(format!("model `{name}`")))?;
        Ok(model.clone())
    }

    pub fn process(&self, name: &str) -> CliResult<ProcessModel> {
        let process = self.processes.get(name).ok_or_else(|| CliError::Unresolved {
            kind: "process",
            name: name.into(),
        })?;
        process.validate().map_err(CliError::model(format!("process `{name}`")))?;
        Ok(process.clone())
    }

    /// Declared functions shadow bank entries of the same name.
    pub fn function(&self, name: &str) -> CliResult<TestFunction> {
        if let Some(f) = self.functions.get(name) {
            let mut f = f.clone();
            f.name = name.to_string();
            f.validate().map_err(CliError::model(format!("function `{name}`")))?;
            return Ok(f);
        }
        standard_bank::<f64>()
            .into_iter()
            .find(|f| f.name == name)
            .ok_or_else(|| CliError::Unresolved {
                kind: "function",
                name: name.into(),
            })
    }

    pub fn bank(&self) -> Vec<TestFunction> {
        standard_bank::<f64>()
    }

    /// Checks that the section for the kind exists and that every name it
    /// references resolves.
    pub fn validate(&self) -> CliResult<()> {
        self.require_seed()?;
        let kind = self.require_kind()?;
        let missing = || CliError::MissingField(kind.as_str().to_string());
        let nonempty = |what: &str, len: usize| {
            if len == 0 {
                Err(CliError::Config(format!("`{what}` must not be empty")))
            } else {
                Ok(())
            }
        };
        match kind {
            ExperimentKind::Sample => {
                let s = self.sample.as_ref().ok_or_else(missing)?;
                self.measure(&s.measure)?;
            }
            ExperimentKind::Cluster => {
                let c = self.cluster.as_ref().ok_or_else(missing)?;
                nonempty("cluster.processes", c.processes.len())?;
                for p in &c.processes {
                    self.process(p)?;
                }
                for f in &c.functions {
                    self.function(f)?;
                }
                if let Some(m) = &c.compare_sum {
                    self.measure(m)?;
                }
            }
            ExperimentKind::Diagnose => {
                let d = self.diagnose.as_ref().ok_or_else(missing)?;
                nonempty("diagnose.tasks", d.tasks.len())?;
                for t in &d.tasks {
                    self.model(&t.model)?;
                    nonempty("n", t.n.len())?;
                    if !(t.r.len() <= 1 || t.r.len() == t.n.len()) {
                        return Err(CliError::Config("`r` needs one value or one per `n`".into()));
                    }
                    if let Some(f) = &t.function {
                        if f != "bank" {
                            self.function(f)?;
                        }
                    }
                }
            }
            ExperimentKind::Blocks => {
                let b = self.blocks.as_ref().ok_or_else(missing)?;
                nonempty("blocks.n", b.n.len())?;
            }
            ExperimentKind::Converge => {
                let c = self.converge.as_ref().ok_or_else(missing)?;
                self.model(&c.model)?;
                self.measure(&c.target)?;
                for m in &c.negative_controls {
                    self.measure(m)?;
                }
            }
        }
        Ok(())
    }

    /// Caps every replicate budget, e.g. for quick determinism checks.
    pub fn with_budget_cap(mut self, cap: usize) -> Self {
        let clamp = |r: &mut Option<usize>| *r = Some(r.unwrap_or(DEFAULT_REPLICATES).min(cap));
        clamp(&mut self.replicates);
        if let Some(s) = &mut self.sample {
            clamp(&mut s.replicates);
        }
        if let Some(c) = &mut self.cluster {
            clamp(&mut c.replicates);
        }
        if let Some(c) = &mut self.converge {
            clamp(&mut c.replicates);
        }
        if let Some(d) = &mut self.diagnose {
            for t in &mut d.tasks {
                match t.draws {
                    Some(draws) => t.draws = Some(draws.min(cap as u64 * 1000)),
                    None => clamp(&mut t.replicates),
                }
            }
        }
        self
    }
}
