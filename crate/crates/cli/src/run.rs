//! Executes a config on a sized thread pool and persists the results.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use idpoint::diagnostics::DiagnosticReport;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::experiments::execute;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const DEFAULT_OUTPUT: &str = "idpoint-out";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub name: Option<String>,
    pub kind: String,
    pub tool_version: String,
    /// SHA-256 of the effective config in canonical TOML form.
    pub config_sha256: String,
    pub seed: u64,
    pub threads: usize,
    pub wall_time_seconds: f64,
    pub all_passed: bool,
    pub task_seeds: BTreeMap<String, u64>,
    pub outputs: Vec<OutputFile>,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
}

#[derive(Debug)]
pub struct RunOutput {
    pub manifest: RunManifest,
    pub report: DiagnosticReport,
    pub out_dir: PathBuf,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn write(dir: &Path, name: &str, bytes: &[u8]) -> CliResult<OutputFile> {
    let path = dir.join(name);
    std::fs::write(&path, bytes).map_err(CliError::io(&path))?;
    Ok(OutputFile {
        path: name.to_string(),
        bytes: bytes.len() as u64,
        sha256: sha256_hex(bytes),
    })
}

/// Thread budget: explicit option, then the config, then every core.
pub fn thread_budget(config: &ExperimentConfig, requested: Option<usize>) -> usize {
    requested
        .or(config.threads)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1)
}

pub fn run(config: &ExperimentConfig, options: &RunOptions) -> CliResult<RunOutput> {
    let mut config = config.clone();
    if let Some(seed) = options.seed {
        config.seed = Some(seed);
    }
    config.validate()?;
    let threads = thread_budget(&config, options.threads);
    let out_dir = options
        .out
        .clone()
        .or_else(|| config.output.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT));

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config(format!("cannot build a pool of {threads} threads: {e}")))?;
    let started = Instant::now();
    let outcome = pool.install(|| execute(&config))?;
    let wall = started.elapsed().as_secs_f64();

    std::fs::create_dir_all(&out_dir).map_err(CliError::io(&out_dir))?;
    let mut artifacts = outcome.artifacts;
    artifacts.sort_by(|a, b| a.name.cmp(&b.name));
    let mut outputs = Vec::new();
    for a in &artifacts {
        outputs.push(write(&out_dir, &a.name, &a.contents)?);
    }
    outputs.push(write(&out_dir, "report.json", (outcome.report.to_json() + "\n").as_bytes())?);
    outputs.push(write(&out_dir, "report.csv", outcome.report.to_csv().as_bytes())?);

    let manifest = RunManifest {
        name: config.name.clone(),
        kind: config.require_kind()?.as_str().to_string(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config_sha256: sha256_hex(config.to_toml_string().as_bytes()),
        seed: config.require_seed()?,
        threads,
        wall_time_seconds: wall,
        all_passed: outcome.report.all_passed(),
        task_seeds: outcome.seeds,
        outputs,
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    write(&out_dir, MANIFEST_FILE, json.as_bytes())?;
    Ok(RunOutput {
        manifest,
        report: outcome.report,
        out_dir,
    })
}
