//! Seeded verification suites and their reports.
//!
//! A suite is a fixed list of named example cases followed by `samples`
//! randomized cases. Each randomized case draws from its own stream
//! ([`crate::rng::sample_stream`]) so records are independent of scheduling
//! and of which other suites ran. Two runs of the same configuration produce
//! identical report bodies; only `aggregate.wall_time_seconds` differs.

mod suites;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

use suites::SUITES;

/// Bumped whenever a suite is added or its checks change.
pub const SUITE_REGISTRY_VERSION: u32 = 1;

pub fn artifact_version() -> String {
    format!("tube-core {} / suites v{}", env!("CARGO_PKG_VERSION"), SUITE_REGISTRY_VERSION)
}

pub const SEED_ENV: &str = "TUBE_SEED";
pub const MAX_N: usize = 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub suite: String,
    #[serde(default)]
    pub seed: u64,
    /// Tuple size; suites pick their own mix of sizes when absent.
    #[serde(default)]
    pub n: Option<usize>,
    /// Number of randomized cases; the suite default when absent.
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    pub output_path: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(suite: &str, seed: u64) -> Self {
        Self {
            suite: suite.to_string(),
            seed,
            n: None,
            samples: None,
            tolerances: BTreeMap::new(),
            output_path: None,
        }
    }

    pub fn with_samples(mut self, samples: usize) -> Self {
        self.samples = Some(samples);
        self
    }

    /// Reads a JSON config and applies the `TUBE_SEED` override.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| Error::Io { path: path.display().to_string(), source })?;
        let mut cfg: Self = serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.apply_env()?;
        Ok(cfg)
    }

    pub fn apply_env(&mut self) -> Result<()> {
        if let Ok(v) = std::env::var(SEED_ENV) {
            self.seed = v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{SEED_ENV} must be an unsigned integer, got `{v}`")))?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub index: usize,
    pub case: String,
    pub status: Status,
    pub data: Value,
}

/// The configuration as actually run, with defaults filled in.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub suite: String,
    pub seed: u64,
    pub n: Option<usize>,
    pub samples: usize,
    pub tolerances: BTreeMap<String, f64>,
    pub allowed_inconclusive_fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub units: usize,
    pub pass_count: usize,
    pub fail_count: usize,
    pub inconclusive_count: usize,
    pub wall_time_seconds: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub artifact_version: String,
    pub config: ResolvedConfig,
    pub records: Vec<Record>,
    pub aggregate: Aggregate,
    pub verdict: Verdict,
}

impl ExperimentReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    /// The report without its wall time, serialized; identical across reruns.
    pub fn body_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if let Some(agg) = v.get_mut("aggregate").and_then(Value::as_object_mut) {
            agg.remove("wall_time_seconds");
        }
        serde_json::to_string(&v).expect("report serializes")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Outcome of one case: its status and the quantities it measured.
pub(crate) struct Outcome {
    pub status: Status,
    pub data: Value,
}

impl Outcome {
    pub fn from_bool(ok: bool, data: Value) -> Self {
        Self { status: if ok { Status::Pass } else { Status::Fail }, data }
    }
}

/// What a suite case sees: resolved tolerances and the requested tuple size.
pub(crate) struct Ctx {
    tolerances: BTreeMap<String, f64>,
    pub n: Option<usize>,
}

impl Ctx {
    pub fn tol(&self, key: &str) -> f64 {
        self.tolerances[key]
    }

    /// The configured size, or `default_cycle[index % len]`.
    pub fn n_for(&self, index: usize, default_cycle: &[usize]) -> usize {
        self.n.unwrap_or(default_cycle[index % default_cycle.len()])
    }
}

type ExampleFn = fn(&Ctx) -> Vec<(&'static str, Result<Outcome>)>;
type SampleFn = fn(&Ctx, &mut rand_pcg::Pcg32, usize) -> Result<Outcome>;

pub(crate) struct SuiteDef {
    pub name: &'static str,
    pub description: &'static str,
    pub default_samples: usize,
    pub min_n: usize,
    pub tolerances: &'static [(&'static str, f64)],
    pub allowed_inconclusive: f64,
    pub examples: ExampleFn,
    pub sample: SampleFn,
}

pub fn suite_names() -> Vec<&'static str> {
    SUITES.iter().map(|s| s.name).collect()
}

/// `(name, description)` of every registered suite.
pub fn suite_catalog() -> Vec<(&'static str, &'static str)> {
    SUITES.iter().map(|s| (s.name, s.description)).collect()
}

fn find_suite(name: &str) -> Result<&'static SuiteDef> {
    SUITES.iter().find(|s| s.name == name).ok_or_else(|| Error::UnknownSuite(name.to_string()))
}

fn resolve(cfg: &ExperimentConfig, def: &SuiteDef) -> Result<ResolvedConfig> {
    let samples = cfg.samples.unwrap_or(def.default_samples);
    if samples == 0 {
        return Err(Error::Config("samples must be at least 1".into()));
    }
    if let Some(n) = cfg.n {
        if n < def.min_n.max(1) || n > MAX_N {
            return Err(Error::Config(format!(
                "suite {} needs n in {}..={MAX_N}, got {n}",
                def.name,
                def.min_n.max(1)
            )));
        }
    }
    let mut tolerances: BTreeMap<String, f64> =
        def.tolerances.iter().map(|&(k, v)| (k.to_string(), v)).collect();
    for (k, &v) in &cfg.tolerances {
        let Some(slot) = tolerances.get_mut(k) else {
            return Err(Error::Config(format!("suite {} has no tolerance `{k}`", def.name)));
        };
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::Config(format!("tolerance `{k}` must be positive and finite, got {v}")));
        }
        *slot = v;
    }
    Ok(ResolvedConfig {
        suite: def.name.to_string(),
        seed: cfg.seed,
        n: cfg.n,
        samples,
        tolerances,
        allowed_inconclusive_fraction: def.allowed_inconclusive,
    })
}

fn to_record(index: usize, case: String, r: Result<Outcome>) -> Record {
    match r {
        Ok(o) => Record { index, case, status: o.status, data: o.data },
        Err(e) => Record { index, case, status: Status::Fail, data: serde_json::json!({ "error": e.to_string() }) },
    }
}

/// Runs a suite and writes the report when `output_path` is set.
pub fn run_suite(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let def = find_suite(&cfg.suite)?;
    let resolved = resolve(cfg, def)?;
    let ctx = Ctx { tolerances: resolved.tolerances.clone(), n: resolved.n };
    let started = Instant::now();

    let mut records: Vec<Record> = (def.examples)(&ctx)
        .into_iter()
        .enumerate()
        .map(|(i, (name, r))| to_record(i, format!("example:{name}"), r))
        .collect();
    let sampled: Vec<Record> = (0..resolved.samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = crate::rng::sample_stream(resolved.seed, def.name, i as u64);
            to_record(i, "sample".to_string(), (def.sample)(&ctx, &mut rng, i))
        })
        .collect();
    records.extend(sampled);

    let count = |s: Status| records.iter().filter(|r| r.status == s).count();
    let (pass_count, fail_count, inconclusive_count) =
        (count(Status::Pass), count(Status::Fail), count(Status::Inconclusive));
    let units = records.len();
    let ok = fail_count == 0 && inconclusive_count as f64 <= def.allowed_inconclusive * units as f64;
    let report = ExperimentReport {
        artifact_version: artifact_version(),
        config: resolved,
        aggregate: Aggregate {
            units,
            pass_count,
            fail_count,
            inconclusive_count,
            wall_time_seconds: started.elapsed().as_secs_f64(),
        },
        records,
        verdict: if ok { Verdict::Pass } else { Verdict::Fail },
    };
    if let Some(path) = &cfg.output_path {
        write_report(&report, path)?;
    }
    Ok(report)
}

pub fn write_report(report: &ExperimentReport, path: &Path) -> Result<()> {
    std::fs::write(path, report.to_json_pretty())
        .map_err(|source| Error::Io { path: path.display().to_string(), source })
}

/// Relative difference with the mixed denominator `max(|a|, |b|, 1)`.
pub(crate) fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}
