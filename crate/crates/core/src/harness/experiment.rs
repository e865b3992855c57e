//! Multi-seed experiment runner with one-at-a-time parameter sweeps.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::cellspace::ArchEncoding;
use crate::error::{Error, Result};
use crate::evolution::{random_search, run_search, SearchConfig, Trajectory};
use crate::harness::batch::{load_raw_batch, make_batch, Batch, SyntheticBatchSpec};
use crate::harness::stats::{mean, std_dev};
use crate::oracle::{best_of, gen_synthetic_with, load_tabular, Benchmark, SyntheticSpec, TableProxy};
use crate::par;
use crate::rng::Stream;
use crate::tensornet::SkeletonConfig;
use crate::zeroproxy::{JacobianScorer, ProxyParams, ProxyScore, ProxyScorer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Gea,
    Rea,
    Rs,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Gea => "gea",
            Method::Rea => "rea",
            Method::Rs => "rs",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum BenchmarkSource {
    Tabular(PathBuf),
    Synthetic(SyntheticSpec),
}

impl Default for BenchmarkSource {
    fn default() -> Self {
        BenchmarkSource::Synthetic(SyntheticSpec::default())
    }
}

fn default_raw_count() -> usize {
    32
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum BatchSource {
    Synthetic(SyntheticBatchSpec),
    Raw {
        path: PathBuf,
        #[serde(default = "default_raw_count")]
        count: usize,
    },
}

impl Default for BatchSource {
    fn default() -> Self {
        BatchSource::Synthetic(SyntheticBatchSpec::default())
    }
}

impl BatchSource {
    pub fn load(&self) -> Result<Batch> {
        match self {
            BatchSource::Synthetic(spec) => make_batch(spec),
            BatchSource::Raw { path, count } => load_raw_batch(path, *count),
        }
    }
}

/// Which proxy guides GEA.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScorerKind {
    /// The benchmark's stored proxy table when present, else the Jacobian score.
    #[default]
    Auto,
    Jacobian,
    Table,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    /// A [`SearchConfig`] field name.
    pub param: String,
    pub values: Vec<serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub method: Method,
    pub search: SearchConfig,
    pub benchmark: BenchmarkSource,
    pub batch: BatchSource,
    pub scorer: ScorerKind,
    /// Input channels and size are taken from the batch.
    pub skeleton: SkeletonConfig,
    pub proxy: ProxyParams,
    pub num_runs: usize,
    pub sweep: Vec<SweepAxis>,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            method: Method::Gea,
            search: SearchConfig::default(),
            benchmark: BenchmarkSource::default(),
            batch: BatchSource::default(),
            scorer: ScorerKind::Auto,
            skeleton: SkeletonConfig::default(),
            proxy: ProxyParams::default(),
            num_runs: 25,
            sweep: Vec::new(),
            output: None,
        }
    }
}

/// Search configuration with `param` set to `value`.
pub fn apply_param(base: &SearchConfig, param: &str, value: &serde_json::Value) -> Result<SearchConfig> {
    let mut v = serde_json::to_value(base)?;
    let obj = v.as_object_mut().expect("search config serializes to an object");
    if !obj.contains_key(param) {
        return Err(Error::Config(format!("unknown sweep parameter {param:?}")));
    }
    obj.insert(param.to_string(), value.clone());
    serde_json::from_value(v).map_err(|e| Error::Config(format!("sweep value {value} for {param}: {e}")))
}

fn value_label(v: &serde_json::Value) -> String {
    v.as_str().map_or_else(|| v.to_string(), str::to_string)
}

impl ExperimentConfig {
    /// Labeled search configurations, one per sweep point.
    pub fn points(&self) -> Result<Vec<(String, SearchConfig)>> {
        if self.sweep.is_empty() {
            return Ok(vec![(self.method.name().to_string(), self.search.clone())]);
        }
        let mut out = Vec::new();
        for axis in &self.sweep {
            if axis.values.is_empty() {
                return Err(Error::Config(format!("sweep over {} has no values", axis.param)));
            }
            for v in &axis.values {
                let cfg = apply_param(&self.search, &axis.param, v)?;
                out.push((format!("{}={}", axis.param, value_label(v)), cfg));
            }
        }
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_runs < 1 {
            return Err(Error::Config("num_runs must be >= 1".into()));
        }
        self.proxy.validate()?;
        for (label, search) in self.points()? {
            let search = effective_search(self.method, &search);
            search.validate().map_err(|e| match e {
                Error::Config(m) => Error::Config(format!("{label}: {m}")),
                other => other,
            })?;
        }
        Ok(())
    }
}

fn effective_search(method: Method, search: &SearchConfig) -> SearchConfig {
    match method {
        Method::Gea => search.clone(),
        Method::Rea | Method::Rs => SearchConfig {
            guided: false,
            ..search.clone()
        },
    }
}

/// Jacobian scorer on the configured batch; the skeleton input adopts the batch
/// image shape.
pub fn jacobian_scorer(cfg: &ExperimentConfig) -> Result<JacobianScorer> {
    let batch = cfg.batch.load()?;
    let shape = batch.images.shape();
    let skeleton = SkeletonConfig {
        input_channels: shape[1],
        input_hw: shape[2],
        ..cfg.skeleton.clone()
    };
    JacobianScorer::new(batch.images, batch.labels, skeleton, cfg.proxy)
}

enum Scorer<'a> {
    Table(TableProxy<'a>),
    Jacobian(&'a JacobianScorer),
}

impl ProxyScorer for Scorer<'_> {
    fn score(&self, arch: &ArchEncoding, rng: &mut Stream) -> Result<ProxyScore> {
        match self {
            Scorer::Table(t) => t.score(arch, rng),
            Scorer::Jacobian(j) => j.score(arch, rng),
        }
    }
}

fn unguided(_: &ArchEncoding, _: &mut Stream) -> Result<ProxyScore> {
    Ok(ProxyScore::sentinel())
}

/// A loaded benchmark plus the scoring inputs shared by every run.
pub struct Workspace {
    pub benchmark: Benchmark,
    pub best_arch: ArchEncoding,
    pub best_val: f64,
    jacobian: Option<JacobianScorer>,
    use_table: bool,
}

impl Workspace {
    /// Load everything a run needs, so load errors surface before any run.
    pub fn prepare(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let benchmark = match &cfg.benchmark {
            BenchmarkSource::Tabular(path) => load_tabular(path)?,
            BenchmarkSource::Synthetic(spec) => gen_synthetic_with(spec, cfg.search.execution)?,
        };
        let use_table = match cfg.scorer {
            ScorerKind::Auto => benchmark.synthetic_proxy().is_some(),
            ScorerKind::Table => {
                if benchmark.synthetic_proxy().is_none() {
                    return Err(Error::Config("benchmark has no proxy table".into()));
                }
                true
            }
            ScorerKind::Jacobian => false,
        };
        let jacobian = if cfg.method == Method::Gea && !use_table {
            Some(jacobian_scorer(cfg)?)
        } else {
            None
        };
        let (best_arch, best) = best_of(&benchmark);
        Ok(Self {
            benchmark,
            best_arch,
            best_val: best.val_acc,
            jacobian,
            use_table,
        })
    }

    fn scorer(&self) -> Option<Scorer<'_>> {
        if self.use_table {
            self.benchmark.proxy_scorer().map(Scorer::Table)
        } else {
            self.jacobian.as_ref().map(Scorer::Jacobian)
        }
    }

    /// One run; the stream is derived from the master seed and run id.
    pub fn run_one(&self, method: Method, search: &SearchConfig, run_id: usize) -> Result<Trajectory> {
        let search = effective_search(method, search);
        let rng = Stream::new(search.seed).split(run_id as u64);
        match method {
            Method::Rs => random_search(&search, &self.benchmark, &rng),
            Method::Rea => run_search(&search, &self.benchmark, &unguided, &rng, None),
            Method::Gea => {
                let scorer = self
                    .scorer()
                    .ok_or_else(|| Error::Config("no proxy scorer prepared".into()))?;
                run_search(&search, &self.benchmark, &scorer, &rng, None)
            }
        }
    }

    pub fn run_point(&self, method: Method, label: &str, search: &SearchConfig, num_runs: usize) -> Result<PointResult> {
        let runs: Vec<Result<RunResult>> = par::map_indexed(num_runs, search.execution, |run_id| {
            Ok(RunResult {
                run_id,
                trajectory: self.run_one(method, search, run_id)?,
            })
        });
        let runs: Vec<RunResult> = runs.into_iter().collect::<Result<_>>()?;
        let summary = SummaryRow::from_runs(label, &runs, self.best_val);
        Ok(PointResult {
            label: label.to_string(),
            search: effective_search(method, search),
            runs,
            summary,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub run_id: usize,
    pub trajectory: Trajectory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub label: String,
    pub runs: usize,
    pub mean_val_acc: f64,
    pub std_val_acc: f64,
    pub mean_test_acc: f64,
    pub std_test_acc: f64,
    pub mean_search_time_s: f64,
    pub mean_regret: f64,
}

impl SummaryRow {
    pub fn from_runs(label: &str, runs: &[RunResult], best_val: f64) -> Self {
        let val: Vec<f64> = runs.iter().map(|r| r.trajectory.final_fitness()).collect();
        let test: Vec<f64> = runs.iter().map(|r| r.trajectory.final_test_acc()).collect();
        let time: Vec<f64> = runs.iter().map(|r| r.trajectory.simulated_time_s()).collect();
        let regret: Vec<f64> = val.iter().map(|v| best_val - v).collect();
        Self {
            label: label.to_string(),
            runs: runs.len(),
            mean_val_acc: mean(&val),
            std_val_acc: std_dev(&val),
            mean_test_acc: mean(&test),
            std_test_acc: std_dev(&test),
            mean_search_time_s: mean(&time),
            mean_regret: mean(&regret),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub label: String,
    pub search: SearchConfig,
    pub runs: Vec<RunResult>,
    pub summary: SummaryRow,
}

impl PointResult {
    pub fn final_vals(&self) -> Vec<f64> {
        self.runs.iter().map(|r| r.trajectory.final_fitness()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub best_arch: ArchEncoding,
    pub best_val: f64,
    pub points: Vec<PointResult>,
}

impl ExperimentResult {
    pub fn summary_rows(&self) -> Vec<&SummaryRow> {
        self.points.iter().map(|p| &p.summary).collect()
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let ws = Workspace::prepare(cfg)?;
    run_experiment_in(&ws, cfg)
}

/// [`run_experiment`] against an already prepared workspace.
pub fn run_experiment_in(ws: &Workspace, cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let points = cfg
        .points()?
        .into_iter()
        .map(|(label, search)| ws.run_point(cfg.method, &label, &search, cfg.num_runs))
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentResult {
        config: cfg.clone(),
        best_arch: ws.best_arch,
        best_val: ws.best_val,
        points,
    })
}
