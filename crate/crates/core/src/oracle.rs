//! Fitness oracles: file-backed tabular benchmarks and seeded synthetic
//! landscapes with a calibrated proxy.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cellspace::{enumerate_all, ArchEncoding, SpaceDescriptor, OpKind, NUM_EDGES, NUM_OPS, SPACE_SIZE};
use crate::error::{Error, Result};
use crate::harness::stats::kendall_tau;
use crate::par::{self, Execution};
use crate::rng::Stream;
use crate::zeroproxy::{ProxyScore, ProxyScorer};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitnessRecord {
    pub val_acc: f64,
    pub test_acc: f64,
    pub train_time_s: f64,
}

impl FitnessRecord {
    pub fn validate(&self) -> std::result::Result<(), String> {
        let acc_ok = |v: f64| v.is_finite() && (0.0..=100.0).contains(&v);
        if !acc_ok(self.val_acc) {
            return Err(format!("val_acc {} outside [0, 100]", self.val_acc));
        }
        if !acc_ok(self.test_acc) {
            return Err(format!("test_acc {} outside [0, 100]", self.test_acc));
        }
        if !(self.train_time_s.is_finite() && self.train_time_s >= 0.0) {
            return Err(format!("train_time_s {} must be finite and >= 0", self.train_time_s));
        }
        Ok(())
    }
}

/// Source of architecture fitness; replaces training.
pub trait FitnessOracle: Sync {
    fn query(&self, arch: &ArchEncoding) -> FitnessRecord;
}

/// Total map from every architecture in the space to its record.
#[derive(Debug, Clone, PartialEq)]
pub struct Benchmark {
    pub space: SpaceDescriptor,
    pub dataset_name: String,
    /// Indexed by [`ArchEncoding::ordinal`].
    records: Vec<FitnessRecord>,
    synthetic_proxy: Option<Vec<f64>>,
}

impl FitnessOracle for Benchmark {
    fn query(&self, arch: &ArchEncoding) -> FitnessRecord {
        self.records[arch.ordinal()]
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileRecord {
    arch: String,
    val_acc: f64,
    test_acc: f64,
    train_time_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    proxy: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BenchmarkFile {
    space: SpaceDescriptor,
    dataset: String,
    records: Vec<FileRecord>,
}

impl Benchmark {
    /// Build from records in ordinal order.
    pub fn from_records(
        dataset_name: impl Into<String>,
        records: Vec<FitnessRecord>,
        synthetic_proxy: Option<Vec<f64>>,
    ) -> Result<Self> {
        if records.len() != SPACE_SIZE {
            return Err(Error::IncompleteBenchmark {
                count: SPACE_SIZE.saturating_sub(records.len()),
                sample: Vec::new(),
            });
        }
        if let Some((i, msg)) = records
            .iter()
            .enumerate()
            .find_map(|(i, r)| r.validate().err().map(|m| (i, m)))
        {
            return Err(Error::Benchmark(format!("record {i}: {msg}")));
        }
        if let Some(p) = &synthetic_proxy {
            if p.len() != SPACE_SIZE {
                return Err(Error::Benchmark("proxy map is not total".into()));
            }
        }
        Ok(Self {
            space: SpaceDescriptor::default(),
            dataset_name: dataset_name.into(),
            records,
            synthetic_proxy,
        })
    }

    pub fn records(&self) -> &[FitnessRecord] {
        &self.records
    }

    pub fn synthetic_proxy(&self) -> Option<&[f64]> {
        self.synthetic_proxy.as_deref()
    }

    /// Scorer that reads the stored proxy map instead of evaluating a network.
    pub fn proxy_scorer(&self) -> Option<TableProxy<'_>> {
        self.synthetic_proxy.as_deref().map(|values| TableProxy { values })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        load_tabular(path)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        save_tabular(self, path)
    }

    pub fn to_json(&self) -> Result<String> {
        let records = enumerate_all()
            .into_iter()
            .map(|a| {
                let r = self.records[a.ordinal()];
                FileRecord {
                    arch: a.encode_str(),
                    val_acc: r.val_acc,
                    test_acc: r.test_acc,
                    train_time_s: r.train_time_s,
                    proxy: self.synthetic_proxy.as_ref().map(|p| p[a.ordinal()]),
                }
            })
            .collect();
        let file = BenchmarkFile {
            space: self.space.clone(),
            dataset: self.dataset_name.clone(),
            records,
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: BenchmarkFile = serde_json::from_str(text)?;
        if file.space != SpaceDescriptor::default() {
            return Err(Error::SpaceMismatch(format!(
                "benchmark space {:?} differs from {:?}",
                file.space,
                SpaceDescriptor::default()
            )));
        }
        let mut slots: Vec<Option<FitnessRecord>> = vec![None; SPACE_SIZE];
        let mut proxy: Vec<Option<f64>> = vec![None; SPACE_SIZE];
        for (i, rec) in file.records.iter().enumerate() {
            let arch = ArchEncoding::decode_str(&rec.arch)
                .map_err(|e| Error::Benchmark(format!("record {i}: {e}")))?;
            let fr = FitnessRecord {
                val_acc: rec.val_acc,
                test_acc: rec.test_acc,
                train_time_s: rec.train_time_s,
            };
            fr.validate()
                .map_err(|m| Error::Benchmark(format!("record {i} ({}): {m}", rec.arch)))?;
            let slot = &mut slots[arch.ordinal()];
            if slot.is_some() {
                return Err(Error::Benchmark(format!("record {i}: duplicate arch {}", rec.arch)));
            }
            *slot = Some(fr);
            proxy[arch.ordinal()] = rec.proxy;
        }
        let missing: Vec<usize> = (0..SPACE_SIZE).filter(|&i| slots[i].is_none()).collect();
        if !missing.is_empty() {
            return Err(Error::IncompleteBenchmark {
                count: missing.len(),
                sample: missing
                    .iter()
                    .take(5)
                    .map(|&i| ArchEncoding::from_ordinal(i).expect("in range").encode_str())
                    .collect(),
            });
        }
        let records = slots.into_iter().map(|r| r.expect("checked total")).collect();
        let proxy_count = proxy.iter().filter(|p| p.is_some()).count();
        let synthetic_proxy = match proxy_count {
            0 => None,
            SPACE_SIZE => Some(proxy.into_iter().map(|p| p.expect("checked total")).collect()),
            _ => return Err(Error::Benchmark("proxy values present for only some records".into())),
        };
        Self::from_records(file.dataset, records, synthetic_proxy)
    }
}

pub fn load_tabular(path: impl AsRef<Path>) -> Result<Benchmark> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Benchmark::from_json(&text)
}

pub fn save_tabular(bench: &Benchmark, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, bench.to_json()?).map_err(|e| Error::io(path, e))
}

pub fn query(bench: &Benchmark, arch: &ArchEncoding) -> FitnessRecord {
    bench.query(arch)
}

/// Exhaustive argmax of `val_acc`; ties go to the lexicographically first architecture.
pub fn best_of(bench: &Benchmark) -> (ArchEncoding, FitnessRecord) {
    let mut best = 0;
    for (i, r) in bench.records.iter().enumerate() {
        if r.val_acc > bench.records[best].val_acc {
            best = i;
        }
    }
    (ArchEncoding::from_ordinal(best).expect("in range"), bench.records[best])
}

/// Proxy lookups from a stored table.
#[derive(Debug, Clone, Copy)]
pub struct TableProxy<'a> {
    values: &'a [f64],
}

impl ProxyScorer for TableProxy<'_> {
    fn score(&self, arch: &ArchEncoding, _rng: &mut Stream) -> Result<ProxyScore> {
        Ok(ProxyScore::finite(self.values[arch.ordinal()]))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub seed: u64,
    /// Per-architecture Gaussian noise added to the raw landscape.
    pub noise_std: f64,
    /// Scale of the pairwise terms between consecutive edges.
    pub interaction_std: f64,
    pub target_proxy_tau: f64,
    pub dataset: String,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            noise_std: 0.5,
            interaction_std: 0.5,
            target_proxy_tau: 0.6,
            dataset: "synthetic".into(),
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.noise_std >= 0.0) || !(self.interaction_std >= 0.0) {
            return Err(Error::Config("noise_std and interaction_std must be >= 0".into()));
        }
        if !self.target_proxy_tau.is_finite() {
            return Err(Error::Config("target_proxy_tau must be finite".into()));
        }
        Ok(())
    }
}

pub const VAL_RANGE: (f64, f64) = (5.0, 95.0);
pub const TAU_TOLERANCE: f64 = 0.05;
const TEST_NOISE_STD: f64 = 0.25;

const LABEL_UTILITY: u64 = 1;
const LABEL_INTERACTION: u64 = 2;
const LABEL_NOISE: u64 = 3;
const LABEL_TEST: u64 = 4;
const LABEL_TIME: u64 = 5;
const LABEL_PROXY: u64 = 6;

/// Seeded additive landscape: per-(edge, op) utilities plus pairwise terms for
/// consecutive edges.
#[derive(Debug, Clone, PartialEq)]
pub struct Landscape {
    pub utilities: [[f64; NUM_OPS]; NUM_EDGES],
    pub interactions: Vec<[[f64; NUM_OPS]; NUM_OPS]>,
}

impl Landscape {
    pub fn new(spec: &SyntheticSpec) -> Self {
        let root = Stream::new(spec.seed);
        let mut u = root.split(LABEL_UTILITY);
        let mut utilities = [[0.0; NUM_OPS]; NUM_EDGES];
        for row in utilities.iter_mut() {
            for v in row.iter_mut() {
                *v = u.normal();
            }
        }
        let mut v = root.split(LABEL_INTERACTION);
        let interactions = (0..NUM_EDGES - 1)
            .map(|_| {
                let mut t = [[0.0; NUM_OPS]; NUM_OPS];
                for row in t.iter_mut() {
                    for x in row.iter_mut() {
                        *x = spec.interaction_std * v.normal();
                    }
                }
                t
            })
            .collect();
        Self {
            utilities,
            interactions,
        }
    }

    pub fn raw(&self, arch: &ArchEncoding) -> f64 {
        let ops = &arch.edge_ops;
        let unary: f64 = (0..NUM_EDGES).map(|e| self.utilities[e][ops[e].index()]).sum();
        let pairwise: f64 = self
            .interactions
            .iter()
            .enumerate()
            .map(|(e, t)| t[ops[e].index()][ops[e + 1].index()])
            .sum();
        unary + pairwise
    }
}

/// Noisy monotone proxy of `val` with Kendall tau close to `target`.
fn calibrate_proxy(val: &[f64], noise: &[f64], target: f64) -> Result<Vec<f64>> {
    if !(-1.0..=1.0).contains(&target) {
        return Err(Error::Calibration(format!("target tau {target} outside [-1, 1]")));
    }
    let m = val.iter().sum::<f64>() / val.len() as f64;
    let sd = (val.iter().map(|v| (v - m).powi(2)).sum::<f64>() / val.len() as f64).sqrt();
    let sign = if target < 0.0 { -1.0 } else { 1.0 };
    let base: Vec<f64> = val
        .iter()
        .map(|v| sign * if sd > 0.0 { (v - m) / sd } else { 0.0 })
        .collect();
    let make = |amp: f64| -> Vec<f64> { base.iter().zip(noise).map(|(b, e)| b + amp * e).collect() };
    let measure = |p: &[f64]| kendall_tau(p, val);

    let exact = make(0.0);
    let tau0 = measure(&exact)?;
    if (tau0 - target).abs() <= 1e-12 || target.abs() >= tau0.abs() {
        return if (tau0 - target).abs() <= TAU_TOLERANCE {
            Ok(exact)
        } else {
            Err(Error::Calibration(format!(
                "target tau {target} unreachable; noiseless proxy gives {tau0}"
            )))
        };
    }
    // sign * tau shrinks toward zero as the noise amplitude grows.
    let goal = target.abs();
    let mut hi = 1.0;
    while sign * measure(&make(hi))? > goal + 0.5 * TAU_TOLERANCE {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::Calibration(format!("cannot push tau below {goal}")));
        }
    }
    let mut lo = 0.0;
    let mut best = (f64::INFINITY, 0.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let tau = measure(&make(mid))?;
        let err = (tau - target).abs();
        if err < best.0 {
            best = (err, mid);
        }
        if err <= 1e-3 {
            break;
        }
        if sign * tau > goal {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if best.0 > TAU_TOLERANCE {
        return Err(Error::Calibration(format!(
            "best calibrated tau misses target {target} by {}",
            best.0
        )));
    }
    Ok(make(best.1))
}

pub fn gen_synthetic(spec: &SyntheticSpec) -> Result<Benchmark> {
    gen_synthetic_with(spec, Execution::default())
}

pub fn gen_synthetic_with(spec: &SyntheticSpec, mode: Execution) -> Result<Benchmark> {
    spec.validate()?;
    let landscape = Landscape::new(spec);
    let root = Stream::new(spec.seed);
    let (noise_s, test_s, time_s, proxy_s) = (
        root.split(LABEL_NOISE),
        root.split(LABEL_TEST),
        root.split(LABEL_TIME),
        root.split(LABEL_PROXY),
    );
    let archs = enumerate_all();
    let raw = par::map_indexed(SPACE_SIZE, mode, |i| {
        landscape.raw(&archs[i]) + spec.noise_std * noise_s.split(i as u64).normal()
    });
    let (lo, hi) = raw
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let span = hi - lo;
    let records: Vec<FitnessRecord> = par::map_indexed(SPACE_SIZE, mode, |i| {
        let val = if span > 0.0 {
            VAL_RANGE.0 + (VAL_RANGE.1 - VAL_RANGE.0) * (raw[i] - lo) / span
        } else {
            0.5 * (VAL_RANGE.0 + VAL_RANGE.1)
        };
        let test = (val + TEST_NOISE_STD * test_s.split(i as u64).normal()).clamp(0.0, 100.0);
        FitnessRecord {
            val_acc: val,
            test_acc: test,
            train_time_s: time_s.split(i as u64).uniform_range(5.0, 15.0),
        }
    });
    let noise: Vec<f64> = par::map_indexed(SPACE_SIZE, mode, |i| proxy_s.split(i as u64).normal());
    let val: Vec<f64> = records.iter().map(|r| r.val_acc).collect();
    let proxy = calibrate_proxy(&val, &noise, spec.target_proxy_tau)?;
    Benchmark::from_records(spec.dataset.clone(), records, Some(proxy))
}

/// Per-edge argmax of the unary utilities.
pub fn separable_optimum(landscape: &Landscape) -> ArchEncoding {
    let mut ops = [OpKind::Zeroize; NUM_EDGES];
    for (e, row) in landscape.utilities.iter().enumerate() {
        let best = (0..NUM_OPS).fold(0, |b, o| if row[o] > row[b] { o } else { b });
        ops[e] = OpKind::ALL[best];
    }
    ArchEncoding::new(ops)
}
