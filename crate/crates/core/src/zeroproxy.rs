//! Jacobian-correlation zero-cost score.
//!
//! Rows of the input Jacobian are grouped by class, each group is turned into
//! a Pearson correlation matrix, every matrix is reduced to a scalar
//! `E_k = sum_ij ln(|sigma_ij| + t) / sqrt(n_k^2)`, and the scalars are folded
//! into the architecture score `z`: `sum_k |E_k|` when the batch has at most
//! `tau` classes, otherwise the mean pairwise spread `sum_{i<j} |E_i - E_j| / #E`.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cellspace::ArchEncoding;
use crate::error::{Error, Result};
use crate::rng::Stream;
use crate::tensornet::{build_network, input_jacobian, JacobianBatch, SkeletonConfig, Tensor};

/// Rows whose standard deviation across the input dimension falls below this
/// are treated as degenerate.
pub const MIN_ROW_STD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProxyParams {
    pub t: f64,
    pub tau: usize,
}

impl Default for ProxyParams {
    fn default() -> Self {
        Self { t: 1e-5, tau: 100 }
    }
}

impl ProxyParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.t > 0.0) {
            return Err(Error::Config("proxy constant t must be positive".into()));
        }
        if self.tau < 1 {
            return Err(Error::Config("proxy class threshold tau must be >= 1".into()));
        }
        Ok(())
    }
}

/// Correlation matrix of the Jacobian rows belonging to one class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassCorr {
    pub class_id: usize,
    pub n: usize,
    /// Row-major `n x n`.
    pub sigma: Vec<f64>,
}

impl ClassCorr {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.sigma[i * self.n + j]
    }

    pub fn is_finite(&self) -> bool {
        self.sigma.iter().all(|v| v.is_finite())
    }
}

/// Zero-cost score of one architecture. `value == None` is the worst
/// sentinel: it ranks below every finite score.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ProxyScore {
    pub value: Option<f64>,
    pub per_class: Vec<f64>,
}

impl ProxyScore {
    pub fn sentinel() -> Self {
        Self::default()
    }

    pub fn finite(value: f64) -> Self {
        if value.is_finite() {
            Self {
                value: Some(value),
                per_class: Vec::new(),
            }
        } else {
            Self::sentinel()
        }
    }

    pub fn is_sentinel(&self) -> bool {
        self.value.is_none()
    }

    /// Total ranking order: sentinel < any finite value, finite values by `total_cmp`.
    pub fn rank_cmp(&self, other: &ProxyScore) -> Ordering {
        match (self.value, other.value) {
            (None, None) => Ordering::Equal,
            (None, Some(_)) => Ordering::Less,
            (Some(_), None) => Ordering::Greater,
            (Some(a), Some(b)) => a.total_cmp(&b),
        }
    }
}

/// Anything that can rank untrained architectures.
pub trait ProxyScorer: Sync {
    fn score(&self, arch: &ArchEncoding, rng: &mut Stream) -> Result<ProxyScore>;
}

impl<F> ProxyScorer for F
where
    F: Fn(&ArchEncoding, &mut Stream) -> Result<ProxyScore> + Sync,
{
    fn score(&self, arch: &ArchEncoding, rng: &mut Stream) -> Result<ProxyScore> {
        self(arch, rng)
    }
}

fn pearson_matrix(rows: &[&[f64]]) -> Vec<f64> {
    let n = rows.len();
    let centered: Vec<(Vec<f64>, f64)> = rows
        .iter()
        .map(|r| {
            let d = r.len() as f64;
            let mean = r.iter().sum::<f64>() / d;
            let c: Vec<f64> = r.iter().map(|v| v - mean).collect();
            let ss = c.iter().map(|v| v * v).sum::<f64>();
            (c, ss)
        })
        .collect();
    let degenerate: Vec<bool> = centered
        .iter()
        .zip(rows)
        .map(|((_, ss), r)| !((ss / r.len() as f64).sqrt() >= MIN_ROW_STD))
        .collect();
    let mut sigma = vec![0.0; n * n];
    for i in 0..n {
        sigma[i * n + i] = 1.0;
        for j in i + 1..n {
            let v = if degenerate[i] || degenerate[j] {
                f64::NAN
            } else {
                let (a, ssa) = &centered[i];
                let (b, ssb) = &centered[j];
                let cov: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                (cov / (ssa * ssb).sqrt()).clamp(-1.0, 1.0)
            };
            sigma[i * n + j] = v;
            sigma[j * n + i] = v;
        }
    }
    sigma
}

/// One correlation matrix per class with at least two samples, in ascending class order.
pub fn per_class_correlation(jac: &JacobianBatch) -> Vec<ClassCorr> {
    let mut groups: BTreeMap<usize, Vec<&[f64]>> = BTreeMap::new();
    for (i, &label) in jac.labels.iter().enumerate() {
        groups.entry(label).or_default().push(jac.jacobian.row(i));
    }
    groups
        .into_iter()
        .filter(|(_, rows)| rows.len() >= 2)
        .map(|(class_id, rows)| ClassCorr {
            class_id,
            n: rows.len(),
            sigma: pearson_matrix(&rows),
        })
        .collect()
}

/// Per-matrix score `E_k`. Non-finite entries propagate.
pub fn eval_matrix(corr: &ClassCorr, params: &ProxyParams) -> f64 {
    let total: f64 = corr.sigma.iter().map(|s| (s.abs() + params.t).ln()).sum();
    total / (corr.sigma.len() as f64).sqrt()
}

/// Architecture score `z` from the per-class scores; `None` when there is nothing to score.
/// `num_classes` counts every class present in the batch, scored or not.
pub fn score(e_values: &[f64], num_classes: usize, params: &ProxyParams) -> Option<f64> {
    if e_values.is_empty() {
        return None;
    }
    let z = if num_classes <= params.tau {
        e_values.iter().map(|e| e.abs()).sum()
    } else {
        let mut spread = 0.0;
        for (i, a) in e_values.iter().enumerate() {
            for b in &e_values[i + 1..] {
                spread += (a - b).abs();
            }
        }
        spread / e_values.len() as f64
    };
    z.is_finite().then_some(z)
}

/// Score of an already computed Jacobian.
pub fn score_jacobian(jac: &JacobianBatch, params: &ProxyParams) -> ProxyScore {
    if !jac.jacobian.data.iter().all(|v| v.is_finite()) {
        return ProxyScore::sentinel();
    }
    let corrs = per_class_correlation(jac);
    if corrs.iter().any(|c| !c.is_finite()) {
        return ProxyScore::sentinel();
    }
    let per_class: Vec<f64> = corrs.iter().map(|c| eval_matrix(c, params)).collect();
    let present = distinct_classes(&jac.labels);
    match score(&per_class, present, params) {
        Some(value) => ProxyScore {
            value: Some(value),
            per_class,
        },
        None => ProxyScore::sentinel(),
    }
}

pub fn distinct_classes(labels: &[usize]) -> usize {
    let mut seen: Vec<usize> = labels.to_vec();
    seen.sort_unstable();
    seen.dedup();
    seen.len()
}

/// Build a network for `arch`, differentiate it on `batch` and score it.
pub fn score_arch(
    arch: &ArchEncoding,
    batch: &Tensor,
    labels: &[usize],
    cfg: &SkeletonConfig,
    params: &ProxyParams,
    rng: &mut Stream,
) -> Result<ProxyScore> {
    let net = build_network(arch, cfg, rng)?;
    let jac = input_jacobian(&net, batch, labels)?;
    Ok(score_jacobian(&jac, params))
}

/// Scores every architecture on one fixed batch.
#[derive(Debug, Clone)]
pub struct JacobianScorer {
    batch: Tensor,
    labels: Vec<usize>,
    cfg: SkeletonConfig,
    params: ProxyParams,
}

impl JacobianScorer {
    pub fn new(batch: Tensor, labels: Vec<usize>, cfg: SkeletonConfig, params: ProxyParams) -> Result<Self> {
        cfg.validate()?;
        params.validate()?;
        let expected = [cfg.input_channels, cfg.input_hw, cfg.input_hw];
        if batch.shape().len() != 4 || batch.shape()[1..] != expected || batch.batch() < 2 {
            return Err(Error::Shape(format!(
                "batch shape {:?} incompatible with skeleton input {expected:?}",
                batch.shape()
            )));
        }
        if labels.len() != batch.batch() {
            return Err(Error::Shape(format!(
                "{} labels for a batch of {}",
                labels.len(),
                batch.batch()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&l| l >= cfg.num_classes) {
            return Err(Error::Config(format!(
                "label {bad} out of range for a skeleton with {} classes",
                cfg.num_classes
            )));
        }
        Ok(Self {
            batch,
            labels,
            cfg,
            params,
        })
    }

    pub fn batch(&self) -> &Tensor {
        &self.batch
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }
}

impl ProxyScorer for JacobianScorer {
    fn score(&self, arch: &ArchEncoding, rng: &mut Stream) -> Result<ProxyScore> {
        score_arch(arch, &self.batch, &self.labels, &self.cfg, &self.params, rng)
    }
}
