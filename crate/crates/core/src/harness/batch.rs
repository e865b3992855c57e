//! Input batches for proxy scoring: seeded synthetic images or CIFAR-10
//! binary records.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Stream;
use crate::tensornet::Tensor;

pub const RAW_SIDE: usize = 32;
pub const RAW_CHANNELS: usize = 3;
pub const RAW_RECORD_LEN: usize = 1 + RAW_CHANNELS * RAW_SIDE * RAW_SIDE;

const L_TEMPLATE: u64 = 1;
const L_SAMPLE: u64 = 2;

/// Images plus class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub images: Tensor,
    pub labels: Vec<usize>,
    /// Classes dropped because they had a single sample.
    pub dropped_classes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticBatchSpec {
    pub num_classes: usize,
    /// Samples are assigned to classes round-robin.
    pub batch_size: usize,
    pub channels: usize,
    pub hw: usize,
    /// Per-sample noise relative to the unit-variance class template.
    pub noise_scale: f64,
    pub seed: u64,
}

impl Default for SyntheticBatchSpec {
    fn default() -> Self {
        Self {
            num_classes: 10,
            batch_size: 32,
            channels: 3,
            hw: 16,
            noise_scale: 0.5,
            seed: 0,
        }
    }
}

impl SyntheticBatchSpec {
    pub fn validate(&self) -> Result<()> {
        if self.num_classes < 1 || self.channels < 1 || self.hw < 1 {
            return Err(Error::Config("batch dimensions must be >= 1".into()));
        }
        if self.batch_size < 2 * self.num_classes {
            return Err(Error::Config(format!(
                "batch_size {} gives some of the {} classes fewer than 2 samples",
                self.batch_size, self.num_classes
            )));
        }
        if !(self.noise_scale >= 0.0) {
            return Err(Error::Config("noise_scale must be >= 0".into()));
        }
        Ok(())
    }
}

/// Per-class template image plus independent per-sample noise.
pub fn make_batch(spec: &SyntheticBatchSpec) -> Result<Batch> {
    spec.validate()?;
    let root = Stream::new(spec.seed);
    let d = spec.channels * spec.hw * spec.hw;
    let templates: Vec<Vec<f64>> = (0..spec.num_classes)
        .map(|k| {
            let mut s = root.split(L_TEMPLATE).split(k as u64);
            (0..d).map(|_| s.normal()).collect()
        })
        .collect();
    let mut data = Vec::with_capacity(spec.batch_size * d);
    let mut labels = Vec::with_capacity(spec.batch_size);
    for i in 0..spec.batch_size {
        let k = i % spec.num_classes;
        let mut s = root.split(L_SAMPLE).split(i as u64);
        data.extend(templates[k].iter().map(|t| t + spec.noise_scale * s.normal()));
        labels.push(k);
    }
    Ok(Batch {
        images: Tensor::new(vec![spec.batch_size, spec.channels, spec.hw, spec.hw], data)?,
        labels,
        dropped_classes: Vec::new(),
    })
}

/// Parse the first `count` records of CIFAR-10 binary data.
pub fn parse_raw_batch(bytes: &[u8], count: usize) -> Result<Batch> {
    let d = RAW_RECORD_LEN - 1;
    let mut images = Vec::with_capacity(count);
    let mut labels = Vec::with_capacity(count);
    for r in 0..count {
        let offset = r * RAW_RECORD_LEN;
        let Some(rec) = bytes.get(offset..offset + RAW_RECORD_LEN) else {
            let message = if offset >= bytes.len() {
                format!("expected record {r} of {count}, found end of data")
            } else {
                format!("record {r} truncated to {} of {RAW_RECORD_LEN} bytes", bytes.len() - offset)
            };
            return Err(Error::Format { offset, message });
        };
        labels.push(rec[0] as usize);
        images.push(rec[1..].iter().map(|&b| f64::from(b) / 255.0).collect::<Vec<f64>>());
    }

    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for &l in &labels {
        *counts.entry(l).or_default() += 1;
    }
    let dropped_classes: Vec<usize> = counts.iter().filter(|(_, &n)| n < 2).map(|(&k, _)| k).collect();
    let mut data = Vec::with_capacity(count * d);
    let mut kept = Vec::with_capacity(count);
    for (img, l) in images.into_iter().zip(labels) {
        if !dropped_classes.contains(&l) {
            data.extend(img);
            kept.push(l);
        }
    }
    Ok(Batch {
        images: Tensor::new(vec![kept.len(), RAW_CHANNELS, RAW_SIDE, RAW_SIDE], data)?,
        labels: kept,
        dropped_classes,
    })
}

pub fn load_raw_batch(path: impl AsRef<Path>, count: usize) -> Result<Batch> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_raw_batch(&bytes, count)
}
