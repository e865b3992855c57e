use serde::{Deserialize, Serialize};

use super::kernels::{self, ConvGeom, Dims};
use super::tensor::{Matrix, Tensor};
use crate::cellspace::{ArchEncoding, OpKind, EDGES, NUM_NODES};
use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::rng::Stream;

/// Outer skeleton the cell is replicated into.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SkeletonConfig {
    pub input_channels: usize,
    pub input_hw: usize,
    pub stem_channels: usize,
    pub cells_per_stage: usize,
    pub num_stages: usize,
    pub num_classes: usize,
    pub bn_eps: f64,
}

impl Default for SkeletonConfig {
    fn default() -> Self {
        Self {
            input_channels: 3,
            input_hw: 16,
            stem_channels: 8,
            cells_per_stage: 1,
            num_stages: 3,
            num_classes: 10,
            bn_eps: 1e-5,
        }
    }
}

impl SkeletonConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("input_channels", self.input_channels),
            ("input_hw", self.input_hw),
            ("stem_channels", self.stem_channels),
            ("cells_per_stage", self.cells_per_stage),
            ("num_stages", self.num_stages),
            ("num_classes", self.num_classes),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("skeleton {name} must be >= 1")));
        }
        let factor = 1usize << (self.num_stages - 1);
        if self.input_hw % factor != 0 {
            return Err(Error::Config(format!(
                "input_hw {} is not divisible by 2^(num_stages-1) = {factor}",
                self.input_hw
            )));
        }
        if !(self.bn_eps > 0.0) {
            return Err(Error::Config("bn_eps must be positive".into()));
        }
        Ok(())
    }

    /// Flattened per-sample input length.
    pub fn input_len(&self) -> usize {
        self.input_channels * self.input_hw * self.input_hw
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Op {
    Input,
    /// Constant zero; has no inputs, so nothing flows back through it.
    Zero,
    Conv { geom: ConvGeom, weight: usize },
    BatchNorm,
    Relu,
    AvgPool,
    Add,
    GlobalAvgPool,
    Dense { cin: usize, cout: usize, weight: usize },
}

#[derive(Debug, Clone, PartialEq)]
struct Node {
    op: Op,
    inputs: Vec<usize>,
    /// Per-sample `(channels, height, width)`; dense outputs use `(k, 1, 1)`.
    chw: (usize, usize, usize),
}

/// Randomly initialized network; parameters are fixed at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    cfg: SkeletonConfig,
    nodes: Vec<Node>,
    weights: Vec<Vec<f64>>,
}

struct Builder {
    nodes: Vec<Node>,
    weights: Vec<Vec<f64>>,
    rng: Stream,
}

impl Builder {
    fn push(&mut self, op: Op, inputs: Vec<usize>, chw: (usize, usize, usize)) -> usize {
        self.nodes.push(Node { op, inputs, chw });
        self.nodes.len() - 1
    }

    fn is_zero(&self, id: usize) -> bool {
        self.nodes[id].op == Op::Zero
    }

    fn zero(&mut self, chw: (usize, usize, usize)) -> usize {
        self.push(Op::Zero, vec![], chw)
    }

    fn he_normal(&mut self, len: usize, fan_in: usize) -> usize {
        let mut s = self.rng.split(self.weights.len() as u64);
        let std = (2.0 / fan_in as f64).sqrt();
        self.weights.push((0..len).map(|_| std * s.normal()).collect());
        self.weights.len() - 1
    }

    // Every layer maps zero to zero, so a zero input short-circuits.

    fn conv(&mut self, x: usize, cout: usize, kernel: usize, stride: usize) -> usize {
        let (cin, h, w) = self.nodes[x].chw;
        let geom = ConvGeom { cin, cout, kernel, stride, pad: kernel / 2 };
        let chw = (cout, geom.out_size(h), geom.out_size(w));
        if self.is_zero(x) {
            return self.zero(chw);
        }
        let weight = self.he_normal(geom.weight_len(), geom.fan_in());
        self.push(Op::Conv { geom, weight }, vec![x], chw)
    }

    fn unary(&mut self, op: Op, x: usize) -> usize {
        let chw = self.nodes[x].chw;
        if self.is_zero(x) {
            return x;
        }
        self.push(op, vec![x], chw)
    }

    fn relu_conv_bn(&mut self, x: usize, cout: usize, kernel: usize, stride: usize) -> usize {
        let r = self.unary(Op::Relu, x);
        let c = self.conv(r, cout, kernel, stride);
        self.unary(Op::BatchNorm, c)
    }

    fn sum(&mut self, terms: Vec<usize>, chw: (usize, usize, usize)) -> usize {
        let terms: Vec<usize> = terms.into_iter().filter(|&t| !self.is_zero(t)).collect();
        match terms.len() {
            0 => self.zero(chw),
            1 => terms[0],
            _ => self.push(Op::Add, terms, chw),
        }
    }

    fn edge(&mut self, op: OpKind, x: usize) -> usize {
        let chw = self.nodes[x].chw;
        match op {
            OpKind::Zeroize => self.zero(chw),
            OpKind::SkipConnect => x,
            OpKind::Conv1x1 => self.relu_conv_bn(x, chw.0, 1, 1),
            OpKind::Conv3x3 => self.relu_conv_bn(x, chw.0, 3, 1),
            OpKind::AvgPool3x3 => self.unary(Op::AvgPool, x),
        }
    }

    fn cell(&mut self, arch: &ArchEncoding, input: usize) -> usize {
        let chw = self.nodes[input].chw;
        let mut state = vec![input];
        for dest in 1..NUM_NODES {
            let mut terms = Vec::with_capacity(dest);
            for (edge, &(src, d)) in EDGES.iter().enumerate() {
                if d == dest {
                    terms.push(self.edge(arch.edge_ops[edge], state[src]));
                }
            }
            let node = self.sum(terms, chw);
            state.push(node);
        }
        state[NUM_NODES - 1]
    }
}

/// Forward values plus what the backward pass needs.
struct Trace {
    values: Vec<Vec<f64>>,
    bn_inv_std: Vec<Vec<f64>>,
    min_relu_margin: f64,
    /// Hash of every ReLU's on/off state.
    relu_pattern: u64,
}

impl Network {
    pub fn build(arch: &ArchEncoding, cfg: &SkeletonConfig, rng: &mut Stream) -> Result<Network> {
        cfg.validate()?;
        let seed = rng.next_u64();
        let mut b = Builder {
            nodes: Vec::new(),
            weights: Vec::new(),
            rng: Stream::new(seed),
        };
        let input = b.push(Op::Input, vec![], (cfg.input_channels, cfg.input_hw, cfg.input_hw));
        let stem = b.conv(input, cfg.stem_channels, 3, 1);
        let mut x = b.unary(Op::BatchNorm, stem);
        for stage in 0..cfg.num_stages {
            if stage > 0 {
                let c = b.nodes[x].chw.0;
                x = b.relu_conv_bn(x, 2 * c, 3, 2);
            }
            for _ in 0..cfg.cells_per_stage {
                x = b.cell(arch, x);
            }
        }
        let r = b.unary(Op::Relu, x);
        let c = b.nodes[r].chw.0;
        let gap = if b.is_zero(r) {
            b.zero((c, 1, 1))
        } else {
            b.push(Op::GlobalAvgPool, vec![r], (c, 1, 1))
        };
        let k = cfg.num_classes;
        if b.is_zero(gap) {
            b.zero((k, 1, 1));
        } else {
            let weight = b.he_normal(k * c, c);
            b.push(Op::Dense { cin: c, cout: k, weight }, vec![gap], (k, 1, 1));
        }
        Ok(Network {
            cfg: cfg.clone(),
            nodes: b.nodes,
            weights: b.weights,
        })
    }

    /// A single cell with no stem or classifier; its output is the cell's node 3.
    pub fn cell_only(
        arch: &ArchEncoding,
        channels: usize,
        hw: usize,
        bn_eps: f64,
        rng: &mut Stream,
    ) -> Result<Network> {
        let cfg = SkeletonConfig {
            input_channels: channels,
            input_hw: hw,
            stem_channels: channels,
            cells_per_stage: 1,
            num_stages: 1,
            num_classes: 1,
            bn_eps,
        };
        cfg.validate()?;
        let mut b = Builder {
            nodes: Vec::new(),
            weights: Vec::new(),
            rng: Stream::new(rng.next_u64()),
        };
        let input = b.push(Op::Input, vec![], (channels, hw, hw));
        let out = b.cell(arch, input);
        if out != b.nodes.len() - 1 {
            // make the cell output the last node
            let chw = b.nodes[out].chw;
            b.push(Op::Add, vec![out], chw);
        }
        Ok(Network {
            cfg,
            nodes: b.nodes,
            weights: b.weights,
        })
    }

    pub fn config(&self) -> &SkeletonConfig {
        &self.cfg
    }

    pub fn parameters(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn num_parameters(&self) -> usize {
        self.weights.iter().map(Vec::len).sum()
    }

    fn check_batch(&self, batch: &Tensor) -> Result<usize> {
        let c = &self.cfg;
        let expected = [c.input_channels, c.input_hw, c.input_hw];
        if batch.shape().len() != 4 || batch.shape()[1..] != expected {
            return Err(Error::Shape(format!(
                "batch shape {:?} does not match [N, {}, {}, {}]",
                batch.shape(),
                expected[0],
                expected[1],
                expected[2]
            )));
        }
        if batch.batch() < 2 {
            return Err(Error::Shape(
                "batch-statistics normalization needs at least 2 samples".into(),
            ));
        }
        Ok(batch.batch())
    }

    fn dims(&self, id: usize, n: usize) -> Dims {
        let (c, h, w) = self.nodes[id].chw;
        Dims { n, c, h, w }
    }

    fn trace(&self, input: &[f64], n: usize) -> Trace {
        let mut values: Vec<Vec<f64>> = Vec::with_capacity(self.nodes.len());
        let mut bn_inv_std = vec![Vec::new(); self.nodes.len()];
        let mut min_relu_margin = f64::INFINITY;
        let mut relu_pattern: u64 = 0xcbf2_9ce4_8422_2325;
        for (id, node) in self.nodes.iter().enumerate() {
            let out = match &node.op {
                Op::Input => input.to_vec(),
                Op::Zero => vec![0.0; self.dims(id, n).len()],
                Op::Conv { geom, weight } => {
                    let x = node.inputs[0];
                    kernels::conv_forward(&values[x], self.dims(x, n), &self.weights[*weight], geom).0
                }
                Op::BatchNorm => {
                    let (y, inv_std) =
                        kernels::batchnorm_forward(&values[node.inputs[0]], self.dims(id, n), self.cfg.bn_eps);
                    bn_inv_std[id] = inv_std;
                    y
                }
                Op::Relu => {
                    let x = &values[node.inputs[0]];
                    for v in x {
                        min_relu_margin = min_relu_margin.min(v.abs());
                        relu_pattern = (relu_pattern ^ u64::from(*v > 0.0)).wrapping_mul(0x0100_0000_01b3);
                    }
                    x.iter().map(|v| v.max(0.0)).collect()
                }
                Op::AvgPool => kernels::avgpool_forward(&values[node.inputs[0]], self.dims(id, n)),
                Op::Add => {
                    let mut acc = values[node.inputs[0]].clone();
                    for &other in &node.inputs[1..] {
                        for (a, b) in acc.iter_mut().zip(&values[other]) {
                            *a += b;
                        }
                    }
                    acc
                }
                Op::GlobalAvgPool => {
                    let x = node.inputs[0];
                    kernels::global_avgpool_forward(&values[x], self.dims(x, n))
                }
                Op::Dense { cin, cout, weight } => {
                    kernels::dense_forward(&values[node.inputs[0]], n, *cin, &self.weights[*weight], *cout)
                }
            };
            values.push(out);
        }
        Trace {
            values,
            bn_inv_std,
            min_relu_margin,
            relu_pattern,
        }
    }

    /// Network output: logits `[N, num_classes]`, or `[N, C, H, W]` for a bare cell.
    pub fn forward(&self, batch: &Tensor) -> Result<Tensor> {
        let n = self.check_batch(batch)?;
        let mut trace = self.trace(batch.data(), n);
        let out = trace.values.pop().expect("network has an output node");
        let (c, h, w) = self.nodes.last().expect("network has an output node").chw;
        let shape = if (h, w) == (1, 1) { vec![n, c] } else { vec![n, c, h, w] };
        Tensor::new(shape, out)
    }

    /// Smallest `|pre-activation|` seen by any ReLU on this batch.
    pub fn min_relu_margin(&self, batch: &Tensor) -> Result<f64> {
        let n = self.check_batch(batch)?;
        Ok(self.trace(batch.data(), n).min_relu_margin)
    }

    /// Sum of all logits over all samples and classes.
    pub fn logit_sum(&self, batch: &Tensor) -> Result<f64> {
        Ok(self.forward(batch)?.sum())
    }

    /// Gradient of the total logit sum with respect to the batch, same shape as the batch.
    pub fn input_gradient(&self, batch: &Tensor) -> Result<Tensor> {
        let n = self.check_batch(batch)?;
        let trace = self.trace(batch.data(), n);
        let last = self.nodes.len() - 1;
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; self.nodes.len()];
        grads[last] = Some(vec![1.0; trace.values[last].len()]);

        for id in (0..self.nodes.len()).rev() {
            let Some(dy) = grads[id].take() else { continue };
            let node = &self.nodes[id];
            let mut send = |target: usize, g: Vec<f64>| match &mut grads[target] {
                Some(acc) => acc.iter_mut().zip(&g).for_each(|(a, b)| *a += b),
                slot @ None => *slot = Some(g),
            };
            match &node.op {
                Op::Input => {
                    return Tensor::new(batch.shape().to_vec(), dy);
                }
                Op::Zero => {}
                Op::Conv { geom, weight } => {
                    let x = node.inputs[0];
                    let g = kernels::conv_backward(
                        &dy,
                        self.dims(id, n),
                        &self.weights[*weight],
                        geom,
                        self.dims(x, n),
                    );
                    send(x, g);
                }
                Op::BatchNorm => {
                    let g = kernels::batchnorm_backward(
                        &dy,
                        &trace.values[id],
                        &trace.bn_inv_std[id],
                        self.dims(id, n),
                    );
                    send(node.inputs[0], g);
                }
                Op::Relu => {
                    let x = &trace.values[node.inputs[0]];
                    let g = dy
                        .iter()
                        .zip(x)
                        .map(|(g, v)| if *v > 0.0 { *g } else { 0.0 })
                        .collect();
                    send(node.inputs[0], g);
                }
                Op::AvgPool => send(node.inputs[0], kernels::avgpool_backward(&dy, self.dims(id, n))),
                Op::Add => {
                    for &x in &node.inputs {
                        send(x, dy.clone());
                    }
                }
                Op::GlobalAvgPool => {
                    let x = node.inputs[0];
                    send(x, kernels::global_avgpool_backward(&dy, self.dims(x, n)));
                }
                Op::Dense { cin, cout, weight } => {
                    let g = kernels::dense_backward(&dy, n, *cin, &self.weights[*weight], *cout);
                    send(node.inputs[0], g);
                }
            }
        }
        // The output does not depend on the input.
        Ok(Tensor::zeros(batch.shape().to_vec()))
    }
}

/// Per-sample rows of the input Jacobian together with class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianBatch {
    pub jacobian: Matrix,
    pub labels: Vec<usize>,
}

impl JacobianBatch {
    pub fn new(jacobian: Matrix, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != jacobian.rows {
            return Err(Error::Shape(format!(
                "{} labels for {} Jacobian rows",
                labels.len(),
                jacobian.rows
            )));
        }
        Ok(Self { jacobian, labels })
    }

    pub fn num_samples(&self) -> usize {
        self.jacobian.rows
    }
}

pub fn build_network(arch: &ArchEncoding, cfg: &SkeletonConfig, rng: &mut Stream) -> Result<Network> {
    Network::build(arch, cfg, rng)
}

pub fn forward(net: &Network, batch: &Tensor) -> Result<Tensor> {
    net.forward(batch)
}

pub fn input_jacobian(net: &Network, batch: &Tensor, labels: &[usize]) -> Result<JacobianBatch> {
    let n = net.check_batch(batch)?;
    if labels.len() != n {
        return Err(Error::Shape(format!("{} labels for a batch of {n}", labels.len())));
    }
    if let Some(bad) = labels.iter().find(|&&l| l >= net.cfg.num_classes) {
        return Err(Error::Shape(format!(
            "label {bad} out of range for {} classes",
            net.cfg.num_classes
        )));
    }
    let grad = net.input_gradient(batch)?;
    let cols = batch.sample_len();
    let jacobian = Matrix {
        rows: n,
        cols,
        data: grad.into_data(),
    };
    JacobianBatch::new(jacobian, labels.to_vec())
}

/// Central differences of the total logit sum, one entry per input element.
pub fn finite_diff_jacobian(net: &Network, batch: &Tensor, step: f64) -> Result<Matrix> {
    finite_diff_jacobian_with(net, batch, step, Execution::default())
}

pub fn finite_diff_jacobian_with(
    net: &Network,
    batch: &Tensor,
    step: f64,
    mode: Execution,
) -> Result<Matrix> {
    finite_diff_jacobian_checked(net, batch, step, mode).map(|(m, _)| m)
}

/// Central differences plus the number of stencil points whose ReLU on/off
/// pattern differs from the unperturbed batch. A nonzero count means the
/// stencil straddles a kink.
pub fn finite_diff_jacobian_checked(
    net: &Network,
    batch: &Tensor,
    step: f64,
    mode: Execution,
) -> Result<(Matrix, usize)> {
    let n = net.check_batch(batch)?;
    if !(step > 0.0) {
        return Err(Error::Config("finite-difference step must be positive".into()));
    }
    let base = net.trace(batch.data(), n).relu_pattern;
    let logit_sum = |t: &Trace| t.values.last().map_or(0.0, |v| v.iter().sum::<f64>());
    let entries = par::map_indexed(batch.len(), mode, |idx| {
        let mut shifted = batch.data().to_vec();
        shifted[idx] = batch.data()[idx] + step;
        let plus = net.trace(&shifted, n);
        shifted[idx] = batch.data()[idx] - step;
        let minus = net.trace(&shifted, n);
        let crossings = usize::from(plus.relu_pattern != base) + usize::from(minus.relu_pattern != base);
        ((logit_sum(&plus) - logit_sum(&minus)) / (2.0 * step), crossings)
    });
    let crossings = entries.iter().map(|e| e.1).sum();
    let data = entries.into_iter().map(|e| e.0).collect();
    Ok((
        Matrix {
            rows: n,
            cols: batch.sample_len(),
            data,
        },
        crossings,
    ))
}
