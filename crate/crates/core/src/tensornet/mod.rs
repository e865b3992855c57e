//! Minimal f64 tensor engine: builds a randomly initialized network from a
//! cell genotype and differentiates its summed logits with respect to the
//! input batch.

mod kernels;
mod network;
mod tensor;

pub use network::{
    build_network, finite_diff_jacobian, finite_diff_jacobian_checked, finite_diff_jacobian_with, forward, input_jacobian,
    JacobianBatch, Network, SkeletonConfig,
};
pub use tensor::{Matrix, Tensor};
