//! Linearly constrained weights (LCW) for fully connected and convolutional
//! layers.
//!
//! A weight vector `w ∈ R^m` is constrained to the zero-sum subspace
//! `{w : Σ w_i = 0}` by writing `w = B v`, where `B` is a fixed `m × (m-1)`
//! orthonormal basis of that subspace and `v` is the free parameter. Under
//! inputs whose mean is a constant vector the preactivation of such a neuron
//! has zero mean, which removes the neuron-dependent bias of `w · a` and keeps
//! forward and backward variance amplification symmetric.
//!
//! Modules:
//!
//! - [`linalg`]: dense matrices, 4-D tensors, Householder QR, the seeded RNG
//!   and summary statistics.
//! - [`lcw`]: basis construction and the `w = B v` reparameterization.
//! - [`nn`]: layers with analytic backward passes, the network container and
//!   checkpoints.
//! - [`init`]: Glorot and minibatch variance-preserving initialization.
//! - [`diagnostics`]: Monte Carlo and exact checks of the variance and shift
//!   properties, layer profiles and verdict documents.
//! - [`harness`]: datasets, SGD with momentum, the learning-rate schedule,
//!   training configs, metrics and the finite-difference suite.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod diagnostics;
pub mod error;
pub mod harness;
pub mod init;
pub mod lcw;
pub mod linalg;
pub mod nn;

pub use error::{Error, Result};
pub use lcw::{LcwBasis, LcwParam};
pub use linalg::{Matrix, Rng, SummaryStats, Tensor4};
pub use nn::{Layer, Network, Parameterization};
