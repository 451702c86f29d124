//! Layers with exact analytic backward passes and the [`Network`] container.
//!
//! Batches are feature-major [`Matrix`] values (one column per sample). Conv
//! layers carry their input geometry and reshape internally, so a network is a
//! plain sequence of matrix-to-matrix maps.

mod activation;
mod batchnorm;
pub mod checkpoint;
mod conv;
mod dense;
mod loss;
mod network;

use serde::{Deserialize, Serialize};

pub use activation::{relu, sigmoid, Activation, ActivationKind};
pub use batchnorm::{BatchNorm, DEFAULT_EPS, DEFAULT_MOMENTUM};
pub use conv::{Conv2d, ConvGeometry};
pub use dense::Dense;
pub use loss::{argmax_columns, count_correct, softmax_columns, softmax_xent};
pub use network::{BnPlacement, MlpSpec, Network};

use crate::error::Result;
use crate::linalg::Matrix;

/// How a layer's weight vectors are parameterized.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parameterization {
    /// Unconstrained weights.
    #[default]
    Standard,
    /// Zero-sum weights realized as `w = B v`.
    Lcw,
}

/// Role of a parameter tensor; the optimizer applies weight decay to
/// [`ParamKind::Weight`] only.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamKind {
    Weight,
    Bias,
    Scale,
    Shift,
}

/// Mutable view of one parameter tensor and its accumulated gradient.
pub struct ParamSlot<'a> {
    pub kind: ParamKind,
    pub value: &'a mut [f64],
    pub grad: &'a [f64],
}

#[derive(Clone, Debug)]
pub enum Layer {
    Dense(Dense),
    Conv2d(Conv2d),
    Activation(Activation),
    BatchNorm(BatchNorm),
}

impl Layer {
    pub fn name(&self) -> &'static str {
        match self {
            Layer::Dense(_) => "dense",
            Layer::Conv2d(_) => "conv2d",
            Layer::Activation(a) => a.kind().name(),
            Layer::BatchNorm(_) => "batchnorm",
        }
    }

    /// Dense and conv layers produce preactivations.
    pub fn is_linear(&self) -> bool {
        matches!(self, Layer::Dense(_) | Layer::Conv2d(_))
    }

    /// Output width for an input of `in_features`, or `None` if incompatible.
    pub fn out_features(&self, in_features: usize) -> Option<usize> {
        match self {
            Layer::Dense(d) => (d.in_features() == in_features).then(|| d.out_features()),
            Layer::Conv2d(c) => {
                let g = c.geometry();
                (g.in_features() == in_features).then(|| g.out_features())
            }
            Layer::Activation(_) => Some(in_features),
            Layer::BatchNorm(b) => (b.features() == in_features).then_some(in_features),
        }
    }

    pub fn forward(&mut self, x: &Matrix) -> Result<Matrix> {
        match self {
            Layer::Dense(d) => d.forward(x),
            Layer::Conv2d(c) => c.forward(x),
            Layer::Activation(a) => Ok(a.forward(x)),
            Layer::BatchNorm(b) => b.forward(x),
        }
    }

    /// Side-effect-free forward; batch norm uses its running statistics.
    pub fn infer(&self, x: &Matrix) -> Result<Matrix> {
        match self {
            Layer::Dense(d) => d.infer(x),
            Layer::Conv2d(c) => c.infer(x),
            Layer::Activation(a) => Ok(a.infer(x)),
            Layer::BatchNorm(b) => b.infer(x),
        }
    }

    /// Side-effect-free forward with batch norm in training behaviour.
    pub fn infer_batch(&self, x: &Matrix) -> Result<Matrix> {
        match self {
            Layer::BatchNorm(b) => b.infer_batch(x),
            other => other.infer(x),
        }
    }

    pub fn backward(&mut self, grad: &Matrix) -> Result<Matrix> {
        match self {
            Layer::Dense(d) => d.backward(grad),
            Layer::Conv2d(c) => c.backward(grad),
            Layer::Activation(a) => a.backward(grad),
            Layer::BatchNorm(b) => b.backward(grad),
        }
    }

    pub fn zero_grad(&mut self) {
        match self {
            Layer::Dense(d) => d.zero_grad(),
            Layer::Conv2d(c) => c.zero_grad(),
            Layer::Activation(_) => {}
            Layer::BatchNorm(b) => b.zero_grad(),
        }
    }

    /// Parameter slots in a fixed order. Callers that mutate values must call
    /// [`Layer::sync`] afterwards.
    pub fn params(&mut self) -> Vec<ParamSlot<'_>> {
        match self {
            Layer::Dense(d) => d.params(),
            Layer::Conv2d(c) => c.params(),
            Layer::Activation(_) => Vec::new(),
            Layer::BatchNorm(b) => b.params(),
        }
    }

    /// Re-realizes weights after a direct parameter mutation.
    pub fn sync(&mut self) {
        match self {
            Layer::Dense(d) => d.sync(),
            Layer::Conv2d(c) => c.sync(),
            _ => {}
        }
    }

    pub fn set_training(&mut self, training: bool) {
        if let Layer::BatchNorm(b) = self {
            b.set_training(training);
        }
    }

    /// Multiplies the weight parameter of a dense or conv layer by `k`.
    pub fn scale_weights(&mut self, k: f64) {
        match self {
            Layer::Dense(d) => d.scale_weights(k),
            Layer::Conv2d(c) => c.scale_weights(k),
            _ => {}
        }
    }

    /// Largest `|Σ w|` over neurons or kernels; zero for other layers.
    pub fn max_weight_sum(&self) -> f64 {
        match self {
            Layer::Dense(d) => d.max_row_sum(),
            Layer::Conv2d(c) => c.max_kernel_sum(),
            _ => 0.0,
        }
    }
}

impl From<Dense> for Layer {
    fn from(d: Dense) -> Self {
        Layer::Dense(d)
    }
}

impl From<Conv2d> for Layer {
    fn from(c: Conv2d) -> Self {
        Layer::Conv2d(c)
    }
}

impl From<Activation> for Layer {
    fn from(a: Activation) -> Self {
        Layer::Activation(a)
    }
}

impl From<BatchNorm> for Layer {
    fn from(b: BatchNorm) -> Self {
        Layer::BatchNorm(b)
    }
}
