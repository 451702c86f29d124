use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::nn::{
    softmax_xent, Activation, ActivationKind, BatchNorm, Dense, Layer, ParamSlot, Parameterization,
};

/// Where batch norm sits relative to the nonlinearity in an MLP block.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BnPlacement {
    /// `dense → bn → f`: normalizes the preactivation.
    #[default]
    Pre,
    /// `dense → f → bn`.
    Post,
}

/// Fully connected network with `depth` dense layers: `depth - 1` hidden
/// blocks of `width` units followed by the `classes`-way output layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpSpec {
    pub input_dim: usize,
    pub depth: usize,
    pub width: usize,
    pub classes: usize,
    #[serde(default = "default_activation")]
    pub activation: ActivationKind,
    #[serde(default)]
    pub lcw: bool,
    #[serde(default)]
    pub batchnorm: bool,
    #[serde(default)]
    pub bn_placement: BnPlacement,
}

fn default_activation() -> ActivationKind {
    ActivationKind::Sigmoid
}

impl MlpSpec {
    pub fn new(input_dim: usize, depth: usize, width: usize, classes: usize) -> Self {
        MlpSpec {
            input_dim,
            depth,
            width,
            classes,
            activation: ActivationKind::Sigmoid,
            lcw: false,
            batchnorm: false,
            bn_placement: BnPlacement::Pre,
        }
    }

    pub fn with_lcw(mut self, lcw: bool) -> Self {
        self.lcw = lcw;
        self
    }

    pub fn with_batchnorm(mut self, batchnorm: bool) -> Self {
        self.batchnorm = batchnorm;
        self
    }

    pub fn with_activation(mut self, activation: ActivationKind) -> Self {
        self.activation = activation;
        self
    }

    pub fn build(&self) -> Result<Network> {
        if self.depth == 0 {
            return Err(Error::InvalidArgument(
                "MLP depth must be at least 1".into(),
            ));
        }
        let mode = if self.lcw {
            Parameterization::Lcw
        } else {
            Parameterization::Standard
        };
        let mut layers = Vec::new();
        let mut width_in = self.input_dim;
        for _ in 0..self.depth - 1 {
            layers.push(Dense::new(width_in, self.width, mode)?.into());
            if self.batchnorm && self.bn_placement == BnPlacement::Pre {
                layers.push(BatchNorm::new(self.width).into());
            }
            layers.push(Activation::new(self.activation).into());
            if self.batchnorm && self.bn_placement == BnPlacement::Post {
                layers.push(BatchNorm::new(self.width).into());
            }
            width_in = self.width;
        }
        layers.push(Dense::new(width_in, self.classes, mode)?.into());
        Network::new(self.input_dim, layers)
    }
}

/// Ordered layer stack ending in logits; the loss is softmax cross-entropy.
#[derive(Clone, Debug)]
pub struct Network {
    input_features: usize,
    layers: Vec<Layer>,
    training: bool,
}

impl Network {
    /// Validates that consecutive layer shapes are compatible.
    pub fn new(input_features: usize, layers: Vec<Layer>) -> Result<Self> {
        let mut width = input_features;
        for (i, layer) in layers.iter().enumerate() {
            width = layer.out_features(width).ok_or_else(|| {
                Error::shape(
                    "Network::new",
                    format!("{width} features into layer {i}"),
                    layer.name(),
                )
            })?;
        }
        Ok(Network {
            input_features,
            layers,
            training: true,
        })
    }

    pub fn input_features(&self) -> usize {
        self.input_features
    }

    pub fn output_features(&self) -> usize {
        self.layers.iter().fold(self.input_features, |w, l| {
            l.out_features(w).expect("validated")
        })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Mutable access to individual layers. Shapes must not be changed.
    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    /// Indices of the dense and conv layers, in order.
    pub fn linear_layers(&self) -> Vec<usize> {
        (0..self.layers.len())
            .filter(|&i| self.layers[i].is_linear())
            .collect()
    }

    pub fn is_training(&self) -> bool {
        self.training
    }

    pub fn set_training(&mut self, training: bool) {
        self.training = training;
        self.layers
            .iter_mut()
            .for_each(|l| l.set_training(training));
    }

    /// Forward pass that caches what backward needs; returns the logits.
    pub fn forward(&mut self, x: &Matrix) -> Result<Matrix> {
        let mut h = x.clone();
        for layer in &mut self.layers {
            h = layer.forward(&h)?;
        }
        Ok(h)
    }

    /// Like [`Network::forward`] but returns every layer's output.
    pub fn forward_traced(&mut self, x: &Matrix) -> Result<Vec<Matrix>> {
        let mut outs: Vec<Matrix> = Vec::with_capacity(self.layers.len());
        for i in 0..self.layers.len() {
            let h = self.layers[i].forward(outs.last().unwrap_or(x))?;
            outs.push(h);
        }
        Ok(outs)
    }

    /// Backpropagates `grad_logits`, accumulating parameter gradients, and
    /// returns the gradient with respect to the network input.
    pub fn backward(&mut self, grad_logits: &Matrix) -> Result<Matrix> {
        let mut g = grad_logits.clone();
        for layer in self.layers.iter_mut().rev() {
            g = layer.backward(&g)?;
        }
        Ok(g)
    }

    /// Like [`Network::backward`] but returns the gradient with respect to
    /// each layer's output (`result[i]` pairs with layer `i`), followed by the
    /// input gradient as the final element.
    pub fn backward_traced(&mut self, grad_logits: &Matrix) -> Result<Vec<Matrix>> {
        let n = self.layers.len();
        let mut grads = vec![Matrix::zeros(0, 0); n + 1];
        grads[n - 1] = grad_logits.clone();
        for i in (0..n).rev() {
            grads[if i == 0 { n } else { i - 1 }] = self.layers[i].backward(&grads[i])?;
        }
        Ok(grads)
    }

    /// Eval-style forward through `&self`; safe to call concurrently.
    pub fn predict(&self, x: &Matrix) -> Result<Matrix> {
        let mut h = x.clone();
        for layer in &self.layers {
            h = layer.infer(&h)?;
        }
        Ok(h)
    }

    /// Forward, loss and backward for one batch. Gradients accumulate.
    pub fn loss_and_backward(&mut self, x: &Matrix, labels: &[usize]) -> Result<(f64, Matrix)> {
        let logits = self.forward(x)?;
        let (loss, grad) = softmax_xent(&logits, labels)?;
        self.backward(&grad)?;
        Ok((loss, logits))
    }

    pub fn zero_grad(&mut self) {
        self.layers.iter_mut().for_each(Layer::zero_grad);
    }

    /// Visits every parameter slot as `(layer index, slot)`, then re-realizes
    /// constrained weights so they stay consistent with their parameters.
    pub fn update_params(&mut self, mut f: impl FnMut(usize, ParamSlot<'_>)) {
        for (i, layer) in self.layers.iter_mut().enumerate() {
            for slot in layer.params() {
                f(i, slot);
            }
            layer.sync();
        }
    }

    /// Flat copy of every parameter value in slot order.
    pub fn param_values(&mut self) -> Vec<f64> {
        let mut out = Vec::new();
        self.update_params(|_, s| out.extend_from_slice(s.value));
        out
    }

    /// Flat copy of every accumulated gradient in slot order.
    pub fn param_grads(&mut self) -> Vec<f64> {
        let mut out = Vec::new();
        self.update_params(|_, s| out.extend_from_slice(s.grad));
        out
    }

    /// Overwrites every parameter from a flat vector in slot order.
    pub fn set_param_values(&mut self, values: &[f64]) -> Result<()> {
        let total = self.param_values().len();
        if total != values.len() {
            return Err(Error::shape(
                "Network::set_param_values",
                format!("{total} parameters"),
                format!("{} values", values.len()),
            ));
        }
        let mut offset = 0;
        self.update_params(|_, s| {
            let n = s.value.len();
            s.value.copy_from_slice(&values[offset..offset + n]);
            offset += n;
        });
        Ok(())
    }

    /// Largest `|Σ w|` over all neurons and kernels of the network.
    pub fn max_weight_sum(&self) -> f64 {
        self.layers
            .iter()
            .fold(0.0, |m, l| m.max(l.max_weight_sum()))
    }

    pub fn is_finite(&mut self) -> bool {
        let mut ok = true;
        self.update_params(|_, s| {
            ok &= s.value.iter().chain(s.grad.iter()).all(|v| v.is_finite());
        });
        ok
    }
}
