use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivationKind {
    Sigmoid,
    Relu,
    Identity,
}

impl ActivationKind {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            ActivationKind::Sigmoid => sigmoid(x),
            ActivationKind::Relu => relu(x),
            ActivationKind::Identity => x,
        }
    }

    /// Derivative at `x`. ReLU uses `f'(0) = 0`.
    #[inline]
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            ActivationKind::Sigmoid => {
                let s = sigmoid(x);
                s * (1.0 - s)
            }
            ActivationKind::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            ActivationKind::Identity => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ActivationKind::Sigmoid => "sigmoid",
            ActivationKind::Relu => "relu",
            ActivationKind::Identity => "identity",
        }
    }
}

/// Logistic function; the negative branch avoids overflow of `e^{-x}`.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline]
pub fn relu(x: f64) -> f64 {
    x.max(0.0)
}

/// Elementwise nonlinearity; caches its input for the backward pass.
#[derive(Clone, Debug)]
pub struct Activation {
    kind: ActivationKind,
    input: Option<Matrix>,
}

impl Activation {
    pub fn new(kind: ActivationKind) -> Self {
        Activation { kind, input: None }
    }

    pub fn kind(&self) -> ActivationKind {
        self.kind
    }

    pub fn forward(&mut self, z: &Matrix) -> Matrix {
        let a = self.infer(z);
        self.input = Some(z.clone());
        a
    }

    pub fn infer(&self, z: &Matrix) -> Matrix {
        let k = self.kind;
        z.map(|v| k.apply(v))
    }

    pub fn backward(&mut self, grad_a: &Matrix) -> Result<Matrix> {
        let z = self
            .input
            .as_ref()
            .ok_or(Error::NoForwardCache("activation"))?;
        z.check_same_shape("Activation::backward", grad_a)?;
        let k = self.kind;
        let mut out = grad_a.clone();
        for (g, &zi) in out.as_mut_slice().iter_mut().zip(z.as_slice()) {
            *g *= k.derivative(zi);
        }
        Ok(out)
    }
}
