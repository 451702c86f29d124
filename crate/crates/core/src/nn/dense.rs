use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lcw::LcwBasis;
use crate::linalg::Matrix;
use crate::nn::{ParamKind, ParamSlot, Parameterization};

/// Fully connected layer `z = W a + b` over feature-major batches.
///
/// In [`Parameterization::Lcw`] mode the trainable parameter is `V`
/// (`out × (in-1)`), one free vector per neuron, and the weights are realized as
/// `W = V Bᵀ`. The bias is never constrained.
#[derive(Clone, Debug)]
pub struct Dense {
    in_features: usize,
    out_features: usize,
    mode: Parameterization,
    basis: Option<Arc<LcwBasis>>,
    /// `W` in standard mode, `V` in LCW mode.
    param: Matrix,
    /// Realized `W`, kept in sync with `param`.
    weight: Matrix,
    bias: Vec<f64>,
    grad_param: Matrix,
    grad_bias: Vec<f64>,
    input: Option<Matrix>,
}

impl Dense {
    /// A zero-initialized layer.
    pub fn new(in_features: usize, out_features: usize, mode: Parameterization) -> Result<Self> {
        if in_features == 0 || out_features == 0 {
            return Err(Error::InvalidArgument(format!(
                "dense layer needs positive sizes, got {in_features} -> {out_features}"
            )));
        }
        let (basis, param_cols) = match mode {
            Parameterization::Standard => (None, in_features),
            Parameterization::Lcw => (Some(LcwBasis::shared(in_features)?), in_features - 1),
        };
        Ok(Dense {
            in_features,
            out_features,
            mode,
            basis,
            param: Matrix::zeros(out_features, param_cols),
            weight: Matrix::zeros(out_features, in_features),
            bias: vec![0.0; out_features],
            grad_param: Matrix::zeros(out_features, param_cols),
            grad_bias: vec![0.0; out_features],
            input: None,
        })
    }

    /// Builds a layer from explicit weights. In LCW mode each row is projected
    /// onto the zero-sum subspace.
    pub fn from_weights(weight: &Matrix, bias: Vec<f64>, mode: Parameterization) -> Result<Self> {
        let mut layer = Dense::new(weight.cols(), weight.rows(), mode)?;
        layer.set_weights(weight)?;
        layer.set_bias(bias)?;
        Ok(layer)
    }

    pub fn in_features(&self) -> usize {
        self.in_features
    }

    pub fn out_features(&self) -> usize {
        self.out_features
    }

    pub fn mode(&self) -> Parameterization {
        self.mode
    }

    pub fn basis(&self) -> Option<&Arc<LcwBasis>> {
        self.basis.as_ref()
    }

    /// Realized weight matrix `W` (`out × in`).
    pub fn weight(&self) -> &Matrix {
        &self.weight
    }

    /// Trainable weight parameter: `W` or `V`.
    pub fn param(&self) -> &Matrix {
        &self.param
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn grad_param(&self) -> &Matrix {
        &self.grad_param
    }

    pub fn grad_bias(&self) -> &[f64] {
        &self.grad_bias
    }

    pub fn set_weights(&mut self, weight: &Matrix) -> Result<()> {
        if weight.shape() != (self.out_features, self.in_features) {
            return Err(Error::shape(
                "Dense::set_weights",
                format!("{}x{}", self.out_features, self.in_features),
                weight.shape_str(),
            ));
        }
        self.param = match &self.basis {
            None => weight.clone(),
            Some(b) => b.project_rows(weight)?,
        };
        self.sync();
        Ok(())
    }

    /// Replaces the trainable parameter (`W` or `V`) directly.
    pub fn set_param(&mut self, param: Matrix) -> Result<()> {
        if param.shape() != self.param.shape() {
            return Err(Error::shape(
                "Dense::set_param",
                self.param.shape_str(),
                param.shape_str(),
            ));
        }
        self.param = param;
        self.sync();
        Ok(())
    }

    pub fn set_bias(&mut self, bias: Vec<f64>) -> Result<()> {
        if bias.len() != self.out_features {
            return Err(Error::shape(
                "Dense::set_bias",
                format!("{} outputs", self.out_features),
                format!("{} biases", bias.len()),
            ));
        }
        self.bias = bias;
        Ok(())
    }

    /// Multiplies the weight parameter by `k`; direction is unchanged.
    pub fn scale_weights(&mut self, k: f64) {
        self.param.scale(k);
        self.sync();
    }

    /// Recomputes the realized weights from the parameter.
    pub fn sync(&mut self) {
        if let Some(b) = &self.basis {
            self.weight = b
                .lift_rows(&self.param)
                .expect("shapes fixed at construction");
        } else {
            self.weight
                .as_mut_slice()
                .copy_from_slice(self.param.as_slice());
        }
    }

    pub fn forward(&mut self, x: &Matrix) -> Result<Matrix> {
        let z = self.infer(x)?;
        self.input = Some(x.clone());
        Ok(z)
    }

    pub fn infer(&self, x: &Matrix) -> Result<Matrix> {
        if x.rows() != self.in_features {
            return Err(Error::shape(
                "Dense::forward",
                format!("weights {}x{}", self.out_features, self.in_features),
                format!("input {}", x.shape_str()),
            ));
        }
        let mut z = self.weight.matmul(x)?;
        let n = z.cols();
        for (i, &b) in self.bias.iter().enumerate() {
            if b != 0.0 {
                z.row_mut(i).iter_mut().for_each(|v| *v += b);
            }
        }
        debug_assert_eq!(z.shape(), (self.out_features, n));
        Ok(z)
    }

    /// Accumulates parameter gradients and returns `Wᵀ g`.
    pub fn backward(&mut self, grad_z: &Matrix) -> Result<Matrix> {
        let x = self.input.as_ref().ok_or(Error::NoForwardCache("dense"))?;
        if grad_z.rows() != self.out_features || grad_z.cols() != x.cols() {
            return Err(Error::shape(
                "Dense::backward",
                format!("{}x{}", self.out_features, x.cols()),
                grad_z.shape_str(),
            ));
        }
        let grad_w = grad_z.matmul_nt(x)?;
        match &self.basis {
            None => self.grad_param.add_assign(&grad_w)?,
            Some(b) => self.grad_param.add_assign(&grad_w.matmul(b.matrix())?)?,
        }
        for (gb, s) in self.grad_bias.iter_mut().zip(grad_z.row_sums()) {
            *gb += s;
        }
        self.weight.matmul_tn(grad_z)
    }

    pub fn zero_grad(&mut self) {
        self.grad_param.fill(0.0);
        self.grad_bias.iter_mut().for_each(|g| *g = 0.0);
    }

    pub(crate) fn params(&mut self) -> Vec<ParamSlot<'_>> {
        vec![
            ParamSlot {
                kind: ParamKind::Weight,
                value: self.param.as_mut_slice(),
                grad: self.grad_param.as_slice(),
            },
            ParamSlot {
                kind: ParamKind::Bias,
                value: &mut self.bias,
                grad: &self.grad_bias,
            },
        ]
    }

    /// Largest `|Σ_j w_ij|` over neurons.
    pub fn max_row_sum(&self) -> f64 {
        self.weight
            .row_sums()
            .iter()
            .fold(0.0, |m, s| m.max(s.abs()))
    }
}
