use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::nn::{ParamKind, ParamSlot};

pub const DEFAULT_EPS: f64 = 1e-5;
pub const DEFAULT_MOMENTUM: f64 = 0.1;

/// Per-feature batch normalization over the columns of a feature-major batch.
///
/// Training mode normalizes with the batch mean and population variance and
/// folds them into the running statistics as
/// `running ← (1 - momentum)·running + momentum·batch`. Evaluation mode uses
/// only the running statistics.
#[derive(Clone, Debug)]
pub struct BatchNorm {
    features: usize,
    pub(crate) gamma: Vec<f64>,
    pub(crate) beta: Vec<f64>,
    pub(crate) running_mean: Vec<f64>,
    pub(crate) running_var: Vec<f64>,
    momentum: f64,
    eps: f64,
    training: bool,
    grad_gamma: Vec<f64>,
    grad_beta: Vec<f64>,
    cache: Option<Cache>,
}

#[derive(Clone, Debug)]
struct Cache {
    x_hat: Matrix,
    inv_std: Vec<f64>,
    batch_stats: bool,
}

impl BatchNorm {
    pub fn new(features: usize) -> Self {
        Self::with_params(features, DEFAULT_MOMENTUM, DEFAULT_EPS)
    }

    pub fn with_params(features: usize, momentum: f64, eps: f64) -> Self {
        BatchNorm {
            features,
            gamma: vec![1.0; features],
            beta: vec![0.0; features],
            running_mean: vec![0.0; features],
            running_var: vec![1.0; features],
            momentum,
            eps,
            training: true,
            grad_gamma: vec![0.0; features],
            grad_beta: vec![0.0; features],
            cache: None,
        }
    }

    pub fn features(&self) -> usize {
        self.features
    }

    pub fn momentum(&self) -> f64 {
        self.momentum
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn running_mean(&self) -> &[f64] {
        &self.running_mean
    }

    pub fn running_var(&self) -> &[f64] {
        &self.running_var
    }

    pub fn grad_gamma(&self) -> &[f64] {
        &self.grad_gamma
    }

    pub fn grad_beta(&self) -> &[f64] {
        &self.grad_beta
    }

    pub fn set_affine(&mut self, gamma: Vec<f64>, beta: Vec<f64>) -> Result<()> {
        if gamma.len() != self.features || beta.len() != self.features {
            return Err(Error::shape(
                "BatchNorm::set_affine",
                format!("{} features", self.features),
                format!("gamma {} / beta {}", gamma.len(), beta.len()),
            ));
        }
        self.gamma = gamma;
        self.beta = beta;
        Ok(())
    }

    pub fn is_training(&self) -> bool {
        self.training
    }

    pub fn set_training(&mut self, training: bool) {
        self.training = training;
    }

    fn check(&self, x: &Matrix) -> Result<()> {
        if x.rows() != self.features {
            return Err(Error::shape(
                "BatchNorm::forward",
                format!("{} features", self.features),
                x.shape_str(),
            ));
        }
        Ok(())
    }

    fn batch_stats(&self, x: &Matrix) -> Result<(Vec<f64>, Vec<f64>)> {
        if x.cols() < 2 {
            return Err(Error::InvalidArgument(format!(
                "batch norm in training mode needs a batch of at least 2, got {}",
                x.cols()
            )));
        }
        let n = x.cols() as f64;
        let mut mean = vec![0.0; self.features];
        let mut var = vec![0.0; self.features];
        for f in 0..self.features {
            let row = x.row(f);
            let m = row.iter().sum::<f64>() / n;
            mean[f] = m;
            var[f] = row.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
        }
        Ok((mean, var))
    }

    fn normalize(&self, x: &Matrix, mean: &[f64], var: &[f64]) -> (Matrix, Matrix, Vec<f64>) {
        let mut x_hat = x.clone();
        let mut y = x.clone();
        let mut inv_std = vec![0.0; self.features];
        for f in 0..self.features {
            let is = 1.0 / (var[f] + self.eps).sqrt();
            inv_std[f] = is;
            let (g, b, m) = (self.gamma[f], self.beta[f], mean[f]);
            for (h, yv) in x_hat.row_mut(f).iter_mut().zip(y.row_mut(f)) {
                *h = (*h - m) * is;
                *yv = g * *h + b;
            }
        }
        (x_hat, y, inv_std)
    }

    pub fn forward(&mut self, x: &Matrix) -> Result<Matrix> {
        self.check(x)?;
        if self.training {
            let (mean, var) = self.batch_stats(x)?;
            let (x_hat, y, inv_std) = self.normalize(x, &mean, &var);
            let mo = self.momentum;
            for f in 0..self.features {
                self.running_mean[f] = (1.0 - mo) * self.running_mean[f] + mo * mean[f];
                self.running_var[f] = (1.0 - mo) * self.running_var[f] + mo * var[f];
            }
            self.cache = Some(Cache {
                x_hat,
                inv_std,
                batch_stats: true,
            });
            Ok(y)
        } else {
            let (x_hat, y, inv_std) = self.normalize(x, &self.running_mean, &self.running_var);
            self.cache = Some(Cache {
                x_hat,
                inv_std,
                batch_stats: false,
            });
            Ok(y)
        }
    }

    /// Evaluation-mode output; depends only on `x` and the stored statistics.
    pub fn infer(&self, x: &Matrix) -> Result<Matrix> {
        self.check(x)?;
        Ok(self.normalize(x, &self.running_mean, &self.running_var).1)
    }

    /// Training-mode output without touching the running statistics.
    pub fn infer_batch(&self, x: &Matrix) -> Result<Matrix> {
        self.check(x)?;
        let (mean, var) = self.batch_stats(x)?;
        Ok(self.normalize(x, &mean, &var).1)
    }

    pub fn backward(&mut self, grad_y: &Matrix) -> Result<Matrix> {
        let cache = self
            .cache
            .as_ref()
            .ok_or(Error::NoForwardCache("batchnorm"))?;
        cache
            .x_hat
            .check_same_shape("BatchNorm::backward", grad_y)?;
        let n = grad_y.cols() as f64;
        let mut grad_x = Matrix::zeros(grad_y.rows(), grad_y.cols());
        for f in 0..self.features {
            let dy = grad_y.row(f);
            let xh = cache.x_hat.row(f);
            let sum_dy: f64 = dy.iter().sum();
            let sum_dy_xh: f64 = dy.iter().zip(xh).map(|(a, b)| a * b).sum();
            self.grad_beta[f] += sum_dy;
            self.grad_gamma[f] += sum_dy_xh;
            let scale = self.gamma[f] * cache.inv_std[f];
            let out = grad_x.row_mut(f);
            if cache.batch_stats {
                let (mdy, mdyx) = (sum_dy / n, sum_dy_xh / n);
                for ((o, &d), &h) in out.iter_mut().zip(dy).zip(xh) {
                    *o = scale * (d - mdy - h * mdyx);
                }
            } else {
                for (o, &d) in out.iter_mut().zip(dy) {
                    *o = scale * d;
                }
            }
        }
        Ok(grad_x)
    }

    pub fn zero_grad(&mut self) {
        self.grad_gamma.iter_mut().for_each(|g| *g = 0.0);
        self.grad_beta.iter_mut().for_each(|g| *g = 0.0);
    }

    pub(crate) fn params(&mut self) -> Vec<ParamSlot<'_>> {
        vec![
            ParamSlot {
                kind: ParamKind::Scale,
                value: &mut self.gamma,
                grad: &self.grad_gamma,
            },
            ParamSlot {
                kind: ParamKind::Shift,
                value: &mut self.beta,
                grad: &self.grad_beta,
            },
        ]
    }
}
