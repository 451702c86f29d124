use serde::Serialize;

use super::Moments;
use crate::error::{Error, Result};
use crate::linalg::Rng;
use crate::nn::ActivationKind;

pub const MIN_PHI_SAMPLES: usize = 100_000;

/// `(1 − 1/π) / 2`, the ReLU forward rate.
pub const RELU_PHI_FW: f64 = (1.0 - std::f64::consts::FRAC_1_PI) / 2.0;
pub const RELU_PHI_BW: f64 = 0.5;

/// Reference sigmoid rates as `(σ̂, φ_fw, φ_bw)`.
pub const SIGMOID_PHI_TABLE: [(f64, f64, f64); 3] = [
    (0.5, 0.236, 0.237),
    (1.0, 0.208, 0.211),
    (2.0, 0.157, 0.170),
];

/// Monte Carlo estimate of the variance rates of an activation layer.
#[derive(Clone, Debug, Serialize)]
pub struct PhiEstimate {
    pub activation: ActivationKind,
    pub sigma: f64,
    pub samples: usize,
    /// `V(f(z)) / σ²`.
    pub phi_fw: f64,
    /// `V(f′(z) ∇a) / V(∇a)` with `∇a ~ N(0, 1)`.
    pub phi_bw: f64,
    pub se_fw: f64,
    pub se_bw: f64,
}

impl PhiEstimate {
    /// `√φ_fw`, the ratio of standard deviations.
    pub fn std_ratio_fw(&self) -> f64 {
        self.phi_fw.sqrt()
    }

    pub fn std_ratio_bw(&self) -> f64 {
        self.phi_bw.sqrt()
    }
}

/// Estimates `φ_fw` and `φ_bw` for `z ~ N(0, σ²)` and an independent
/// `∇a ~ N(0, 1)`.
pub fn measure_phi(
    activation: ActivationKind,
    sigma: f64,
    n: usize,
    rng: &mut Rng,
) -> Result<PhiEstimate> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    if n < MIN_PHI_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "measure_phi needs at least {MIN_PHI_SAMPLES} samples, got {n}"
        )));
    }
    let (mut fw, mut bw) = (Moments::new(), Moments::new());
    for _ in 0..n {
        let z = sigma * rng.normal();
        let g = rng.normal();
        fw.push(activation.apply(z));
        bw.push(activation.derivative(z) * g);
    }
    let s2 = sigma * sigma;
    Ok(PhiEstimate {
        activation,
        sigma,
        samples: n,
        phi_fw: fw.variance() / s2,
        phi_bw: bw.variance(),
        se_fw: fw.variance_se() / s2,
        se_bw: bw.variance_se(),
    })
}
