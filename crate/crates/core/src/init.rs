//! Weight initialization.
//!
//! [`glorot_init`] draws `U(-a, a)` with `a = √(6 / (fan_in + fan_out))`.
//! [`minibatch_rescale_init`] draws raw weights from `U(-1, 1)` and then, layer
//! by layer in forward order, divides each layer's weights by the standard
//! deviation of its preactivation on a reference batch, so every layer starts
//! with unit preactivation variance on that batch.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{mean_variance, rand_uniform, Matrix, Rng, Tensor4};
use crate::nn::{Layer, Network, ParamKind, Parameterization};

/// Smallest batch accepted by [`minibatch_rescale_init`].
pub const MIN_INIT_BATCH: usize = 32;

/// Preactivation std below which the init batch is considered degenerate.
pub const DEGENERATE_STD: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitScheme {
    GlorotUniform,
    #[default]
    MinibatchRescale,
}

/// Initialization settings; the reference batch is supplied separately.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InitSpec {
    pub scheme: InitScheme,
    pub seed: u64,
}

impl InitSpec {
    /// Runs the configured scheme. `batch` is required for
    /// [`InitScheme::MinibatchRescale`].
    pub fn apply(&self, net: &mut Network, batch: Option<&Matrix>) -> Result<()> {
        let mut rng = Rng::new(self.seed);
        match self.scheme {
            InitScheme::GlorotUniform => glorot_init(net, &mut rng),
            InitScheme::MinibatchRescale => {
                let batch = batch.ok_or_else(|| {
                    Error::InvalidArgument("minibatch_rescale needs a reference batch".into())
                })?;
                minibatch_rescale_init(net, batch, &mut rng)
            }
        }
    }
}

/// `(fan_in, fan_out)` of a dense or conv layer.
pub fn fans(layer: &Layer) -> Option<(usize, usize)> {
    match layer {
        Layer::Dense(d) => Some((d.in_features(), d.out_features())),
        Layer::Conv2d(c) => {
            let g = c.geometry();
            let k = g.kernel_h * g.kernel_w;
            Some((g.in_channels * k, g.out_channels * k))
        }
        _ => None,
    }
}

/// Glorot bound `√(6 / (fan_in + fan_out))`.
pub fn glorot_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

/// Glorot-uniform weights and zero bias for one layer. In LCW mode the drawn
/// weights are projected onto the zero-sum subspace. Other layers are left
/// untouched.
pub fn glorot_init_layer(layer: &mut Layer, rng: &mut Rng) -> Result<()> {
    let Some((fan_in, fan_out)) = fans(layer) else {
        return Ok(());
    };
    let a = glorot_bound(fan_in, fan_out);
    match layer {
        Layer::Dense(d) => {
            let w = rand_uniform(rng, -a, a, d.out_features(), d.in_features())?;
            d.set_weights(&w)?;
            d.set_bias(vec![0.0; d.out_features()])
        }
        Layer::Conv2d(c) => {
            let g = *c.geometry();
            let dims = [g.out_channels, g.in_channels, g.kernel_h, g.kernel_w];
            let w = rand_uniform(rng, -a, a, 1, dims.iter().product())?;
            c.set_kernels(&Tensor4::from_vec(dims, w.into_vec())?)?;
            c.set_bias(vec![0.0; g.out_channels])
        }
        _ => Ok(()),
    }
}

pub fn glorot_init(net: &mut Network, rng: &mut Rng) -> Result<()> {
    for layer in net.layers_mut() {
        glorot_init_layer(layer, rng)?;
    }
    Ok(())
}

/// Fills the trainable weight (`W`, or `V` in LCW mode) with `U(-1, 1)` and
/// zeroes the bias.
fn draw_raw(layer: &mut Layer, rng: &mut Rng) {
    for slot in layer.params() {
        match slot.kind {
            ParamKind::Weight => slot
                .value
                .iter_mut()
                .for_each(|v| *v = rng.uniform_range(-1.0, 1.0)),
            ParamKind::Bias => slot.value.iter_mut().for_each(|v| *v = 0.0),
            _ => {}
        }
    }
    layer.sync();
}

/// Population standard deviation over every entry of `z`.
pub fn preactivation_std(z: &Matrix) -> f64 {
    mean_variance(z.as_slice()).1.sqrt()
}

/// Minibatch variance-preserving initialization.
///
/// `batch` is feature-major with at least [`MIN_INIT_BATCH`] columns. Batch
/// norm layers are evaluated with batch statistics and are not modified.
pub fn minibatch_rescale_init(net: &mut Network, batch: &Matrix, rng: &mut Rng) -> Result<()> {
    if batch.cols() < MIN_INIT_BATCH {
        return Err(Error::InvalidArgument(format!(
            "minibatch_rescale needs at least {MIN_INIT_BATCH} samples, got {}",
            batch.cols()
        )));
    }
    if batch.rows() != net.input_features() {
        return Err(Error::shape(
            "minibatch_rescale_init",
            format!("{} input features", net.input_features()),
            batch.shape_str(),
        ));
    }
    let mut h = batch.clone();
    for (i, layer) in net.layers_mut().iter_mut().enumerate() {
        if layer.is_linear() {
            draw_raw(layer, rng);
            let s = preactivation_std(&layer.infer(&h)?);
            if !(s >= DEGENERATE_STD) {
                return Err(Error::DegenerateBatch { layer: i, std: s });
            }
            layer.scale_weights(1.0 / s);
            h = layer.infer(&h)?;
        } else {
            h = layer.infer_batch(&h)?;
        }
    }
    Ok(())
}

/// True when every dense and conv layer of `net` is in LCW mode.
pub fn all_lcw(net: &Network) -> bool {
    net.layers().iter().all(|l| match l {
        Layer::Dense(d) => d.mode() == Parameterization::Lcw,
        Layer::Conv2d(c) => c.mode() == Parameterization::Lcw,
        _ => true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{rand_normal, summarize};
    use crate::nn::{ActivationKind, Dense, MlpSpec};

    fn probe(rng: &mut Rng, dim: usize, n: usize) -> Matrix {
        rand_normal(rng, 0.3, 1.0, dim, n).unwrap()
    }

    fn preactivation_stds(net: &mut Network, x: &Matrix) -> Vec<f64> {
        let outs = net.forward_traced(x).unwrap();
        net.linear_layers()
            .iter()
            .map(|&i| preactivation_std(&outs[i]))
            .collect()
    }

    #[test]
    fn glorot_bound_and_support() {
        assert_eq!(glorot_bound(3, 3), 1.0);
        let mut layer: Layer = Dense::new(300, 300, Parameterization::Standard)
            .unwrap()
            .into();
        glorot_init_layer(&mut layer, &mut Rng::new(1)).unwrap();
        let Layer::Dense(d) = &layer else {
            unreachable!()
        };
        let a = glorot_bound(300, 300);
        assert!(d.weight().as_slice().iter().all(|w| w.abs() < a));
        assert!(d.bias().iter().all(|&b| b == 0.0));
        let s = summarize(d.weight().as_slice()).unwrap();
        assert!(
            (s.variance / (a * a / 3.0) - 1.0).abs() < 0.05,
            "{}",
            s.variance
        );
    }

    #[test]
    fn rescale_gives_unit_preactivation_std() {
        let mut rng = Rng::new(4);
        let x = probe(&mut rng, 16, 64);
        for lcw in [false, true] {
            for bn in [false, true] {
                let mut net = MlpSpec::new(16, 6, 12, 5)
                    .with_lcw(lcw)
                    .with_batchnorm(bn)
                    .build()
                    .unwrap();
                minibatch_rescale_init(&mut net, &x, &mut rng).unwrap();
                for s in preactivation_stds(&mut net, &x) {
                    assert!((s - 1.0).abs() < 1e-6, "lcw={lcw} bn={bn}: {s}");
                }
                if lcw {
                    assert!(net.max_weight_sum() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn rescale_keeps_direction_and_scales_linearly() {
        let mut rng = Rng::new(5);
        let x = probe(&mut rng, 8, 40);
        let mut net = MlpSpec::new(8, 2, 6, 3).build().unwrap();
        minibatch_rescale_init(&mut net, &x, &mut Rng::new(9)).unwrap();
        let mut raw = net.clone();
        draw_raw(&mut raw.layers_mut()[0], &mut Rng::new(9));
        let (Layer::Dense(a), Layer::Dense(b)) = (&net.layers()[0], &raw.layers()[0]) else {
            unreachable!()
        };
        let (wa, wb) = (a.weight().as_slice(), b.weight().as_slice());
        let dot: f64 = wa.iter().zip(wb).map(|(p, q)| p * q).sum();
        let na = wa.iter().map(|p| p * p).sum::<f64>().sqrt();
        let nb = wb.iter().map(|p| p * p).sum::<f64>().sqrt();
        assert!((dot / (na * nb) - 1.0).abs() < 1e-12);

        let layer = &mut net.layers_mut()[0];
        let before = preactivation_std(&layer.infer(&x).unwrap());
        layer.scale_weights(2.5);
        let after = preactivation_std(&layer.infer(&x).unwrap());
        assert!((after / before - 2.5).abs() < 1e-12);
    }

    #[test]
    fn deep_sigmoid_lcw_preserves_variance() {
        let mut rng = Rng::new(6);
        let x = probe(&mut rng, 64, 100);
        let mut net = MlpSpec::new(64, 20, 64, 10).with_lcw(true).build().unwrap();
        minibatch_rescale_init(&mut net, &x, &mut rng).unwrap();
        let outs = net.forward_traced(&x).unwrap();
        for i in net.linear_layers() {
            let v = mean_variance(outs[i].as_slice()).1;
            assert!((v - 1.0).abs() < 1e-6, "layer {i}: {v}");
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let x = probe(&mut Rng::new(7), 10, 32);
        let spec = InitSpec {
            scheme: InitScheme::MinibatchRescale,
            seed: 3,
        };
        let mut a = MlpSpec::new(10, 4, 8, 3).with_lcw(true).build().unwrap();
        let mut b = a.clone();
        spec.apply(&mut a, Some(&x)).unwrap();
        spec.apply(&mut b, Some(&x)).unwrap();
        assert_eq!(a.param_values(), b.param_values());
    }

    #[test]
    fn bad_batches_rejected() {
        let mut net = MlpSpec::new(4, 3, 5, 2).build().unwrap();
        let mut rng = Rng::new(8);
        assert!(minibatch_rescale_init(&mut net, &Matrix::zeros(4, 8), &mut rng).is_err());
        let err = minibatch_rescale_init(&mut net, &Matrix::zeros(4, 32), &mut rng).unwrap_err();
        assert!(
            matches!(err, Error::DegenerateBatch { layer: 0, .. }),
            "{err}"
        );
        assert!(InitSpec {
            scheme: InitScheme::MinibatchRescale,
            seed: 0
        }
        .apply(&mut net, None)
        .is_err());
    }

    #[test]
    fn lcw_on_constant_batch_is_degenerate() {
        let mut net = MlpSpec::new(6, 2, 4, 2)
            .with_lcw(true)
            .with_activation(ActivationKind::Relu)
            .build()
            .unwrap();
        let x = Matrix::filled(6, 40, 0.7);
        assert!(matches!(
            minibatch_rescale_init(&mut net, &x, &mut Rng::new(1)),
            Err(Error::DegenerateBatch { layer: 0, .. })
        ));
    }
}
