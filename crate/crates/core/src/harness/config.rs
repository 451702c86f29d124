//! JSON experiment configuration.
//!
//! ```json
//! {
//!   "epochs": 30,
//!   "batch_size": 128,
//!   "lr": { "initial": 0.1, "decay": 0.95, "every": 1, "floor": 0.001 },
//!   "momentum": 0.9,
//!   "weight_decay": 0.0001,
//!   "seed": 1,
//!   "init": "minibatch_rescale",
//!   "model": { "mlp": { "input_dim": 128, "depth": 15, "width": 64, "classes": 10, "lcw": true } },
//!   "data": { "synthetic": { "classes": 10, "dim": 128, "train_samples": 5000,
//!                            "test_samples": 1000, "separation": 4.0 } },
//!   "augment": false
//! }
//! ```
//!
//! Every field except `model` and `data` has a default. `data` may instead be
//! `{ "cifar": { "variant": "cifar10", "dir": "/path" } }`; without `dir` the
//! `LCW_DATA_DIR` environment variable is used. `model` may instead be
//! `{ "layers": { "input": [3, 32, 32], "layers": [ ... ] } }` with entries
//! such as `{ "type": "conv2d", "out_channels": 16, "kernel": 3, "padding": 1, "lcw": true }`,
//! `{ "type": "dense", "units": 10 }`, `{ "type": "activation", "kind": "relu" }`
//! and `{ "type": "batchnorm" }`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::cifar::{load_cifar, resolve_data_dir, CifarVariant, CIFAR10_RECORDS_PER_FILE};
use super::dataset::Dataset;
use super::optim::LrSchedule;
use super::synthetic::{make_synthetic_split, SyntheticSpec};
use crate::error::{Error, Result};
use crate::init::InitScheme;
use crate::nn::{
    Activation, ActivationKind, BatchNorm, Conv2d, ConvGeometry, Dense, Layer, MlpSpec, Network,
    Parameterization,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    #[serde(default = "defaults::epochs")]
    pub epochs: usize,
    #[serde(default = "defaults::batch_size")]
    pub batch_size: usize,
    #[serde(default)]
    pub lr: LrSchedule,
    #[serde(default = "defaults::momentum")]
    pub momentum: f64,
    #[serde(default = "defaults::weight_decay")]
    pub weight_decay: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub init: InitScheme,
    pub model: ModelSpec,
    pub data: DataSource,
    #[serde(default)]
    pub augment: bool,
}

mod defaults {
    pub fn epochs() -> usize {
        100
    }
    pub fn batch_size() -> usize {
        128
    }
    pub fn momentum() -> f64 {
        0.9
    }
    pub fn weight_decay() -> f64 {
        1e-4
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum ModelSpec {
    Mlp(MlpSpec),
    Layers(LayerList),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerList {
    /// `[channels, height, width]`, or `[features]` for flat inputs.
    pub input: Vec<usize>,
    pub layers: Vec<LayerSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum LayerSpec {
    Dense {
        units: usize,
        #[serde(default)]
        lcw: bool,
    },
    Conv2d {
        out_channels: usize,
        kernel: usize,
        #[serde(default = "one")]
        stride: usize,
        #[serde(default)]
        padding: usize,
        #[serde(default)]
        lcw: bool,
    },
    Activation {
        kind: ActivationKind,
    },
    Batchnorm,
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum DataSource {
    Synthetic(SyntheticSpec),
    Cifar(CifarSource),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CifarSource {
    pub variant: CifarVariant,
    #[serde(default)]
    pub dir: Option<PathBuf>,
}

fn mode(lcw: bool) -> Parameterization {
    if lcw {
        Parameterization::Lcw
    } else {
        Parameterization::Standard
    }
}

impl ModelSpec {
    pub fn build(&self) -> Result<Network> {
        match self {
            ModelSpec::Mlp(spec) => spec.build(),
            ModelSpec::Layers(list) => list.build(),
        }
    }

    pub fn has_batchnorm(&self) -> bool {
        match self {
            ModelSpec::Mlp(spec) => spec.batchnorm,
            ModelSpec::Layers(list) => list
                .layers
                .iter()
                .any(|l| matches!(l, LayerSpec::Batchnorm)),
        }
    }
}

impl LayerList {
    pub fn build(&self) -> Result<Network> {
        // (channels, height, width); flat inputs are (features, 1, 1)
        let mut shape = match self.input.as_slice() {
            &[f] => (f, 1, 1),
            &[c, h, w] => (c, h, w),
            other => {
                return Err(Error::Config(format!(
                    "input must be [features] or [c, h, w], got {other:?}"
                )))
            }
        };
        let inputs = shape.0 * shape.1 * shape.2;
        let mut layers: Vec<Layer> = Vec::with_capacity(self.layers.len());
        for spec in &self.layers {
            let features = shape.0 * shape.1 * shape.2;
            match *spec {
                LayerSpec::Dense { units, lcw } => {
                    layers.push(Dense::new(features, units, mode(lcw))?.into());
                    shape = (units, 1, 1);
                }
                LayerSpec::Conv2d {
                    out_channels,
                    kernel,
                    stride,
                    padding,
                    lcw,
                } => {
                    let geom = ConvGeometry {
                        in_channels: shape.0,
                        out_channels,
                        kernel_h: kernel,
                        kernel_w: kernel,
                        stride,
                        padding,
                        in_h: shape.1,
                        in_w: shape.2,
                    };
                    let conv = Conv2d::new(geom, mode(lcw))?;
                    shape = (out_channels, geom.out_h(), geom.out_w());
                    layers.push(conv.into());
                }
                LayerSpec::Activation { kind } => layers.push(Activation::new(kind).into()),
                LayerSpec::Batchnorm => layers.push(BatchNorm::new(features).into()),
            }
        }
        Network::new(inputs, layers)
    }
}

impl DataSource {
    /// Loads and normalizes the train and test splits. Synthetic data is
    /// drawn from `seed`.
    pub fn load(&self, seed: u64) -> Result<(Dataset, Dataset)> {
        match self {
            DataSource::Synthetic(spec) => make_synthetic_split(spec, seed),
            DataSource::Cifar(src) => {
                let dir = resolve_data_dir(src.dir.as_deref())?;
                if !dir.is_dir() {
                    return Err(Error::Config(format!(
                        "dataset directory {} does not exist",
                        dir.display()
                    )));
                }
                load_cifar(&dir, src.variant, CIFAR10_RECORDS_PER_FILE)
            }
        }
    }
}

impl TrainConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: TrainConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.lr.validate()?;
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config(
                "epochs and batch_size must be positive".into(),
            ));
        }
        if !(self.momentum >= 0.0 && self.momentum < 1.0) || !(self.weight_decay >= 0.0) {
            return Err(Error::Config(
                "momentum must be in [0, 1) and weight_decay >= 0".into(),
            ));
        }
        if self.model.has_batchnorm() && self.batch_size < 2 {
            return Err(Error::Config(
                "batch_size must be at least 2 with batch norm".into(),
            ));
        }
        Ok(())
    }
}
