use serde::{Deserialize, Serialize};

use super::dataset::{normalize_splits, Dataset};
use crate::error::{Error, Result};
use crate::linalg::Rng;

/// Gaussian blobs: class `k` is centred at `(separation / √2) e_k`, so any
/// two centres are `separation` apart, with unit-variance isotropic noise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub classes: usize,
    pub dim: usize,
    pub train_samples: usize,
    #[serde(default)]
    pub test_samples: usize,
    pub separation: f64,
}

impl SyntheticSpec {
    fn validate(&self) -> Result<()> {
        if self.classes < 2 || self.dim < self.classes {
            return Err(Error::InvalidArgument(format!(
                "synthetic blobs need 2 <= classes <= dim, got {} classes in {} dims",
                self.classes, self.dim
            )));
        }
        if self.train_samples == 0 || !(self.separation >= 0.0) || !self.separation.is_finite() {
            return Err(Error::InvalidArgument(
                "synthetic blobs need train_samples > 0 and a finite separation >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// `n` samples with labels cycling through the classes.
pub fn make_blobs(spec: &SyntheticSpec, n: usize, rng: &mut Rng) -> Result<Dataset> {
    spec.validate()?;
    let offset = spec.separation / std::f64::consts::SQRT_2;
    let mut inputs = Vec::with_capacity(n * spec.dim);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let label = i % spec.classes;
        for f in 0..spec.dim {
            let centre = if f == label { offset } else { 0.0 };
            inputs.push(centre + rng.normal());
        }
        labels.push(label);
    }
    Dataset::new(spec.dim, spec.classes, inputs, labels)
}

/// Unnormalized training set drawn from `rng`.
pub fn make_synthetic(spec: &SyntheticSpec, rng: &mut Rng) -> Result<Dataset> {
    make_blobs(spec, spec.train_samples, rng)
}

/// Train and test splits from independent streams of `seed`, normalized with
/// training statistics. An empty test split is replaced by one sample per class.
pub fn make_synthetic_split(spec: &SyntheticSpec, seed: u64) -> Result<(Dataset, Dataset)> {
    let root = Rng::new(seed);
    let mut train = make_blobs(spec, spec.train_samples, &mut root.fork(10))?;
    let mut test = make_blobs(
        spec,
        spec.test_samples.max(spec.classes),
        &mut root.fork(11),
    )?;
    normalize_splits(&mut train, &mut test)?;
    Ok((train, test))
}
