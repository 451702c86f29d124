use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Per-group mean and standard deviation. A group is one channel for image
/// data and one feature otherwise.
#[derive(Clone, Debug, PartialEq)]
pub struct Normalization {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// Labelled samples stored sample-major.
#[derive(Clone, Debug)]
pub struct Dataset {
    features: usize,
    classes: usize,
    /// `(channels, height, width)` for image data.
    image: Option<[usize; 3]>,
    inputs: Vec<f64>,
    labels: Vec<usize>,
    normalization: Option<Normalization>,
}

impl Dataset {
    pub fn new(
        features: usize,
        classes: usize,
        inputs: Vec<f64>,
        labels: Vec<usize>,
    ) -> Result<Self> {
        if features == 0 || inputs.len() != features * labels.len() {
            return Err(Error::shape(
                "Dataset::new",
                format!("{} samples of {features} features", labels.len()),
                format!("{} values", inputs.len()),
            ));
        }
        if let Some(&label) = labels.iter().find(|&&l| l >= classes) {
            return Err(Error::LabelOutOfRange { label, classes });
        }
        if inputs.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite dataset value".into()));
        }
        Ok(Dataset {
            features,
            classes,
            image: None,
            inputs,
            labels,
            normalization: None,
        })
    }

    /// Marks the samples as `c × h × w` images (channel-major).
    pub fn with_image_shape(mut self, shape: [usize; 3]) -> Result<Self> {
        if shape.iter().product::<usize>() != self.features {
            return Err(Error::shape(
                "Dataset::with_image_shape",
                format!("{} features", self.features),
                format!("{shape:?}"),
            ));
        }
        self.image = Some(shape);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn features(&self) -> usize {
        self.features
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn image_shape(&self) -> Option<[usize; 3]> {
        self.image
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.features..(i + 1) * self.features]
    }

    pub fn normalization(&self) -> Option<&Normalization> {
        self.normalization.as_ref()
    }

    /// Gathers the indexed samples into a feature-major batch.
    pub fn batch(&self, indices: &[usize]) -> (Matrix, Vec<usize>) {
        let n = indices.len();
        let mut x = Matrix::zeros(self.features, n);
        let data = x.as_mut_slice();
        for (s, &i) in indices.iter().enumerate() {
            for (f, &v) in self.sample(i).iter().enumerate() {
                data[f * n + s] = v;
            }
        }
        (x, indices.iter().map(|&i| self.labels[i]).collect())
    }

    /// Every sample, in order.
    pub fn all(&self) -> (Matrix, Vec<usize>) {
        self.batch(&(0..self.len()).collect::<Vec<_>>())
    }

    /// Number of normalization groups and the features per group.
    fn groups(&self) -> (usize, usize) {
        match self.image {
            Some([c, h, w]) => (c, h * w),
            None => (self.features, 1),
        }
    }

    /// Per-group mean and population standard deviation over all samples.
    pub fn fit_normalization(&self) -> Result<Normalization> {
        if self.is_empty() {
            return Err(Error::Empty("Dataset::fit_normalization"));
        }
        let (groups, per) = self.groups();
        let count = (self.len() * per) as f64;
        let mut mean = vec![0.0; groups];
        let mut std = vec![0.0; groups];
        for s in 0..self.len() {
            for (g, chunk) in self.sample(s).chunks(per).enumerate() {
                mean[g] += chunk.iter().sum::<f64>();
            }
        }
        mean.iter_mut().for_each(|m| *m /= count);
        for s in 0..self.len() {
            for (g, chunk) in self.sample(s).chunks(per).enumerate() {
                std[g] += chunk
                    .iter()
                    .map(|v| (v - mean[g]) * (v - mean[g]))
                    .sum::<f64>();
            }
        }
        std.iter_mut().for_each(|v| *v = (*v / count).sqrt());
        Ok(Normalization { mean, std })
    }

    /// Applies `(x − mean) / std` per group. Fails if already normalized.
    /// Groups with zero spread are only centred.
    pub fn normalize(&mut self, norm: &Normalization) -> Result<()> {
        if self.normalization.is_some() {
            return Err(Error::InvalidArgument(
                "dataset is already normalized".into(),
            ));
        }
        let (groups, per) = self.groups();
        if norm.mean.len() != groups || norm.std.len() != groups {
            return Err(Error::shape(
                "Dataset::normalize",
                format!("{groups} groups"),
                format!("{} means / {} stds", norm.mean.len(), norm.std.len()),
            ));
        }
        for sample in self.inputs.chunks_mut(self.features) {
            for (g, chunk) in sample.chunks_mut(per).enumerate() {
                let inv = if norm.std[g] > 0.0 {
                    1.0 / norm.std[g]
                } else {
                    1.0
                };
                chunk
                    .iter_mut()
                    .for_each(|v| *v = (*v - norm.mean[g]) * inv);
            }
        }
        self.normalization = Some(norm.clone());
        Ok(())
    }
}

/// Normalizes both splits with statistics fitted on `train`.
pub fn normalize_splits(train: &mut Dataset, test: &mut Dataset) -> Result<Normalization> {
    let norm = train.fit_normalization()?;
    train.normalize(&norm)?;
    test.normalize(&norm)?;
    Ok(norm)
}
