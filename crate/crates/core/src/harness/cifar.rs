//! Reader for the CIFAR binary distribution.
//!
//! Each record is the label byte(s) followed by 3072 pixel bytes: 1024 red,
//! then 1024 green, then 1024 blue, each a row-major 32×32 plane. CIFAR-10
//! records carry one label byte; CIFAR-100 records carry a coarse and a fine
//! label byte, and the fine label is used. Pixels are scaled to `[0, 1]`
//! before channel normalization.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::dataset::{normalize_splits, Dataset};
use crate::error::{Error, Result};

pub const IMAGE_SHAPE: [usize; 3] = [3, 32, 32];
pub const PIXELS: usize = 3 * 32 * 32;
pub const CIFAR10_RECORDS_PER_FILE: usize = 10_000;

/// Environment variable consulted when no data directory is configured.
pub const DATA_DIR_ENV: &str = "LCW_DATA_DIR";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CifarVariant {
    Cifar10,
    Cifar100,
}

impl CifarVariant {
    pub fn label_bytes(self) -> usize {
        match self {
            CifarVariant::Cifar10 => 1,
            CifarVariant::Cifar100 => 2,
        }
    }

    pub fn classes(self) -> usize {
        match self {
            CifarVariant::Cifar10 => 10,
            CifarVariant::Cifar100 => 100,
        }
    }

    pub fn record_len(self) -> usize {
        self.label_bytes() + PIXELS
    }

    /// `(file name, number of record blocks)` for the training split, and the
    /// test file name. Each block is `records_per_file` records.
    fn files(self) -> (Vec<(String, usize)>, &'static str) {
        match self {
            CifarVariant::Cifar10 => (
                (1..=5)
                    .map(|i| (format!("data_batch_{i}.bin"), 1))
                    .collect(),
                "test_batch.bin",
            ),
            CifarVariant::Cifar100 => (vec![("train.bin".to_string(), 5)], "test.bin"),
        }
    }
}

/// The configured directory, else the [`DATA_DIR_ENV`] variable.
pub fn resolve_data_dir(configured: Option<&Path>) -> Result<PathBuf> {
    if let Some(p) = configured {
        return Ok(p.to_path_buf());
    }
    std::env::var_os(DATA_DIR_ENV)
        .map(PathBuf::from)
        .ok_or_else(|| {
            Error::Config(format!(
                "no dataset directory given and {DATA_DIR_ENV} is unset"
            ))
        })
}

/// Parses `records` records from `bytes`, which were read from `path`.
pub fn parse_records(
    path: &Path,
    bytes: &[u8],
    variant: CifarVariant,
    records: usize,
) -> Result<(Vec<f64>, Vec<usize>)> {
    let rec = variant.record_len();
    let want = records * rec;
    if bytes.len() != want {
        let offset = bytes.len().min(want) / rec * rec;
        return Err(Error::Format {
            path: path.to_path_buf(),
            offset: offset as u64,
            reason: format!(
                "expected {want} bytes ({records} records of {rec}), found {}",
                bytes.len()
            ),
        });
    }
    let mut inputs = Vec::with_capacity(records * PIXELS);
    let mut labels = Vec::with_capacity(records);
    let classes = variant.classes();
    for (r, chunk) in bytes.chunks_exact(rec).enumerate() {
        let label_at = variant.label_bytes() - 1;
        let label = chunk[label_at] as usize;
        if label >= classes {
            return Err(Error::Format {
                path: path.to_path_buf(),
                offset: (r * rec + label_at) as u64,
                reason: format!("label {label} out of range for {classes} classes"),
            });
        }
        labels.push(label);
        inputs.extend(
            chunk[variant.label_bytes()..]
                .iter()
                .map(|&p| p as f64 / 255.0),
        );
    }
    Ok((inputs, labels))
}

fn read_file(
    dir: &Path,
    name: &str,
    variant: CifarVariant,
    records: usize,
) -> Result<(Vec<f64>, Vec<usize>)> {
    let path = dir.join(name);
    let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
    parse_records(&path, &bytes, variant, records)
}

/// Loads and normalizes both splits. `records_per_file` is
/// [`CIFAR10_RECORDS_PER_FILE`] for the official files.
pub fn load_cifar(
    dir: &Path,
    variant: CifarVariant,
    records_per_file: usize,
) -> Result<(Dataset, Dataset)> {
    let (train_files, test_file) = variant.files();
    let (mut inputs, mut labels) = (Vec::new(), Vec::new());
    for (name, blocks) in &train_files {
        let (x, y) = read_file(dir, name, variant, blocks * records_per_file)?;
        inputs.extend(x);
        labels.extend(y);
    }
    let classes = variant.classes();
    let mut train = Dataset::new(PIXELS, classes, inputs, labels)?.with_image_shape(IMAGE_SHAPE)?;
    let (x, y) = read_file(dir, test_file, variant, records_per_file)?;
    let mut test = Dataset::new(PIXELS, classes, x, y)?.with_image_shape(IMAGE_SHAPE)?;
    normalize_splits(&mut train, &mut test)?;
    Ok((train, test))
}

/// The five training batches and the test batch of CIFAR-10.
pub fn load_cifar10(dir: &Path) -> Result<(Dataset, Dataset)> {
    load_cifar(dir, CifarVariant::Cifar10, CIFAR10_RECORDS_PER_FILE)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(label: u8, fill: u8) -> Vec<u8> {
        let mut r = vec![label];
        r.extend(std::iter::repeat_n(fill, PIXELS));
        r
    }

    #[test]
    fn record_arithmetic() {
        assert_eq!(CifarVariant::Cifar10.record_len(), 3073);
        assert_eq!(
            CIFAR10_RECORDS_PER_FILE * CifarVariant::Cifar10.record_len(),
            30_730_000
        );
        assert_eq!(CifarVariant::Cifar100.record_len(), 3074);
    }

    #[test]
    fn parses_layout() {
        let mut bytes = record(7, 255);
        bytes.extend(record(0, 0));
        bytes[1 + 1024] = 51; // first green pixel of record 0
        let (x, y) = parse_records(Path::new("f.bin"), &bytes, CifarVariant::Cifar10, 2).unwrap();
        assert_eq!(y, vec![7, 0]);
        assert_eq!(x.len(), 2 * PIXELS);
        assert_eq!(x[0], 1.0);
        assert_eq!(x[1024], 0.2);
        assert_eq!(x[PIXELS], 0.0);
    }

    #[test]
    fn truncation_reports_offset() {
        let mut bytes = record(1, 3);
        bytes.extend(&record(2, 3)[..100]);
        let err = parse_records(
            Path::new("data_batch_1.bin"),
            &bytes,
            CifarVariant::Cifar10,
            2,
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(
            msg.contains("data_batch_1.bin") && msg.contains("3073"),
            "{msg}"
        );
    }

    #[test]
    fn bad_label_reports_offset() {
        let mut bytes = record(1, 3);
        bytes.extend(record(12, 3));
        match parse_records(Path::new("x"), &bytes, CifarVariant::Cifar10, 2) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, 3073),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn fine_label_for_cifar100() {
        let mut bytes = vec![3u8, 42];
        bytes.extend(std::iter::repeat_n(0, PIXELS));
        let (_, y) = parse_records(Path::new("x"), &bytes, CifarVariant::Cifar100, 1).unwrap();
        assert_eq!(y, vec![42]);
    }
}
