//! Datasets, optimizer, schedule, configs, metrics, the training loop and the
//! finite-difference gradient suite.

mod augment;
pub mod cifar;
mod config;
mod dataset;
pub mod gradcheck;
mod metrics;
mod optim;
mod synthetic;
mod train;

pub use augment::{augment_batch, CROP_PADDING};
pub use cifar::{load_cifar, load_cifar10, CifarVariant, DATA_DIR_ENV};
pub use config::{CifarSource, DataSource, LayerList, LayerSpec, ModelSpec, TrainConfig};
pub use dataset::{normalize_splits, Dataset, Normalization};
pub use gradcheck::{check_network, gradcheck_suite, GradCheck};
pub use metrics::{EpochMetrics, MetricsLog, METRICS_HEADER};
pub use optim::{LrSchedule, Sgd};
pub use synthetic::{make_blobs, make_synthetic, make_synthetic_split, SyntheticSpec};
pub use train::{
    evaluate, initialized_network, run, train, TrainOutcome, CHECKPOINT_FILE, METRICS_FILE,
    TIMING_FILE,
};
