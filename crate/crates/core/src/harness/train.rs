use std::path::Path;
use std::time::Instant;

use super::augment::augment_batch;
use super::config::TrainConfig;
use super::dataset::Dataset;
use super::metrics::{EpochMetrics, MetricsLog};
use super::optim::Sgd;
use crate::error::{Error, Result};
use crate::init::{glorot_init, minibatch_rescale_init, InitScheme, MIN_INIT_BATCH};
use crate::linalg::Rng;
use crate::nn::{checkpoint, count_correct, softmax_xent, Network};

/// Samples per forward pass during evaluation.
const EVAL_CHUNK: usize = 500;

pub const METRICS_FILE: &str = "metrics.csv";
pub const TIMING_FILE: &str = "timing.csv";
pub const CHECKPOINT_FILE: &str = "model.lcw";

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub network: Network,
    pub log: MetricsLog,
}

/// Mean cross-entropy and accuracy in evaluation mode.
pub fn evaluate(net: &Network, data: &Dataset) -> Result<(f64, f64)> {
    if data.is_empty() {
        return Err(Error::Empty("evaluate"));
    }
    let idx: Vec<usize> = (0..data.len()).collect();
    let (mut loss, mut correct) = (0.0, 0);
    for chunk in idx.chunks(EVAL_CHUNK) {
        let (x, y) = data.batch(chunk);
        let logits = net.predict(&x)?;
        loss += softmax_xent(&logits, &y)?.0 * chunk.len() as f64;
        correct += count_correct(&logits, &y);
    }
    let n = data.len() as f64;
    Ok((loss / n, correct as f64 / n))
}

fn check_shapes(net: &Network, data: &Dataset) -> Result<()> {
    if net.input_features() != data.features() || net.output_features() != data.classes() {
        return Err(Error::Config(format!(
            "model maps {} -> {} but the data has {} features and {} classes",
            net.input_features(),
            net.output_features(),
            data.features(),
            data.classes()
        )));
    }
    Ok(())
}

struct Prepared {
    net: Network,
    perm: Vec<usize>,
    shuffle_rng: Rng,
    aug_rng: Rng,
}

fn prepare(cfg: &TrainConfig, train_set: &Dataset) -> Result<Prepared> {
    cfg.validate()?;
    let mut net = cfg.model.build()?;
    check_shapes(&net, train_set)?;
    let root = Rng::new(cfg.seed);
    let mut init_rng = root.fork(1);
    let mut shuffle_rng = root.fork(2);
    let aug_rng = root.fork(3);

    let perm = shuffle_rng.permutation(train_set.len());
    match cfg.init {
        InitScheme::GlorotUniform => glorot_init(&mut net, &mut init_rng)?,
        InitScheme::MinibatchRescale => {
            let take = cfg.batch_size.max(MIN_INIT_BATCH).min(train_set.len());
            let (x, _) = train_set.batch(&perm[..take]);
            minibatch_rescale_init(&mut net, &x, &mut init_rng)?;
        }
    }
    Ok(Prepared {
        net,
        perm,
        shuffle_rng,
        aug_rng,
    })
}

/// The configured network exactly as [`train`] initializes it before the
/// first step.
pub fn initialized_network(cfg: &TrainConfig, train_set: &Dataset) -> Result<Network> {
    Ok(prepare(cfg, train_set)?.net)
}

/// Builds, initializes and trains the configured model. `on_epoch` is called
/// after every epoch.
///
/// Initialization, shuffling and augmentation draw from separate streams of
/// the seed. Minibatch initialization uses the first training batch of epoch
/// 0 (at least [`MIN_INIT_BATCH`] samples).
pub fn train(
    cfg: &TrainConfig,
    train_set: &Dataset,
    test_set: &Dataset,
    mut on_epoch: impl FnMut(&EpochMetrics),
) -> Result<TrainOutcome> {
    let Prepared {
        mut net,
        mut perm,
        mut shuffle_rng,
        mut aug_rng,
    } = prepare(cfg, train_set)?;
    check_shapes(&net, test_set)?;
    let has_bn = cfg.model.has_batchnorm();

    let augment_shape = if cfg.augment {
        train_set.image_shape()
    } else {
        None
    };
    let mut opt = Sgd::new(cfg.momentum, cfg.weight_decay);
    let mut log = MetricsLog::new();
    let start = Instant::now();
    for epoch in 0..cfg.epochs {
        if epoch > 0 {
            perm = shuffle_rng.permutation(train_set.len());
        }
        let lr = cfg.lr.rate(epoch);
        net.set_training(true);
        let (mut loss_sum, mut correct, mut seen) = (0.0, 0usize, 0usize);
        for (b, chunk) in perm.chunks(cfg.batch_size).enumerate() {
            if has_bn && chunk.len() < 2 {
                continue;
            }
            let (mut x, y) = train_set.batch(chunk);
            if let Some(shape) = augment_shape {
                x = augment_batch(&x, shape, &mut aug_rng);
            }
            net.zero_grad();
            let (loss, logits) = net.loss_and_backward(&x, &y)?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: b });
            }
            opt.step(&mut net, lr);
            loss_sum += loss * chunk.len() as f64;
            correct += count_correct(&logits, &y);
            seen += chunk.len();
        }
        net.set_training(false);
        let (test_loss, test_accuracy) = evaluate(&net, test_set)?;
        let row = EpochMetrics {
            epoch,
            lr,
            train_loss: loss_sum / seen as f64,
            train_accuracy: correct as f64 / seen as f64,
            test_loss,
            test_accuracy,
            wall_seconds: start.elapsed().as_secs_f64(),
        };
        on_epoch(&row);
        log.push(row)?;
    }
    Ok(TrainOutcome { network: net, log })
}

/// Loads the configured data, trains, and writes [`METRICS_FILE`],
/// [`TIMING_FILE`] and [`CHECKPOINT_FILE`] into `out_dir`.
pub fn run(
    cfg: &TrainConfig,
    out_dir: &Path,
    on_epoch: impl FnMut(&EpochMetrics),
) -> Result<TrainOutcome> {
    let (train_set, test_set) = cfg.data.load(cfg.seed)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let outcome = train(cfg, &train_set, &test_set, on_epoch)?;
    outcome
        .log
        .write(&out_dir.join(METRICS_FILE), &out_dir.join(TIMING_FILE))?;
    checkpoint::save(&outcome.network, &out_dir.join(CHECKPOINT_FILE))?;
    Ok(outcome)
}
