use lcw_core::harness::{
    evaluate, make_synthetic_split, run, train, DataSource, LrSchedule, ModelSpec, Sgd,
    SyntheticSpec, TrainConfig, CHECKPOINT_FILE, METRICS_FILE,
};
use lcw_core::init::{minibatch_rescale_init, InitScheme};
use lcw_core::nn::{checkpoint, MlpSpec};
use lcw_core::Rng;

fn blobs(classes: usize, dim: usize, train: usize, separation: f64) -> SyntheticSpec {
    SyntheticSpec {
        classes,
        dim,
        train_samples: train,
        test_samples: 200,
        separation,
    }
}

fn config(model: MlpSpec, data: SyntheticSpec, epochs: usize, init: InitScheme) -> TrainConfig {
    TrainConfig {
        epochs,
        batch_size: 128,
        lr: LrSchedule::default(),
        momentum: 0.9,
        weight_decay: 1e-4,
        seed: 3,
        init,
        model: ModelSpec::Mlp(model),
        data: DataSource::Synthetic(data),
        augment: false,
    }
}

fn fit(cfg: &TrainConfig) -> lcw_core::harness::TrainOutcome {
    let (tr, te) = cfg.data.load(cfg.seed).unwrap();
    train(cfg, &tr, &te, |_| {}).unwrap()
}

#[test]
fn deep_lcw_loss_decreases_each_early_epoch() {
    let cfg = config(
        MlpSpec::new(64, 10, 64, 10).with_lcw(true),
        blobs(10, 64, 2000, 4.0),
        5,
        InitScheme::MinibatchRescale,
    );
    let out = fit(&cfg);
    let losses: Vec<f64> = out.log.rows().iter().map(|r| r.train_loss).collect();
    assert!(losses.windows(2).all(|w| w[1] < w[0]), "{losses:?}");
}

#[test]
fn deep_plain_glorot_stays_at_chance() {
    let cfg = config(
        MlpSpec::new(64, 10, 64, 10),
        blobs(10, 64, 2000, 4.0),
        20,
        InitScheme::GlorotUniform,
    );
    let out = fit(&cfg);
    let acc = out.log.last().unwrap().train_accuracy;
    assert!((acc - 0.1).abs() <= 0.02, "train accuracy {acc}");
}

#[test]
fn separable_blobs_are_learned_by_a_linear_model() {
    let cfg = config(
        MlpSpec::new(16, 1, 1, 2),
        blobs(2, 16, 1000, 10.0),
        10,
        InitScheme::GlorotUniform,
    );
    let acc = fit(&cfg).log.last().unwrap().train_accuracy;
    assert!(acc >= 0.99, "train accuracy {acc}");
}

#[test]
fn coincident_blobs_give_chance_accuracy() {
    let cfg = config(
        MlpSpec::new(16, 1, 1, 2),
        blobs(2, 16, 2000, 0.0),
        10,
        InitScheme::GlorotUniform,
    );
    let out = fit(&cfg);
    let (_, te) = cfg.data.load(cfg.seed).unwrap();
    let (_, acc) = evaluate(&out.network, &te).unwrap();
    assert!((acc - 0.5).abs() < 0.1, "test accuracy {acc}");
}

#[test]
fn same_seed_same_data() {
    let spec = blobs(3, 5, 50, 2.0);
    let (a, _) = make_synthetic_split(&spec, 9).unwrap();
    let (b, _) = make_synthetic_split(&spec, 9).unwrap();
    assert_eq!(a.all().0, b.all().0);
    assert_eq!(a.labels(), b.labels());
}

#[test]
fn lcw_constraint_survives_sgd() {
    let (data, _) = make_synthetic_split(&blobs(4, 12, 256, 3.0), 5).unwrap();
    let mut net = MlpSpec::new(12, 4, 16, 4)
        .with_lcw(true)
        .with_batchnorm(true)
        .build()
        .unwrap();
    let mut rng = Rng::new(1);
    minibatch_rescale_init(
        &mut net,
        &data.batch(&(0..64).collect::<Vec<_>>()).0,
        &mut rng,
    )
    .unwrap();
    let mut opt = Sgd::new(0.9, 1e-4);
    for step in 0..100 {
        let idx: Vec<usize> = (0..32).map(|k| (step * 32 + k) % data.len()).collect();
        let (x, y) = data.batch(&idx);
        net.zero_grad();
        net.loss_and_backward(&x, &y).unwrap();
        opt.step(&mut net, 0.1);
    }
    assert!(net.max_weight_sum() < 1e-9);
}

#[test]
fn twenty_layer_lcw_stays_finite() {
    let cfg = config(
        MlpSpec::new(32, 20, 32, 5).with_lcw(true),
        blobs(5, 32, 500, 3.0),
        3,
        InitScheme::MinibatchRescale,
    );
    let mut out = fit(&cfg);
    assert!(out.network.is_finite());
    assert!(out
        .log
        .rows()
        .iter()
        .all(|r| r.train_loss.is_finite() && r.test_loss.is_finite()));
}

#[test]
fn run_writes_artifacts_and_checkpoint_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(
        MlpSpec::new(8, 3, 12, 3)
            .with_lcw(true)
            .with_batchnorm(true),
        blobs(3, 8, 300, 3.0),
        3,
        InitScheme::MinibatchRescale,
    );
    cfg.batch_size = 32;
    let out = run(&cfg, dir.path(), |_| {}).unwrap();
    let csv = std::fs::read_to_string(dir.path().join(METRICS_FILE)).unwrap();
    assert_eq!(csv, out.log.to_csv());

    let loaded = checkpoint::load(&dir.path().join(CHECKPOINT_FILE)).unwrap();
    let (_, te) = cfg.data.load(cfg.seed).unwrap();
    let (before, _) = evaluate(&out.network, &te).unwrap();
    let (after, _) = evaluate(&loaded, &te).unwrap();
    assert!((before - after).abs() <= 1e-12);
    assert_eq!(before, out.log.last().unwrap().test_loss);

    let again = tempfile::tempdir().unwrap();
    run(&cfg, again.path(), |_| {}).unwrap();
    for name in [METRICS_FILE, CHECKPOINT_FILE] {
        assert_eq!(
            std::fs::read(dir.path().join(name)).unwrap(),
            std::fs::read(again.path().join(name)).unwrap(),
            "{name}"
        );
    }
}
