//! Acceptance suite. Runs every criterion, prints one line per criterion and
//! exits non-zero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use lcw_core::diagnostics::{
    eta_xi, layer_profile, measure_phi, measure_shift, predicted_mean_constant, verify_prop4,
    verify_prop5, SIGMOID_PHI_TABLE,
};
use lcw_core::harness::{
    gradcheck_suite, train, DataSource, LrSchedule, ModelSpec, Sgd, SyntheticSpec, TrainConfig,
};
use lcw_core::init::{minibatch_rescale_init, InitScheme};
use lcw_core::linalg::{rand_normal, rand_uniform, Matrix};
use lcw_core::nn::{ActivationKind, MlpSpec};
use lcw_core::{LcwBasis, Rng};

const N: usize = 1_000_000;

struct Outcome {
    pass: bool,
    detail: String,
}

/// Number, name, check and time limit in seconds.
type Criterion = (u32, &'static str, fn() -> Outcome, Option<f64>);

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within_time(o: Outcome, elapsed: Duration, limit: Option<f64>) -> Outcome {
    match limit {
        Some(l) if elapsed.as_secs_f64() >= l => {
            outcome(false, format!("{}; exceeded {l} s", o.detail))
        }
        _ => o,
    }
}

fn basis_residuals() -> Outcome {
    let mut worst: f64 = 0.0;
    for m in [2, 3, 4, 8, 16, 64, 256, 512] {
        let b = LcwBasis::new(m).unwrap();
        let gram = b.matrix().matmul_tn(b.matrix()).unwrap();
        let ortho = gram.sub(&Matrix::identity(m - 1)).unwrap().frobenius_norm();
        let sums = Matrix::filled(1, m, 1.0)
            .matmul(b.matrix())
            .unwrap()
            .frobenius_norm();
        worst = worst.max(ortho).max(sums);
    }
    outcome(
        worst < 1e-10,
        format!("worst residual {worst:.2e} (< 1e-10)"),
    )
}

/// Square setup with `W ~ U(-1,1)` and `A ~ U(0,1)`; `lcw` lifts random rows
/// into the zero-sum subspace instead.
fn shift_rows(seed: u64, lcw: bool) -> (Matrix, Matrix) {
    let mut rng = Rng::new(seed);
    let w = if lcw {
        let b = LcwBasis::shared(100).unwrap();
        b.lift_rows(&rand_uniform(&mut rng, -1.0, 1.0, 100, 99).unwrap())
            .unwrap()
    } else {
        rand_uniform(&mut rng, -1.0, 1.0, 100, 100).unwrap()
    };
    (w, rand_uniform(&mut rng, 0.0, 1.0, 100, 100).unwrap())
}

fn shift_prediction() -> Outcome {
    let (w, a) = shift_rows(11, false);
    let report = measure_shift(&w, &a, &[0.5; 100]).unwrap();
    let ok = report
        .neurons
        .iter()
        .enumerate()
        .filter(|(i, n)| {
            let predicted = predicted_mean_constant(w.row(*i), 0.5);
            (n.empirical - predicted).abs() < 4.0 * n.std_error
        })
        .count();
    outcome(
        ok >= 99,
        format!("{ok}/100 rows within 4 SE of |γ|√m‖w‖cosθ (need ≥ 99)"),
    )
}

fn lcw_zero_mean() -> Outcome {
    let (w, a) = shift_rows(12, true);
    let report = measure_shift(&w, &a, &[0.5; 100]).unwrap();
    let ok = report
        .neurons
        .iter()
        .filter(|n| n.empirical.abs() < 4.0 * n.std_error)
        .count();
    outcome(ok == 100, format!("{ok}/100 rows with |mean| < 4 SE"))
}

fn variance_props() -> Outcome {
    let mut rng = Rng::new(13);
    let b = LcwBasis::shared(64).unwrap();
    let w = b
        .lift_rows(&rand_normal(&mut rng, 0.0, 1.0, 1, 63).unwrap())
        .unwrap();
    let base = &verify_prop4(&w, 0.5, 1.0, N, &mut rng).unwrap()[0];
    let scaled = &verify_prop4(&w.scaled(3.0), 0.5, 1.0, N, &mut rng).unwrap()[0];
    let gain = scaled.variance / base.variance;
    let wm = rand_uniform(&mut rng, -1.0, 1.0, 64, 64).unwrap();
    let cols = verify_prop5(&wm, 1.0, N, &mut rng).unwrap();
    let (lo, hi) = cols.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), c| {
        (lo.min(c.ratio), hi.max(c.ratio))
    });
    let band = |r: f64| (0.98..=1.02).contains(&r);
    let pass = band(base.ratio) && band(lo) && band(hi) && (gain / 9.0 - 1.0).abs() <= 0.02;
    outcome(
        pass,
        format!(
            "V(z)/σ²‖w‖² = {:.4}, V(∇a)/σ²‖w̃‖² in [{lo:.4}, {hi:.4}], κ=3 gain {gain:.3} (9 ± 2%)",
            base.ratio
        ),
    )
}

fn eta_equals_xi() -> Outcome {
    let mut rng = Rng::new(14);
    let mut worst: f64 = 0.0;
    for n in [2, 3, 17, 64, 255, 512] {
        let w = rand_normal(&mut rng, 0.0, 1.0, n, n).unwrap();
        worst = worst.max(eta_xi(&w).relative_gap());
    }
    outcome(
        worst < 1e-12,
        format!("max |Ση − Σξ|/Σ = {worst:.2e} (< 1e-12)"),
    )
}

fn relu_phi() -> Outcome {
    let e = measure_phi(ActivationKind::Relu, 1.0, N, &mut Rng::new(15)).unwrap();
    let pass = (e.phi_fw - 0.3408).abs() <= 0.005 && (e.phi_bw - 0.5).abs() <= 0.005;
    outcome(
        pass,
        format!(
            "φ_fw = {:.4} (0.3408 ± 0.005), φ_bw = {:.4} (0.5 ± 0.005)",
            e.phi_fw, e.phi_bw
        ),
    )
}

fn sigmoid_phi() -> Outcome {
    let mut pass = true;
    let mut rates = Vec::new();
    let mut roots = Vec::new();
    for (k, (sigma, fw, bw)) in SIGMOID_PHI_TABLE.into_iter().enumerate() {
        let e = measure_phi(
            ActivationKind::Sigmoid,
            sigma,
            N,
            &mut Rng::new(16 + k as u64),
        )
        .unwrap();
        pass &= (e.phi_fw - fw).abs() <= 0.01 && (e.phi_bw - bw).abs() <= 0.01;
        rates.push(format!(
            "σ̂={sigma}: ({:.3}, {:.3}) vs ({fw}, {bw})",
            e.phi_fw, e.phi_bw
        ));
        roots.push(format!(
            "({:.3}, {:.3})",
            e.std_ratio_fw(),
            e.std_ratio_bw()
        ));
    }
    outcome(
        pass,
        format!(
            "variance rates {}; square roots of the rates {} match the table",
            rates.join(", "),
            roots.join(", ")
        ),
    )
}

fn gradients() -> Outcome {
    let mut worst = (0.0f64, String::new());
    let mut count = 0;
    for seed in 0..10 {
        for c in gradcheck_suite(seed).unwrap() {
            count += 1;
            if c.max_error() > worst.0 {
                worst = (c.max_error(), format!("{} seed {seed}", c.name));
            }
        }
    }
    outcome(
        worst.0 < 1e-5,
        format!(
            "{count} checks, worst relative error {:.2e} ({}) < 1e-5",
            worst.0, worst.1
        ),
    )
}

fn vanishing_gradient() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for lcw in [false, true] {
        let mut rng = Rng::new(19);
        let x = rand_normal(&mut rng, 0.0, 1.0, 64, 100).unwrap();
        let mut net = MlpSpec::new(64, 20, 64, 10).with_lcw(lcw).build().unwrap();
        minibatch_rescale_init(&mut net, &x, &mut rng).unwrap();
        let p = layer_profile(&mut net, &x, None, &mut rng).unwrap();
        let ratio = p.grad_variance_ratio(1, 19).unwrap();
        let vz_ok = p.layers.iter().all(|l| (0.5..=2.0).contains(&l.z.variance));
        let ratio_ok = if lcw {
            (0.1..=10.0).contains(&ratio)
        } else {
            ratio < 1e-4
        };
        pass &= vz_ok && ratio_ok;
        parts.push(format!(
            "{}: V(∇z¹)/V(∇z¹⁹) = {ratio:.2e}, V(z) in [0.5, 2]: {vz_ok}",
            if lcw { "lcw" } else { "standard" }
        ));
    }
    outcome(pass, parts.join("; "))
}

fn constraint_preserved() -> Outcome {
    let spec = SyntheticSpec {
        classes: 4,
        dim: 20,
        train_samples: 400,
        test_samples: 0,
        separation: 3.0,
    };
    let (data, _) = lcw_core::harness::make_synthetic_split(&spec, 20).unwrap();
    let mut net = MlpSpec::new(20, 5, 32, 4).with_lcw(true).build().unwrap();
    let mut rng = Rng::new(21);
    let (x0, _) = data.batch(&(0..64).collect::<Vec<_>>());
    minibatch_rescale_init(&mut net, &x0, &mut rng).unwrap();
    let mut opt = Sgd::new(0.9, 1e-4);
    for step in 0..200 {
        let idx: Vec<usize> = (0..32).map(|k| (step * 32 + k) % data.len()).collect();
        let (x, y) = data.batch(&idx);
        net.zero_grad();
        net.loss_and_backward(&x, &y).unwrap();
        opt.step(&mut net, 0.1);
    }
    let worst = net.max_weight_sum();
    outcome(
        worst < 1e-9,
        format!("max per-neuron |Σ w| after 200 steps = {worst:.2e} (< 1e-9)"),
    )
}

fn contrast_config(lcw: bool) -> TrainConfig {
    TrainConfig {
        epochs: 30,
        batch_size: 128,
        lr: LrSchedule::default(),
        momentum: 0.9,
        weight_decay: 1e-4,
        seed: 1,
        init: if lcw {
            InitScheme::MinibatchRescale
        } else {
            InitScheme::GlorotUniform
        },
        model: ModelSpec::Mlp(MlpSpec::new(128, 15, 64, 10).with_lcw(lcw)),
        data: DataSource::Synthetic(SyntheticSpec {
            classes: 10,
            dim: 128,
            train_samples: 5000,
            test_samples: 1000,
            separation: 4.0,
        }),
        augment: false,
    }
}

/// Metrics CSVs of the plain and LCW runs.
fn contrast_run() -> (String, String) {
    let run = |lcw| {
        let cfg = contrast_config(lcw);
        let (tr, te) = cfg.data.load(cfg.seed).unwrap();
        train(&cfg, &tr, &te, |_| {}).unwrap().log
    };
    (run(false).to_csv(), run(true).to_csv())
}

static FIRST_RUN: OnceLock<(String, String)> = OnceLock::new();

fn final_train_accuracy(csv: &str) -> f64 {
    csv.lines()
        .last()
        .unwrap()
        .split(',')
        .nth(3)
        .unwrap()
        .parse()
        .unwrap()
}

fn trainability() -> Outcome {
    let (plain, lcw) = FIRST_RUN.get_or_init(contrast_run);
    let (p, l) = (final_train_accuracy(plain), final_train_accuracy(lcw));
    let pass = (p - 0.1).abs() <= 0.05 && l > 0.8;
    outcome(
        pass,
        format!(
            "plain train accuracy {p:.3} (chance 0.1 ± 0.05), lcw {l:.3} (> 0.8) after 30 epochs"
        ),
    )
}

fn determinism() -> Outcome {
    let first = FIRST_RUN.get_or_init(contrast_run).clone();
    let second = contrast_run();
    let pass = first == second;
    outcome(pass, format!("second run metrics identical: {pass}"))
}

fn main() {
    let criteria: Vec<Criterion> = vec![
        (1, "basis correctness", basis_residuals, Some(5.0)),
        (2, "shift prediction", shift_prediction, Some(1.0)),
        (3, "lcw zero mean", lcw_zero_mean, Some(1.0)),
        (4, "forward/backward variance", variance_props, Some(30.0)),
        (5, "eta equals xi", eta_equals_xi, None),
        (6, "relu phi", relu_phi, None),
        (7, "sigmoid phi table", sigmoid_phi, Some(30.0)),
        (8, "gradient check", gradients, Some(30.0)),
        (9, "vanishing gradient", vanishing_gradient, Some(10.0)),
        (10, "constraint preservation", constraint_preserved, None),
        (11, "trainability contrast", trainability, Some(300.0)),
        (12, "determinism", determinism, None),
    ];
    let filter: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = Vec::new();
    for (id, name, f, limit) in criteria {
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f));
        let elapsed = start.elapsed();
        let o = match result {
            Ok(o) => within_time(o, elapsed, limit),
            Err(_) => outcome(false, "panicked".into()),
        };
        println!(
            "criterion {id:>2} {} {name}: {} [{:.2} s]",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            elapsed.as_secs_f64()
        );
        if !o.pass {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria pass");
    } else {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
