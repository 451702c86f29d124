use serde::Serialize;

use super::{
    eta_xi, measure_phi, measure_shift, predicted_mean, predicted_mean_constant, shift_demo,
    verify_prop4, verify_prop5, RELU_PHI_BW, RELU_PHI_FW, SE_BAND, SHIFT_DEMO_SIZE,
    SIGMOID_PHI_TABLE,
};
use crate::error::Result;
use crate::lcw::LcwBasis;
use crate::linalg::{rand_normal, rand_uniform, Rng};
use crate::nn::ActivationKind;

/// Outcome of one check: passes when `|observed − expected| ≤ tolerance`.
#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub name: String,
    pub expected: f64,
    pub observed: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Verdict {
    pub fn new(name: impl Into<String>, expected: f64, observed: f64, tolerance: f64) -> Self {
        Verdict {
            name: name.into(),
            expected,
            observed,
            tolerance,
            pass: (observed - expected).abs() <= tolerance,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerdictDocument {
    pub seed: u64,
    pub samples: usize,
    pub all_pass: bool,
    pub verdicts: Vec<Verdict>,
}

impl VerdictDocument {
    pub fn new(seed: u64, samples: usize, verdicts: Vec<Verdict>) -> Self {
        VerdictDocument {
            seed,
            samples,
            all_pass: verdicts.iter().all(|v| v.pass),
            verdicts,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("verdicts serialize")
    }

    /// Fixed-width text table, one verdict per line.
    pub fn table(&self) -> String {
        let mut out = format!(
            "{:<28} {:>14} {:>14} {:>10}  result\n",
            "check", "expected", "observed", "tolerance"
        );
        for v in &self.verdicts {
            out.push_str(&format!(
                "{:<28} {:>14.6} {:>14.6} {:>10.2e}  {}\n",
                v.name,
                v.expected,
                v.observed,
                v.tolerance,
                if v.pass { "pass" } else { "FAIL" }
            ));
        }
        out
    }
}

/// Width used by the variance checks.
pub const CHECK_DIM: usize = 64;

/// Runs every shift, variance and rate check with `samples` Monte Carlo draws.
/// Each check uses its own stream forked from `seed`.
pub fn verify_all(seed: u64, samples: usize) -> Result<VerdictDocument> {
    let root = Rng::new(seed);
    let mut out = Vec::new();

    // the two mean formulas on a constant mean vector
    let mut rng = root.fork(1);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let w: Vec<f64> = (0..CHECK_DIM)
            .map(|_| rng.uniform_range(-1.0, 1.0))
            .collect();
        worst = worst
            .max((predicted_mean_constant(&w, 0.5) - predicted_mean(&w, &[0.5; CHECK_DIM])).abs());
    }
    out.push(Verdict::new("shift_formulas_agree", 0.0, worst, 1e-10));

    let demo = shift_demo(&mut root.fork(2), SHIFT_DEMO_SIZE)?;
    let n = SHIFT_DEMO_SIZE as f64;
    out.push(Verdict::new(
        "shift_rows_within_4se",
        n,
        demo.report.within(SE_BAND) as f64,
        1.0,
    ));

    let mut rng = root.fork(3);
    let b = LcwBasis::shared(SHIFT_DEMO_SIZE)?;
    let w = b.lift_rows(&rand_uniform(
        &mut rng,
        -1.0,
        1.0,
        SHIFT_DEMO_SIZE,
        SHIFT_DEMO_SIZE - 1,
    )?)?;
    let a = rand_uniform(&mut rng, 0.0, 1.0, SHIFT_DEMO_SIZE, SHIFT_DEMO_SIZE)?;
    let lcw = measure_shift(&w, &a, &[0.5; SHIFT_DEMO_SIZE])?;
    out.push(Verdict::new(
        "lcw_rows_zero_mean_4se",
        n,
        lcw.within(SE_BAND) as f64,
        0.0,
    ));

    let mut rng = root.fork(4);
    let b = LcwBasis::shared(CHECK_DIM)?;
    let w = b.lift_rows(&rand_normal(&mut rng, 0.0, 1.0, 1, CHECK_DIM - 1)?)?;
    let base = &verify_prop4(&w, 0.5, 1.0, samples, &mut rng)?[0];
    out.push(Verdict::new(
        "prop4_mean_in_se",
        0.0,
        base.mean.abs() / base.mean_se,
        SE_BAND,
    ));
    out.push(Verdict::new("prop4_variance_ratio", 1.0, base.ratio, 0.02));
    let scaled = &verify_prop4(&w.scaled(3.0), 0.5, 1.0, samples, &mut rng)?[0];
    out.push(Verdict::new(
        "prop4_kappa3_variance_gain",
        9.0,
        scaled.variance / base.variance,
        0.18,
    ));

    let mut rng = root.fork(5);
    let w = rand_uniform(&mut rng, -1.0, 1.0, CHECK_DIM, CHECK_DIM)?;
    let cols = verify_prop5(&w, 1.0, samples, &mut rng)?;
    let far = cols.iter().map(|c| c.ratio).fold(1.0, |m: f64, r| {
        if (r - 1.0).abs() > (m - 1.0).abs() {
            r
        } else {
            m
        }
    });
    out.push(Verdict::new("prop5_worst_variance_ratio", 1.0, far, 0.02));

    let w = rand_uniform(&mut root.fork(6), -1.0, 1.0, 512, 512)?;
    out.push(Verdict::new(
        "eta_equals_xi",
        0.0,
        eta_xi(&w).relative_gap(),
        1e-12,
    ));

    let relu = measure_phi(ActivationKind::Relu, 1.0, samples, &mut root.fork(7))?;
    out.push(Verdict::new("relu_phi_fw", RELU_PHI_FW, relu.phi_fw, 0.005));
    out.push(Verdict::new("relu_phi_bw", RELU_PHI_BW, relu.phi_bw, 0.005));

    for (k, (sigma, fw, bw)) in SIGMOID_PHI_TABLE.into_iter().enumerate() {
        let e = measure_phi(
            ActivationKind::Sigmoid,
            sigma,
            samples,
            &mut root.fork(8 + k as u64),
        )?;
        out.push(Verdict::new(
            format!("sigmoid_phi_fw_sigma{sigma}"),
            fw,
            e.phi_fw,
            0.01,
        ));
        out.push(Verdict::new(
            format!("sigmoid_phi_bw_sigma{sigma}"),
            bw,
            e.phi_bw,
            0.01,
        ));
    }

    Ok(VerdictDocument::new(seed, samples, out))
}
