//! Measurements of activation shift, variance amplification and activation
//! rates, per-layer profiles of a network, and pass/fail verdicts.
//!
//! Monte Carlo checks pass within [`SE_BAND`] standard errors unless a fixed
//! tolerance is given. Every function takes its [`Rng`](crate::linalg::Rng)
//! explicitly, so results are fixed by the seed.

mod moments;
mod phi;
mod profile;
mod shift;
mod variance;
mod verdict;

pub use moments::Moments;
pub use phi::{
    measure_phi, PhiEstimate, MIN_PHI_SAMPLES, RELU_PHI_BW, RELU_PHI_FW, SIGMOID_PHI_TABLE,
};
pub use profile::{
    activation_quantiles, layer_profile, quantiles_csv, LayerProfile, LayerStats, NeuronQuantiles,
    DEFAULT_PROBE_SAMPLES,
};
pub use shift::{
    angle_between, measure_shift, predicted_mean, predicted_mean_constant, shift_demo, NeuronShift,
    ShiftDemo, ShiftReport, SHIFT_DEMO_SIZE,
};
pub use variance::{eta_xi, verify_prop4, verify_prop5, EtaXi, Prop4Row, Prop5Col, SE_BAND};
pub use verdict::{verify_all, Verdict, VerdictDocument, CHECK_DIM};
