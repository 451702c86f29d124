use serde::Serialize;

use super::Moments;
use crate::error::{Error, Result};
use crate::linalg::{dot, rand_normal, rand_uniform, Matrix, Rng};

/// Columns drawn per matrix product in the Monte Carlo loops.
const CHUNK: usize = 4096;

/// Width of the pass band in standard errors.
pub const SE_BAND: f64 = 4.0;

/// Forward variance check for one neuron.
#[derive(Clone, Debug, Serialize)]
pub struct Prop4Row {
    pub norm: f64,
    pub mean: f64,
    pub mean_se: f64,
    pub variance: f64,
    pub variance_se: f64,
    /// `σ² ‖w‖²`.
    pub predicted_variance: f64,
    /// `variance / predicted_variance`.
    pub ratio: f64,
    pub pass: bool,
}

/// Backward variance check for one input coordinate.
#[derive(Clone, Debug, Serialize)]
pub struct Prop5Col {
    pub variance: f64,
    pub variance_se: f64,
    /// `σ² ‖w̃_j‖²` for column `j`.
    pub predicted_variance: f64,
    pub ratio: f64,
    pub pass: bool,
}

/// Draws `n` activation vectors with i.i.d. components of mean `gamma` and
/// variance `sigma²` (uniform on `γ ± √3 σ`) and checks, for every row `w` of
/// `w_rows`, that `z = w · a` has mean 0 and variance `σ² ‖w‖²`.
///
/// Every row must be nonzero and sum to zero.
pub fn verify_prop4(
    w_rows: &Matrix,
    gamma: f64,
    sigma: f64,
    n: usize,
    rng: &mut Rng,
) -> Result<Vec<Prop4Row>> {
    if !(sigma > 0.0) || n < 2 {
        return Err(Error::InvalidArgument(format!(
            "verify_prop4 needs sigma > 0 and n >= 2, got sigma={sigma}, n={n}"
        )));
    }
    for i in 0..w_rows.rows() {
        let w = w_rows.row(i);
        let nw = dot(w, w).sqrt();
        if nw == 0.0 {
            return Err(Error::InvalidArgument(format!("row {i} has zero norm")));
        }
        let s: f64 = w.iter().sum();
        if s.abs() > 1e-9 * nw.max(1.0) {
            return Err(Error::InvalidArgument(format!(
                "row {i} is not zero-sum (sum {s:e})"
            )));
        }
    }
    let half = 3f64.sqrt() * sigma;
    let mut acc = vec![Moments::new(); w_rows.rows()];
    let mut left = n;
    while left > 0 {
        let c = left.min(CHUNK);
        let a = rand_uniform(rng, gamma - half, gamma + half, w_rows.cols(), c)?;
        let z = w_rows.matmul(&a)?;
        for (i, m) in acc.iter_mut().enumerate() {
            m.extend(z.row(i));
        }
        left -= c;
    }
    Ok(acc
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let w = w_rows.row(i);
            let predicted = sigma * sigma * dot(w, w);
            let (mean, var) = (m.mean(), m.variance());
            let (mean_se, var_se) = (m.mean_se(), m.variance_se());
            Prop4Row {
                norm: dot(w, w).sqrt(),
                mean,
                mean_se,
                variance: var,
                variance_se: var_se,
                predicted_variance: predicted,
                ratio: var / predicted,
                pass: mean.abs() <= SE_BAND * mean_se
                    && (var - predicted).abs() <= SE_BAND * var_se,
            }
        })
        .collect())
}

/// Draws `n` upstream gradients `∇z ~ N(0, σ² I)` and checks that each
/// coordinate of `∇a = Wᵀ ∇z` has variance `σ² ‖w̃_j‖²`.
pub fn verify_prop5(w: &Matrix, sigma: f64, n: usize, rng: &mut Rng) -> Result<Vec<Prop5Col>> {
    if !(sigma > 0.0) || n < 2 {
        return Err(Error::InvalidArgument(format!(
            "verify_prop5 needs sigma > 0 and n >= 2, got sigma={sigma}, n={n}"
        )));
    }
    let mut acc = vec![Moments::new(); w.cols()];
    let mut left = n;
    while left > 0 {
        let c = left.min(CHUNK);
        let g = rand_normal(rng, 0.0, sigma, w.rows(), c)?;
        let ga = w.matmul_tn(&g)?;
        for (j, m) in acc.iter_mut().enumerate() {
            m.extend(ga.row(j));
        }
        left -= c;
    }
    Ok(acc
        .iter()
        .enumerate()
        .map(|(j, m)| {
            let col = w.col(j);
            let predicted = sigma * sigma * dot(&col, &col);
            let (var, se) = (m.variance(), m.variance_se());
            Prop5Col {
                variance: var,
                variance_se: se,
                predicted_variance: predicted,
                ratio: var / predicted,
                pass: (var - predicted).abs() <= SE_BAND * se,
            }
        })
        .collect())
}

/// Row and column amplification totals of a weight matrix.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct EtaXi {
    /// `Σ_i ‖w_i‖²` over rows.
    pub eta_total: f64,
    /// `Σ_j ‖w̃_j‖²` over columns.
    pub xi_total: f64,
    /// Mean forward amplification `η` (per row).
    pub eta: f64,
    /// Mean backward amplification `ξ` (per column).
    pub xi: f64,
}

impl EtaXi {
    /// `|Σ η − Σ ξ| / Σ η`.
    pub fn relative_gap(&self) -> f64 {
        (self.eta_total - self.xi_total).abs() / self.eta_total
    }
}

/// Sums squared row norms and squared column norms independently. For a
/// square matrix `η = ξ`.
pub fn eta_xi(w: &Matrix) -> EtaXi {
    let eta_total: f64 = (0..w.rows()).map(|i| dot(w.row(i), w.row(i))).sum();
    let xi_total: f64 = (0..w.cols())
        .map(|j| (0..w.rows()).map(|i| w[(i, j)] * w[(i, j)]).sum::<f64>())
        .sum();
    EtaXi {
        eta_total,
        xi_total,
        eta: eta_total / w.rows() as f64,
        xi: xi_total / w.cols() as f64,
    }
}
