use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{dot, rand_uniform, Matrix, Rng};

/// Predicted and measured preactivation mean of one neuron.
#[derive(Clone, Debug, Serialize)]
pub struct NeuronShift {
    pub predicted: f64,
    pub empirical: f64,
    /// Standard error of `empirical`.
    pub std_error: f64,
    /// Angle between the weight vector and the mean vector, in `[0, π]`.
    pub angle: f64,
    pub norm: f64,
}

impl NeuronShift {
    /// `|predicted − empirical|` in units of the standard error.
    pub fn z_score(&self) -> f64 {
        let d = (self.predicted - self.empirical).abs();
        if self.std_error > 0.0 {
            d / self.std_error
        } else if d == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ShiftReport {
    pub neurons: Vec<NeuronShift>,
    pub max_abs_error: f64,
}

impl ShiftReport {
    /// Neurons whose empirical mean lies within `k` standard errors of the
    /// prediction.
    pub fn within(&self, k: f64) -> usize {
        self.neurons.iter().filter(|n| n.z_score() < k).count()
    }
}

fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// Angle between `a` and `b` via a clamped arccos; `π/2` if either is zero.
pub fn angle_between(a: &[f64], b: &[f64]) -> f64 {
    let d = norm(a) * norm(b);
    if d == 0.0 {
        return std::f64::consts::FRAC_PI_2;
    }
    (dot(a, b) / d).clamp(-1.0, 1.0).acos()
}

/// `E(w · a)` for `a` with mean `μ`: `‖w‖ ‖μ‖ cos θ̂`, or 0 when `‖μ‖ = 0`.
pub fn predicted_mean(w: &[f64], mu: &[f64]) -> f64 {
    let (nw, nm) = (norm(w), norm(mu));
    if nm == 0.0 || nw == 0.0 {
        return 0.0;
    }
    nw * nm * angle_between(w, mu).cos()
}

/// `E(w · a)` for `a` with mean `γ 1_m`: `|γ| √m ‖w‖ cos θ`, where `θ` is
/// the angle between `w` and the mean vector `γ 1_m`.
pub fn predicted_mean_constant(w: &[f64], gamma: f64) -> f64 {
    let m = w.len();
    if gamma == 0.0 || m == 0 {
        return 0.0;
    }
    let theta = angle_between(w, &vec![gamma.signum(); m]);
    gamma.abs() * (m as f64).sqrt() * norm(w) * theta.cos()
}

/// Compares each row's predicted preactivation mean with its sample mean
/// over the columns of `a`. `mean_vec` is the mean of the distribution the
/// columns were drawn from.
pub fn measure_shift(w: &Matrix, a: &Matrix, mean_vec: &[f64]) -> Result<ShiftReport> {
    if w.cols() != a.rows() || mean_vec.len() != w.cols() {
        return Err(Error::shape(
            "measure_shift",
            format!("W {} and mean of length {}", w.shape_str(), mean_vec.len()),
            format!("A {}", a.shape_str()),
        ));
    }
    if a.cols() < 2 {
        return Err(Error::InvalidArgument(
            "measure_shift needs at least 2 samples".into(),
        ));
    }
    let z = w.matmul(a)?;
    let n = a.cols() as f64;
    let neurons: Vec<NeuronShift> = (0..w.rows())
        .map(|i| {
            let row = z.row(i);
            let mean = row.iter().sum::<f64>() / n;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
            NeuronShift {
                predicted: predicted_mean(w.row(i), mean_vec),
                empirical: mean,
                std_error: (var / n).sqrt(),
                angle: angle_between(w.row(i), mean_vec),
                norm: norm(w.row(i)),
            }
        })
        .collect();
    let max_abs_error = neurons
        .iter()
        .fold(0.0, |m: f64, s| m.max((s.predicted - s.empirical).abs()));
    Ok(ShiftReport {
        neurons,
        max_abs_error,
    })
}

/// The `W ~ U(-1,1)`, `A ~ U(0,1)` square setup with its preactivations.
#[derive(Clone, Debug)]
pub struct ShiftDemo {
    pub weights: Matrix,
    pub activations: Matrix,
    pub preactivations: Matrix,
    pub report: ShiftReport,
}

pub const SHIFT_DEMO_SIZE: usize = 100;

/// Generates the demo. Rows of `Z = W A` carry a mean set by each row's
/// angle to `1_m`, which shows up as horizontal stripes.
pub fn shift_demo(rng: &mut Rng, size: usize) -> Result<ShiftDemo> {
    let weights = rand_uniform(rng, -1.0, 1.0, size, size)?;
    let activations = rand_uniform(rng, 0.0, 1.0, size, size)?;
    let preactivations = weights.matmul(&activations)?;
    let report = measure_shift(&weights, &activations, &vec![0.5; size])?;
    Ok(ShiftDemo {
        weights,
        activations,
        preactivations,
        report,
    })
}

impl ShiftDemo {
    /// CSV with one row per grid cell: `matrix,row,col,value`.
    pub fn grid_csv(&self) -> String {
        let mut out = String::from("matrix,row,col,value\n");
        for (name, m) in [
            ("W", &self.weights),
            ("A", &self.activations),
            ("Z", &self.preactivations),
        ] {
            for i in 0..m.rows() {
                for (j, v) in m.row(i).iter().enumerate() {
                    out.push_str(&format!("{name},{i},{j},{v}\n"));
                }
            }
        }
        out
    }

    /// CSV with one row per neuron of the shift report.
    pub fn rows_csv(&self) -> String {
        let mut out = String::from("row,angle,norm,predicted_mean,empirical_mean,std_error\n");
        for (i, s) in self.report.neurons.iter().enumerate() {
            out.push_str(&format!(
                "{i},{},{},{},{},{}\n",
                s.angle, s.norm, s.predicted, s.empirical, s.std_error
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lcw::LcwBasis;

    #[test]
    fn ones_vector_prediction() {
        let w = [1.0; 4];
        assert!((predicted_mean_constant(&w, 0.5) - 2.0).abs() < 1e-12);
        assert!((predicted_mean(&w, &[0.5; 4]) - 2.0).abs() < 1e-12);
        assert!(angle_between(&w, &[0.5; 4]).abs() < 1e-7);
    }

    #[test]
    fn both_formulas_agree() {
        let mut rng = Rng::new(1);
        for &gamma in &[0.5, -1.3, 2.0] {
            for m in [2, 7, 50] {
                let w: Vec<f64> = (0..m).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
                let a = predicted_mean_constant(&w, gamma);
                let b = predicted_mean(&w, &vec![gamma; m]);
                let direct = gamma * w.iter().sum::<f64>();
                assert!((a - b).abs() < 1e-10 && (a - direct).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn zero_mean_vector_predicts_zero() {
        assert_eq!(predicted_mean(&[1.0, 2.0], &[0.0, 0.0]), 0.0);
        assert_eq!(
            angle_between(&[0.0, 0.0], &[1.0, 0.0]),
            std::f64::consts::FRAC_PI_2
        );
    }

    #[test]
    fn rounding_cannot_push_arccos_out_of_range() {
        let w = [1e-3, 1e-3, 1e-3];
        let theta = angle_between(&w, &[7.0, 7.0, 7.0]);
        assert!(theta.is_finite() && (0.0..=std::f64::consts::PI).contains(&theta));
    }

    #[test]
    fn lcw_rows_predict_zero() {
        let b = LcwBasis::shared(10).unwrap();
        let mut rng = Rng::new(2);
        let v = rand_uniform(&mut rng, -1.0, 1.0, 5, 9).unwrap();
        let w = b.lift_rows(&v).unwrap();
        let a = rand_uniform(&mut rng, 0.0, 1.0, 10, 1000).unwrap();
        let r = measure_shift(&w, &a, &[0.5; 10]).unwrap();
        assert!(r.neurons.iter().all(|n| n.predicted.abs() < 1e-12));
        assert!(r
            .neurons
            .iter()
            .all(|n| (n.angle - std::f64::consts::FRAC_PI_2).abs() < 1e-10));
    }

    #[test]
    fn demo_shapes() {
        let d = shift_demo(&mut Rng::new(3), 10).unwrap();
        assert_eq!(d.report.neurons.len(), 10);
        assert_eq!(d.grid_csv().lines().count(), 1 + 300);
        assert_eq!(d.rows_csv().lines().count(), 11);
    }

    #[test]
    fn shape_mismatch() {
        assert!(measure_shift(&Matrix::zeros(2, 3), &Matrix::zeros(4, 5), &[0.0; 3]).is_err());
        assert!(measure_shift(&Matrix::zeros(2, 3), &Matrix::zeros(3, 5), &[0.0; 2]).is_err());
    }
}
