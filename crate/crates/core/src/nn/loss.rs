use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Mean softmax cross-entropy over the columns of `logits` (`classes × batch`).
///
/// Returns the loss and its gradient `(softmax - onehot) / batch`.
pub fn softmax_xent(logits: &Matrix, labels: &[usize]) -> Result<(f64, Matrix)> {
    let (classes, batch) = logits.shape();
    if labels.len() != batch {
        return Err(Error::shape(
            "softmax_xent",
            format!("logits {}", logits.shape_str()),
            format!("{} labels", labels.len()),
        ));
    }
    if batch == 0 {
        return Err(Error::Empty("softmax_xent"));
    }
    if let Some(&label) = labels.iter().find(|&&l| l >= classes) {
        return Err(Error::LabelOutOfRange { label, classes });
    }
    let probs = softmax_columns(logits);
    let mut loss = 0.0;
    let mut grad = probs.clone();
    let inv_n = 1.0 / batch as f64;
    for (s, &label) in labels.iter().enumerate() {
        loss -= log_softmax_at(logits, s, label);
        grad[(label, s)] -= 1.0;
    }
    grad.scale(inv_n);
    Ok((loss * inv_n, grad))
}

/// Column-wise softmax, max-shifted.
pub fn softmax_columns(logits: &Matrix) -> Matrix {
    let (classes, batch) = logits.shape();
    let mut out = Matrix::zeros(classes, batch);
    for s in 0..batch {
        let max = (0..classes)
            .map(|c| logits[(c, s)])
            .fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for c in 0..classes {
            let e = (logits[(c, s)] - max).exp();
            out[(c, s)] = e;
            total += e;
        }
        for c in 0..classes {
            out[(c, s)] /= total;
        }
    }
    out
}

/// `ln softmax(logits[:, s])[label]`, accurate even when the label's
/// probability is within rounding of one.
fn log_softmax_at(logits: &Matrix, s: usize, label: usize) -> f64 {
    let classes = logits.rows();
    let max = (0..classes)
        .map(|c| logits[(c, s)])
        .fold(f64::NEG_INFINITY, f64::max);
    let rest: f64 = (0..classes)
        .filter(|&c| c != label)
        .map(|c| (logits[(c, s)] - max).exp())
        .sum();
    let shifted = logits[(label, s)] - max;
    if shifted == 0.0 {
        -rest.ln_1p()
    } else {
        shifted - (rest + shifted.exp()).ln()
    }
}

/// Index of the largest logit per column; ties go to the lowest class.
pub fn argmax_columns(logits: &Matrix) -> Vec<usize> {
    (0..logits.cols())
        .map(|s| {
            let mut best = 0;
            for c in 1..logits.rows() {
                if logits[(c, s)] > logits[(best, s)] {
                    best = c;
                }
            }
            best
        })
        .collect()
}

/// Number of columns whose argmax equals the label.
pub fn count_correct(logits: &Matrix, labels: &[usize]) -> usize {
    argmax_columns(logits)
        .iter()
        .zip(labels)
        .filter(|(p, l)| p == l)
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_logits_give_log_classes() {
        let (loss, grad) = softmax_xent(&Matrix::zeros(10, 4), &[0, 3, 9, 2]).unwrap();
        assert!((loss - 10f64.ln()).abs() < 1e-12);
        // every column of the gradient sums to zero
        for s in 0..4 {
            let col: f64 = grad.col(s).iter().sum();
            assert!(col.abs() < 1e-15);
        }
    }

    #[test]
    fn loss_falls_monotonically_with_margin() {
        let mut prev = f64::INFINITY;
        for margin in [0.0, 1.0, 5.0, 20.0, 100.0, 700.0] {
            let logits = Matrix::from_vec(3, 1, vec![margin, 0.0, 0.0]).unwrap();
            let (loss, _) = softmax_xent(&logits, &[0]).unwrap();
            assert!(loss.is_finite() && loss < prev, "{margin}: {loss}");
            prev = loss;
        }
        assert!(prev < 1e-300);
    }

    #[test]
    fn label_out_of_range() {
        assert!(matches!(
            softmax_xent(&Matrix::zeros(3, 1), &[3]),
            Err(Error::LabelOutOfRange {
                label: 3,
                classes: 3
            })
        ));
        assert!(softmax_xent(&Matrix::zeros(3, 2), &[0]).is_err());
    }

    #[test]
    fn accuracy_helpers() {
        let logits = Matrix::from_vec(2, 3, vec![1.0, 0.0, 0.5, 0.0, 2.0, 0.5]).unwrap();
        assert_eq!(argmax_columns(&logits), vec![0, 1, 0]);
        assert_eq!(count_correct(&logits, &[0, 0, 0]), 2);
    }
}
