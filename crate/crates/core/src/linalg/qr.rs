use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Relative threshold on `|r_kk| / ‖a‖_F` below which a column is treated as
/// linearly dependent.
pub const RANK_TOL: f64 = 1e-12;

/// Thin QR factorization by Householder reflections.
///
/// For `a` of shape `m × n` with `m ≥ n` returns `q` (`m × n`, orthonormal
/// columns) and `r` (`n × n`, upper triangular). Signs are normalized so every
/// diagonal entry of `r` is strictly positive, which makes the factorization
/// unique for full-rank input.
pub fn qr_thin(a: &Matrix) -> Result<(Matrix, Matrix)> {
    let (m, n) = a.shape();
    if m < n {
        return Err(Error::shape(
            "qr_thin",
            a.shape_str(),
            "rows >= cols".to_string(),
        ));
    }
    if n == 0 {
        return Err(Error::Empty("qr_thin"));
    }
    let scale = a.frobenius_norm();
    // Column-major working copies so each reflection touches contiguous memory.
    let at = a.transpose();
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| at.row(j).to_vec()).collect();
    // Unit Householder vectors; reflector k acts on entries k..m.
    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(n);

    for k in 0..n {
        let norm = cols[k][k..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= RANK_TOL * scale {
            return Err(Error::Singular {
                index: k,
                value: norm,
            });
        }
        // Reflect onto -sign(x0)·‖x‖·e1 so the subtraction below never cancels.
        let alpha = if cols[k][k] >= 0.0 { -norm } else { norm };
        let mut v = cols[k][k..].to_vec();
        v[0] -= alpha;
        let vnorm = v.iter().map(|t| t * t).sum::<f64>().sqrt();
        v.iter_mut().for_each(|t| *t /= vnorm);

        cols[k][k] = alpha;
        cols[k][k + 1..].iter_mut().for_each(|t| *t = 0.0);
        for col in cols.iter_mut().skip(k + 1) {
            reflect(&v, &mut col[k..]);
        }
        reflectors.push(v);
    }

    // Q = H_0 H_1 ... H_{n-1} applied to the first n columns of I_m. Column j
    // is untouched by reflectors k > j, so start each at its own index.
    let mut q_cols: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; m];
            e[j] = 1.0;
            e
        })
        .collect();
    for k in (0..n).rev() {
        let v = &reflectors[k];
        for col in q_cols.iter_mut().skip(k) {
            reflect(v, &mut col[k..]);
        }
    }

    let mut r = Matrix::from_fn(n, n, |i, j| if j >= i { cols[j][i] } else { 0.0 });
    for k in 0..n {
        let d = r[(k, k)];
        if d.abs() < RANK_TOL * scale {
            return Err(Error::Singular {
                index: k,
                value: d.abs(),
            });
        }
        if d < 0.0 {
            for j in k..n {
                r[(k, j)] = -r[(k, j)];
            }
            q_cols[k].iter_mut().for_each(|t| *t = -*t);
        }
    }
    let q = Matrix::from_fn(m, n, |i, j| q_cols[j][i]);
    Ok((q, r))
}

/// `x ← (I - 2 v vᵀ) x` for unit `v`.
#[inline]
fn reflect(v: &[f64], x: &mut [f64]) {
    let s: f64 = v.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
    if s == 0.0 {
        return;
    }
    let s2 = 2.0 * s;
    for (xi, vi) in x.iter_mut().zip(v) {
        *xi -= s2 * vi;
    }
}
