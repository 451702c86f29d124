//! Orthonormal basis of the zero-sum subspace and the `w = B v`
//! reparameterization.
//!
//! The basis for dimension `m` is the `Q` factor of the thin QR factorization
//! of the `m × (m-1)` matrix `[I_{m-1}; -1ᵀ]`, whose columns already span the
//! subspace. With the positive-diagonal convention of [`qr_thin`] the result
//! is unique, so rebuilding it always gives the same matrix and checkpoints
//! only need to store `v`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::linalg::{dot, qr_thin, Matrix};

/// Orthonormal basis `B` (`m × (m-1)`) of `{w ∈ R^m : Σ w_i = 0}`.
#[derive(Clone, Debug, PartialEq)]
pub struct LcwBasis {
    m: usize,
    basis: Matrix,
}

impl LcwBasis {
    /// Builds the basis for dimension `m ≥ 2`.
    pub fn new(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidArgument(format!(
                "zero-sum basis needs dimension >= 2, got {m}"
            )));
        }
        let seed = Matrix::from_fn(m, m - 1, |i, j| {
            if i == m - 1 {
                -1.0
            } else if i == j {
                1.0
            } else {
                0.0
            }
        });
        let (q, _) = qr_thin(&seed)?;
        Ok(LcwBasis { m, basis: q })
    }

    /// Process-wide shared basis for dimension `m`; built once per dimension.
    pub fn shared(m: usize) -> Result<Arc<LcwBasis>> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<LcwBasis>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        if let Some(b) = cache.lock().expect("basis cache poisoned").get(&m) {
            return Ok(Arc::clone(b));
        }
        // Build outside the lock; a racing builder produces an identical matrix.
        let built = Arc::new(LcwBasis::new(m)?);
        let mut guard = cache.lock().expect("basis cache poisoned");
        Ok(Arc::clone(guard.entry(m).or_insert(built)))
    }

    /// Basis for kernels of shape `c_in × k_h × k_w`, unrolled in that order.
    pub fn for_kernel(c_in: usize, k_h: usize, k_w: usize) -> Result<Arc<LcwBasis>> {
        let m = c_in * k_h * k_w;
        if m < 2 {
            return Err(Error::InvalidArgument(format!(
                "kernel {c_in}x{k_h}x{k_w} has fewer than 2 entries"
            )));
        }
        Self::shared(m)
    }

    /// Ambient dimension `m`.
    pub fn dim(&self) -> usize {
        self.m
    }

    /// Dimension of the free parameter, `m - 1`.
    pub fn free_dim(&self) -> usize {
        self.m - 1
    }

    pub fn matrix(&self) -> &Matrix {
        &self.basis
    }

    /// `w = B v`.
    pub fn lift(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.m - 1 {
            return Err(Error::shape(
                "LcwBasis::lift",
                format!("basis {}x{}", self.m, self.m - 1),
                format!("v of length {}", v.len()),
            ));
        }
        Ok((0..self.m).map(|i| dot(self.basis.row(i), v)).collect())
    }

    /// `v = Bᵀ w`; `lift(project(w))` is `w` with its mean removed.
    pub fn project(&self, w: &[f64]) -> Result<Vec<f64>> {
        if w.len() != self.m {
            return Err(Error::shape(
                "LcwBasis::project",
                format!("basis {}x{}", self.m, self.m - 1),
                format!("w of length {}", w.len()),
            ));
        }
        let mut v = vec![0.0; self.m - 1];
        for (i, &wi) in w.iter().enumerate() {
            for (vj, &b) in v.iter_mut().zip(self.basis.row(i)) {
                *vj += b * wi;
            }
        }
        Ok(v)
    }

    /// Lifts every row: `W = V Bᵀ` for `V` of shape `k × (m-1)`.
    pub fn lift_rows(&self, v: &Matrix) -> Result<Matrix> {
        v.matmul_nt(&self.basis)
    }

    /// Projects every row: `V = W B` for `W` of shape `k × m`.
    pub fn project_rows(&self, w: &Matrix) -> Result<Matrix> {
        w.matmul(&self.basis)
    }
}

/// Free parameter `v` bound to its basis.
#[derive(Clone, Debug)]
pub struct LcwParam {
    v: Vec<f64>,
    basis: Arc<LcwBasis>,
}

impl LcwParam {
    pub fn new(v: Vec<f64>, basis: Arc<LcwBasis>) -> Result<Self> {
        if v.len() != basis.free_dim() {
            return Err(Error::shape(
                "LcwParam::new",
                format!("basis of dimension {}", basis.dim()),
                format!("v of length {}", v.len()),
            ));
        }
        Ok(LcwParam { v, basis })
    }

    /// Imports an arbitrary weight vector by orthogonal projection.
    pub fn project(w: &[f64], basis: Arc<LcwBasis>) -> Result<Self> {
        let v = basis.project(w)?;
        Ok(LcwParam { v, basis })
    }

    /// The realized weight vector `B v`.
    pub fn lift(&self) -> Vec<f64> {
        self.basis
            .lift(&self.v)
            .expect("length checked at construction")
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn v_mut(&mut self) -> &mut [f64] {
        &mut self.v
    }

    pub fn basis(&self) -> &Arc<LcwBasis> {
        &self.basis
    }
}

pub fn build_basis(m: usize) -> Result<LcwBasis> {
    LcwBasis::new(m)
}

pub fn kernel_basis(c_in: usize, k_h: usize, k_w: usize) -> Result<Arc<LcwBasis>> {
    LcwBasis::for_kernel(c_in, k_h, k_w)
}
