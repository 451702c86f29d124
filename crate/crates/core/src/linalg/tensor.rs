use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Dense `(n, c, h, w)` tensor, row-major with `w` fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor4 {
    dims: [usize; 4],
    data: Vec<f64>,
}

impl Tensor4 {
    pub fn zeros(dims: [usize; 4]) -> Self {
        Tensor4 {
            dims,
            data: vec![0.0; dims.iter().product()],
        }
    }

    pub fn filled(dims: [usize; 4], value: f64) -> Self {
        Tensor4 {
            dims,
            data: vec![value; dims.iter().product()],
        }
    }

    pub fn from_vec(dims: [usize; 4], data: Vec<f64>) -> Result<Self> {
        let n: usize = dims.iter().product();
        if n != data.len() {
            return Err(Error::shape(
                "Tensor4::from_vec",
                format!("{dims:?}"),
                format!("{} elements", data.len()),
            ));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("non-finite tensor entry".into()));
        }
        Ok(Tensor4 { dims, data })
    }

    pub fn dims(&self) -> [usize; 4] {
        self.dims
    }

    /// Number of entries in one `(c, h, w)` slab.
    pub fn sample_len(&self) -> usize {
        self.dims[1] * self.dims[2] * self.dims[3]
    }

    #[inline]
    pub fn offset(&self, n: usize, c: usize, h: usize, w: usize) -> usize {
        let [_, cc, hh, ww] = self.dims;
        ((n * cc + c) * hh + h) * ww + w
    }

    #[inline]
    pub fn get(&self, n: usize, c: usize, h: usize, w: usize) -> f64 {
        self.data[self.offset(n, c, h, w)]
    }

    #[inline]
    pub fn set(&mut self, n: usize, c: usize, h: usize, w: usize, v: f64) {
        let o = self.offset(n, c, h, w);
        self.data[o] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn sample(&self, n: usize) -> &[f64] {
        let len = self.sample_len();
        &self.data[n * len..(n + 1) * len]
    }

    pub fn sample_mut(&mut self, n: usize) -> &mut [f64] {
        let len = self.sample_len();
        &mut self.data[n * len..(n + 1) * len]
    }

    /// Reinterprets a feature-major batch (`c·h·w × n`, one sample per column)
    /// as an `(n, c, h, w)` tensor.
    pub fn from_columns(m: &Matrix, c: usize, h: usize, w: usize) -> Result<Self> {
        if m.rows() != c * h * w {
            return Err(Error::shape(
                "Tensor4::from_columns",
                m.shape_str(),
                format!("{c}x{h}x{w} features"),
            ));
        }
        let t = m.transpose();
        Ok(Tensor4 {
            dims: [m.cols(), c, h, w],
            data: t.into_vec(),
        })
    }

    /// Inverse of [`Tensor4::from_columns`].
    pub fn to_columns(&self) -> Matrix {
        let n = self.dims[0];
        let len = self.sample_len();
        Matrix::from_fn(len, n, |f, s| self.data[s * len + f])
    }
}
