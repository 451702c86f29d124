use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lcw::LcwBasis;
use crate::linalg::{Matrix, Tensor4};
use crate::nn::{ParamKind, ParamSlot, Parameterization};

/// Geometry of a 2-D convolution with a fixed input size.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvGeometry {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel_h: usize,
    pub kernel_w: usize,
    pub stride: usize,
    pub padding: usize,
    pub in_h: usize,
    pub in_w: usize,
}

impl ConvGeometry {
    pub fn out_h(&self) -> usize {
        (self.in_h + 2 * self.padding - self.kernel_h) / self.stride + 1
    }

    pub fn out_w(&self) -> usize {
        (self.in_w + 2 * self.padding - self.kernel_w) / self.stride + 1
    }

    /// Length of an unrolled kernel, `C_in · K_h · K_w`.
    pub fn kernel_len(&self) -> usize {
        self.in_channels * self.kernel_h * self.kernel_w
    }

    pub fn in_features(&self) -> usize {
        self.in_channels * self.in_h * self.in_w
    }

    pub fn out_features(&self) -> usize {
        self.out_channels * self.out_h() * self.out_w()
    }

    fn validate(&self) -> Result<()> {
        let g = self;
        if g.in_channels == 0
            || g.out_channels == 0
            || g.kernel_h == 0
            || g.kernel_w == 0
            || g.stride == 0
        {
            return Err(Error::InvalidArgument(format!(
                "degenerate conv geometry {g:?}"
            )));
        }
        if g.in_h + 2 * g.padding < g.kernel_h || g.in_w + 2 * g.padding < g.kernel_w {
            return Err(Error::InvalidArgument(format!(
                "kernel {}x{} larger than padded input {}x{}",
                g.kernel_h,
                g.kernel_w,
                g.in_h + 2 * g.padding,
                g.in_w + 2 * g.padding
            )));
        }
        Ok(())
    }
}

/// 2-D cross-correlation layer computed with im2col.
///
/// Kernels are stored unrolled as rows of a `C_out × (C_in·K_h·K_w)` matrix in
/// `(c, i, j)` order. In LCW mode each row is `B v` for the kernel-space basis,
/// so every kernel sums to zero.
#[derive(Clone, Debug)]
pub struct Conv2d {
    geom: ConvGeometry,
    mode: Parameterization,
    basis: Option<Arc<LcwBasis>>,
    param: Matrix,
    kernel: Matrix,
    bias: Vec<f64>,
    grad_param: Matrix,
    grad_bias: Vec<f64>,
    input: Option<Tensor4>,
}

impl Conv2d {
    pub fn new(geom: ConvGeometry, mode: Parameterization) -> Result<Self> {
        geom.validate()?;
        let k = geom.kernel_len();
        let (basis, cols) = match mode {
            Parameterization::Standard => (None, k),
            Parameterization::Lcw => (
                Some(LcwBasis::for_kernel(
                    geom.in_channels,
                    geom.kernel_h,
                    geom.kernel_w,
                )?),
                k - 1,
            ),
        };
        Ok(Conv2d {
            geom,
            mode,
            basis,
            param: Matrix::zeros(geom.out_channels, cols),
            kernel: Matrix::zeros(geom.out_channels, k),
            bias: vec![0.0; geom.out_channels],
            grad_param: Matrix::zeros(geom.out_channels, cols),
            grad_bias: vec![0.0; geom.out_channels],
            input: None,
        })
    }

    pub fn geometry(&self) -> &ConvGeometry {
        &self.geom
    }

    pub fn mode(&self) -> Parameterization {
        self.mode
    }

    pub fn basis(&self) -> Option<&Arc<LcwBasis>> {
        self.basis.as_ref()
    }

    /// Realized kernels, one unrolled kernel per row.
    pub fn kernel_matrix(&self) -> &Matrix {
        &self.kernel
    }

    /// Realized kernels as `(C_out, C_in, K_h, K_w)`.
    pub fn kernels(&self) -> Tensor4 {
        let g = &self.geom;
        Tensor4::from_vec(
            [g.out_channels, g.in_channels, g.kernel_h, g.kernel_w],
            self.kernel.as_slice().to_vec(),
        )
        .expect("kernel shape is fixed")
    }

    pub fn param(&self) -> &Matrix {
        &self.param
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn grad_param(&self) -> &Matrix {
        &self.grad_param
    }

    pub fn grad_bias(&self) -> &[f64] {
        &self.grad_bias
    }

    /// Sets kernels from a `(C_out, C_in, K_h, K_w)` tensor; projected in LCW mode.
    pub fn set_kernels(&mut self, kernels: &Tensor4) -> Result<()> {
        let g = &self.geom;
        let want = [g.out_channels, g.in_channels, g.kernel_h, g.kernel_w];
        if kernels.dims() != want {
            return Err(Error::shape(
                "Conv2d::set_kernels",
                format!("{want:?}"),
                format!("{:?}", kernels.dims()),
            ));
        }
        let unrolled =
            Matrix::from_vec(g.out_channels, g.kernel_len(), kernels.as_slice().to_vec())?;
        self.param = match &self.basis {
            None => unrolled,
            Some(b) => b.project_rows(&unrolled)?,
        };
        self.sync();
        Ok(())
    }

    pub fn set_param(&mut self, param: Matrix) -> Result<()> {
        if param.shape() != self.param.shape() {
            return Err(Error::shape(
                "Conv2d::set_param",
                self.param.shape_str(),
                param.shape_str(),
            ));
        }
        self.param = param;
        self.sync();
        Ok(())
    }

    pub fn set_bias(&mut self, bias: Vec<f64>) -> Result<()> {
        if bias.len() != self.geom.out_channels {
            return Err(Error::shape(
                "Conv2d::set_bias",
                format!("{} channels", self.geom.out_channels),
                format!("{} biases", bias.len()),
            ));
        }
        self.bias = bias;
        Ok(())
    }

    pub fn scale_weights(&mut self, k: f64) {
        self.param.scale(k);
        self.sync();
    }

    pub fn sync(&mut self) {
        if let Some(b) = &self.basis {
            self.kernel = b
                .lift_rows(&self.param)
                .expect("shapes fixed at construction");
        } else {
            self.kernel
                .as_mut_slice()
                .copy_from_slice(self.param.as_slice());
        }
    }

    /// Largest `|Σ kernel|` over output channels.
    pub fn max_kernel_sum(&self) -> f64 {
        self.kernel
            .row_sums()
            .iter()
            .fold(0.0, |m, s| m.max(s.abs()))
    }

    fn check_input(&self, x: &Tensor4) -> Result<()> {
        let g = &self.geom;
        let [_, c, h, w] = x.dims();
        if (c, h, w) != (g.in_channels, g.in_h, g.in_w) {
            return Err(Error::shape(
                "Conv2d::forward",
                format!("expected (n, {}, {}, {})", g.in_channels, g.in_h, g.in_w),
                format!("{:?}", x.dims()),
            ));
        }
        Ok(())
    }

    /// Unrolls one sample into a `K × (out_h·out_w)` patch matrix.
    fn im2col(&self, sample: &[f64]) -> Matrix {
        let g = &self.geom;
        let (oh, ow) = (g.out_h(), g.out_w());
        let mut cols = Matrix::zeros(g.kernel_len(), oh * ow);
        let data = cols.as_mut_slice();
        let p = oh * ow;
        for c in 0..g.in_channels {
            for ki in 0..g.kernel_h {
                for kj in 0..g.kernel_w {
                    let row = (c * g.kernel_h + ki) * g.kernel_w + kj;
                    let dst = &mut data[row * p..(row + 1) * p];
                    for y in 0..oh {
                        let iy = (y * g.stride + ki) as isize - g.padding as isize;
                        if iy < 0 || iy >= g.in_h as isize {
                            continue;
                        }
                        let src_row = (c * g.in_h + iy as usize) * g.in_w;
                        for x in 0..ow {
                            let ix = (x * g.stride + kj) as isize - g.padding as isize;
                            if ix >= 0 && ix < g.in_w as isize {
                                dst[y * ow + x] = sample[src_row + ix as usize];
                            }
                        }
                    }
                }
            }
        }
        cols
    }

    /// Scatter-adds a patch-matrix gradient back onto one sample.
    fn col2im(&self, cols: &Matrix, out: &mut [f64]) {
        let g = &self.geom;
        let (oh, ow) = (g.out_h(), g.out_w());
        let p = oh * ow;
        let data = cols.as_slice();
        for c in 0..g.in_channels {
            for ki in 0..g.kernel_h {
                for kj in 0..g.kernel_w {
                    let row = (c * g.kernel_h + ki) * g.kernel_w + kj;
                    let src = &data[row * p..(row + 1) * p];
                    for y in 0..oh {
                        let iy = (y * g.stride + ki) as isize - g.padding as isize;
                        if iy < 0 || iy >= g.in_h as isize {
                            continue;
                        }
                        let dst_row = (c * g.in_h + iy as usize) * g.in_w;
                        for x in 0..ow {
                            let ix = (x * g.stride + kj) as isize - g.padding as isize;
                            if ix >= 0 && ix < g.in_w as isize {
                                out[dst_row + ix as usize] += src[y * ow + x];
                            }
                        }
                    }
                }
            }
        }
    }

    pub fn forward_tensor(&mut self, x: &Tensor4) -> Result<Tensor4> {
        let y = self.infer_tensor(x)?;
        self.input = Some(x.clone());
        Ok(y)
    }

    pub fn infer_tensor(&self, x: &Tensor4) -> Result<Tensor4> {
        self.check_input(x)?;
        let g = &self.geom;
        let n = x.dims()[0];
        let mut y = Tensor4::zeros([n, g.out_channels, g.out_h(), g.out_w()]);
        for s in 0..n {
            let cols = self.im2col(x.sample(s));
            let mut out = self.kernel.matmul(&cols)?;
            let p = out.cols();
            for (c, &b) in self.bias.iter().enumerate() {
                out.row_mut(c).iter_mut().for_each(|v| *v += b);
            }
            y.sample_mut(s).copy_from_slice(out.as_slice());
            debug_assert_eq!(p, g.out_h() * g.out_w());
        }
        Ok(y)
    }

    pub fn backward_tensor(&mut self, grad_y: &Tensor4) -> Result<Tensor4> {
        let x = self.input.take().ok_or(Error::NoForwardCache("conv2d"))?;
        let result = self.backward_inner(&x, grad_y);
        self.input = Some(x);
        result
    }

    fn backward_inner(&mut self, x: &Tensor4, grad_y: &Tensor4) -> Result<Tensor4> {
        let g = self.geom;
        let n = x.dims()[0];
        let want = [n, g.out_channels, g.out_h(), g.out_w()];
        if grad_y.dims() != want {
            return Err(Error::shape(
                "Conv2d::backward",
                format!("{want:?}"),
                format!("{:?}", grad_y.dims()),
            ));
        }
        let p = g.out_h() * g.out_w();
        let mut grad_kernel = Matrix::zeros(g.out_channels, g.kernel_len());
        let mut grad_x = Tensor4::zeros(x.dims());
        for s in 0..n {
            let gy = Matrix::from_vec(g.out_channels, p, grad_y.sample(s).to_vec())?;
            let cols = self.im2col(x.sample(s));
            grad_kernel.add_assign(&gy.matmul_nt(&cols)?)?;
            for (gb, v) in self.grad_bias.iter_mut().zip(gy.row_sums()) {
                *gb += v;
            }
            let grad_cols = self.kernel.matmul_tn(&gy)?;
            self.col2im(&grad_cols, grad_x.sample_mut(s));
        }
        match &self.basis {
            None => self.grad_param.add_assign(&grad_kernel)?,
            Some(b) => self
                .grad_param
                .add_assign(&grad_kernel.matmul(b.matrix())?)?,
        }
        Ok(grad_x)
    }

    /// Feature-major adaptor used inside a [`crate::nn::Network`].
    pub fn forward(&mut self, x: &Matrix) -> Result<Matrix> {
        let g = &self.geom;
        let t = Tensor4::from_columns(x, g.in_channels, g.in_h, g.in_w)?;
        Ok(self.forward_tensor(&t)?.to_columns())
    }

    pub fn infer(&self, x: &Matrix) -> Result<Matrix> {
        let g = &self.geom;
        let t = Tensor4::from_columns(x, g.in_channels, g.in_h, g.in_w)?;
        Ok(self.infer_tensor(&t)?.to_columns())
    }

    pub fn backward(&mut self, grad: &Matrix) -> Result<Matrix> {
        let g = self.geom;
        let t = Tensor4::from_columns(grad, g.out_channels, g.out_h(), g.out_w())?;
        Ok(self.backward_tensor(&t)?.to_columns())
    }

    pub fn zero_grad(&mut self) {
        self.grad_param.fill(0.0);
        self.grad_bias.iter_mut().for_each(|g| *g = 0.0);
    }

    pub(crate) fn params(&mut self) -> Vec<ParamSlot<'_>> {
        vec![
            ParamSlot {
                kind: ParamKind::Weight,
                value: self.param.as_mut_slice(),
                grad: self.grad_param.as_slice(),
            },
            ParamSlot {
                kind: ParamKind::Bias,
                value: &mut self.bias,
                grad: &self.grad_bias,
            },
        ]
    }
}
