//! Binary model checkpoints.
//!
//! All integers and floats are little-endian. Layout:
//!
//! ```text
//! magic      8 bytes   "LCWNET\0\0"
//! version    u32       1
//! inputs     u64       network input width
//! n_layers   u32
//! layer*     tag u8 then a tag-specific body:
//!   1 dense      mode u8 (0 standard, 1 lcw), in u64, out u64, param blob, bias blob
//!   2 conv2d     mode u8, in_c u64, out_c u64, k_h u64, k_w u64, stride u64,
//!                padding u64, in_h u64, in_w u64, param blob, bias blob
//!   3 activation kind u8 (0 sigmoid, 1 relu, 2 identity)
//!   4 batchnorm  features u64, momentum f64, eps f64,
//!                gamma blob, beta blob, running_mean blob, running_var blob
//! blob       count u64 then count × f64
//! ```
//!
//! The `param` blob of an LCW layer holds the free parameters `V`; the basis
//! is rebuilt from the layer dimensions on load, which is deterministic, so a
//! round trip restores the realized weights bit for bit.

use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::nn::{
    Activation, ActivationKind, BatchNorm, Conv2d, ConvGeometry, Dense, Layer, Network,
    Parameterization,
};

pub const MAGIC: &[u8; 8] = b"LCWNET\0\0";
pub const VERSION: u32 = 1;

const TAG_DENSE: u8 = 1;
const TAG_CONV: u8 = 2;
const TAG_ACTIVATION: u8 = 3;
const TAG_BATCHNORM: u8 = 4;

pub fn to_bytes(net: &Network) -> Vec<u8> {
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(MAGIC);
    w.u32(VERSION);
    w.u64(net.input_features() as u64);
    w.u32(net.len() as u32);
    for layer in net.layers() {
        match layer {
            Layer::Dense(d) => {
                w.u8(TAG_DENSE);
                w.u8(mode_code(d.mode()));
                w.u64(d.in_features() as u64);
                w.u64(d.out_features() as u64);
                w.blob(d.param().as_slice());
                w.blob(d.bias());
            }
            Layer::Conv2d(c) => {
                let g = c.geometry();
                w.u8(TAG_CONV);
                w.u8(mode_code(c.mode()));
                for v in [
                    g.in_channels,
                    g.out_channels,
                    g.kernel_h,
                    g.kernel_w,
                    g.stride,
                    g.padding,
                    g.in_h,
                    g.in_w,
                ] {
                    w.u64(v as u64);
                }
                w.blob(c.param().as_slice());
                w.blob(c.bias());
            }
            Layer::Activation(a) => {
                w.u8(TAG_ACTIVATION);
                w.u8(match a.kind() {
                    ActivationKind::Sigmoid => 0,
                    ActivationKind::Relu => 1,
                    ActivationKind::Identity => 2,
                });
            }
            Layer::BatchNorm(b) => {
                w.u8(TAG_BATCHNORM);
                w.u64(b.features() as u64);
                w.f64(b.momentum());
                w.f64(b.eps());
                w.blob(b.gamma());
                w.blob(b.beta());
                w.blob(b.running_mean());
                w.blob(b.running_var());
            }
        }
    }
    w.0
}

pub fn from_bytes(bytes: &[u8]) -> Result<Network> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let inputs = r.usize()?;
    let n_layers = r.u32()? as usize;
    let mut layers = Vec::with_capacity(n_layers);
    for _ in 0..n_layers {
        let tag = r.u8()?;
        let layer: Layer = match tag {
            TAG_DENSE => {
                let mode = mode_from(r.u8()?)?;
                let (inp, out) = (r.usize()?, r.usize()?);
                let mut d = Dense::new(inp, out, mode)?;
                let (rows, cols) = d.param().shape();
                d.set_param(Matrix::from_vec(rows, cols, r.blob()?)?)?;
                d.set_bias(r.blob()?)?;
                d.into()
            }
            TAG_CONV => {
                let mode = mode_from(r.u8()?)?;
                let geom = ConvGeometry {
                    in_channels: r.usize()?,
                    out_channels: r.usize()?,
                    kernel_h: r.usize()?,
                    kernel_w: r.usize()?,
                    stride: r.usize()?,
                    padding: r.usize()?,
                    in_h: r.usize()?,
                    in_w: r.usize()?,
                };
                let mut c = Conv2d::new(geom, mode)?;
                let (rows, cols) = c.param().shape();
                c.set_param(Matrix::from_vec(rows, cols, r.blob()?)?)?;
                c.set_bias(r.blob()?)?;
                c.into()
            }
            TAG_ACTIVATION => {
                let kind = match r.u8()? {
                    0 => ActivationKind::Sigmoid,
                    1 => ActivationKind::Relu,
                    2 => ActivationKind::Identity,
                    k => return Err(Error::Checkpoint(format!("unknown activation code {k}"))),
                };
                Activation::new(kind).into()
            }
            TAG_BATCHNORM => {
                let features = r.usize()?;
                let momentum = r.f64()?;
                let eps = r.f64()?;
                let mut b = BatchNorm::with_params(features, momentum, eps);
                let (gamma, beta) = (r.blob()?, r.blob()?);
                b.set_affine(gamma, beta)?;
                let (mean, var) = (r.blob()?, r.blob()?);
                if mean.len() != features || var.len() != features {
                    return Err(Error::Checkpoint(
                        "batchnorm statistics length mismatch".into(),
                    ));
                }
                b.running_mean = mean;
                b.running_var = var;
                b.into()
            }
            t => {
                return Err(Error::Checkpoint(format!(
                    "unknown layer tag {t} at byte {}",
                    r.pos - 1
                )))
            }
        };
        layers.push(layer);
    }
    if r.pos != bytes.len() {
        return Err(Error::Checkpoint(format!(
            "{} trailing bytes after the last layer",
            bytes.len() - r.pos
        )));
    }
    Network::new(inputs, layers)
}

pub fn save(net: &Network, path: &Path) -> Result<()> {
    std::fs::write(path, to_bytes(net)).map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<Network> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    from_bytes(&bytes)
}

fn mode_code(mode: Parameterization) -> u8 {
    match mode {
        Parameterization::Standard => 0,
        Parameterization::Lcw => 1,
    }
}

fn mode_from(code: u8) -> Result<Parameterization> {
    match code {
        0 => Ok(Parameterization::Standard),
        1 => Ok(Parameterization::Lcw),
        c => Err(Error::Checkpoint(format!(
            "unknown parameterization code {c}"
        ))),
    }
}

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn blob(&mut self, values: &[f64]) {
        self.u64(values.len() as u64);
        for &v in values {
            self.f64(v);
        }
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| {
                Error::Checkpoint(format!(
                    "truncated: needed {n} bytes at offset {}",
                    self.pos
                ))
            })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }
    fn usize(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| Error::Checkpoint("size overflows usize".into()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }
    fn blob(&mut self) -> Result<Vec<f64>> {
        let n = self.usize()?;
        if n > (self.bytes.len() - self.pos) / 8 {
            return Err(Error::Checkpoint(format!(
                "blob of {n} values at offset {} exceeds file",
                self.pos - 8
            )));
        }
        (0..n).map(|_| self.f64()).collect()
    }
}
