use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Seeded pseudo-random source.
///
/// The bit stream is ChaCha8 keyed by `seed` through `ChaCha8Rng::seed_from_u64`
/// (PCG32 key expansion), which is specified independently of platform and
/// word size. Everything else is derived from `next_u64` here:
///
/// - `uniform()` = `((x >> 11) + 0.5) · 2^-53`, strictly inside `(0, 1)`.
/// - `normal()` is Box–Muller on two such uniforms,
///   `√(-2 ln u1) · cos(2π u2)` then `√(-2 ln u1) · sin(2π u2)` on the next call.
/// - `below(n)` uses rejection on the top bits so it is unbiased.
///
/// Independent sub-streams come from [`Rng::fork`], which reuses the key and
/// selects a different ChaCha stream id.
#[derive(Clone, Debug)]
pub struct Rng {
    seed: u64,
    inner: ChaCha8Rng,
    spare_normal: Option<f64>,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
            spare_normal: None,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// A generator on stream `stream` of the same key; streams never overlap.
    pub fn fork(&self, stream: u64) -> Rng {
        let mut inner = ChaCha8Rng::seed_from_u64(self.seed);
        inner.set_stream(stream.wrapping_add(1));
        Rng {
            seed: self.seed,
            inner,
            spare_normal: None,
        }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on the open interval `(0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    #[inline]
    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Standard normal draw.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare_normal = Some(r * theta.sin());
        r * theta.cos()
    }

    /// Uniform integer in `0..n`. Panics if `n == 0`.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        let n = n as u64;
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let x = self.next_u64();
            if x < zone {
                return (x % n) as usize;
            }
        }
    }

    /// Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }

    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut p: Vec<usize> = (0..n).collect();
        self.shuffle(&mut p);
        p
    }
}

/// `rows × cols` matrix of i.i.d. uniform draws on `(lo, hi)`.
pub fn rand_uniform(rng: &mut Rng, lo: f64, hi: f64, rows: usize, cols: usize) -> Result<Matrix> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidArgument(format!(
            "uniform range requires lo < hi, got ({lo}, {hi})"
        )));
    }
    Ok(Matrix::from_fn(rows, cols, |_, _| {
        rng.uniform_range(lo, hi)
    }))
}

/// `rows × cols` matrix of i.i.d. `N(mu, sigma²)` draws.
pub fn rand_normal(rng: &mut Rng, mu: f64, sigma: f64, rows: usize, cols: usize) -> Result<Matrix> {
    if !(mu.is_finite() && sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "normal requires finite mu and sigma > 0, got ({mu}, {sigma})"
        )));
    }
    Ok(Matrix::from_fn(rows, cols, |_, _| {
        mu + sigma * rng.normal()
    }))
}
