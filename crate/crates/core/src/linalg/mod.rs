//! Numeric substrate: matrices, 4-D tensors, QR, the seeded RNG and summary
//! statistics. Everything is `f64`.

mod matrix;
mod qr;
mod rng;
mod stats;
mod tensor;

pub(crate) use matrix::dot;
pub use matrix::Matrix;
pub use qr::{qr_thin, RANK_TOL};
pub use rng::{rand_normal, rand_uniform, Rng};
pub use stats::{mean_variance, quantile_sorted, summarize, SummaryStats, QUANTILE_LEVELS};
pub use tensor::Tensor4;

#[cfg(test)]
mod properties {
    use super::Rng;
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn qr_reconstructs_and_is_orthonormal(seed in any::<u64>(), m in 1usize..64, extra in 0usize..32) {
            let rows = m + extra;
            let mut rng = Rng::new(seed);
            let a = rand_uniform(&mut rng, -1.0, 1.0, rows, m).unwrap();
            let (q, r) = qr_thin(&a).unwrap();
            let recon = q.matmul(&r).unwrap().sub(&a).unwrap().frobenius_norm() / a.frobenius_norm();
            let ortho = q.matmul_tn(&q).unwrap().sub(&Matrix::identity(m)).unwrap().frobenius_norm();
            prop_assert!(recon < 1e-10, "recon {}", recon);
            prop_assert!(ortho < 1e-10, "ortho {}", ortho);
        }

        #[test]
        fn matmul_is_associative(seed in any::<u64>(), a in 1usize..8, b in 1usize..8, c in 1usize..8, d in 1usize..8) {
            let mut rng = Rng::new(seed);
            let x = rand_uniform(&mut rng, -1.0, 1.0, a, b).unwrap();
            let y = rand_uniform(&mut rng, -1.0, 1.0, b, c).unwrap();
            let z = rand_uniform(&mut rng, -1.0, 1.0, c, d).unwrap();
            let left = x.matmul(&y).unwrap().matmul(&z).unwrap();
            let right = x.matmul(&y.matmul(&z).unwrap()).unwrap();
            let rel = left.sub(&right).unwrap().frobenius_norm() / left.frobenius_norm().max(1e-300);
            prop_assert!(rel < 1e-9);
        }
    }

    #[test]
    fn qr_large_square() {
        let mut rng = Rng::new(99);
        let a = rand_uniform(&mut rng, -1.0, 1.0, 512, 512).unwrap();
        let (q, r) = qr_thin(&a).unwrap();
        let recon = q.matmul(&r).unwrap().sub(&a).unwrap().frobenius_norm() / a.frobenius_norm();
        let ortho = q
            .matmul_tn(&q)
            .unwrap()
            .sub(&Matrix::identity(512))
            .unwrap()
            .frobenius_norm();
        assert!(recon < 1e-10 && ortho < 1e-10, "{recon} {ortho}");
    }
}
