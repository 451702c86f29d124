use crate::linalg::{Matrix, Rng};

/// Zero padding used by the random crop.
pub const CROP_PADDING: usize = 4;

/// Random crop from the zero-padded image and a horizontal flip with
/// probability 1/2, applied independently to every column of an image batch
/// of shape `c × h × w`.
pub fn augment_batch(x: &Matrix, shape: [usize; 3], rng: &mut Rng) -> Matrix {
    let [c, h, w] = shape;
    let n = x.cols();
    let mut out = Matrix::zeros(x.rows(), n);
    let p = CROP_PADDING as isize;
    for s in 0..n {
        let dy = rng.below(2 * CROP_PADDING + 1) as isize - p;
        let dx = rng.below(2 * CROP_PADDING + 1) as isize - p;
        let flip = rng.below(2) == 1;
        for ch in 0..c {
            for i in 0..h {
                for j in 0..w {
                    let src_i = i as isize + dy;
                    let jj = if flip { w - 1 - j } else { j };
                    let src_j = jj as isize + dx;
                    if src_i < 0 || src_j < 0 || src_i >= h as isize || src_j >= w as isize {
                        continue;
                    }
                    let from = (ch * h + src_i as usize) * w + src_j as usize;
                    out[((ch * h + i) * w + j, s)] = x[(from, s)];
                }
            }
        }
    }
    out
}
