use serde::Serialize;

use crate::error::{Error, Result};

/// Probabilities reported by [`SummaryStats::quantiles`].
pub const QUANTILE_LEVELS: [f64; 5] = [0.01, 0.25, 0.50, 0.75, 0.99];

/// Mean, population variance and the 1/25/50/75/99 % quantiles of a sample.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryStats {
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
    pub quantiles: [f64; 5],
}

impl SummaryStats {
    pub fn std(&self) -> f64 {
        self.variance.sqrt()
    }

    pub fn median(&self) -> f64 {
        self.quantiles[2]
    }

    pub fn iqr(&self) -> f64 {
        self.quantiles[3] - self.quantiles[1]
    }

    /// `(name, value)` pairs in a fixed order, for CSV output.
    pub fn named(&self) -> [(&'static str, f64); 7] {
        [
            ("mean", self.mean),
            ("variance", self.variance),
            ("q01", self.quantiles[0]),
            ("q25", self.quantiles[1]),
            ("q50", self.quantiles[2]),
            ("q75", self.quantiles[3]),
            ("q99", self.quantiles[4]),
        ]
    }
}

pub fn summarize(samples: &[f64]) -> Result<SummaryStats> {
    if samples.is_empty() {
        return Err(Error::Empty("summarize"));
    }
    let (mean, variance) = mean_variance(samples);
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut quantiles = [0.0; 5];
    for (q, &p) in quantiles.iter_mut().zip(&QUANTILE_LEVELS) {
        *q = quantile_sorted(&sorted, p);
    }
    Ok(SummaryStats {
        count: samples.len(),
        mean,
        variance,
        quantiles,
    })
}

/// Two-pass mean and population variance. Returns `(NaN, NaN)` for empty input.
pub fn mean_variance(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var)
}

/// Linear interpolation between order statistics at position `p·(n-1)`.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = p.clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = h - lo as f64;
    // Written as a convex combination so equal neighbours give exactly that value.
    if frac == 0.0 {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}
