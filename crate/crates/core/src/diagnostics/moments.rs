/// Streaming power sums for the mean, population variance and their
/// standard errors.
#[derive(Clone, Copy, Debug, Default)]
pub struct Moments {
    n: u64,
    s1: f64,
    s2: f64,
    s3: f64,
    s4: f64,
}

impl Moments {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        let x2 = x * x;
        self.n += 1;
        self.s1 += x;
        self.s2 += x2;
        self.s3 += x2 * x;
        self.s4 += x2 * x2;
    }

    pub fn extend(&mut self, xs: &[f64]) {
        xs.iter().for_each(|&x| self.push(x));
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.s1 / self.n as f64
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        (self.s2 / self.n as f64 - m * m).max(0.0)
    }

    /// Fourth central moment.
    pub fn central4(&self) -> f64 {
        let n = self.n as f64;
        let m = self.mean();
        let (e2, e3, e4) = (self.s2 / n, self.s3 / n, self.s4 / n);
        (e4 - 4.0 * m * e3 + 6.0 * m * m * e2 - 3.0 * m.powi(4)).max(0.0)
    }

    pub fn mean_se(&self) -> f64 {
        (self.variance() / self.n as f64).sqrt()
    }

    /// Large-sample standard error of the variance, `√((μ₄ − σ⁴) / n)`.
    pub fn variance_se(&self) -> f64 {
        let v = self.variance();
        ((self.central4() - v * v).max(0.0) / self.n as f64).sqrt()
    }
}
