use serde::{Deserialize, Serialize};

/// A Monte Carlo estimate. Exact values carry `stderr = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub n: u64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            stderr: 0.0,
            n: 0,
        }
    }

    /// Sample mean with standard error `sd / sqrt(n)`.
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self {
                value: f64::NAN,
                stderr: f64::NAN,
                n: 0,
            };
        }
        let mean = mean(xs);
        let stderr = if n > 1 {
            let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
            (ss / (n - 1) as f64).sqrt() / (n as f64).sqrt()
        } else {
            0.0
        };
        Self {
            value: mean,
            stderr,
            n: n as u64,
        }
    }

    pub fn scale(self, factor: f64) -> Self {
        Self {
            value: self.value * factor,
            stderr: self.stderr * factor.abs(),
            n: self.n,
        }
    }

    /// `(self - other) / sqrt(se1^2 + se2^2)`. Exact agreement gives 0,
    /// exact disagreement gives an infinite score.
    pub fn z_score(&self, other: &Estimate) -> f64 {
        let diff = self.value - other.value;
        let se = (self.stderr * self.stderr + other.stderr * other.stderr).sqrt();
        if diff == 0.0 {
            0.0
        } else {
            diff / se
        }
    }

    /// Whether `target` lies within `k` standard errors. A relative slack
    /// of 1e-12 absorbs rounding for exact (zero-stderr) values.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.stderr + 1e-12 * target.abs().max(1.0)
    }
}

/// Mean with pairwise-stable accumulation order (index order).
pub fn mean(xs: &[f64]) -> f64 {
    kahan_sum(xs.iter().copied()) / xs.len() as f64
}

/// Compensated (Neumaier) summation.
pub fn kahan_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

pub fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// `n (n-1) ... (n-m+1)`, zero when `m > n`.
pub fn falling_factorial(n: usize, m: usize) -> f64 {
    if m > n {
        return 0.0;
    }
    (n - m + 1..=n).map(|k| k as f64).product()
}

/// `sum_{k > cutoff} a^k / k!`.
pub fn poisson_tail(a: f64, cutoff: usize) -> f64 {
    if a == 0.0 {
        return 0.0;
    }
    let mut term = (0..=cutoff).fold(1.0, |t, k| if k == 0 { t } else { t * a / k as f64 });
    let mut sum = 0.0;
    for k in cutoff + 1..cutoff + 400 {
        term *= a / k as f64;
        sum += term;
        if term < 1e-300 || term < 1e-17 * sum {
            break;
        }
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn estimate_from_samples() {
        let e = Estimate::from_samples(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(e.value, 2.5);
        assert!((e.stderr - (5.0f64 / 3.0).sqrt() / 2.0).abs() < 1e-15);
        assert_eq!(e.n, 4);
    }

    #[test]
    fn z_score_of_exact_values() {
        assert_eq!(Estimate::exact(1.0).z_score(&Estimate::exact(1.0)), 0.0);
        assert!(Estimate::exact(1.0)
            .z_score(&Estimate::exact(2.0))
            .is_infinite());
    }

    #[test]
    fn kahan_beats_naive_cancellation() {
        let xs = [1e16, 1.0, -1e16];
        assert_eq!(kahan_sum(xs), 1.0);
    }

    #[test]
    fn falling_factorials() {
        assert_eq!(falling_factorial(4, 2), 12.0);
        assert_eq!(falling_factorial(3, 4), 0.0);
        assert_eq!(falling_factorial(5, 0), 1.0);
    }

    #[test]
    fn tail_of_exponential_series() {
        let t = poisson_tail(1.0, 2);
        assert!((t - (std::f64::consts::E - 2.5)).abs() < 1e-15);
        assert_eq!(poisson_tail(0.0, 3), 0.0);
    }
}
