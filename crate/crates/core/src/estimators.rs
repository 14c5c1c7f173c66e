//! Janossy masses, factorial moments, correlation functions and the series
//! converting between Janossy and factorial-moment masses.
//!
//! With `J_k = J_{B,k}(D x B^{k-m})` and `alpha_k = alpha_k(B^k)`:
//!
//! ```text
//! alpha_m(D x B^{m-1}) = sum_{k >= m} k!/(k-m)! J_k
//! J_m(B^m)             = (1/m!) sum_{k >= 0} (-1)^k / k! alpha_{m+k}
//! ```

use crate::error::{GibbsError, Result};
use crate::measure::{CountingMeasure, Point, Window};
use crate::models::PapangelouModel;
use crate::sampler::SampleBatch;
use crate::stats::{factorial, falling_factorial, kahan_sum, poisson_tail, Estimate};

/// A supplied series counts as summable when its last term is at most this
/// fraction of the accumulated absolute sum.
pub const SUMMABILITY_TOL: f64 = 1e-8;

/// Default number of terms beyond `m` used by the conversion series.
pub const DEFAULT_EXTRA_TERMS: usize = 30;

fn indicator(b: bool) -> f64 {
    f64::from(u8::from(b))
}

/// Empirical `P(eta(B) = m)`, the mass `J_{B,m}(B^m)`.
pub fn estimate_janossy_mass(samples: &SampleBatch, b: &Window, m: usize) -> Estimate {
    let xs: Vec<f64> = samples
        .configs
        .iter()
        .map(|mu| indicator(mu.total(b) == m))
        .collect();
    Estimate::from_samples(&xs)
}

/// Empirical Janossy masses `P(eta(B) = k)` for `k = 0..=max + 1`. The
/// trailing entry is zero, which closes the series for the converters.
pub fn janossy_masses(samples: &SampleBatch, b: &Window) -> Vec<f64> {
    let counts: Vec<usize> = samples.configs.iter().map(|mu| mu.total(b)).collect();
    let max = counts.iter().copied().max().unwrap_or(0);
    let mut hist = vec![0usize; max + 2];
    for c in &counts {
        hist[*c] += 1;
    }
    let n = counts.len().max(1) as f64;
    hist.into_iter().map(|h| h as f64 / n).collect()
}

/// Number of ordered tuples of distinct points `(x_1, ..., x_m)` of `mu`
/// with `x_j` in `boxes[j]`.
pub fn factorial_count(mu: &CountingMeasure, boxes: &[Window]) -> u64 {
    let pts = mu.points();
    let members: Vec<Vec<usize>> = boxes
        .iter()
        .map(|b| (0..pts.len()).filter(|&i| b.contains(&pts[i])).collect())
        .collect();
    fn walk(members: &[Vec<usize>], used: &mut Vec<usize>) -> u64 {
        let Some((first, rest)) = members.split_first() else {
            return 1;
        };
        let mut total = 0;
        for &i in first {
            if !used.contains(&i) {
                used.push(i);
                total += walk(rest, used);
                used.pop();
            }
        }
        total
    }
    walk(&members, &mut Vec::with_capacity(boxes.len()))
}

/// Sample mean of the factorial-measure mass of `D_1 x ... x D_m`,
/// estimating `alpha_m(D_1 x ... x D_m)`.
pub fn estimate_factorial_moment(samples: &SampleBatch, boxes: &[Window]) -> Result<Estimate> {
    if boxes.is_empty() {
        return Err(crate::error::invalid("boxes", "order m must be at least 1"));
    }
    let xs: Vec<f64> = samples
        .configs
        .iter()
        .map(|mu| factorial_count(mu, boxes) as f64)
        .collect();
    Ok(Estimate::from_samples(&xs))
}

/// Empirical `alpha_k(B^k)` for `k = 0..=max + 1` (`alpha_0 = 1`).
pub fn factorial_moment_masses(samples: &SampleBatch, b: &Window) -> Vec<f64> {
    let counts: Vec<usize> = samples.configs.iter().map(|mu| mu.total(b)).collect();
    let max = counts.iter().copied().max().unwrap_or(0);
    let n = counts.len().max(1) as f64;
    (0..=max + 1)
        .map(|k| kahan_sum(counts.iter().map(|&c| falling_factorial(c, k))) / n)
        .collect()
}

/// `sum_{k=m}^{K} k!/(k-m)! J_k` where `janossy[k] = J_{B,k}(D x B^{k-m})`
/// (entries below `m` are ignored).
///
/// Fails when the last supplied term is not negligible, i.e. the series
/// has not been carried far enough to be summed.
pub fn factorial_from_janossy(janossy: &[f64], m: usize) -> Result<f64> {
    if janossy.len() <= m {
        return Err(GibbsError::NotSummable {
            cutoff: janossy.len().saturating_sub(1),
            reason: format!("no Janossy terms of order >= {m}"),
        });
    }
    let terms: Vec<f64> = (m..janossy.len())
        .map(|k| falling_factorial(k, m) * janossy[k])
        .collect();
    let sum = kahan_sum(terms.iter().copied());
    let last = *terms.last().expect("nonempty");
    if last.abs() > SUMMABILITY_TOL * sum.abs() {
        return Err(GibbsError::NotSummable {
            cutoff: janossy.len() - 1,
            reason: format!("last term {last:e} is not negligible against the sum {sum:e}"),
        });
    }
    Ok(sum)
}

/// Value of an alternating conversion series and a bound on what was
/// left out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue {
    pub value: f64,
    pub remainder: f64,
}

/// `(1/m!) sum_{k=0}^{K-m} (-1)^k / k! alpha_{m+k}` with `alpha[k] = alpha_k(B^k)`
/// (so `alpha[0] = 1`).
///
/// Requires `sum_k alpha_{m+k} / k!` to have converged at the cutoff. The
/// remainder uses the Ruelle ceiling `alpha_k <= c^k` when `ruelle` gives
/// `c = int_B theta d lambda`, otherwise the size of the last term.
pub fn janossy_from_factorial(alpha: &[f64], m: usize, ruelle: Option<f64>) -> Result<SeriesValue> {
    if alpha.len() <= m {
        return Err(GibbsError::NotSummable {
            cutoff: alpha.len().saturating_sub(1),
            reason: format!("no factorial moments of order >= {m}"),
        });
    }
    let magnitudes: Vec<f64> = (m..alpha.len())
        .map(|j| alpha[j] / factorial(j - m))
        .collect();
    if magnitudes.iter().any(|a| !a.is_finite()) {
        return Err(GibbsError::NotSummable {
            cutoff: alpha.len() - 1,
            reason: "a factorial moment is not finite".into(),
        });
    }
    let abs_sum = kahan_sum(magnitudes.iter().map(|a| a.abs()));
    let last = magnitudes.last().expect("nonempty").abs();
    if last > SUMMABILITY_TOL * abs_sum {
        return Err(GibbsError::NotSummable {
            cutoff: alpha.len() - 1,
            reason: format!(
                "sum_k alpha_(m+k)/k! has not converged: last term {last:e} vs partial sum {abs_sum:e}"
            ),
        });
    }
    let signed = magnitudes
        .iter()
        .enumerate()
        .map(|(k, a)| if k % 2 == 0 { *a } else { -a });
    let mf = factorial(m);
    let remainder = match ruelle {
        Some(c) => c.powi(m as i32) * poisson_tail(c, magnitudes.len() - 1) / mf,
        None => last / mf,
    };
    Ok(SeriesValue {
        value: kahan_sum(signed) / mf,
        remainder,
    })
}

/// A direct estimate set against the same quantity obtained through a
/// conversion series applied to other estimates from the same batch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConversionCheck {
    pub m: usize,
    pub direct: Estimate,
    pub converted: Estimate,
}

impl ConversionCheck {
    pub fn z_score(&self) -> f64 {
        self.direct.z_score(&self.converted)
    }
}

/// `alpha_m(B^m)` directly, and from the empirical Janossy masses through
/// [`factorial_from_janossy`]. The conversion is linear in the sample
/// frequencies, so its standard error is that of the per-sample value
/// `N!/(N-m)!`.
pub fn check_factorial_conversion(
    samples: &SampleBatch,
    b: &Window,
    m: usize,
) -> Result<ConversionCheck> {
    let boxes = vec![b.clone(); m.max(1)];
    let direct = if m == 0 {
        Estimate::exact(1.0)
    } else {
        estimate_factorial_moment(samples, &boxes)?
    };
    let value = factorial_from_janossy(&janossy_masses(samples, b), m)?;
    let per_sample: Vec<f64> = samples
        .configs
        .iter()
        .map(|mu| falling_factorial(mu.total(b), m))
        .collect();
    let converted = Estimate {
        value,
        ..Estimate::from_samples(&per_sample)
    };
    Ok(ConversionCheck {
        m,
        direct,
        converted,
    })
}

/// `P(eta(B) = m)` directly, and from the empirical factorial moments
/// through [`janossy_from_factorial`].
pub fn check_janossy_conversion(
    samples: &SampleBatch,
    b: &Window,
    m: usize,
) -> Result<ConversionCheck> {
    let direct = estimate_janossy_mass(samples, b, m);
    let value = janossy_from_factorial(&factorial_moment_masses(samples, b), m, None)?.value;
    Ok(ConversionCheck {
        m,
        direct,
        converted: Estimate { value, ..direct },
    })
}

/// `rho_m(x_1..x_m) = E[kappa_m(x_1..x_m, eta)]`.
pub fn correlation_from_kappa(
    model: &PapangelouModel,
    samples: &SampleBatch,
    xs: &[Point],
) -> Estimate {
    let vals: Vec<f64> = samples
        .configs
        .iter()
        .map(|eta| model.kappa_m(xs, eta))
        .collect();
    Estimate::from_samples(&vals)
}

/// `j_{B,m}(x_1..x_m) = (1/m!) E[1{eta(B) = 0} kappa_m(x_1..x_m, eta)]`.
pub fn janossy_from_kappa(
    model: &PapangelouModel,
    samples: &SampleBatch,
    b: &Window,
    xs: &[Point],
) -> Estimate {
    let vals: Vec<f64> = samples
        .configs
        .iter()
        .map(|eta| {
            if eta.total(b) == 0 {
                model.kappa_m(xs, eta)
            } else {
                0.0
            }
        })
        .collect();
    Estimate::from_samples(&vals).scale(1.0 / factorial(xs.len()))
}

/// `E[2^{eta(B)}]`, which equals `1 + sum_m alpha_m(B^m)/m!`.
pub fn expected_two_power(samples: &SampleBatch, b: &Window) -> Estimate {
    let vals: Vec<f64> = samples
        .configs
        .iter()
        .map(|mu| 2f64.powi(mu.total(b) as i32))
        .collect();
    Estimate::from_samples(&vals)
}

/// One row of the Ruelle-condition monitor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RuelleRow {
    pub m: usize,
    pub moment: Estimate,
    /// `(int_B theta d lambda)^m`.
    pub moment_bound: f64,
    pub janossy: Estimate,
    /// `(int_B theta d lambda)^m / m!`.
    pub janossy_bound: f64,
}

impl RuelleRow {
    /// Both bounds hold within `k` standard errors.
    pub fn holds(&self, k: f64) -> bool {
        self.moment.value <= self.moment_bound + k * self.moment.stderr + 1e-12
            && self.janossy.value <= self.janossy_bound + k * self.janossy.stderr + 1e-12
    }
}

/// Compares `alpha_m(B^m)` with `c^m` and `P(eta(B) = m)` with `c^m/m!`
/// for `m = 1..=max_m`, where `c = int_B theta d lambda`.
pub fn ruelle_monitor(samples: &SampleBatch, b: &Window, c: f64, max_m: usize) -> Vec<RuelleRow> {
    (1..=max_m)
        .map(|m| {
            let boxes = vec![b.clone(); m];
            let bound = c.powi(m as i32);
            RuelleRow {
                m,
                moment: estimate_factorial_moment(samples, &boxes).expect("m >= 1"),
                moment_bound: bound,
                janossy: estimate_janossy_mass(samples, b, m),
                janossy_bound: bound / factorial(m),
            }
        })
        .collect()
}

/// An order-`m` factorial moment over a product of boxes.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    pub m: usize,
    pub boxes: Vec<Window>,
    pub estimate: Estimate,
}

impl MomentTable {
    pub const CSV_HEADER: &'static str = "m,boxes,value,stderr,n";

    pub fn estimate(samples: &SampleBatch, boxes: &[Window]) -> Result<Self> {
        Ok(Self {
            m: boxes.len(),
            boxes: boxes.to_vec(),
            estimate: estimate_factorial_moment(samples, boxes)?,
        })
    }

    /// Boxes are written as `[l0:u0]x[l1:u1]` and joined by `*`.
    pub fn csv_row(&self) -> String {
        let labels: Vec<String> = self.boxes.iter().map(Window::label).collect();
        format!(
            "{},{},{},{},{}",
            self.m,
            labels.join("*"),
            self.estimate.value,
            self.estimate.stderr,
            self.estimate.n
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedRecord;

    fn batch(configs: Vec<CountingMeasure>) -> SampleBatch {
        let seeds = (0..configs.len())
            .map(|i| SeedRecord::new(0, 0, i as u64))
            .collect();
        SampleBatch {
            configs,
            seeds,
            dominating: None,
        }
    }

    fn pt(x: f64, y: f64) -> Point {
        Point::new(&[x, y]).unwrap()
    }

    #[test]
    fn factorial_count_matches_enumeration() {
        let mu: CountingMeasure = vec![pt(0.1, 0.1), pt(0.6, 0.1), pt(0.7, 0.2), pt(0.1, 0.9)]
            .into_iter()
            .collect();
        let left = Window::new(vec![0.0, 0.0], vec![0.5, 1.0]).unwrap();
        let all = Window::unit(2).unwrap();
        let boxes = [left.clone(), all.clone()];
        let brute = mu
            .factorial_tuples(2)
            .filter(|t| left.contains(&t[0]) && all.contains(&t[1]))
            .count() as u64;
        assert_eq!(factorial_count(&mu, &boxes), brute);
        assert_eq!(factorial_count(&mu, &[all.clone(), all.clone(), all]), 24);
    }

    #[test]
    fn masses_sum_to_one() {
        let b = Window::unit(2).unwrap();
        let s = batch(vec![
            CountingMeasure::empty(),
            vec![pt(0.2, 0.2)].into_iter().collect(),
            vec![pt(0.2, 0.2), pt(0.3, 0.3)].into_iter().collect(),
        ]);
        let j = janossy_masses(&s, &b);
        assert_eq!(kahan_sum(j.iter().copied()), 1.0);
        assert_eq!(*j.last().unwrap(), 0.0);
    }

    #[test]
    fn single_janossy_term() {
        assert_eq!(factorial_from_janossy(&[0.3, 0.7, 0.0], 1).unwrap(), 0.7);
        assert!(factorial_from_janossy(&[0.3, 0.7], 1).is_err());
    }

    #[test]
    fn empty_process_has_unit_void_mass() {
        let alpha = [1.0, 0.0, 0.0, 0.0];
        let j = janossy_from_factorial(&alpha, 0, None).unwrap();
        assert_eq!(j.value, 1.0);
        assert_eq!(j.remainder, 0.0);
    }

    #[test]
    fn diverging_moments_are_rejected() {
        let alpha: Vec<f64> = (0..12)
            .map(|k| factorial(k) * 10f64.powi(k as i32))
            .collect();
        assert!(matches!(
            janossy_from_factorial(&alpha, 0, None),
            Err(GibbsError::NotSummable { .. })
        ));
    }

    #[test]
    fn moment_table_csv() {
        let s = batch(vec![vec![pt(0.2, 0.2), pt(0.3, 0.3)].into_iter().collect()]);
        let b = Window::unit(2).unwrap();
        let t = MomentTable::estimate(&s, &[b.clone(), b]).unwrap();
        assert_eq!(t.csv_row(), "2,[0:1]x[0:1]*[0:1]x[0:1],2,0,1");
    }
}
