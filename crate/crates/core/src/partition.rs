//! Partition functions and void probabilities of finite Gibbs processes.
//!
//! Two estimators of `Z_C(psi) = 1 + sum_m (1/m!) int_{C^m} kappa_m(x, psi) lambda^m(dx)`:
//!
//! - [`partition_series`]: the series itself, each term a plain Monte Carlo
//!   integral over `C^m`, truncated by the local stability bound;
//! - [`partition_poisson_mc`]: `e^{lambda(C)} E[exp(-H(Phi, psi))]` with
//!   `Phi ~ Poisson(lambda_C)`.

use serde::{Deserialize, Serialize};

use crate::error::{GibbsError, Result};
use crate::measure::{CountingMeasure, Point, ReferenceMeasure, Window};
use crate::models::{BoundaryCondition, PapangelouModel};
use crate::rng::chunked_samples;
use crate::sampler::{randomize, sample_poisson, FiniteGibbs};
use crate::stats::{factorial, kahan_sum, poisson_tail, Estimate};

/// Terms beyond the truncation floor after which the series is abandoned.
const MAX_EXTRA_TERMS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PartitionMethod {
    /// Truncated series with `budget` samples per term and relative
    /// truncation tolerance `eps`.
    Series { budget: usize, eps: f64 },
    /// Poisson expectation with `samples` draws.
    PoissonMc { samples: usize },
}

impl PartitionMethod {
    pub fn name(&self) -> &'static str {
        match self {
            PartitionMethod::Series { .. } => "series",
            PartitionMethod::PoissonMc { .. } => "poisson_mc",
        }
    }
}

/// A truncated series evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesResult {
    pub estimate: Estimate,
    /// `terms[m - 1]` estimates `(1/m!) int kappa_m d lambda^m`.
    pub terms: Vec<Estimate>,
    /// Last index summed.
    pub cutoff: usize,
    /// Bound on the omitted terms from local stability:
    /// `sum_{k > cutoff} M^k / k!` with `M = int_C theta d lambda`.
    pub tail_bound: f64,
}

/// Truncated series for `Z_C(psi)`.
///
/// Terms are summed up to at least `ceil(e M)`, `M = int_C theta d lambda`,
/// and then until a term drops below `eps` times the running sum.
pub fn partition_series(
    model: &PapangelouModel,
    reference: &ReferenceMeasure,
    c: &Window,
    psi: &BoundaryCondition,
    budget: usize,
    eps: f64,
    seed: u64,
) -> Result<SeriesResult> {
    if budget == 0 {
        return Err(crate::error::invalid(
            "budget",
            "need at least one sample per term",
        ));
    }
    if !(eps > 0.0) {
        return Err(crate::error::invalid(
            "eps",
            "truncation tolerance must be positive",
        ));
    }
    let target = FiniteGibbs::new(model, reference, c, psi)?;
    let big_m = target.stability_mass();
    let floor = (std::f64::consts::E * big_m).ceil() as usize;
    let volume = c.volume();
    let restricted = target.model();

    let mut terms: Vec<Estimate> = Vec::new();
    let mut values = vec![1.0];
    let mut var = 0.0;
    let mut m = 0;
    loop {
        m += 1;
        if m > floor + MAX_EXTRA_TERMS {
            return Err(GibbsError::NotSummable {
                cutoff: m - 1,
                reason: "partition series terms did not fall below tolerance".into(),
            });
        }
        let weight = volume.powi(m as i32) / factorial(m);
        let xs = chunked_samples(budget, seed, m as u64, |rng| {
            let pts: Vec<Point> = (0..m)
                .map(|_| {
                    let p = c.sample_uniform(rng);
                    if target.is_marked() {
                        p.with_mark(rand::Rng::random(rng)).expect("mark in [0,1)")
                    } else {
                        p
                    }
                })
                .collect();
            let density: f64 = pts.iter().map(|p| reference.density(p)).product();
            if density == 0.0 {
                return 0.0;
            }
            restricted.ln_kappa_m_parts(&pts, &[]).exp() * density
        });
        let term = Estimate::from_samples(&xs).scale(weight);
        values.push(term.value);
        var += term.stderr * term.stderr;
        terms.push(term);
        let running = kahan_sum(values.iter().copied());
        if m >= floor && term.value < eps * running {
            break;
        }
    }
    let cutoff = m;
    Ok(SeriesResult {
        estimate: Estimate {
            value: kahan_sum(values),
            stderr: var.sqrt(),
            n: (budget * cutoff) as u64,
        },
        terms,
        cutoff,
        tail_bound: poisson_tail(big_m, cutoff),
    })
}

/// `Z_C(psi) = e^{lambda(C)} E[exp(-H(Phi_C, psi))]` over `samples` draws of
/// `Phi ~ Poisson(lambda)`. Does not need local stability.
pub fn partition_poisson_mc(
    model: &PapangelouModel,
    reference: &ReferenceMeasure,
    c: &Window,
    psi: &BoundaryCondition,
    samples: usize,
    seed: u64,
) -> Result<Estimate> {
    if samples == 0 {
        return Err(crate::error::invalid("samples", "need at least one sample"));
    }
    model.validate(c.dim())?;
    reference.intensity.validate(c.dim())?;
    if psi.measure().points().iter().any(|p| c.contains(p)) {
        return Err(GibbsError::BoundaryInsideWindow);
    }
    let restricted = model.restricted(c, psi);
    let marked = model.is_marked();
    let mass = reference.mass(c);
    let weights = chunked_samples(samples, seed, 0, |rng| {
        let mut phi = sample_poisson(reference, c, rng);
        if marked {
            phi = randomize(&phi, rng);
        }
        energy_weight(&restricted, &phi)
    });
    Ok(Estimate::from_samples(&weights).scale(mass.exp()))
}

fn energy_weight(restricted: &PapangelouModel, phi: &CountingMeasure) -> f64 {
    if phi.is_empty() {
        1.0
    } else {
        restricted.ln_kappa_m_parts(phi.points(), &[]).exp()
    }
}

/// Partition function by the chosen method.
pub fn partition(
    model: &PapangelouModel,
    reference: &ReferenceMeasure,
    c: &Window,
    psi: &BoundaryCondition,
    method: PartitionMethod,
    seed: u64,
) -> Result<Estimate> {
    match method {
        PartitionMethod::Series { budget, eps } => {
            partition_series(model, reference, c, psi, budget, eps, seed).map(|r| r.estimate)
        }
        PartitionMethod::PoissonMc { samples } => {
            partition_poisson_mc(model, reference, c, psi, samples, seed)
        }
    }
}

/// `P(xi(C) = 0) = 1 / Z_C(psi)`, with delta-method standard error
/// `stderr(Z) / Z^2`.
pub fn void_probability(
    model: &PapangelouModel,
    reference: &ReferenceMeasure,
    c: &Window,
    psi: &BoundaryCondition,
    method: PartitionMethod,
    seed: u64,
) -> Result<Estimate> {
    let z = partition(model, reference, c, psi, method, seed)?;
    Ok(reciprocal(z))
}

pub(crate) fn reciprocal(z: Estimate) -> Estimate {
    Estimate {
        value: 1.0 / z.value,
        stderr: z.stderr / (z.value * z.value),
        n: z.n,
    }
}

/// One output line of a partition or void-probability evaluation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionRecord {
    pub op: String,
    pub model: String,
    pub window: Window,
    pub method: String,
    pub value: f64,
    pub stderr: f64,
    pub n: u64,
}

impl PartitionRecord {
    pub fn new(
        op: &str,
        model: &PapangelouModel,
        window: &Window,
        method: PartitionMethod,
        estimate: Estimate,
    ) -> Self {
        Self {
            op: op.into(),
            model: model.name(),
            window: window.clone(),
            method: method.name().into(),
            value: estimate.value,
            stderr: estimate.stderr,
            n: estimate.n,
        }
    }
}
