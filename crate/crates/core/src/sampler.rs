//! Finite-volume samplers.
//!
//! [`FiniteGibbs`] bundles a model restricted to a window `C` with a
//! boundary condition `psi`, the reference measure and the local stability
//! bound `theta`. It provides exact rejection sampling against the
//! dominating Poisson process `Poisson(theta lambda_C)`, birth-death
//! Metropolis-Hastings chains, and a coupled continuous-time birth-death
//! construction that runs several boundary conditions on one dominating
//! process.

use rand::Rng;
use rand_distr::{Distribution, Exp, Poisson};
use serde_json::json;

use crate::error::{GibbsError, Result};
use crate::measure::{
    point_to_json, CountingMeasure, Point, ReferenceMeasure, ScalarField, Window,
};
use crate::models::{BoundaryCondition, PapangelouModel};
use crate::rng::{replicate_map, SeedRecord};

/// Finite Gibbs process on a window with a frozen boundary condition.
#[derive(Debug, Clone)]
pub struct FiniteGibbs {
    model: PapangelouModel,
    reference: ReferenceMeasure,
    window: Window,
    theta: ScalarField,
    marked: bool,
    lambda_sup: f64,
    theta_sup: f64,
    lambda_mass: f64,
    stability_mass: f64,
}

/// Outcome of one rejection sample.
#[derive(Debug, Clone, PartialEq)]
pub struct RejectionDraw {
    pub sample: CountingMeasure,
    /// The accepted proposal. Equal to `sample`, so `sample <= dominating`
    /// holds trivially.
    pub dominating: CountingMeasure,
    pub attempts: u64,
}

impl FiniteGibbs {
    /// Restricts `model` to `window` with boundary `psi`. Fails if the model
    /// has no local stability bound.
    pub fn new(
        model: &PapangelouModel,
        reference: &ReferenceMeasure,
        window: &Window,
        psi: &BoundaryCondition,
    ) -> Result<Self> {
        let dim = window.dim();
        model.validate(dim)?;
        reference.intensity.validate(dim)?;
        if psi.measure().points().iter().any(|p| window.contains(p)) {
            return Err(GibbsError::BoundaryInsideWindow);
        }
        if let Some(p) = psi.measure().points().iter().find(|p| p.dim() != dim) {
            return Err(GibbsError::DimensionMismatch {
                expected: dim,
                got: p.dim(),
            });
        }
        let theta = model
            .stability_field()
            .ok_or(GibbsError::NotLocallyStable)?;
        let lambda_mass = reference.mass(window);
        let stability_mass = model
            .stability_mass(reference, window)
            .ok_or(GibbsError::NotLocallyStable)?;
        if !lambda_mass.is_finite() || !stability_mass.is_finite() {
            return Err(crate::error::invalid(
                "intensity",
                "mass over the window is not finite",
            ));
        }
        Ok(Self {
            model: model.restricted(window, psi),
            reference: reference.clone(),
            window: window.clone(),
            lambda_sup: reference.intensity.sup_over(window),
            theta_sup: theta.sup_over(window),
            theta,
            marked: model.is_marked(),
            lambda_mass,
            stability_mass,
        })
    }

    /// The restricted intensity `kappa^{(C, psi)}`.
    pub fn model(&self) -> &PapangelouModel {
        &self.model
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn reference(&self) -> &ReferenceMeasure {
        &self.reference
    }

    pub fn is_marked(&self) -> bool {
        self.marked
    }

    /// `lambda(C)`.
    pub fn lambda_mass(&self) -> f64 {
        self.lambda_mass
    }

    /// `int_C theta d lambda`.
    pub fn stability_mass(&self) -> f64 {
        self.stability_mass
    }

    pub fn theta(&self, x: &Point) -> f64 {
        self.theta.eval(x)
    }

    /// Attaches a uniform mark when the model is marked.
    fn decorate<R: Rng + ?Sized>(&self, p: Point, rng: &mut R) -> Point {
        if self.marked {
            p.with_mark(rng.random()).expect("mark in [0,1)")
        } else {
            p
        }
    }

    /// One point from `lambda_C / lambda(C)`.
    pub fn draw_location<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        loop {
            let p = self.window.sample_uniform(rng);
            let accept = self.reference.density(&p) / self.lambda_sup;
            if accept >= 1.0 || rng.random::<f64>() < accept {
                return self.decorate(p, rng);
            }
        }
    }

    /// One point from `theta lambda_C / int_C theta d lambda`.
    fn draw_dominating_location<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let sup = self.lambda_sup * self.theta_sup;
        loop {
            let p = self.window.sample_uniform(rng);
            let accept = self.reference.density(&p) * self.theta.eval(&p) / sup;
            if accept >= 1.0 || rng.random::<f64>() < accept {
                return self.decorate(p, rng);
            }
        }
    }

    /// A draw from `Poisson(theta lambda_C)`.
    pub fn sample_dominating<R: Rng + ?Sized>(&self, rng: &mut R) -> CountingMeasure {
        let theta = &self.theta;
        let reference = &self.reference;
        let pts = poisson_thinned(
            |p| reference.density(p) * theta.eval(p),
            self.lambda_sup * self.theta_sup,
            &self.window,
            rng,
        );
        pts.into_iter().map(|p| self.decorate(p, rng)).collect()
    }

    /// `log kappa_m(x_1..x_m, psi) - sum log theta(x_i)`, the log acceptance
    /// probability of a proposal.
    pub fn log_acceptance(&self, proposal: &CountingMeasure) -> f64 {
        let xs = proposal.points();
        let ln_kappa = self.model.ln_kappa_m_parts(xs, &[]);
        if ln_kappa == f64::NEG_INFINITY {
            return ln_kappa;
        }
        // same summation order as ln_kappa_m_parts, so a Poisson model
        // gives exactly zero
        let mut ln_theta = 0.0;
        for x in xs.iter().rev() {
            ln_theta += self.theta.eval(x).ln();
        }
        ln_kappa - ln_theta
    }

    /// Exact sample by rejection from the dominating Poisson process.
    pub fn sample_rejection<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        max_attempts: u64,
    ) -> Result<RejectionDraw> {
        let mut acceptance_sum = 0.0;
        for attempt in 1..=max_attempts {
            let proposal = self.sample_dominating(rng);
            let p = self.log_acceptance(&proposal).exp();
            acceptance_sum += p.min(1.0);
            if p >= 1.0 || rng.random::<f64>() < p {
                return Ok(RejectionDraw {
                    sample: proposal.clone(),
                    dominating: proposal,
                    attempts: attempt,
                });
            }
        }
        Err(GibbsError::BudgetExhausted {
            attempts: max_attempts,
            acceptance_rate: if max_attempts == 0 {
                0.0
            } else {
                acceptance_sum / max_attempts as f64
            },
        })
    }

    /// Proposals per sweep: twice the expected dominating count, at least 2.
    pub fn sweep_length(&self) -> usize {
        2 * (self.stability_mass.ceil() as usize).max(1)
    }

    /// Default burn-in in proposals: `ceil(10 lambda(C) sup theta)` sweeps.
    pub fn burn_in_steps(&self) -> usize {
        let sweeps = (10.0 * self.lambda_mass * self.theta_sup).ceil().max(1.0) as usize;
        sweeps * self.sweep_length()
    }

    /// A birth-death chain started from the empty configuration.
    pub fn mcmc_chain(&self) -> McmcChain<'_> {
        McmcChain {
            target: self,
            state: Vec::new(),
        }
    }

    /// Final state after `steps` proposals from the empty configuration.
    pub fn sample_mcmc<R: Rng + ?Sized>(&self, steps: usize, rng: &mut R) -> CountingMeasure {
        let mut chain = self.mcmc_chain();
        for _ in 0..steps {
            chain.step(rng);
        }
        chain.into_state()
    }

    /// `n` rejection samples on replicate streams `(master, stream, i)`.
    pub fn rejection_batch(
        &self,
        n: usize,
        master: u64,
        stream: u64,
        max_attempts: u64,
    ) -> Result<SampleBatch> {
        let draws = replicate_map(n, |i| {
            let seed = SeedRecord::new(master, stream, i as u64);
            self.sample_rejection(&mut seed.rng(), max_attempts)
                .map(|d| (d, seed))
        });
        let mut batch = SampleBatch {
            configs: Vec::with_capacity(n),
            seeds: Vec::with_capacity(n),
            dominating: Some(Vec::with_capacity(n)),
        };
        for draw in draws {
            let (d, seed) = draw?;
            batch.configs.push(d.sample);
            batch.seeds.push(seed);
            if let Some(dom) = batch.dominating.as_mut() {
                dom.push(d.dominating);
            }
        }
        Ok(batch)
    }

    /// `n` independent chains of `steps` proposals each (default burn-in when
    /// `None`).
    pub fn mcmc_batch(
        &self,
        n: usize,
        master: u64,
        stream: u64,
        steps: Option<usize>,
    ) -> SampleBatch {
        let steps = steps.unwrap_or_else(|| self.burn_in_steps());
        let out = replicate_map(n, |i| {
            let seed = SeedRecord::new(master, stream, i as u64);
            (self.sample_mcmc(steps, &mut seed.rng()), seed)
        });
        let (configs, seeds) = out.into_iter().unzip();
        SampleBatch {
            configs,
            seeds,
            dominating: None,
        }
    }
}

/// Birth-death Metropolis-Hastings chain for a [`FiniteGibbs`] target.
#[derive(Debug, Clone)]
pub struct McmcChain<'a> {
    target: &'a FiniteGibbs,
    state: Vec<Point>,
}

impl McmcChain<'_> {
    pub fn state(&self) -> &[Point] {
        &self.state
    }

    pub fn into_state(self) -> CountingMeasure {
        CountingMeasure::new(self.state)
    }

    /// One proposal. Returns whether it was accepted.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> bool {
        let t = self.target;
        let n = self.state.len();
        if rng.random::<f64>() < 0.5 {
            let x = t.draw_location(rng);
            let k = t.model.kappa_parts(&x, &[&self.state]);
            let ratio = k * t.lambda_mass / (n + 1) as f64;
            if ratio >= 1.0 || rng.random::<f64>() < ratio {
                self.state.push(x);
                return true;
            }
        } else if n > 0 {
            let i = rng.random_range(0..n);
            let x = self.state[i];
            let rest: Vec<Point> = self
                .state
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, p)| *p)
                .collect();
            let k = t.model.kappa_parts(&x, &[&rest]);
            // a zero denominator means the ratio is infinite
            let accept = k == 0.0 || {
                let ratio = n as f64 / (t.lambda_mass * k);
                ratio >= 1.0 || rng.random::<f64>() < ratio
            };
            if accept {
                self.state.remove(i);
                return true;
            }
        }
        false
    }
}

/// Replicate samples with their seed records.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub configs: Vec<CountingMeasure>,
    pub seeds: Vec<SeedRecord>,
    /// Dominating Poisson realizations, one per sample, when the sampler
    /// provides them.
    pub dominating: Option<Vec<CountingMeasure>>,
}

impl SampleBatch {
    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    /// Every sample is a sub-multiset of its dominating realization. Vacuous
    /// when no dominating realizations are stored.
    pub fn is_dominated(&self) -> bool {
        match &self.dominating {
            None => true,
            Some(dom) => {
                dom.len() == self.configs.len()
                    && self
                        .configs
                        .iter()
                        .zip(dom)
                        .all(|(xi, phi)| xi.is_submultiset_of(phi))
            }
        }
    }

    /// One JSON object per line: `{"seed": .., "points": [..]}` plus
    /// `"dominating"` when requested and available.
    pub fn to_json_lines(&self, with_dominating: bool) -> String {
        let mut out = String::new();
        for (i, (mu, seed)) in self.configs.iter().zip(&self.seeds).enumerate() {
            let mut rec = json!({
                "seed": seed,
                "points": mu.points().iter().map(point_to_json).collect::<Vec<_>>(),
            });
            if with_dominating {
                if let Some(dom) = &self.dominating {
                    rec["dominating"] = dom[i]
                        .points()
                        .iter()
                        .map(point_to_json)
                        .collect::<Vec<_>>()
                        .into();
                }
            }
            out.push_str(&rec.to_string());
            out.push('\n');
        }
        out
    }
}

/// Poisson process with intensity `density` (bounded by `sup`) on `w`, by
/// thinning a homogeneous process.
fn poisson_thinned<R: Rng + ?Sized>(
    density: impl Fn(&Point) -> f64,
    sup: f64,
    w: &Window,
    rng: &mut R,
) -> Vec<Point> {
    let mean = sup * w.volume();
    if !(mean > 0.0) {
        return Vec::new();
    }
    let n = Poisson::new(mean)
        .expect("finite positive mean")
        .sample(rng) as usize;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let p = w.sample_uniform(rng);
        let keep = density(&p) / sup;
        if keep >= 1.0 || rng.random::<f64>() < keep {
            out.push(p);
        }
    }
    out
}

/// Poisson process with intensity measure `reference` restricted to `w`.
pub fn sample_poisson<R: Rng + ?Sized>(
    reference: &ReferenceMeasure,
    w: &Window,
    rng: &mut R,
) -> CountingMeasure {
    let sup = reference.intensity.sup_over(w);
    CountingMeasure::new(poisson_thinned(|p| reference.density(p), sup, w, rng))
}

/// `n` Poisson samples on replicate streams `(master, stream, i)`.
pub fn poisson_batch(
    reference: &ReferenceMeasure,
    w: &Window,
    n: usize,
    master: u64,
    stream: u64,
) -> SampleBatch {
    let out = replicate_map(n, |i| {
        let seed = SeedRecord::new(master, stream, i as u64);
        (sample_poisson(reference, w, &mut seed.rng()), seed)
    });
    let (configs, seeds) = out.into_iter().unzip();
    SampleBatch {
        configs,
        seeds,
        dominating: None,
    }
}

/// Exact Gibbs sample on `c` with boundary `psi`. See
/// [`FiniteGibbs::sample_rejection`].
pub fn sample_gibbs_rejection<R: Rng + ?Sized>(
    model: &PapangelouModel,
    reference: &ReferenceMeasure,
    c: &Window,
    psi: &BoundaryCondition,
    rng: &mut R,
    max_attempts: u64,
) -> Result<RejectionDraw> {
    FiniteGibbs::new(model, reference, c, psi)?.sample_rejection(rng, max_attempts)
}

/// Final state of a birth-death chain run for `steps` proposals.
pub fn sample_gibbs_mcmc<R: Rng + ?Sized>(
    model: &PapangelouModel,
    reference: &ReferenceMeasure,
    c: &Window,
    psi: &BoundaryCondition,
    steps: usize,
    rng: &mut R,
) -> Result<CountingMeasure> {
    Ok(FiniteGibbs::new(model, reference, c, psi)?.sample_mcmc(steps, rng))
}

/// Attaches i.i.d. uniform marks to the points of `eta` in list order.
pub fn randomize<R: Rng + ?Sized>(eta: &CountingMeasure, rng: &mut R) -> CountingMeasure {
    eta.points()
        .iter()
        .map(|p| p.with_mark(rng.random()).expect("mark in [0,1)"))
        .collect()
}

/// Runs one continuous-time birth-death process per target, all thinned
/// from a shared dominating process on `[0, horizon]`.
///
/// The dominating process has births at rate `theta lambda_C` and unit
/// death rate per point. Each dominating birth `x` carries a uniform `u`
/// and enters target `k` iff `u theta(x) < kappa_k(x, current state)`;
/// deaths are shared. Each thinned process is the birth-death dynamics of
/// its Gibbs law started from the empty configuration.
///
/// All targets must share the window, reference measure and stability
/// bound (typically: one model, different boundary conditions).
pub fn coupled_birth_death<R: Rng + ?Sized>(
    targets: &[&FiniteGibbs],
    horizon: f64,
    rng: &mut R,
) -> Vec<CountingMeasure> {
    let Some(lead) = targets.first() else {
        return Vec::new();
    };
    let birth_rate = lead.stability_mass;
    let mut points: Vec<Point> = Vec::new();
    let mut member: Vec<Vec<bool>> = Vec::new();
    let mut t = 0.0;
    loop {
        let rate = birth_rate + points.len() as f64;
        if !(rate > 0.0) {
            break;
        }
        t += Exp::new(rate).expect("positive rate").sample(rng);
        if t > horizon {
            break;
        }
        if rng.random::<f64>() * rate < birth_rate {
            let x = lead.draw_dominating_location(rng);
            let u: f64 = rng.random();
            let bound = u * lead.theta(&x);
            let flags = targets
                .iter()
                .enumerate()
                .map(|(k, target)| {
                    let state: Vec<Point> = points
                        .iter()
                        .zip(&member)
                        .filter(|(_, f)| f[k])
                        .map(|(p, _)| *p)
                        .collect();
                    bound < target.model.kappa_parts(&x, &[&state])
                })
                .collect();
            points.push(x);
            member.push(flags);
        } else {
            let i = rng.random_range(0..points.len());
            points.swap_remove(i);
            member.swap_remove(i);
        }
    }
    (0..targets.len())
        .map(|k| {
            points
                .iter()
                .zip(&member)
                .filter(|(_, f)| f[k])
                .map(|(p, _)| *p)
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    fn unit_square() -> Window {
        Window::unit(2).unwrap()
    }

    #[test]
    fn zero_intensity_gives_empty() {
        let mut rng = stream_rng(3, 0, 0);
        let r = ReferenceMeasure::new(ScalarField::constant(0.0));
        for _ in 0..50 {
            assert!(sample_poisson(&r, &unit_square(), &mut rng).is_empty());
        }
    }

    #[test]
    fn poisson_model_accepts_first_proposal() {
        let m = PapangelouModel::poisson(1.5).unwrap();
        let g = FiniteGibbs::new(
            &m,
            &ReferenceMeasure::lebesgue(),
            &unit_square(),
            &BoundaryCondition::empty(),
        )
        .unwrap();
        let mut rng = stream_rng(4, 0, 0);
        for _ in 0..200 {
            assert_eq!(g.sample_rejection(&mut rng, 1).unwrap().attempts, 1);
        }
    }

    #[test]
    fn hard_sphere_samples_respect_exclusion() {
        let m = PapangelouModel::hard_sphere(20.0, 0.1).unwrap();
        let g = FiniteGibbs::new(
            &m,
            &ReferenceMeasure::lebesgue(),
            &Window::cube(&[0.0, 0.0], 0.6).unwrap(),
            &BoundaryCondition::empty(),
        )
        .unwrap();
        let batch = g.rejection_batch(300, 5, 0, 1_000_000).unwrap();
        assert!(batch.is_dominated());
        let mcmc = g.mcmc_batch(100, 5, 1, None);
        for mu in batch.configs.iter().chain(&mcmc.configs) {
            let p = mu.points();
            for i in 0..p.len() {
                for j in i + 1..p.len() {
                    assert!(p[i].dist(&p[j]) > 0.1);
                }
            }
        }
    }

    #[test]
    fn budget_exhaustion_reports_rate() {
        let m = PapangelouModel::hard_sphere(50.0, 0.5).unwrap();
        let g = FiniteGibbs::new(
            &m,
            &ReferenceMeasure::lebesgue(),
            &unit_square(),
            &BoundaryCondition::empty(),
        )
        .unwrap();
        let err = g
            .sample_rejection(&mut stream_rng(1, 0, 0), 10)
            .unwrap_err();
        assert!(matches!(
            err,
            GibbsError::BudgetExhausted { attempts: 10, .. }
        ));
    }

    #[test]
    fn attractive_model_is_refused() {
        let m = PapangelouModel::pair_potential(
            1.0,
            crate::models::PairPotential::Step {
                radius: 0.1,
                gamma: -1.0,
            },
        )
        .unwrap();
        let err = FiniteGibbs::new(
            &m,
            &ReferenceMeasure::lebesgue(),
            &unit_square(),
            &BoundaryCondition::empty(),
        )
        .unwrap_err();
        assert!(matches!(err, GibbsError::NotLocallyStable));
    }

    #[test]
    fn randomize_keeps_ground_process() {
        let mut rng = stream_rng(2, 0, 0);
        assert!(randomize(&CountingMeasure::empty(), &mut rng).is_empty());
        let eta = sample_poisson(&ReferenceMeasure::lebesgue(), &unit_square(), &mut rng);
        let marked = randomize(&eta, &mut rng);
        let ground: CountingMeasure = marked.points().iter().map(|p| p.without_mark()).collect();
        assert_eq!(ground, eta);
        assert!(marked.points().iter().all(|p| p.mark().is_some()));
    }

    #[test]
    fn coupled_identical_boundaries_agree() {
        let m = PapangelouModel::hard_sphere(10.0, 0.1).unwrap();
        let w = unit_square();
        let g = FiniteGibbs::new(
            &m,
            &ReferenceMeasure::lebesgue(),
            &w,
            &BoundaryCondition::empty(),
        )
        .unwrap();
        let mut rng = stream_rng(8, 0, 0);
        let out = coupled_birth_death(&[&g, &g], 5.0, &mut rng);
        assert_eq!(out[0], out[1]);
    }

    #[test]
    fn batches_are_reproducible() {
        let m = PapangelouModel::strauss(2.0, 0.5, 0.1).unwrap();
        let g = FiniteGibbs::new(
            &m,
            &ReferenceMeasure::lebesgue(),
            &unit_square(),
            &BoundaryCondition::empty(),
        )
        .unwrap();
        let a = g.rejection_batch(64, 11, 2, 10_000).unwrap();
        let b = g.rejection_batch(64, 11, 2, 10_000).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_json_lines(true), b.to_json_lines(true));
    }
}
