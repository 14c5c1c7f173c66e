//! Library outputs against closed forms and independent reimplementations.

use gibbs::partition::{partition_poisson_mc, partition_series, void_probability, PartitionMethod};
use gibbs::rng::stream_rng;
use gibbs::sampler::{poisson_batch, FiniteGibbs, SampleBatch};
use gibbs::{
    BoundaryCondition, CountingMeasure, PairPotential, PapangelouModel, Point, ReferenceMeasure,
    ScalarField, Window,
};
use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, Poisson};

fn pt(x: f64, y: f64) -> Point {
    Point::new(&[x, y]).unwrap()
}

fn random_config(rng: &mut impl Rng, n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|_| (rng.random::<f64>(), rng.random::<f64>()))
        .collect()
}

/// `z c^{#{y : |x - y| <= R}}`, written out independently of the library.
fn strauss_oracle(z: f64, c: f64, r: f64, x: (f64, f64), mu: &[(f64, f64)]) -> f64 {
    let mut k = z;
    for &(a, b) in mu {
        if ((x.0 - a).powi(2) + (x.1 - b).powi(2)).sqrt() <= r {
            k *= c;
        }
    }
    k
}

/// Pearson statistic of observed counts against probabilities; the last
/// bin absorbs the upper tail.
fn chi_square(counts: &[usize], probs: &[f64], n: usize) -> f64 {
    counts
        .iter()
        .zip(probs)
        .map(|(&o, &p)| {
            let e = p * n as f64;
            (o as f64 - e).powi(2) / e
        })
        .sum()
}

fn binned_counts(batch: &SampleBatch, bins: usize) -> Vec<usize> {
    let mut counts = vec![0; bins];
    for mu in &batch.configs {
        counts[mu.len().min(bins - 1)] += 1;
    }
    counts
}

fn chi_square_accepts(stat: f64, dof: usize) -> bool {
    let q = ChiSquared::new(dof as f64).unwrap().inverse_cdf(0.999);
    stat < q
}

#[test]
fn poisson_counts_follow_poisson_pmf() {
    let n = 20_000;
    let reference = ReferenceMeasure::new(ScalarField::constant(3.0));
    let batch = poisson_batch(&reference, &Window::unit(2).unwrap(), n, 7, 0);
    let law = Poisson::new(3.0).unwrap();
    let bins = 10;
    let mut probs: Vec<f64> = (0..bins as u64 - 1).map(|k| law.pmf(k)).collect();
    probs.push(1.0 - probs.iter().sum::<f64>());
    let stat = chi_square(&binned_counts(&batch, bins), &probs, n);
    assert!(chi_square_accepts(stat, bins - 1), "chi-square {stat}");
}

#[test]
fn strauss_kappa_matches_direct_formula() {
    let mut rng = stream_rng(3, 0, 0);
    for _ in 0..500 {
        let z = rng.random_range(0.1..5.0);
        let c = rng.random_range(0.0..1.0);
        let r = rng.random_range(0.01..0.5);
        let model = PapangelouModel::strauss(z, c, r).unwrap();
        let n = rng.random_range(0..12);
        let mu = random_config(&mut rng, n);
        let x = (rng.random::<f64>(), rng.random::<f64>());
        let lib = model.kappa(
            &pt(x.0, x.1),
            &mu.iter()
                .map(|&(a, b)| pt(a, b))
                .collect::<CountingMeasure>(),
        );
        let oracle = strauss_oracle(z, c, r, x, &mu);
        assert!(
            (lib - oracle).abs() <= 1e-12 * oracle.max(1e-300),
            "{lib} vs {oracle}"
        );
    }
}

#[test]
fn step_potential_is_strauss() {
    let mut rng = stream_rng(4, 0, 0);
    let gamma: f64 = 0.7;
    let step =
        PapangelouModel::pair_potential(1.5, PairPotential::Step { radius: 0.2, gamma }).unwrap();
    let strauss = PapangelouModel::strauss(1.5, (-gamma).exp(), 0.2).unwrap();
    for _ in 0..200 {
        let mu: CountingMeasure = random_config(&mut rng, 8)
            .iter()
            .map(|&(a, b)| pt(a, b))
            .collect();
        let x = pt(rng.random(), rng.random());
        let (a, b) = (step.kappa(&x, &mu), strauss.kappa(&x, &mu));
        assert!((a - b).abs() <= 1e-12 * b);
    }
}

/// Strauss on a window of diameter below `R`: every pair interacts, so
/// `kappa_m = z^m c^{m(m-1)/2}` and all finite-volume quantities are sums.
struct FullInteraction {
    z: f64,
    c: f64,
    window: Window,
}

impl FullInteraction {
    fn new() -> Self {
        Self {
            z: 60.0,
            c: 0.5,
            window: Window::new(vec![0.0, 0.0], vec![0.1, 0.1]).unwrap(),
        }
    }

    fn model(&self) -> PapangelouModel {
        PapangelouModel::strauss(self.z, self.c, 0.2).unwrap()
    }

    /// Unnormalized probabilities of `m` points, `m = 0..len`.
    fn weights(&self, len: usize) -> Vec<f64> {
        let a = self.z * self.window.volume();
        let mut w = Vec::with_capacity(len);
        let mut term = 1.0;
        for m in 0..len {
            if m > 0 {
                term *= a * self.c.powi(m as i32 - 1) / m as f64;
            }
            w.push(term);
        }
        w
    }

    fn partition(&self) -> f64 {
        self.weights(60).iter().sum()
    }

    fn count_probs(&self, bins: usize) -> Vec<f64> {
        let z = self.partition();
        let mut p: Vec<f64> = self.weights(bins - 1).iter().map(|w| w / z).collect();
        p.push(1.0 - p.iter().sum::<f64>());
        p
    }
}

#[test]
fn full_interaction_partition_function() {
    let f = FullInteraction::new();
    let empty = BoundaryCondition::empty();
    let reference = ReferenceMeasure::lebesgue();
    let exact = f.partition();
    let series = partition_series(&f.model(), &reference, &f.window, &empty, 64, 1e-14, 1).unwrap();
    assert!((series.estimate.value - exact).abs() < 1e-12 * exact);
    assert!(series.tail_bound < 1e-6);
    let mc = partition_poisson_mc(&f.model(), &reference, &f.window, &empty, 50_000, 2).unwrap();
    assert!(mc.within(exact, 3.0), "{mc:?} vs {exact}");
    let void = void_probability(
        &f.model(),
        &reference,
        &f.window,
        &empty,
        PartitionMethod::Series {
            budget: 64,
            eps: 1e-14,
        },
        3,
    )
    .unwrap();
    assert!((void.value - 1.0 / exact).abs() < 1e-12);
}

#[test]
fn full_interaction_count_law_from_both_samplers() {
    let f = FullInteraction::new();
    let target = FiniteGibbs::new(
        &f.model(),
        &ReferenceMeasure::lebesgue(),
        &f.window,
        &BoundaryCondition::empty(),
    )
    .unwrap();
    let bins = 5;
    let probs = f.count_probs(bins);
    let n = 20_000;

    let rejection = target.rejection_batch(n, 11, 0, 10_000_000).unwrap();
    let stat = chi_square(&binned_counts(&rejection, bins), &probs, n);
    assert!(
        chi_square_accepts(stat, bins - 1),
        "rejection chi-square {stat}"
    );
    assert!(rejection.is_dominated());

    let mcmc = target.mcmc_batch(n, 11, 1, None);
    let stat = chi_square(&binned_counts(&mcmc, bins), &probs, n);
    assert!(chi_square_accepts(stat, bins - 1), "mcmc chi-square {stat}");
}

#[test]
fn hard_sphere_samples_respect_the_core() {
    let model = PapangelouModel::hard_sphere(15.0, 0.08).unwrap();
    let target = FiniteGibbs::new(
        &model,
        &ReferenceMeasure::lebesgue(),
        &Window::unit(2).unwrap(),
        &BoundaryCondition::empty(),
    )
    .unwrap();
    for batch in [
        target.rejection_batch(300, 5, 0, 10_000_000).unwrap(),
        target.mcmc_batch(300, 5, 1, None),
    ] {
        for mu in &batch.configs {
            let p = mu.points();
            for i in 0..p.len() {
                for j in i + 1..p.len() {
                    assert!(p[i].dist(&p[j]) > 0.08);
                }
            }
        }
    }
}

#[test]
fn boundary_ring_blocks_hard_spheres_near_the_edge() {
    // every point within R of the ring is forbidden
    let w = Window::unit(2).unwrap();
    let ring = gibbs::diagnostics::boundary_ring(&w, 0.01, 0.02).unwrap();
    let psi = BoundaryCondition::new(ring.clone(), &w).unwrap();
    let model = PapangelouModel::hard_sphere(8.0, 0.1).unwrap();
    let target = FiniteGibbs::new(&model, &ReferenceMeasure::lebesgue(), &w, &psi).unwrap();
    let batch = target.rejection_batch(500, 6, 0, 10_000_000).unwrap();
    for mu in &batch.configs {
        for x in mu.points() {
            assert!(ring.points().iter().all(|y| x.dist(y) > 0.1));
        }
    }
}
