//! Papangelou conditional intensities.
//!
//! A [`PapangelouModel`] evaluates `kappa(x, mu)`, the telescoping product
//! `kappa_m`, and the Hamiltonian `H(mu, psi) = -log kappa_m(mu, psi)`.
//! Restriction to a window with a boundary condition is itself a model
//! ([`PapangelouModel::Restricted`]), so samplers and estimators only ever
//! see one kind of object.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, GibbsError, Result};
use crate::geometry::{cluster, gibbs_particle_kappa, GrainLaw, OverlapPenalty, Particle};
use crate::measure::{CountingMeasure, Point, ReferenceMeasure, ScalarField, Window};

/// Built-in pair potentials `v(x, y)` as functions of the distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PairPotential {
    /// `+inf` below `radius`, zero beyond.
    HardCore { radius: f64 },
    /// `gamma` up to `radius`, zero beyond. Equivalent to Strauss with
    /// `c = exp(-gamma)`; negative `gamma` is attractive.
    Step { radius: f64, gamma: f64 },
    /// `(sigma / r)^exponent`.
    InversePower { sigma: f64, exponent: f64 },
}

impl PairPotential {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PairPotential::HardCore { radius } => {
                if !(radius > 0.0 && radius.is_finite()) {
                    return Err(invalid("radius", "hard-core radius must be positive"));
                }
            }
            PairPotential::Step { radius, gamma } => {
                if !(radius > 0.0 && radius.is_finite()) {
                    return Err(invalid("radius", "step radius must be positive"));
                }
                if !gamma.is_finite() {
                    return Err(invalid("gamma", "step height must be finite"));
                }
            }
            PairPotential::InversePower { sigma, exponent } => {
                if !(sigma > 0.0 && sigma.is_finite() && exponent > 0.0 && exponent.is_finite()) {
                    return Err(invalid(
                        "sigma",
                        "inverse-power potential needs sigma > 0 and exponent > 0",
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn eval_distance(&self, r: f64) -> f64 {
        match *self {
            PairPotential::HardCore { radius } => {
                if r < radius {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
            PairPotential::Step { radius, gamma } => {
                if r <= radius {
                    gamma
                } else {
                    0.0
                }
            }
            PairPotential::InversePower { sigma, exponent } => {
                if r == 0.0 {
                    f64::INFINITY
                } else {
                    (sigma / r).powf(exponent)
                }
            }
        }
    }

    pub fn eval(&self, x: &Point, y: &Point) -> f64 {
        self.eval_distance(x.dist(y))
    }

    /// The constant `A` with `v >= -A`.
    pub fn lower_bound(&self) -> f64 {
        match *self {
            PairPotential::Step { gamma, .. } => (-gamma).max(0.0),
            _ => 0.0,
        }
    }

    pub fn range(&self) -> Option<f64> {
        match *self {
            PairPotential::HardCore { radius } | PairPotential::Step { radius, .. } => Some(radius),
            PairPotential::InversePower { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PapangelouModel {
    /// `kappa(x, mu) = theta(x)`.
    Poisson { activity: ScalarField },
    /// `kappa(x, mu) = theta(x) c^{mu(B(x, R))}`.
    Strauss {
        activity: ScalarField,
        c: f64,
        range: f64,
    },
    /// Strauss with `c = 0`.
    HardSphere { activity: ScalarField, range: f64 },
    /// `kappa(x, mu) = theta(x) exp(-sum_{y in mu} v(x, y))`, zero when a
    /// summand is infinite.
    PairPotential {
        activity: ScalarField,
        potential: PairPotential,
    },
    /// Gibbs particle process on marked points: the grain of `x` is
    /// `law.grain(x, mark)` and
    /// `kappa(K, mu) = z exp(-beta sum_{L in C(K, mu)} V(K cap L))`.
    ClusterParticle {
        activity: f64,
        beta: f64,
        overlap: OverlapPenalty,
        law: GrainLaw,
    },
    /// `kappa^{(C, psi)}(x, mu) = kappa(x, psi + mu) 1_C(x)`.
    Restricted {
        base: Box<PapangelouModel>,
        window: Window,
        boundary: CountingMeasure,
    },
}

/// A configuration supported outside the active window.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryCondition {
    psi: CountingMeasure,
}

impl BoundaryCondition {
    pub fn new(psi: CountingMeasure, window: &Window) -> Result<Self> {
        if psi.points().iter().any(|p| window.contains(p)) {
            return Err(GibbsError::BoundaryInsideWindow);
        }
        Ok(Self { psi })
    }

    pub fn empty() -> Self {
        Self {
            psi: CountingMeasure::empty(),
        }
    }

    pub fn measure(&self) -> &CountingMeasure {
        &self.psi
    }
}

impl PapangelouModel {
    pub fn poisson(activity: f64) -> Result<Self> {
        let activity = ScalarField::constant(activity);
        activity.validate(1)?;
        Ok(Self::Poisson { activity })
    }

    pub fn strauss(activity: f64, c: f64, range: f64) -> Result<Self> {
        let activity = ScalarField::constant(activity);
        activity.validate(1)?;
        if !(0.0..=1.0).contains(&c) {
            return Err(invalid("c", format!("{c} is outside [0, 1]")));
        }
        if !(range > 0.0 && range.is_finite()) {
            return Err(invalid("range", "interaction range must be positive"));
        }
        Ok(Self::Strauss { activity, c, range })
    }

    pub fn hard_sphere(activity: f64, range: f64) -> Result<Self> {
        let activity = ScalarField::constant(activity);
        activity.validate(1)?;
        if !(range > 0.0 && range.is_finite()) {
            return Err(invalid("range", "interaction range must be positive"));
        }
        Ok(Self::HardSphere { activity, range })
    }

    pub fn pair_potential(activity: f64, potential: PairPotential) -> Result<Self> {
        let activity = ScalarField::constant(activity);
        activity.validate(1)?;
        potential.validate()?;
        Ok(Self::PairPotential {
            activity,
            potential,
        })
    }

    pub fn cluster_particle(
        activity: f64,
        beta: f64,
        overlap: OverlapPenalty,
        law: GrainLaw,
        dim: usize,
    ) -> Result<Self> {
        if !(activity >= 0.0 && activity.is_finite()) {
            return Err(invalid("activity", "must be finite and nonnegative"));
        }
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(invalid("beta", "must be finite and nonnegative"));
        }
        if !(overlap.c >= 0.0) {
            return Err(invalid("c", "overlap penalty must lie in [0, inf]"));
        }
        law.validate(dim)?;
        Ok(Self::ClusterParticle {
            activity,
            beta,
            overlap,
            law,
        })
    }

    /// Validates model parameters against the working dimension.
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            Self::Poisson { activity }
            | Self::Strauss { activity, .. }
            | Self::HardSphere { activity, .. }
            | Self::PairPotential { activity, .. } => activity.validate(dim),
            Self::ClusterParticle { law, .. } => law.validate(dim),
            Self::Restricted { base, window, .. } => {
                if window.dim() != dim {
                    return Err(GibbsError::DimensionMismatch {
                        expected: dim,
                        got: window.dim(),
                    });
                }
                base.validate(dim)
            }
        }
    }

    /// `kappa^{(C, psi)}`.
    pub fn restricted(&self, window: &Window, psi: &BoundaryCondition) -> Self {
        Self::Restricted {
            base: Box::new(self.clone()),
            window: window.clone(),
            boundary: psi.measure().clone(),
        }
    }

    /// Whether points carry grain marks.
    pub fn is_marked(&self) -> bool {
        match self {
            Self::ClusterParticle { .. } => true,
            Self::Restricted { base, .. } => base.is_marked(),
            _ => false,
        }
    }

    pub fn kappa(&self, x: &Point, mu: &CountingMeasure) -> f64 {
        self.kappa_parts(x, &[mu.points()])
    }

    /// `kappa(x, .)` evaluated at the superposition of the given point
    /// lists.
    pub fn kappa_parts(&self, x: &Point, parts: &[&[Point]]) -> f64 {
        let all = || parts.iter().flat_map(|p| p.iter());
        match self {
            Self::Poisson { activity } => activity.eval(x),
            Self::Strauss { activity, c, range } => {
                let theta = activity.eval(x);
                if *c == 1.0 || theta == 0.0 {
                    return theta;
                }
                let r2 = range * range;
                let near = all().filter(|y| x.dist2(y) <= r2).count();
                theta * c.powi(near as i32)
            }
            Self::HardSphere { activity, range } => {
                let r2 = range * range;
                if all().any(|y| x.dist2(y) <= r2) {
                    0.0
                } else {
                    activity.eval(x)
                }
            }
            Self::PairPotential {
                activity,
                potential,
            } => {
                let mut energy = 0.0;
                for y in all() {
                    let v = potential.eval(x, y);
                    if v == f64::INFINITY {
                        return 0.0;
                    }
                    energy += v;
                }
                activity.eval(x) * (-energy).exp()
            }
            Self::ClusterParticle {
                activity,
                beta,
                overlap,
                law,
            } => {
                let k = law.grain_of(x);
                let mu: Vec<Particle> = all().map(|p| law.grain_of(p)).collect();
                let c = cluster(&k, &mu);
                activity * gibbs_particle_kappa(*beta, *overlap, &k, &c)
            }
            Self::Restricted {
                base,
                window,
                boundary,
            } => {
                if !window.contains(x) {
                    return 0.0;
                }
                let mut with_psi: Vec<&[Point]> = Vec::with_capacity(parts.len() + 1);
                with_psi.push(boundary.points());
                with_psi.extend_from_slice(parts);
                base.kappa_parts(x, &with_psi)
            }
        }
    }

    /// `log kappa_m(x_1, ..., x_m, mu)`; `-inf` when a factor vanishes.
    pub fn ln_kappa_m_parts(&self, xs: &[Point], parts: &[&[Point]]) -> f64 {
        let m = xs.len();
        let mut with_tail: Vec<&[Point]> = Vec::with_capacity(parts.len() + 1);
        with_tail.extend_from_slice(parts);
        with_tail.push(&[]);
        let mut total = 0.0;
        for j in (0..m).rev() {
            *with_tail.last_mut().expect("tail slot") = &xs[j + 1..];
            let k = self.kappa_parts(&xs[j], &with_tail);
            if k == 0.0 {
                return f64::NEG_INFINITY;
            }
            total += k.ln();
        }
        total
    }

    /// `kappa_m(x_1, ..., x_m, mu) = kappa(x_m, mu) kappa(x_{m-1}, mu + delta_{x_m}) ...`
    pub fn kappa_m(&self, xs: &[Point], mu: &CountingMeasure) -> f64 {
        self.ln_kappa_m_parts(xs, &[mu.points()]).exp()
    }

    /// Local stability bound `theta(x)` with `kappa(x, .) <= theta(x)`, or
    /// `None` if the model is not locally stable.
    pub fn local_stability_bound(&self, x: &Point) -> Option<f64> {
        match self {
            Self::Poisson { activity }
            | Self::Strauss { activity, .. }
            | Self::HardSphere { activity, .. } => Some(activity.eval(x)),
            Self::PairPotential {
                activity,
                potential,
            } => (potential.lower_bound() == 0.0).then(|| activity.eval(x)),
            Self::ClusterParticle { activity, .. } => Some(*activity),
            Self::Restricted { base, window, .. } => {
                let b = base.local_stability_bound(x)?;
                Some(if window.contains(x) { b } else { 0.0 })
            }
        }
    }

    /// The local stability bound as a field, if any.
    pub fn stability_field(&self) -> Option<ScalarField> {
        match self {
            Self::Poisson { activity }
            | Self::Strauss { activity, .. }
            | Self::HardSphere { activity, .. } => Some(activity.clone()),
            Self::PairPotential {
                activity,
                potential,
            } => (potential.lower_bound() == 0.0).then(|| activity.clone()),
            Self::ClusterParticle { activity, .. } => Some(ScalarField::constant(*activity)),
            Self::Restricted { base, .. } => base.stability_field(),
        }
    }

    /// `int_C theta d lambda`.
    pub fn stability_mass(&self, reference: &ReferenceMeasure, w: &Window) -> Option<f64> {
        let theta = self.stability_field()?;
        Some(integrate_product(&theta, &reference.intensity, w))
    }

    /// Interaction range; `None` when unbounded.
    pub fn interaction_range(&self) -> Option<f64> {
        match self {
            Self::Poisson { .. } => Some(0.0),
            Self::Strauss { c, range, .. } => Some(if *c == 1.0 { 0.0 } else { *range }),
            Self::HardSphere { range, .. } => Some(*range),
            Self::PairPotential { potential, .. } => potential.range(),
            Self::ClusterParticle { law, .. } => law.interaction_range(),
            Self::Restricted { base, .. } => base.interaction_range(),
        }
    }

    /// Checks `kappa(x, mu) = kappa(x, mu restricted to ball(x, R))` on
    /// `trials` random configurations in `w`. Models with unbounded range
    /// trivially pass.
    pub fn check_finite_range<R: Rng + ?Sized>(
        &self,
        w: &Window,
        points_per_trial: usize,
        trials: usize,
        rng: &mut R,
    ) -> bool {
        let Some(range) = self.interaction_range() else {
            return true;
        };
        let marked = self.is_marked();
        let draw = |rng: &mut R| {
            let p = w.sample_uniform(rng);
            if marked {
                p.with_mark(rng.random()).expect("unit mark")
            } else {
                p
            }
        };
        (0..trials).all(|_| {
            let x = draw(rng);
            let mu: CountingMeasure = (0..points_per_trial).map(|_| draw(rng)).collect();
            let near: CountingMeasure = mu
                .points()
                .iter()
                .filter(|y| x.dist(y) <= range)
                .copied()
                .collect();
            self.kappa(&x, &mu) == self.kappa(&x, &near)
        })
    }

    /// Short human-readable name used in output records.
    pub fn name(&self) -> String {
        match self {
            Self::Poisson { .. } => "poisson".into(),
            Self::Strauss { c, range, .. } => format!("strauss(c={c},R={range})"),
            Self::HardSphere { range, .. } => format!("hard_sphere(R={range})"),
            Self::PairPotential { potential, .. } => format!("pair_potential({potential:?})"),
            Self::ClusterParticle { beta, overlap, .. } => {
                format!("cluster_particle(beta={beta},c={})", overlap.c)
            }
            Self::Restricted { base, .. } => format!("restricted({})", base.name()),
        }
    }
}

pub(crate) fn integrate_product(a: &ScalarField, b: &ScalarField, w: &Window) -> f64 {
    match (a.as_constant(), b.as_constant()) {
        (Some(ca), _) => ca * b.integral(w),
        (_, Some(cb)) => cb * a.integral(w),
        _ => crate::measure::gauss_legendre(w, |p| a.eval(p) * b.eval(p)),
    }
}

/// `H(mu, psi) = -log kappa_m(x_1, ..., x_m, psi)` for `mu = sum delta_{x_j}`;
/// `H(0, psi) = 0` and `+inf` when `kappa_m` vanishes.
pub fn hamiltonian(model: &PapangelouModel, mu: &CountingMeasure, psi: &CountingMeasure) -> f64 {
    if mu.is_empty() {
        return 0.0;
    }
    -model.ln_kappa_m_parts(mu.points(), &[psi.points()])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(c: &[f64]) -> Point {
        Point::new(c).unwrap()
    }

    fn cm(pts: &[[f64; 2]]) -> CountingMeasure {
        pts.iter().map(|p| pt(p)).collect()
    }

    #[test]
    fn strauss_examples() {
        let m = PapangelouModel::strauss(2.0, 0.5, 0.1).unwrap();
        assert_eq!(m.kappa(&pt(&[0.0, 0.0]), &cm(&[[0.05, 0.0]])), 1.0);
        let poisson_like = PapangelouModel::strauss(2.0, 1.0, 0.1).unwrap();
        assert_eq!(
            poisson_like.kappa(&pt(&[0.0, 0.0]), &cm(&[[0.05, 0.0], [0.0, 0.01]])),
            2.0
        );
        let hs = PapangelouModel::hard_sphere(1.0, 0.1).unwrap();
        assert_eq!(hs.kappa(&pt(&[0.0, 0.0]), &cm(&[[0.05, 0.0]])), 0.0);
        assert!(PapangelouModel::strauss(1.0, 1.5, 0.1).is_err());
    }

    #[test]
    fn kappa_m_two_point_expansion() {
        let z = 3.0;
        let c = 0.25;
        let m = PapangelouModel::strauss(z, c, 0.1).unwrap();
        let close = [pt(&[0.0, 0.0]), pt(&[0.05, 0.0])];
        let far = [pt(&[0.0, 0.0]), pt(&[0.5, 0.0])];
        let empty = CountingMeasure::empty();
        assert!((m.kappa_m(&close, &empty) - z * z * c).abs() < 1e-12);
        assert!((m.kappa_m(&far, &empty) - z * z).abs() < 1e-12);
        let single = m.kappa_m(&close[..1], &empty);
        assert!((single - m.kappa(&close[0], &empty)).abs() < 1e-14 * single);
    }

    #[test]
    fn hamiltonian_examples() {
        let m = PapangelouModel::strauss(1.0, 0.5, 0.1).unwrap();
        let empty = CountingMeasure::empty();
        assert_eq!(hamiltonian(&m, &empty, &empty), 0.0);
        assert_eq!(hamiltonian(&m, &cm(&[[0.3, 0.3]]), &empty), 0.0);
        let hs = PapangelouModel::hard_sphere(1.0, 0.1).unwrap();
        assert_eq!(
            hamiltonian(&hs, &cm(&[[0.3, 0.3], [0.35, 0.3]]), &empty),
            f64::INFINITY
        );
    }

    #[test]
    fn restriction() {
        let c = Window::unit(2).unwrap();
        let hs = PapangelouModel::hard_sphere(1.0, 0.1).unwrap();
        let free = hs.restricted(&c, &BoundaryCondition::empty());
        let x = pt(&[0.5, 0.5]);
        assert_eq!(free.kappa(&x, &CountingMeasure::empty()), 1.0);
        assert_eq!(free.kappa(&pt(&[1.5, 0.5]), &CountingMeasure::empty()), 0.0);
        let psi = BoundaryCondition::new(cm(&[[1.02, 0.5]]), &c).unwrap();
        let walled = hs.restricted(&c, &psi);
        assert_eq!(
            walled.kappa(&pt(&[0.97, 0.5]), &CountingMeasure::empty()),
            0.0
        );
        assert_eq!(
            walled.kappa(&pt(&[0.5, 0.5]), &CountingMeasure::empty()),
            1.0
        );
        assert!(matches!(
            BoundaryCondition::new(cm(&[[0.5, 0.5]]), &c),
            Err(GibbsError::BoundaryInsideWindow)
        ));
    }

    #[test]
    fn pair_potential_infinite_summand() {
        let m =
            PapangelouModel::pair_potential(2.0, PairPotential::HardCore { radius: 0.1 }).unwrap();
        assert_eq!(m.kappa(&pt(&[0.0, 0.0]), &cm(&[[0.05, 0.0]])), 0.0);
        assert_eq!(m.kappa(&pt(&[0.0, 0.0]), &cm(&[[0.5, 0.0]])), 2.0);
        let attractive = PapangelouModel::pair_potential(
            1.0,
            PairPotential::Step {
                radius: 0.1,
                gamma: -0.5,
            },
        )
        .unwrap();
        assert!(attractive.local_stability_bound(&pt(&[0.0, 0.0])).is_none());
    }

    #[test]
    fn strauss_step_equivalence() {
        let gamma: f64 = 0.7;
        let s = PapangelouModel::strauss(1.5, (-gamma).exp(), 0.2).unwrap();
        let p = PapangelouModel::pair_potential(1.5, PairPotential::Step { radius: 0.2, gamma })
            .unwrap();
        let mu = cm(&[[0.1, 0.0], [0.0, 0.15], [0.5, 0.5]]);
        let x = pt(&[0.0, 0.0]);
        assert!((s.kappa(&x, &mu) - p.kappa(&x, &mu)).abs() < 1e-12);
    }

    #[test]
    fn finite_range_metadata_holds() {
        let mut rng = crate::rng::stream_rng(1, 0, 0);
        let w = Window::unit(2).unwrap();
        for m in [
            PapangelouModel::strauss(2.0, 0.5, 0.1).unwrap(),
            PapangelouModel::hard_sphere(2.0, 0.1).unwrap(),
            PapangelouModel::pair_potential(1.0, PairPotential::HardCore { radius: 0.05 }).unwrap(),
        ] {
            assert!(m.check_finite_range(&w, 30, 200, &mut rng));
        }
    }
}
