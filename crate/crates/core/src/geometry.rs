//! Particles in R^d, grain laws, the intersection relation and the
//! Boolean-model machinery built on it.

use std::collections::VecDeque;
use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, GibbsError, Result};
use crate::measure::{Point, Window, MAX_DIM};
use crate::rng::{replicate_map, stream_rng};
use crate::stats::Estimate;

const INTERSECT_EPS: f64 = 1e-12;

/// Quantile used for the edge-correction halo.
pub const HALO_QUANTILE: f64 = 0.9999;

/// A compact grain: a closed ball or a closed segment `center + s * direction`,
/// `s` in `[-half_length, half_length]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Particle {
    Ball {
        center: Point,
        radius: f64,
    },
    Segment {
        center: Point,
        direction: [f64; MAX_DIM],
        half_length: f64,
    },
}

impl Particle {
    pub fn ball(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(invalid("radius", format!("{radius} must be positive")));
        }
        Ok(Particle::Ball {
            center: center.without_mark(),
            radius,
        })
    }

    pub fn segment(center: Point, direction: &[f64], half_length: f64) -> Result<Self> {
        if direction.len() != center.dim() {
            return Err(GibbsError::DimensionMismatch {
                expected: center.dim(),
                got: direction.len(),
            });
        }
        let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(invalid("direction", format!("norm {norm} is not 1")));
        }
        if !(half_length >= 0.0 && half_length.is_finite()) {
            return Err(invalid("half_length", "must be finite and nonnegative"));
        }
        let mut dir = [0.0; MAX_DIM];
        dir[..direction.len()].copy_from_slice(direction);
        Ok(Particle::Segment {
            center: center.without_mark(),
            direction: dir,
            half_length,
        })
    }

    pub fn center(&self) -> &Point {
        match self {
            Particle::Ball { center, .. } | Particle::Segment { center, .. } => center,
        }
    }

    /// Circumradius.
    pub fn reach(&self) -> f64 {
        match self {
            Particle::Ball { radius, .. } => *radius,
            Particle::Segment { half_length, .. } => *half_length,
        }
    }

    fn endpoints(&self) -> ([f64; MAX_DIM], [f64; MAX_DIM]) {
        match self {
            Particle::Ball { center, .. } => {
                let c = coords3(center);
                (c, c)
            }
            Particle::Segment {
                center,
                direction,
                half_length,
            } => {
                let c = coords3(center);
                let mut a = [0.0; MAX_DIM];
                let mut b = [0.0; MAX_DIM];
                for i in 0..MAX_DIM {
                    a[i] = c[i] - half_length * direction[i];
                    b[i] = c[i] + half_length * direction[i];
                }
                (a, b)
            }
        }
    }

    /// Whether the particle lies inside the window (not touching its
    /// complement).
    pub fn inside(&self, w: &Window) -> bool {
        let d = w.dim();
        match self {
            Particle::Ball { center, radius } => center
                .coords()
                .iter()
                .enumerate()
                .all(|(i, c)| c - radius >= w.lower()[i] && c + radius < w.upper()[i]),
            Particle::Segment { .. } => {
                let (a, b) = self.endpoints();
                (0..d).all(|i| {
                    a[i] >= w.lower()[i]
                        && a[i] < w.upper()[i]
                        && b[i] >= w.lower()[i]
                        && b[i] < w.upper()[i]
                })
            }
        }
    }
}

fn coords3(p: &Point) -> [f64; MAX_DIM] {
    let mut c = [0.0; MAX_DIM];
    c[..p.dim()].copy_from_slice(p.coords());
    c
}

fn sub(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Squared distance between segments `[p1, q1]` and `[p2, q2]`
/// (degenerate segments are points).
fn segment_distance2(p1: [f64; 3], q1: [f64; 3], p2: [f64; 3], q2: [f64; 3]) -> f64 {
    let d1 = sub(&q1, &p1);
    let d2 = sub(&q2, &p2);
    let r = sub(&p1, &p2);
    let a = dot(&d1, &d1);
    let e = dot(&d2, &d2);
    let f = dot(&d2, &r);
    let (s, t);
    if a <= f64::EPSILON && e <= f64::EPSILON {
        return dot(&r, &r);
    }
    if a <= f64::EPSILON {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = dot(&d1, &r);
        if e <= f64::EPSILON {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = dot(&d1, &d2);
            let denom = a * e - b * b;
            let mut s0 = if denom > 0.0 {
                ((b * f - c * e) / denom).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let mut t0 = (b * s0 + f) / e;
            if t0 < 0.0 {
                t0 = 0.0;
                s0 = (-c / a).clamp(0.0, 1.0);
            } else if t0 > 1.0 {
                t0 = 1.0;
                s0 = ((b - c) / a).clamp(0.0, 1.0);
            }
            s = s0;
            t = t0;
        }
    }
    let mut diff = [0.0; 3];
    for i in 0..3 {
        diff[i] = (p1[i] + d1[i] * s) - (p2[i] + d2[i] * t);
    }
    dot(&diff, &diff)
}

/// The relation `K ~ L` iff `K` and `L` intersect.
pub fn intersects(p: &Particle, q: &Particle) -> bool {
    match (p, q) {
        (
            Particle::Ball {
                center: c1,
                radius: r1,
            },
            Particle::Ball {
                center: c2,
                radius: r2,
            },
        ) => c1.dist2(c2) <= (r1 + r2) * (r1 + r2),
        _ => {
            let (p1, q1) = p.endpoints();
            let (p2, q2) = q.endpoints();
            let d = segment_distance2(p1, q1, p2, q2).sqrt();
            let slack = match (p, q) {
                (Particle::Ball { radius, .. }, Particle::Segment { .. })
                | (Particle::Segment { .. }, Particle::Ball { radius, .. }) => *radius,
                _ => 0.0,
            };
            d <= slack + INTERSECT_EPS
        }
    }
}

/// Indices (in list order) of the particles of `mu` connected to `seed`
/// through chains of intersecting particles of `mu`. The seed itself is
/// not part of `mu`.
pub fn cluster_indices(seed: &Particle, mu: &[Particle]) -> Vec<usize> {
    let mut in_cluster = vec![false; mu.len()];
    let mut queue: VecDeque<usize> = VecDeque::new();
    for (i, q) in mu.iter().enumerate() {
        if intersects(seed, q) {
            in_cluster[i] = true;
            queue.push_back(i);
        }
    }
    while let Some(j) = queue.pop_front() {
        for (i, q) in mu.iter().enumerate() {
            if !in_cluster[i] && intersects(&mu[j], q) {
                in_cluster[i] = true;
                queue.push_back(i);
            }
        }
    }
    (0..mu.len()).filter(|&i| in_cluster[i]).collect()
}

/// `C(seed, mu)`.
pub fn cluster(seed: &Particle, mu: &[Particle]) -> Vec<Particle> {
    cluster_indices(seed, mu)
        .into_iter()
        .map(|i| mu[i])
        .collect()
}

/// Disjoint-set forest with path halving and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        true
    }
}

/// Component label of every particle: the smallest index in its connected
/// component of the intersection graph.
pub fn components(mu: &[Particle]) -> Vec<usize> {
    let n = mu.len();
    let mut uf = UnionFind::new(n);
    for i in 0..n {
        for j in i + 1..n {
            if intersects(&mu[i], &mu[j]) {
                uf.union(i, j);
            }
        }
    }
    let mut smallest = vec![usize::MAX; n];
    let roots: Vec<usize> = (0..n).map(|i| uf.find(i)).collect();
    for (i, &r) in roots.iter().enumerate() {
        smallest[r] = smallest[r].min(i);
    }
    roots.into_iter().map(|r| smallest[r]).collect()
}

/// Distribution of the grain's circumradius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RadiusLaw {
    Constant {
        radius: f64,
    },
    Uniform {
        min: f64,
        max: f64,
    },
    /// Density `a s^a / r^(a+1)` on `[s, inf)`.
    Pareto {
        scale: f64,
        exponent: f64,
    },
}

impl RadiusLaw {
    /// Checks the parameters and that the `dim`-th moment is finite.
    pub fn validate(&self, dim: usize) -> Result<()> {
        match *self {
            RadiusLaw::Constant { radius } => {
                if !(radius > 0.0 && radius.is_finite()) {
                    return Err(invalid("radius", "constant radius must be positive"));
                }
            }
            RadiusLaw::Uniform { min, max } => {
                if !(min > 0.0 && min < max && max.is_finite()) {
                    return Err(invalid("radius", "uniform law needs 0 < min < max < inf"));
                }
            }
            RadiusLaw::Pareto { scale, exponent } => {
                if !(scale > 0.0 && scale.is_finite()) {
                    return Err(invalid("radius", "Pareto scale must be positive"));
                }
                if !(exponent > dim as f64) {
                    return Err(invalid(
                        "radius",
                        format!("Pareto exponent {exponent} must exceed the dimension {dim}"),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn quantile(&self, u: f64) -> f64 {
        match *self {
            RadiusLaw::Constant { radius } => radius,
            RadiusLaw::Uniform { min, max } => min + u * (max - min),
            RadiusLaw::Pareto { scale, exponent } => scale * (1.0 - u).powf(-1.0 / exponent),
        }
    }

    pub fn cdf(&self, r: f64) -> f64 {
        match *self {
            RadiusLaw::Constant { radius } => {
                if r >= radius {
                    1.0
                } else {
                    0.0
                }
            }
            RadiusLaw::Uniform { min, max } => ((r - min) / (max - min)).clamp(0.0, 1.0),
            RadiusLaw::Pareto { scale, exponent } => {
                if r < scale {
                    0.0
                } else {
                    1.0 - (scale / r).powf(exponent)
                }
            }
        }
    }

    pub fn is_random(&self) -> bool {
        !matches!(self, RadiusLaw::Constant { .. })
    }

    pub fn max_radius(&self) -> Option<f64> {
        match *self {
            RadiusLaw::Constant { radius } => Some(radius),
            RadiusLaw::Uniform { max, .. } => Some(max),
            RadiusLaw::Pareto { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OrientationLaw {
    Uniform,
    Fixed { direction: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrainShape {
    Ball,
    Segment,
}

/// The grain distribution. A grain is a deterministic function of its
/// centre and a uniform mark in [0, 1], so marked points double as
/// particles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrainLaw {
    pub shape: GrainShape,
    pub radius: RadiusLaw,
    #[serde(default = "default_orientation")]
    pub orientation: OrientationLaw,
}

fn default_orientation() -> OrientationLaw {
    OrientationLaw::Uniform
}

impl GrainLaw {
    pub fn balls(radius: RadiusLaw) -> Self {
        Self {
            shape: GrainShape::Ball,
            radius,
            orientation: OrientationLaw::Uniform,
        }
    }

    pub fn segments(half_length: RadiusLaw, orientation: OrientationLaw) -> Self {
        Self {
            shape: GrainShape::Segment,
            radius: half_length,
            orientation,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        self.radius.validate(dim)?;
        if let OrientationLaw::Fixed { direction } = &self.orientation {
            if direction.len() != dim {
                return Err(GibbsError::DimensionMismatch {
                    expected: dim,
                    got: direction.len(),
                });
            }
            let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-12 {
                return Err(invalid(
                    "direction",
                    "fixed orientation must be a unit vector",
                ));
            }
        }
        Ok(())
    }

    /// Halo width for edge correction: the `HALO_QUANTILE` radius quantile
    /// of a grain plus that of a test grain.
    pub fn halo(&self) -> Result<f64> {
        let q = self.radius.quantile(HALO_QUANTILE);
        if !q.is_finite() {
            return Err(invalid("radius", "radius law has no finite halo quantile"));
        }
        Ok(2.0 * q)
    }

    /// Largest possible distance at which two grains can interact.
    pub fn interaction_range(&self) -> Option<f64> {
        self.radius.max_radius().map(|r| 2.0 * r)
    }

    /// Builds the grain attached to `center` with mark `mark`; an unmarked
    /// point gets the grain of mark 1/2.
    pub fn grain(&self, center: &Point, mark: Option<f64>) -> Particle {
        let u = mark.unwrap_or(0.5);
        let dim = center.dim();
        let c = center.without_mark();
        match self.shape {
            GrainShape::Ball => Particle::Ball {
                center: c,
                radius: self.radius.quantile(u),
            },
            GrainShape::Segment => {
                let orientation_uniforms = match (&self.orientation, dim) {
                    (OrientationLaw::Fixed { .. }, _) => 0,
                    (OrientationLaw::Uniform, 3) => 2,
                    (OrientationLaw::Uniform, _) => 1,
                };
                let radius_uniforms = usize::from(self.radius.is_random());
                let parts = split_uniform(u, orientation_uniforms + radius_uniforms);
                let half_length = if radius_uniforms == 1 {
                    self.radius.quantile(parts[orientation_uniforms])
                } else {
                    self.radius.quantile(0.5)
                };
                let mut direction = [0.0; MAX_DIM];
                match &self.orientation {
                    OrientationLaw::Fixed { direction: v } => direction[..dim].copy_from_slice(v),
                    OrientationLaw::Uniform => match dim {
                        1 => direction[0] = if parts[0] < 0.5 { -1.0 } else { 1.0 },
                        2 => {
                            let a = 2.0 * PI * parts[0];
                            direction[0] = a.cos();
                            direction[1] = a.sin();
                        }
                        _ => {
                            let z = 1.0 - 2.0 * parts[0];
                            let rho = (1.0 - z * z).max(0.0).sqrt();
                            let a = 2.0 * PI * parts[1];
                            direction = [rho * a.cos(), rho * a.sin(), z];
                        }
                    },
                }
                Particle::Segment {
                    center: c,
                    direction,
                    half_length,
                }
            }
        }
    }

    pub fn grain_of(&self, p: &Point) -> Particle {
        self.grain(p, p.mark())
    }
}

/// Splits one uniform into `k <= 3` uniforms by cutting its binary
/// expansion into consecutive blocks of `b = 52 / k` bits: the first
/// `k - 1` parts are uniform on a grid of spacing `2^-b`, the last takes
/// the remaining bits.
fn split_uniform(u: f64, k: usize) -> [f64; 3] {
    let mut out = [u, 0.5, 0.5];
    if k <= 1 {
        return out;
    }
    let bits = (52 / k) as i32;
    let scale = 2f64.powi(bits);
    let mut rest = u;
    for slot in out.iter_mut().take(k - 1) {
        let scaled = rest * scale;
        let digit = scaled.floor();
        *slot = (digit + 0.5) / scale;
        rest = scaled - digit;
    }
    out[k - 1] = rest;
    out
}

/// Overlap functional `V(K) = c * 1{K nonempty}`, `c` in `[0, inf]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlapPenalty {
    pub c: f64,
}

/// `exp(-beta * sum_{L in mu} V(K cap L))` for the pairwise overlap
/// functional; `c = inf` gives hard particles (zero on any overlap).
pub fn gibbs_particle_kappa(beta: f64, v: OverlapPenalty, k: &Particle, mu: &[Particle]) -> f64 {
    let overlaps = mu.iter().filter(|l| intersects(k, l)).count();
    if overlaps == 0 || beta == 0.0 || v.c == 0.0 {
        return 1.0;
    }
    let weight = beta * v.c;
    if weight.is_infinite() {
        0.0
    } else {
        (-weight * overlaps as f64).exp()
    }
}

/// A Boolean-model realization: grains attached to Poisson germs in the
/// halo-extended sampling region.
#[derive(Debug, Clone)]
pub struct BooleanSample {
    pub region: Window,
    pub germs: Vec<Point>,
    pub particles: Vec<Particle>,
}

pub fn sample_boolean<R: Rng + ?Sized>(
    z: f64,
    law: &GrainLaw,
    w: &Window,
    rng: &mut R,
) -> Result<BooleanSample> {
    if !(z > 0.0 && z.is_finite()) {
        return Err(invalid("z", "intensity must be positive"));
    }
    law.validate(w.dim())?;
    let region = w.expand(law.halo()?)?;
    let germs = poisson_marked_germs(z, &region, rng);
    let particles = germs.iter().map(|g| law.grain_of(g)).collect();
    Ok(BooleanSample {
        region,
        germs,
        particles,
    })
}

fn poisson_marked_germs<R: Rng + ?Sized>(z: f64, region: &Window, rng: &mut R) -> Vec<Point> {
    let mean = z * region.volume();
    let n = if mean > 0.0 {
        Poisson::new(mean)
            .expect("finite positive mean")
            .sample(rng) as usize
    } else {
        0
    };
    (0..n)
        .map(|_| {
            let p = region.sample_uniform(rng);
            let u: f64 = rng.random();
            p.with_mark(u).expect("mark in [0,1)")
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub z: f64,
    pub window_scale: f64,
    pub reach_freq: f64,
    pub stderr: f64,
    pub n: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeTable {
    pub rows: Vec<ProbeRow>,
    /// Coupled runs in which reaching the boundary at some `z` was not
    /// preserved at a larger `z`. Zero by construction of the coupling.
    pub monotonicity_violations: u64,
}

/// For every window side and intensity, the frequency with which the
/// cluster of a centred test grain reaches outside the window.
///
/// Runs at the different intensities are coupled by superposition: germs
/// are drawn at the largest intensity with an independent uniform tag and
/// kept at intensity `z` iff `tag < z / z_max`, so configurations are
/// nested in `z`.
pub fn subcriticality_probe(
    z_values: &[f64],
    law: &GrainLaw,
    dim: usize,
    window_sides: &[f64],
    n: usize,
    seed: u64,
) -> Result<ProbeTable> {
    if z_values.is_empty() || z_values.iter().any(|z| !(*z > 0.0 && z.is_finite())) {
        return Err(invalid("z_values", "need positive finite intensities"));
    }
    if window_sides.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
        return Err(invalid("window_sides", "sides must be positive"));
    }
    law.validate(dim)?;
    let halo = law.halo()?;
    let z_max = z_values.iter().copied().fold(0.0, f64::max);
    let mut order: Vec<usize> = (0..z_values.len()).collect();
    order.sort_by(|&a, &b| z_values[a].total_cmp(&z_values[b]));

    let mut rows = Vec::new();
    let mut violations = 0;
    for (wi, &side) in window_sides.iter().enumerate() {
        let w = Window::cube(&vec![0.0; dim], side)?;
        let region = w.expand(halo)?;
        let center = Point::new(&w.center())?;
        // reach[i][k]: run i reaches the boundary at z_values[k]
        let reach: Vec<Vec<bool>> = replicate_map(n, |i| {
            let mut rng = stream_rng(seed, 0x5045_5243 + wi as u64, i as u64);
            let test_mark: f64 = rng.random();
            let seed_grain = law.grain(&center, Some(test_mark));
            let germs = poisson_marked_germs(z_max, &region, &mut rng);
            let tags: Vec<f64> = germs.iter().map(|_| rng.random()).collect();
            let particles: Vec<Particle> = germs.iter().map(|g| law.grain_of(g)).collect();
            z_values
                .iter()
                .map(|&z| {
                    let kept: Vec<Particle> = particles
                        .iter()
                        .zip(&tags)
                        .filter(|(_, &t)| t < z / z_max)
                        .map(|(p, _)| *p)
                        .collect();
                    !seed_grain.inside(&w)
                        || cluster(&seed_grain, &kept).iter().any(|p| !p.inside(&w))
                })
                .collect()
        });
        for run in &reach {
            let sorted: Vec<bool> = order.iter().map(|&k| run[k]).collect();
            if sorted.windows(2).any(|p| p[0] && !p[1]) {
                violations += 1;
            }
        }
        for (k, &z) in z_values.iter().enumerate() {
            let xs: Vec<f64> = reach.iter().map(|r| f64::from(u8::from(r[k]))).collect();
            let est = Estimate::from_samples(&xs);
            rows.push(ProbeRow {
                z,
                window_scale: side,
                reach_freq: est.value,
                stderr: est.stderr,
                n: est.n,
            });
        }
    }
    Ok(ProbeTable {
        rows,
        monotonicity_violations: violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ball(x: f64, y: f64, r: f64) -> Particle {
        Particle::ball(Point::new(&[x, y]).unwrap(), r).unwrap()
    }

    fn seg(x: f64, y: f64, dir: [f64; 2], h: f64) -> Particle {
        Particle::segment(Point::new(&[x, y]).unwrap(), &dir, h).unwrap()
    }

    #[test]
    fn ball_ball() {
        assert!(intersects(&ball(0.0, 0.0, 0.5), &ball(0.8, 0.0, 0.5)));
        assert!(!intersects(&ball(0.0, 0.0, 0.5), &ball(3.0, 0.0, 0.5)));
    }

    #[test]
    fn segment_cases() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        // an X crossing at the origin
        assert!(intersects(
            &seg(0.0, 0.0, [s, s], 1.0),
            &seg(0.0, 0.0, [s, -s], 1.0)
        ));
        // parallel, offset by 0.1
        assert!(!intersects(
            &seg(0.0, 0.0, [1.0, 0.0], 1.0),
            &seg(0.0, 0.1, [1.0, 0.0], 1.0)
        ));
        // collinear, overlapping
        assert!(intersects(
            &seg(0.0, 0.0, [1.0, 0.0], 1.0),
            &seg(1.5, 0.0, [1.0, 0.0], 1.0)
        ));
        // T-junction touching
        assert!(intersects(
            &seg(0.0, 0.0, [1.0, 0.0], 1.0),
            &seg(0.0, 0.5, [0.0, 1.0], 0.5)
        ));
        // ball near a segment
        assert!(intersects(
            &ball(0.5, 0.3, 0.31),
            &seg(0.0, 0.0, [1.0, 0.0], 1.0)
        ));
        assert!(!intersects(
            &seg(0.0, 0.0, [1.0, 0.0], 1.0),
            &ball(0.5, 0.3, 0.29)
        ));
        // ball beyond the segment's end
        assert!(!intersects(
            &ball(1.5, 0.0, 0.4),
            &seg(0.0, 0.0, [1.0, 0.0], 1.0)
        ));
    }

    #[test]
    fn segment_invariants() {
        let c = Point::new(&[0.0, 0.0]).unwrap();
        assert!(Particle::segment(c, &[1.0, 1.0], 1.0).is_err());
        assert!(Particle::ball(c, 0.0).is_err());
    }

    #[test]
    fn cluster_chain() {
        let mu = vec![
            ball(0.0, 0.0, 0.5),
            ball(0.8, 0.0, 0.5),
            ball(3.0, 0.0, 0.5),
        ];
        let c = cluster(&mu[0], &mu);
        assert_eq!(c, vec![mu[0], mu[1]]);
        assert!(cluster(&mu[0], &[]).is_empty());
        assert_eq!(cluster(&mu[0], &c), c);
    }

    #[test]
    fn components_label_by_smallest_index() {
        let mu = vec![
            ball(3.0, 0.0, 0.5),
            ball(0.0, 0.0, 0.5),
            ball(0.8, 0.0, 0.5),
            ball(3.5, 0.0, 0.5),
        ];
        assert_eq!(components(&mu), vec![0, 1, 1, 0]);
    }

    #[test]
    fn particle_kappa_examples() {
        let k = ball(0.0, 0.0, 0.5);
        let v = OverlapPenalty { c: 1.0 };
        assert_eq!(
            gibbs_particle_kappa(1.0, v, &k, &[ball(5.0, 0.0, 0.5)]),
            1.0
        );
        let hard = OverlapPenalty { c: f64::INFINITY };
        assert_eq!(
            gibbs_particle_kappa(1.0, hard, &k, &[ball(0.5, 0.0, 0.5)]),
            0.0
        );
        let two = [ball(0.5, 0.0, 0.5), ball(-0.5, 0.0, 0.5)];
        let val = gibbs_particle_kappa(2f64.ln(), v, &k, &two);
        assert!((val - 0.25).abs() < 1e-15);
    }

    #[test]
    fn radius_laws() {
        assert!(RadiusLaw::Pareto {
            scale: 1.0,
            exponent: 2.0
        }
        .validate(2)
        .is_err());
        let p = RadiusLaw::Pareto {
            scale: 0.1,
            exponent: 3.5,
        };
        p.validate(2).unwrap();
        assert!((p.cdf(p.quantile(0.3)) - 0.3).abs() < 1e-12);
        assert!(p.max_radius().is_none());
    }

    #[test]
    fn split_uniform_parts_are_in_unit_interval() {
        for &u in &[0.0, 0.123456789, 0.5, 0.999999] {
            for k in 1..=3 {
                let parts = split_uniform(u, k);
                assert!(
                    parts.iter().all(|p| (0.0..1.0).contains(p)),
                    "{u} {k} {parts:?}"
                );
            }
        }
    }

    #[test]
    fn segment_grains_are_unit_directed() {
        let law = GrainLaw::segments(
            RadiusLaw::Uniform { min: 0.1, max: 0.3 },
            OrientationLaw::Uniform,
        );
        for d in 1..=3 {
            let c = Point::new(&vec![0.0; d]).unwrap();
            for i in 0..50 {
                let g = law.grain(&c, Some(i as f64 / 50.0));
                let Particle::Segment {
                    direction,
                    half_length,
                    ..
                } = g
                else {
                    panic!()
                };
                let n: f64 = direction.iter().map(|x| x * x).sum();
                assert!((n - 1.0).abs() < 1e-12);
                assert!((0.1..=0.3).contains(&half_length));
            }
        }
    }
}
