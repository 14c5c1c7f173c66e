//! Browser bindings for three interactive views: a pairwise-interaction
//! sample, a Boolean model with the cluster of the origin highlighted, and
//! void probability as a function of activity.
//!
//! Each binding wraps a plain function returning `Result<_, String>` so the
//! logic can be tested natively.

use gibbs::geometry::{cluster_indices, sample_boolean, GrainLaw, Particle, RadiusLaw};
use gibbs::partition::{void_probability, PartitionMethod};
use gibbs::rng::stream_rng;
use gibbs::sampler::FiniteGibbs;
use gibbs::{BoundaryCondition, PapangelouModel, Point, ReferenceMeasure, Window};
use wasm_bindgen::prelude::*;

/// Rejection attempts before falling back to the birth-death chain.
const MAX_ATTEMPTS: u64 = 200_000;

/// A configuration in the unit square, as `[x0, y0, x1, y1, ...]`.
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct PointSample {
    coords: Vec<f64>,
    exact: bool,
}

#[wasm_bindgen]
impl PointSample {
    #[wasm_bindgen(getter)]
    pub fn coords(&self) -> Vec<f64> {
        self.coords.clone()
    }

    /// True when drawn by rejection (an exact sample), false when the
    /// Markov chain was used instead.
    #[wasm_bindgen(getter)]
    pub fn exact(&self) -> bool {
        self.exact
    }

    #[wasm_bindgen(getter)]
    pub fn len(&self) -> usize {
        self.coords.len() / 2
    }

    #[wasm_bindgen(getter, js_name = isEmpty)]
    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }
}

/// Strauss process with activity `z`, interaction `c` and range `r` on the
/// unit square; `c = 0` gives hard spheres.
pub fn strauss_sample(z: f64, c: f64, r: f64, seed: u64) -> Result<PointSample, String> {
    let model = PapangelouModel::strauss(z, c, r).map_err(|e| e.to_string())?;
    let window = Window::unit(2).map_err(|e| e.to_string())?;
    let target = FiniteGibbs::new(
        &model,
        &ReferenceMeasure::lebesgue(),
        &window,
        &BoundaryCondition::empty(),
    )
    .map_err(|e| e.to_string())?;
    let mut rng = stream_rng(seed, 0, 0);
    let (config, exact) = match target.sample_rejection(&mut rng, MAX_ATTEMPTS) {
        Ok(draw) => (draw.sample, true),
        Err(_) => (target.sample_mcmc(target.burn_in_steps(), &mut rng), false),
    };
    Ok(PointSample {
        coords: config
            .points()
            .iter()
            .flat_map(|p| p.coords().to_vec())
            .collect(),
        exact,
    })
}

/// Boolean model of discs of radius `radius` at intensity `z`, observed
/// on the square of side `side` centred at the origin. Returns
/// `[x, y, r, in_cluster, ...]` with `in_cluster` 1 for discs connected to
/// a test disc at the origin.
pub fn boolean_clusters(z: f64, radius: f64, side: f64, seed: u64) -> Result<Vec<f64>, String> {
    let law = GrainLaw::balls(RadiusLaw::Constant { radius });
    let w = Window::cube(&[0.0, 0.0], side).map_err(|e| e.to_string())?;
    let mut rng = stream_rng(seed, 1, 0);
    let sample = sample_boolean(z, &law, &w, &mut rng).map_err(|e| e.to_string())?;
    let origin = Point::new(&[0.0, 0.0]).map_err(|e| e.to_string())?;
    let test = law.grain(&origin, None);
    let mut in_cluster = vec![false; sample.particles.len()];
    for i in cluster_indices(&test, &sample.particles) {
        in_cluster[i] = true;
    }
    let mut out = Vec::with_capacity(4 * (sample.particles.len() + 1));
    out.extend([0.0, 0.0, radius, 2.0]);
    for (p, &hit) in sample.particles.iter().zip(&in_cluster) {
        if let Particle::Ball { center, radius } = p {
            out.extend([
                center.coords()[0],
                center.coords()[1],
                *radius,
                f64::from(u8::from(hit)),
            ]);
        }
    }
    Ok(out)
}

/// `P(no point in [0, side]^2)` for the Strauss process at `n` activities
/// evenly spaced on `(0, z_max]`, as `[z, p, stderr, ...]`.
pub fn void_curve(
    c: f64,
    r: f64,
    side: f64,
    z_max: f64,
    n: usize,
    seed: u64,
) -> Result<Vec<f64>, String> {
    if n == 0 {
        return Err("need at least one activity".into());
    }
    let window = Window::new(vec![0.0, 0.0], vec![side, side]).map_err(|e| e.to_string())?;
    let method = PartitionMethod::Series {
        budget: 2000,
        eps: 1e-9,
    };
    let mut out = Vec::with_capacity(3 * n);
    for k in 1..=n {
        let z = z_max * k as f64 / n as f64;
        let model = PapangelouModel::strauss(z, c, r).map_err(|e| e.to_string())?;
        let p = void_probability(
            &model,
            &ReferenceMeasure::lebesgue(),
            &window,
            &BoundaryCondition::empty(),
            method,
            seed,
        )
        .map_err(|e| e.to_string())?;
        out.extend([z, p.value, p.stderr]);
    }
    Ok(out)
}

#[wasm_bindgen(js_name = strauss)]
pub fn strauss_js(z: f64, c: f64, r: f64, seed: u64) -> Result<PointSample, JsError> {
    strauss_sample(z, c, r, seed).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = booleanClusters)]
pub fn boolean_clusters_js(z: f64, radius: f64, side: f64, seed: u64) -> Result<Vec<f64>, JsError> {
    boolean_clusters(z, radius, side, seed).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = voidCurve)]
pub fn void_curve_js(
    c: f64,
    r: f64,
    side: f64,
    z_max: f64,
    n: usize,
    seed: u64,
) -> Result<Vec<f64>, JsError> {
    void_curve(c, r, side, z_max, n, seed).map_err(|e| JsError::new(&e))
}
