//! Finite counting measures on boxes of R^d.
//!
//! A [`CountingMeasure`] is a finite list of [`Point`]s; repeated entries
//! encode multiplicity. Points are compared by exact floating-point
//! equality, so duplicates only appear when a caller supplies them.

use std::cmp::Ordering;

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{GibbsError, Result};

pub const MAX_DIM: usize = 3;

/// A location in R^d (d <= 3) with an optional mark in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    coords: [f64; MAX_DIM],
    dim: u8,
    mark: Option<f64>,
}

impl Point {
    pub fn new(coords: &[f64]) -> Result<Self> {
        let dim = coords.len();
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(GibbsError::InvalidDimension(dim));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(GibbsError::NonFiniteCoordinate);
        }
        let mut buf = [0.0; MAX_DIM];
        buf[..dim].copy_from_slice(coords);
        Ok(Self {
            coords: buf,
            dim: dim as u8,
            mark: None,
        })
    }

    pub fn marked(coords: &[f64], mark: f64) -> Result<Self> {
        Self::new(coords)?.with_mark(mark)
    }

    pub fn with_mark(mut self, mark: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&mark) {
            return Err(GibbsError::InvalidMark(mark));
        }
        self.mark = Some(mark);
        Ok(self)
    }

    pub fn without_mark(mut self) -> Self {
        self.mark = None;
        self
    }

    /// Builds a point from a buffer that is already known to be finite.
    pub(crate) fn from_raw(coords: [f64; MAX_DIM], dim: usize, mark: Option<f64>) -> Self {
        Self {
            coords,
            dim: dim as u8,
            mark,
        }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords[..self.dim as usize]
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn mark(&self) -> Option<f64> {
        self.mark
    }

    pub fn dist2(&self, other: &Point) -> f64 {
        self.coords()
            .iter()
            .zip(other.coords())
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    pub fn dist(&self, other: &Point) -> f64 {
        self.dist2(other).sqrt()
    }

    fn total_cmp(&self, other: &Point) -> Ordering {
        for (a, b) in self.coords().iter().zip(other.coords()) {
            match a.total_cmp(b) {
                Ordering::Equal => {}
                ord => return ord,
            }
        }
        match (self.mark, other.mark) {
            (None, None) => Ordering::Equal,
            (None, Some(_)) => Ordering::Less,
            (Some(_), None) => Ordering::Greater,
            (Some(a), Some(b)) => a.total_cmp(&b),
        }
    }
}

/// Axis-aligned box `[lower, upper)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Window {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Window {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(GibbsError::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        if !(1..=MAX_DIM).contains(&lower.len()) {
            return Err(GibbsError::InvalidDimension(lower.len()));
        }
        for (axis, (&l, &u)) in lower.iter().zip(&upper).enumerate() {
            if !(l.is_finite() && u.is_finite() && l < u) {
                return Err(GibbsError::InvalidWindow {
                    axis,
                    lower: l,
                    upper: u,
                });
            }
        }
        Ok(Self { lower, upper })
    }

    /// The unit cube `[0, 1)^dim`.
    pub fn unit(dim: usize) -> Result<Self> {
        Self::new(vec![0.0; dim], vec![1.0; dim])
    }

    /// A cube of side `side` centred at `center`.
    pub fn cube(center: &[f64], side: f64) -> Result<Self> {
        Self::new(
            center.iter().map(|c| c - side / 2.0).collect(),
            center.iter().map(|c| c + side / 2.0).collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn volume(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| u - l)
            .product()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| 0.5 * (l + u))
            .collect()
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.dim() == self.dim()
            && p.coords()
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(x, (l, u))| *l <= *x && *x < *u)
    }

    pub fn contains_window(&self, other: &Window) -> bool {
        self.dim() == other.dim()
            && (0..self.dim())
                .all(|i| self.lower[i] <= other.lower[i] && other.upper[i] <= self.upper[i])
    }

    pub fn is_disjoint(&self, other: &Window) -> bool {
        (0..self.dim()).any(|i| self.upper[i] <= other.lower[i] || other.upper[i] <= self.lower[i])
    }

    /// The localizing box `B_factor`: this window scaled by `factor` about
    /// its centre.
    pub fn dilate(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(crate::error::invalid("factor", "must be positive"));
        }
        let c = self.center();
        Self::new(
            (0..self.dim())
                .map(|i| c[i] + factor * (self.lower[i] - c[i]))
                .collect(),
            (0..self.dim())
                .map(|i| c[i] + factor * (self.upper[i] - c[i]))
                .collect(),
        )
    }

    /// Minkowski sum with the closed ball of radius `margin` (bounding box).
    pub fn expand(&self, margin: f64) -> Result<Self> {
        Self::new(
            self.lower.iter().map(|l| l - margin).collect(),
            self.upper.iter().map(|u| u + margin).collect(),
        )
    }

    /// Shortest distance from `p` (inside) to the complement.
    pub fn distance_to_boundary(&self, p: &Point) -> f64 {
        p.coords()
            .iter()
            .enumerate()
            .map(|(i, x)| (x - self.lower[i]).min(self.upper[i] - x))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let mut buf = [0.0; MAX_DIM];
        for (i, slot) in buf.iter_mut().enumerate().take(self.dim()) {
            let u: f64 = rng.random();
            *slot = self.lower[i] + u * (self.upper[i] - self.lower[i]);
        }
        Point::from_raw(buf, self.dim(), None)
    }

    /// Compact text form `[l0:u0]x[l1:u1]`, free of commas.
    pub fn label(&self) -> String {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| format!("[{l}:{u}]"))
            .collect::<Vec<_>>()
            .join("x")
    }

    pub fn corners(&self) -> Vec<Point> {
        let d = self.dim();
        (0..1usize << d)
            .map(|mask| {
                let mut buf = [0.0; MAX_DIM];
                for (i, slot) in buf.iter_mut().enumerate().take(d) {
                    *slot = if mask >> i & 1 == 1 {
                        self.upper[i]
                    } else {
                        self.lower[i]
                    };
                }
                Point::from_raw(buf, d, None)
            })
            .collect()
    }
}

/// Nonnegative function on R^d used for intensities and activities.
/// Affine fields are clamped at zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScalarField {
    Constant { value: f64 },
    Affine { offset: f64, gradient: Vec<f64> },
}

impl ScalarField {
    pub fn constant(value: f64) -> Self {
        ScalarField::Constant { value }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            ScalarField::Constant { value } => {
                if !(value.is_finite() && *value >= 0.0) {
                    return Err(crate::error::invalid(
                        "intensity",
                        format!("constant {value} must be finite and nonnegative"),
                    ));
                }
            }
            ScalarField::Affine { offset, gradient } => {
                if gradient.len() != dim {
                    return Err(GibbsError::DimensionMismatch {
                        expected: dim,
                        got: gradient.len(),
                    });
                }
                if !offset.is_finite() || gradient.iter().any(|g| !g.is_finite()) {
                    return Err(crate::error::invalid("intensity", "non-finite coefficient"));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, p: &Point) -> f64 {
        match self {
            ScalarField::Constant { value } => *value,
            ScalarField::Affine { offset, gradient } => {
                let v = offset
                    + gradient
                        .iter()
                        .zip(p.coords())
                        .map(|(g, x)| g * x)
                        .sum::<f64>();
                v.max(0.0)
            }
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self {
            ScalarField::Constant { value } => Some(*value),
            ScalarField::Affine { .. } => None,
        }
    }

    /// Supremum over the closed window (attained at a corner).
    pub fn sup_over(&self, w: &Window) -> f64 {
        match self {
            ScalarField::Constant { value } => *value,
            ScalarField::Affine { .. } => {
                w.corners().iter().map(|c| self.eval(c)).fold(0.0, f64::max)
            }
        }
    }

    /// Integral over `w` with respect to Lebesgue measure.
    pub fn integral(&self, w: &Window) -> f64 {
        match self {
            ScalarField::Constant { value } => value * w.volume(),
            ScalarField::Affine { .. } => {
                let corners = w.corners();
                if corners.iter().all(|c| {
                    let ScalarField::Affine { offset, gradient } = self else {
                        unreachable!()
                    };
                    offset
                        + gradient
                            .iter()
                            .zip(c.coords())
                            .map(|(g, x)| g * x)
                            .sum::<f64>()
                        >= 0.0
                }) {
                    // no clamping inside the box: the midpoint rule is exact
                    let c = Point::new(&w.center()).expect("finite window centre");
                    self.eval(&c) * w.volume()
                } else {
                    gauss_legendre(w, |p| self.eval(p))
                }
            }
        }
    }
}

/// Composite tensor Gauss-Legendre quadrature, 16 nodes per panel.
pub(crate) fn gauss_legendre(w: &Window, f: impl Fn(&Point) -> f64) -> f64 {
    const NODES: [f64; 8] = [
        0.0950125098376374,
        0.2816035507792589,
        0.4580167776572274,
        0.6178762444026438,
        0.755_404_408_355_003,
        0.8656312023878318,
        0.9445750230732326,
        0.9894009349916499,
    ];
    const WEIGHTS: [f64; 8] = [
        0.1894506104550685,
        0.1826034150449236,
        0.1691565193950025,
        0.1495959888165767,
        0.1246289712555339,
        0.0951585116824928,
        0.0622535239386479,
        0.0271524594117541,
    ];
    let d = w.dim();
    let panels = if d == 3 { 4 } else { 8 };
    let base: Vec<(f64, f64)> = NODES
        .iter()
        .zip(&WEIGHTS)
        .flat_map(|(&x, &wt)| [(-x, wt), (x, wt)])
        .collect();
    // nodes on [-1, 1] split into `panels` equal pieces
    let rule: Vec<(f64, f64)> = (0..panels)
        .flat_map(|k| {
            let lo = -1.0 + 2.0 * k as f64 / panels as f64;
            let h = 1.0 / panels as f64;
            base.iter()
                .map(move |&(x, wt)| (lo + h * (x + 1.0), wt * h))
        })
        .collect();
    let half: Vec<f64> = (0..d)
        .map(|i| 0.5 * (w.upper()[i] - w.lower()[i]))
        .collect();
    let mid = w.center();
    let mut total = 0.0;
    let mut idx = vec![0usize; d];
    loop {
        let mut buf = [0.0; MAX_DIM];
        let mut weight = 1.0;
        for i in 0..d {
            let (x, wt) = rule[idx[i]];
            buf[i] = mid[i] + half[i] * x;
            weight *= wt * half[i];
        }
        total += weight * f(&Point::from_raw(buf, d, None));
        let mut axis = 0;
        loop {
            if axis == d {
                return total;
            }
            idx[axis] += 1;
            if idx[axis] < rule.len() {
                break;
            }
            idx[axis] = 0;
            axis += 1;
        }
    }
}

/// The reference measure `intensity * Lebesgue`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceMeasure {
    pub intensity: ScalarField,
}

impl ReferenceMeasure {
    pub fn lebesgue() -> Self {
        Self {
            intensity: ScalarField::constant(1.0),
        }
    }

    pub fn new(intensity: ScalarField) -> Self {
        Self { intensity }
    }

    pub fn density(&self, p: &Point) -> f64 {
        self.intensity.eval(p)
    }

    /// `lambda(w)`; must be finite.
    pub fn mass(&self, w: &Window) -> f64 {
        self.intensity.integral(w)
    }
}

/// A finite counting measure, stored as an ordered list of atoms.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CountingMeasure {
    points: Vec<Point>,
}

impl CountingMeasure {
    /// The zero measure.
    pub fn empty() -> Self {
        Self { points: Vec::new() }
    }

    pub fn new(points: Vec<Point>) -> Self {
        Self { points }
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn into_points(self) -> Vec<Point> {
        self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `mu(B)`.
    pub fn total(&self, b: &Window) -> usize {
        self.points.iter().filter(|p| b.contains(p)).count()
    }

    /// `mu_B`.
    pub fn restrict(&self, b: &Window) -> Self {
        Self::new(
            self.points
                .iter()
                .filter(|p| b.contains(p))
                .copied()
                .collect(),
        )
    }

    /// `mu_{B^c}`.
    pub fn restrict_complement(&self, b: &Window) -> Self {
        Self::new(
            self.points
                .iter()
                .filter(|p| !b.contains(p))
                .copied()
                .collect(),
        )
    }

    /// `mu + delta_x`.
    pub fn add(&self, x: Point) -> Self {
        let mut points = self.points.clone();
        points.push(x);
        Self::new(points)
    }

    /// `mu + nu`.
    pub fn plus(&self, other: &CountingMeasure) -> Self {
        let mut points = self.points.clone();
        points.extend_from_slice(&other.points);
        Self::new(points)
    }

    /// `mu \ delta_x`: removes one occurrence of `x` if present.
    pub fn remove_point(&self, x: &Point) -> Self {
        let mut points = self.points.clone();
        if let Some(i) = points.iter().position(|p| p == x) {
            points.remove(i);
        }
        Self::new(points)
    }

    /// Equality as multisets (order-insensitive).
    pub fn multiset_eq(&self, other: &CountingMeasure) -> bool {
        self.len() == other.len() && self.sorted() == other.sorted()
    }

    /// `self <= other` as multisets.
    pub fn is_submultiset_of(&self, other: &CountingMeasure) -> bool {
        let a = self.sorted();
        let b = other.sorted();
        let mut j = 0;
        for p in &a {
            while j < b.len() && b[j].total_cmp(p) == Ordering::Less {
                j += 1;
            }
            if j == b.len() || b[j] != *p {
                return false;
            }
            j += 1;
        }
        true
    }

    fn sorted(&self) -> Vec<Point> {
        let mut v = self.points.clone();
        v.sort_by(|a, b| a.total_cmp(b));
        v
    }

    /// Ordered `m`-tuples of distinct list indices, i.e. the atoms of the
    /// factorial measure `mu^(m)`, in lexicographic index order.
    pub fn factorial_tuples(&self, m: usize) -> FactorialTuples<'_> {
        FactorialTuples::new(&self.points, m)
    }

    /// `int f d mu^(m)`.
    pub fn factorial_integral(&self, m: usize, mut f: impl FnMut(&[Point]) -> f64) -> f64 {
        let mut total = 0.0;
        let mut tuples = self.factorial_tuples(m);
        while let Some(t) = tuples.next_tuple() {
            total += f(t);
        }
        total
    }

    /// Serializes as a JSON array of coordinate arrays, with the mark (if
    /// any) appended as a final element.
    pub fn to_json(&self) -> Value {
        Value::Array(self.points.iter().map(point_to_json).collect())
    }

    pub fn from_json(value: &Value, dim: usize) -> Result<Self> {
        let arr = value
            .as_array()
            .ok_or_else(|| GibbsError::MalformedPoints("expected an array of points".into()))?;
        arr.iter()
            .map(|p| point_from_json(p, dim))
            .collect::<Result<Vec<_>>>()
            .map(Self::new)
    }

    pub fn from_json_str(text: &str, dim: usize) -> Result<Self> {
        let v: Value =
            serde_json::from_str(text).map_err(|e| GibbsError::MalformedPoints(e.to_string()))?;
        Self::from_json(&v, dim)
    }
}

impl FromIterator<Point> for CountingMeasure {
    fn from_iter<T: IntoIterator<Item = Point>>(iter: T) -> Self {
        Self::new(iter.into_iter().collect())
    }
}

pub fn point_to_json(p: &Point) -> Value {
    let mut v: Vec<Value> = p.coords().iter().map(|&c| Value::from(c)).collect();
    if let Some(m) = p.mark() {
        v.push(Value::from(m));
    }
    Value::Array(v)
}

pub fn point_from_json(v: &Value, dim: usize) -> Result<Point> {
    let arr = v
        .as_array()
        .ok_or_else(|| GibbsError::MalformedPoints("point is not an array".into()))?;
    let nums = arr
        .iter()
        .map(|x| {
            x.as_f64()
                .ok_or_else(|| GibbsError::MalformedPoints(format!("non-numeric entry {x}")))
        })
        .collect::<Result<Vec<f64>>>()?;
    match nums.len() {
        n if n == dim => Point::new(&nums),
        n if n == dim + 1 => Point::marked(&nums[..dim], nums[dim]),
        n => Err(GibbsError::MalformedPoints(format!(
            "point has {n} entries, expected {dim} or {}",
            dim + 1
        ))),
    }
}

/// Lazy enumeration of ordered tuples of pairwise distinct indices.
pub struct FactorialTuples<'a> {
    points: &'a [Point],
    m: usize,
    idx: Vec<usize>,
    used: Vec<bool>,
    buf: Vec<Point>,
    started: bool,
    done: bool,
}

impl<'a> FactorialTuples<'a> {
    fn new(points: &'a [Point], m: usize) -> Self {
        let n = points.len();
        Self {
            points,
            m,
            idx: Vec::with_capacity(m),
            used: vec![false; n],
            buf: Vec::with_capacity(m),
            started: false,
            done: m > n,
        }
    }

    /// Advances to the next index tuple; returns `None` when exhausted.
    pub fn next_indices(&mut self) -> Option<&[usize]> {
        if self.done {
            return None;
        }
        let n = self.points.len();
        if !self.started {
            self.started = true;
            // m == 0: the single empty tuple
            for _ in 0..self.m {
                let next = (0..n).find(|&j| !self.used[j]).expect("m <= n");
                self.used[next] = true;
                self.idx.push(next);
            }
            return Some(&self.idx);
        }
        // odometer step: bump the deepest position that can move forward
        loop {
            let Some(last) = self.idx.pop() else {
                self.done = true;
                return None;
            };
            self.used[last] = false;
            if let Some(next) = (last + 1..n).find(|&j| !self.used[j]) {
                self.used[next] = true;
                self.idx.push(next);
                while self.idx.len() < self.m {
                    let fill = (0..n)
                        .find(|&j| !self.used[j])
                        .expect("enough free indices");
                    self.used[fill] = true;
                    self.idx.push(fill);
                }
                return Some(&self.idx);
            }
        }
    }

    /// Advances and returns the tuple of points.
    pub fn next_tuple(&mut self) -> Option<&[Point]> {
        self.next_indices()?;
        self.buf.clear();
        self.buf.extend(self.idx.iter().map(|&i| self.points[i]));
        Some(&self.buf)
    }
}

impl Iterator for FactorialTuples<'_> {
    type Item = Vec<Point>;

    fn next(&mut self) -> Option<Vec<Point>> {
        self.next_tuple().map(<[Point]>::to_vec)
    }
}

/// Evaluates `F(mu)` through its factorial-measure representation
/// `1{mu = 0} F(0) + sum_m (1/m!) 1{mu(X) = m} int F(sum delta_{x_j}) d mu^(m)`.
pub fn eval_by_representation(f: impl Fn(&CountingMeasure) -> f64, mu: &CountingMeasure) -> f64 {
    let n = mu.len();
    if n == 0 {
        return f(&CountingMeasure::empty());
    }
    let integral = mu.factorial_integral(n, |xs| f(&CountingMeasure::new(xs.to_vec())));
    integral / crate::stats::factorial(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(c: &[f64]) -> Point {
        Point::new(c).unwrap()
    }

    #[test]
    fn point_invariants() {
        assert!(Point::new(&[f64::NAN, 0.0]).is_err());
        assert!(Point::new(&[]).is_err());
        assert!(Point::new(&[0.0; 4]).is_err());
        assert!(Point::marked(&[0.0], 1.5).is_err());
    }

    #[test]
    fn total_counts_points_in_window() {
        let b = Window::unit(2).unwrap();
        assert_eq!(CountingMeasure::empty().total(&b), 0);
        let mu = CountingMeasure::new(vec![pt(&[0.5, 0.5])]);
        assert_eq!(mu.total(&b), 1);
        let mu = CountingMeasure::new(vec![pt(&[0.5, 0.5]), pt(&[2.0, 2.0])]);
        assert_eq!(mu.total(&b), 1);
    }

    #[test]
    fn window_validation() {
        assert!(matches!(
            Window::new(vec![0.0, 1.0], vec![1.0, 1.0]),
            Err(GibbsError::InvalidWindow { axis: 1, .. })
        ));
        assert!(Window::new(vec![0.0], vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn dilation_is_nested() {
        let w = Window::new(vec![0.2, 0.4], vec![0.6, 0.8]).unwrap();
        let w2 = w.dilate(2.0).unwrap();
        assert!(w2.contains_window(&w));
        assert!((w2.volume() - 4.0 * w.volume()).abs() < 1e-12);
        for (a, b) in w2.center().iter().zip(w.center()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn factorial_tuple_counts() {
        let mu: CountingMeasure = (0..4).map(|i| pt(&[i as f64])).collect();
        assert_eq!(mu.factorial_tuples(2).count(), 12);
        assert_eq!(mu.factorial_tuples(5).count(), 0);
        assert_eq!(mu.factorial_tuples(0).count(), 1);
        assert_eq!(CountingMeasure::empty().factorial_tuples(1).count(), 0);
    }

    #[test]
    fn factorial_tuples_of_multiset() {
        let a = pt(&[0.0]);
        let b = pt(&[1.0]);
        let mu = CountingMeasure::new(vec![a, a, b]);
        let tuples: Vec<Vec<Point>> = mu.factorial_tuples(2).collect();
        assert_eq!(tuples.len(), 6);
        assert_eq!(tuples.iter().filter(|t| t[0] == a && t[1] == a).count(), 2);
    }

    #[test]
    fn tuples_are_lexicographic() {
        let mu: CountingMeasure = (0..3).map(|i| pt(&[i as f64])).collect();
        let mut it = mu.factorial_tuples(2);
        let mut seen = Vec::new();
        while let Some(ix) = it.next_indices() {
            seen.push(ix.to_vec());
        }
        assert_eq!(
            seen,
            vec![
                vec![0, 1],
                vec![0, 2],
                vec![1, 0],
                vec![1, 2],
                vec![2, 0],
                vec![2, 1]
            ]
        );
    }

    #[test]
    fn remove_point_cases() {
        let a = pt(&[0.0, 0.0]);
        let b = pt(&[1.0, 0.0]);
        let mu = CountingMeasure::new(vec![a, a, b]);
        assert!(mu
            .remove_point(&a)
            .multiset_eq(&CountingMeasure::new(vec![a, b])));
        let nu = CountingMeasure::new(vec![b]);
        assert_eq!(nu.remove_point(&a), nu);
        assert_eq!(
            CountingMeasure::empty().remove_point(&a),
            CountingMeasure::empty()
        );
    }

    #[test]
    fn representation_examples() {
        let a = pt(&[0.1]);
        let b = pt(&[0.7]);
        let count = |m: &CountingMeasure| m.len() as f64;
        assert_eq!(
            eval_by_representation(count, &CountingMeasure::new(vec![a, b])),
            2.0
        );
        let is_zero = |m: &CountingMeasure| if m.is_empty() { 1.0 } else { 0.0 };
        assert_eq!(
            eval_by_representation(is_zero, &CountingMeasure::empty()),
            1.0
        );
        let pow2 = |m: &CountingMeasure| 2f64.powi(m.len() as i32);
        assert_eq!(
            eval_by_representation(pow2, &CountingMeasure::new(vec![a, a, b])),
            8.0
        );
    }

    #[test]
    fn json_round_trip_with_marks() {
        let mu = CountingMeasure::new(vec![
            pt(&[0.25, 0.5]),
            Point::marked(&[1.0, 2.0], 0.75).unwrap(),
        ]);
        let text = mu.to_json().to_string();
        assert_eq!(text, "[[0.25,0.5],[1.0,2.0,0.75]]");
        assert_eq!(CountingMeasure::from_json_str(&text, 2).unwrap(), mu);
        assert!(CountingMeasure::from_json_str("[[1.0]]", 2).is_err());
    }

    #[test]
    fn affine_integral_matches_quadrature() {
        let w = Window::new(vec![0.0, 0.0], vec![2.0, 1.0]).unwrap();
        let f = ScalarField::Affine {
            offset: 1.0,
            gradient: vec![0.5, 2.0],
        };
        // 2 * (1 + 0.5 + 1) = 5
        assert!((f.integral(&w) - 5.0).abs() < 1e-12);
        assert!((gauss_legendre(&w, |p| f.eval(p)) - 5.0).abs() < 1e-10);
        assert_eq!(f.sup_over(&w), 1.0 + 1.0 + 2.0);
        // clamped: max(0, x - 1) over [0,2] has integral 0.5
        let g = ScalarField::Affine {
            offset: -1.0,
            gradient: vec![1.0],
        };
        let w1 = Window::new(vec![0.0], vec![2.0]).unwrap();
        assert!((g.integral(&w1) - 0.5).abs() < 1e-3);
    }
}
