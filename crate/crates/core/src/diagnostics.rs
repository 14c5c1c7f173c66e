//! Statistical checks of the identities a Gibbs process must satisfy.
//!
//! Each check estimates two sides of an identity from independent sample
//! batches and reports `z = (lhs - rhs) / sqrt(se_lhs^2 + se_rhs^2)`.
//! Test functions come from fixed, pre-registered families
//! ([`TestFunction`], [`PairFunction`], [`LocalFunction`]).

use serde::{Deserialize, Serialize};

use crate::error::{GibbsError, Result};
use crate::measure::{CountingMeasure, Point, ReferenceMeasure, Window};
use crate::models::{BoundaryCondition, PapangelouModel};
use crate::partition::{partition_series, reciprocal};
use crate::rng::{replicate_map, stream_rng, StreamRng};
use crate::sampler::{coupled_birth_death, FiniteGibbs, SampleBatch};
use crate::stats::Estimate;

/// A single report passes when `|z|` is below this.
pub const Z_PASS: f64 = 3.0;
/// Reports at or beyond this count as severe failures.
pub const Z_SEVERE: f64 = 4.0;

const STREAM_LHS: u64 = 0x4c48_5300;
const STREAM_RHS: u64 = 0x5248_5300;
const STREAM_RHS_POINTS: u64 = 0x5248_5350;
const STREAM_INNER: u64 = 0x494e_4e00;
const STREAM_SERIES: u64 = 0x5345_5200;
const STREAM_PROBE: u64 = 0x4c4f_4300;
const STREAM_DISAGREE: u64 = 0x4449_5300;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestReport {
    pub identity: String,
    pub function: String,
    pub model: String,
    pub lhs: Estimate,
    pub rhs: Estimate,
    pub z_score: f64,
    pub pass: bool,
    /// An inner sampler ran out of attempts; the estimates are partial.
    pub budget_exhausted: bool,
}

impl TestReport {
    pub const CSV_HEADER: &'static str = "identity,function,model,lhs,lhs_stderr,lhs_n,rhs,rhs_stderr,rhs_n,z_score,verdict,budget_exhausted";

    pub fn new(
        identity: &str,
        function: String,
        model: String,
        lhs: Estimate,
        rhs: Estimate,
    ) -> Self {
        let z_score = lhs.z_score(&rhs);
        Self {
            identity: identity.into(),
            function,
            model,
            lhs,
            rhs,
            z_score,
            pass: z_score.abs() < Z_PASS,
            budget_exhausted: false,
        }
    }

    pub fn csv_row(&self) -> String {
        [
            csv_field(&self.identity),
            csv_field(&self.function),
            csv_field(&self.model),
            self.lhs.value.to_string(),
            self.lhs.stderr.to_string(),
            self.lhs.n.to_string(),
            self.rhs.value.to_string(),
            self.rhs.stderr.to_string(),
            self.rhs.n.to_string(),
            self.z_score.to_string(),
            if self.pass { "pass" } else { "fail" }.to_string(),
            self.budget_exhausted.to_string(),
        ]
        .join(",")
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// CSV text for a list of reports, header included.
pub fn reports_csv(reports: &[TestReport]) -> String {
    let mut out = String::from(TestReport::CSV_HEADER);
    out.push('\n');
    for r in reports {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

/// Suite-level verdict: at most one report in `3 <= |z| < 4`, none at
/// `|z| >= 4`, and no exhausted budgets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PolicyVerdict {
    pub total: usize,
    pub marginal: usize,
    pub severe: usize,
    pub exhausted: usize,
    pub pass: bool,
}

pub fn policy_verdict(reports: &[TestReport]) -> PolicyVerdict {
    let z = |r: &&TestReport| r.z_score.abs();
    let marginal = reports
        .iter()
        .filter(|r| (Z_PASS..Z_SEVERE).contains(&z(r)))
        .count();
    let severe = reports.iter().filter(|r| !(z(r) < Z_SEVERE)).count();
    let exhausted = reports.iter().filter(|r| r.budget_exhausted).count();
    PolicyVerdict {
        total: reports.len(),
        marginal,
        severe,
        exhausted,
        pass: marginal <= 1 && severe == 0 && exhausted == 0,
    }
}

/// JSON summary with all reports and the overall verdict.
pub fn reports_json(reports: &[TestReport]) -> serde_json::Value {
    serde_json::json!({
        "reports": reports,
        "verdict": policy_verdict(reports),
    })
}

/// Pre-registered single-point test functions `f(x, mu)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunction {
    /// `1_B(x)`.
    Indicator { b: Window },
    /// `1_B(x) 1{mu(B) <= 1}`.
    AtMostOne { b: Window },
    /// `1_B(x) min(mu(B), cap)`.
    TruncatedCount { b: Window, cap: usize },
    /// `1_B(x) (mu(ball(x, r)) - 1)`: neighbours of `x` other than itself.
    NeighbourCount { b: Window, r: f64 },
    /// `1_B(x) 1{mu(ball(x, r)) = 1}`: `x` is isolated.
    Isolated { b: Window, r: f64 },
}

fn ball_count(x: &Point, mu: &CountingMeasure, r: f64) -> usize {
    let r2 = r * r;
    mu.points().iter().filter(|y| x.dist2(y) <= r2).count()
}

impl TestFunction {
    pub fn eval(&self, x: &Point, mu: &CountingMeasure) -> f64 {
        match self {
            TestFunction::Indicator { b } => f64::from(u8::from(b.contains(x))),
            TestFunction::AtMostOne { b } => f64::from(u8::from(b.contains(x) && mu.total(b) <= 1)),
            TestFunction::TruncatedCount { b, cap } => {
                if b.contains(x) {
                    mu.total(b).min(*cap) as f64
                } else {
                    0.0
                }
            }
            TestFunction::NeighbourCount { b, r } => {
                if b.contains(x) {
                    ball_count(x, mu, *r).saturating_sub(1) as f64
                } else {
                    0.0
                }
            }
            TestFunction::Isolated { b, r } => {
                f64::from(u8::from(b.contains(x) && ball_count(x, mu, *r) == 1))
            }
        }
    }

    pub fn id(&self) -> String {
        match self {
            TestFunction::Indicator { b } => format!("indicator{}", b.label()),
            TestFunction::AtMostOne { b } => format!("at_most_one{}", b.label()),
            TestFunction::TruncatedCount { b, cap } => format!("truncated_count{}:{cap}", b.label()),
            TestFunction::NeighbourCount { b, r } => format!("neighbour_count{}:r={r}", b.label()),
            TestFunction::Isolated { b, r } => format!("isolated{}:r={r}", b.label()),
        }
    }

    /// The standard family on a window `b` with interaction scale `r`.
    pub fn family(b: &Window, r: f64) -> Vec<TestFunction> {
        vec![
            TestFunction::Indicator { b: b.clone() },
            TestFunction::AtMostOne { b: b.clone() },
            TestFunction::TruncatedCount {
                b: b.clone(),
                cap: 3,
            },
            TestFunction::NeighbourCount { b: b.clone(), r },
            TestFunction::Isolated { b: b.clone(), r },
        ]
    }
}

/// Pre-registered pair test functions `f(x_1, x_2, mu)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PairFunction {
    /// `1_B(x_1) 1_B(x_2)`.
    BoxPair { b: Window },
    /// `1{|x_1 - x_2| <= r}`.
    Close { r: f64 },
    /// `1_B(x_1) 1_B(x_2) 1{|x_1 - x_2| > r}`.
    FarInBox { b: Window, r: f64 },
}

impl PairFunction {
    pub fn eval(&self, x1: &Point, x2: &Point, _mu: &CountingMeasure) -> f64 {
        let v = match self {
            PairFunction::BoxPair { b } => b.contains(x1) && b.contains(x2),
            PairFunction::Close { r } => x1.dist2(x2) <= r * r,
            PairFunction::FarInBox { b, r } => {
                b.contains(x1) && b.contains(x2) && x1.dist2(x2) > r * r
            }
        };
        f64::from(u8::from(v))
    }

    pub fn id(&self) -> String {
        match self {
            PairFunction::BoxPair { b } => format!("box_pair{}", b.label()),
            PairFunction::Close { r } => format!("close:r={r}"),
            PairFunction::FarInBox { b, r } => format!("far_in_box{}:r={r}", b.label()),
        }
    }

    pub fn family(b: &Window, r: f64) -> Vec<PairFunction> {
        vec![
            PairFunction::BoxPair { b: b.clone() },
            PairFunction::Close { r },
            PairFunction::FarInBox { b: b.clone(), r },
        ]
    }
}

/// Pre-registered `B`-local functions `F(mu) = g(mu_B)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LocalFunction {
    /// `1{mu(B) = 0}`.
    Void,
    /// `1{mu(B) <= k}`.
    AtMost {
        k: usize,
    },
    /// `min(mu(B), cap)`.
    TruncatedCount {
        cap: usize,
    },
    Constant {
        value: f64,
    },
}

impl LocalFunction {
    pub fn eval(&self, mu: &CountingMeasure, b: &Window) -> f64 {
        match *self {
            LocalFunction::Void => f64::from(u8::from(mu.total(b) == 0)),
            LocalFunction::AtMost { k } => f64::from(u8::from(mu.total(b) <= k)),
            LocalFunction::TruncatedCount { cap } => mu.total(b).min(cap) as f64,
            LocalFunction::Constant { value } => value,
        }
    }

    pub fn id(&self) -> String {
        match self {
            LocalFunction::Void => "void".into(),
            LocalFunction::AtMost { k } => format!("at_most:{k}"),
            LocalFunction::TruncatedCount { cap } => format!("truncated_count:{cap}"),
            LocalFunction::Constant { value } => format!("constant:{value}"),
        }
    }
}

/// Sample sizes and seeding for the GNZ checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GnzOptions {
    /// Samples per side.
    pub n: usize,
    /// Uniform integration points per right-hand-side sample.
    pub rhs_points: usize,
    pub seed: u64,
    pub max_attempts: u64,
}

impl GnzOptions {
    pub fn new(n: usize, seed: u64) -> Self {
        Self {
            n,
            rhs_points: 4,
            seed,
            max_attempts: 10_000_000,
        }
    }
}

fn uniform_point(target: &FiniteGibbs, rng: &mut StreamRng) -> Point {
    let p = target.window().sample_uniform(rng);
    if target.is_marked() {
        p.with_mark(rand::Rng::random(rng)).expect("mark in [0,1)")
    } else {
        p
    }
}

/// Per-sample right-hand-side integrals, each by `k` uniform points in `C`.
fn rhs_integrals<F>(
    target: &FiniteGibbs,
    batch: &SampleBatch,
    opts: &GnzOptions,
    arity: usize,
    g: F,
) -> Vec<f64>
where
    F: Fn(&[Point], &CountingMeasure) -> f64 + Sync,
{
    let c = target.window();
    let volume = c.volume().powi(arity as i32);
    let k = opts.rhs_points.max(1);
    replicate_map(batch.len(), |i| {
        let eta = &batch.configs[i];
        let mut rng = stream_rng(opts.seed, STREAM_RHS_POINTS, i as u64);
        let mut acc = 0.0;
        for _ in 0..k {
            let xs: Vec<Point> = (0..arity)
                .map(|_| uniform_point(target, &mut rng))
                .collect();
            let density: f64 = xs.iter().map(|x| target.reference().density(x)).product();
            if density > 0.0 {
                acc += g(&xs, eta) * density;
            }
        }
        volume * acc / k as f64
    })
}

/// GNZ identity
/// `E[sum_{x in eta} f(x, eta)] = E[int_C f(x, eta + delta_x) kappa(x, eta) lambda(dx)]`
/// for the finite Gibbs process `target`, one report per test function.
pub fn gnz_test(
    target: &FiniteGibbs,
    fs: &[TestFunction],
    opts: &GnzOptions,
) -> Result<Vec<TestReport>> {
    let lhs_batch = target.rejection_batch(opts.n, opts.seed, STREAM_LHS, opts.max_attempts)?;
    let rhs_batch = target.rejection_batch(opts.n, opts.seed, STREAM_RHS, opts.max_attempts)?;
    let model = target.model();
    Ok(fs
        .iter()
        .map(|f| {
            let lhs: Vec<f64> = lhs_batch
                .configs
                .iter()
                .map(|eta| eta.points().iter().map(|x| f.eval(x, eta)).sum())
                .collect();
            let rhs = rhs_integrals(target, &rhs_batch, opts, 1, |xs, eta| {
                let k = model.kappa(&xs[0], eta);
                if k == 0.0 {
                    0.0
                } else {
                    f.eval(&xs[0], &eta.add(xs[0])) * k
                }
            });
            TestReport::new(
                "gnz",
                f.id(),
                model.name(),
                Estimate::from_samples(&lhs),
                Estimate::from_samples(&rhs),
            )
        })
        .collect())
}

/// Two-point GNZ identity
/// `E[sum_{x_1 != x_2 in eta} f(x_1, x_2, eta)] = E[int_{C^2} f(x_1, x_2, eta + delta_{x_1} + delta_{x_2}) kappa_2(x_1, x_2, eta) lambda^2(dx)]`.
pub fn gnz_multivariate_test(
    target: &FiniteGibbs,
    fs: &[PairFunction],
    opts: &GnzOptions,
) -> Result<Vec<TestReport>> {
    let lhs_batch = target.rejection_batch(opts.n, opts.seed, STREAM_LHS, opts.max_attempts)?;
    let rhs_batch = target.rejection_batch(opts.n, opts.seed, STREAM_RHS, opts.max_attempts)?;
    let model = target.model();
    Ok(fs
        .iter()
        .map(|f| {
            let lhs: Vec<f64> = lhs_batch
                .configs
                .iter()
                .map(|eta| {
                    let mut it = eta.factorial_tuples(2);
                    let mut s = 0.0;
                    while let Some(t) = it.next_tuple() {
                        s += f.eval(&t[0], &t[1], eta);
                    }
                    s
                })
                .collect();
            let rhs = rhs_integrals(target, &rhs_batch, opts, 2, |xs, eta| {
                let k = model.kappa_m(xs, eta);
                if k == 0.0 {
                    0.0
                } else {
                    f.eval(&xs[0], &xs[1], &eta.add(xs[0]).add(xs[1])) * k
                }
            });
            TestReport::new(
                "gnz2",
                f.id(),
                model.name(),
                Estimate::from_samples(&lhs),
                Estimate::from_samples(&rhs),
            )
        })
        .collect())
}

/// Sample sizes and seeding for [`dlr_test`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DlrOptions {
    pub n_outer: usize,
    pub n_inner: usize,
    pub seed: u64,
    pub max_attempts: u64,
}

fn check_nested(outer: &Window, b: &Window) -> Result<()> {
    if !outer.contains_window(b) {
        return Err(crate::error::invalid(
            "b",
            "inner window must lie inside the outer window",
        ));
    }
    Ok(())
}

/// DLR identity `E[F(eta)] = E[int F(mu + eta_{B^c}) P_{B, eta_{B^c}}(d mu)]`
/// for the finite Gibbs process on `outer` with empty boundary.
///
/// The right-hand side resamples `B` `n_inner` times per outer sample with
/// the outer sample's points outside `B` frozen as boundary condition.
pub fn dlr_test(
    model: &PapangelouModel,
    reference: &ReferenceMeasure,
    outer: &Window,
    b: &Window,
    f: LocalFunction,
    opts: &DlrOptions,
) -> Result<TestReport> {
    check_nested(outer, b)?;
    let outer_target = FiniteGibbs::new(model, reference, outer, &BoundaryCondition::empty())?;
    let lhs_batch =
        outer_target.rejection_batch(opts.n_outer, opts.seed, STREAM_LHS, opts.max_attempts)?;
    let rhs_batch =
        outer_target.rejection_batch(opts.n_outer, opts.seed, STREAM_RHS, opts.max_attempts)?;
    let lhs: Vec<f64> = lhs_batch.configs.iter().map(|eta| f.eval(eta, b)).collect();
    let inner: Vec<Result<(f64, bool)>> = replicate_map(rhs_batch.len(), |i| {
        let boundary = BoundaryCondition::new(rhs_batch.configs[i].restrict_complement(b), b)?;
        let target = FiniteGibbs::new(model, reference, b, &boundary)?;
        let mut rng = stream_rng(opts.seed, STREAM_INNER, i as u64);
        let mut acc = 0.0;
        let mut done = 0;
        for _ in 0..opts.n_inner {
            match target.sample_rejection(&mut rng, opts.max_attempts) {
                Ok(draw) => {
                    acc += f.eval(&draw.sample, b);
                    done += 1;
                }
                Err(GibbsError::BudgetExhausted { .. }) => {
                    return Ok((acc / done.max(1) as f64, true))
                }
                Err(e) => return Err(e),
            }
        }
        Ok((acc / done.max(1) as f64, false))
    });
    let mut rhs = Vec::with_capacity(inner.len());
    let mut exhausted = false;
    for r in inner {
        let (v, ex) = r?;
        rhs.push(v);
        exhausted |= ex;
    }
    let mut report = TestReport::new(
        "dlr",
        format!("{}{}", f.id(), b.label()),
        model.name(),
        Estimate::from_samples(&lhs),
        Estimate::from_samples(&rhs),
    );
    if exhausted {
        report.budget_exhausted = true;
        report.pass = false;
    }
    Ok(report)
}

/// Void form of the DLR identity:
/// `P(eta(B) = 0) = E[1 / Z_B(eta_{B^c})]`, the right-hand side by the
/// partition series with `budget` samples per term.
pub fn dlr_void_formula_test(
    model: &PapangelouModel,
    reference: &ReferenceMeasure,
    outer: &Window,
    b: &Window,
    n_outer: usize,
    budget: usize,
    seed: u64,
) -> Result<TestReport> {
    check_nested(outer, b)?;
    let outer_target = FiniteGibbs::new(model, reference, outer, &BoundaryCondition::empty())?;
    let lhs_batch = outer_target.rejection_batch(n_outer, seed, STREAM_LHS, 10_000_000)?;
    let rhs_batch = outer_target.rejection_batch(n_outer, seed, STREAM_RHS, 10_000_000)?;
    let lhs: Vec<f64> = lhs_batch
        .configs
        .iter()
        .map(|eta| LocalFunction::Void.eval(eta, b))
        .collect();
    let rhs: Vec<Result<f64>> = replicate_map(rhs_batch.len(), |i| {
        let boundary = BoundaryCondition::new(rhs_batch.configs[i].restrict_complement(b), b)?;
        let series_seed = crate::rng::child_stream(seed ^ STREAM_SERIES, i as u64);
        let z = partition_series(model, reference, b, &boundary, budget, 1e-9, series_seed)?;
        Ok(reciprocal(z.estimate).value)
    });
    let rhs: Vec<f64> = rhs.into_iter().collect::<Result<_>>()?;
    Ok(TestReport::new(
        "dlr_void_formula",
        format!("void{}", b.label()),
        model.name(),
        Estimate::from_samples(&lhs),
        Estimate::from_samples(&rhs),
    ))
}

/// `E[F(xi_l)]` for the finite Gibbs processes on `base` dilated by each of
/// `scales`, with empty boundary; `F` reads only the points in `b`.
#[allow(clippy::too_many_arguments)]
pub fn local_convergence_probe(
    model: &PapangelouModel,
    reference: &ReferenceMeasure,
    base: &Window,
    b: &Window,
    f: LocalFunction,
    scales: &[f64],
    n: usize,
    seed: u64,
) -> Result<Vec<Estimate>> {
    scales
        .iter()
        .enumerate()
        .map(|(l, &s)| {
            let w = base.dilate(s)?;
            let target = FiniteGibbs::new(model, reference, &w, &BoundaryCondition::empty())?;
            let batch = target.rejection_batch(n, seed, STREAM_PROBE + l as u64, 10_000_000)?;
            let vals: Vec<f64> = batch.configs.iter().map(|mu| f.eval(mu, b)).collect();
            Ok(Estimate::from_samples(&vals))
        })
        .collect()
}

/// Whether a sequence of estimates decreases: no step rises by more than
/// `Z_PASS` combined standard errors and the last lies more than `Z_PASS`
/// below the first.
pub fn decreasing_trend(values: &[Estimate]) -> bool {
    let (Some(first), Some(last)) = (values.first(), values.last()) else {
        return false;
    };
    values.len() > 1
        && values.windows(2).all(|p| p[1].z_score(&p[0]) <= Z_PASS)
        && first.z_score(last) > Z_PASS
}

/// Frequency with which the finite Gibbs processes on `c` with boundaries
/// `psi` and `psi2` differ inside `inner`, when both are thinned from one
/// dominating birth-death process run for time `horizon`.
#[allow(clippy::too_many_arguments)]
pub fn disagreement_probe(
    model: &PapangelouModel,
    reference: &ReferenceMeasure,
    c: &Window,
    psi: &BoundaryCondition,
    psi2: &BoundaryCondition,
    inner: &Window,
    n: usize,
    seed: u64,
    horizon: f64,
) -> Result<Estimate> {
    let a = FiniteGibbs::new(model, reference, c, psi)?;
    let b = FiniteGibbs::new(model, reference, c, psi2)?;
    let differ: Vec<f64> = replicate_map(n, |i| {
        let mut rng = stream_rng(seed, STREAM_DISAGREE, i as u64);
        let out = coupled_birth_death(&[&a, &b], horizon, &mut rng);
        let same = out[0].restrict(inner).multiset_eq(&out[1].restrict(inner));
        f64::from(u8::from(!same))
    });
    Ok(Estimate::from_samples(&differ))
}

/// Points on the surface of `c` expanded by `offset`, on a grid of
/// spacing about `spacing` along each face.
pub fn boundary_ring(c: &Window, offset: f64, spacing: f64) -> Result<CountingMeasure> {
    if !(offset > 0.0 && offset.is_finite()) {
        return Err(crate::error::invalid("ring_offset", "must be positive"));
    }
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(crate::error::invalid("ring_spacing", "must be positive"));
    }
    let outer = c.expand(offset)?;
    let d = outer.dim();
    let ticks: Vec<Vec<f64>> = (0..d)
        .map(|i| {
            let (lo, hi) = (outer.lower()[i], outer.upper()[i]);
            let k = ((hi - lo) / spacing).ceil().max(1.0) as usize;
            (0..=k)
                .map(|j| lo + (hi - lo) * j as f64 / k as f64)
                .collect()
        })
        .collect();
    let mut pts: Vec<Vec<f64>> = Vec::new();
    for axis in 0..d {
        for face in [outer.lower()[axis], outer.upper()[axis]] {
            // grid over the remaining axes
            let mut grid: Vec<Vec<f64>> = vec![Vec::new()];
            for (i, t) in ticks.iter().enumerate() {
                let vals: &[f64] = if i == axis {
                    std::slice::from_ref(&face)
                } else {
                    t
                };
                grid = grid
                    .into_iter()
                    .flat_map(|g| {
                        vals.iter().map(move |&v| {
                            let mut g = g.clone();
                            g.push(v);
                            g
                        })
                    })
                    .collect();
            }
            pts.extend(grid);
        }
    }
    pts.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    pts.dedup();
    pts.iter().map(|p| Point::new(p)).collect()
}
