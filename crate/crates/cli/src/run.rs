//! Command dispatch and output writing.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use gibbs::diagnostics::{
    boundary_ring, decreasing_trend, disagreement_probe, dlr_test, dlr_void_formula_test,
    gnz_multivariate_test, gnz_test, local_convergence_probe, policy_verdict, DlrOptions,
    GnzOptions, PairFunction, TestFunction, TestReport,
};
use gibbs::estimators::{
    check_factorial_conversion, check_janossy_conversion, correlation_from_kappa,
    estimate_janossy_mass, janossy_from_kappa, MomentTable,
};
use gibbs::geometry::subcriticality_probe;
use gibbs::measure::point_to_json;
use gibbs::partition::{partition, PartitionMethod, PartitionRecord};
use gibbs::sampler::{FiniteGibbs, SampleBatch};
use gibbs::{BoundaryCondition, GibbsError, Point, Window};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{
    line_of_offset, locate_key, Command, ConfigError, PartitionMethodSpec, Resolved, RunConfig,
    SamplerKind,
};

/// Stream tag of the main sample batch.
const STREAM_MAIN: u64 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Runtime,
    Verification,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunError {
    pub kind: ErrorKind,
    pub message: String,
}

impl RunError {
    fn validation(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Validation,
            message: message.into(),
        }
    }

    fn runtime(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Runtime,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Validation => 1,
            ErrorKind::Runtime => 2,
            ErrorKind::Verification => 3,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for RunError {}

impl From<GibbsError> for RunError {
    fn from(e: GibbsError) -> Self {
        match e {
            GibbsError::BudgetExhausted { .. } | GibbsError::NotSummable { .. } => {
                RunError::runtime(e.to_string())
            }
            _ => RunError::validation(e.to_string()),
        }
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::runtime(format!("i/o error: {e}"))
    }
}

/// What a successful run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    pub config_hash: String,
    pub seed: u64,
}

/// Options that override or complement the config file.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub threads: Option<usize>,
    pub seed: Option<u64>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Parses and validates config text. Errors carry `origin:line:` prefixes.
pub fn parse_config(text: &str, origin: &str) -> Result<Resolved, RunError> {
    let config: RunConfig = toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| line_of_offset(text, s.start)).unwrap_or(1);
        RunError::validation(format!("{origin}:{line}: {}", e.message()))
    })?;
    config.resolve().map_err(|e: ConfigError| {
        let line = e
            .key
            .as_deref()
            .and_then(|k| locate_key(text, k, Some("model")))
            .map(|l| format!("{l}:"))
            .unwrap_or_default();
        let key = e.key.map(|k| format!(" `{k}`")).unwrap_or_default();
        RunError::validation(format!("{origin}:{line} invalid{key}: {}", e.message))
    })
}

/// Reads `config_path`, runs it, and writes outputs into `output`.
pub fn run_file(
    config_path: &Path,
    output: &Path,
    opts: &RunOptions,
) -> Result<RunOutcome, RunError> {
    let text = fs::read_to_string(config_path)
        .map_err(|e| RunError::validation(format!("{}: {e}", config_path.display())))?;
    run_text(&text, &config_path.display().to_string(), output, opts)
}

/// Runs config `text`; `origin` names it in messages.
pub fn run_text(
    text: &str,
    origin: &str,
    output: &Path,
    opts: &RunOptions,
) -> Result<RunOutcome, RunError> {
    let start = Instant::now();
    let mut resolved = parse_config(text, origin)?;
    if let Some(seed) = opts.seed {
        resolved.config.seed = seed;
    }
    let threads = opts
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| RunError::runtime(format!("cannot start worker pool: {e}")))?;
    fs::create_dir_all(output)?;
    let mut out = Output {
        dir: output.to_path_buf(),
        hash: sha256_hex(text.as_bytes()),
        seed: resolved.config.seed,
        files: Vec::new(),
    };
    let verdict = pool.install(|| execute(&resolved, &mut out));
    let manifest = json!({
        "command": resolved.config.command.name(),
        "config_hash": out.hash,
        "seed": out.seed,
        "threads": threads,
        "versions": {
            "gibbs": gibbs::VERSION,
            "gibbs-cli": env!("CARGO_PKG_VERSION"),
        },
        "files": out.files.iter().map(|p| p.file_name().map(|f| f.to_string_lossy().into_owned())).collect::<Vec<_>>(),
        "status": match &verdict {
            Ok(()) => "ok".to_string(),
            Err(e) => e.message.clone(),
        },
        "wall_time_seconds": start.elapsed().as_secs_f64(),
    });
    fs::write(
        output.join("manifest.json"),
        serde_json::to_string_pretty(&manifest).expect("json"),
    )?;
    verdict?;
    Ok(RunOutcome {
        files: out.files,
        config_hash: out.hash,
        seed: out.seed,
    })
}

struct Output {
    dir: PathBuf,
    hash: String,
    seed: u64,
    files: Vec<PathBuf>,
}

impl Output {
    fn write(&mut self, name: &str, contents: &str) -> Result<(), RunError> {
        let path = self.dir.join(name);
        fs::write(&path, contents)?;
        self.files.push(path);
        Ok(())
    }

    /// CSV with `config_hash,seed` appended to every row.
    fn write_csv(&mut self, name: &str, header: &str, rows: &[String]) -> Result<(), RunError> {
        let mut text = format!("{header},config_hash,seed\n");
        for r in rows {
            text.push_str(&format!("{r},{},{}\n", self.hash, self.seed));
        }
        self.write(name, &text)
    }

    fn tag(&self, mut v: Value) -> Value {
        v["config_hash"] = self.hash.clone().into();
        v["seed"] = self.seed.into();
        v
    }

    fn write_reports(&mut self, reports: &[TestReport]) -> Result<(), RunError> {
        let rows: Vec<String> = reports.iter().map(TestReport::csv_row).collect();
        self.write_csv("reports.csv", TestReport::CSV_HEADER, &rows)?;
        let summary = self.tag(gibbs::diagnostics::reports_json(reports));
        self.write(
            "summary.json",
            &format!(
                "{}\n",
                serde_json::to_string_pretty(&summary).expect("json")
            ),
        )
    }
}

fn verify(reports: &[TestReport]) -> Result<(), RunError> {
    let v = policy_verdict(reports);
    if v.pass {
        Ok(())
    } else {
        Err(RunError {
            kind: ErrorKind::Verification,
            message: format!(
                "verification failed: {} marginal, {} severe, {} exhausted out of {} reports",
                v.marginal, v.severe, v.exhausted, v.total
            ),
        })
    }
}

fn target(r: &Resolved) -> Result<FiniteGibbs, RunError> {
    Ok(FiniteGibbs::new(
        &r.model,
        &r.reference,
        &r.window,
        &r.boundary,
    )?)
}

fn batch(r: &Resolved, g: &FiniteGibbs) -> Result<SampleBatch, RunError> {
    let mc = &r.config.mc;
    Ok(match mc.sampler {
        SamplerKind::Rejection => {
            g.rejection_batch(mc.samples, r.config.seed, STREAM_MAIN, mc.max_attempts)?
        }
        SamplerKind::Mcmc => g.mcmc_batch(mc.samples, r.config.seed, STREAM_MAIN, mc.steps),
    })
}

fn to_points(list: &[Vec<f64>]) -> Vec<Point> {
    list.iter()
        .map(|c| Point::new(c).expect("validated"))
        .collect()
}

fn execute(r: &Resolved, out: &mut Output) -> Result<(), RunError> {
    let cfg = &r.config;
    let seed = cfg.seed;
    match cfg.command {
        Command::Sample => {
            let g = target(r)?;
            let b = batch(r, &g)?;
            let mut text = String::new();
            for (i, (mu, rec)) in b.configs.iter().zip(&b.seeds).enumerate() {
                let mut line = out.tag(json!({
                    "replicate": rec.replicate,
                    "stream": rec.stream,
                    "points": mu.points().iter().map(point_to_json).collect::<Vec<_>>(),
                }));
                if cfg.sample.with_dominating {
                    if let Some(dom) = &b.dominating {
                        line["dominating"] = dom[i]
                            .points()
                            .iter()
                            .map(point_to_json)
                            .collect::<Vec<_>>()
                            .into();
                    }
                }
                text.push_str(&line.to_string());
                text.push('\n');
            }
            out.write("samples.jsonl", &text)
        }
        Command::Partition => {
            let mut methods = Vec::new();
            if cfg.partition.method != PartitionMethodSpec::PoissonMc {
                methods.push(PartitionMethod::Series {
                    budget: cfg.mc.budget,
                    eps: cfg.mc.eps,
                });
            }
            if cfg.partition.method != PartitionMethodSpec::Series {
                methods.push(PartitionMethod::PoissonMc {
                    samples: cfg.mc.samples,
                });
            }
            let mut text = String::new();
            for method in methods {
                let z = partition(&r.model, &r.reference, &r.window, &r.boundary, method, seed)?;
                let mut records = vec![PartitionRecord::new(
                    "partition",
                    &r.model,
                    &r.window,
                    method,
                    z,
                )];
                if cfg.partition.void {
                    let v = gibbs::Estimate {
                        value: 1.0 / z.value,
                        stderr: z.stderr / (z.value * z.value),
                        n: z.n,
                    };
                    records.push(PartitionRecord::new(
                        "void_probability",
                        &r.model,
                        &r.window,
                        method,
                        v,
                    ));
                }
                for rec in records {
                    text.push_str(
                        &out.tag(serde_json::to_value(rec).expect("json"))
                            .to_string(),
                    );
                    text.push('\n');
                }
            }
            out.write("partition.jsonl", &text)
        }
        Command::Estimate => {
            let g = target(r)?;
            let samples = batch(r, &g)?;
            let b = match &cfg.estimate.b {
                Some(s) => s.build()?,
                None => r.window.clone(),
            };
            let max_m = cfg.estimate.max_m;
            let mut moments = Vec::new();
            for m in 1..=max_m {
                moments.push(MomentTable::estimate(&samples, &vec![b.clone(); m])?.csv_row());
            }
            out.write_csv("moments.csv", MomentTable::CSV_HEADER, &moments)?;
            let janossy: Vec<String> = (0..=max_m)
                .map(|m| {
                    let e = estimate_janossy_mass(&samples, &b, m);
                    format!("{m},{},{},{},{}", b.label(), e.value, e.stderr, e.n)
                })
                .collect();
            out.write_csv("janossy.csv", "m,window,value,stderr,n", &janossy)?;
            let mut conv = Vec::new();
            for m in 0..=max_m {
                for (kind, c) in [
                    (
                        "factorial_from_janossy",
                        check_factorial_conversion(&samples, &b, m)?,
                    ),
                    (
                        "janossy_from_factorial",
                        check_janossy_conversion(&samples, &b, m)?,
                    ),
                ] {
                    conv.push(format!(
                        "{kind},{m},{},{},{},{},{}",
                        c.direct.value,
                        c.direct.stderr,
                        c.converted.value,
                        c.converted.stderr,
                        c.z_score()
                    ));
                }
            }
            out.write_csv(
                "conversions.csv",
                "series,m,direct,direct_stderr,converted,converted_stderr,z_score",
                &conv,
            )?;
            if !cfg.estimate.points.is_empty() {
                let xs = to_points(&cfg.estimate.points);
                let rho = correlation_from_kappa(g.model(), &samples, &xs);
                let j = janossy_from_kappa(g.model(), &samples, &r.window, &xs);
                let label = cfg
                    .estimate
                    .points
                    .iter()
                    .map(|p| {
                        format!(
                            "({})",
                            p.iter().map(f64::to_string).collect::<Vec<_>>().join(" ")
                        )
                    })
                    .collect::<Vec<_>>()
                    .join(" ");
                let rows = vec![
                    format!(
                        "correlation,{},{label},{},{},{}",
                        xs.len(),
                        rho.value,
                        rho.stderr,
                        rho.n
                    ),
                    format!(
                        "janossy_density,{},{label},{},{},{}",
                        xs.len(),
                        j.value,
                        j.stderr,
                        j.n
                    ),
                ];
                out.write_csv("densities.csv", "quantity,m,points,value,stderr,n", &rows)?;
            }
            Ok(())
        }
        Command::Gnz => {
            let g = target(r)?;
            let b = match &cfg.gnz.b {
                Some(s) => s.build()?,
                None => r.window.dilate(0.5)?,
            };
            let radius = cfg.gnz.r.unwrap_or_else(|| cfg.model.scale());
            let opts = GnzOptions {
                n: cfg.mc.samples,
                rhs_points: cfg.gnz.rhs_points,
                seed,
                max_attempts: cfg.mc.max_attempts,
            };
            let mut reports = gnz_test(&g, &TestFunction::family(&b, radius), &opts)?;
            if cfg.gnz.pairs {
                reports.extend(gnz_multivariate_test(
                    &g,
                    &PairFunction::family(&b, radius),
                    &opts,
                )?);
            }
            out.write_reports(&reports)?;
            verify(&reports)
        }
        Command::Dlr => {
            let d = cfg.dlr.as_ref().expect("validated");
            let inner = d.inner.build()?;
            let opts = DlrOptions {
                n_outer: d.n_outer,
                n_inner: d.n_inner,
                seed,
                max_attempts: cfg.mc.max_attempts,
            };
            let mut reports = Vec::new();
            for f in &d.functions {
                reports.push(dlr_test(
                    &r.model,
                    &r.reference,
                    &r.window,
                    &inner,
                    *f,
                    &opts,
                )?);
            }
            if d.void_formula {
                reports.push(dlr_void_formula_test(
                    &r.model,
                    &r.reference,
                    &r.window,
                    &inner,
                    d.n_outer,
                    cfg.mc.budget,
                    seed,
                )?);
            }
            out.write_reports(&reports)?;
            verify(&reports)
        }
        Command::Converge => {
            let c = cfg.converge.as_ref().expect("validated");
            let b = c.b.build()?;
            let est = local_convergence_probe(
                &r.model,
                &r.reference,
                &r.window,
                &b,
                c.function,
                &c.scales,
                cfg.mc.samples,
                seed,
            )?;
            let halo = match r.model.interaction_range() {
                Some(range) => Some(b.expand(range)?),
                None => None,
            };
            let mut rows = Vec::new();
            let mut stable = Vec::new();
            for (s, e) in c.scales.iter().zip(&est) {
                let w = r.window.dilate(*s)?;
                let contains = halo.as_ref().is_some_and(|h| w.contains_window(h));
                rows.push(format!(
                    "{s},{},{contains},{},{},{}",
                    w.label(),
                    e.value,
                    e.stderr,
                    e.n
                ));
                if contains {
                    stable.push((*s, *e));
                }
            }
            out.write_csv(
                "convergence.csv",
                "scale,window,contains_halo,value,stderr,n",
                &rows,
            )?;
            let reports: Vec<TestReport> = stable
                .windows(2)
                .map(|p| {
                    TestReport::new(
                        "local_convergence",
                        format!("{}:scale={}..{}", c.function.id(), p[0].0, p[1].0),
                        r.model.name(),
                        p[0].1,
                        p[1].1,
                    )
                })
                .collect();
            let summary = out.tag(gibbs::diagnostics::reports_json(&reports));
            out.write(
                "summary.json",
                &format!(
                    "{}\n",
                    serde_json::to_string_pretty(&summary).expect("json")
                ),
            )?;
            verify(&reports)
        }
        Command::Disagree => {
            let d = cfg.disagree.as_ref().expect("validated");
            let center = r.window.center();
            let mut rows = Vec::new();
            let mut values = Vec::new();
            for &side in &d.sides {
                let c = Window::cube(&center, side)?;
                let inner = Window::cube(&center, side * d.inner_fraction)?;
                let ring =
                    BoundaryCondition::new(boundary_ring(&c, d.ring_offset, d.ring_spacing)?, &c)?;
                let e = disagreement_probe(
                    &r.model,
                    &r.reference,
                    &c,
                    &BoundaryCondition::empty(),
                    &ring,
                    &inner,
                    cfg.mc.samples,
                    seed,
                    d.horizon,
                )?;
                rows.push(format!(
                    "{side},{},{},{},{}",
                    inner.label(),
                    e.value,
                    e.stderr,
                    e.n
                ));
                values.push(e);
            }
            out.write_csv("disagreement.csv", "side,inner,value,stderr,n", &rows)?;
            let decreasing = decreasing_trend(&values);
            let summary = out.tag(json!({ "decreasing_at_3_stderr": decreasing }));
            out.write(
                "summary.json",
                &format!(
                    "{}\n",
                    serde_json::to_string_pretty(&summary).expect("json")
                ),
            )
        }
        Command::Percolate => {
            let p = cfg.percolate.as_ref().expect("validated");
            let table =
                subcriticality_probe(&p.z_values, &p.grain, r.dim, &p.sides, cfg.mc.samples, seed)?;
            let rows: Vec<String> = table
                .rows
                .iter()
                .map(|row| {
                    format!(
                        "{},{},{},{},{}",
                        row.z, row.window_scale, row.reach_freq, row.stderr, row.n
                    )
                })
                .collect();
            out.write_csv(
                "percolation.csv",
                "z,window_scale,reach_freq,stderr,n",
                &rows,
            )?;
            let summary =
                out.tag(json!({ "monotonicity_violations": table.monotonicity_violations }));
            out.write(
                "summary.json",
                &format!(
                    "{}\n",
                    serde_json::to_string_pretty(&summary).expect("json")
                ),
            )?;
            if table.monotonicity_violations > 0 {
                return Err(RunError {
                    kind: ErrorKind::Verification,
                    message: format!(
                        "{} coupled runs violate monotonicity in z",
                        table.monotonicity_violations
                    ),
                });
            }
            Ok(())
        }
    }
}
