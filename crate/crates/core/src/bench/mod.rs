//! Experiment harness: problem selection, seeded batches, scheme
//! comparisons and the feasibility-drift demo. The `afbb-bench` binary is a
//! thin wrapper over [`cli`].

pub mod cli;
mod record;

use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

pub use record::{
    aggregate, read_jsonl, read_runs_csv, write_aggregates_csv, write_jsonl, write_runs_csv, AggregateRecord,
    OutputFormat, Record, RunRecord,
};

use crate::auglag::{auglag_solve, AugLagConfig};
use crate::error::{Error, Result};
use crate::linalg::{sym, DenseMatrix};
use crate::manifold::{feasibility_error, StiefelPoint};
use crate::objective::Objective;
use crate::problems::{
    gen_ex2, gen_ex3, FixedEntrySet, HeterogeneousQuadratic, LMode, LowRankCorrProblem, TraceEigenProblem, Weights,
};
use crate::random::{gaussian_matrix, random_stiefel, random_symmetric, rng_from_seed};
use crate::retraction::{Geometry, RetractionScheme};
use crate::solver::{solve, solve_oblique, Afbb, SolverConfig, SolverReport, StopReason};

/// Which problem a batch runs. The size parameter (`p` or the rank `r`) is
/// supplied per run.
#[derive(Debug, Clone)]
pub enum ProblemSpec {
    Ex2 { n: usize },
    Ex3 { n: usize, weighted: bool },
    /// Correlation target (and optional weights) read from files.
    CorrFile {
        name: String,
        c: Arc<DenseMatrix>,
        h: Option<Arc<DenseMatrix>>,
    },
    Balogh { n: usize, l_mode: LMode },
    /// Seeded random symmetric `A`.
    TraceEigen { n: usize },
    TraceFile { name: String, a: Arc<DenseMatrix> },
    /// Correlation problem plus prescribed zero entries, solved by the
    /// augmented Lagrangian. `fixed = None` samples `n_e` partners per row.
    Ex10 {
        base: Box<ProblemSpec>,
        n_e: usize,
        fixed: Option<Arc<FixedEntrySet>>,
    },
}

impl ProblemSpec {
    pub fn id(&self) -> String {
        match self {
            ProblemSpec::Ex2 { .. } => "ex2".into(),
            ProblemSpec::Ex3 { weighted: false, .. } => "ex3".into(),
            ProblemSpec::Ex3 { weighted: true, .. } => "ex3-weighted".into(),
            ProblemSpec::CorrFile { name, .. } => format!("corr:{name}"),
            ProblemSpec::Balogh { .. } => "balogh".into(),
            ProblemSpec::TraceEigen { .. } => "trace-eigen".into(),
            ProblemSpec::TraceFile { name, .. } => format!("trace:{name}"),
            ProblemSpec::Ex10 { base, .. } => format!("ex10:{}", base.id()),
        }
    }

    pub fn n(&self) -> usize {
        match self {
            ProblemSpec::Ex2 { n } | ProblemSpec::Ex3 { n, .. } => *n,
            ProblemSpec::Balogh { n, .. } | ProblemSpec::TraceEigen { n } => *n,
            ProblemSpec::CorrFile { c, .. } => c.nrows(),
            ProblemSpec::TraceFile { a, .. } => a.nrows(),
            ProblemSpec::Ex10 { base, .. } => base.n(),
        }
    }

    pub fn is_correlation(&self) -> bool {
        matches!(
            self,
            ProblemSpec::Ex2 { .. } | ProblemSpec::Ex3 { .. } | ProblemSpec::CorrFile { .. } | ProblemSpec::Ex10 { .. }
        )
    }

    fn correlation(&self, r: usize, seed: u64) -> Result<LowRankCorrProblem> {
        match self {
            ProblemSpec::Ex2 { n } => gen_ex2(*n, r),
            ProblemSpec::Ex3 { n, weighted } => gen_ex3(*n, r, *weighted, seed),
            ProblemSpec::CorrFile { name, c, h } => {
                let w = h.as_ref().map_or(Weights::Ones, |h| Weights::Matrix((**h).clone()));
                Ok(LowRankCorrProblem::new((**c).clone(), w, r)?.with_name(name.clone()))
            }
            _ => Err(Error::Unsupported(format!("'{}' is not a correlation problem", self.id()))),
        }
    }
}

/// Starting point for correlation problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StartKind {
    /// Modified PCA of the target.
    #[default]
    Pca,
    /// Seeded Gaussian columns, normalized.
    Random,
}

impl std::str::FromStr for StartKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pca" => Ok(StartKind::Pca),
            "random" | "rand" => Ok(StartKind::Random),
            other => Err(Error::InvalidParameter(format!("unknown start '{other}'"))),
        }
    }
}

/// A solver variant in a batch or comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Variant {
    pub scheme: RetractionScheme,
    pub rho: f64,
}

impl Variant {
    pub fn label(&self) -> String {
        format!(
            "{}:{}:{}{}",
            self.scheme.kind,
            self.rho,
            self.scheme.gtau.name(),
            if self.scheme.feasibility_control { "" } else { ":noctl" }
        )
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;
    /// `scheme[:rho[:gtau[:ctl|noctl]]]`
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.is_empty() || parts.len() > 4 {
            return Err(Error::InvalidParameter(format!("bad variant '{s}'")));
        }
        let mut scheme = RetractionScheme::new(parts[0].parse()?);
        let rho = match parts.get(1) {
            Some(r) => r
                .parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("bad rho in '{s}'")))?,
            None => SolverConfig::default().rho,
        };
        if let Some(g) = parts.get(2) {
            scheme = scheme.with_gtau(g.parse()?);
        }
        match parts.get(3).copied() {
            None | Some("ctl") => {}
            Some("noctl") => scheme = scheme.with_control(false),
            Some(other) => return Err(Error::InvalidParameter(format!("bad control flag '{other}'"))),
        }
        Ok(Variant { scheme, rho })
    }
}

/// Everything a batch needs.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    /// `p` (Stiefel problems) or `r` (correlation problems) per run.
    pub ranks: Vec<usize>,
    pub solver: SolverConfig,
    pub auglag: AugLagConfig,
    pub start: StartKind,
    pub seed: u64,
    pub repeat: usize,
    /// Worker threads; 0 lets the pool decide.
    pub jobs: usize,
    /// When false, `wall_ms` is recorded as 0 so streams compare bitwise.
    pub timing: bool,
}

impl ExperimentConfig {
    pub fn new(problem: ProblemSpec, ranks: Vec<usize>) -> Self {
        Self {
            problem,
            ranks,
            solver: SolverConfig::default(),
            auglag: AugLagConfig::default(),
            start: StartKind::Pca,
            seed: 0,
            repeat: 1,
            jobs: 1,
            timing: true,
        }
    }
}

fn rel_err(f: f64, opt: Option<f64>) -> Option<f64> {
    opt.map(|o| (f - o).abs() / if o == 0.0 { 1.0 } else { o.abs() })
}

fn random_unit_columns(r: usize, n: usize, seed: u64) -> DenseMatrix {
    let mut v = gaussian_matrix(r, n, &mut rng_from_seed(seed));
    for mut c in v.column_iter_mut() {
        let s = c.norm();
        c /= s;
    }
    v
}

#[allow(clippy::too_many_arguments)]
fn stiefel_record<P: Objective>(
    id: String,
    prob: &P,
    cfg: &SolverConfig,
    seed: u64,
    timing: bool,
    start: Instant,
    rep: SolverReport,
) -> RunRecord {
    let (n, p) = prob.dims();
    let wall = start.elapsed().as_secs_f64() * 1e3;
    RunRecord {
        problem_id: id,
        n,
        p,
        scheme: cfg.scheme.kind.name().into(),
        rho: cfg.rho,
        gtau: cfg.scheme.gtau.name().into(),
        control: cfg.scheme.feasibility_control,
        seed,
        stop_reason: rep.stop_reason.name().into(),
        f_initial: rep.f_initial,
        f_final: rep.f_final,
        residual_initial: rep.residual_initial,
        residual: rep.residual_final,
        feasi: rep.feasi,
        nfge: rep.nfge,
        iters: rep.iters,
        wall_ms: if timing { wall } else { 0.0 },
        err: rel_err(rep.f_final, prob.known_optimum()),
        nu: None,
    }
}

/// One solve of `spec` at size `rank` from the start determined by `seed`.
pub fn run_single(
    spec: &ProblemSpec,
    rank: usize,
    seed: u64,
    cfg: &SolverConfig,
    auglag: &AugLagConfig,
    start_kind: StartKind,
    timing: bool,
) -> Result<RunRecord> {
    let id = spec.id();
    let n = spec.n();
    match spec {
        ProblemSpec::Balogh { l_mode, .. } => {
            let mut rng = rng_from_seed(seed);
            let prob = HeterogeneousQuadratic::with_mode(n, rank, *l_mode, &mut rng)?;
            let x0 = StiefelPoint::random(n, rank, &mut rng);
            let t = Instant::now();
            let rep = solve(&prob, &x0, cfg)?;
            Ok(stiefel_record(id, &prob, cfg, seed, timing, t, rep))
        }
        ProblemSpec::TraceEigen { .. } => {
            let mut rng = rng_from_seed(seed);
            let prob = TraceEigenProblem::new(random_symmetric(n, &mut rng), rank)?.with_computed_optimum();
            let x0 = StiefelPoint::random(n, rank, &mut rng);
            let t = Instant::now();
            let rep = solve(&prob, &x0, cfg)?;
            Ok(stiefel_record(id, &prob, cfg, seed, timing, t, rep))
        }
        ProblemSpec::TraceFile { a, .. } => {
            let mut prob = TraceEigenProblem::new((**a).clone(), rank)?;
            if n <= 2000 {
                prob = prob.with_computed_optimum();
            }
            let x0 = StiefelPoint::random(n, rank, &mut rng_from_seed(seed));
            let t = Instant::now();
            let rep = solve(&prob, &x0, cfg)?;
            Ok(stiefel_record(id, &prob, cfg, seed, timing, t, rep))
        }
        ProblemSpec::Ex10 { base, n_e, fixed } => {
            let prob = base.correlation(rank, seed)?;
            let fes = match fixed {
                Some(f) => (**f).clone(),
                None => FixedEntrySet::sample_zero_pattern(n, *n_e, 0.0, &mut rng_from_seed(seed))?,
            };
            let t = Instant::now();
            let v0 = match start_kind {
                StartKind::Pca => prob.pca_start()?,
                StartKind::Random => random_unit_columns(rank, n, seed),
            };
            let al = AugLagConfig {
                solver: *cfg,
                ..*auglag
            };
            let rep = auglag_solve(&prob, &fes, &v0, &al)?;
            let wall = t.elapsed().as_secs_f64() * 1e3;
            Ok(RunRecord {
                problem_id: id,
                n,
                p: rank,
                scheme: cfg.scheme.kind.name().into(),
                rho: cfg.rho,
                gtau: cfg.scheme.gtau.name().into(),
                control: cfg.scheme.feasibility_control,
                seed,
                stop_reason: rep.stop.name().into(),
                f_initial: prob.evaluate(&v0)?.value,
                f_final: rep.theta,
                residual_initial: prob.nlcm_residual(&v0),
                residual: rep.residual,
                feasi: rep.feasi,
                nfge: rep.nfge,
                iters: rep.trace.iter().map(|s| s.iters).sum(),
                wall_ms: if timing { wall } else { 0.0 },
                err: None,
                nu: Some(rep.nu),
            })
        }
        _ => {
            let prob = spec.correlation(rank, seed)?;
            let t = Instant::now();
            let v0 = match start_kind {
                StartKind::Pca => prob.pca_start()?,
                StartKind::Random => random_unit_columns(rank, n, seed),
            };
            let rep = solve_oblique(&prob, &v0, cfg)?;
            let mut rec = stiefel_record(id, &prob, cfg, seed, timing, t, rep.clone());
            (rec.n, rec.p) = (n, rank);
            rec.residual_initial = prob.nlcm_residual(&v0);
            rec.residual = prob.nlcm_residual(&rep.x_final);
            Ok(rec)
        }
    }
}

fn in_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Runs every `(rank, repetition)` pair and returns the records ordered by
/// `(rank, seed)` whatever the completion order, followed by the per-rank
/// aggregates.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<(Vec<RunRecord>, Vec<AggregateRecord>)> {
    if cfg.ranks.is_empty() || cfg.repeat == 0 {
        return Err(Error::InvalidParameter("need at least one rank and one repetition".into()));
    }
    cfg.solver.validate()?;
    let tasks: Vec<(usize, u64)> = cfg
        .ranks
        .iter()
        .flat_map(|&r| (0..cfg.repeat as u64).map(move |k| (r, cfg.seed + k)))
        .collect();
    let runs = in_pool(cfg.jobs, || {
        tasks
            .par_iter()
            .map(|&(r, s)| run_single(&cfg.problem, r, s, &cfg.solver, &cfg.auglag, cfg.start, cfg.timing))
            .collect::<Result<Vec<_>>>()
    })??;
    let aggs = aggregate(&runs);
    Ok((runs, aggs))
}

/// Paired comparison row. `saved_ratio` is the mean over seeds of
/// `100 (nfge - nfge_base) / nfge_base` against the first variant.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ComparisonRow {
    pub label: String,
    pub mean_nfge: f64,
    pub mean_iters: f64,
    pub mean_f_final: f64,
    pub mean_err: Option<f64>,
    pub saved_ratio: Option<f64>,
    pub nfge: Vec<usize>,
}

/// Runs each variant from the same seeded starts. The first variant is the
/// baseline of the saved-ratio column.
pub fn compare_schemes(
    spec: &ProblemSpec,
    rank: usize,
    variants: &[Variant],
    seeds: &[u64],
    base: &SolverConfig,
    jobs: usize,
) -> Result<Vec<ComparisonRow>> {
    if variants.len() < 2 || seeds.is_empty() {
        return Err(Error::InvalidParameter("compare needs two variants and one seed".into()));
    }
    let tasks: Vec<(usize, u64)> = (0..variants.len())
        .flat_map(|v| seeds.iter().map(move |&s| (v, s)))
        .collect();
    let auglag = AugLagConfig::default();
    let recs = in_pool(jobs, || {
        tasks
            .par_iter()
            .map(|&(v, s)| {
                let cfg = SolverConfig {
                    scheme: variants[v].scheme,
                    rho: variants[v].rho,
                    ..*base
                };
                run_single(spec, rank, s, &cfg, &auglag, StartKind::Pca, false)
            })
            .collect::<Result<Vec<_>>>()
    })??;
    let m = seeds.len();
    let rows = recs.chunks(m).collect::<Vec<_>>();
    let base_nfge: Vec<f64> = rows[0].iter().map(|r| r.nfge as f64).collect();
    Ok(rows
        .iter()
        .zip(variants)
        .enumerate()
        .map(|(i, (rs, v))| {
            let mean = |f: &dyn Fn(&RunRecord) -> f64| rs.iter().map(f).sum::<f64>() / m as f64;
            let errs: Option<Vec<f64>> = rs.iter().map(|r| r.err).collect();
            ComparisonRow {
                label: v.label(),
                mean_nfge: mean(&|r| r.nfge as f64),
                mean_iters: mean(&|r| r.iters as f64),
                mean_f_final: mean(&|r| r.f_final),
                mean_err: errs.map(|e| e.iter().sum::<f64>() / m as f64),
                saved_ratio: (i > 0).then(|| {
                    rs.iter()
                        .zip(&base_nfge)
                        .map(|(r, b)| 100.0 * (r.nfge as f64 - b) / b)
                        .sum::<f64>()
                        / m as f64
                }),
                nfge: rs.iter().map(|r| r.nfge).collect(),
            }
        })
        .collect())
}

/// Per-iteration `‖X_k^T X_k - I‖_F`, `k = 1, 2, ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftTrace {
    pub drift: Vec<f64>,
    /// Set when the run ended before the requested number of steps.
    pub stop: Option<StopReason>,
}

impl DriftTrace {
    pub fn max(&self) -> f64 {
        self.drift.iter().copied().fold(0.0, f64::max)
    }

    pub fn last(&self) -> f64 {
        self.drift.last().copied().unwrap_or(0.0)
    }
}

/// Trace problem with a stiffness-like spectrum: eigenvalues log-spaced over
/// `[1, 1e10]` in a seeded random basis, plus a seeded random start.
pub fn drift_instance(n: usize, p: usize, seed: u64) -> Result<(TraceEigenProblem, StiefelPoint)> {
    let mut rng = rng_from_seed(seed);
    let q = random_stiefel(n, n, &mut rng);
    let spectrum = DenseMatrix::from_fn(n, 1, |i, _| 10f64.powf(10.0 * i as f64 / (n.max(2) - 1) as f64));
    let mut scaled = q.clone();
    for (j, mut c) in scaled.column_iter_mut().enumerate() {
        c *= spectrum[j];
    }
    let a = sym(&(scaled * q.transpose()));
    let prob = TraceEigenProblem::new(a, p)?;
    let x0 = StiefelPoint::random(n, p, &mut rng);
    Ok((prob, x0))
}

/// Runs up to `steps` iterations of the new scheme with all convergence
/// tests disabled and records the feasibility error after each.
pub fn drift_trace<P: Objective>(
    problem: &P,
    x0: &StiefelPoint,
    steps: usize,
    controlled: bool,
    base: &SolverConfig,
) -> Result<DriftTrace> {
    let cfg = SolverConfig {
        scheme: base.scheme.with_control(controlled),
        max_iter: steps,
        ..*base
    }
    .with_tolerances(f64::MIN_POSITIVE, f64::MIN_POSITIVE, f64::MIN_POSITIVE);
    let mut solver = Afbb::new(problem, x0.mat().clone(), Geometry::Stiefel, cfg)?;
    let mut drift = Vec::with_capacity(steps);
    let stop = loop {
        match solver.iterate_once()? {
            None => drift.push(feasibility_error(&solver.state().x)),
            Some(StopReason::MaxIter) => break None,
            Some(r) => break Some(r),
        }
    };
    Ok(DriftTrace { drift, stop })
}

pub fn drift_demo(n: usize, p: usize, steps: usize, controlled: bool, seed: u64) -> Result<DriftTrace> {
    let (prob, x0) = drift_instance(n, p, seed)?;
    drift_trace(&prob, &x0, steps, controlled, &SolverConfig::default())
}
