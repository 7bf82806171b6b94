//! The adaptive feasible BB-like method.
//!
//! Each iteration picks a trial step from the alternating BB rule, clamps it,
//! backtracks along the chosen curve until the nonmonotone Armijo test passes
//! and then updates the secant pair and the reference value. [`Afbb`] exposes
//! single iterations for instrumentation; [`solve`] runs to termination.

use std::collections::VecDeque;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::linesearch::{
    abb, armijo_backtrack, safeguard, BbState, ReferenceState, SafeguardParams, MAX_BACKTRACKS,
};
use crate::manifold::{check_rho, StiefelPoint};
use crate::objective::Objective;
use crate::retraction::{build_step_curve, GeneralizedConstraint, Geometry, RetractionScheme};

/// How the residual test compares `‖D_k‖`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ResidualMode {
    /// `‖D_k‖ <= eps ‖D_0‖`
    #[default]
    Relative,
    /// `‖D_k‖ <= eps`
    Absolute,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub rho: f64,
    pub scheme: RetractionScheme,
    pub eps: f64,
    pub eps_x: f64,
    pub eps_f: f64,
    pub window_t: usize,
    pub max_iter: usize,
    pub safeguard: SafeguardParams,
    pub ref_cap: usize,
    pub seed: u64,
    pub reorth_threshold: f64,
    pub residual_mode: ResidualMode,
    pub max_backtracks: usize,
    /// The first trial step is `initial_step / ‖D_0‖`.
    pub initial_step: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rho: 0.25,
            scheme: RetractionScheme::default(),
            eps: 1e-5,
            eps_x: 1e-5,
            eps_f: 1e-8,
            window_t: 5,
            max_iter: 3000,
            safeguard: SafeguardParams::default(),
            ref_cap: 3,
            seed: 0,
            reorth_threshold: 1e-14,
            residual_mode: ResidualMode::Relative,
            max_backtracks: MAX_BACKTRACKS,
            initial_step: 0.5,
        }
    }
}

impl SolverConfig {
    pub fn with_scheme(mut self, scheme: RetractionScheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = rho;
        self
    }

    pub fn with_tolerances(mut self, eps: f64, eps_x: f64, eps_f: f64) -> Self {
        self.eps = eps;
        self.eps_x = eps_x;
        self.eps_f = eps_f;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_rho(self.rho)?;
        self.safeguard.validate()?;
        let tols_ok = [self.eps, self.eps_x, self.eps_f, self.reorth_threshold, self.initial_step]
            .iter()
            .all(|t| *t > 0.0 && t.is_finite());
        if !tols_ok || self.window_t == 0 {
            return Err(Error::InvalidParameter(
                "tolerances must be positive and the window nonempty".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StopReason {
    ResidualRel,
    ResidualAbs,
    XtolFtol,
    WindowedMeans,
    MaxIter,
    LineSearchFail,
}

impl StopReason {
    pub fn name(self) -> &'static str {
        match self {
            StopReason::ResidualRel => "residual_rel",
            StopReason::ResidualAbs => "residual_abs",
            StopReason::XtolFtol => "xtol_ftol",
            StopReason::WindowedMeans => "windowed_means",
            StopReason::MaxIter => "max_iter",
            StopReason::LineSearchFail => "line_search_fail",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverReport {
    pub x_final: DenseMatrix,
    pub f_initial: f64,
    pub f_final: f64,
    /// `F(X_0), F(X_1), ...`
    pub f_history: Vec<f64>,
    pub residual_initial: f64,
    /// `‖D‖_F` at the final iterate.
    pub residual_final: f64,
    /// Constraint residual after the final restoration.
    pub feasi: f64,
    /// Largest constraint residual seen at any iterate.
    pub max_feasibility: f64,
    pub nfge: usize,
    pub iters: usize,
    pub stop_reason: StopReason,
    pub wall_time: Duration,
}

/// Complete mutable state of a run. Cloning it gives a replayable snapshot.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub x: DenseMatrix,
    pub f: f64,
    pub g: DenseMatrix,
    pub d: DenseMatrix,
    pub d_norm: f64,
    pub d0_norm: f64,
    pub f0: f64,
    pub k: usize,
    pub bb: BbState,
    /// Last clamped trial step, reused when the BB quotient degenerates.
    pub tau_prev: f64,
    pub reference: ReferenceState,
    pub f_history: Vec<f64>,
    pub tol_x: VecDeque<f64>,
    pub tol_f: VecDeque<f64>,
    pub nfge: usize,
    pub stop: Option<StopReason>,
    pub max_feasibility: f64,
    /// Accepted step and backtrack count of the latest iteration.
    pub last_tau: f64,
    pub last_backtracks: usize,
}

pub struct Afbb<'a, P: Objective + ?Sized> {
    problem: &'a P,
    geom: Geometry,
    cfg: SolverConfig,
    state: SolverState,
}

impl<'a, P: Objective + ?Sized> Afbb<'a, P> {
    /// Evaluates the objective at `x0` (one evaluation) and sets up the loop.
    pub fn new(problem: &'a P, x0: DenseMatrix, geom: Geometry, cfg: SolverConfig) -> Result<Self> {
        cfg.validate()?;
        crate::error::check_shape(problem.dims(), x0.shape())?;
        let gp = problem.evaluate(&x0)?;
        if !gp.value.is_finite() {
            return Err(Error::NonFinite(format!("initial objective value {}", gp.value)));
        }
        let d = geom.residual_direction(&x0, &gp.euclid_grad, cfg.rho);
        let d_norm = d.norm();
        let feas = geom.feasibility(&x0);
        let state = SolverState {
            f: gp.value,
            f0: gp.value,
            g: gp.euclid_grad,
            d,
            d_norm,
            d0_norm: d_norm,
            k: 0,
            bb: BbState::default(),
            tau_prev: 0.0,
            reference: ReferenceState::new(gp.value, cfg.ref_cap),
            f_history: vec![gp.value],
            tol_x: VecDeque::with_capacity(cfg.window_t),
            tol_f: VecDeque::with_capacity(cfg.window_t),
            nfge: 1,
            stop: None,
            max_feasibility: feas,
            last_tau: 0.0,
            last_backtracks: 0,
            x: x0,
        };
        Ok(Self {
            problem,
            geom,
            cfg,
            state,
        })
    }

    pub fn state(&self) -> &SolverState {
        &self.state
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geom
    }

    pub fn snapshot(&self) -> SolverState {
        self.state.clone()
    }

    pub fn restore(&mut self, state: SolverState) {
        self.state = state;
    }

    pub fn stopped(&self) -> Option<StopReason> {
        self.state.stop
    }

    fn residual_stop(&self) -> Option<StopReason> {
        let st = &self.state;
        match self.cfg.residual_mode {
            ResidualMode::Relative if st.d_norm <= self.cfg.eps * st.d0_norm => Some(StopReason::ResidualRel),
            ResidualMode::Absolute if st.d_norm <= self.cfg.eps => Some(StopReason::ResidualAbs),
            _ => None,
        }
    }

    /// Performs one full iteration, or records why the run is over. Returns
    /// the stop reason once the run has terminated; later calls are no-ops.
    pub fn iterate_once(&mut self) -> Result<Option<StopReason>> {
        if self.state.stop.is_some() {
            return Ok(self.state.stop);
        }
        if let Some(r) = self.residual_stop() {
            self.state.stop = Some(r);
            return Ok(self.state.stop);
        }
        if self.state.k >= self.cfg.max_iter {
            self.state.stop = Some(StopReason::MaxIter);
            return Ok(self.state.stop);
        }
        let cfg = self.cfg;
        let st = &mut self.state;

        let tau0 = if st.k == 0 {
            cfg.initial_step / st.d_norm
        } else {
            abb(&st.bb).unwrap_or(st.tau_prev)
        };
        let tau1 = safeguard(tau0, st.d_norm, &cfg.safeguard)?;
        st.tau_prev = tau1;

        let step = build_step_curve(&self.geom, &cfg.scheme, &st.x, &st.g, &st.d)?;
        let accepted = match armijo_backtrack(
            self.problem,
            &step,
            tau1,
            &st.reference,
            &cfg.safeguard,
            cfg.max_backtracks,
        ) {
            Ok(a) => a,
            Err(Error::NonDescent(_)) | Err(Error::BacktrackOverflow(_)) => {
                st.stop = Some(StopReason::LineSearchFail);
                return Ok(st.stop);
            }
            Err(e) => return Err(e),
        };
        st.nfge += accepted.evaluations;

        let y = accepted.eval.y;
        let d_new = self.geom.residual_direction(&y, &accepted.grad, cfg.rho);
        let s = &y - &st.x;
        let n_big = st.x.nrows().max(st.x.ncols()) as f64;
        let tol_x = s.norm() / n_big.sqrt();
        let tol_f = (st.f - accepted.value).abs() / (st.f.abs() + 1.0);

        st.reference.update(accepted.value);
        st.bb = BbState {
            y_prev: Some(&d_new - &st.d),
            s_prev: Some(s),
            k: st.k + 1,
            step_norm_sq: accepted.eval.step_norm_sq,
        };
        st.x = y;
        st.f = accepted.value;
        st.g = accepted.grad;
        st.d_norm = d_new.norm();
        st.d = d_new;
        st.k += 1;
        st.last_tau = accepted.tau;
        st.last_backtracks = accepted.backtracks;
        st.f_history.push(st.f);
        st.max_feasibility = st.max_feasibility.max(self.geom.feasibility(&st.x));

        if st.tol_x.len() == cfg.window_t {
            st.tol_x.pop_front();
            st.tol_f.pop_front();
        }
        st.tol_x.push_back(tol_x);
        st.tol_f.push_back(tol_f);

        if tol_x <= cfg.eps_x && tol_f <= cfg.eps_f {
            st.stop = Some(StopReason::XtolFtol);
        } else {
            let m = st.tol_x.len() as f64;
            let mean_x = st.tol_x.iter().sum::<f64>() / m;
            let mean_f = st.tol_f.iter().sum::<f64>() / m;
            if mean_x <= 10.0 * cfg.eps_x && mean_f <= 10.0 * cfg.eps_f {
                st.stop = Some(StopReason::WindowedMeans);
            }
        }
        Ok(st.stop)
    }

    /// Iterates until a stop criterion fires, then restores feasibility if the
    /// drift reached the re-orthogonalization threshold.
    pub fn run(mut self) -> Result<SolverReport> {
        let start = Instant::now();
        while self.iterate_once()?.is_none() {}
        let mut report = self.finish()?;
        report.wall_time = start.elapsed();
        Ok(report)
    }

    /// Builds the report from the current state without iterating further.
    pub fn finish(self) -> Result<SolverReport> {
        let st = self.state;
        let mut x = st.x;
        let mut feasi = self.geom.feasibility(&x);
        if feasi >= self.cfg.reorth_threshold {
            x = self.geom.restore(&x)?;
            feasi = self.geom.feasibility(&x);
        }
        Ok(SolverReport {
            x_final: x,
            f_initial: st.f0,
            f_final: st.f,
            f_history: st.f_history,
            residual_initial: st.d0_norm,
            residual_final: st.d_norm,
            feasi,
            max_feasibility: st.max_feasibility,
            nfge: st.nfge,
            iters: st.k,
            stop_reason: st.stop.unwrap_or(StopReason::MaxIter),
            wall_time: Duration::ZERO,
        })
    }
}

fn timed<P: Objective + ?Sized>(
    problem: &P,
    x0: DenseMatrix,
    geom: Geometry,
    cfg: &SolverConfig,
) -> Result<SolverReport> {
    let start = Instant::now();
    let mut report = Afbb::new(problem, x0, geom, *cfg)?.run()?;
    report.wall_time = start.elapsed();
    Ok(report)
}

/// Minimizes `problem` over the Stiefel manifold from `x0`.
pub fn solve<P: Objective + ?Sized>(problem: &P, x0: &StiefelPoint, cfg: &SolverConfig) -> Result<SolverReport> {
    if problem.on_spheres() {
        return Err(Error::Unsupported(format!(
            "'{}' lives on a product of spheres; use solve_oblique",
            problem.name()
        )));
    }
    timed(problem, x0.mat().clone(), Geometry::Stiefel, cfg)
}

/// Minimizes over matrices with unit-norm columns.
pub fn solve_oblique<P: Objective + ?Sized>(problem: &P, v0: &DenseMatrix, cfg: &SolverConfig) -> Result<SolverReport> {
    let residual = crate::manifold::oblique_feasibility(v0);
    if residual > crate::manifold::FEAS_TOL {
        return Err(Error::Infeasible {
            residual,
            tol: crate::manifold::FEAS_TOL,
        });
    }
    timed(problem, v0.clone(), Geometry::Oblique, cfg)
}

/// Minimizes over `{X : X^T H X = K}`.
pub fn solve_generalized<P: Objective + ?Sized>(
    problem: &P,
    x0: &DenseMatrix,
    gc: &GeneralizedConstraint,
    cfg: &SolverConfig,
) -> Result<SolverReport> {
    let residual = gc.residual(x0);
    if residual > 1e-10 {
        return Err(Error::Infeasible { residual, tol: 1e-10 });
    }
    timed(problem, x0.clone(), Geometry::Generalized(gc.clone()), cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::CountingObjective;
    use crate::problems::{gen_ex3, HeterogeneousQuadratic, TraceEigenProblem};
    use crate::random::{random_symmetric, rng_from_seed};
    use crate::retraction::SchemeKind;

    fn diag4() -> TraceEigenProblem {
        let a = DenseMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![4.0, 3.0, 2.0, 1.0]));
        TraceEigenProblem::new(a, 2).unwrap().with_computed_optimum()
    }

    #[test]
    fn small_trace_problem_reaches_optimum() {
        let prob = diag4();
        let x0 = StiefelPoint::random(4, 2, &mut rng_from_seed(3));
        let cfg = SolverConfig::default().with_tolerances(1e-8, 1e-10, 1e-14);
        let rep = solve(&prob, &x0, &cfg).unwrap();
        assert!((rep.f_final + 7.0).abs() < 1e-10, "{}", rep.f_final);
        assert!(rep.feasi <= 1e-13);
    }

    #[test]
    fn stationary_start_stops_immediately() {
        let prob = diag4();
        let rep = solve(&prob, &StiefelPoint::identity(4, 2), &SolverConfig::default()).unwrap();
        assert_eq!(rep.iters, 0);
        assert_eq!(rep.nfge, 1);
        assert_eq!(rep.f_history, vec![-7.0]);
    }

    #[test]
    fn nfge_matches_counting_wrapper() {
        let mut rng = rng_from_seed(5);
        let prob = CountingObjective::new(TraceEigenProblem::new(random_symmetric(30, &mut rng), 3).unwrap());
        let x0 = StiefelPoint::random(30, 3, &mut rng);
        for kind in SchemeKind::ALL {
            if kind == SchemeKind::GeneralizedNew {
                continue;
            }
            let before = prob.count();
            let cfg = SolverConfig::default().with_scheme(RetractionScheme::new(kind));
            let rep = solve(&prob, &x0, &cfg).unwrap();
            assert_eq!(rep.nfge, prob.count() - before, "{kind}");
        }
    }

    #[test]
    fn snapshot_restore_replays() {
        let mut rng = rng_from_seed(8);
        let prob = TraceEigenProblem::new(random_symmetric(20, &mut rng), 2).unwrap();
        let x0 = StiefelPoint::random(20, 2, &mut rng);
        let mut a = Afbb::new(&prob, x0.mat().clone(), Geometry::Stiefel, SolverConfig::default()).unwrap();
        for _ in 0..3 {
            a.iterate_once().unwrap();
        }
        let snap = a.snapshot();
        for _ in 0..5 {
            a.iterate_once().unwrap();
        }
        let first = a.state().f_history.clone();
        a.restore(snap);
        for _ in 0..5 {
            a.iterate_once().unwrap();
        }
        assert_eq!(a.state().f_history, first);
    }

    #[test]
    fn single_steps_prefix_full_run() {
        let mut rng = rng_from_seed(9);
        let prob = TraceEigenProblem::new(random_symmetric(15, &mut rng), 3).unwrap();
        let x0 = StiefelPoint::random(15, 3, &mut rng);
        let full = solve(&prob, &x0, &SolverConfig::default()).unwrap();
        let mut a = Afbb::new(&prob, x0.mat().clone(), Geometry::Stiefel, SolverConfig::default()).unwrap();
        a.iterate_once().unwrap();
        a.iterate_once().unwrap();
        assert_eq!(a.state().f_history[..], full.f_history[..3]);
    }

    #[test]
    fn stop_is_sticky() {
        let prob = diag4();
        let mut a = Afbb::new(&prob, DenseMatrix::identity(4, 2), Geometry::Stiefel, SolverConfig::default()).unwrap();
        assert_eq!(a.iterate_once().unwrap(), Some(StopReason::ResidualRel));
        assert_eq!(a.iterate_once().unwrap(), Some(StopReason::ResidualRel));
        assert_eq!(a.state().f_history.len(), 1);
    }

    #[test]
    fn determinism() {
        let prob = HeterogeneousQuadratic::new(40, vec![-1.0; 3]).unwrap();
        let x0 = StiefelPoint::random(40, 3, &mut rng_from_seed(2));
        let a = solve(&prob, &x0, &SolverConfig::default()).unwrap();
        let b = solve(&prob, &x0, &SolverConfig::default()).unwrap();
        assert_eq!(a.f_history, b.f_history);
        assert_eq!(a.x_final, b.x_final);
    }

    #[test]
    fn oblique_problem_needs_oblique_entry_point() {
        let prob = gen_ex3(20, 3, false, 0).unwrap();
        let v0 = prob.pca_start().unwrap();
        assert!(matches!(
            solve(&prob, &StiefelPoint::identity(3, 3), &SolverConfig::default()),
            Err(Error::Unsupported(_))
        ));
        let rep = solve_oblique(&prob, &v0, &SolverConfig::default()).unwrap();
        assert!(rep.f_final <= rep.f_initial);
        assert!(rep.feasi <= 1e-13);
    }

    #[test]
    fn invalid_config_rejected() {
        let prob = diag4();
        let cfg = SolverConfig::default().with_rho(0.0);
        assert!(solve(&prob, &StiefelPoint::identity(4, 2), &cfg).is_err());
    }

    #[test]
    #[ignore]
    fn sweep_eigen_oracle() {
        let mut fails = 0;
        for p in [1, 4, 10] {
            for seed in 0..50 {
                let mut rng = rng_from_seed(seed);
                let prob = TraceEigenProblem::new(random_symmetric(100, &mut rng), p).unwrap().with_computed_optimum();
                let x0 = StiefelPoint::random(100, p, &mut rng);
                let cfg = SolverConfig::default().with_tolerances(1e-8, 1e-10, 1e-14).with_max_iter(20000);
                let rep = solve(&prob, &x0, &cfg).unwrap();
                let opt = prob.known_optimum().unwrap();
                let rel = (rep.f_final - opt).abs() / opt.abs();
                if rel > 1e-6 {
                    fails += 1;
                    println!("p={p} seed={seed} rel={rel:e} stop={:?} iters={}", rep.stop_reason, rep.iters);
                }
            }
        }
        println!("fails {fails}");
    }

    #[test]
    #[ignore]
    fn sweep_ex3() {
        for r in [5, 20, 50] {
            let prob = gen_ex3(500, r, false, 0).unwrap();
            let v0 = prob.pca_start().unwrap();
            let t = Instant::now();
            let rep = solve_oblique(&prob, &v0, &SolverConfig::default()).unwrap();
            println!(
                "r={r} res0={:.4e} res={:.4e} feasi={:e} iters={} nfge={} stop={:?} {:?}",
                prob.nlcm_residual(&v0),
                prob.nlcm_residual(&rep.x_final),
                rep.feasi,
                rep.iters,
                rep.nfge,
                rep.stop_reason,
                t.elapsed()
            );
        }
    }
}
