//! Augmented-Lagrangian outer loop for the low-rank correlation problem with
//! prescribed off-diagonal entries `v_i^T v_j = q_ij`.
//!
//! Each subproblem minimizes
//! `theta(V; H, C) + mu/2 sum_(i,j) (v_i^T v_j - q_ij - lambda_ij/mu)^2`
//! over unit columns, warm-started from the previous iterate. This is the
//! weighted form with a 0/1 mask on the fixed pairs, counted once per pair.

use serde::{Deserialize, Serialize};

use crate::error::{check_shape, Error, Result};
use crate::linalg::DenseMatrix;
use crate::manifold::GradientPair;
use crate::objective::Objective;
use crate::problems::{FixedEntrySet, LowRankCorrProblem};
use crate::solver::{solve_oblique, SolverConfig, SolverReport};

/// `L_mu(V, Lambda)` for fixed multipliers and penalty.
pub struct AugLagObjective<'a> {
    base: &'a LowRankCorrProblem,
    fes: &'a FixedEntrySet,
    /// One multiplier per fixed pair, in [`FixedEntrySet::iter`] order.
    lambda: &'a [f64],
    mu: f64,
}

impl<'a> AugLagObjective<'a> {
    pub fn new(base: &'a LowRankCorrProblem, fes: &'a FixedEntrySet, lambda: &'a [f64], mu: f64) -> Result<Self> {
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::InvalidParameter(format!("penalty must be positive, got {mu}")));
        }
        if fes.n() != base.n() {
            return Err(Error::InvalidParameter(format!(
                "fixed entries sized for n = {}, problem has n = {}",
                fes.n(),
                base.n()
            )));
        }
        if lambda.len() != fes.len() {
            return Err(Error::InvalidParameter("one multiplier per fixed entry required".into()));
        }
        Ok(Self { base, fes, lambda, mu })
    }
}

impl Objective for AugLagObjective<'_> {
    fn dims(&self) -> (usize, usize) {
        self.base.dims()
    }

    fn evaluate(&self, v: &DenseMatrix) -> Result<GradientPair> {
        let mut gp = self.base.evaluate(v)?;
        for ((i, j, q), lam) in self.fes.iter().zip(self.lambda) {
            let vi = v.column(i);
            let vj = v.column(j);
            let r = vi.dot(&vj) - q - lam / self.mu;
            gp.value += 0.5 * self.mu * r * r;
            let s = self.mu * r;
            gp.euclid_grad.column_mut(i).axpy(s, &vj, 1.0);
            gp.euclid_grad.column_mut(j).axpy(s, &vi, 1.0);
        }
        Ok(gp)
    }

    fn name(&self) -> &str {
        "auglag"
    }

    fn symmetric_xg(&self) -> bool {
        true
    }

    fn on_spheres(&self) -> bool {
        true
    }
}

/// Value and gradient of `L_mu(V, Lambda)`.
pub fn auglag_objective(
    v: &DenseMatrix,
    base: &LowRankCorrProblem,
    fes: &FixedEntrySet,
    lambda: &[f64],
    mu: f64,
) -> Result<GradientPair> {
    AugLagObjective::new(base, fes, lambda, mu)?.evaluate(v)
}

/// `sum |v_i^T v_j - q_ij|` over the fixed pairs.
pub fn constraint_violation(v: &DenseMatrix, fes: &FixedEntrySet) -> f64 {
    fes.iter().map(|(i, j, q)| (v.column(i).dot(&v.column(j)) - q).abs()).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugLagConfig {
    pub mu0: f64,
    pub mu_factor: f64,
    pub max_outer: usize,
    pub sub_max_iter: usize,
    /// Initial `(eps, eps_x, eps_f)` and their floors. Each outer step
    /// shrinks them tenfold until the floor.
    pub tol0: (f64, f64, f64),
    pub tol_floor: (f64, f64, f64),
    pub nu_target: f64,
    pub nu_stall: f64,
    /// Base solver settings; the tolerances and iteration cap are overridden.
    pub solver: SolverConfig,
}

impl Default for AugLagConfig {
    fn default() -> Self {
        Self {
            mu0: 1.0,
            mu_factor: 10.0,
            max_outer: 30,
            sub_max_iter: 2000,
            tol0: (1e-1, 1e-3, 1e-5),
            tol_floor: (1e-6, 1e-6, 1e-11),
            nu_target: 3e-8,
            nu_stall: 1e-8,
            solver: SolverConfig::default(),
        }
    }
}

/// Why the outer loop ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AugLagStop {
    /// `nu <= nu_target`
    Target,
    /// `|nu_k+1 - nu_k| <= nu_stall`
    Stall,
    /// `max_outer` reached.
    Capped,
}

impl AugLagStop {
    pub fn name(self) -> &'static str {
        match self {
            AugLagStop::Target => "nu_target",
            AugLagStop::Stall => "nu_stall",
            AugLagStop::Capped => "outer_cap",
        }
    }
}

/// One outer iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuterStep {
    pub mu: f64,
    pub nu: f64,
    /// `theta` at the subproblem solution.
    pub theta: f64,
    pub nfge: usize,
    pub iters: usize,
    pub tolerances: (f64, f64, f64),
}

#[derive(Debug, Clone)]
pub struct AugLagReport {
    pub v: DenseMatrix,
    pub theta: f64,
    /// `‖V^T V - C‖` weighted, as reported for the unconstrained problem.
    pub residual: f64,
    pub nu: f64,
    pub feasi: f64,
    pub nfge: usize,
    pub trace: Vec<OuterStep>,
    pub lambda: Vec<f64>,
    pub stop: AugLagStop,
    pub last_subproblem: Option<SolverReport>,
}

/// Runs the outer loop from `v0` (typically the modified-PCA start).
pub fn auglag_solve(
    base: &LowRankCorrProblem,
    fes: &FixedEntrySet,
    v0: &DenseMatrix,
    cfg: &AugLagConfig,
) -> Result<AugLagReport> {
    check_shape(base.dims(), v0.shape())?;
    if !(cfg.mu0 > 0.0) || !(cfg.mu_factor >= 1.0) || cfg.max_outer == 0 {
        return Err(Error::InvalidParameter("need mu0 > 0, mu_factor >= 1, max_outer >= 1".into()));
    }
    let mut v = v0.clone();
    let mut lambda = vec![0.0; fes.len()];
    let mut mu = cfg.mu0;
    let mut tols = cfg.tol0;
    let mut nu_prev = constraint_violation(&v, fes);
    let mut trace = Vec::new();
    let mut nfge = 0;
    let mut stop = AugLagStop::Capped;
    let mut last = None;

    for k in 0..cfg.max_outer {
        if k > 0 {
            tols = (
                (0.1 * tols.0).max(cfg.tol_floor.0),
                (0.1 * tols.1).max(cfg.tol_floor.1),
                (0.1 * tols.2).max(cfg.tol_floor.2),
            );
        }
        let sub_cfg = cfg
            .solver
            .with_tolerances(tols.0, tols.1, tols.2)
            .with_max_iter(cfg.sub_max_iter);
        let obj = AugLagObjective::new(base, fes, &lambda, mu)?;
        let rep = solve_oblique(&obj, &v, &sub_cfg)?;
        nfge += rep.nfge;
        v = rep.x_final.clone();

        let nu = constraint_violation(&v, fes);
        let theta = base.evaluate(&v)?.value;
        trace.push(OuterStep {
            mu,
            nu,
            theta,
            nfge: rep.nfge,
            iters: rep.iters,
            tolerances: tols,
        });
        last = Some(rep);
        if fes.is_empty() || nu <= cfg.nu_target {
            stop = AugLagStop::Target;
            break;
        }
        if (nu - nu_prev).abs() <= cfg.nu_stall {
            stop = AugLagStop::Stall;
            break;
        }
        for ((i, j, q), lam) in fes.iter().zip(lambda.iter_mut()) {
            *lam -= mu * (v.column(i).dot(&v.column(j)) - q);
        }
        mu *= cfg.mu_factor;
        nu_prev = nu;
    }
    if stop == AugLagStop::Capped {
        log::warn!("augmented Lagrangian stopped after {} outer steps", cfg.max_outer);
    }
    let nu = constraint_violation(&v, fes);
    Ok(AugLagReport {
        theta: base.evaluate(&v)?.value,
        residual: base.nlcm_residual(&v),
        feasi: crate::manifold::oblique_feasibility(&v),
        v,
        nu,
        nfge,
        trace,
        lambda,
        stop,
        last_subproblem: last,
    })
}
