//! Barzilai-Borwein step sizes, the safeguard clamp and the nonmonotone
//! Armijo search against an adaptively raised reference value.

use crate::error::{Error, Result};
use crate::linalg::{inner, DenseMatrix};
use crate::objective::Objective;
use crate::retraction::{CurveEvaluation, StepCurve};

/// Secant pair from the previous iteration.
#[derive(Debug, Clone, Default)]
pub struct BbState {
    /// `S = X_k - X_{k-1}`
    pub s_prev: Option<DenseMatrix>,
    /// `Y = D_k - D_{k-1}`
    pub y_prev: Option<DenseMatrix>,
    /// Global iteration counter of the step about to be taken.
    pub k: usize,
    /// `<S, S>` from the trace identity, when the curve provided it.
    pub step_norm_sq: Option<f64>,
}

impl BbState {
    pub fn new(s: DenseMatrix, y: DenseMatrix, k: usize) -> Self {
        Self {
            s_prev: Some(s),
            y_prev: Some(y),
            k,
            step_norm_sq: None,
        }
    }

    fn products(&self) -> Option<(f64, f64, f64)> {
        let s = self.s_prev.as_ref()?;
        let y = self.y_prev.as_ref()?;
        let ss = self.step_norm_sq.unwrap_or_else(|| inner(s, s));
        let sy = inner(s, y);
        let yy = inner(y, y);
        let degenerate = !(sy.abs() >= 1e-16 * (ss * yy).sqrt()) || sy == 0.0;
        if degenerate || !(ss > 0.0) {
            return None;
        }
        Some((ss, sy.abs(), yy))
    }
}

fn positive(v: f64) -> Option<f64> {
    (v.is_finite() && v > 0.0).then_some(v)
}

/// `<S,S> / |<S,Y>|`. `None` asks the caller to fall back.
pub fn bb_long(state: &BbState) -> Option<f64> {
    let (ss, sy, _) = state.products()?;
    positive(ss / sy)
}

/// `|<S,Y>| / <Y,Y>`. `None` asks the caller to fall back.
pub fn bb_short(state: &BbState) -> Option<f64> {
    let (_, sy, yy) = state.products()?;
    if yy == 0.0 {
        return None;
    }
    positive(sy / yy)
}

/// Short step at odd `k`, long step at even `k`.
pub fn abb(state: &BbState) -> Option<f64> {
    if state.k % 2 == 1 {
        bb_short(state)
    } else {
        bb_long(state)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SafeguardParams {
    pub eps_min: f64,
    pub eps_max: f64,
    /// Absolute cap on the trial step.
    pub delta_cap: f64,
    /// Backtracking factor.
    pub sigma: f64,
    /// Armijo sufficient-decrease constant.
    pub delta_armijo: f64,
}

impl Default for SafeguardParams {
    fn default() -> Self {
        Self {
            eps_min: 1e-8,
            eps_max: 1e8,
            delta_cap: 1e10,
            sigma: 0.5,
            delta_armijo: 1e-3,
        }
    }
}

impl SafeguardParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.eps_min > 0.0
            && self.eps_min < self.eps_max
            && self.delta_cap > 0.0
            && self.sigma > 0.0
            && self.sigma < 1.0
            && self.delta_armijo > 0.0
            && self.delta_armijo < 1.0;
        if !ok {
            return Err(Error::InvalidParameter(format!("bad safeguard parameters {self:?}")));
        }
        Ok(())
    }
}

/// `max{eps_min/‖D‖, min{tau0, eps_max/‖D‖, Delta}}`
pub fn safeguard(tau0: f64, d_norm: f64, params: &SafeguardParams) -> Result<f64> {
    if !(d_norm > 0.0) || !d_norm.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "safeguard needs a positive residual norm, got {d_norm}"
        )));
    }
    let upper = (params.eps_max / d_norm).min(params.delta_cap);
    let lower = params.eps_min / d_norm;
    let t = if tau0.is_nan() { lower } else { tau0.min(upper) };
    Ok(lower.max(t))
}

/// Reference bookkeeping for the nonmonotone search.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ReferenceState {
    pub f_r: f64,
    pub f_best: f64,
    pub f_c: f64,
    pub l: usize,
    pub cap_l: usize,
}

impl ReferenceState {
    /// `F_r = +inf`, `F_best = F_c = f0`, `l = 0`.
    pub fn new(f0: f64, cap_l: usize) -> Self {
        Self {
            f_r: f64::INFINITY,
            f_best: f0,
            f_c: f0,
            l: 0,
            cap_l: cap_l.max(1),
        }
    }

    pub fn update(&mut self, f_next: f64) {
        if f_next < self.f_best {
            self.f_best = f_next;
            self.f_c = f_next;
            self.l = 0;
        } else {
            self.f_c = self.f_c.max(f_next);
            self.l += 1;
        }
        if self.l == self.cap_l {
            self.f_r = self.f_c;
            self.f_c = f_next;
            self.l = 0;
        }
    }
}

pub fn update_reference(reference: ReferenceState, f_next: f64) -> ReferenceState {
    let mut r = reference;
    r.update(f_next);
    r
}

/// Outcome of [`armijo_backtrack`].
#[derive(Debug, Clone)]
pub struct AcceptedStep {
    pub tau: f64,
    pub eval: CurveEvaluation,
    pub value: f64,
    pub grad: DenseMatrix,
    /// `i_k`
    pub backtracks: usize,
    /// Objective evaluations spent, normally `i_k + 1`.
    pub evaluations: usize,
}

pub const MAX_BACKTRACKS: usize = 60;

/// Smallest `i >= 0` with `F(Y(sigma^i tau1)) <= F_r + delta sigma^i tau1 F'(0)`.
///
/// A curve that cannot be evaluated at a trial step (a numerically singular
/// p-by-p system) counts as a rejected trial.
pub fn armijo_backtrack<P: Objective + ?Sized>(
    problem: &P,
    step: &StepCurve,
    tau1: f64,
    reference: &ReferenceState,
    params: &SafeguardParams,
    max_backtracks: usize,
) -> Result<AcceptedStep> {
    if !(step.slope < 0.0) {
        return Err(Error::NonDescent(step.slope));
    }
    if !(tau1 > 0.0) || !tau1.is_finite() {
        return Err(Error::InvalidParameter(format!("trial step must be positive, got {tau1}")));
    }
    let mut tau = tau1;
    let mut evaluations = 0;
    for i in 0..=max_backtracks {
        let eval = match CurveEvaluation::at(step.curve.clone(), tau) {
            Ok(e) => Some(e),
            Err(Error::Singular(_)) | Err(Error::RankDeficient(_)) => None,
            Err(e) => return Err(e),
        };
        if let Some(eval) = eval {
            let gp = problem.evaluate(&eval.y)?;
            evaluations += 1;
            if !gp.value.is_finite() {
                return Err(Error::NonFinite(format!("objective value {} at step {tau:e}", gp.value)));
            }
            if gp.value <= reference.f_r + params.delta_armijo * tau * step.slope {
                return Ok(AcceptedStep {
                    tau,
                    eval,
                    value: gp.value,
                    grad: gp.euclid_grad,
                    backtracks: i,
                    evaluations,
                });
            }
        }
        tau *= params.sigma;
    }
    Err(Error::BacktrackOverflow(max_backtracks))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{gaussian_matrix, rng_from_seed};

    fn pair(s: DenseMatrix, y: DenseMatrix, k: usize) -> BbState {
        BbState::new(s, y, k)
    }

    #[test]
    fn bb_examples() {
        let y = gaussian_matrix(4, 2, &mut rng_from_seed(1));
        let st = pair(y.clone(), y.clone(), 1);
        assert!((bb_long(&st).unwrap() - 1.0).abs() < 1e-15);
        assert!((bb_short(&st).unwrap() - 1.0).abs() < 1e-15);
        let st = pair(&y * 2.0, y.clone(), 2);
        assert!((bb_long(&st).unwrap() - 2.0).abs() < 1e-15);
        assert!((bb_short(&st).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn orthogonal_pair_falls_back() {
        let s = DenseMatrix::from_row_slice(2, 1, &[1.0, 0.0]);
        let y = DenseMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        let st = pair(s, y, 1);
        assert_eq!(bb_short(&st), None);
        assert_eq!(bb_long(&st), None);
        assert_eq!(abb(&BbState::default()), None);
    }

    #[test]
    fn short_never_exceeds_long() {
        let mut rng = rng_from_seed(2);
        for _ in 0..100 {
            let st = pair(gaussian_matrix(5, 3, &mut rng), gaussian_matrix(5, 3, &mut rng), 1);
            if let (Some(s), Some(l)) = (bb_short(&st), bb_long(&st)) {
                assert!(s <= l * (1.0 + 1e-14));
            }
        }
    }

    #[test]
    fn abb_alternates_by_parity() {
        let mut rng = rng_from_seed(3);
        let s = gaussian_matrix(5, 2, &mut rng);
        let y = &s + gaussian_matrix(5, 2, &mut rng) * 0.3;
        for k in 1..=6 {
            let st = pair(s.clone(), y.clone(), k);
            let want = if k % 2 == 1 { bb_short(&st) } else { bb_long(&st) };
            assert_eq!(abb(&st), want);
        }
        assert_ne!(bb_short(&pair(s.clone(), y.clone(), 1)), bb_long(&pair(s, y, 1)));
    }

    #[test]
    fn safeguard_examples() {
        let p = SafeguardParams::default();
        assert_eq!(safeguard(0.3, 1.0, &p).unwrap(), 0.3);
        assert_eq!(safeguard(1e12, 1.0, &p).unwrap(), 1e8);
        assert_eq!(safeguard(0.0, 2.0, &p).unwrap(), 5e-9);
        assert!(safeguard(1.0, 0.0, &p).is_err());
        // band is respected even for tiny residuals
        let t = safeguard(1e20, 1e-9, &p).unwrap();
        assert_eq!(t, 1e10);
    }

    #[test]
    fn reference_update_examples() {
        let mut r = ReferenceState::new(1.0, 3);
        r.update(0.5);
        assert_eq!((r.f_best, r.f_c, r.l, r.f_r), (0.5, 0.5, 0, f64::INFINITY));

        let mut r = ReferenceState::new(1.0, 3);
        for f in [5.0, 4.0, 6.0] {
            r.update(f);
        }
        assert_eq!((r.f_r, r.f_c, r.l), (6.0, 6.0, 0));

        let mut r = ReferenceState::new(10.0, 3);
        for k in 0..100 {
            r.update(9.0 - k as f64 * 0.01);
        }
        assert_eq!(r.f_r, f64::INFINITY);
    }
}
