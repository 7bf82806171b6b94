//! Curve kernels. A [`Curve`] holds everything about `Y(tau; X)` that does not
//! depend on `tau`, so a backtracking line search only pays for the p-by-p
//! assembly and solve plus one n-by-p product per trial step.

use nalgebra::DVector;

use super::GTau;
use crate::error::{Error, Result};
use crate::linalg::{expm, inv_sqrt_spd, project_stiefel, qr_positive, DenseMatrix, PivotedLu};

/// Below this `‖S‖^2` the trace shortcut loses too much to feasibility drift.
const SHORTCUT_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone)]
pub(crate) enum CurveKind {
    /// `(2X + tau W) J^{-1} - X`, `J = I + tau^2/4 W^T W + g(tau) A`
    New {
        w: DenseMatrix,
        wtw: DenseMatrix,
        a: DenseMatrix,
        gtau: GTau,
    },
    /// `(2X + tau W) J^{-1} K - X`, `J = K + tau^2/4 W^T H W + g(tau) A`
    Generalized {
        w: DenseMatrix,
        wthw: DenseMatrix,
        a: DenseMatrix,
        k: DenseMatrix,
        gtau: GTau,
    },
    /// `(X - tau D)(I + tau^2 D^T D)^{-1/2}`
    Polar { d: DenseMatrix, dtd: DenseMatrix },
    /// `qr(X - tau D)`
    Qr { d: DenseMatrix },
    /// `P_St(X - tau G)`
    GradProj { g: DenseMatrix },
    /// `X - tau U (I + tau/2 V^T U)^{-1} V^T X`
    WenYin {
        u: DenseMatrix,
        vtu: DenseMatrix,
        vtx: DenseMatrix,
    },
    /// `[X, Q] expm(tau B) [I; 0]`
    Geodesic { q: DenseMatrix, block: DenseMatrix },
    /// New scheme with `E = D^(q)`; `J^{-1}` applied in closed form.
    LowRank {
        col: usize,
        /// `-(I - X X^T) g_q`
        w: DVector<f64>,
        wsq: f64,
        /// `X_{-q}^T g_q`, entry `col` zeroed
        c: DVector<f64>,
        csq: f64,
        xc: DVector<f64>,
        gtau: GTau,
    },
    /// Per-column new scheme on a product of spheres.
    ObliqueNew { w: DenseMatrix, wsq: Vec<f64> },
    /// Per-column `normalize(v - tau dir)`.
    ObliqueNormalize { dir: DenseMatrix },
    /// Per-column great circle with initial velocity `-dperp`.
    ObliqueGreatCircle { dperp: DenseMatrix, speed: Vec<f64> },
}

/// A curve `tau -> Y(tau; X)` through a fixed base point.
#[derive(Debug, Clone)]
pub struct Curve {
    pub(crate) x: DenseMatrix,
    pub(crate) kind: CurveKind,
}

/// One point on a curve. `step_norm_sq` is `‖Y - X‖_F^2` when the scheme has
/// a closed form for it.
#[derive(Debug, Clone)]
pub(crate) struct CurvePoint {
    pub y: DenseMatrix,
    pub step_norm_sq: Option<f64>,
}

impl Curve {
    pub fn base(&self) -> &DenseMatrix {
        &self.x
    }

    pub(crate) fn eval(&self, tau: f64) -> Result<CurvePoint> {
        if !tau.is_finite() || tau < 0.0 {
            return Err(Error::InvalidParameter(format!("step size must be finite and >= 0, got {tau}")));
        }
        if tau == 0.0 {
            return Ok(CurvePoint {
                y: self.x.clone(),
                step_norm_sq: Some(0.0),
            });
        }
        let x = &self.x;
        let p = x.ncols();
        let point = match &self.kind {
            CurveKind::New { w, wtw, a, gtau } => {
                let jmi = wtw * (0.25 * tau * tau) + a * gtau.eval(tau);
                let j = DenseMatrix::identity(p, p) + &jmi;
                let lu_t = PivotedLu::new(&j.transpose(), "new scheme J")?;
                let m = x * 2.0 + w * tau;
                let y = lu_t.solve(&m.transpose()).transpose() - x;
                // tr(J^{-1}(J - I)) = tr(J^{-T}(J - I)^T)
                let ss = 4.0 * lu_t.solve(&jmi.transpose()).trace();
                CurvePoint {
                    y,
                    step_norm_sq: (ss >= SHORTCUT_FLOOR).then_some(ss),
                }
            }
            CurveKind::Generalized { w, wthw, a, k, gtau } => {
                let j = k + wthw * (0.25 * tau * tau) + a * gtau.eval(tau);
                let lu = PivotedLu::new(&j, "generalized J")?;
                let jik = lu.solve(k);
                let m = x * 2.0 + w * tau;
                CurvePoint {
                    y: m * jik - x,
                    step_norm_sq: None,
                }
            }
            CurveKind::Polar { d, dtd } => {
                let b = DenseMatrix::identity(p, p) + dtd * (tau * tau);
                let r = inv_sqrt_spd(&b, "polar factor")?;
                CurvePoint {
                    y: (x - d * tau) * r,
                    step_norm_sq: None,
                }
            }
            CurveKind::Qr { d } => {
                let (q, _) = qr_positive(&(x - d * tau), "qr retraction")?;
                CurvePoint {
                    y: q,
                    step_norm_sq: None,
                }
            }
            CurveKind::GradProj { g } => CurvePoint {
                y: project_stiefel(&(x - g * tau))?,
                step_norm_sq: None,
            },
            CurveKind::WenYin { u, vtu, vtx } => {
                let m = DenseMatrix::identity(2 * p, 2 * p) + vtu * (0.5 * tau);
                let lu = PivotedLu::new(&m, "Wen-Yin system")?;
                let z = lu.solve(vtx);
                CurvePoint {
                    y: x - u * z * tau,
                    step_norm_sq: None,
                }
            }
            CurveKind::Geodesic { q, block } => {
                let e = expm(&(block * tau))?;
                let top = e.view((0, 0), (p, p));
                let bottom = e.view((p, 0), (q.ncols(), p));
                CurvePoint {
                    y: x * top + q * bottom,
                    step_norm_sq: None,
                }
            }
            CurveKind::LowRank {
                col,
                w,
                wsq,
                c,
                csq,
                xc,
                gtau,
            } => {
                let gv = gtau.eval(tau);
                let beta = gv * gv * csq;
                let alpha = 0.25 * tau * tau * wsq + beta;
                let denom = 1.0 + alpha;
                // U = M e_q = 2 x_q + tau w, V = M b = 2 X b
                let u = x.column(*col) * 2.0 + w * tau;
                let v = xc * (2.0 * gv);
                let first = (&u * alpha + &v) / denom;
                let second = (&v - &u) / denom;
                let mut y = x.clone();
                y.column_mut(*col).axpy(tau, w, 1.0);
                y.column_mut(*col).axpy(-1.0, &first, 1.0);
                // (V - U) b^T with b = g(tau) c
                y.ger(-gv, &second, c, 1.0);
                let ss = 4.0 * (alpha + beta) / denom;
                CurvePoint {
                    y,
                    step_norm_sq: (ss >= SHORTCUT_FLOOR).then_some(ss),
                }
            }
            CurveKind::ObliqueNew { w, wsq } => {
                let mut y = x.clone();
                let mut ss = 0.0;
                for (j, &s) in wsq.iter().enumerate() {
                    let jm1 = 0.25 * tau * tau * s;
                    let jj = 1.0 + jm1;
                    let mut col = y.column_mut(j);
                    // (2v + tau w)/J - v = v (2/J - 1) + w tau/J
                    col.scale_mut(2.0 / jj - 1.0);
                    col.axpy(tau / jj, &w.column(j), 1.0);
                    ss += 4.0 * jm1 / jj;
                }
                CurvePoint {
                    y,
                    step_norm_sq: (ss >= SHORTCUT_FLOOR).then_some(ss),
                }
            }
            CurveKind::ObliqueNormalize { dir } => {
                let mut y = x - dir * tau;
                for mut col in y.column_iter_mut() {
                    let nrm = col.norm();
                    if !(nrm > 0.0) || !nrm.is_finite() {
                        return Err(Error::RankDeficient("sphere normalization"));
                    }
                    col /= nrm;
                }
                CurvePoint {
                    y,
                    step_norm_sq: None,
                }
            }
            CurveKind::ObliqueGreatCircle { dperp, speed } => {
                let mut y = x.clone();
                for (j, &s) in speed.iter().enumerate() {
                    if s == 0.0 {
                        continue;
                    }
                    let (sn, cs) = (tau * s).sin_cos();
                    let mut col = y.column_mut(j);
                    col.scale_mut(cs);
                    col.axpy(-sn / s, &dperp.column(j), 1.0);
                }
                CurvePoint {
                    y,
                    step_norm_sq: None,
                }
            }
        };
        Ok(point)
    }
}
