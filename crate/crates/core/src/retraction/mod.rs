//! Constraint-preserving update schemes.
//!
//! Each scheme maps a base point `X` and a direction to a curve `Y(tau; X)`
//! with `Y(0) = X`, `Y'(0) = -E` and `Y(tau)` on the manifold for all `tau`.
//! The free functions evaluate one point; [`reevaluate`] moves along the same
//! curve reusing the cached `tau`-independent data.

mod curve;

use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

pub use curve::Curve;
use curve::CurveKind;

use crate::error::{check_shape, Error, Result};
use crate::linalg::{inner, inv_sqrt_spd, skew, sqrt_psd, sym, DenseMatrix};
use crate::manifold::{
    d_rho_matrix, feasibility_error, oblique_feasibility, oblique_gradient, StiefelPoint,
    TangentDirection,
};

/// The `g(tau)` multiplying `X^T E` inside `J`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum GTau {
    /// `tau / 2`
    #[default]
    Linear,
    /// `tau e^{-tau} / 2`
    ExpDamped,
}

impl GTau {
    pub fn eval(self, tau: f64) -> f64 {
        match self {
            GTau::Linear => 0.5 * tau,
            GTau::ExpDamped => 0.5 * tau * (-tau).exp(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GTau::Linear => "linear",
            GTau::ExpDamped => "expdamped",
        }
    }
}

impl std::str::FromStr for GTau {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" | "g1" => Ok(GTau::Linear),
            "expdamped" | "exp" | "g2" => Ok(GTau::ExpDamped),
            other => Err(Error::InvalidParameter(format!("unknown g(tau) variant '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeKind {
    #[serde(rename = "new")]
    NewScheme,
    Polar,
    #[serde(rename = "qr")]
    QrScheme,
    #[serde(rename = "gp")]
    GradProjection,
    WenYin,
    Geodesic,
    #[serde(rename = "lowrank")]
    LowRankColumn,
    #[serde(rename = "generalized")]
    GeneralizedNew,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 8] = [
        SchemeKind::NewScheme,
        SchemeKind::Polar,
        SchemeKind::QrScheme,
        SchemeKind::GradProjection,
        SchemeKind::WenYin,
        SchemeKind::Geodesic,
        SchemeKind::LowRankColumn,
        SchemeKind::GeneralizedNew,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::NewScheme => "new",
            SchemeKind::Polar => "polar",
            SchemeKind::QrScheme => "qr",
            SchemeKind::GradProjection => "gp",
            SchemeKind::WenYin => "wenyin",
            SchemeKind::Geodesic => "geodesic",
            SchemeKind::LowRankColumn => "lowrank",
            SchemeKind::GeneralizedNew => "generalized",
        }
    }

    /// Whether `g(tau)` enters the scheme at all.
    pub fn uses_gtau(self) -> bool {
        matches!(
            self,
            SchemeKind::NewScheme | SchemeKind::GeneralizedNew | SchemeKind::LowRankColumn
        )
    }
}

impl std::str::FromStr for SchemeKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let k = match s.to_ascii_lowercase().as_str() {
            "new" => SchemeKind::NewScheme,
            "polar" => SchemeKind::Polar,
            "qr" => SchemeKind::QrScheme,
            "gp" | "gradproj" => SchemeKind::GradProjection,
            "wenyin" | "wen-yin" => SchemeKind::WenYin,
            "geodesic" | "geo" => SchemeKind::Geodesic,
            "lowrank" | "low-rank" => SchemeKind::LowRankColumn,
            "generalized" => SchemeKind::GeneralizedNew,
            other => return Err(Error::InvalidParameter(format!("unknown scheme '{other}'"))),
        };
        Ok(k)
    }
}

impl std::fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A member of the scheme family with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetractionScheme {
    pub kind: SchemeKind,
    pub gtau: GTau,
    pub feasibility_control: bool,
}

impl Default for RetractionScheme {
    fn default() -> Self {
        Self {
            kind: SchemeKind::NewScheme,
            gtau: GTau::Linear,
            feasibility_control: true,
        }
    }
}

impl RetractionScheme {
    pub fn new(kind: SchemeKind) -> Self {
        Self {
            kind,
            ..Self::default()
        }
    }

    pub fn with_gtau(mut self, gtau: GTau) -> Self {
        self.gtau = gtau;
        self
    }

    pub fn with_control(mut self, on: bool) -> Self {
        self.feasibility_control = on;
        self
    }
}

/// The constraint `X^T H X = K`.
#[derive(Debug, Clone)]
pub struct GeneralizedConstraint {
    h: DenseMatrix,
    k: DenseMatrix,
}

impl GeneralizedConstraint {
    pub fn new(h: DenseMatrix, k: DenseMatrix) -> Result<Self> {
        if !h.is_square() || !k.is_square() {
            return Err(Error::InvalidParameter("H and K must be square".into()));
        }
        let asym = (&h - h.transpose()).norm();
        if asym > 1e-12 * h.norm() {
            return Err(Error::InvalidParameter(format!(
                "H is not symmetric (‖H - H^T‖_F = {asym:e})"
            )));
        }
        let ksym = (&k - k.transpose()).norm();
        if ksym > 1e-12 * k.norm() || k.clone().cholesky().is_none() {
            return Err(Error::InvalidParameter("K must be symmetric positive definite".into()));
        }
        Ok(Self { h, k })
    }

    pub fn h(&self) -> &DenseMatrix {
        &self.h
    }

    pub fn k(&self) -> &DenseMatrix {
        &self.k
    }

    /// `‖X^T H X - K‖_F`
    pub fn residual(&self, x: &DenseMatrix) -> f64 {
        (x.tr_mul(&(&self.h * x)) - &self.k).norm()
    }

    /// `X (X^T H X)^{-1/2} K^{1/2}`, which satisfies the constraint exactly in
    /// exact arithmetic.
    pub fn restore(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        let m = sym(&x.tr_mul(&(&self.h * x)));
        Ok(x * inv_sqrt_spd(&m, "generalized restore")? * sqrt_psd(&self.k))
    }

    /// `K_0^{-1/2}`-scaled starting point: maps any full-rank `X0` onto the
    /// constraint set.
    pub fn feasible_from(&self, x0: &DenseMatrix) -> Result<DenseMatrix> {
        check_shape((self.h.nrows(), self.k.nrows()), x0.shape())?;
        self.restore(x0)
    }
}

/// The constraint set the iterates live on.
#[derive(Debug, Clone)]
pub enum Geometry {
    /// `X^T X = I_p`
    Stiefel,
    /// Unit-norm columns (a product of spheres).
    Oblique,
    /// `X^T H X = K`
    Generalized(GeneralizedConstraint),
}

impl Geometry {
    pub fn feasibility(&self, x: &DenseMatrix) -> f64 {
        match self {
            Geometry::Stiefel => feasibility_error(x),
            Geometry::Oblique => oblique_feasibility(x),
            Geometry::Generalized(gc) => gc.residual(x),
        }
    }

    /// The first-order residual direction: `D_rho`, its column-wise analogue,
    /// or `G X^T H^2 X - H X G^T H X`.
    pub fn residual_direction(&self, x: &DenseMatrix, g: &DenseMatrix, rho: f64) -> DenseMatrix {
        match self {
            Geometry::Stiefel => d_rho_matrix(x, g, rho),
            Geometry::Oblique => oblique_gradient(x, g),
            Geometry::Generalized(gc) => generalized_direction_matrix(x, g, gc),
        }
    }

    /// Pulls a drifted point back onto the constraint set.
    pub fn restore(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        match self {
            Geometry::Stiefel => Ok(crate::linalg::qr_positive(x, "re-orthogonalization")?.0),
            Geometry::Oblique => {
                let mut y = x.clone();
                for mut c in y.column_iter_mut() {
                    let nrm = c.norm();
                    if nrm == 0.0 {
                        return Err(Error::RankDeficient("column normalization"));
                    }
                    c /= nrm;
                }
                Ok(y)
            }
            Geometry::Generalized(gc) => gc.restore(x),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Geometry::Stiefel => "stiefel",
            Geometry::Oblique => "oblique",
            Geometry::Generalized(_) => "generalized",
        }
    }
}

/// A point on a curve plus the reusable curve data.
#[derive(Debug, Clone)]
pub struct CurveEvaluation {
    pub y: DenseMatrix,
    pub tau: f64,
    /// Reusable `tau`-independent data for [`reevaluate`].
    pub cached_factor: Option<Arc<Curve>>,
    /// `‖Y - X‖_F^2` from the `4 tr(J^{-1}(J - I))` identity when the scheme
    /// offers it.
    pub step_norm_sq: Option<f64>,
}

impl CurveEvaluation {
    pub(crate) fn at(curve: Arc<Curve>, tau: f64) -> Result<Self> {
        let pt = curve.eval(tau)?;
        Ok(Self {
            y: pt.y,
            tau,
            cached_factor: Some(curve),
            step_norm_sq: pt.step_norm_sq,
        })
    }
}

/// Moves to `tau_new` along the curve that produced `curve`.
pub fn reevaluate(curve: &CurveEvaluation, tau_new: f64) -> Result<CurveEvaluation> {
    let c = curve.cached_factor.clone().ok_or(Error::MissingCache)?;
    CurveEvaluation::at(c, tau_new)
}

fn stiefel_new_curve(x: &DenseMatrix, w: DenseMatrix, e: &DenseMatrix, gtau: GTau) -> Curve {
    let wtw = w.tr_mul(&w);
    let a = skew(&x.tr_mul(e));
    Curve {
        x: x.clone(),
        kind: CurveKind::New { w, wtw, a, gtau },
    }
}

/// `-(I - X X^T) E`
fn w_plain(x: &DenseMatrix, e: &DenseMatrix) -> DenseMatrix {
    -(e - x * x.tr_mul(e))
}

/// `-(I - X (X^T X)^{-1} X^T) E`. Equal to the same projector applied to `G`
/// when `E = D_rho`, but rounding then scales with `‖D_rho‖` rather than
/// `‖G‖`, which matters near a stationary point.
fn w_controlled(x: &DenseMatrix, e: &DenseMatrix) -> Result<DenseMatrix> {
    let xtx = x.tr_mul(x);
    let chol = xtx
        .cholesky()
        .ok_or(Error::RankDeficient("X^T X in controlled W"))?;
    let coeff = chol.solve(&x.tr_mul(e));
    Ok(-(e - x * coeff))
}

/// New-scheme curve along `E`.
pub fn new_curve(x: &StiefelPoint, e: &TangentDirection, gtau: GTau) -> Result<Curve> {
    check_shape(x.mat().shape(), e.mat().shape())?;
    Ok(stiefel_new_curve(x.mat(), w_plain(x.mat(), e.mat()), e.mat(), gtau))
}

/// `J(tau) = I + tau^2/4 W^T W + g(tau) skew(X^T E)` with `W = -(I - X X^T) E`.
pub fn assemble_j(x: &StiefelPoint, e: &TangentDirection, tau: f64, gtau: GTau) -> DenseMatrix {
    let w = w_plain(x.mat(), e.mat());
    let p = x.p();
    DenseMatrix::identity(p, p)
        + w.tr_mul(&w) * (0.25 * tau * tau)
        + skew(&x.mat().tr_mul(e.mat())) * gtau.eval(tau)
}

pub fn retract_new(
    x: &StiefelPoint,
    e: &TangentDirection,
    tau: f64,
    gtau: GTau,
) -> Result<CurveEvaluation> {
    CurveEvaluation::at(Arc::new(new_curve(x, e, gtau)?), tau)
}

/// New scheme along `E = D_rho` with `W` replaced by
/// `-(I - X (X^T X)^{-1} X^T) G`, which does not amplify an existing
/// feasibility error.
pub fn retract_new_controlled(
    x: &DenseMatrix,
    g: &DenseMatrix,
    rho: f64,
    tau: f64,
    gtau: GTau,
) -> Result<CurveEvaluation> {
    crate::manifold::check_rho(rho)?;
    check_shape(x.shape(), g.shape())?;
    let e = d_rho_matrix(x, g, rho);
    let curve = stiefel_new_curve(x, w_controlled(x, &e)?, &e, gtau);
    CurveEvaluation::at(Arc::new(curve), tau)
}

pub fn retract_polar(x: &StiefelPoint, d: &TangentDirection, tau: f64) -> Result<CurveEvaluation> {
    check_shape(x.mat().shape(), d.mat().shape())?;
    let curve = polar_curve(x.mat(), d.mat());
    CurveEvaluation::at(Arc::new(curve), tau)
}

fn polar_curve(x: &DenseMatrix, d: &DenseMatrix) -> Curve {
    Curve {
        x: x.clone(),
        kind: CurveKind::Polar {
            d: d.clone(),
            dtd: d.tr_mul(d),
        },
    }
}

pub fn retract_qr(x: &StiefelPoint, d: &TangentDirection, tau: f64) -> Result<CurveEvaluation> {
    check_shape(x.mat().shape(), d.mat().shape())?;
    let curve = Curve {
        x: x.mat().clone(),
        kind: CurveKind::Qr { d: d.mat().clone() },
    };
    CurveEvaluation::at(Arc::new(curve), tau)
}

/// `P_St(X - tau G)`. The curve leaves `X` along `-(G - X sym(X^T G))`.
pub fn retract_gradproj(x: &StiefelPoint, g: &DenseMatrix, tau: f64) -> Result<CurveEvaluation> {
    check_shape(x.mat().shape(), g.shape())?;
    let curve = Curve {
        x: x.mat().clone(),
        kind: CurveKind::GradProj { g: g.clone() },
    };
    CurveEvaluation::at(Arc::new(curve), tau)
}

fn wenyin_curve(x: &DenseMatrix, d: &DenseMatrix) -> Curve {
    let (n, p) = x.shape();
    // P_X D = D - X (X^T D) / 2
    let pd = d - x * x.tr_mul(d) * 0.5;
    let mut u = DenseMatrix::zeros(n, 2 * p);
    u.view_mut((0, 0), (n, p)).copy_from(&pd);
    u.view_mut((0, p), (n, p)).copy_from(x);
    let mut v = DenseMatrix::zeros(n, 2 * p);
    v.view_mut((0, 0), (n, p)).copy_from(x);
    v.view_mut((0, p), (n, p)).copy_from(&(-&pd));
    let vtu = v.tr_mul(&u);
    let vtx = v.tr_mul(x);
    Curve {
        x: x.clone(),
        kind: CurveKind::WenYin { u, vtu, vtx },
    }
}

pub fn retract_wenyin(x: &StiefelPoint, d: &TangentDirection, tau: f64) -> Result<CurveEvaluation> {
    check_shape(x.mat().shape(), d.mat().shape())?;
    CurveEvaluation::at(Arc::new(wenyin_curve(x.mat(), d.mat())), tau)
}

/// 2-norm condition number of the 2p-by-2p Wen-Yin system at `tau`.
pub fn wenyin_condition(x: &StiefelPoint, d: &TangentDirection, tau: f64) -> f64 {
    match wenyin_curve(x.mat(), d.mat()).kind {
        CurveKind::WenYin { vtu, .. } => {
            let m = DenseMatrix::identity(vtu.nrows(), vtu.nrows()) + vtu * (0.5 * tau);
            crate::linalg::cond2(&m)
        }
        _ => unreachable!(),
    }
}

fn geodesic_curve(x: &DenseMatrix, d: &DenseMatrix) -> Curve {
    let (n, p) = x.shape();
    let a = skew(&x.tr_mul(d));
    let perp = -(d - x * x.tr_mul(d));
    // Householder QR of [X, perp]: the trailing block of Q is orthonormal to X
    // at working precision even when perp is (nearly) rank deficient, and it
    // shrinks to n - p columns when n < 2p.
    let mut stacked = DenseMatrix::zeros(n, 2 * p);
    stacked.view_mut((0, 0), (n, p)).copy_from(x);
    stacked.view_mut((0, p), (n, p)).copy_from(&perp);
    let qr = stacked.qr();
    let k = n.min(2 * p) - p;
    let q = qr.q().columns(p, k).into_owned();
    let r = qr.r().view((p, p), (k, p)).into_owned();
    let mut block = DenseMatrix::zeros(p + k, p + k);
    block.view_mut((0, 0), (p, p)).copy_from(&(-a));
    block.view_mut((0, p), (p, k)).copy_from(&(-r.transpose()));
    block.view_mut((p, 0), (k, p)).copy_from(&r);
    Curve {
        x: x.clone(),
        kind: CurveKind::Geodesic { q, block },
    }
}

pub fn retract_geodesic(x: &StiefelPoint, d: &TangentDirection, tau: f64) -> Result<CurveEvaluation> {
    check_shape(x.mat().shape(), d.mat().shape())?;
    CurveEvaluation::at(Arc::new(geodesic_curve(x.mat(), d.mat())), tau)
}

/// `argmax_i e_i^T (G^T ∇F) e_i`, smallest index on ties.
pub fn lowrank_column_index(x: &DenseMatrix, g: &DenseMatrix) -> usize {
    let xtg = x.tr_mul(g);
    let p = x.ncols();
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for i in 0..p {
        let mut v = g.column(i).norm_squared();
        for j in 0..p {
            v -= xtg[(j, i)] * xtg[(i, j)];
        }
        if v > best_val {
            best_val = v;
            best = i;
        }
    }
    best
}

/// `D^(q) = g_q e_q^T - x_q g_q^T X` for the selected column `q`.
pub fn lowrank_direction(x: &DenseMatrix, g: &DenseMatrix) -> (usize, DenseMatrix) {
    let q = lowrank_column_index(x, g);
    let mut d = DenseMatrix::zeros(x.nrows(), x.ncols());
    d.set_column(q, &g.column(q));
    let gqx = x.tr_mul(&g.column(q)); // X^T g_q
    d.ger(-1.0, &x.column(q), &gqx, 1.0);
    (q, d)
}

fn lowrank_curve(x: &DenseMatrix, g: &DenseMatrix, gtau: GTau) -> Curve {
    let col = lowrank_column_index(x, g);
    let gq = g.column(col).into_owned();
    let mut c: DVector<f64> = x.tr_mul(&gq);
    let w = -(&gq - x * &c);
    c[col] = 0.0;
    let xc = x * &c;
    Curve {
        x: x.clone(),
        kind: CurveKind::LowRank {
            col,
            wsq: w.norm_squared(),
            csq: c.norm_squared(),
            w,
            c,
            xc,
            gtau,
        },
    }
}

pub fn retract_lowrank_column(x: &StiefelPoint, g: &DenseMatrix, tau: f64) -> Result<CurveEvaluation> {
    check_shape(x.mat().shape(), g.shape())?;
    CurveEvaluation::at(Arc::new(lowrank_curve(x.mat(), g, GTau::Linear)), tau)
}

/// Closed-form `J^{-1}` of the low-rank scheme, for checking against a dense
/// inverse.
pub fn lowrank_j_inverse(x: &StiefelPoint, g: &DenseMatrix, tau: f64, gtau: GTau) -> DenseMatrix {
    let p = x.p();
    let curve = lowrank_curve(x.mat(), g, gtau);
    let CurveKind::LowRank { col, wsq, c, csq, .. } = curve.kind else {
        unreachable!()
    };
    let gv = gtau.eval(tau);
    let b = &c * gv;
    let alpha = 0.25 * tau * tau * wsq + gv * gv * csq;
    let mut e = DVector::zeros(p);
    e[col] = 1.0;
    // I - [e, b] [[alpha, -1], [1, 1]] [e, b]^T / (1 + alpha)
    let first = &e * alpha + &b;
    let second = &b - &e;
    let mut inv = DenseMatrix::identity(p, p);
    inv.ger(-1.0 / (1.0 + alpha), &first, &e, 1.0);
    inv.ger(-1.0 / (1.0 + alpha), &second, &b, 1.0);
    inv
}

/// `D = G X^T H^2 X - H X G^T H X`
pub fn generalized_direction(
    x: &DenseMatrix,
    g: &DenseMatrix,
    gc: &GeneralizedConstraint,
) -> Result<DenseMatrix> {
    check_shape((gc.h.nrows(), gc.k.nrows()), x.shape())?;
    check_shape(x.shape(), g.shape())?;
    Ok(generalized_direction_matrix(x, g, gc))
}

fn generalized_direction_matrix(x: &DenseMatrix, g: &DenseMatrix, gc: &GeneralizedConstraint) -> DenseMatrix {
    let hx = &gc.h * x;
    g * hx.tr_mul(&hx) - &hx * g.tr_mul(&hx)
}

fn generalized_curve(
    x: &DenseMatrix,
    d: &DenseMatrix,
    gc: &GeneralizedConstraint,
    gtau: GTau,
    controlled: bool,
) -> Result<Curve> {
    let hx = &gc.h * x;
    let xthd = hx.tr_mul(d);
    // W = -(I - X M^{-1} X^T H) D with M = K, or X^T H X under control
    let m = if controlled { sym(&x.tr_mul(&hx)) } else { gc.k.clone() };
    let chol = m
        .cholesky()
        .ok_or(Error::RankDeficient("generalized projector"))?;
    let w = -(d - x * chol.solve(&xthd));
    let hw = &gc.h * &w;
    Ok(Curve {
        x: x.clone(),
        kind: CurveKind::Generalized {
            wthw: sym(&w.tr_mul(&hw)),
            w,
            a: skew(&xthd),
            k: gc.k.clone(),
            gtau,
        },
    })
}

/// `(2X + tau W) J^{-1} K - X` on `{X : X^T H X = K}`.
pub fn retract_generalized(
    x: &DenseMatrix,
    g: &DenseMatrix,
    gc: &GeneralizedConstraint,
    tau: f64,
) -> Result<CurveEvaluation> {
    let d = generalized_direction(x, g, gc)?;
    let curve = generalized_curve(x, &d, gc, GTau::Linear, false)?;
    CurveEvaluation::at(Arc::new(curve), tau)
}

/// `J = K + tau^2/4 W^T H W + g(tau) X^T H D` of the generalized scheme.
pub fn assemble_generalized_j(
    x: &DenseMatrix,
    g: &DenseMatrix,
    gc: &GeneralizedConstraint,
    tau: f64,
    gtau: GTau,
) -> Result<DenseMatrix> {
    let d = generalized_direction(x, g, gc)?;
    let curve = generalized_curve(x, &d, gc, gtau, false)?;
    let CurveKind::Generalized { wthw, a, k, .. } = curve.kind else {
        unreachable!()
    };
    Ok(k + wthw * (0.25 * tau * tau) + a * gtau.eval(tau))
}

/// The curve a solver iteration searches along, with its initial slope
/// `F'_tau(Y(0)) = -<G, E>`.
#[derive(Debug, Clone)]
pub struct StepCurve {
    pub curve: Arc<Curve>,
    pub slope: f64,
}

/// Builds the search curve for `scheme` at `x`, where `d` is the residual
/// direction from [`Geometry::residual_direction`].
pub fn build_step_curve(
    geom: &Geometry,
    scheme: &RetractionScheme,
    x: &DenseMatrix,
    g: &DenseMatrix,
    d: &DenseMatrix,
) -> Result<StepCurve> {
    use SchemeKind::*;
    let (kind, slope) = match geom {
        Geometry::Stiefel => match scheme.kind {
            NewScheme => {
                // Uncontrolled: W = -(I - X X^T) G, which equals -(I - X X^T) D
                // only while X^T X = I, so drift in X leaks into X^T W.
                let w = if scheme.feasibility_control {
                    w_controlled(x, d)?
                } else {
                    w_plain(x, g)
                };
                (stiefel_new_curve(x, w, d, scheme.gtau).kind, -inner(g, d))
            }
            Polar => (polar_curve(x, d).kind, -inner(g, d)),
            QrScheme => (CurveKind::Qr { d: d.clone() }, -inner(g, d)),
            GradProjection => {
                let e = g - x * sym(&x.tr_mul(g));
                (CurveKind::GradProj { g: g.clone() }, -inner(g, &e))
            }
            WenYin => (wenyin_curve(x, d).kind, -inner(g, d)),
            Geodesic => (geodesic_curve(x, d).kind, -inner(g, d)),
            LowRankColumn => {
                let (_, e) = lowrank_direction(x, g);
                (lowrank_curve(x, g, scheme.gtau).kind, -inner(g, &e))
            }
            GeneralizedNew => {
                return Err(Error::Unsupported(
                    "the generalized scheme needs a generalized constraint".into(),
                ))
            }
        },
        Geometry::Oblique => {
            let slope = -inner(g, d);
            let kind = match scheme.kind {
                // One column per sphere: the low-rank and Wen-Yin schemes
                // coincide with the new scheme there.
                NewScheme | WenYin | LowRankColumn => {
                    let w = if scheme.feasibility_control {
                        let mut w = -d.clone();
                        for j in 0..x.ncols() {
                            let v = x.column(j);
                            let c = v.dot(&d.column(j)) / v.norm_squared();
                            w.column_mut(j).axpy(c, &v, 1.0);
                        }
                        w
                    } else {
                        let mut w = -d.clone();
                        for j in 0..x.ncols() {
                            let v = x.column(j);
                            let c = v.dot(&d.column(j));
                            w.column_mut(j).axpy(c, &v, 1.0);
                        }
                        w
                    };
                    let wsq = w.column_iter().map(|c| c.norm_squared()).collect();
                    CurveKind::ObliqueNew { w, wsq }
                }
                Polar | QrScheme => CurveKind::ObliqueNormalize { dir: d.clone() },
                GradProjection => {
                    return Ok(StepCurve {
                        curve: Arc::new(Curve {
                            x: x.clone(),
                            kind: CurveKind::ObliqueNormalize { dir: g.clone() },
                        }),
                        slope: -inner(g, d),
                    })
                }
                Geodesic => {
                    let mut dperp = d.clone();
                    for j in 0..x.ncols() {
                        let v = x.column(j);
                        let c = v.dot(&d.column(j));
                        dperp.column_mut(j).axpy(-c, &v, 1.0);
                    }
                    let speed = dperp.column_iter().map(|c| c.norm()).collect();
                    CurveKind::ObliqueGreatCircle { dperp, speed }
                }
                GeneralizedNew => {
                    return Err(Error::Unsupported(
                        "the generalized scheme needs a generalized constraint".into(),
                    ))
                }
            };
            (kind, slope)
        }
        Geometry::Generalized(gc) => match scheme.kind {
            NewScheme | GeneralizedNew => (
                generalized_curve(x, d, gc, scheme.gtau, scheme.feasibility_control)?.kind,
                -inner(g, d),
            ),
            other => {
                return Err(Error::Unsupported(format!(
                    "scheme '{other}' is not available under X^T H X = K"
                )))
            }
        },
    };
    Ok(StepCurve {
        curve: Arc::new(Curve { x: x.clone(), kind }),
        slope,
    })
}
