//! Points, tangent directions and first-order quantities on the Stiefel
//! manifold `St(n, p) = { X : X^T X = I_p }`.
//!
//! The checked wrappers ([`StiefelPoint`], [`TangentDirection`]) are for API
//! boundaries. The solver works on bare matrices through the `*_matrix`
//! helpers so that slightly drifted iterates can still be processed.

use rand::Rng;

use crate::error::{check_shape, Error, Result};
use crate::linalg::{inner, skew, sym, DenseMatrix};

/// Default admission tolerance for [`StiefelPoint`].
pub const FEAS_TOL: f64 = 1e-12;
/// Relative tolerance on `‖X^T E + E^T X‖_F` for [`TangentDirection`].
pub const SKEW_TOL: f64 = 1e-10;

/// `‖X^T X - I_p‖_F`
pub fn feasibility_error(x: &DenseMatrix) -> f64 {
    let mut xtx = x.tr_mul(x);
    for i in 0..xtx.nrows() {
        xtx[(i, i)] -= 1.0;
    }
    xtx.norm()
}

/// An n-by-p matrix with orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct StiefelPoint {
    mat: DenseMatrix,
}

impl StiefelPoint {
    pub fn new(mat: DenseMatrix) -> Result<Self> {
        Self::with_tol(mat, FEAS_TOL)
    }

    pub fn with_tol(mat: DenseMatrix, tol: f64) -> Result<Self> {
        let (n, p) = mat.shape();
        if p == 0 || n < p {
            return Err(Error::InvalidParameter(format!(
                "Stiefel point needs n >= p >= 1, got {n}x{p}"
            )));
        }
        if mat.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("Stiefel point entries".into()));
        }
        let residual = feasibility_error(&mat);
        if residual > tol {
            return Err(Error::Infeasible { residual, tol });
        }
        Ok(Self { mat })
    }

    /// Q factor of a seeded Gaussian matrix.
    pub fn random<R: Rng + ?Sized>(n: usize, p: usize, rng: &mut R) -> Self {
        Self {
            mat: crate::random::random_stiefel(n, p, rng),
        }
    }

    /// First `p` columns of the n-by-n identity.
    pub fn identity(n: usize, p: usize) -> Self {
        Self {
            mat: DenseMatrix::identity(n, p),
        }
    }

    pub fn mat(&self) -> &DenseMatrix {
        &self.mat
    }

    pub fn into_inner(self) -> DenseMatrix {
        self.mat
    }

    pub fn n(&self) -> usize {
        self.mat.nrows()
    }

    pub fn p(&self) -> usize {
        self.mat.ncols()
    }
}

/// A direction `E` with `X^T E` skew-symmetric at some base point `X`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentDirection {
    mat: DenseMatrix,
}

impl TangentDirection {
    pub fn new(base: &StiefelPoint, mat: DenseMatrix) -> Result<Self> {
        check_shape(base.mat.shape(), mat.shape())?;
        let xte = base.mat.tr_mul(&mat);
        let residual = (&xte + xte.transpose()).norm();
        let tol = SKEW_TOL * mat.norm().max(1.0);
        if residual > tol {
            return Err(Error::NotTangent { residual, tol });
        }
        Ok(Self { mat })
    }

    /// Wraps a matrix known to be tangent by construction.
    pub(crate) fn trusted(mat: DenseMatrix) -> Self {
        Self { mat }
    }

    pub fn mat(&self) -> &DenseMatrix {
        &self.mat
    }

    pub fn into_inner(self) -> DenseMatrix {
        self.mat
    }

    pub fn norm(&self) -> f64 {
        self.mat.norm()
    }
}

/// Objective value together with its Euclidean gradient `G = DF(X)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientPair {
    pub value: f64,
    pub euclid_grad: DenseMatrix,
}

/// `∇F = G - X G^T X`
pub fn canonical_gradient(x: &StiefelPoint, g: &DenseMatrix) -> Result<TangentDirection> {
    check_shape(x.mat.shape(), g.shape())?;
    Ok(TangentDirection::trusted(d_rho_matrix(&x.mat, g, 0.5)))
}

/// `Z - X sym(X^T Z)`
pub fn tangent_projection(x: &StiefelPoint, z: &DenseMatrix) -> Result<TangentDirection> {
    check_shape(x.mat.shape(), z.shape())?;
    let s = sym(&x.mat.tr_mul(z));
    Ok(TangentDirection::trusted(z - &x.mat * s))
}

/// `D_rho = G - X (2 rho G^T X + (1 - 2 rho) X^T G)`
pub fn compute_d_rho(x: &StiefelPoint, g: &DenseMatrix, rho: f64) -> Result<TangentDirection> {
    check_rho(rho)?;
    check_shape(x.mat.shape(), g.shape())?;
    Ok(TangentDirection::trusted(d_rho_matrix(&x.mat, g, rho)))
}

/// `‖D_rho‖_F`
pub fn optimality_residual(x: &StiefelPoint, g: &DenseMatrix, rho: f64) -> Result<f64> {
    Ok(compute_d_rho(x, g, rho)?.norm())
}

pub(crate) fn check_rho(rho: f64) -> Result<()> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::InvalidParameter(format!("rho must be positive, got {rho}")));
    }
    Ok(())
}

/// Unchecked `D_rho` on a bare matrix.
pub fn d_rho_matrix(x: &DenseMatrix, g: &DenseMatrix, rho: f64) -> DenseMatrix {
    let xtg = x.tr_mul(g);
    let m = xtg.transpose() * (2.0 * rho) + &xtg * (1.0 - 2.0 * rho);
    g - x * m
}

/// Column-wise canonical gradient on a product of unit spheres: each column
/// `v` of `V` gets `g - v (v^T g)`. With one column per sphere this is `D_rho`
/// for every `rho`.
pub fn oblique_gradient(v: &DenseMatrix, g: &DenseMatrix) -> DenseMatrix {
    let mut d = g.clone();
    for j in 0..v.ncols() {
        let c = v.column(j).dot(&g.column(j));
        d.column_mut(j).axpy(-c, &v.column(j), 1.0);
    }
    d
}

/// `‖diag(V^T V) - 1‖_2`, the constraint residual on a product of spheres.
pub fn oblique_feasibility(v: &DenseMatrix) -> f64 {
    v.column_iter()
        .map(|c| {
            let e = c.norm_squared() - 1.0;
            e * e
        })
        .sum::<f64>()
        .sqrt()
}

/// `X^T E`, split into its symmetric and skew parts.
pub fn split_xte(x: &DenseMatrix, e: &DenseMatrix) -> (DenseMatrix, DenseMatrix) {
    let m = x.tr_mul(e);
    (sym(&m), skew(&m))
}

/// Slope `F'_tau(Y(0)) = -<G, E>` of any curve with `Y'(0) = -E`.
pub fn curve_slope(g: &DenseMatrix, e: &DenseMatrix) -> f64 {
    -inner(g, e)
}
