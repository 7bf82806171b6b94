//! Small dense kernels shared by the manifold code.
//!
//! Storage is `nalgebra::DMatrix<f64>`, which is column-major. Everything here
//! works on the p-by-p (or 2p-by-2p) side of the problem; the n-by-p products
//! live next to the formulas that need them.

use nalgebra::{DMatrix, SymmetricEigen, LU};

use crate::error::{Error, Result};

/// Dense real matrix, column-major.
pub type DenseMatrix = DMatrix<f64>;

/// Frobenius inner product `tr(A^T B)`.
#[inline]
pub fn inner(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    a.dot(b)
}

/// `(M + M^T) / 2`
pub fn sym(m: &DenseMatrix) -> DenseMatrix {
    (m + m.transpose()) * 0.5
}

/// `(M - M^T) / 2`
pub fn skew(m: &DenseMatrix) -> DenseMatrix {
    (m - m.transpose()) * 0.5
}

pub fn all_finite(m: &DenseMatrix) -> bool {
    m.iter().all(|v| v.is_finite())
}

/// LU factorization with partial pivoting of a square matrix, rejecting
/// numerically singular input.
pub struct PivotedLu {
    lu: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl PivotedLu {
    pub fn new(a: &DenseMatrix, context: &'static str) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::ShapeMismatch {
                expected: (a.nrows(), a.nrows()),
                got: a.shape(),
            });
        }
        if !all_finite(a) {
            return Err(Error::Singular(context));
        }
        let lu = a.clone().lu();
        let u = lu.u();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for i in 0..u.nrows() {
            let d = u[(i, i)].abs();
            lo = lo.min(d);
            hi = hi.max(d);
        }
        if hi == 0.0 || lo <= hi * 1e-16 {
            return Err(Error::Singular(context));
        }
        Ok(Self { lu })
    }

    /// Solves `A Z = B`.
    pub fn solve(&self, b: &DenseMatrix) -> DenseMatrix {
        self.lu
            .solve(b)
            .expect("pivots were checked at factorization time")
    }
}

/// Computes `M A^{-1}` via an LU factorization of `A^T`.
pub fn solve_right(m: &DenseMatrix, a: &DenseMatrix, context: &'static str) -> Result<DenseMatrix> {
    let lu = PivotedLu::new(&a.transpose(), context)?;
    Ok(lu.solve(&m.transpose()).transpose())
}

/// Symmetric eigendecomposition with eigenvalues sorted in descending order.
/// Ties keep their original index order.
pub fn sym_eigen_desc(a: &DenseMatrix) -> (Vec<f64>, DenseMatrix) {
    let n = a.nrows();
    let eig = SymmetricEigen::new(sym(a));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .partial_cmp(&eig.eigenvalues[i])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = DenseMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &eig.eigenvectors.column(src));
    }
    (vals, vecs)
}

/// Applies `f` to the spectrum of a symmetric matrix.
fn sym_matrix_function(a: &DenseMatrix, f: impl Fn(f64) -> f64) -> DenseMatrix {
    let eig = SymmetricEigen::new(sym(a));
    let mut scaled = eig.eigenvectors.clone();
    for (j, lambda) in eig.eigenvalues.iter().enumerate() {
        let s = f(*lambda);
        scaled.column_mut(j).scale_mut(s);
    }
    &scaled * eig.eigenvectors.transpose()
}

/// `B^{-1/2}` for symmetric positive definite `B`. Eigenvalues below
/// `1e-15 * lambda_max` are floored there.
pub fn inv_sqrt_spd(b: &DenseMatrix, context: &'static str) -> Result<DenseMatrix> {
    let eig = SymmetricEigen::new(sym(b));
    let lmax = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    let lmin = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(lmax > 0.0) || !lmin.is_finite() || lmin <= 0.0 {
        return Err(Error::RankDeficient(context));
    }
    let floor = 1e-15 * lmax;
    let mut scaled = eig.eigenvectors.clone();
    for (j, lambda) in eig.eigenvalues.iter().enumerate() {
        scaled.column_mut(j).scale_mut(1.0 / lambda.max(floor).sqrt());
    }
    Ok(&scaled * eig.eigenvectors.transpose())
}

/// Principal square root of a symmetric positive semidefinite matrix.
pub fn sqrt_psd(b: &DenseMatrix) -> DenseMatrix {
    sym_matrix_function(b, |l| l.max(0.0).sqrt())
}

/// Projection onto the Stiefel manifold: the orthogonal polar factor
/// `U V^T` of a full-column-rank `C = U S V^T`. Going through the SVD rather
/// than `C (C^T C)^{-1/2}` keeps the result orthonormal to rounding even when
/// `C` is badly conditioned.
pub fn project_stiefel(c: &DenseMatrix) -> Result<DenseMatrix> {
    let svd = c.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > smax * 1e-14) || !smax.is_finite() {
        return Err(Error::RankDeficient("stiefel projection"));
    }
    let u = svd.u.expect("requested U");
    let vt = svd.v_t.expect("requested V^T");
    Ok(u * vt)
}

/// Thin QR factorization `A = Q R` with the diagonal of `R` made positive.
///
/// Fails when a diagonal entry of `R` is negligible relative to `‖A‖_F`.
pub fn qr_positive(a: &DenseMatrix, context: &'static str) -> Result<(DenseMatrix, DenseMatrix)> {
    let (n, p) = a.shape();
    if n < p {
        return Err(Error::RankDeficient(context));
    }
    let qr = a.clone().qr();
    let mut q = qr.q();
    let mut r = qr.r();
    let scale = a.norm().max(f64::MIN_POSITIVE);
    for i in 0..p {
        let d = r[(i, i)];
        if d.abs() <= 1e-14 * scale || !d.is_finite() {
            return Err(Error::RankDeficient(context));
        }
        if d < 0.0 {
            q.column_mut(i).neg_mut();
            r.row_mut(i).neg_mut();
        }
    }
    Ok((q, r))
}

/// 2-norm condition number `sigma_max / sigma_min`.
pub fn cond2(a: &DenseMatrix) -> f64 {
    let sv = a.singular_values();
    let hi = sv.max();
    let lo = sv.min();
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

fn norm1(a: &DenseMatrix) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA_13: f64 = 5.371920351148152;

/// Matrix exponential by scaling and squaring with the degree-13 Pade
/// approximant.
pub fn expm(a: &DenseMatrix) -> Result<DenseMatrix> {
    let n = a.nrows();
    if !a.is_square() {
        return Err(Error::ShapeMismatch {
            expected: (n, n),
            got: a.shape(),
        });
    }
    let nrm = norm1(a);
    if !nrm.is_finite() {
        return Err(Error::NonFinite("expm argument".into()));
    }
    let s = if nrm > THETA_13 {
        (nrm / THETA_13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let a = a * 2f64.powi(-s);
    let b = &PADE13;
    let id = DenseMatrix::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let inner_u = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9]);
    let u = &a * (inner_u + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &id * b[1]);
    let inner_v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8]);
    let v = inner_v + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &id * b[0];

    let lu = PivotedLu::new(&(&v - &u), "expm pade denominator")?;
    let mut r = lu.solve(&(&v + &u));
    for _ in 0..s {
        r = &r * &r;
    }
    Ok(r)
}
