use rand::seq::index::sample;
use rand::Rng;

use crate::error::{check_shape, Error, Result};
use crate::linalg::{sym_eigen_desc, DenseMatrix};
use crate::manifold::GradientPair;
use crate::objective::Objective;
use crate::random::rng_from_seed;

/// Entrywise weights `H`.
#[derive(Debug, Clone, PartialEq)]
pub enum Weights {
    Ones,
    Matrix(DenseMatrix),
}

/// Nearest low-rank correlation matrix:
/// `theta(V) = 1/2 ‖H o (V^T V - C)‖_F^2` over `r x n` matrices `V` with unit
/// columns.
#[derive(Debug, Clone)]
pub struct LowRankCorrProblem {
    c: DenseMatrix,
    weights: Weights,
    /// `H o H`, kept so each evaluation costs one Hadamard product.
    h_sq: Option<DenseMatrix>,
    r: usize,
    name: String,
}

impl LowRankCorrProblem {
    pub fn new(c: DenseMatrix, weights: Weights, r: usize) -> Result<Self> {
        if !c.is_square() {
            return Err(Error::InvalidParameter("C must be square".into()));
        }
        let n = c.nrows();
        if (&c - c.transpose()).norm() > 1e-12 * c.norm().max(1.0) {
            return Err(Error::InvalidParameter("C must be symmetric".into()));
        }
        if r == 0 || r > n {
            return Err(Error::InvalidParameter(format!("rank must lie in 1..={n}, got {r}")));
        }
        let h_sq = match &weights {
            Weights::Ones => None,
            Weights::Matrix(h) => {
                check_shape((n, n), h.shape())?;
                if h.iter().any(|v| !(*v >= 0.0)) {
                    return Err(Error::InvalidParameter("weights must be nonnegative".into()));
                }
                if (h - h.transpose()).norm() > 1e-12 * h.norm() {
                    return Err(Error::InvalidParameter("H must be symmetric".into()));
                }
                Some(h.component_mul(h))
            }
        };
        Ok(Self {
            c,
            weights,
            h_sq,
            r,
            name: "lowrank-corr".into(),
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Same target and weights at a different rank.
    pub fn with_rank(&self, r: usize) -> Result<Self> {
        Ok(Self::new(self.c.clone(), self.weights.clone(), r)?.with_name(self.name.clone()))
    }

    pub fn c(&self) -> &DenseMatrix {
        &self.c
    }

    pub fn weights(&self) -> &Weights {
        &self.weights
    }

    pub fn n(&self) -> usize {
        self.c.nrows()
    }

    pub fn r(&self) -> usize {
        self.r
    }

    /// `V^T V - C`
    fn residual_matrix(&self, v: &DenseMatrix) -> DenseMatrix {
        v.tr_mul(v) - &self.c
    }

    /// `‖H o (V^T V - C)‖_F`
    pub fn nlcm_residual(&self, v: &DenseMatrix) -> f64 {
        let res = self.residual_matrix(v);
        match &self.h_sq {
            None => res.norm(),
            Some(hs) => res.component_mul(&res).dot(hs).sqrt(),
        }
    }

    /// Starting point from the leading eigenpairs of `C`.
    pub fn pca_start(&self) -> Result<DenseMatrix> {
        modified_pca_init(&self.c, self.r)
    }
}

impl Objective for LowRankCorrProblem {
    fn dims(&self) -> (usize, usize) {
        (self.r, self.c.nrows())
    }

    fn evaluate(&self, v: &DenseMatrix) -> Result<GradientPair> {
        check_shape(self.dims(), v.shape())?;
        let res = self.residual_matrix(v);
        let (value, weighted) = match &self.h_sq {
            None => (0.5 * res.norm_squared(), res),
            Some(hs) => {
                let w = res.component_mul(hs);
                (0.5 * w.dot(&res), w)
            }
        };
        Ok(GradientPair {
            value,
            euclid_grad: v * weighted * 2.0,
        })
    }

    fn name(&self) -> &str {
        &self.name
    }

    fn known_optimum(&self) -> Option<f64> {
        None
    }

    fn symmetric_xg(&self) -> bool {
        true
    }

    fn on_spheres(&self) -> bool {
        true
    }
}

/// Target of the second correlation benchmark:
/// `C_ij = exp(-g1|i-j| - g2|i-j| / max(i,j)^g3 - g4|sqrt(i) - sqrt(j)|)`,
/// indices from 1, `(g1, g2, g3, g4) = (0, 0.480, 1.511, 0.186)`.
pub fn gen_ex2_matrix(n: usize) -> DenseMatrix {
    let (g1, g2, g3, g4) = (0.0, 0.480, 1.511, 0.186);
    DenseMatrix::from_fn(n, n, |a, b| {
        let (i, j) = ((a + 1) as f64, (b + 1) as f64);
        let d = (i - j).abs();
        (-g1 * d - g2 * d / i.max(j).powf(g3) - g4 * (i.sqrt() - j.sqrt()).abs()).exp()
    })
}

pub fn gen_ex2(n: usize, r: usize) -> Result<LowRankCorrProblem> {
    Ok(LowRankCorrProblem::new(gen_ex2_matrix(n), Weights::Ones, r)?.with_name("ex2"))
}

/// `C_ij = 0.5 + 0.5 exp(-0.05 |i - j|)`
pub fn gen_ex3_matrix(n: usize) -> DenseMatrix {
    DenseMatrix::from_fn(n, n, |i, j| 0.5 + 0.5 * (-0.05 * (i as f64 - j as f64).abs()).exp())
}

/// Symmetric weights uniform in [0.1, 10], except 200 strictly-upper entries
/// (and their mirrors) uniform in [0.01, 100].
pub fn ex3_weights<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DenseMatrix {
    let mut h = DenseMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..=j {
            let v = rng.random_range(0.1..=10.0);
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    // strict-upper entries enumerated column by column: (0,1), (0,2), (1,2), ...
    let pairs: Vec<(usize, usize)> = (1..n).flat_map(|j| (0..j).map(move |i| (i, j))).collect();
    let picks = sample(rng, pairs.len(), 200.min(pairs.len()));
    for idx in picks.into_iter() {
        let (i, j) = pairs[idx];
        let v = rng.random_range(0.01..=100.0);
        h[(i, j)] = v;
        h[(j, i)] = v;
    }
    h
}

pub fn gen_ex3(n: usize, r: usize, weighted: bool, seed: u64) -> Result<LowRankCorrProblem> {
    let weights = if weighted {
        Weights::Matrix(ex3_weights(n, &mut rng_from_seed(seed)))
    } else {
        Weights::Ones
    };
    Ok(LowRankCorrProblem::new(gen_ex3_matrix(n), weights, r)?.with_name("ex3"))
}

/// Columns of `Lambda_r^{1/2} P_1^T` normalized to unit length, where
/// `(Lambda_r, P_1)` are the `r` leading eigenpairs of `C`.
///
/// If a leading eigenvalue is not positive, `C` is first replaced by the
/// unit-diagonal rescaling of its eigenvalue clip at `1e-8`.
pub fn modified_pca_init(c: &DenseMatrix, r: usize) -> Result<DenseMatrix> {
    let n = c.nrows();
    if !c.is_square() || r == 0 || r > n {
        return Err(Error::InvalidParameter(format!("need square C and 1 <= r <= n, got r = {r}")));
    }
    let (mut vals, mut vecs) = sym_eigen_desc(c);
    if vals[r - 1] <= 0.0 {
        log::warn!("leading eigenvalues of C are not all positive; clipping the spectrum");
        let mut scaled = vecs.clone();
        for (j, lam) in vals.iter().enumerate() {
            scaled.column_mut(j).scale_mut(lam.max(1e-8));
        }
        let clipped = &scaled * vecs.transpose();
        let dinv: Vec<f64> = (0..n).map(|i| 1.0 / clipped[(i, i)].sqrt()).collect();
        let renorm = DenseMatrix::from_fn(n, n, |i, j| clipped[(i, j)] * dinv[i] * dinv[j]);
        (vals, vecs) = sym_eigen_desc(&crate::linalg::sym(&renorm));
    }
    let mut v = DenseMatrix::zeros(r, n);
    for k in 0..r {
        let s = vals[k].max(0.0).sqrt();
        for i in 0..n {
            v[(k, i)] = s * vecs[(i, k)];
        }
    }
    for (i, mut col) in v.column_iter_mut().enumerate() {
        let nrm = col.norm();
        if nrm > 0.0 {
            col /= nrm;
        } else {
            log::warn!("degenerate row {i} in the PCA start; using e_1");
            col.fill(0.0);
            col[0] = 1.0;
        }
    }
    Ok(v)
}
