use std::sync::Arc;

use crate::error::{check_shape, Error, Result};
use crate::linalg::{sym_eigen_desc, DenseMatrix};
use crate::manifold::GradientPair;
use crate::objective::Objective;

type MatVec = Arc<dyn Fn(&DenseMatrix) -> DenseMatrix + Send + Sync>;

#[derive(Clone)]
enum Operator {
    Dense(DenseMatrix),
    Free(MatVec),
}

/// `F(X) = -tr(X^T A X)` for symmetric `A`; minimizers span the top-p
/// invariant subspace.
#[derive(Clone)]
pub struct TraceEigenProblem {
    op: Operator,
    n: usize,
    p: usize,
    optimum: Option<f64>,
}

impl std::fmt::Debug for TraceEigenProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TraceEigenProblem")
            .field("n", &self.n)
            .field("p", &self.p)
            .finish()
    }
}

impl TraceEigenProblem {
    pub fn new(a: DenseMatrix, p: usize) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::InvalidParameter("A must be square".into()));
        }
        let asym = (&a - a.transpose()).norm();
        if asym > 1e-12 * a.norm().max(1.0) {
            return Err(Error::InvalidParameter(format!(
                "A is not symmetric (‖A - A^T‖_F = {asym:e})"
            )));
        }
        let n = a.nrows();
        if p == 0 || p > n {
            return Err(Error::InvalidParameter(format!("need 1 <= p <= n, got p = {p}")));
        }
        Ok(Self {
            op: Operator::Dense(a),
            n,
            p,
            optimum: None,
        })
    }

    /// `A` given only through `X -> A X`. Symmetry is the caller's promise.
    pub fn matrix_free(
        n: usize,
        p: usize,
        apply: impl Fn(&DenseMatrix) -> DenseMatrix + Send + Sync + 'static,
    ) -> Self {
        Self {
            op: Operator::Free(Arc::new(apply)),
            n,
            p,
            optimum: None,
        }
    }

    /// Records `-(sum of the p largest eigenvalues)` from a dense
    /// eigendecomposition (dense operators only).
    pub fn with_computed_optimum(mut self) -> Self {
        self.optimum = self.top_eigen_sum().map(|s| -s);
        self
    }

    pub fn top_eigen_sum(&self) -> Option<f64> {
        match &self.op {
            Operator::Dense(a) => Some(sym_eigen_desc(a).0.iter().take(self.p).sum()),
            Operator::Free(_) => None,
        }
    }

    pub fn matrix(&self) -> Option<&DenseMatrix> {
        match &self.op {
            Operator::Dense(a) => Some(a),
            Operator::Free(_) => None,
        }
    }

    fn apply(&self, x: &DenseMatrix) -> DenseMatrix {
        match &self.op {
            Operator::Dense(a) => a * x,
            Operator::Free(f) => f(x),
        }
    }
}

impl Objective for TraceEigenProblem {
    fn dims(&self) -> (usize, usize) {
        (self.n, self.p)
    }

    fn evaluate(&self, x: &DenseMatrix) -> Result<GradientPair> {
        check_shape((self.n, self.p), x.shape())?;
        let ax = self.apply(x);
        Ok(GradientPair {
            value: -x.dot(&ax),
            euclid_grad: ax * -2.0,
        })
    }

    fn name(&self) -> &str {
        "trace-eigen"
    }

    fn known_optimum(&self) -> Option<f64> {
        self.optimum
    }

    fn symmetric_xg(&self) -> bool {
        true
    }
}
