use std::sync::atomic::{AtomicUsize, Ordering};

use crate::error::Result;
use crate::linalg::DenseMatrix;
use crate::manifold::GradientPair;

/// A smooth objective `F(X)` with its Euclidean gradient.
pub trait Objective: Send + Sync {
    /// Shape of the iterate, `(rows, cols)`.
    fn dims(&self) -> (usize, usize);

    fn evaluate(&self, x: &DenseMatrix) -> Result<GradientPair>;

    fn name(&self) -> &str;

    fn known_optimum(&self) -> Option<f64> {
        None
    }

    /// True when `X^T G` is symmetric at every feasible `X`.
    fn symmetric_xg(&self) -> bool {
        false
    }

    /// True when the iterate's columns live on unit spheres rather than on a
    /// Stiefel manifold.
    fn on_spheres(&self) -> bool {
        false
    }
}

impl<T: Objective + ?Sized> Objective for &T {
    fn dims(&self) -> (usize, usize) {
        (**self).dims()
    }
    fn evaluate(&self, x: &DenseMatrix) -> Result<GradientPair> {
        (**self).evaluate(x)
    }
    fn name(&self) -> &str {
        (**self).name()
    }
    fn known_optimum(&self) -> Option<f64> {
        (**self).known_optimum()
    }
    fn symmetric_xg(&self) -> bool {
        (**self).symmetric_xg()
    }
    fn on_spheres(&self) -> bool {
        (**self).on_spheres()
    }
}

/// Wraps an objective and counts evaluations.
pub struct CountingObjective<P> {
    inner: P,
    count: AtomicUsize,
}

impl<P: Objective> CountingObjective<P> {
    pub fn new(inner: P) -> Self {
        Self {
            inner,
            count: AtomicUsize::new(0),
        }
    }

    pub fn count(&self) -> usize {
        self.count.load(Ordering::Relaxed)
    }

    pub fn inner(&self) -> &P {
        &self.inner
    }
}

impl<P: Objective> Objective for CountingObjective<P> {
    fn dims(&self) -> (usize, usize) {
        self.inner.dims()
    }
    fn evaluate(&self, x: &DenseMatrix) -> Result<GradientPair> {
        self.count.fetch_add(1, Ordering::Relaxed);
        self.inner.evaluate(x)
    }
    fn name(&self) -> &str {
        self.inner.name()
    }
    fn known_optimum(&self) -> Option<f64> {
        self.inner.known_optimum()
    }
    fn symmetric_xg(&self) -> bool {
        self.inner.symmetric_xg()
    }
    fn on_spheres(&self) -> bool {
        self.inner.on_spheres()
    }
}

/// Central-difference check of the gradient along `dir`. Returns
/// `|FD - <G, dir>|` and `|F(X)|`.
pub fn gradient_fd_error<P: Objective + ?Sized>(
    problem: &P,
    x: &DenseMatrix,
    dir: &DenseMatrix,
    h: f64,
) -> Result<(f64, f64)> {
    let gp = problem.evaluate(x)?;
    let fp = problem.evaluate(&(x + dir * h))?.value;
    let fm = problem.evaluate(&(x - dir * h))?.value;
    let fd = (fp - fm) / (2.0 * h);
    Ok(((fd - gp.euclid_grad.dot(dir)).abs(), gp.value.abs()))
}
