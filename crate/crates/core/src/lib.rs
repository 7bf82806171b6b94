//! Feasible minimization under orthogonality constraints.
//!
//! [`retraction`] builds curves that stay on `X^T X = I` (or on a product of
//! spheres, or on `X^T H X = K`). [`solver`] runs a Barzilai-Borwein-like
//! method with a nonmonotone line search along them. [`problems`] holds the
//! bundled objectives, [`auglag`] adds prescribed inner products, and
//! [`bench`] drives seeded batches and the `afbb-bench` binary.
//!
//! ```
//! use afbb::manifold::StiefelPoint;
//! use afbb::problems::TraceEigenProblem;
//! use afbb::random::{random_symmetric, rng_from_seed};
//! use afbb::solver::{solve, SolverConfig};
//!
//! let mut rng = rng_from_seed(1);
//! let prob = TraceEigenProblem::new(random_symmetric(30, &mut rng), 2).unwrap();
//! let x0 = StiefelPoint::random(30, 2, &mut rng);
//! let rep = solve(&prob, &x0, &SolverConfig::default()).unwrap();
//! assert!(rep.feasi < 1e-13);
//! ```

// `!(x > 0.0)` is used on purpose so NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod auglag;
pub mod bench;
pub mod error;
pub mod linalg;
pub mod manifold;
pub mod linesearch;
pub mod objective;
pub mod problems;
pub mod random;
pub mod retraction;
pub mod solver;

pub use error::{Error, Result};
pub use linalg::DenseMatrix;
