use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_shape, Error, Result};
use crate::linalg::DenseMatrix;
use crate::manifold::GradientPair;
use crate::objective::Objective;

/// How the planted values `l_i` are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LMode {
    /// `l_i = -1`
    MinusOne,
    /// `l_i = -u`, `u` uniform in (0, 1)
    Random,
}

impl std::str::FromStr for LMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "minus-one" | "minus_one" | "-1" => Ok(LMode::MinusOne),
            "random" => Ok(LMode::Random),
            other => Err(Error::InvalidParameter(format!("unknown l-mode '{other}'"))),
        }
    }
}

/// `F(X) = sum_i x_i^T A_i x_i` with diagonal
/// `A_i = Diag(n(i-1)+1, ..., l_i, ..., n i)`, `l_i` in slot `i`.
/// The minimum is `sum_i l_i`, attained at `(±e_1, ..., ±e_p)`.
#[derive(Debug, Clone)]
pub struct HeterogeneousQuadratic {
    n: usize,
    l: Vec<f64>,
    /// Column `i` holds the diagonal of `A_i`.
    diag: DenseMatrix,
}

impl HeterogeneousQuadratic {
    pub fn new(n: usize, l: Vec<f64>) -> Result<Self> {
        let p = l.len();
        if p == 0 || p > n {
            return Err(Error::InvalidParameter(format!("need 1 <= p <= n, got p = {p}, n = {n}")));
        }
        if l.iter().any(|v| !(*v < 0.0)) {
            return Err(Error::InvalidParameter("every l_i must be negative".into()));
        }
        let diag = DenseMatrix::from_fn(n, p, |j, i| {
            if i == j {
                l[i]
            } else {
                (n * i + j + 1) as f64
            }
        });
        Ok(Self { n, l, diag })
    }

    pub fn with_mode<R: Rng + ?Sized>(n: usize, p: usize, mode: LMode, rng: &mut R) -> Result<Self> {
        let l = match mode {
            LMode::MinusOne => vec![-1.0; p],
            // 1 - U[0, 1) lies in (0, 1]
            LMode::Random => (0..p).map(|_| -(1.0 - rng.random::<f64>())).collect(),
        };
        Self::new(n, l)
    }

    pub fn l(&self) -> &[f64] {
        &self.l
    }

    pub fn optimum(&self) -> f64 {
        self.l.iter().sum()
    }
}

impl Objective for HeterogeneousQuadratic {
    fn dims(&self) -> (usize, usize) {
        (self.n, self.l.len())
    }

    fn evaluate(&self, x: &DenseMatrix) -> Result<GradientPair> {
        check_shape(self.dims(), x.shape())?;
        let ax = x.component_mul(&self.diag);
        Ok(GradientPair {
            value: x.dot(&ax),
            euclid_grad: ax * 2.0,
        })
    }

    fn name(&self) -> &str {
        "balogh"
    }

    fn known_optimum(&self) -> Option<f64> {
        Some(self.optimum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_example() {
        let prob = HeterogeneousQuadratic::new(3, vec![-1.0]).unwrap();
        let x = DenseMatrix::from_row_slice(3, 1, &[0.0, 1.0, 0.0]);
        let gp = prob.evaluate(&x).unwrap();
        assert_eq!(gp.value, 2.0);
        assert_eq!(gp.euclid_grad, DenseMatrix::from_row_slice(3, 1, &[0.0, 4.0, 0.0]));
    }

    #[test]
    fn identity_selection_is_optimal() {
        let prob = HeterogeneousQuadratic::new(6, vec![-1.0, -0.5, -2.0]).unwrap();
        let x = DenseMatrix::identity(6, 3);
        assert_eq!(prob.evaluate(&x).unwrap().value, -3.5);
    }

    #[test]
    fn brute_force_over_signed_coordinate_frames() {
        let n = 5;
        let prob = HeterogeneousQuadratic::new(n, vec![-1.0, -1.0]).unwrap();
        let best = prob.optimum();
        for a in 0..n {
            for b in 0..n {
                if a == b {
                    continue;
                }
                for (sa, sb) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                    let mut x = DenseMatrix::zeros(n, 2);
                    x[(a, 0)] = sa;
                    x[(b, 1)] = sb;
                    let v = prob.evaluate(&x).unwrap().value;
                    if a == 0 && b == 1 {
                        assert_eq!(v, best);
                    } else {
                        assert!(v > best);
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_nonnegative_l() {
        assert!(HeterogeneousQuadratic::new(4, vec![0.0]).is_err());
    }
}
