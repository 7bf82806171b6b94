//! Seeded random matrices. All generators draw entries in column-major order so
//! a seed pins down the matrix bit for bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{qr_positive, DenseMatrix};

pub type SeededRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DenseMatrix {
    let mut m = DenseMatrix::zeros(rows, cols);
    for v in m.iter_mut() {
        *v = rng.sample(StandardNormal);
    }
    m
}

/// Q factor of an n-by-p standard Gaussian matrix.
pub fn random_stiefel<R: Rng + ?Sized>(n: usize, p: usize, rng: &mut R) -> DenseMatrix {
    assert!(n >= p && p >= 1, "need n >= p >= 1");
    loop {
        let g = gaussian_matrix(n, p, rng);
        // A Gaussian matrix is rank deficient with probability zero; retry anyway.
        if let Ok((q, _)) = qr_positive(&g, "random stiefel") {
            return q;
        }
    }
}

/// Random symmetric matrix `(B + B^T) / 2` with Gaussian `B`.
pub fn random_symmetric<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DenseMatrix {
    let b = gaussian_matrix(n, n, rng);
    (&b + b.transpose()) * 0.5
}

/// Random symmetric positive definite matrix `B B^T / n + shift I`.
pub fn random_spd<R: Rng + ?Sized>(n: usize, shift: f64, rng: &mut R) -> DenseMatrix {
    let b = gaussian_matrix(n, n, rng);
    let mut h = &b * b.transpose() / n as f64;
    for i in 0..n {
        h[(i, i)] += shift;
    }
    crate::linalg::sym(&h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::feasibility_error;

    #[test]
    fn seeded_is_reproducible() {
        let a = gaussian_matrix(4, 3, &mut rng_from_seed(7));
        let b = gaussian_matrix(4, 3, &mut rng_from_seed(7));
        assert_eq!(a, b);
    }

    #[test]
    fn stiefel_sample_is_feasible() {
        let x = random_stiefel(30, 5, &mut rng_from_seed(1));
        assert!(feasibility_error(&x) < 1e-14);
    }
}
