//! Plugging in your own objective: the Brockett cost `tr(X^T A X N)` with a
//! diagonal `N`, whose minimizers are eigenvectors of `A` sorted by `N`.

use afbb::manifold::{GradientPair, StiefelPoint};
use afbb::problems::Objective;
use afbb::random::{random_symmetric, rng_from_seed};
use afbb::solver::{solve, SolverConfig};
use afbb::DenseMatrix;

struct Brockett {
    a: DenseMatrix,
    weights: Vec<f64>,
}

impl Objective for Brockett {
    fn dims(&self) -> (usize, usize) {
        (self.a.nrows(), self.weights.len())
    }

    fn evaluate(&self, x: &DenseMatrix) -> afbb::Result<GradientPair> {
        let mut axn = &self.a * x;
        for (j, mut c) in axn.column_iter_mut().enumerate() {
            c *= self.weights[j];
        }
        Ok(GradientPair {
            value: x.dot(&axn),
            euclid_grad: axn * 2.0,
        })
    }

    fn name(&self) -> &str {
        "brockett"
    }
}

fn main() -> afbb::Result<()> {
    let mut rng = rng_from_seed(11);
    let prob = Brockett {
        a: random_symmetric(50, &mut rng),
        weights: vec![1.0, 2.0, 3.0, 4.0],
    };
    let x0 = StiefelPoint::random(50, 4, &mut rng);
    let rep = solve(&prob, &x0, &SolverConfig::default().with_tolerances(1e-8, 1e-10, 1e-14))?;
    let ax = &prob.a * &rep.x_final;
    let ritz: Vec<String> = (0..4).map(|j| format!("{:.6}", rep.x_final.column(j).dot(&ax.column(j)))).collect();
    println!("f = {:.8} after {} iterations; Rayleigh quotients per column {}", rep.f_final, rep.iters, ritz.join(", "));
    Ok(())
}
