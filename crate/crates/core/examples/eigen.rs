//! Sum of the p largest eigenvalues of a random symmetric matrix by minimizing
//! `-tr(X^T A X)` over the Stiefel manifold, checked against a dense
//! eigensolver.

use afbb::manifold::StiefelPoint;
use afbb::problems::{Objective, TraceEigenProblem};
use afbb::random::{random_symmetric, rng_from_seed};
use afbb::solver::{solve, SolverConfig};

fn main() -> afbb::Result<()> {
    let mut rng = rng_from_seed(42);
    let (n, p) = (200, 6);
    let prob = TraceEigenProblem::new(random_symmetric(n, &mut rng), p)?.with_computed_optimum();
    let x0 = StiefelPoint::random(n, p, &mut rng);
    let cfg = SolverConfig::default().with_tolerances(1e-8, 1e-10, 1e-14).with_max_iter(20_000);
    let rep = solve(&prob, &x0, &cfg)?;
    let want = -prob.known_optimum().unwrap();
    println!("sum of top {p} eigenvalues: {:.12}", -rep.f_final);
    println!("dense eigensolver:          {want:.12}");
    println!(
        "iterations {}, evaluations {}, stop {}, ‖X^T X - I‖ {:.1e}",
        rep.iters,
        rep.nfge,
        rep.stop_reason.name(),
        rep.feasi
    );
    Ok(())
}
