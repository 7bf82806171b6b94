//! Generalized eigenproblem `A x = lambda H x` through the constraint
//! `X^T H X = I`.

use afbb::linalg::{sym, sym_eigen_desc, inv_sqrt_spd};
use afbb::problems::TraceEigenProblem;
use afbb::random::{gaussian_matrix, random_spd, random_symmetric, rng_from_seed};
use afbb::retraction::{GeneralizedConstraint, RetractionScheme, SchemeKind};
use afbb::solver::{solve_generalized, SolverConfig};
use afbb::DenseMatrix;

fn main() -> afbb::Result<()> {
    let mut rng = rng_from_seed(7);
    let (n, p) = (60, 3);
    let h = random_spd(n, 0.5, &mut rng);
    let a = random_symmetric(n, &mut rng);
    let gc = GeneralizedConstraint::new(h.clone(), DenseMatrix::identity(p, p))?;
    let x0 = gc.feasible_from(&gaussian_matrix(n, p, &mut rng))?;
    let cfg = SolverConfig::default()
        .with_scheme(RetractionScheme::new(SchemeKind::GeneralizedNew))
        .with_tolerances(1e-8, 1e-12, 1e-16)
        .with_max_iter(10_000);
    let rep = solve_generalized(&TraceEigenProblem::new(a.clone(), p)?, &x0, &gc, &cfg)?;

    // oracle: eigenvalues of H^{-1/2} A H^{-1/2}
    let hi = inv_sqrt_spd(&h, "H")?;
    let (vals, _) = sym_eigen_desc(&sym(&(&hi * &a * &hi)));
    let want: f64 = vals.iter().take(p).sum();
    println!("objective {:.10}, oracle {:.10}", -rep.f_final, want);
    println!("max ‖X^T H X - I‖ along the run {:.1e}, {} iterations", rep.max_feasibility, rep.iters);
    Ok(())
}
