//! Writes a symmetric matrix in MatrixMarket format, reads it back and solves
//! the trace problem on it. Pass a path to use your own `.mtx` file instead.

use afbb::manifold::StiefelPoint;
use afbb::problems::matrix_market::{read_matrix_market_file, write_matrix_market_symmetric};
use afbb::problems::{Objective, TraceEigenProblem};
use afbb::random::{random_symmetric, rng_from_seed};
use afbb::solver::{solve, SolverConfig};

fn main() -> afbb::Result<()> {
    let path = match std::env::args().nth(1) {
        Some(p) => std::path::PathBuf::from(p),
        None => {
            let p = std::env::temp_dir().join("afbb-example.mtx");
            let a = random_symmetric(80, &mut rng_from_seed(3));
            write_matrix_market_symmetric(std::fs::File::create(&p)?, &a)?;
            p
        }
    };
    let a = read_matrix_market_file(&path)?;
    println!("read {}x{} from {}", a.nrows(), a.ncols(), path.display());
    let p = 3.min(a.nrows());
    let prob = TraceEigenProblem::new(a, p)?.with_computed_optimum();
    let x0 = StiefelPoint::random(prob.dims().0, p, &mut rng_from_seed(0));
    let rep = solve(&prob, &x0, &SolverConfig::default().with_tolerances(1e-8, 1e-10, 1e-14))?;
    println!("top-{p} eigenvalue sum {:.10} (dense {:.10})", -rep.f_final, prob.top_eigen_sum().unwrap());
    Ok(())
}

