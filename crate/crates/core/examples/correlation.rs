//! Nearest low-rank correlation matrix. The columns of `V` (r x n) live on unit
//! spheres, so `V^T V` has a unit diagonal and rank at most r.

use afbb::problems::gen_ex3;
use afbb::solver::{solve_oblique, SolverConfig};

fn main() -> afbb::Result<()> {
    let n = 500;
    println!("{:>4} {:>12} {:>12} {:>8} {:>8} {:>9}", "r", "residual0", "residual", "iters", "nfge", "feasi");
    for r in [5, 20, 50] {
        let prob = gen_ex3(n, r, false, 0)?;
        let v0 = prob.pca_start()?;
        let rep = solve_oblique(&prob, &v0, &SolverConfig::default())?;
        println!(
            "{r:>4} {:>12.4e} {:>12.4e} {:>8} {:>8} {:>9.1e}",
            prob.nlcm_residual(&v0),
            prob.nlcm_residual(&rep.x_final),
            rep.iters,
            rep.nfge,
            rep.feasi
        );
    }
    Ok(())
}
