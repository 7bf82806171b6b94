//! Low-rank correlation matrix with some entries forced to zero, solved by the
//! augmented Lagrangian outer loop.

use afbb::auglag::{auglag_solve, AugLagConfig};
use afbb::problems::{gen_ex2, FixedEntrySet};
use afbb::random::rng_from_seed;

fn main() -> afbb::Result<()> {
    let (n, r) = (150, 8);
    let base = gen_ex2(n, r)?;
    let fes = FixedEntrySet::sample_zero_pattern(n, 2, 0.0, &mut rng_from_seed(1))?;
    let rep = auglag_solve(&base, &fes, &base.pca_start()?, &AugLagConfig::default())?;
    for (k, s) in rep.trace.iter().enumerate() {
        println!("outer {k:>2}: mu {:>8.0e}  violation {:.2e}  inner iters {}", s.mu, s.nu, s.iters);
    }
    println!(
        "{} prescribed entries, stop {}, residual {:.4}, evaluations {}",
        fes.len(),
        rep.stop.name(),
        rep.residual,
        rep.nfge
    );
    Ok(())
}
