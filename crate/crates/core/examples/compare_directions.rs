//! Paired comparison of the descent directions D_1/2 (canonical gradient) and
//! D_1/4 on heterogeneous quadratics with a known optimum.

use afbb::bench::{compare_schemes, ProblemSpec, Variant};
use afbb::problems::LMode;
use afbb::solver::SolverConfig;

fn main() -> afbb::Result<()> {
    let spec = ProblemSpec::Balogh {
        n: 200,
        l_mode: LMode::MinusOne,
    };
    let variants: Vec<Variant> = ["new:0.5", "new:0.25"].iter().map(|s| s.parse()).collect::<afbb::Result<_>>()?;
    let seeds: Vec<u64> = (0..20).collect();
    for p in [2, 10, 20] {
        let rows = compare_schemes(&spec, p, &variants, &seeds, &SolverConfig::default(), 0)?;
        for row in rows {
            println!(
                "p={p:<3} {:<20} mean nfge {:>7.1}  mean error {:.1e}  saved {}",
                row.label,
                row.mean_nfge,
                row.mean_err.unwrap_or(f64::NAN),
                row.saved_ratio.map_or("-".into(), |s| format!("{s:+.1}%"))
            );
        }
    }
    Ok(())
}
