//! Every update scheme on one instance: where it lands, how feasible the
//! result is, and how far the trial point moved.

use afbb::linalg::inner;
use afbb::manifold::{compute_d_rho, feasibility_error, StiefelPoint};
use afbb::random::{gaussian_matrix, rng_from_seed};
use afbb::retraction::*;

fn main() -> afbb::Result<()> {
    let mut rng = rng_from_seed(5);
    let (n, p) = (30, 4);
    let x = StiefelPoint::random(n, p, &mut rng);
    let g = gaussian_matrix(n, p, &mut rng);
    let d = compute_d_rho(&x, &g, 0.25)?;
    let tau = 1.5 / d.norm();
    let results = [
        ("new", retract_new(&x, &d, tau, GTau::Linear)?),
        ("new, damped g", retract_new(&x, &d, tau, GTau::ExpDamped)?),
        ("new, controlled", retract_new_controlled(x.mat(), &g, 0.25, tau, GTau::Linear)?),
        ("polar", retract_polar(&x, &d, tau)?),
        ("qr", retract_qr(&x, &d, tau)?),
        ("gradient projection", retract_gradproj(&x, &g, tau)?),
        ("wen-yin", retract_wenyin(&x, &d, tau)?),
        ("geodesic", retract_geodesic(&x, &d, tau)?),
        ("low-rank column", retract_lowrank_column(&x, &g, tau)?),
    ];
    println!("tau = {tau:.4}, slope -<G, D> = {:.4}", -inner(&g, d.mat()));
    for (name, ev) in results {
        println!(
            "{name:<20} ‖Y - X‖ {:.6}  ‖Y^T Y - I‖ {:.1e}  <G, Y - X> {:+.6}",
            (&ev.y - x.mat()).norm(),
            feasibility_error(&ev.y),
            inner(&g, &(&ev.y - x.mat()))
        );
    }
    Ok(())
}
