use afbb::manifold::{compute_d_rho, feasibility_error, StiefelPoint};
use afbb::problems::matrix_market::{read_matrix_market, write_matrix_market_array, write_matrix_market_symmetric};
use afbb::problems::FixedEntrySet;
use afbb::random::{gaussian_matrix, random_symmetric, rng_from_seed};
use afbb::retraction::{lowrank_direction, retract_lowrank_column, retract_new, retract_polar, GTau};
use afbb::DenseMatrix;
use proptest::prelude::*;

fn dims() -> impl Strategy<Value = (usize, usize)> {
    (1usize..=24).prop_flat_map(|n| (Just(n), 1..=n))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn d_rho_is_tangent((n, p) in dims(), seed in any::<u64>(), rho in 0.05f64..3.0) {
        let mut rng = rng_from_seed(seed);
        let x = StiefelPoint::random(n, p, &mut rng);
        let g = gaussian_matrix(n, p, &mut rng);
        let d = compute_d_rho(&x, &g, rho).unwrap();
        let xtd = x.mat().tr_mul(d.mat());
        prop_assert!((&xtd + xtd.transpose()).norm() <= 1e-12 * (1.0 + g.norm()));
    }

    #[test]
    fn new_scheme_stays_feasible_and_shortcut_agrees(
        (n, p) in dims(), seed in any::<u64>(), ups in 0.0f64..10.0, damped in any::<bool>()
    ) {
        let mut rng = rng_from_seed(seed);
        let x = StiefelPoint::random(n, p, &mut rng);
        let g = gaussian_matrix(n, p, &mut rng);
        let d = compute_d_rho(&x, &g, 0.25).unwrap();
        prop_assume!(d.norm() > 1e-12);
        let gtau = if damped { GTau::ExpDamped } else { GTau::Linear };
        let ev = retract_new(&x, &d, ups / d.norm(), gtau).unwrap();
        prop_assert!(feasibility_error(&ev.y) <= 1e-13);
        if let Some(ss) = ev.step_norm_sq {
            let direct = (&ev.y - x.mat()).norm_squared();
            prop_assert!((ss - direct).abs() <= 1e-9 * direct.max(1.0));
        }
    }

    #[test]
    fn polar_and_lowrank_stay_feasible((n, p) in dims(), seed in any::<u64>(), ups in 0.0f64..10.0) {
        let mut rng = rng_from_seed(seed);
        let x = StiefelPoint::random(n, p, &mut rng);
        let g = gaussian_matrix(n, p, &mut rng);
        let d = compute_d_rho(&x, &g, 0.5).unwrap();
        prop_assume!(d.norm() > 1e-12);
        let y = retract_polar(&x, &d, ups / d.norm()).unwrap().y;
        prop_assert!(feasibility_error(&y) <= 1e-13);
        let (_, e) = lowrank_direction(x.mat(), &g);
        prop_assume!(e.norm() > 1e-12);
        let y = retract_lowrank_column(&x, &g, ups / e.norm()).unwrap().y;
        prop_assert!(feasibility_error(&y) <= 1e-13);
    }

    #[test]
    fn matrix_market_round_trips(rows in 1usize..12, cols in 1usize..12, seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let a = gaussian_matrix(rows, cols, &mut rng);
        let mut buf = Vec::new();
        write_matrix_market_array(&mut buf, &a).unwrap();
        prop_assert_eq!(read_matrix_market(buf.as_slice()).unwrap(), a);
        let s = random_symmetric(rows, &mut rng);
        let mut buf = Vec::new();
        write_matrix_market_symmetric(&mut buf, &s).unwrap();
        prop_assert_eq!(read_matrix_market(buf.as_slice()).unwrap(), s);
    }

    #[test]
    fn fixed_entries_round_trip(n in 2usize..40, per_row in 0usize..5, q in -1.0f64..=1.0, seed in any::<u64>()) {
        let fes = FixedEntrySet::sample_zero_pattern(n, per_row, q, &mut rng_from_seed(seed)).unwrap();
        for (i, j, v) in fes.iter() {
            prop_assert!(i > j && i < n);
            prop_assert_eq!(v, q);
        }
        let mut buf = Vec::new();
        fes.write(&mut buf).unwrap();
        let back = FixedEntrySet::read(n, buf.as_slice()).unwrap();
        prop_assert_eq!(back.iter().collect::<Vec<_>>(), fes.iter().collect::<Vec<_>>());
    }
}

#[test]
fn identity_step_of_zero_length() {
    let x = StiefelPoint::identity(5, 2);
    let g = DenseMatrix::zeros(5, 2);
    let d = compute_d_rho(&x, &g, 0.25).unwrap();
    let y = retract_new(&x, &d, 1.0, GTau::Linear).unwrap().y;
    assert_eq!(&y, x.mat());
}
