use std::f64::consts::FRAC_PI_2;

use proptest::prelude::*;

use projgeo::geodesic::{curve_length, minimal_exponent, minimality_competitors, unique_minimal_check};
use projgeo::numkernel::random::{random_unitary, seeded_rng};
use projgeo::numkernel::{op_norm, CMatrix, Tolerance};
use projgeo::projection::{make_projection, random_pair, Projection};

fn tol() -> Tolerance {
    Tolerance::default()
}

fn dist(a: &CMatrix, b: &CMatrix) -> f64 {
    op_norm(&(a - b)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn minimal_exponent_properties(seed in any::<u64>(), n in 1usize..=16) {
        let (p, q) = random_pair(n, true, &mut seeded_rng(seed));
        let seg = minimal_exponent(&p, &q, None, &tol()).unwrap();
        let z = seg.exponent();
        prop_assert!(dist(seg.evaluate(1.0).unwrap().matrix(), q.matrix()) <= 1e-9);
        prop_assert!(op_norm(&(z + &z.adjoint())).unwrap() <= 1e-9);
        prop_assert!(seg.codiagonal_residual().unwrap() <= 1e-9);
        prop_assert!(seg.norm() <= FRAC_PI_2 + 1e-12);
        prop_assert!(seg.normalized());
        prop_assert!(dist(seg.evaluate(0.0).unwrap().matrix(), p.matrix()) <= 1e-11);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn constant_speed(seed in any::<u64>(), n in 1usize..=10) {
        let (p, q) = random_pair(n, true, &mut seeded_rng(seed));
        let seg = minimal_exponent(&p, &q, None, &tol()).unwrap();
        for k in 0..10 {
            let t = k as f64 / 9.0;
            prop_assert!((seg.velocity(t).unwrap().norm() - seg.norm()).abs() <= 1e-9);
        }
    }

    #[test]
    fn chordal_length_approaches_norm(seed in any::<u64>(), n in 1usize..=8) {
        let (p, q) = random_pair(n, true, &mut seeded_rng(seed));
        let seg = minimal_exponent(&p, &q, None, &tol()).unwrap();
        let l = curve_length(&seg, 2000).unwrap();
        prop_assert!(l >= seg.norm() - 1e-4 && l <= seg.norm() + 1e-12);
    }

    #[test]
    fn conjugation_equivariance(seed in any::<u64>(), n in 1usize..=10) {
        let mut rng = seeded_rng(seed);
        let (p, q) = random_pair(n, true, &mut rng);
        let fs = projgeo::projection::halmos_decompose(&p, &q, &tol()).unwrap();
        prop_assume!(fs.m10.cols() == 0);
        let u = random_unitary(n, &mut rng);
        let conj = |x: &Projection| make_projection(&(&(&u * x.matrix()) * &u.adjoint())).unwrap();
        let z = minimal_exponent(&p, &q, None, &tol()).unwrap();
        let zc = minimal_exponent(&conj(&p), &conj(&q), None, &tol()).unwrap();
        prop_assert!(dist(zc.exponent(), &(&(&u * z.exponent()) * &u.adjoint())) <= 1e-8);
    }

    #[test]
    fn close_pairs_are_unique(seed in any::<u64>(), n in 1usize..=10) {
        let (p, q) = random_pair(n, true, &mut seeded_rng(seed));
        prop_assume!(op_norm(&(p.matrix() - q.matrix())).unwrap() < 1.0 - 1e-6);
        let rep = unique_minimal_check(&p, &q, &tol(), seed).unwrap();
        prop_assert_eq!(rep.index.as_array(), [0, 0]);
        prop_assert!(rep.unique);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(30))]

    #[test]
    fn competitors_never_shorter(seed in any::<u64>(), n in 2usize..=8) {
        let (p, q) = random_pair(n, true, &mut seeded_rng(seed));
        let rep = minimality_competitors(&p, &q, 30, seed, &tol()).unwrap();
        prop_assert!(rep.worst_margin() >= -1e-6);
    }
}
