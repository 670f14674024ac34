use num_complex::Complex64;
use proptest::prelude::*;

use projgeo::numkernel::random::{random_complex, random_hermitian, random_skew, random_unitary, seeded_rng};
use projgeo::numkernel::{
    expm_skew, herm_eig, logm_unitary_principal, op_norm, polar_unitary, singular_values, CMatrix, Tolerance,
};

fn tol() -> Tolerance {
    Tolerance::default()
}

fn unitarity_defect(u: &CMatrix) -> f64 {
    op_norm(&(&(&u.adjoint() * u) - &CMatrix::identity(u.rows()))).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn herm_eig_reconstructs(seed in any::<u64>(), n in 2usize..=16) {
        let a = random_hermitian(n, &mut seeded_rng(seed));
        let e = herm_eig(&a, &tol()).unwrap();
        let norm = op_norm(&a).unwrap();
        prop_assert!(op_norm(&(&e.reconstruct() - &a)).unwrap() <= 1e-12 * norm);
        prop_assert!(unitarity_defect(&e.eigenvectors) <= 1e-12);
        prop_assert!(e.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn op_norm_unitarily_invariant(seed in any::<u64>(), rows in 1usize..=10, cols in 1usize..=10) {
        let mut rng = seeded_rng(seed);
        let a = random_complex(rows, cols, &mut rng);
        let u = random_unitary(rows, &mut rng);
        let v = random_unitary(cols, &mut rng);
        let lhs = op_norm(&(&(&u * &a) * &v)).unwrap();
        prop_assert!((lhs - op_norm(&a).unwrap()).abs() <= 1e-12 * lhs.max(1.0));
    }

    #[test]
    fn op_norm_squared_is_top_gram_eigenvalue(seed in any::<u64>(), n in 1usize..=10) {
        let a = random_complex(n, n, &mut seeded_rng(seed));
        let gram = &a.adjoint() * &a;
        let top = *herm_eig(&gram, &tol()).unwrap().eigenvalues.last().unwrap();
        let s = op_norm(&a).unwrap();
        prop_assert!((s * s - top).abs() <= 1e-12 * top);
    }

    #[test]
    fn log_inverts_exp_below_half_pi(seed in any::<u64>(), n in 1usize..=10, frac in 0.0f64..1.0) {
        let z0 = random_skew(n, &mut seeded_rng(seed));
        let norm = op_norm(&z0).unwrap();
        prop_assume!(norm > 0.0);
        let z = z0.scale_re(frac * (std::f64::consts::FRAC_PI_2 - 0.01) / norm);
        let w = expm_skew(&z, &tol()).unwrap();
        prop_assert!(unitarity_defect(&w) <= 1e-12);
        let log = logm_unitary_principal(&w, &tol(), true).unwrap();
        prop_assert!(op_norm(&(&log.log - &z)).unwrap() <= 1e-9);
        prop_assert!(log.within_half_pi);
    }

    #[test]
    fn polar_of_hermitian_is_sign(seed in any::<u64>(), n in 1usize..=10) {
        let a = random_hermitian(n, &mut seeded_rng(seed));
        let s = singular_values(&a).unwrap();
        prop_assume!(*s.last().unwrap() > 1e-3 * s[0]);
        let v = polar_unitary(&a, &tol()).unwrap();
        prop_assert!(op_norm(&(&v - &v.adjoint())).unwrap() <= 1e-11);
        prop_assert!(unitarity_defect(&v) <= 1e-11);
        // |A| from the eigendecomposition of A*A, independent of the sign computation
        let abs = herm_eig(&(&a * &a), &tol()).unwrap().apply_fn(|l| Complex64::new(l.max(0.0).sqrt(), 0.0));
        prop_assert!(op_norm(&(&(&v * &abs) - &a)).unwrap() <= 1e-11 * s[0]);
    }
}
