//! Property-based and bulk-sample invariants of the linear-algebra core
//! and the certificate machinery.

use proptest::prelude::*;

use tiltcert_core::bell::TiltParameter;
use tiltcert_core::counterexample::{random_hermitian, stream_rng};
use tiltcert_core::linalg::{ComplexMatrix, HermitianMatrix};

use num_complex::Complex64;

fn matrix_strategy(dim: usize) -> impl Strategy<Value = ComplexMatrix> {
    prop::collection::vec(-10.0f64..10.0, dim * dim * 2).prop_map(move |xs| {
        ComplexMatrix::from_fn(dim, dim, |i, j| {
            let k = (i * dim + j) * 2;
            Complex64::new(xs[k], xs[k + 1])
        })
    })
}

proptest! {
    #[test]
    fn tensor_is_bilinear(
        a in matrix_strategy(2),
        b in matrix_strategy(2),
        c in matrix_strategy(3),
        x in -5.0f64..5.0,
    ) {
        // (a + x b) (x) c = a (x) c + x (b (x) c)
        let lhs = (&a + &b.scale_re(x)).tensor(&c);
        let rhs = &a.tensor(&c) + &b.scale_re(x).tensor(&c);
        prop_assert!(lhs.approx_eq(&rhs, 1e-12));

        // and in the second slot
        let lhs2 = c.tensor(&(&a + &b.scale_re(x)));
        let rhs2 = &c.tensor(&a) + &c.tensor(&b).scale_re(x);
        prop_assert!(lhs2.approx_eq(&rhs2, 1e-12));
    }

    #[test]
    fn tensor_is_associative(
        a in matrix_strategy(2),
        b in matrix_strategy(3),
        c in matrix_strategy(2),
    ) {
        let lhs = a.tensor(&b).tensor(&c);
        let rhs = a.tensor(&b.tensor(&c));
        prop_assert!(lhs.approx_eq(&rhs, 1e-12));
    }

    #[test]
    fn hs_inner_is_the_squared_frobenius_norm(a in matrix_strategy(4)) {
        let ip = a.hs_inner(&a).unwrap();
        prop_assert!(ip.re >= 0.0);
        prop_assert!(ip.im.abs() < 1e-12);
        let norm = a.frobenius_norm();
        prop_assert!((ip.re - norm * norm).abs() < 1e-9 * (1.0 + norm * norm));
    }

    #[test]
    fn partial_trace_preserves_trace(a in matrix_strategy(6)) {
        for keep in [&[0usize][..], &[1usize][..], &[][..], &[0usize, 1][..]] {
            let reduced = a.partial_trace(&[2, 3], keep).unwrap();
            let diff = (reduced.trace() - a.trace()).norm();
            prop_assert!(diff < 1e-12 * (1.0 + a.trace().norm()));
        }
    }

    #[test]
    fn eigendecomposition_reconstructs_small_hermitian(a in matrix_strategy(5)) {
        let h = HermitianMatrix::new((&a + &a.adjoint()).scale_re(0.5)).unwrap();
        let spec = h.eig();
        let v = spec.eigenvectors().unwrap();
        let lam = ComplexMatrix::diagonal(spec.eigenvalues());
        let rebuilt = v.matmul(&lam).matmul(&v.adjoint());
        let scale = h.matrix().inf_norm().max(1.0);
        prop_assert!(rebuilt.approx_eq(h.matrix(), 1e-11 * scale));

        // eigenvector columns are orthonormal
        let gram = v.adjoint().matmul(v);
        prop_assert!(gram.approx_eq(&ComplexMatrix::identity(5), 1e-10));
    }
}

#[test]
fn eigendecomposition_reconstructs_ten_thousand_matrices() {
    // 4500 each of dims 2 and 4 plus 1000 of dim 36
    let cases: &[(usize, u64)] = &[(2, 4500), (4, 4500), (36, 1000)];
    let mut checked = 0u64;
    for &(dim, count) in cases {
        for idx in 0..count {
            let mut rng = stream_rng(0xE16, idx + checked);
            let h = random_hermitian(&mut rng, dim);
            let spec = h.eig();
            let v = spec.eigenvectors().unwrap();
            let lam = ComplexMatrix::diagonal(spec.eigenvalues());
            let rebuilt = v.matmul(&lam).matmul(&v.adjoint());
            let scale = h.matrix().inf_norm().max(1.0);
            let err = (&rebuilt - h.matrix()).max_abs();
            assert!(
                err <= 1e-11 * scale,
                "dim {dim} sample {idx}: reconstruction error {err:.3e} vs scale {scale:.3e}"
            );
            // ascending order
            let vals = spec.eigenvalues();
            assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        }
        checked += count;
    }
    assert_eq!(checked, 10_000);
}

#[test]
fn eigenvalues_are_deterministic_for_identical_bits() {
    let mut rng = stream_rng(99, 0);
    let h = random_hermitian(&mut rng, 36);
    let first = h.eigenvalues();
    for _ in 0..3 {
        let again = h.eigenvalues();
        for (a, b) in first.iter().zip(again.iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}

#[test]
fn certificate_symmetry_on_random_cells() {
    // spectra of T(a, b) and the conjugated T(pi/2 - a, b) agree; the
    // full 1e3-cell sweep lives in the acceptance suite
    use rand::Rng;
    use tiltcert_core::certifier::{solve_constants, t_operator};
    use tiltcert_core::linalg::{pauli_x, pauli_z};

    let u = (&pauli_x() + &pauli_z())
        .scale_re(std::f64::consts::FRAC_1_SQRT_2)
        .tensor(&pauli_x());
    let mut rng = stream_rng(7, 3);
    for _ in 0..50 {
        let alpha = TiltParameter::new(rng.random_range(0.0..1.95)).unwrap();
        let a = rng.random_range(0.0..std::f64::consts::FRAC_PI_2);
        let b = rng.random_range(0.0..std::f64::consts::FRAC_PI_2);
        let c = solve_constants(alpha).unwrap();
        let t1 = t_operator(alpha, a, b, &c).unwrap();
        let t2 = t_operator(alpha, std::f64::consts::FRAC_PI_2 - a, b, &c).unwrap();
        let conj = HermitianMatrix::new(u.matmul(t2.matrix()).matmul(&u.adjoint())).unwrap();
        for (x, y) in t1.eigenvalues().iter().zip(conj.eigenvalues().iter()) {
            assert!((x - y).abs() < 1e-10, "alpha {}", alpha.value());
        }
    }
}
