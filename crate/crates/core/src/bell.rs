//! Tilted CHSH Bell operators: Jordan-block observables, classical and
//! quantum values, optimal measurement angles and the optimal two-qubit
//! state.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use num_complex::Complex64;

use crate::linalg::{pauli_x, pauli_z, ComplexMatrix, DensityMatrix, HermitianMatrix};
use crate::{Error, Result};

/// Tilt parameter of the Bell functional family, restricted to [0, 2).
///
/// The endpoint 2 is excluded: the classical/quantum gap closes there and
/// the bound constants diverge, so every operation rejects it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TiltParameter(f64);

impl TiltParameter {
    pub fn new(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() || !(0.0..2.0).contains(&alpha) {
            return Err(Error::AlphaOutOfRange { alpha });
        }
        Ok(Self(alpha))
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

/// (alpha, a, b) triple selecting observables and Bell operator within the
/// two-qubit Jordan-block parametrisation; both angles range over
/// [0, pi/2].
#[derive(Clone, Copy, Debug)]
pub struct BellRealization {
    alpha: TiltParameter,
    a: f64,
    b: f64,
}

impl BellRealization {
    pub fn new(alpha: TiltParameter, a: f64, b: f64) -> Result<Self> {
        check_angle(a)?;
        check_angle(b)?;
        Ok(Self { alpha, a, b })
    }

    pub fn alpha(&self) -> TiltParameter {
        self.alpha
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }
}

pub(crate) fn check_angle(angle: f64) -> Result<()> {
    if !angle.is_finite() || !(0.0..=FRAC_PI_2).contains(&angle) {
        return Err(Error::AngleOutOfRange {
            angle,
            lo: 0.0,
            hi: FRAC_PI_2,
        });
    }
    Ok(())
}

/// Binary observable `cos(angle) X + (-1)^r sin(angle) Z`; squares to the
/// identity for any angle.
pub fn observable(angle: f64, r: u8) -> Result<HermitianMatrix> {
    assert!(r < 2, "setting index must be a bit");
    check_angle(angle)?;
    let sign = if r == 0 { 1.0 } else { -1.0 };
    let m = &pauli_x().scale_re(angle.cos()) + &pauli_z().scale_re(sign * angle.sin());
    HermitianMatrix::new(m)
}

/// The tilted CHSH operator
/// `alpha A0 (x) 1 + A0 (x) (B0 + B1) + A1 (x) (B0 - B1)`
/// for Jordan-block observables at angles `a` (Alice) and `b` (Bob).
pub fn bell_operator(real: &BellRealization) -> HermitianMatrix {
    let a0 = observable(real.a, 0).expect("validated angle");
    let a1 = observable(real.a, 1).expect("validated angle");
    let b0 = observable(real.b, 0).expect("validated angle");
    let b1 = observable(real.b, 1).expect("validated angle");
    let id = ComplexMatrix::identity(2);

    let sum_b = b0.matrix() + b1.matrix();
    let dif_b = b0.matrix() - b1.matrix();
    let w = &(&a0.matrix().scale_re(real.alpha.value()).tensor(&id) + &a0.matrix().tensor(&sum_b))
        + &a1.matrix().tensor(&dif_b);
    HermitianMatrix::new(w).expect("real combination of Hermitian terms")
}

/// Maximal classical value `2 + alpha`.
pub fn classical_value(alpha: TiltParameter) -> f64 {
    2.0 + alpha.value()
}

/// Maximal quantum value `sqrt(8 + 2 alpha^2)`.
pub fn quantum_value(alpha: TiltParameter) -> f64 {
    let a = alpha.value();
    (8.0 + 2.0 * a * a).sqrt()
}

/// Angles achieving the maximal quantum value: Alice is always maximally
/// incompatible, Bob's angle closes towards 0 as alpha grows.
pub fn optimal_angles(alpha: TiltParameter) -> (f64, f64) {
    let a = alpha.value();
    // the closed form never exceeds pi/4; clip the one-ulp overshoot of
    // asin at alpha = 0
    let b_star = ((4.0 - a * a) / 8.0).sqrt().asin().min(FRAC_PI_4);
    (FRAC_PI_4, b_star)
}

/// Schmidt angle of the optimal state.
pub fn schmidt_angle(alpha: TiltParameter) -> f64 {
    let a = alpha.value();
    0.5 * ((4.0 - a * a) / (4.0 + a * a)).sqrt().asin()
}

/// Square of the largest Schmidt coefficient of the optimal state; the
/// trivial extractability floor reachable with a product state.
pub fn largest_schmidt_sq(alpha: TiltParameter) -> f64 {
    let t = schmidt_angle(alpha);
    t.cos() * t.cos()
}

/// Pauli coefficients of the optimal state in the fixed two-qubit basis
/// order `[II, XI, ZI, IX, XX, ZX, XZ, ZZ, YY]`, normalisation included.
pub(crate) fn optimal_state_coefficients(alpha: f64) -> [f64; 9] {
    let c = (2.0 * alpha * alpha / (4.0 + alpha * alpha)).sqrt();
    let s = ((4.0 - alpha * alpha) / (4.0 + alpha * alpha)).sqrt();
    let r = std::f64::consts::FRAC_1_SQRT_2;
    [
        0.25,
        0.25 * c * r,
        0.25 * c * r,
        0.25 * c,
        0.25 * r,
        0.25 * r,
        0.25 * s * r,
        -0.25 * s * r,
        0.25 * s,
    ]
}

/// Pauli coefficients of the tilted CHSH operator, same basis order as
/// [`optimal_state_coefficients`].
pub(crate) fn bell_coefficients(alpha: f64, a: f64, b: f64) -> [f64; 9] {
    let (sa, ca) = a.sin_cos();
    let (sb, cb) = b.sin_cos();
    [
        0.0,
        alpha * ca,
        alpha * sa,
        0.0,
        2.0 * ca * cb,
        2.0 * sa * cb,
        2.0 * ca * sb,
        -2.0 * sa * sb,
        0.0,
    ]
}

/// Assemble a two-qubit operator from coefficients in the basis order
/// `[II, XI, ZI, IX, XX, ZX, XZ, ZZ, YY]`. All nine basis matrices are
/// real, so the result is a real symmetric 4x4 matrix.
pub(crate) fn assemble_two_qubit(co: &[f64; 9], out: &mut [Complex64; 16]) {
    let [ii, xi, zi, ix, xx, zx, xz, zz, yy] = *co;
    let re = |x: f64| Complex64::new(x, 0.0);
    *out = [Complex64::new(0.0, 0.0); 16];
    out[0] = re(ii + zi + zz);
    out[5] = re(ii + zi - zz);
    out[10] = re(ii - zi - zz);
    out[15] = re(ii - zi + zz);
    out[1] = re(ix + zx);
    out[4] = out[1];
    out[14] = re(ix - zx);
    out[11] = out[14];
    out[2] = re(xi + xz);
    out[8] = out[2];
    out[7] = re(xi - xz);
    out[13] = out[7];
    out[3] = re(xx - yy);
    out[12] = out[3];
    out[6] = re(xx + yy);
    out[9] = out[6];
}

pub(crate) fn two_qubit_from_coefficients(co: &[f64; 9]) -> ComplexMatrix {
    let mut buf = [Complex64::new(0.0, 0.0); 16];
    assemble_two_qubit(co, &mut buf);
    ComplexMatrix::new(4, 4, buf.to_vec())
}

/// The state maximally violating the tilted CHSH inequality, built from
/// its Pauli expansion so it lives in the same basis as the extraction
/// channels and Bell operators.
pub fn optimal_state(alpha: TiltParameter) -> DensityMatrix {
    let m = two_qubit_from_coefficients(&optimal_state_coefficients(alpha.value()));
    DensityMatrix::new(HermitianMatrix::new(m).expect("real symmetric"))
        .expect("pure state of the expansion")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::pauli_y;

    const SQRT2: f64 = std::f64::consts::SQRT_2;

    #[test]
    fn observable_special_cases() {
        let x = observable(0.0, 0).unwrap();
        assert!(x.matrix().approx_eq(&pauli_x(), 0.0));

        let mz = observable(FRAC_PI_2, 1).unwrap();
        assert!(mz.matrix().approx_eq(&pauli_z().scale_re(-1.0), 1e-16));

        let h = observable(FRAC_PI_4, 0).unwrap();
        let expect = (&pauli_x() + &pauli_z()).scale_re(1.0 / SQRT2);
        assert!(h.matrix().approx_eq(&expect, 1e-15));

        // squares to the identity at any angle
        for angle in [0.0, 0.3, 1.1, FRAC_PI_2] {
            let o = observable(angle, 1).unwrap();
            let sq = o.matrix().matmul(o.matrix());
            assert!(sq.approx_eq(&ComplexMatrix::identity(2), 1e-15));
        }

        assert!(observable(-0.1, 0).is_err());
        assert!(observable(2.0, 0).is_err());
    }

    #[test]
    fn bell_operator_matches_coefficient_expansion() {
        // The operator built from observables must match the expanded
        // Pauli form term by term.
        for &(alpha, a, b) in &[
            (0.0, FRAC_PI_4, FRAC_PI_4),
            (0.5, 0.2, 1.3),
            (1.0, 0.0, 0.0),
            (1.9, 1.5, 0.7),
        ] {
            let tilt = TiltParameter::new(alpha).unwrap();
            let real = BellRealization::new(tilt, a, b).unwrap();
            let w = bell_operator(&real);
            let expanded = two_qubit_from_coefficients(&bell_coefficients(alpha, a, b));
            assert!(w.matrix().approx_eq(&expanded, 1e-14));
        }
    }

    #[test]
    fn bell_operator_spectrum_at_chsh_optimum() {
        // Oracle: W^2 = 4 I + 4 sin(2a) sin(2b) Y(x)Y, so at the optimum the
        // spectrum is {-2 sqrt(2), 0, 0, 2 sqrt(2)}; the top eigenvalue is
        // the quantum value at alpha = 0.
        let tilt = TiltParameter::new(0.0).unwrap();
        let real = BellRealization::new(tilt, FRAC_PI_4, FRAC_PI_4).unwrap();
        let w = bell_operator(&real);
        let w_sq = w.matrix().matmul(w.matrix());
        let oracle =
            &ComplexMatrix::identity(4).scale_re(4.0) + &pauli_y().tensor(&pauli_y()).scale_re(4.0);
        assert!(w_sq.approx_eq(&oracle, 1e-13));

        let vals = w.eigenvalues();
        let expect = [-2.0 * SQRT2, 0.0, 0.0, 2.0 * SQRT2];
        for (v, e) in vals.iter().zip(expect.iter()) {
            assert!((v - e).abs() < 1e-12, "spectrum {vals:?}");
        }
        assert!((vals[3] - quantum_value(tilt)).abs() < 1e-12);
    }

    #[test]
    fn bell_operator_degenerate_angles() {
        // a = b = 0 collapses to 2 X(x)X.
        let tilt = TiltParameter::new(0.0).unwrap();
        let real = BellRealization::new(tilt, 0.0, 0.0).unwrap();
        let w = bell_operator(&real);
        assert!(w
            .matrix()
            .approx_eq(&pauli_x().tensor(&pauli_x()).scale_re(2.0), 1e-15));
        let vals = w.eigenvalues();
        for (v, e) in vals.iter().zip([-2.0, -2.0, 2.0, 2.0].iter()) {
            assert!((v - e).abs() < 1e-13);
        }
    }

    #[test]
    fn bell_operator_norm_bound() {
        // lambda_max <= alpha + 4 everywhere.
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let alpha = rng.random_range(0.0..2.0);
            let a = rng.random_range(0.0..FRAC_PI_2);
            let b = rng.random_range(0.0..FRAC_PI_2);
            let tilt = TiltParameter::new(alpha).unwrap();
            let w = bell_operator(&BellRealization::new(tilt, a, b).unwrap());
            assert!(w.max_eigenvalue() <= alpha + 4.0 + 1e-12);
        }
    }

    #[test]
    fn classical_and_quantum_values() {
        let zero = TiltParameter::new(0.0).unwrap();
        assert_eq!(classical_value(zero), 2.0);
        assert!((quantum_value(zero) - 2.0 * SQRT2).abs() < 1e-15);

        let one = TiltParameter::new(1.0).unwrap();
        assert_eq!(classical_value(one), 3.0);
        assert!((quantum_value(one) - 10.0f64.sqrt()).abs() < 1e-15);

        // both approach 4 as alpha -> 2
        let near = TiltParameter::new(1.999_999).unwrap();
        assert!((classical_value(near) - 4.0).abs() < 1e-5);
        assert!((quantum_value(near) - 4.0).abs() < 1e-5);

        assert!(TiltParameter::new(2.0).is_err());
        assert!(TiltParameter::new(-0.1).is_err());
    }

    #[test]
    fn optimal_angles_limits() {
        let zero = TiltParameter::new(0.0).unwrap();
        let (a0, b0) = optimal_angles(zero);
        assert!((a0 - FRAC_PI_4).abs() < 1e-15);
        assert!((b0 - FRAC_PI_4).abs() < 1e-15);

        let near = TiltParameter::new(1.999_999).unwrap();
        let (_, b) = optimal_angles(near);
        assert!(b < 1e-3);
    }

    #[test]
    fn optimal_state_is_pure_and_achieves_quantum_value() {
        for &alpha in &[0.0, 0.5, 1.0, 1.5, 1.9] {
            let tilt = TiltParameter::new(alpha).unwrap();
            let phi = optimal_state(tilt);
            assert!((phi.matrix().trace().re - 1.0).abs() < 1e-12);
            assert!((phi.purity() - 1.0).abs() < 1e-12);

            let (a, b) = optimal_angles(tilt);
            let w = bell_operator(&BellRealization::new(tilt, a, b).unwrap());
            let value = w.matrix().hs_inner(phi.matrix()).unwrap().re;
            assert!(
                (value - quantum_value(tilt)).abs() < 1e-10,
                "alpha = {alpha}: {value} vs {}",
                quantum_value(tilt)
            );
        }
    }

    #[test]
    fn optimal_state_marginals_are_schmidt_weights() {
        for &alpha in &[0.0, 0.7, 1.3, 1.95] {
            let tilt = TiltParameter::new(alpha).unwrap();
            let phi = optimal_state(tilt);
            let theta = schmidt_angle(tilt);
            let want = [theta.sin() * theta.sin(), theta.cos() * theta.cos()];
            for keep in [&[0usize][..], &[1usize][..]] {
                let red = phi.matrix().partial_trace(&[2, 2], keep).unwrap();
                let vals = HermitianMatrix::new(red).unwrap().eigenvalues();
                assert!((vals[0] - want[0]).abs() < 1e-12);
                assert!((vals[1] - want[1]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bell_operator_continuity_in_angles() {
        let tilt = TiltParameter::new(1.2).unwrap();
        let delta = 1e-3;
        for &(a, b) in &[(0.1, 0.2), (0.7, 1.4), (1.5, 0.01)] {
            let w1 = bell_operator(&BellRealization::new(tilt, a, b).unwrap());
            let w2 = bell_operator(&BellRealization::new(tilt, a + delta, b).unwrap());
            let diff = (w1.matrix() - w2.matrix()).inf_norm();
            assert!(diff <= (tilt.value() + 4.0) * delta);
        }
    }

    #[test]
    fn bell_value_below_max_eigenvalue_for_random_states() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let tilt = TiltParameter::new(0.8).unwrap();
        let w = bell_operator(&BellRealization::new(tilt, 0.4, 0.9).unwrap());
        let top = w.max_eigenvalue();
        for _ in 0..30 {
            let rho = crate::counterexample::random_density(&mut rng, 4);
            let val = w.matrix().hs_inner(rho.matrix()).unwrap().re;
            assert!(val <= top + 1e-10);
        }
    }
}
