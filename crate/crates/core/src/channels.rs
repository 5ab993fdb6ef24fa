//! Extraction channels: the dephasing family with its damping profile and
//! effective-angle remap, Choi representations, duals, and the certificate
//! operator K.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use crate::bell::{
    assemble_two_qubit, check_angle, optimal_angles, optimal_state_coefficients, TiltParameter,
};
use crate::linalg::{pauli_x, pauli_z, ComplexMatrix, HermitianMatrix, C0};
use crate::{Error, Result};

/// Floor on Choi eigenvalues.
pub const CHOI_PSD_TOL: f64 = 1e-10;
/// Tolerance on the trace-preservation marginal of a Choi operator.
pub const CHOI_MARGINAL_TOL: f64 = 1e-10;

const KRAUS_EIG_CUTOFF: f64 = 1e-12;

/// Dephasing axis of the channel family.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DephasingAxis {
    X,
    Z,
}

impl DephasingAxis {
    pub fn matrix(self) -> ComplexMatrix {
        match self {
            DephasingAxis::X => pauli_x(),
            DephasingAxis::Z => pauli_z(),
        }
    }
}

/// Damping profile of the dephasing family: a weight `g` on `[0, pi/2]`
/// with `g(0) = g(pi/2) = 0` and `g(pi/4) = 1`, plus the axis selector
/// with crossover at `pi/4` (the half-open convention: X on `[0, pi/4]`,
/// Z on `(pi/4, pi/2]`).
///
/// The default weight is `(1 + sqrt(2)) (sin x + cos x - 1)`. The profile
/// is swappable; the boundary and range conditions are enforced as tested
/// invariants rather than baked into the type.
#[derive(Clone, Copy)]
pub struct DampingProfile {
    g: fn(f64) -> f64,
}

fn standard_g(x: f64) -> f64 {
    (1.0 + std::f64::consts::SQRT_2) * (x.sin() + x.cos() - 1.0)
}

impl DampingProfile {
    pub fn standard() -> Self {
        Self { g: standard_g }
    }

    pub fn with_weight(g: fn(f64) -> f64) -> Self {
        Self { g }
    }

    pub fn g(&self, x: f64) -> f64 {
        (self.g)(x)
    }

    pub fn axis(x: f64) -> DephasingAxis {
        if x <= FRAC_PI_4 {
            DephasingAxis::X
        } else {
            DephasingAxis::Z
        }
    }
}

impl Default for DampingProfile {
    fn default() -> Self {
        Self::standard()
    }
}

/// Piecewise-linear remap placing Bob's identity channel at his optimal
/// angle: `[0, b*] -> [0, pi/4]` and `[b*, pi/2] -> [pi/4, pi/2]`.
#[derive(Clone, Copy, Debug)]
pub struct EffectiveAngle {
    b_star: f64,
}

impl EffectiveAngle {
    pub fn new(b_star: f64) -> Result<Self> {
        if !b_star.is_finite() || b_star <= 0.0 || b_star > FRAC_PI_4 {
            return Err(Error::AngleOutOfRange {
                angle: b_star,
                lo: 0.0,
                hi: FRAC_PI_4,
            });
        }
        Ok(Self { b_star })
    }

    pub fn for_alpha(alpha: TiltParameter) -> Self {
        let (_, b_star) = optimal_angles(alpha);
        Self::new(b_star).expect("b* lies in (0, pi/4] for alpha in [0, 2)")
    }

    pub fn b_star(&self) -> f64 {
        self.b_star
    }

    pub fn map(&self, x: f64) -> f64 {
        if x <= self.b_star {
            FRAC_PI_4 * (x / self.b_star)
        } else {
            FRAC_PI_2 - FRAC_PI_4 * (PI - 2.0 * x) / (PI - 2.0 * self.b_star)
        }
    }
}

/// Completely positive trace-preserving map on qubit operators, stored as
/// an unnormalised 4x4 Choi operator with the input subsystem first.
#[derive(Clone, Debug)]
pub struct QubitChannel {
    choi: HermitianMatrix,
}

impl QubitChannel {
    /// Validates positivity and the trace-preservation marginal.
    pub fn from_choi(choi: HermitianMatrix) -> Result<Self> {
        if choi.dim() != 4 {
            return Err(Error::DimMismatch {
                left: choi.dim(),
                right: 4,
            });
        }
        let min = choi.min_eigenvalue();
        if min < -CHOI_PSD_TOL {
            return Err(Error::NotDensity {
                reason: format!("Choi operator has eigenvalue {min:.3e}"),
            });
        }
        let marginal = choi.matrix().partial_trace(&[2, 2], &[0])?;
        if !marginal.approx_eq(&ComplexMatrix::identity(2), CHOI_MARGINAL_TOL) {
            return Err(Error::NotDensity {
                reason: "Choi marginal over the output is not the identity".into(),
            });
        }
        Ok(Self { choi })
    }

    pub fn from_kraus(kraus: &[ComplexMatrix]) -> Result<Self> {
        let mut choi = ComplexMatrix::zeros(4, 4);
        for k in kraus {
            assert_eq!((k.rows(), k.cols()), (2, 2), "qubit Kraus operators");
            // w[(i, m)] = K[m][i], the Choi vector of a single Kraus term
            let mut w = [C0; 4];
            for i in 0..2 {
                for m in 0..2 {
                    w[i * 2 + m] = k.get(m, i);
                }
            }
            for r in 0..4 {
                for c in 0..4 {
                    let v = choi.get(r, c) + w[r] * w[c].conj();
                    choi.set(r, c, v);
                }
            }
        }
        Self::from_choi(HermitianMatrix::new(choi)?)
    }

    pub fn identity() -> Self {
        Self::from_kraus(&[ComplexMatrix::identity(2)]).expect("identity channel")
    }

    pub fn choi(&self) -> &HermitianMatrix {
        &self.choi
    }

    /// Kraus decomposition recovered from the Choi eigendecomposition;
    /// eigenvalues below 1e-12 are dropped.
    pub fn kraus(&self) -> Vec<ComplexMatrix> {
        let spec = self.choi.eig();
        let vecs = spec.eigenvectors().expect("with vectors");
        let mut out = Vec::new();
        for (k, &val) in spec.eigenvalues().iter().enumerate() {
            if val <= KRAUS_EIG_CUTOFF {
                continue;
            }
            let w = val.sqrt();
            let op = ComplexMatrix::from_fn(2, 2, |m, i| vecs.get(i * 2 + m, k) * w);
            out.push(op);
        }
        out
    }

    /// Channel action `tr_in[C (X^T (x) 1)]`.
    pub fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        if x.rows() != 2 || x.cols() != 2 {
            return Err(Error::DimMismatch {
                left: x.rows().max(x.cols()),
                right: 2,
            });
        }
        let arg = x.transpose().tensor(&ComplexMatrix::identity(2));
        self.choi.matrix().matmul(&arg).partial_trace(&[2, 2], &[1])
    }

    /// Dual-map action, satisfying `<L(A), B> = <A, L^dag(B)>`.
    pub fn dual_apply(&self, y: &ComplexMatrix) -> Result<ComplexMatrix> {
        if y.rows() != 2 || y.cols() != 2 {
            return Err(Error::DimMismatch {
                left: y.rows().max(y.cols()),
                right: 2,
            });
        }
        let arg = ComplexMatrix::identity(2).tensor(y);
        Ok(self
            .choi
            .matrix()
            .matmul(&arg)
            .partial_trace(&[2, 2], &[0])?
            .transpose())
    }
}

/// Apply a channel given as a Kraus set to an operator of matching input
/// dimension.
pub fn apply_kraus(kraus: &[ComplexMatrix], x: &ComplexMatrix) -> ComplexMatrix {
    assert!(!kraus.is_empty(), "empty Kraus set");
    let dout = kraus[0].rows();
    let mut out = ComplexMatrix::zeros(dout, dout);
    for k in kraus {
        out = &out + &k.matmul(x).matmul(&k.adjoint());
    }
    out
}

/// Apply a pair of local channels to a two-qubit operator via their Kraus
/// decompositions; the independent reference route for the coefficient
/// fast path used by the certificate assembly.
pub fn apply_two_qubit(
    cha: &QubitChannel,
    chb: &QubitChannel,
    rho: &ComplexMatrix,
) -> ComplexMatrix {
    assert_eq!((rho.rows(), rho.cols()), (4, 4));
    let ka = cha.kraus();
    let kb = chb.kraus();
    let mut out = ComplexMatrix::zeros(4, 4);
    for a in &ka {
        for b in &kb {
            let m = a.tensor(b);
            out = &out + &m.matmul(rho).matmul(&m.adjoint());
        }
    }
    out
}

/// Dephasing channel `rho -> (1+g)/2 rho + (1-g)/2 G rho G` at angle `x`.
pub fn dephasing_channel(x: f64, profile: &DampingProfile) -> Result<QubitChannel> {
    check_angle(x)?;
    let g = profile.g(x);
    let gamma = DampingProfile::axis(x).matrix();
    let k0 = ComplexMatrix::identity(2).scale_re(((1.0 + g) / 2.0).sqrt());
    let k1 = gamma.scale_re(((1.0 - g) / 2.0).sqrt());
    QubitChannel::from_kraus(&[k0, k1])
}

/// Bob's extraction channel: the dephasing family precomposed with the
/// effective-angle remap, so the identity sits at his optimal angle.
pub fn bob_channel(x: f64, alpha: TiltParameter, profile: &DampingProfile) -> Result<QubitChannel> {
    check_angle(x)?;
    let eff = EffectiveAngle::for_alpha(alpha);
    dephasing_channel(eff.map(x), profile)
}

/// Per-Pauli damping factors `(dX, dZ, dY)` of the dephasing channel at
/// angle `x`: the selected axis passes untouched, the other two traceless
/// Paulis are scaled by `g(x)`.
pub(crate) fn damping_factors(x: f64, profile: &DampingProfile) -> (f64, f64, f64) {
    let g = profile.g(x);
    match DampingProfile::axis(x) {
        DephasingAxis::X => (1.0, g, g),
        DephasingAxis::Z => (g, 1.0, g),
    }
}

/// Pauli coefficients of `K(alpha, a, b)`, the optimal state pushed through
/// both extraction channels. Basis order `[II, XI, ZI, IX, XX, ZX, XZ, ZZ,
/// YY]`.
pub(crate) fn k_coefficients(
    state: &[f64; 9],
    da: (f64, f64, f64),
    db: (f64, f64, f64),
) -> [f64; 9] {
    let (dax, daz, day) = da;
    let (dbx, dbz, dby) = db;
    [
        state[0],
        state[1] * dax,
        state[2] * daz,
        state[3] * dbx,
        state[4] * dax * dbx,
        state[5] * daz * dbx,
        state[6] * dax * dbz,
        state[7] * daz * dbz,
        state[8] * day * dby,
    ]
}

/// The certificate operator `K = (L_A(a) (x) L_B(b))(Phi_alpha)`; the
/// dephasing family is self-dual, so pushing the state through the
/// channels equals pulling the target back through the duals.
pub fn k_operator(
    alpha: TiltParameter,
    a: f64,
    b: f64,
    profile: &DampingProfile,
) -> Result<HermitianMatrix> {
    check_angle(a)?;
    check_angle(b)?;
    let eff = EffectiveAngle::for_alpha(alpha);
    let state = optimal_state_coefficients(alpha.value());
    let da = damping_factors(a, profile);
    let db = damping_factors(eff.map(b), profile);
    let co = k_coefficients(&state, da, db);
    let mut buf = [C0; 16];
    assemble_two_qubit(&co, &mut buf);
    HermitianMatrix::new(ComplexMatrix::new(4, 4, buf.to_vec()))
}
