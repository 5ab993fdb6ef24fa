//! Certificate assembly and verification: the operator
//! `T(a, b) = K(a, b) - s W(a, b) - mu 1`, the equalisation solve for the
//! constants `(s, mu)`, and the measurement-angle grid scan.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use num_complex::Complex64;

use crate::bell::{
    assemble_two_qubit, bell_coefficients, check_angle, optimal_angles, optimal_state_coefficients,
    quantum_value, TiltParameter,
};
use crate::channels::{damping_factors, k_coefficients, DampingProfile, EffectiveAngle};
use crate::linalg::{min_eigenvalue_raw, ComplexMatrix, HermitianMatrix, C0};
use crate::par;
use crate::{Error, Result};

/// Tolerance on the self-testing normalisation `s beta_Q + mu = 1`,
/// relative to max(1, s): the constants grow without bound towards
/// alpha = 2 and the residual is a difference of large numbers there.
pub const NORMALISATION_TOL: f64 = 1e-8;
/// Bisection tolerance in `s`.
pub const SOLVE_TOL: f64 = 1e-12;
/// Tolerance on the five-point equalisation at the solved constants,
/// relative to the magnitude of the equalised level.
pub const EQUALISATION_TOL: f64 = 1e-9;

const BRACKET_LO: f64 = 1e-3;
const BRACKET_HI: f64 = 50.0;
const BRACKET_MAX: f64 = 1e7;

/// Solved constants of the affine self-testing bound `f(beta) = s beta + mu`
/// for one tilt value, normalised so that `f(beta_Q) = 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundConstants {
    alpha: f64,
    s: f64,
    mu: f64,
}

impl BoundConstants {
    pub fn new(alpha: TiltParameter, s: f64, mu: f64) -> Result<Self> {
        if !s.is_finite() || !mu.is_finite() || s <= 0.0 {
            return Err(Error::InvalidConstants(format!("s = {s}, mu = {mu}")));
        }
        let residual = s * quantum_value(alpha) + mu - 1.0;
        if residual.abs() > NORMALISATION_TOL * s.max(1.0) {
            return Err(Error::InvalidConstants(format!(
                "normalisation residual {residual:.3e} at alpha = {}",
                alpha.value()
            )));
        }
        Ok(Self {
            alpha: alpha.value(),
            s,
            mu,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }
}

/// Per-tilt evaluator holding everything the inner loops need: the state
/// coefficients, the effective-angle remap and the damping profile.
struct Evaluator {
    alpha: f64,
    state: [f64; 9],
    eff: EffectiveAngle,
    profile: DampingProfile,
}

impl Evaluator {
    fn new(alpha: TiltParameter) -> Self {
        Self {
            alpha: alpha.value(),
            state: optimal_state_coefficients(alpha.value()),
            eff: EffectiveAngle::for_alpha(alpha),
            profile: DampingProfile::standard(),
        }
    }

    /// lambda_min of `K - sW - mu 1` at raw angles `(a, b)`.
    fn t_min(&self, a: f64, b: f64, s: f64, mu: f64, buf: &mut [Complex64; 16]) -> f64 {
        let da = damping_factors(a, &self.profile);
        let db = damping_factors(self.eff.map(b), &self.profile);
        let k = k_coefficients(&self.state, da, db);
        let w = bell_coefficients(self.alpha, a, b);
        let mut co = [0.0; 9];
        for i in 0..9 {
            co[i] = k[i] - s * w[i];
        }
        co[0] -= mu;
        assemble_two_qubit(&co, buf);
        min_eigenvalue_raw(buf, 4)
    }

    fn t_matrix(&self, a: f64, b: f64, s: f64, mu: f64) -> ComplexMatrix {
        let da = damping_factors(a, &self.profile);
        let db = damping_factors(self.eff.map(b), &self.profile);
        let k = k_coefficients(&self.state, da, db);
        let w = bell_coefficients(self.alpha, a, b);
        let mut co = [0.0; 9];
        for i in 0..9 {
            co[i] = k[i] - s * w[i];
        }
        co[0] -= mu;
        let mut buf = [C0; 16];
        assemble_two_qubit(&co, &mut buf);
        ComplexMatrix::new(4, 4, buf.to_vec())
    }
}

/// The certificate operator `T = K - s W - mu 1` at raw angles `(a, b)`.
pub fn t_operator(
    alpha: TiltParameter,
    a: f64,
    b: f64,
    consts: &BoundConstants,
) -> Result<HermitianMatrix> {
    if consts.alpha != alpha.value() {
        return Err(Error::ConstantsMismatch {
            expected: consts.alpha,
            actual: alpha.value(),
        });
    }
    check_angle(a)?;
    check_angle(b)?;
    let ev = Evaluator::new(alpha);
    HermitianMatrix::new(ev.t_matrix(a, b, consts.s, consts.mu))
}

/// The five anchor points of the equalisation: the four corners of the
/// angle square and the point of maximal violation.
pub fn special_points(alpha: TiltParameter) -> [(f64, f64); 5] {
    let (a_star, b_star) = optimal_angles(alpha);
    [
        (0.0, 0.0),
        (0.0, FRAC_PI_2),
        (FRAC_PI_2, 0.0),
        (FRAC_PI_2, FRAC_PI_2),
        (a_star, b_star),
    ]
}

/// Smallest eigenvalue of `K - sW` at each of the five anchor points.
pub fn special_point_minima(alpha: TiltParameter, s: f64) -> [f64; 5] {
    let ev = Evaluator::new(alpha);
    let mut buf = [C0; 16];
    let mut out = [0.0; 5];
    for (i, &(a, b)) in special_points(alpha).iter().enumerate() {
        out[i] = ev.t_min(a, b, s, 0.0, &mut buf);
    }
    out
}

/// Solve for the bound constants by equalising the worst anchor-point
/// eigenvalue of `K - sW` with the normalisation line `1 - s beta_Q`.
///
/// The objective `min_vertices lambda_min(K - sW) + s beta_Q - 1` is
/// strictly increasing in `s` (each vertex curve has slope at least
/// `-beta_C` while the line adds `beta_Q`), so bisection is robust; the
/// bracket grows upward from [1e-3, 50] because the constants diverge as
/// alpha approaches 2.
pub fn solve_constants(alpha: TiltParameter) -> Result<BoundConstants> {
    let ev = Evaluator::new(alpha);
    let beta_q = quantum_value(alpha);
    let mut buf = [C0; 16];
    let points = special_points(alpha);

    let mut vertex_min = |s: f64, buf: &mut [Complex64; 16]| -> f64 {
        points[..4]
            .iter()
            .map(|&(a, b)| ev.t_min(a, b, s, 0.0, buf))
            .fold(f64::INFINITY, f64::min)
    };
    let psi = |s: f64,
               buf: &mut [Complex64; 16],
               vm: &mut dyn FnMut(f64, &mut [Complex64; 16]) -> f64| {
        vm(s, buf) + s * beta_q - 1.0
    };

    let mut lo = BRACKET_LO;
    let mut hi = BRACKET_HI;
    let f_lo = psi(lo, &mut buf, &mut vertex_min);
    let mut f_hi = psi(hi, &mut buf, &mut vertex_min);
    while f_hi < 0.0 && hi < BRACKET_MAX {
        hi *= 2.0;
        f_hi = psi(hi, &mut buf, &mut vertex_min);
    }
    if f_lo >= 0.0 || f_hi < 0.0 {
        return Err(Error::RootNotBracketed {
            alpha: alpha.value(),
            lo,
            hi,
            f_lo,
            f_hi,
        });
    }
    while hi - lo > SOLVE_TOL {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if psi(mid, &mut buf, &mut vertex_min) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = 0.5 * (lo + hi);

    // mu sits on the normalisation line; the worst anchor eigenvalue of
    // K - sW equalises with it at the solved s, which we verify relative
    // to the magnitude of the level (the constants blow up towards
    // alpha = 2 and carry matching float noise).
    let mu = 1.0 - s * beta_q;
    let minima = special_point_minima(alpha, s);
    let vertex_worst = minima[..4].iter().copied().fold(f64::INFINITY, f64::min);
    let scale = mu.abs().max(1.0);
    if (vertex_worst - mu).abs() > EQUALISATION_TOL * scale
        || (minima[4] - mu).abs() > EQUALISATION_TOL * scale
    {
        return Err(Error::InvalidConstants(format!(
            "equalisation failed at alpha = {}: vertices {vertex_worst:.6e}, optimum {:.6e}, line {mu:.6e}",
            alpha.value(),
            minima[4]
        )));
    }
    BoundConstants::new(alpha, s, mu)
}

/// Rectangular scan specification: a tilt range and the two angle grids,
/// Alice's spanning `[0, pi/4]` (the unitary equivalence
/// `T(a, b) ~ T(pi/2 - a, b)` folds the other half) and Bob's spanning
/// `[0, pi/2]`.
#[derive(Clone, Copy, Debug)]
pub struct GridSpec {
    alpha_min: f64,
    alpha_max: f64,
    alpha_step: f64,
    a_points: usize,
    b_points: usize,
}

impl GridSpec {
    pub fn new(
        alpha_min: f64,
        alpha_max: f64,
        alpha_step: f64,
        a_points: usize,
        b_points: usize,
    ) -> Result<Self> {
        if !alpha_min.is_finite() || !alpha_max.is_finite() || !alpha_step.is_finite() {
            return Err(Error::InvalidGrid("non-finite alpha range".into()));
        }
        if alpha_min < 0.0 || alpha_max < alpha_min || alpha_max >= 2.0 {
            return Err(Error::InvalidGrid(format!(
                "alpha range [{alpha_min}, {alpha_max}] must sit inside [0, 2)"
            )));
        }
        if alpha_step <= 0.0 {
            return Err(Error::InvalidGrid(format!(
                "alpha step {alpha_step} must be > 0"
            )));
        }
        if a_points < 2 || b_points < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 nodes per angle axis, got {a_points} x {b_points}"
            )));
        }
        Ok(Self {
            alpha_min,
            alpha_max,
            alpha_step,
            a_points,
            b_points,
        })
    }

    /// The published evidence grid: alpha from 0 to 1.999 in steps of
    /// 0.001, 100 nodes on `[0, pi/4]` for Alice, 200 nodes on
    /// `[0, pi/2]` for Bob.
    pub fn paper() -> Self {
        Self::new(0.0, 1.999, 0.001, 100, 200).expect("valid preset")
    }

    pub fn single_alpha(alpha: f64, a_points: usize, b_points: usize) -> Result<Self> {
        Self::new(alpha, alpha, 1.0, a_points, b_points)
    }

    pub fn alpha_count(&self) -> usize {
        ((self.alpha_max - self.alpha_min) / self.alpha_step).round() as usize + 1
    }

    pub fn alpha_at(&self, i: usize) -> f64 {
        self.alpha_min + i as f64 * self.alpha_step
    }

    pub fn a_points(&self) -> usize {
        self.a_points
    }

    pub fn b_points(&self) -> usize {
        self.b_points
    }

    pub fn a_at(&self, i: usize) -> f64 {
        FRAC_PI_4 * i as f64 / (self.a_points - 1) as f64
    }

    pub fn b_at(&self, i: usize) -> f64 {
        FRAC_PI_2 * i as f64 / (self.b_points - 1) as f64
    }

    pub fn cells(&self) -> u64 {
        self.alpha_count() as u64 * self.a_points as u64 * self.b_points as u64
    }
}

/// Location of one grid cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridCell {
    pub alpha_index: usize,
    pub a_index: usize,
    pub b_index: usize,
    pub alpha: f64,
    pub a: f64,
    pub b: f64,
}

/// Scan outcome for one tilt value: the solved constants and the row
/// minimum of `lambda_min(T)`.
#[derive(Clone, Copy, Debug)]
pub struct AlphaMinimum {
    pub alpha_index: usize,
    pub alpha: f64,
    pub s: f64,
    pub mu: f64,
    pub a_index: usize,
    pub b_index: usize,
    pub a: f64,
    pub b: f64,
    pub lambda_min: f64,
}

/// Full scan result.
#[derive(Clone, Debug)]
pub struct GridReport {
    pub global_min: f64,
    pub argmin: GridCell,
    pub per_alpha: Vec<AlphaMinimum>,
    pub cells_evaluated: u64,
}

fn scan_row(spec: &GridSpec, alpha_index: usize) -> Result<AlphaMinimum> {
    let alpha = TiltParameter::new(spec.alpha_at(alpha_index))?;
    let consts = solve_constants(alpha)?;
    let ev = Evaluator::new(alpha);
    let s = consts.s();
    let mu = consts.mu();

    struct BobNode {
        sin: f64,
        cos: f64,
        damping: (f64, f64, f64),
    }
    // hoist Bob's per-node trig and damping factors out of the row loop
    let bobs: Vec<BobNode> = (0..spec.b_points)
        .map(|bi| {
            let b = spec.b_at(bi);
            let (sin, cos) = b.sin_cos();
            BobNode {
                sin,
                cos,
                damping: damping_factors(ev.eff.map(b), &ev.profile),
            }
        })
        .collect();

    let mut buf = [C0; 16];
    let mut best = (f64::INFINITY, 0usize, 0usize);
    for ai in 0..spec.a_points {
        let a = spec.a_at(ai);
        let (sa, ca) = a.sin_cos();
        let da = damping_factors(a, &ev.profile);
        let alpha_ca = ev.alpha * ca;
        let alpha_sa = ev.alpha * sa;
        for (bi, node) in bobs.iter().enumerate() {
            let (sb, cb) = (node.sin, node.cos);
            let k = k_coefficients(&ev.state, da, node.damping);
            let co = [
                k[0] - mu,
                k[1] - s * alpha_ca,
                k[2] - s * alpha_sa,
                k[3],
                k[4] - s * 2.0 * ca * cb,
                k[5] - s * 2.0 * sa * cb,
                k[6] - s * 2.0 * ca * sb,
                k[7] + s * 2.0 * sa * sb,
                k[8],
            ];
            assemble_two_qubit(&co, &mut buf);
            let lambda = min_eigenvalue_raw(&mut buf, 4);
            if lambda < best.0 {
                best = (lambda, ai, bi);
            }
        }
    }
    Ok(AlphaMinimum {
        alpha_index,
        alpha: alpha.value(),
        s,
        mu,
        a_index: best.1,
        b_index: best.2,
        a: spec.a_at(best.1),
        b: spec.b_at(best.2),
        lambda_min: best.0,
    })
}

fn reduce_rows(spec: &GridSpec, rows: Vec<Result<AlphaMinimum>>) -> Result<GridReport> {
    let mut per_alpha = Vec::with_capacity(rows.len());
    for row in rows {
        per_alpha.push(row?);
    }
    let best = per_alpha
        .iter()
        .min_by(|x, y| {
            x.lambda_min
                .total_cmp(&y.lambda_min)
                .then(x.alpha_index.cmp(&y.alpha_index))
        })
        .expect("at least one alpha row");
    let argmin = GridCell {
        alpha_index: best.alpha_index,
        a_index: best.a_index,
        b_index: best.b_index,
        alpha: best.alpha,
        a: best.a,
        b: best.b,
    };
    Ok(GridReport {
        global_min: best.lambda_min,
        argmin,
        per_alpha,
        cells_evaluated: spec.cells(),
    })
}

/// Evaluate `lambda_min(T)` over every grid cell with per-tilt solved
/// constants. Rows run in parallel; the reduction is keyed by
/// `(eigenvalue, cell index)`, so the report does not depend on the worker
/// count.
pub fn grid_scan(spec: &GridSpec) -> Result<GridReport> {
    let spec = *spec;
    let rows = par::map_collect((0..spec.alpha_count()).collect::<Vec<_>>(), move |i| {
        scan_row(&spec, i)
    });
    reduce_rows(&spec, rows)
}

/// Sequential scan with identical output; the baseline for benches and the
/// determinism tests.
pub fn grid_scan_sequential(spec: &GridSpec) -> Result<GridReport> {
    let spec = *spec;
    let rows = par::map_collect_seq((0..spec.alpha_count()).collect::<Vec<_>>(), move |i| {
        scan_row(&spec, i)
    });
    reduce_rows(&spec, rows)
}

/// Recompute `lambda_min(T)` at one cell of the grid; lets callers verify
/// a report entry independently of the scan loop.
pub fn cell_lambda_min(spec: &GridSpec, cell: &GridCell) -> Result<f64> {
    let alpha = TiltParameter::new(spec.alpha_at(cell.alpha_index))?;
    let consts = solve_constants(alpha)?;
    let ev = Evaluator::new(alpha);
    let mut buf = [C0; 16];
    Ok(ev.t_min(
        spec.a_at(cell.a_index),
        spec.b_at(cell.b_index),
        consts.s(),
        consts.mu(),
        &mut buf,
    ))
}

/// Stream every cell of the scan to `sink` as
/// `(alpha_index, a_index, b_index, alpha, a, b, lambda_min)`, row by row
/// in index order.
pub fn grid_dump(spec: &GridSpec, mut sink: impl FnMut(GridCell, f64)) -> Result<()> {
    for alpha_index in 0..spec.alpha_count() {
        let alpha = TiltParameter::new(spec.alpha_at(alpha_index))?;
        let consts = solve_constants(alpha)?;
        let ev = Evaluator::new(alpha);
        let mut buf = [C0; 16];
        for a_index in 0..spec.a_points {
            for b_index in 0..spec.b_points {
                let a = spec.a_at(a_index);
                let b = spec.b_at(b_index);
                let lambda = ev.t_min(a, b, consts.s(), consts.mu(), &mut buf);
                sink(
                    GridCell {
                        alpha_index,
                        a_index,
                        b_index,
                        alpha: alpha.value(),
                        a,
                        b,
                    },
                    lambda,
                );
            }
        }
    }
    Ok(())
}
