//! The block-diagonal state that violates CHSH while its singlet
//! extractability stays at the separable level 1/2, together with the
//! auxiliary lemma suite and the proposition-chain checker that certify
//! the construction numerically.
//!
//! The state lives on a 36-dimensional space ordered as
//! `X (x) Y (x) A (x) B`: three-valued classical registers for each party
//! followed by their qubits. A 3x3 grid of cells `(x, y)` carries one
//! two-qubit block each; the eight outer cells are "the frame", the cell
//! `(1, 1)` is "the centre".

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channels::{apply_kraus, apply_two_qubit, QubitChannel};
use crate::linalg::{pauli_x, pauli_y, pauli_z, ComplexMatrix, DensityMatrix, HermitianMatrix, C1};
use crate::par;
use crate::{Error, Result};

/// Slack floor of the inner-product triangle inequality checker.
pub const TRIANGLE_TOL: f64 = 1e-12;
/// Entrywise tolerance of the classical-quantum channel reduction checker.
pub const CQ_CHANNEL_TOL: f64 = 1e-10;
/// Norm tolerance of the contraction spectrum checker.
pub const SPECTRUM_TOL: f64 = 1e-10;
/// Tolerance on the per-block Bell values fixed by the construction.
const BLOCK_VALUE_TOL: f64 = 1e-12;

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// The 3x3 cell probabilities: frame weights proportional to
/// (4/31, 3/62, 8/31) and centre weight `v`; cells (1,2) and (2,1) carry
/// nothing.
#[derive(Clone, Copy, Debug)]
pub struct ProbTable {
    p: [[f64; 3]; 3],
    v: f64,
}

impl ProbTable {
    pub fn new(v: f64) -> Result<Self> {
        if !v.is_finite() || v <= 0.0 || v >= 1.0 {
            return Err(Error::WeightOutOfRange { v });
        }
        let rest = 1.0 - v;
        let p = [
            [4.0 / 31.0 * rest, 3.0 / 62.0 * rest, 8.0 / 31.0 * rest],
            [3.0 / 62.0 * rest, v, 0.0],
            [8.0 / 31.0 * rest, 0.0, 8.0 / 31.0 * rest],
        ];
        Ok(Self { p, v })
    }

    /// The published choice `v = 1/597`, the largest centre weight for
    /// which the extractability argument closes.
    pub fn paper() -> Self {
        Self::new(1.0 / 597.0).expect("1/597 lies in (0, 1)")
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.p[x][y]
    }

    pub fn v(&self) -> f64 {
        self.v
    }

    pub fn total(&self) -> f64 {
        self.p.iter().flatten().sum()
    }
}

/// Per-cell two-qubit CHSH operators `W^xy`, generated by the
/// register-controlled observables
/// `A0 = Z` on every symbol and `A1 = (Z, X, -Z)` by symbol (same for
/// Bob).
#[derive(Clone, Debug)]
pub struct ChshBlockTable {
    blocks: Vec<HermitianMatrix>,
}

impl ChshBlockTable {
    pub fn new() -> Self {
        let z = pauli_z();
        let a0: [ComplexMatrix; 3] = [z.clone(), z.clone(), z.clone()];
        let a1: [ComplexMatrix; 3] = [z.clone(), pauli_x(), z.scale_re(-1.0)];
        let mut blocks = Vec::with_capacity(9);
        for x in 0..3 {
            for y in 0..3 {
                let sum_b = &a0[y] + &a1[y];
                let dif_b = &a0[y] - &a1[y];
                let w = &a0[x].tensor(&sum_b) + &a1[x].tensor(&dif_b);
                blocks.push(HermitianMatrix::new(w).expect("real Pauli combination"));
            }
        }
        Self { blocks }
    }

    pub fn block(&self, x: usize, y: usize) -> &HermitianMatrix {
        &self.blocks[x * 3 + y]
    }

    /// The full 36x36 CHSH operator, block-diagonal over the registers.
    pub fn full_operator(&self) -> HermitianMatrix {
        let mut w = ComplexMatrix::zeros(36, 36);
        for x in 0..3 {
            for y in 0..3 {
                let cell = ComplexMatrix::basis_proj(3, x)
                    .tensor(&ComplexMatrix::basis_proj(3, y))
                    .tensor(self.block(x, y).matrix());
                w = &w + &cell;
            }
        }
        HermitianMatrix::new(w).expect("direct sum of Hermitian blocks")
    }
}

impl Default for ChshBlockTable {
    fn default() -> Self {
        Self::new()
    }
}

/// The assembled counterexample state.
#[derive(Clone, Debug)]
pub struct CounterexampleState {
    prob: ProbTable,
    blocks: ChshBlockTable,
    /// classically-correlated frame blocks, keyed `(x, y)`, cells with
    /// positive weight only
    frame: Vec<((usize, usize), DensityMatrix)>,
    /// the maximally entangled eigenstate of `W^11`
    centre: DensityMatrix,
    rho: DensityMatrix,
}

fn diag_density(entries: &[f64; 4]) -> DensityMatrix {
    DensityMatrix::new(HermitianMatrix::new(ComplexMatrix::diagonal(entries)).expect("diagonal"))
        .expect("valid diagonal state")
}

/// Build the counterexample state with centre weight `v`.
///
/// Frame blocks are the classically-correlated computational-basis states
/// consistent with the fixed per-cell Bell values: `|11><11|` at (0,0),
/// the even mixture of `|00>` and `|11>` at (0,1), (1,0), (0,2), (2,0),
/// and the even mixture of `|01>` and `|10>` at (2,2). The centre carries
/// the top eigenstate of `W^11`.
pub fn build_state(v: f64) -> Result<CounterexampleState> {
    let prob = ProbTable::new(v)?;
    let blocks = ChshBlockTable::new();

    let even_00_11 = diag_density(&[0.5, 0.0, 0.0, 0.5]);
    let frame: Vec<((usize, usize), DensityMatrix)> = vec![
        ((0, 0), diag_density(&[0.0, 0.0, 0.0, 1.0])),
        ((0, 1), even_00_11.clone()),
        ((0, 2), even_00_11.clone()),
        ((1, 0), even_00_11.clone()),
        ((2, 0), even_00_11),
        ((2, 2), diag_density(&[0.0, 0.5, 0.5, 0.0])),
    ];

    let spec = blocks.block(1, 1).eig();
    let top = spec.eigenvector(3).expect("with vectors");
    let centre = DensityMatrix::from_pure(&top)?;
    assert!(
        (spec.eigenvalues()[3] - 2.0 * SQRT2).abs() < 1e-12,
        "centre block must reach the quantum value"
    );

    // fixed per-cell Bell values: 2 on the frame, 2 sqrt(2) at the centre
    for ((x, y), state) in &frame {
        let val = blocks
            .block(*x, *y)
            .matrix()
            .hs_inner(state.matrix())
            .expect("4x4")
            .re;
        assert!(
            (val - 2.0).abs() < BLOCK_VALUE_TOL,
            "frame cell ({x}, {y}) has Bell value {val}"
        );
    }
    let centre_val = blocks
        .block(1, 1)
        .matrix()
        .hs_inner(centre.matrix())
        .expect("4x4")
        .re;
    assert!((centre_val - 2.0 * SQRT2).abs() < BLOCK_VALUE_TOL);

    // the centre is maximally entangled
    for keep in [[0usize], [1usize]] {
        let marginal = centre.matrix().partial_trace(&[2, 2], &keep)?;
        assert!(
            marginal.approx_eq(&ComplexMatrix::identity(2).scale_re(0.5), 1e-10),
            "centre marginal is not maximally mixed"
        );
    }

    let mut rho = ComplexMatrix::zeros(36, 36);
    let mut add_cell = |x: usize, y: usize, state: &DensityMatrix, weight: f64| {
        let cell = ComplexMatrix::basis_proj(3, x)
            .tensor(&ComplexMatrix::basis_proj(3, y))
            .tensor(&state.matrix().scale_re(weight));
        rho = &rho + &cell;
    };
    for ((x, y), state) in &frame {
        add_cell(*x, *y, state, prob.get(*x, *y));
    }
    add_cell(1, 1, &centre, prob.v());

    let rho = DensityMatrix::new(HermitianMatrix::new(rho)?)?;
    Ok(CounterexampleState {
        prob,
        blocks,
        frame,
        centre,
        rho,
    })
}

impl CounterexampleState {
    pub fn prob(&self) -> &ProbTable {
        &self.prob
    }

    pub fn blocks(&self) -> &ChshBlockTable {
        &self.blocks
    }

    pub fn frame(&self) -> &[((usize, usize), DensityMatrix)] {
        &self.frame
    }

    /// The two-qubit block at cell `(x, y)`, if it carries weight.
    pub fn cell_state(&self, x: usize, y: usize) -> Option<&DensityMatrix> {
        if (x, y) == (1, 1) {
            return Some(&self.centre);
        }
        self.frame
            .iter()
            .find(|((fx, fy), _)| (*fx, *fy) == (x, y))
            .map(|(_, s)| s)
    }

    pub fn centre(&self) -> &DensityMatrix {
        &self.centre
    }

    pub fn rho(&self) -> &DensityMatrix {
        &self.rho
    }
}

/// CHSH value of the state by direct 36x36 contraction.
pub fn chsh_value(state: &CounterexampleState) -> f64 {
    state
        .blocks
        .full_operator()
        .matrix()
        .hs_inner(state.rho.matrix())
        .expect("36x36")
        .re
}

/// Closed form of the violation: `2 + (2 sqrt(2) - 2) v`.
pub fn chsh_value_closed(v: f64) -> f64 {
    2.0 + (2.0 * SQRT2 - 2.0) * v
}

/// Outcome of one randomized property suite. `worst_slack` is the smallest
/// margin seen before the respective tolerance; negative beyond tolerance
/// counts as a violation. `worst_index` is the sample stream that produced
/// it, so the draw can be reproduced from the seed.
#[derive(Clone, Debug)]
pub struct CheckReport {
    pub name: &'static str,
    pub samples: u64,
    pub worst_slack: f64,
    pub worst_index: u64,
    pub violations: u64,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Deterministic per-sample RNG: one ChaCha stream per index on a common
/// seed, so parallel execution order cannot influence the draws.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Standard normal via Box-Muller on the unit draws of `rng`.
pub fn standard_normal(rng: &mut impl Rng) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

fn gaussian_complex(rng: &mut impl Rng) -> Complex64 {
    Complex64::new(standard_normal(rng), standard_normal(rng))
}

/// Haar-random unit column vector.
pub fn random_unit_ket(rng: &mut impl Rng, dim: usize) -> ComplexMatrix {
    loop {
        let mut data = Vec::with_capacity(dim);
        for _ in 0..dim {
            data.push(gaussian_complex(rng));
        }
        let norm: f64 = data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-6 {
            let inv = 1.0 / norm;
            return ComplexMatrix::new(dim, 1, data.into_iter().map(|z| z * inv).collect());
        }
    }
}

/// Full-support random density matrix: the marginal of a Haar-random pure
/// state on the doubled space.
pub fn random_density(rng: &mut impl Rng, dim: usize) -> DensityMatrix {
    let ket = random_unit_ket(rng, dim * dim);
    let proj = ket.matmul(&ket.adjoint());
    let reduced = proj
        .partial_trace(&[dim, dim], &[0])
        .expect("consistent dims");
    DensityMatrix::new(HermitianMatrix::new(reduced).expect("marginal is Hermitian"))
        .expect("marginal is a state")
}

/// GUE-style random Hermitian matrix.
pub fn random_hermitian(rng: &mut impl Rng, dim: usize) -> HermitianMatrix {
    let g = ComplexMatrix::from_fn(dim, dim, |_, _| gaussian_complex(rng));
    HermitianMatrix::new((&g + &g.adjoint()).scale_re(0.5)).expect("symmetrised")
}

/// Haar-random isometry with `cols <= rows`, via Gram-Schmidt on Gaussian
/// columns.
pub fn random_isometry(rng: &mut impl Rng, rows: usize, cols: usize) -> ComplexMatrix {
    assert!(cols <= rows);
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(cols);
    while basis.len() < cols {
        let mut v: Vec<Complex64> = (0..rows).map(|_| gaussian_complex(rng)).collect();
        for e in &basis {
            let overlap: Complex64 = e.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
            for (vi, ei) in v.iter_mut().zip(e.iter()) {
                *vi -= overlap * ei;
            }
        }
        let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-8 {
            let inv = 1.0 / norm;
            for vi in &mut v {
                *vi *= inv;
            }
            basis.push(v);
        }
    }
    ComplexMatrix::from_fn(rows, cols, |i, j| basis[j][i])
}

/// Random Kraus set of a channel `din -> dout` via a Stinespring isometry
/// with `count` environment levels.
pub fn random_kraus_set(
    rng: &mut impl Rng,
    din: usize,
    dout: usize,
    count: usize,
) -> Vec<ComplexMatrix> {
    let v = random_isometry(rng, dout * count, din);
    (0..count)
        .map(|i| ComplexMatrix::from_fn(dout, din, |m, n| v.get(m * count + i, n)))
        .collect()
}

/// Random qubit channel with a four-level environment.
pub fn random_qubit_channel(rng: &mut impl Rng) -> QubitChannel {
    QubitChannel::from_kraus(&random_kraus_set(rng, 2, 2, 4)).expect("Stinespring dilation")
}

/// `Phi+` as a 4x4 density matrix.
pub fn phi_plus() -> DensityMatrix {
    let mut ket = ComplexMatrix::zeros(4, 1);
    ket.set(0, 0, C1);
    ket.set(3, 0, C1);
    DensityMatrix::from_pure(&ket).expect("Bell state")
}

/// Triangle-type inequality for state overlaps:
/// `<r0, r1> >= 2(<r0, s> + <r1, s>) - 3` on random density-matrix
/// triples of dimensions 2 and 4.
pub fn check_lemma_triangle(samples: u64, seed: u64) -> CheckReport {
    let slacks = par::map_collect((0..samples).collect::<Vec<_>>(), move |idx| {
        let mut rng = stream_rng(seed, idx);
        let dim = if idx % 2 == 0 { 2 } else { 4 };
        let r0 = random_density(&mut rng, dim);
        let r1 = random_density(&mut rng, dim);
        let sg = random_density(&mut rng, dim);
        let ip = |a: &DensityMatrix, b: &DensityMatrix| {
            a.matrix().hs_inner(b.matrix()).expect("same dim").re
        };
        ip(&r0, &r1) - 2.0 * (ip(&r0, &sg) + ip(&r1, &sg)) + 3.0
    });
    reduce_slacks("lemma_triangle", samples, slacks, TRIANGLE_TOL)
}

/// Classical-quantum channel reduction: a channel acting on a classical
/// register and a qubit is reproduced on classical-quantum operators by
/// the per-symbol channels `L_j(X) = L(|j><j| (x) X)`.
pub fn check_lemma_cq_channel(samples: u64, seed: u64) -> CheckReport {
    let slacks = par::map_collect((0..samples).collect::<Vec<_>>(), move |idx| {
        let mut rng = stream_rng(seed, idx);
        let kraus = random_kraus_set(&mut rng, 6, 2, 6);
        let blocks: Vec<ComplexMatrix> = (0..3)
            .map(|_| ComplexMatrix::from_fn(2, 2, |_, _| gaussian_complex(&mut rng)))
            .collect();

        let mut r = ComplexMatrix::zeros(6, 6);
        for (j, s) in blocks.iter().enumerate() {
            r = &r + &ComplexMatrix::basis_proj(3, j).tensor(s);
        }
        let lhs = apply_kraus(&kraus, &r);

        let id2 = ComplexMatrix::identity(2);
        let mut rhs = ComplexMatrix::zeros(2, 2);
        for (j, s) in blocks.iter().enumerate() {
            let embed = ComplexMatrix::basis_ket(3, j).tensor(&id2);
            let sub_kraus: Vec<ComplexMatrix> = kraus.iter().map(|k| k.matmul(&embed)).collect();
            rhs = &rhs + &apply_kraus(&sub_kraus, s);
        }
        let deviation = (&lhs - &rhs).max_abs();
        -deviation
    });
    reduce_slacks("lemma_cq_channel", samples, slacks, CQ_CHANNEL_TOL)
}

/// Contraction bound: if a qubit channel sends the maximally mixed state
/// to a state with smaller eigenvalue `lambda`, every traceless unitary
/// Hermitian observable is mapped inside `[-2 sqrt(lambda), 2
/// sqrt(lambda)]`.
pub fn check_lemma_spectrum(samples: u64, seed: u64) -> CheckReport {
    let slacks = par::map_collect((0..samples).collect::<Vec<_>>(), move |idx| {
        let mut rng = stream_rng(seed, idx);
        let kraus = random_kraus_set(&mut rng, 2, 2, 4);
        let omega = apply_kraus(&kraus, &ComplexMatrix::identity(2).scale_re(0.5));
        let lambda = HermitianMatrix::new(omega)
            .expect("channel output")
            .min_eigenvalue()
            .max(0.0);
        let bound = 2.0 * lambda.sqrt();

        let mut worst = f64::INFINITY;
        let mut check = |gamma: &ComplexMatrix| {
            let out = apply_kraus(&kraus, gamma);
            let vals = HermitianMatrix::new(out)
                .expect("Hermitian image")
                .eigenvalues();
            let norm = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            worst = worst.min(bound - norm);
        };
        check(&pauli_x());
        check(&pauli_y());
        check(&pauli_z());
        for _ in 0..100 {
            let z: f64 = rng.random_range(-1.0..1.0);
            let phi: f64 = rng.random_range(0.0..2.0 * PI);
            let r = (1.0 - z * z).sqrt();
            let gamma = &(&pauli_x().scale_re(r * phi.cos()) + &pauli_y().scale_re(r * phi.sin()))
                + &pauli_z().scale_re(z);
            check(&gamma);
        }
        worst
    });
    reduce_slacks("lemma_spectrum", samples, slacks, SPECTRUM_TOL)
}

fn reduce_slacks(name: &'static str, samples: u64, slacks: Vec<f64>, tol: f64) -> CheckReport {
    let mut worst = f64::INFINITY;
    let mut worst_index = 0u64;
    let mut violations = 0u64;
    for (i, &s) in slacks.iter().enumerate() {
        if s < worst {
            worst = s;
            worst_index = i as u64;
        }
        if s < -tol {
            violations += 1;
        }
    }
    CheckReport {
        name,
        samples,
        worst_slack: if samples == 0 { 0.0 } else { worst },
        worst_index,
        violations,
    }
}

/// Centre-cell fidelity bound: the overlap of the pushed-through
/// maximally entangled state with `Phi+` (lhs) against the separable-part
/// decomposition `1/2 + 2 max(lambda_A, lambda_B)` (rhs), where the
/// lambdas are the smaller eigenvalues of the channel images of the
/// maximally mixed state.
pub fn centre_fidelity_bound_check(cha: &QubitChannel, chb: &QubitChannel) -> Result<(f64, f64)> {
    let target = phi_plus();
    let half = ComplexMatrix::identity(2).scale_re(0.5);
    let lambda = |ch: &QubitChannel| -> Result<f64> {
        Ok(HermitianMatrix::new(ch.apply(&half)?)?
            .min_eigenvalue()
            .max(0.0))
    };
    let la = lambda(cha)?;
    let lb = lambda(chb)?;
    let out = apply_two_qubit(cha, chb, target.matrix());
    let lhs = out.hs_inner(target.matrix())?.re;
    let rhs = 0.5 + 2.0 * la.max(lb);
    Ok((lhs, rhs))
}

/// Everything the proposition chain tracks for one choice of per-symbol
/// extraction channels.
#[derive(Clone, Debug)]
pub struct PropositionCheck {
    /// 1/2 minus the frame-cell overlaps with Phi+, keyed like the frame
    pub eps: Vec<((usize, usize), f64)>,
    /// probability-weighted frame average of the eps values
    pub eps_wav: f64,
    /// smaller eigenvalue of Alice's centre-channel image of 1/2
    pub lambda_a: f64,
    pub lambda_b: f64,
    /// frame-derived eigenvalue bounds: 32[e00 + 2(e02+e20+e22)] + 12 e10
    /// for Alice and the transposed-cell version for Bob
    pub frame_bound_a: f64,
    pub frame_bound_b: f64,
    /// overlap of the pushed-through centre with Phi+
    pub centre_overlap: f64,
    /// 1/2 + 596 eps_wav
    pub centre_bound: f64,
}

/// Numerically trace the proposition chain for a concrete choice of
/// per-symbol channels: frame overlaps give the eps values, these bound
/// the centre-channel eigenvalues, and the eigenvalues cap the centre
/// overlap.
pub fn proposition_check(
    channels_a: &[QubitChannel; 3],
    channels_b: &[QubitChannel; 3],
    state: &CounterexampleState,
) -> Result<PropositionCheck> {
    let target = phi_plus();
    let mut eps = Vec::with_capacity(state.frame().len());
    let mut eps_of = [[f64::NAN; 3]; 3];
    for ((x, y), block) in state.frame() {
        let out = apply_two_qubit(&channels_a[*x], &channels_b[*y], block.matrix());
        let overlap = out.hs_inner(target.matrix())?.re;
        let e = 0.5 - overlap;
        eps.push(((*x, *y), e));
        eps_of[*x][*y] = e;
    }
    let rest = 1.0 - state.prob().v();
    let eps_wav = eps
        .iter()
        .map(|((x, y), e)| state.prob().get(*x, *y) / rest * e)
        .sum::<f64>();

    let half = ComplexMatrix::identity(2).scale_re(0.5);
    let small_eig = |ch: &QubitChannel| -> Result<f64> {
        Ok(HermitianMatrix::new(ch.apply(&half)?)?
            .min_eigenvalue()
            .max(0.0))
    };
    let lambda_a = small_eig(&channels_a[1])?;
    let lambda_b = small_eig(&channels_b[1])?;

    let corner = eps_of[0][0] + 2.0 * (eps_of[0][2] + eps_of[2][0] + eps_of[2][2]);
    let frame_bound_a = 32.0 * corner + 12.0 * eps_of[1][0];
    let frame_bound_b = 32.0 * corner + 12.0 * eps_of[0][1];

    let centre_out = apply_two_qubit(&channels_a[1], &channels_b[1], state.centre().matrix());
    let centre_overlap = centre_out.hs_inner(target.matrix())?.re;
    let centre_bound = 0.5 + 596.0 * eps_wav;

    Ok(PropositionCheck {
        eps,
        eps_wav,
        lambda_a,
        lambda_b,
        frame_bound_a,
        frame_bound_b,
        centre_overlap,
        centre_bound,
    })
}
