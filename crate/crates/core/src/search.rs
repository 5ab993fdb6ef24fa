//! Heuristic maximisation of extraction fidelity over local channel
//! pairs: a falsification harness for the counterexample's
//! extractability claim and a tightness probe for the certified bounds.
//!
//! Channels are searched per classical symbol (the classical-quantum
//! reduction makes this lossless for block-diagonal states), each
//! parametrised by a Stinespring isometry read off a real parameter
//! vector. Every reported value is attained by explicit feasible
//! channels, so it is a certified lower bound on extractability.

use num_complex::Complex64;

use crate::bell::{classical_value, optimal_state, quantum_value, TiltParameter};
use crate::bounds::{upper_bound, BoundFunction};
use crate::channels::apply_two_qubit;
use crate::counterexample::{standard_normal, stream_rng};
use crate::linalg::{ComplexMatrix, DensityMatrix, C0, C1, PURITY_TOL};
use crate::par;
use crate::{Error, Result};

/// Completeness tolerance on parametrised Kraus sets.
pub const KRAUS_COMPLETENESS_TOL: f64 = 1e-10;

type M2 = [Complex64; 4];
type M4 = [Complex64; 16];

/// A qubit channel encoded as a real parameter vector: the entries of a
/// `2k x 2` complex matrix whose Gram-Schmidt orthonormalisation is the
/// Stinespring isometry of a channel with `k` Kraus operators.
#[derive(Clone, Debug)]
pub struct ChannelParametrization {
    kraus_count: usize,
    parameters: Vec<f64>,
}

impl ChannelParametrization {
    pub fn new(kraus_count: usize, parameters: Vec<f64>) -> Result<Self> {
        if !(1..=4).contains(&kraus_count) {
            return Err(Error::InvalidConfig(format!(
                "kraus count {kraus_count} outside 1..=4"
            )));
        }
        if parameters.len() != 8 * kraus_count {
            return Err(Error::InvalidConfig(format!(
                "expected {} parameters for {kraus_count} Kraus operators, got {}",
                8 * kraus_count,
                parameters.len()
            )));
        }
        if parameters.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidConfig("non-finite parameter".into()));
        }
        Ok(Self {
            kraus_count,
            parameters,
        })
    }

    /// The identity channel (one Kraus operator).
    pub fn identity() -> Self {
        Self::new(1, identity_params()).expect("valid identity parameters")
    }

    /// Full erasure to `|0>` (two Kraus operators); the optimal strategy
    /// on classically-correlated frames.
    pub fn erasure() -> Self {
        Self::new(2, erasure_params()).expect("valid erasure parameters")
    }

    pub fn kraus_count(&self) -> usize {
        self.kraus_count
    }

    pub fn parameters(&self) -> &[f64] {
        &self.parameters
    }

    pub fn kraus(&self) -> Vec<ComplexMatrix> {
        kraus_from_params(&self.parameters, self.kraus_count)
            .into_iter()
            .map(|m| ComplexMatrix::new(2, 2, m.to_vec()))
            .collect()
    }

    /// Validated channel built from the Kraus set; the Choi route used for
    /// independent re-evaluation.
    pub fn to_channel(&self) -> Result<crate::channels::QubitChannel> {
        crate::channels::QubitChannel::from_kraus(&self.kraus())
    }
}

fn identity_params() -> Vec<f64> {
    vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0]
}

fn erasure_params() -> Vec<f64> {
    let mut p = vec![0.0; 16];
    p[0] = 1.0; // V[0][0] = 1
    p[2 * 3] = 1.0; // V[1][1] = 1
    p
}

/// Read a `2k x 2` complex matrix off the parameter vector, orthonormalise
/// its two columns (with deterministic fallbacks for degenerate inputs)
/// and slice the resulting isometry into `k` Kraus operators. The set is
/// complete by construction.
fn kraus_from_params(params: &[f64], k: usize) -> Vec<M2> {
    let rows = 2 * k;
    let entry = |r: usize, c: usize| -> Complex64 {
        let base = 2 * (r * 2 + c);
        Complex64::new(params[base], params[base + 1])
    };
    let mut col0: Vec<Complex64> = (0..rows).map(|r| entry(r, 0)).collect();
    let mut col1: Vec<Complex64> = (0..rows).map(|r| entry(r, 1)).collect();

    let norm = |v: &[Complex64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let n0 = norm(&col0);
    if n0 < 1e-12 {
        col0 = vec![C0; rows];
        col0[0] = C1;
    } else {
        let inv = 1.0 / n0;
        for z in &mut col0 {
            *z *= inv;
        }
    }
    let overlap: Complex64 = col0
        .iter()
        .zip(col1.iter())
        .map(|(a, b)| a.conj() * b)
        .sum();
    for (v, e) in col1.iter_mut().zip(col0.iter()) {
        *v -= overlap * e;
    }
    let n1 = norm(&col1);
    if n1 < 1e-12 {
        // orthogonal completion: take the basis vector least aligned with
        // col0 and project it out
        let j = (0..rows)
            .min_by(|&i, &j| {
                col0[i]
                    .norm_sqr()
                    .total_cmp(&col0[j].norm_sqr())
                    .then(i.cmp(&j))
            })
            .expect("nonempty");
        col1 = vec![C0; rows];
        col1[j] = C1;
        let ov: Complex64 = col0[j].conj();
        for (v, e) in col1.iter_mut().zip(col0.iter()) {
            *v -= ov * e;
        }
        let n = norm(&col1);
        let inv = 1.0 / n;
        for z in &mut col1 {
            *z *= inv;
        }
    } else {
        let inv = 1.0 / n1;
        for z in &mut col1 {
            *z *= inv;
        }
    }

    (0..k)
        .map(|i| {
            [
                col0[i],     // K_i[0][0] = V[0*k + i][0]
                col1[i],     // K_i[0][1]
                col0[k + i], // K_i[1][0] = V[1*k + i][0]
                col1[k + i], // K_i[1][1]
            ]
        })
        .collect()
}

/// Search configuration: restart count, base seed, pattern-search sweep
/// cap and the step size below which a restart stops.
#[derive(Clone, Copy, Debug)]
pub struct SearchConfig {
    pub restarts: u64,
    pub seed: u64,
    pub max_iters: u64,
    pub step_tol: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            restarts: 64,
            seed: 0,
            max_iters: 200,
            step_tol: 1e-4,
        }
    }
}

impl SearchConfig {
    fn validate(&self) -> Result<()> {
        if self.restarts < 1 {
            return Err(Error::InvalidConfig("restarts must be at least 1".into()));
        }
        if self.max_iters < 1 {
            return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
        }
        if !self.step_tol.is_finite() || self.step_tol <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "step tolerance {} must be positive",
                self.step_tol
            )));
        }
        Ok(())
    }
}

/// Best feasible point found by the search.
#[derive(Clone, Debug)]
pub struct SearchOutcome {
    pub best_value: f64,
    pub best_restart: u64,
    pub channels_a: Vec<ChannelParametrization>,
    pub channels_b: Vec<ChannelParametrization>,
}

/// The extraction objective: per-register blocks of the input state, the
/// pure target, and the register arities.
struct Problem {
    arity_a: usize,
    arity_b: usize,
    /// (x, y, unnormalised block) for cells with weight
    blocks: Vec<(usize, usize, M4)>,
    target: M4,
}

impl Problem {
    fn new(rho: &DensityMatrix, target: &DensityMatrix, arity: (usize, usize)) -> Result<Self> {
        let (ca, cb) = arity;
        if ca == 0 || cb == 0 || rho.dim() != ca * cb * 4 {
            return Err(Error::DimMismatch {
                left: rho.dim(),
                right: ca * cb * 4,
            });
        }
        if target.dim() != 4 {
            return Err(Error::DimMismatch {
                left: target.dim(),
                right: 4,
            });
        }
        let purity = target.purity();
        if (purity - 1.0).abs() > PURITY_TOL {
            return Err(Error::NotPure { purity });
        }

        let m = rho.matrix();
        let index = |x: usize, y: usize, a: usize, b: usize| ((x * cb + y) * 2 + a) * 2 + b;
        let mut blocks = Vec::new();
        for x in 0..ca {
            for y in 0..cb {
                let mut block = [C0; 16];
                let mut trace = 0.0;
                for a in 0..2 {
                    for b in 0..2 {
                        for ap in 0..2 {
                            for bp in 0..2 {
                                let v = m.get(index(x, y, a, b), index(x, y, ap, bp));
                                block[(a * 2 + b) * 4 + (ap * 2 + bp)] = v;
                                if (a, b) == (ap, bp) {
                                    trace += v.re;
                                }
                            }
                        }
                    }
                }
                if trace > 1e-14 {
                    blocks.push((x, y, block));
                }
            }
        }
        let mut target_buf = [C0; 16];
        target_buf.copy_from_slice(target.matrix().data());
        Ok(Self {
            arity_a: ca,
            arity_b: cb,
            blocks,
            target: target_buf,
        })
    }

    fn block_value(&self, block: &M4, ka: &[M2], kb: &[M2]) -> f64 {
        let pushed_a = apply_alice(ka, block);
        let pushed = apply_bob(kb, &pushed_a);
        overlap(&pushed, &self.target)
    }
}

fn apply_alice(kraus: &[M2], s: &M4) -> M4 {
    let mut out = [C0; 16];
    for k in kraus {
        let mut left = [C0; 16];
        for m in 0..2 {
            for b in 0..2 {
                let row = m * 2 + b;
                for col in 0..4 {
                    let acc = k[m * 2] * s[b * 4 + col] + k[m * 2 + 1] * s[(2 + b) * 4 + col];
                    left[row * 4 + col] = acc;
                }
            }
        }
        for row in 0..4 {
            for mp in 0..2 {
                for bp in 0..2 {
                    let acc = left[row * 4 + bp] * k[mp * 2].conj()
                        + left[row * 4 + 2 + bp] * k[mp * 2 + 1].conj();
                    out[row * 4 + mp * 2 + bp] += acc;
                }
            }
        }
    }
    out
}

fn apply_bob(kraus: &[M2], s: &M4) -> M4 {
    let mut out = [C0; 16];
    for k in kraus {
        let mut left = [C0; 16];
        for a in 0..2 {
            for n in 0..2 {
                let row = a * 2 + n;
                for col in 0..4 {
                    let acc =
                        k[n * 2] * s[(a * 2) * 4 + col] + k[n * 2 + 1] * s[(a * 2 + 1) * 4 + col];
                    left[row * 4 + col] = acc;
                }
            }
        }
        for row in 0..4 {
            for ap in 0..2 {
                for np in 0..2 {
                    let acc = left[row * 4 + ap * 2] * k[np * 2].conj()
                        + left[row * 4 + ap * 2 + 1] * k[np * 2 + 1].conj();
                    out[row * 4 + ap * 2 + np] += acc;
                }
            }
        }
    }
    out
}

fn overlap(x: &M4, t: &M4) -> f64 {
    x.iter().zip(t.iter()).map(|(a, b)| (a.conj() * b).re).sum()
}

/// One restart of coordinate pattern search with step halving.
struct Walker<'a> {
    problem: &'a Problem,
    kraus_count: usize,
    params: Vec<f64>,
    kraus: Vec<Vec<M2>>,
    contrib: Vec<f64>,
    total: f64,
}

impl<'a> Walker<'a> {
    fn new(problem: &'a Problem, kraus_count: usize, params: Vec<f64>) -> Self {
        let channels = problem.arity_a + problem.arity_b;
        debug_assert_eq!(params.len(), channels * 8 * kraus_count);
        let kraus: Vec<Vec<M2>> = (0..channels)
            .map(|c| kraus_from_params(Self::channel_params(&params, c, kraus_count), kraus_count))
            .collect();
        let contrib: Vec<f64> = problem
            .blocks
            .iter()
            .map(|(x, y, block)| {
                problem.block_value(block, &kraus[*x], &kraus[problem.arity_a + *y])
            })
            .collect();
        let total = contrib.iter().sum();
        Self {
            problem,
            kraus_count,
            params,
            kraus,
            contrib,
            total,
        }
    }

    fn channel_params(params: &[f64], c: usize, k: usize) -> &[f64] {
        &params[c * 8 * k..(c + 1) * 8 * k]
    }

    fn affected_blocks(&self, channel: usize) -> Vec<usize> {
        let ca = self.problem.arity_a;
        self.problem
            .blocks
            .iter()
            .enumerate()
            .filter(|(_, (x, y, _))| {
                if channel < ca {
                    *x == channel
                } else {
                    *y == channel - ca
                }
            })
            .map(|(i, _)| i)
            .collect()
    }

    /// Try `params[d] += delta`; keep the move if the objective improves,
    /// revert otherwise. Returns whether the move was kept.
    fn try_move(&mut self, d: usize, delta: f64) -> bool {
        let channel = d / (8 * self.kraus_count);
        let old_param = self.params[d];
        self.params[d] = old_param + delta;

        let old_kraus = std::mem::replace(
            &mut self.kraus[channel],
            kraus_from_params(
                Self::channel_params(&self.params, channel, self.kraus_count),
                self.kraus_count,
            ),
        );
        let touched = self.affected_blocks(channel);
        let mut old_contrib = Vec::with_capacity(touched.len());
        let mut new_total = self.total;
        for &i in &touched {
            let (x, y, ref block) = self.problem.blocks[i];
            let value = self.problem.block_value(
                block,
                &self.kraus[x],
                &self.kraus[self.problem.arity_a + y],
            );
            old_contrib.push((i, self.contrib[i]));
            new_total += value - self.contrib[i];
            self.contrib[i] = value;
        }

        if new_total > self.total + 1e-15 {
            self.total = new_total;
            true
        } else {
            self.params[d] = old_param;
            self.kraus[channel] = old_kraus;
            for (i, v) in old_contrib {
                self.contrib[i] = v;
            }
            false
        }
    }
}

fn pattern_search(
    problem: &Problem,
    kraus_count: usize,
    init: Vec<f64>,
    cfg: &SearchConfig,
) -> (f64, Vec<f64>) {
    let mut walker = Walker::new(problem, kraus_count, init);
    let dims = walker.params.len();
    let mut step = 0.5;
    for _ in 0..cfg.max_iters {
        let mut improved = false;
        for d in 0..dims {
            if walker.try_move(d, step) || walker.try_move(d, -step) {
                improved = true;
            }
        }
        if !improved {
            step *= 0.5;
            if step < cfg.step_tol {
                break;
            }
        }
    }
    (walker.total, walker.params)
}

fn restart_kraus_count(restart: u64) -> usize {
    match restart {
        0 => 1,
        1 => 2,
        r => 1 + ((r - 2) % 4) as usize,
    }
}

fn restart_init(restart: u64, seed: u64, channels: usize, kraus_count: usize) -> Vec<f64> {
    match restart {
        0 => identity_params().repeat(channels),
        1 => erasure_params().repeat(channels),
        r => {
            let mut rng = stream_rng(seed, r);
            (0..channels * 8 * kraus_count)
                .map(|_| standard_normal(&mut rng))
                .collect()
        }
    }
}

/// Best-found extraction fidelity of `target` from `rho` over local
/// channel tuples, one qubit channel per classical symbol and party.
///
/// `rho` lives on registers ordered `X (x) Y (x) A (x) B` with register
/// sizes `arity = (|X|, |Y|)`; plain two-qubit states use arity (1, 1).
/// Any returned value is attained by explicit channels, hence a certified
/// lower bound on the extractability.
pub fn extractability_lower_bound(
    rho: &DensityMatrix,
    target: &DensityMatrix,
    arity: (usize, usize),
    cfg: &SearchConfig,
) -> Result<SearchOutcome> {
    cfg.validate()?;
    let problem = Problem::new(rho, target, arity)?;
    let channels = arity.0 + arity.1;
    let cfg_copy = *cfg;

    let runs = par::map_collect((0..cfg.restarts).collect::<Vec<_>>(), move |r| {
        let k = restart_kraus_count(r);
        let init = restart_init(r, cfg_copy.seed, channels, k);
        let (value, params) = pattern_search(&problem, k, init, &cfg_copy);
        (r, k, value, params)
    });

    let mut best: Option<(u64, usize, f64, Vec<f64>)> = None;
    for (r, k, value, params) in runs {
        let replace = match &best {
            None => true,
            Some((_, _, best_value, _)) => value > *best_value,
        };
        if replace {
            best = Some((r, k, value, params));
        }
    }
    let (restart, k, value, params) = best.expect("at least one restart");

    let per = 8 * k;
    let split = |offset: usize, count: usize| -> Vec<ChannelParametrization> {
        (0..count)
            .map(|c| {
                ChannelParametrization::new(
                    k,
                    params[(offset + c) * per..(offset + c + 1) * per].to_vec(),
                )
                .expect("validated parameters")
            })
            .collect()
    };
    Ok(SearchOutcome {
        best_value: value,
        best_restart: restart,
        channels_a: split(0, arity.0),
        channels_b: split(arity.0, arity.1),
    })
}

/// Re-evaluate a channel tuple through the validated Choi route;
/// independent of the fast path used inside the search loop.
pub fn evaluate_channels(
    rho: &DensityMatrix,
    target: &DensityMatrix,
    arity: (usize, usize),
    channels_a: &[ChannelParametrization],
    channels_b: &[ChannelParametrization],
) -> Result<f64> {
    let problem = Problem::new(rho, target, arity)?;
    if channels_a.len() != arity.0 || channels_b.len() != arity.1 {
        return Err(Error::DimMismatch {
            left: channels_a.len() + channels_b.len(),
            right: arity.0 + arity.1,
        });
    }
    let cha: Vec<_> = channels_a
        .iter()
        .map(|c| c.to_channel())
        .collect::<Result<_>>()?;
    let chb: Vec<_> = channels_b
        .iter()
        .map(|c| c.to_channel())
        .collect::<Result<_>>()?;
    let target_m = ComplexMatrix::new(4, 4, problem.target.to_vec());
    let mut total = 0.0;
    for (x, y, block) in &problem.blocks {
        let block_m = ComplexMatrix::new(4, 4, block.to_vec());
        let pushed = apply_two_qubit(&cha[*x], &chb[*y], &block_m);
        total += pushed.hs_inner(&target_m)?.re;
    }
    Ok(total)
}

/// One row of the violation-extractability profile.
#[derive(Clone, Copy, Debug)]
pub struct ProfileRow {
    pub beta: f64,
    pub search_lb: f64,
    pub cert_bound: f64,
    pub upper_bound: f64,
}

/// Build, for each requested Bell value, the flagged mixture of the
/// optimal realization and a classical point achieving it, search its
/// extractability, and report it against the certified bound and the
/// mixture upper bound.
pub fn violation_vs_extractability_profile(
    alpha: TiltParameter,
    betas: &[f64],
    cfg: &SearchConfig,
) -> Result<Vec<ProfileRow>> {
    cfg.validate()?;
    let bound = BoundFunction::for_alpha(alpha)?;
    let target = optimal_state(alpha);
    let beta_c = classical_value(alpha);
    let beta_q = quantum_value(alpha);

    // classical point: |++><++| at degenerate angles reaches beta_C
    let plus = {
        let mut ket = ComplexMatrix::zeros(2, 1);
        ket.set(0, 0, C1);
        ket.set(1, 0, C1);
        let ket2 = ket.tensor(&ket);
        DensityMatrix::from_pure(&ket2)?
    };

    let mut rows = Vec::with_capacity(betas.len());
    for &beta in betas {
        if !beta.is_finite() || beta < beta_c - 1e-12 || beta > beta_q + 1e-12 {
            return Err(Error::BetaOutOfRange {
                beta,
                beta_c,
                beta_q,
            });
        }
        let t = ((beta - beta_c) / (beta_q - beta_c)).clamp(0.0, 1.0);

        // flag-correlated mixture on X (x) Y (x) A (x) B with 2-valued flags
        let mut rho = ComplexMatrix::zeros(16, 16);
        let mut add = |flag: usize, state: &ComplexMatrix, w: f64| {
            let cell = ComplexMatrix::basis_proj(2, flag)
                .tensor(&ComplexMatrix::basis_proj(2, flag))
                .tensor(&state.scale_re(w));
            rho = &rho + &cell;
        };
        add(0, target.matrix(), t);
        add(1, plus.matrix(), 1.0 - t);
        let rho = DensityMatrix::new(crate::linalg::HermitianMatrix::new(rho)?)?;

        let outcome = extractability_lower_bound(&rho, &target, (2, 2), cfg)?;
        rows.push(ProfileRow {
            beta,
            search_lb: outcome.best_value,
            cert_bound: bound.f_nd(beta)?,
            upper_bound: upper_bound(beta, bound.lambda0_sq(), beta_c, beta_q),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bell::{bell_operator, optimal_angles, BellRealization};
    use crate::counterexample::{build_state, phi_plus, random_density};
    use crate::linalg::HermitianMatrix;

    fn quick_cfg(restarts: u64) -> SearchConfig {
        SearchConfig {
            restarts,
            seed: 7,
            max_iters: 120,
            step_tol: 1e-3,
        }
    }

    #[test]
    fn parametrised_kraus_sets_are_complete() {
        let mut rng = stream_rng(3, 0);
        for k in 1..=4 {
            for _ in 0..50 {
                let params: Vec<f64> = (0..8 * k).map(|_| standard_normal(&mut rng)).collect();
                let ch = ChannelParametrization::new(k, params).unwrap();
                let kraus = ch.kraus();
                let mut sum = ComplexMatrix::zeros(2, 2);
                for op in &kraus {
                    sum = &sum + &op.adjoint().matmul(op);
                }
                assert!(
                    sum.approx_eq(&ComplexMatrix::identity(2), KRAUS_COMPLETENESS_TOL),
                    "k = {k}"
                );
            }
        }
        // degenerate parameters still produce a valid channel
        let ch = ChannelParametrization::new(2, vec![0.0; 16]).unwrap();
        let kraus = ch.kraus();
        let mut sum = ComplexMatrix::zeros(2, 2);
        for op in &kraus {
            sum = &sum + &op.adjoint().matmul(op);
        }
        assert!(sum.approx_eq(&ComplexMatrix::identity(2), 1e-12));

        assert!(ChannelParametrization::new(0, vec![]).is_err());
        assert!(ChannelParametrization::new(5, vec![0.0; 40]).is_err());
        assert!(ChannelParametrization::new(1, vec![0.0; 7]).is_err());
    }

    #[test]
    fn canonical_parametrizations() {
        let mut rng = stream_rng(4, 1);
        let rho = random_density(&mut rng, 2);
        let id = ChannelParametrization::identity().to_channel().unwrap();
        assert!(id
            .apply(rho.matrix())
            .unwrap()
            .approx_eq(rho.matrix(), 1e-13));

        let erase = ChannelParametrization::erasure().to_channel().unwrap();
        let out = erase.apply(rho.matrix()).unwrap();
        let expect = ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        assert!(out.approx_eq(&expect, 1e-13));
    }

    #[test]
    fn perfect_extraction_from_the_target_itself() {
        let phi = phi_plus();
        let outcome = extractability_lower_bound(&phi, &phi, (1, 1), &quick_cfg(4)).unwrap();
        assert!(outcome.best_value >= 1.0 - 1e-6, "{}", outcome.best_value);
        assert!(outcome.best_value <= 1.0 + 1e-12);

        // re-evaluation through the Choi route agrees
        let again = evaluate_channels(&phi, &phi, (1, 1), &outcome.channels_a, &outcome.channels_b)
            .unwrap();
        assert!((again - outcome.best_value).abs() < 1e-12);
    }

    #[test]
    fn product_state_reaches_exactly_the_trivial_floor() {
        // |0>|+> against Phi+: separable, so extractability is 1/2
        let mut ket = ComplexMatrix::zeros(4, 1);
        ket.set(0, 0, C1);
        ket.set(1, 0, C1);
        let rho = DensityMatrix::from_pure(&ket).unwrap();
        let outcome =
            extractability_lower_bound(&rho, &phi_plus(), (1, 1), &quick_cfg(24)).unwrap();
        assert!(outcome.best_value >= 0.5 - 1e-6, "{}", outcome.best_value);
        assert!(outcome.best_value <= 0.5 + 1e-9, "{}", outcome.best_value);
    }

    #[test]
    fn monotone_under_restarts() {
        let mut rng = stream_rng(11, 5);
        let rho = random_density(&mut rng, 4);
        let base = SearchConfig {
            restarts: 3,
            ..quick_cfg(3)
        };
        let more = SearchConfig {
            restarts: 9,
            ..base
        };
        let v1 = extractability_lower_bound(&rho, &phi_plus(), (1, 1), &base)
            .unwrap()
            .best_value;
        let v2 = extractability_lower_bound(&rho, &phi_plus(), (1, 1), &more)
            .unwrap()
            .best_value;
        assert!(v2 >= v1);
        assert!(v2 <= 1.0 + 1e-12);
    }

    #[test]
    fn counterexample_search_stays_at_half_smoke() {
        let state = build_state(1.0 / 597.0).unwrap();
        let outcome =
            extractability_lower_bound(state.rho(), &phi_plus(), (3, 3), &quick_cfg(12)).unwrap();
        assert!(
            outcome.best_value <= 0.5 + 1e-4,
            "search cleared 1/2: {}",
            outcome.best_value
        );
        // erasure start makes 1/2 reachable
        assert!(outcome.best_value >= 0.5 - 1e-6);
    }

    #[test]
    fn profile_state_produces_requested_violation() {
        // the flagged mixture contracts to beta against the block Bell
        // operator with per-flag angles
        let alpha = TiltParameter::new(0.7).unwrap();
        let (a_star, b_star) = optimal_angles(alpha);
        let w_opt = bell_operator(&BellRealization::new(alpha, a_star, b_star).unwrap());
        let w_cls = bell_operator(&BellRealization::new(alpha, 0.0, 0.0).unwrap());
        let beta_c = classical_value(alpha);
        let beta_q = quantum_value(alpha);

        let target = optimal_state(alpha);
        let mut ket = ComplexMatrix::zeros(2, 1);
        ket.set(0, 0, C1);
        ket.set(1, 0, C1);
        let plus = DensityMatrix::from_pure(&ket.tensor(&ket)).unwrap();

        for &beta in &[beta_c, 0.5 * (beta_c + beta_q), beta_q] {
            let t = (beta - beta_c) / (beta_q - beta_c);
            let mut w_full = ComplexMatrix::zeros(16, 16);
            let mut rho = ComplexMatrix::zeros(16, 16);
            for (flag, (w, state, weight)) in [
                (0usize, (&w_opt, target.matrix(), t)),
                (1usize, (&w_cls, plus.matrix(), 1.0 - t)),
            ] {
                let cell =
                    ComplexMatrix::basis_proj(2, flag).tensor(&ComplexMatrix::basis_proj(2, flag));
                w_full = &w_full + &cell.tensor(w.matrix());
                rho = &rho + &cell.tensor(&state.scale_re(weight));
            }
            let value = w_full.hs_inner(&rho).unwrap().re;
            assert!((value - beta).abs() < 1e-10, "beta {beta}: got {value}");
            DensityMatrix::new(HermitianMatrix::new(rho).unwrap()).unwrap();
        }
    }

    #[test]
    fn profile_rows_sandwich_the_search_value() {
        let alpha = TiltParameter::new(0.0).unwrap();
        let beta_c = classical_value(alpha);
        let beta_q = quantum_value(alpha);
        let betas = [beta_c, 2.4, beta_q];
        let rows = violation_vs_extractability_profile(alpha, &betas, &quick_cfg(10)).unwrap();
        assert_eq!(rows.len(), 3);
        for row in &rows {
            assert!(
                row.search_lb >= row.cert_bound - 1e-6,
                "beta {}: search {} below bound {}",
                row.beta,
                row.search_lb,
                row.cert_bound
            );
            assert!(
                row.search_lb <= row.upper_bound + 1e-9,
                "beta {}: search {} above upper {}",
                row.beta,
                row.search_lb,
                row.upper_bound
            );
        }
        // endpoints: full extraction at beta_Q, trivial floor at beta_C
        assert!(rows[2].search_lb >= 1.0 - 1e-6);
        assert!(rows[0].search_lb >= 0.5 - 1e-6);

        let bad = violation_vs_extractability_profile(alpha, &[1.0], &quick_cfg(2));
        assert!(bad.is_err());
    }
}
