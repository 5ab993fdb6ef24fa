//! Affine self-testing bound functions: evaluation, the non-decreasing
//! envelope, the trivial and mixture upper bounds, threshold violations and
//! comparison-table emission.

use std::io::BufRead;

use crate::bell::{classical_value, largest_schmidt_sq, quantum_value, TiltParameter};
use crate::certifier::{solve_constants, BoundConstants};
use crate::{Error, Result};

/// Slack used when checking that a Bell value sits inside
/// `[beta_C, beta_Q]`, absorbing endpoint round-off.
const BETA_RANGE_SLACK: f64 = 1e-12;

/// An affine extractability lower bound `f(beta) = s beta + mu` for one
/// tilt value, together with the range endpoints and the trivial floor.
#[derive(Clone, Copy, Debug)]
pub struct BoundFunction {
    consts: BoundConstants,
    beta_c: f64,
    beta_q: f64,
    lambda0_sq: f64,
}

impl BoundFunction {
    pub fn from_constants(alpha: TiltParameter, consts: BoundConstants) -> Self {
        Self {
            consts,
            beta_c: classical_value(alpha),
            beta_q: quantum_value(alpha),
            lambda0_sq: largest_schmidt_sq(alpha),
        }
    }

    /// Solve the bound constants for `alpha` and package the bound.
    pub fn for_alpha(alpha: TiltParameter) -> Result<Self> {
        Ok(Self::from_constants(alpha, solve_constants(alpha)?))
    }

    pub fn constants(&self) -> &BoundConstants {
        &self.consts
    }

    pub fn beta_c(&self) -> f64 {
        self.beta_c
    }

    pub fn beta_q(&self) -> f64 {
        self.beta_q
    }

    /// The trivial bound: square of the largest Schmidt coefficient of the
    /// target state, always reachable with a product state.
    pub fn lambda0_sq(&self) -> f64 {
        self.lambda0_sq
    }

    fn check_range(&self, beta: f64) -> Result<()> {
        if !beta.is_finite()
            || beta < self.beta_c - BETA_RANGE_SLACK
            || beta > self.beta_q + BETA_RANGE_SLACK
        {
            return Err(Error::BetaOutOfRange {
                beta,
                beta_c: self.beta_c,
                beta_q: self.beta_q,
            });
        }
        Ok(())
    }

    /// Affine evaluation on `[beta_C, beta_Q]`.
    pub fn f(&self, beta: f64) -> Result<f64> {
        self.check_range(beta)?;
        Ok(self.consts.s() * beta + self.consts.mu())
    }

    /// Non-decreasing envelope `sup_{x <= beta} f(x)`; for an affine bound
    /// with positive slope this is `max(f(beta), f(beta_C))`.
    pub fn f_nd(&self, beta: f64) -> Result<f64> {
        self.check_range(beta)?;
        let at_c = self.consts.s() * self.beta_c + self.consts.mu();
        Ok((self.consts.s() * beta + self.consts.mu()).max(at_c))
    }

    /// Smallest Bell value at which the bound beats the trivial floor,
    /// clipped to `[beta_C, beta_Q]`.
    pub fn threshold(&self) -> f64 {
        let raw = (self.lambda0_sq - self.consts.mu()) / self.consts.s();
        raw.clamp(self.beta_c, self.beta_q)
    }
}

/// Mixture upper bound: no bound function can certify more than the
/// interpolation between the trivial floor at `beta_C` and 1 at `beta_Q`.
pub fn upper_bound(beta: f64, lambda0_sq: f64, beta_c: f64, beta_q: f64) -> f64 {
    lambda0_sq + (1.0 - lambda0_sq) * (beta - beta_c) / (beta_q - beta_c)
}

/// One sampled row of the comparison table.
#[derive(Clone, Copy, Debug)]
pub struct ComparisonRow {
    pub beta: f64,
    pub f_nd: f64,
    pub trivial: f64,
    pub upper: f64,
}

/// Sampled bound comparison over `[beta_C, beta_Q]`, plus the threshold.
#[derive(Clone, Debug)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
    pub threshold: f64,
}

/// Sample the bound, the trivial floor and the mixture upper bound on
/// `resolution` evenly spaced Bell values spanning `[beta_C, beta_Q]`.
pub fn emit_comparison(bound: &BoundFunction, resolution: usize) -> Result<ComparisonTable> {
    if resolution < 2 {
        return Err(Error::InvalidConfig(format!(
            "comparison resolution {resolution} must be at least 2"
        )));
    }
    let (bc, bq) = (bound.beta_c(), bound.beta_q());
    let mut rows = Vec::with_capacity(resolution);
    for i in 0..resolution {
        let frac = i as f64 / (resolution - 1) as f64;
        let beta = if i + 1 == resolution {
            bq
        } else {
            bc + (bq - bc) * frac
        };
        rows.push(ComparisonRow {
            beta,
            f_nd: bound.f_nd(beta)?,
            trivial: bound.lambda0_sq(),
            upper: upper_bound(beta, bound.lambda0_sq(), bc, bq),
        });
    }
    Ok(ComparisonTable {
        rows,
        threshold: bound.threshold(),
    })
}

/// Read externally supplied comparison points (e.g. published swap-method
/// data): whitespace-separated `beta value` lines, `#` starts a comment.
pub fn read_comparison_points(reader: impl BufRead) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(Error::MalformedPointsFile {
                line: idx + 1,
                reason: format!("expected 2 numeric fields, got {}", fields.len()),
            });
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|_| Error::MalformedPointsFile {
                line: idx + 1,
                reason: format!("cannot parse `{s}` as a number"),
            })
        };
        out.push((parse(fields[0])?, parse(fields[1])?));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQRT2: f64 = std::f64::consts::SQRT_2;

    fn chsh_bound() -> BoundFunction {
        BoundFunction::for_alpha(TiltParameter::new(0.0).unwrap()).unwrap()
    }

    #[test]
    fn normalisation_and_threshold_anchor() {
        let b = chsh_bound();
        assert!((b.f(b.beta_q()).unwrap() - 1.0).abs() < 1e-8);

        let anchor = (16.0 + 14.0 * SQRT2) / 17.0;
        assert!((b.threshold() - anchor).abs() < 1e-6);
        // at the threshold the bound meets the trivial floor
        assert!((b.f(anchor).unwrap() - 0.5).abs() < 1e-6);
        // just above it beats the floor
        assert!(b.f(b.threshold() + 1e-6).unwrap() > b.lambda0_sq());
    }

    #[test]
    fn f_is_affine_and_range_checked() {
        let b = chsh_bound();
        let (x, y) = (2.2, 2.7);
        let mid = b.f((x + y) / 2.0).unwrap();
        let avg = (b.f(x).unwrap() + b.f(y).unwrap()) / 2.0;
        assert!((mid - avg).abs() < 1e-14);

        assert!(b.f(1.9).is_err());
        assert!(b.f(2.9).is_err());
        assert!(b.f(b.beta_c()).is_ok());
    }

    #[test]
    fn envelope_is_monotone_and_dominates_f() {
        use rand::{Rng, SeedableRng};
        let b = chsh_bound();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for _ in 0..1000 {
            let b1 = rng.random_range(b.beta_c()..b.beta_q());
            let b2 = rng.random_range(b.beta_c()..b.beta_q());
            let (lo, hi) = if b1 <= b2 { (b1, b2) } else { (b2, b1) };
            assert!(b.f_nd(lo).unwrap() <= b.f_nd(hi).unwrap() + 1e-15);
            assert!(b.f_nd(b1).unwrap() >= b.f(b1).unwrap());
            // positive slope: envelope equals f on the whole range
            assert!((b.f_nd(b1).unwrap() - b.f(b1).unwrap()).abs() < 1e-15);
        }
    }

    #[test]
    fn upper_bound_endpoints_and_midpoint() {
        let b = chsh_bound();
        let u_c = upper_bound(b.beta_c(), b.lambda0_sq(), b.beta_c(), b.beta_q());
        assert!((u_c - b.lambda0_sq()).abs() < 1e-15);
        let u_q = upper_bound(b.beta_q(), b.lambda0_sq(), b.beta_c(), b.beta_q());
        assert!((u_q - 1.0).abs() < 1e-15);
        let mid = 0.5 * (b.beta_c() + b.beta_q());
        assert!((upper_bound(mid, 0.5, b.beta_c(), b.beta_q()) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn threshold_clips_to_classical_value() {
        // a legal but weak slope puts the crossing below beta_C; the
        // threshold then clips to beta_C
        let alpha = TiltParameter::new(0.0).unwrap();
        let beta_q = quantum_value(alpha);
        let s = 0.05;
        let consts = BoundConstants::new(alpha, s, 1.0 - s * beta_q).unwrap();
        let b = BoundFunction::from_constants(alpha, consts);
        assert!(b.f(b.beta_c()).unwrap() > b.lambda0_sq());
        assert_eq!(b.threshold(), b.beta_c());
    }

    #[test]
    fn threshold_is_interior_across_alpha() {
        for i in 0..40 {
            let alpha = TiltParameter::new(1.95 * i as f64 / 39.0).unwrap();
            let b = BoundFunction::for_alpha(alpha).unwrap();
            assert!(
                b.threshold() > b.beta_c() && b.threshold() < b.beta_q(),
                "alpha = {}: threshold {} not interior",
                alpha.value(),
                b.threshold()
            );
        }
    }

    #[test]
    fn comparison_table_shape_and_domination() {
        // a 0.05-spaced alpha sweep
        for i in 0..40 {
            let alpha = 0.05 * i as f64;
            let tilt = TiltParameter::new(alpha).unwrap();
            let b = BoundFunction::for_alpha(tilt).unwrap();
            let table = emit_comparison(&b, 100).unwrap();
            assert_eq!(table.rows.len(), 100);
            assert_eq!(table.rows[0].beta, b.beta_c());
            assert_eq!(table.rows[99].beta, b.beta_q());
            for row in &table.rows {
                assert!(row.trivial <= row.upper + 1e-15);
                assert!(
                    row.f_nd <= row.upper + 1e-9,
                    "alpha {alpha}: f_nd {} above upper {} at beta {}",
                    row.f_nd,
                    row.upper,
                    row.beta
                );
            }
        }
    }

    #[test]
    fn points_file_parsing() {
        let good = "# swap-method data\n2.1 0.52\n2.5\t0.8 # inline note\n\n2.8 0.99\n";
        let pts = read_comparison_points(good.as_bytes()).unwrap();
        assert_eq!(pts.len(), 3);
        assert_eq!(pts[1], (2.5, 0.8));

        let bad = "2.1 0.52\n2.5 oops\n";
        assert!(matches!(
            read_comparison_points(bad.as_bytes()),
            Err(Error::MalformedPointsFile { line: 2, .. })
        ));

        let bad_arity = "2.1 0.52 3.3\n";
        assert!(read_comparison_points(bad_arity.as_bytes()).is_err());
    }
}
