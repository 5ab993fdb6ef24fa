//! Numerical certification of robust self-testing bounds for two-qubit
//! states from tilted-CHSH violations.
//!
//! The crate has three legs:
//!
//! * an operator-inequality grid certificate: solve the affine bound
//!   constants per tilt, then verify positivity of the certificate operator
//!   over the full measurement-angle grid ([`certifier`]);
//! * affine extractability bounds, their trivial/upper envelopes and
//!   threshold violations ([`bounds`]);
//! * a block-diagonal state that violates CHSH while its singlet
//!   extractability stays at the separable level, together with the lemma
//!   suite and a channel search that probe it ([`counterexample`],
//!   [`search`]).
//!
//! Everything is deterministic: eigensolves use cyclic Jacobi sweeps, random
//! suites take per-sample ChaCha streams, and parallel reductions are keyed
//! so results do not depend on the worker count. Parallel execution is
//! provided by rayon behind the `parallel` feature (on by default); without
//! it every scan falls back to sequential iteration with identical output.

pub mod bell;
pub mod bounds;
pub mod certifier;
pub mod channels;
pub mod counterexample;
mod error;
pub mod linalg;
mod par;
pub mod report;
pub mod search;

pub use error::{Error, Result};
