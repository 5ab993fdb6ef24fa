use thiserror::Error;

/// Errors produced by the certification toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },

    #[error("subsystem dims {dims:?} do not factor a matrix of dim {dim}")]
    InconsistentDims { dims: Vec<usize>, dim: usize },

    #[error("matrix entries must be finite")]
    NonFinite,

    #[error("matrix is not Hermitian: max |M - M^dag| entry {deviation:.3e} exceeds {tol:.1e}")]
    NotHermitian { deviation: f64, tol: f64 },

    #[error("not a density matrix: {reason}")]
    NotDensity { reason: String },

    #[error("state is not pure: tr(rho^2) = {purity}")]
    NotPure { purity: f64 },

    #[error("angle {angle} outside [{lo}, {hi}]")]
    AngleOutOfRange { angle: f64, lo: f64, hi: f64 },

    #[error("tilt parameter {alpha} outside [0, 2)")]
    AlphaOutOfRange { alpha: f64 },

    #[error("constants solved for alpha = {expected} but applied at alpha = {actual}")]
    ConstantsMismatch { expected: f64, actual: f64 },

    #[error(
        "equalisation root not bracketed on [{lo}, {hi}]: objective {f_lo:.6e} at lo, {f_hi:.6e} at hi (alpha = {alpha})"
    )]
    RootNotBracketed {
        alpha: f64,
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("invalid bound constants: {0}")]
    InvalidConstants(String),

    #[error("invalid grid spec: {0}")]
    InvalidGrid(String),

    #[error("bell value {beta} outside [{beta_c}, {beta_q}]")]
    BetaOutOfRange { beta: f64, beta_c: f64, beta_q: f64 },

    #[error("weight {v} outside (0, 1)")]
    WeightOutOfRange { v: f64 },

    #[error("malformed points file, line {line}: {reason}")]
    MalformedPointsFile { line: usize, reason: String },

    #[error("invalid search config: {0}")]
    InvalidConfig(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
