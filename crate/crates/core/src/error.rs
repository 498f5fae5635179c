//! Library-wide error type.

use std::fmt;
use std::path::PathBuf;

use crate::matrix::SquareMatrix;

#[derive(Debug)]
pub enum Error {
    /// A constructor received NaN or infinite entries.
    NonFinite,
    /// A constructor received an empty or ragged row layout.
    InvalidShape { rows: usize, cols: usize },
    /// Two operands (or an operand and an instance) disagree in dimension.
    DimensionMismatch { expected: usize, got: usize },
    /// Input exceeds a deliberate size cap (e.g. the Kronecker oracle).
    DimensionTooLarge { n: usize, cap: usize },
    /// A symmetric-only operation received an asymmetric matrix.
    NotSymmetric { deviation: f64 },
    /// The Jacobi iteration hit its sweep cap.
    NoConvergence { sweeps: usize },
    /// SPD validation found a nonpositive smallest eigenvalue.
    NotSpd { lambda_min: f64 },
    /// Determinant below the scale-aware singularity threshold.
    Singular { det: f64, threshold: f64 },
    /// The flow requires the identity component: det(A) must be positive.
    NegativeDeterminant { det: f64 },
    /// An iterate drifted off the constraint manifold.
    OffFiber { residual: f64, step: Option<usize> },
    /// The flow hit max_steps with the gradient norm still large; the
    /// candidate factors ride along for diagnosis.
    NotConverged {
        omega_norm: f64,
        p: Box<SquareMatrix>,
        q: Box<SquareMatrix>,
    },
    /// λ_min/λ_max of the target covariance is below the quality guard.
    IllConditioned { ratio: f64 },
    /// The ensemble generator exhausted its draw budget for one slot.
    ExhaustedDraws { slot: usize, attempts: usize },
    /// Filesystem failure, with the offending path.
    Io { path: PathBuf, source: std::io::Error },
}

pub type Result<T> = std::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NonFinite => write!(f, "matrix entries must be finite"),
            Error::InvalidShape { rows, cols } => {
                write!(f, "not a square row layout: {rows} rows, offending width {cols}")
            }
            Error::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::DimensionTooLarge { n, cap } => {
                write!(f, "dimension {n} exceeds cap {cap}")
            }
            Error::NotSymmetric { deviation } => {
                write!(f, "matrix is not symmetric (relative deviation {deviation:.3e})")
            }
            Error::NoConvergence { sweeps } => {
                write!(f, "iteration failed to converge within {sweeps} sweeps")
            }
            Error::NotSpd { lambda_min } => {
                write!(f, "matrix is not positive definite (lambda_min = {lambda_min:.3e})")
            }
            Error::Singular { det, threshold } => {
                write!(f, "matrix is singular (|det| = {:.3e} <= threshold {threshold:.3e})", det.abs())
            }
            Error::NegativeDeterminant { det } => {
                write!(f, "determinant {det:.3e} is not positive; flow requires the identity component")
            }
            Error::OffFiber { residual, step } => match step {
                Some(k) => write!(f, "iterate left the fiber at step {k} (residual {residual:.3e})"),
                None => write!(f, "matrix is off the fiber (residual {residual:.3e})"),
            },
            Error::NotConverged { omega_norm, .. } => {
                write!(f, "flow did not converge (final gradient norm {omega_norm:.3e})")
            }
            Error::IllConditioned { ratio } => {
                write!(f, "target covariance too ill-conditioned (lambda ratio {ratio:.3e})")
            }
            Error::ExhaustedDraws { slot, attempts } => {
                write!(f, "ensemble slot {slot} exhausted {attempts} draws")
            }
            Error::Io { path, source } => {
                write!(f, "i/o failure on {}: {source}", path.display())
            }
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io { source, .. } => Some(source),
            _ => None,
        }
    }
}
