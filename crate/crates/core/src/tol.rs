//! Numerical thresholds used across the library.
//!
//! Every tolerance that shapes behaviour lives here so that a change is a
//! one-line diff with the rationale next to it. Values are deliberate, not
//! tuned: loosening one to make a test pass is a bug.

/// Relative asymmetry allowed by symmetric-input validation (`sym_eig`,
/// [`SpdMatrix`](crate::SpdMatrix)): `‖S − Sᵀ‖_F ≤ SYMMETRY_REL · ‖S‖_F`. Two
/// orders above f64 rounding so products of the form AΣAᵀ pass after explicit
/// symmetrization.
pub const SYMMETRY_REL: f64 = 1e-12;

/// Jacobi eigendecomposition stops once the off-diagonal Frobenius mass drops
/// below `JACOBI_OFF · ‖S‖_F`.
pub const JACOBI_OFF: f64 = 1e-14;

/// Sweep cap for the cyclic Jacobi iteration; quadratic convergence makes
/// hitting this a structural failure, not a patience problem.
pub const JACOBI_SWEEP_CAP: usize = 100;

/// One-sided Jacobi SVD: column pair (i, j) counts as orthogonal when
/// `|gᵢᵀgⱼ| ≤ SVD_ORTH · ‖gᵢ‖·‖gⱼ‖`.
pub const SVD_ORTH: f64 = 1e-14;

/// Sweep cap for the one-sided Jacobi SVD.
pub const SVD_SWEEP_CAP: usize = 60;

/// `mat_exp` scales its argument by 2⁻ˢ until the Frobenius norm is at or
/// below this bound before summing the truncated series.
pub const EXPM_SCALE_LIMIT: f64 = 0.5;

/// Truncation degree of the `mat_exp` power series; at argument norm 0.5 the
/// first dropped term is 0.5¹⁴/14! ≈ 7e-16.
pub const EXPM_SERIES_DEGREE: usize = 13;

/// Scale-aware singularity test for `inverse_det`:
/// `|det| ≤ SINGULARITY · (‖M‖_F/√n)ⁿ` refuses the inverse.
pub const SINGULARITY: f64 = 1e-12;

/// Kronecker-vectorized Lyapunov oracle refuses n above this (n⁴ memory).
pub const KRON_CAP: usize = 32;

/// Default membership tolerance for `in_generalized_orthogonal`; two orders
/// above kernel accuracy.
pub const ISOTROPY_DEFAULT: f64 = 1e-8;

/// Integration aborts with `OffFiber` once the relative fiber residual of an
/// iterate exceeds this; every formula the stepper relies on is only valid on
/// the fiber.
pub const OFF_FIBER_ABORT: f64 = 1e-6;

/// `b_inverse_fiber` requires its input to sit on the fiber this tightly; the
/// inverse identity it evaluates is meaningless elsewhere.
pub const FIBER_PRECONDITION: f64 = 1e-6;

/// Default stopping threshold on ‖Ω‖_F: Ω is the reduced gradient, so its
/// norm is the first-order optimality measure.
pub const OMEGA_TOL_DEFAULT: f64 = 1e-10;

/// `polar_via_flow` reports `NotConverged` when the final gradient norm is
/// still above this ceiling at max_steps.
pub const FLOW_CONVERGENCE_CEILING: f64 = 1e-6;

/// Polar operations refuse instances with λ_min(Σ₁)/λ_max(Σ₁) below this
/// rather than return low-quality factors.
pub const ILL_CONDITION_RATIO: f64 = 1e-10;

/// `polar_oracle` verifies its closed form instead of trusting it: the
/// computed P must satisfy PΣ₀Pᵀ = Σ₁ to this relative accuracy.
pub const ORACLE_FIBER: f64 = 1e-9;

/// Ensemble draw acceptance: `|det| > coeff · (‖A‖_F/√n)ⁿ` with this default
/// coefficient (configurable per experiment).
pub const INVERTIBILITY_COEFF: f64 = 1e-8;

/// A single ensemble slot may burn at most this many draws before the
/// generator gives up; the overall budget is therefore 100·count.
pub const DRAW_CAP_PER_SLOT: usize = 100;

/// Scale-aware singularity threshold for an n×n matrix of Frobenius norm
/// `fro`.
pub fn singularity_threshold(n: usize, fro: f64) -> f64 {
    SINGULARITY * (fro / (n as f64).sqrt()).powi(n as i32)
}
