//! Polar decomposition of invertible matrices via a structure-preserving
//! gradient flow on the fibers of the Gaussian transport problem, together
//! with the dense kernels, independent oracles, and experiment harness that
//! support it.

pub mod eig;
pub mod error;
pub mod experiment;
pub mod expm;
pub mod flow;
pub mod geometry;
pub mod matrix;
pub mod polar;
pub mod rng;
pub mod svd;
pub mod sylvester;
pub mod tol;

#[cfg(test)]
pub(crate) mod testutil;

pub use eig::{spd_sqrt, sym_eig, SpdMatrix, SymEig};
pub use error::{Error, Result};
pub use experiment::{
    emit_csv, generate_ensemble, run_experiment, AggregateRow, ExperimentConfig,
    ExperimentMetadata, ExperimentReport, SamplePoint, Sigma0Spec, TrajectoryCurve,
};
pub use expm::mat_exp;
pub use flow::{
    b_inverse_fiber, compute_omega, djdt, integrate, integrate_with_reference, lie_euler_step,
    FlowOptions, FlowState, FlowTrace,
};
pub use geometry::{
    congruence_push, cost_j, cost_j_monte_carlo, distance, fiber_residual,
    in_generalized_orthogonal, metric_g, tangent_split, MongeInstance, TangentSplit,
};
pub use matrix::{determinant, inverse_det, solve_linear, SquareMatrix};
pub use polar::{
    polar_oracle, polar_via_flow, verify_decomposition, verify_parts, FactorMethod, PolarFactors,
    VerificationReport,
};
pub use rng::{derive_stream_seed, SplitMix};
pub use svd::{svd, Svd};
pub use sylvester::{
    sep, sep_sample, solve_lyapunov, solve_lyapunov_kron, solve_lyapunov_skew, LyapunovSystem,
};
