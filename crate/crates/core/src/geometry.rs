//! Geometry of the Gaussian transport problem: the cost functional, the
//! Riemannian metric and distance, the congruence action and its fibers, and
//! the vertical/horizontal tangent splitting.

use crate::eig::{spd_sqrt, SpdMatrix};
use crate::error::{Error, Result};
use crate::matrix::{determinant, inverse_det, SquareMatrix};
use crate::rng::SplitMix;
use crate::sylvester::{solve_lyapunov, LyapunovSystem};
use crate::tol;

/// One transport problem: source covariance Σ₀, candidate map A, and the
/// target covariance Σ₁ = AΣ₀Aᵀ it induces. A⁻¹, Σ₀⁻¹ and the composite
/// kernel A⁻ᵀΣ₀⁻¹A⁻¹ are factored once here; the flow consumes them every
/// step.
#[derive(Clone, Debug)]
pub struct MongeInstance {
    sigma0: SpdMatrix,
    a: SquareMatrix,
    sigma1: SpdMatrix,
    a_inv: SquareMatrix,
    sigma0_inv: SquareMatrix,
    inverse_kernel: SquareMatrix,
    det_a: f64,
    allow_negative_det: bool,
}

impl MongeInstance {
    /// Builds an instance on the identity component: det(A) must be positive.
    ///
    /// # Errors
    ///
    /// `DimensionMismatch`, `Singular` (A not invertible),
    /// `NegativeDeterminant`, or SPD validation failures for Σ₁.
    pub fn new(a: SquareMatrix, sigma0: SpdMatrix) -> Result<Self> {
        Self::build(a, sigma0, false)
    }

    /// Escape hatch for det(A) < 0 experiments. The flow makes no
    /// convergence claim off the identity component.
    pub fn with_negative_det(a: SquareMatrix, sigma0: SpdMatrix) -> Result<Self> {
        Self::build(a, sigma0, true)
    }

    fn build(a: SquareMatrix, sigma0: SpdMatrix, allow_negative_det: bool) -> Result<Self> {
        if a.n() != sigma0.n() {
            return Err(Error::DimensionMismatch { expected: sigma0.n(), got: a.n() });
        }
        let (a_inv, det_a) = inverse_det(&a)?;
        if det_a < 0.0 && !allow_negative_det {
            return Err(Error::NegativeDeterminant { det: det_a });
        }
        let sigma1 = congruence_push(&a, &sigma0)?;
        let (sigma0_inv, _) = inverse_det(sigma0.base())?;
        let inverse_kernel = &(&a_inv.transpose() * &sigma0_inv) * &a_inv;
        Ok(Self {
            sigma0,
            a,
            sigma1,
            a_inv,
            sigma0_inv,
            inverse_kernel,
            det_a,
            allow_negative_det,
        })
    }

    pub fn n(&self) -> usize {
        self.a.n()
    }

    pub fn sigma0(&self) -> &SpdMatrix {
        &self.sigma0
    }

    pub fn a(&self) -> &SquareMatrix {
        &self.a
    }

    pub fn sigma1(&self) -> &SpdMatrix {
        &self.sigma1
    }

    pub fn a_inv(&self) -> &SquareMatrix {
        &self.a_inv
    }

    pub fn sigma0_inv(&self) -> &SquareMatrix {
        &self.sigma0_inv
    }

    /// A⁻ᵀΣ₀⁻¹A⁻¹, the fixed right factor of the fiber inverse identity.
    pub(crate) fn inverse_kernel(&self) -> &SquareMatrix {
        &self.inverse_kernel
    }

    pub fn det_a(&self) -> f64 {
        self.det_a
    }

    pub fn allow_negative_det(&self) -> bool {
        self.allow_negative_det
    }
}

/// J(A) = Tr(Σ₀(I−A)ᵀ(I−A)), the expected squared displacement of the map
/// x ↦ Ax over N(0, Σ₀). Equals distance(I, A)².
///
/// # Errors
///
/// `DimensionMismatch`.
pub fn cost_j(a: &SquareMatrix, sigma0: &SpdMatrix) -> Result<f64> {
    if a.n() != sigma0.n() {
        return Err(Error::DimensionMismatch { expected: sigma0.n(), got: a.n() });
    }
    let e = &SquareMatrix::identity(a.n()) - a;
    Ok((&(sigma0.base() * &e.transpose()) * &e).trace())
}

/// Monte Carlo estimate of the same functional: the sample mean of
/// ‖x − Ax‖² over x = Σ₀^{1/2}z, z standard normal, with its standard error.
/// Deterministic for a fixed seed. Requires samples ≥ 2 (for the error bar).
///
/// # Errors
///
/// `DimensionMismatch`.
pub fn cost_j_monte_carlo(
    a: &SquareMatrix,
    sigma0: &SpdMatrix,
    samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    assert!(samples >= 2, "standard error needs at least two samples");
    let n = a.n();
    if n != sigma0.n() {
        return Err(Error::DimensionMismatch { expected: sigma0.n(), got: n });
    }
    let root = spd_sqrt(sigma0);
    let mut stream = SplitMix::new(seed);
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut z = vec![0.0; n];
    let mut x = vec![0.0; n];
    for _ in 0..samples {
        for zi in z.iter_mut() {
            *zi = stream.standard_normal();
        }
        for i in 0..n {
            x[i] = (0..n).map(|j| root.base()[(i, j)] * z[j]).sum();
        }
        let mut value = 0.0;
        for i in 0..n {
            let ax: f64 = (0..n).map(|j| a[(i, j)] * x[j]).sum();
            let diff = x[i] - ax;
            value += diff * diff;
        }
        sum += value;
        sum_sq += value * value;
    }
    let m = samples as f64;
    let mean = sum / m;
    let variance = (sum_sq - m * mean * mean).max(0.0) / (m - 1.0);
    Ok((mean, (variance / m).sqrt()))
}

/// The congruence action π(A)·Σ = AΣAᵀ, symmetrized before SPD validation to
/// cancel accumulated floating asymmetry.
///
/// # Errors
///
/// `DimensionMismatch`; `Singular` if A is not invertible (the image would
/// lose definiteness).
pub fn congruence_push(a: &SquareMatrix, sigma: &SpdMatrix) -> Result<SpdMatrix> {
    if a.n() != sigma.n() {
        return Err(Error::DimensionMismatch { expected: sigma.n(), got: a.n() });
    }
    let det = determinant(a);
    let threshold = tol::singularity_threshold(a.n(), a.frobenius_norm());
    if det.abs() <= threshold {
        return Err(Error::Singular { det, threshold });
    }
    let pushed = &(a * sigma.base()) * &a.transpose();
    SpdMatrix::new(pushed.sym_part())
}

/// Relative distance of B from the fiber {B: BΣ₀Bᵀ = Σ₁}:
/// ‖BΣ₀Bᵀ − Σ₁‖_F / ‖Σ₁‖_F.
pub fn fiber_residual(b: &SquareMatrix, inst: &MongeInstance) -> f64 {
    assert_eq!(b.n(), inst.n(), "dimension mismatch");
    let pushed = &(b * inst.sigma0.base()) * &b.transpose();
    (&pushed - inst.sigma1.base()).frobenius_norm() / inst.sigma1.base().frobenius_norm()
}

/// The metric G_A(Ȧ₁, Ȧ₂) = Tr(Σ₀Ȧ₁ᵀȦ₂). The base point does not enter the
/// formula (the metric is translation-invariant in A) but is kept in the
/// signature as the carrier of the dimension contract.
///
/// # Errors
///
/// `DimensionMismatch`.
pub fn metric_g(
    a: &SquareMatrix,
    adot1: &SquareMatrix,
    adot2: &SquareMatrix,
    sigma0: &SpdMatrix,
) -> Result<f64> {
    let n = sigma0.n();
    for operand in [a, adot1, adot2] {
        if operand.n() != n {
            return Err(Error::DimensionMismatch { expected: n, got: operand.n() });
        }
    }
    Ok((&(sigma0.base() * &adot1.transpose()) * adot2).trace())
}

/// d(A₀, A₁) = √Tr(Σ₀(A₀−A₁)ᵀ(A₀−A₁)), the distance induced by the metric.
///
/// # Errors
///
/// `DimensionMismatch`.
pub fn distance(a0: &SquareMatrix, a1: &SquareMatrix, sigma0: &SpdMatrix) -> Result<f64> {
    let diff = a0 - a1;
    let g = metric_g(a0, &diff, &diff, sigma0)?;
    // Rounding may push the quadratic form epsilon-negative at diff = 0.
    Ok(g.max(0.0).sqrt())
}

/// The G-orthogonal splitting of a tangent vector Ȧ at A into its vertical
/// part (tangent to the fiber) and horizontal part.
#[derive(Clone, Debug)]
pub struct TangentSplit {
    /// V with VΣ + ΣVᵀ = 0; the vertical part of Ȧ is V·A.
    pub vertical_coeff: SquareMatrix,
    /// Symmetric U; the horizontal part of Ȧ is U·A.
    pub horizontal_coeff: SquareMatrix,
    pub base_point: SquareMatrix,
    /// Σ = π(A), the covariance at which the splitting lives.
    pub sigma: SpdMatrix,
}

/// Splits Ȧ = (V + U)·A with U the unique symmetric solution of
/// UΣ + ΣU = MΣ + ΣMᵀ, M = ȦA⁻¹, and V = M − U vertical.
///
/// # Errors
///
/// `DimensionMismatch`; `Singular` if A is not invertible.
pub fn tangent_split(
    adot: &SquareMatrix,
    a: &SquareMatrix,
    sigma0: &SpdMatrix,
) -> Result<TangentSplit> {
    if adot.n() != a.n() {
        return Err(Error::DimensionMismatch { expected: a.n(), got: adot.n() });
    }
    let sigma = congruence_push(a, sigma0)?;
    let (a_inv, _) = inverse_det(a)?;
    let m = adot * &a_inv;
    let s = sigma.base();
    let rhs = &(&m * s) + &(s * &m.transpose());
    let u = solve_lyapunov(&LyapunovSystem::new(sigma.clone(), rhs)?);
    let u = u.sym_part();
    let v = &m - &u;
    Ok(TangentSplit {
        vertical_coeff: v,
        horizontal_coeff: u,
        base_point: a.clone(),
        sigma,
    })
}

/// Membership test for the generalized orthogonal group O(n, Σ₀):
/// ‖QΣ₀Qᵀ − Σ₀‖_F ≤ tol·‖Σ₀‖_F.
pub fn in_generalized_orthogonal(q: &SquareMatrix, sigma0: &SpdMatrix, tol: f64) -> bool {
    if q.n() != sigma0.n() {
        return false;
    }
    let s = sigma0.base();
    let pushed = &(q * s) * &q.transpose();
    (&pushed - s).frobenius_norm() <= tol * s.frobenius_norm()
}
