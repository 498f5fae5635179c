//! Lyapunov-form Sylvester equations ΣX + XΣ = C with Σ symmetric positive
//! definite: a spectral production solver, a Kronecker-vectorized oracle, a
//! structured fast path for skew right-hand sides, and Sep diagnostics.

use crate::eig::SpdMatrix;
use crate::error::{Error, Result};
use crate::matrix::{solve_linear, SquareMatrix};
use crate::rng::SplitMix;
use crate::tol;

/// One equation ΣX + XΣ = C. Σ SPD makes every eigenvalue pair sum positive,
/// so the solution exists and is unique.
#[derive(Clone, Debug)]
pub struct LyapunovSystem {
    sigma: SpdMatrix,
    rhs: SquareMatrix,
}

impl LyapunovSystem {
    /// # Errors
    ///
    /// `DimensionMismatch` when Σ and C disagree in size.
    pub fn new(sigma: SpdMatrix, rhs: SquareMatrix) -> Result<Self> {
        if sigma.n() != rhs.n() {
            return Err(Error::DimensionMismatch { expected: sigma.n(), got: rhs.n() });
        }
        Ok(Self { sigma, rhs })
    }

    pub fn sigma(&self) -> &SpdMatrix {
        &self.sigma
    }

    pub fn rhs(&self) -> &SquareMatrix {
        &self.rhs
    }
}

/// Spectral solver: in the eigenbasis of Σ the equation decouples entrywise
/// into X̃_ij = C̃_ij/(λ_i + λ_j).
pub fn solve_lyapunov(sys: &LyapunovSystem) -> SquareMatrix {
    let eig = sys.sigma.eig();
    let q = &eig.basis;
    let lam = &eig.eigenvalues;
    let c_tilde = &(&q.transpose() * &sys.rhs) * q;
    let x_tilde =
        SquareMatrix::from_fn(sys.rhs.n(), |i, j| c_tilde[(i, j)] / (lam[i] + lam[j]));
    &(q * &x_tilde) * &q.transpose()
}

/// Brute-force oracle: materializes the n²×n² operator I⊗Σ + Σ⊗I under
/// column-stacking vectorization and solves the dense linear system.
///
/// # Errors
///
/// `DimensionTooLarge` above n = 32 (the operator costs n⁴ memory). The
/// operator is SPD (spectrum {λ_i + λ_j}), so the dense solve cannot hit a
/// zero pivot.
pub fn solve_lyapunov_kron(sys: &LyapunovSystem) -> Result<SquareMatrix> {
    let n = sys.rhs.n();
    if n > tol::KRON_CAP {
        return Err(Error::DimensionTooLarge { n, cap: tol::KRON_CAP });
    }
    let op = kron_operator(sys.sigma());
    let mut vec_c = vec![0.0; n * n];
    for j in 0..n {
        for i in 0..n {
            vec_c[j * n + i] = sys.rhs[(i, j)];
        }
    }
    let vec_x = solve_linear(&op, &vec_c)?;
    Ok(SquareMatrix::from_fn(n, |i, j| vec_x[j * n + i]))
}

/// I⊗Σ + Σ⊗I with columns stacked first: component r of vec(X) is entry
/// (r mod n, r div n).
fn kron_operator(sigma: &SpdMatrix) -> SquareMatrix {
    let n = sigma.n();
    let s = sigma.base();
    SquareMatrix::from_fn(n * n, |r, c| {
        let (i, j) = (r % n, r / n);
        let (ip, jp) = (c % n, c / n);
        let left = if j == jp { s[(i, ip)] } else { 0.0 };
        let right = if i == ip { s[(j, jp)] } else { 0.0 };
        left + right
    })
}

/// Structured fast path for ΣX + XΣ = 2ΣD with D exactly skew.
///
/// The right-hand side is re-skewed inside the eigenbasis before the
/// entrywise solve, which makes X̃Λ + ΛX̃ᵀ vanish identically: the entry
/// multipliers 2λ_i/(λ_i+λ_j) never amplify rotation rounding by the
/// condition number, so XΣ + ΣXᵀ = 0 holds to machine precision even for
/// ill-conditioned Σ. The generic solver satisfies the same identity only up
/// to a condition-number factor.
pub fn solve_lyapunov_skew(sigma: &SpdMatrix, d: &SquareMatrix) -> SquareMatrix {
    let eig = sigma.eig();
    let q = &eig.basis;
    let lam = &eig.eigenvalues;
    let d_rot = &(&q.transpose() * d) * q;
    let d_skew = SquareMatrix::from_fn(d.n(), |i, j| 0.5 * (d_rot[(i, j)] - d_rot[(j, i)]));
    let x_tilde = SquareMatrix::from_fn(d.n(), |i, j| {
        2.0 * lam[i] * d_skew[(i, j)] / (lam[i] + lam[j])
    });
    &(q * &x_tilde) * &q.transpose()
}

/// Sep(Σ) = 2λ_min(Σ): the smallest singular value of X ↦ XΣ + ΣX on SPD Σ.
pub fn sep(sigma: &SpdMatrix) -> f64 {
    2.0 * sigma.lambda_min()
}

/// Empirical Sep: the minimum of ‖XΣ + ΣX‖_F/‖X‖_F over seeded random X and
/// the analytic witness vvᵀ built from the minimal eigenvector, which attains
/// 2λ_min.
pub fn sep_sample(sigma: &SpdMatrix, samples: usize, seed: u64) -> f64 {
    let n = sigma.n();
    let mut stream = SplitMix::new(seed);
    let mut best = f64::INFINITY;
    for _ in 0..samples {
        let data: Vec<f64> = (0..n * n).map(|_| stream.standard_normal()).collect();
        let x = SquareMatrix::from_flat(n, data).expect("normals are finite");
        best = best.min(sep_ratio(sigma, &x));
    }
    let basis = &sigma.eig().basis;
    let witness = SquareMatrix::from_fn(n, |i, j| basis[(i, n - 1)] * basis[(j, n - 1)]);
    best.min(sep_ratio(sigma, &witness))
}

fn sep_ratio(sigma: &SpdMatrix, x: &SquareMatrix) -> f64 {
    let s = sigma.base();
    ((&(x * s) + &(s * x)).frobenius_norm()) / x.frobenius_norm()
}
