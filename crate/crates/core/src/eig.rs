//! Symmetric eigendecomposition (cyclic Jacobi), the validated SPD wrapper,
//! and the SPD square root.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;
use crate::tol;

/// Eigendecomposition of a symmetric matrix: S = basis·diag(eigenvalues)·basisᵀ.
///
/// Eigenvalues are sorted descending. Each basis column has its
/// largest-magnitude entry positive (first index on ties), so the
/// decomposition is deterministic up to eigenvalue multiplicity.
#[derive(Clone, Debug)]
pub struct SymEig {
    pub eigenvalues: Vec<f64>,
    pub basis: SquareMatrix,
}

impl SymEig {
    /// basis·diag(eigenvalues)·basisᵀ.
    pub fn reconstruct(&self) -> SquareMatrix {
        self.spectral_map(|lambda| lambda)
    }

    /// basis·diag(f(eigenvalues))·basisᵀ, the spectral calculus used by the
    /// SPD square root and the Lyapunov solver.
    pub fn spectral_map(&self, f: impl Fn(f64) -> f64) -> SquareMatrix {
        let n = self.eigenvalues.len();
        let q = &self.basis;
        SquareMatrix::from_fn(n, |i, j| {
            (0..n).map(|k| q[(i, k)] * f(self.eigenvalues[k]) * q[(j, k)]).sum()
        })
    }
}

/// Off-diagonal Frobenius mass, the Jacobi convergence measure.
fn off_mass(a: &SquareMatrix) -> f64 {
    let n = a.n();
    let mut sum = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            sum += 2.0 * a[(i, j)] * a[(i, j)];
        }
    }
    sum.sqrt()
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// # Errors
///
/// `NotSymmetric` when ‖S − Sᵀ‖_F > 1e-12·‖S‖_F; `NoConvergence` when the
/// off-diagonal mass has not dropped below 1e-14·‖S‖_F after 100 sweeps.
pub fn sym_eig(s: &SquareMatrix) -> Result<SymEig> {
    let deviation = symmetry_deviation(s);
    if deviation > tol::SYMMETRY_REL {
        return Err(Error::NotSymmetric { deviation });
    }
    let n = s.n();
    let mut a = s.sym_part();
    let mut v = SquareMatrix::identity(n);
    let threshold = tol::JACOBI_OFF * s.frobenius_norm();

    let mut converged = off_mass(&a) <= threshold;
    let mut sweeps = 0;
    while !converged && sweeps < tol::JACOBI_SWEEP_CAP {
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                // Classic two-sided rotation choosing the smaller angle.
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (theta * theta + 1.0).sqrt())
                } else {
                    -1.0 / (-theta + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - sn * akq;
                    a[(k, q)] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - sn * aqk;
                    a[(q, k)] = sn * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - sn * vkq;
                    v[(k, q)] = sn * vkp + c * vkq;
                }
            }
        }
        sweeps += 1;
        converged = off_mass(&a) <= threshold;
    }
    if !converged {
        return Err(Error::NoConvergence { sweeps });
    }

    // Sort descending; a stable sort keeps tie order deterministic.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].partial_cmp(&a[(i, i)]).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&k| a[(k, k)]).collect();
    let mut basis = SquareMatrix::from_fn(n, |i, j| v[(i, order[j])]);
    for j in 0..n {
        let mut lead = 0;
        for i in 1..n {
            if basis[(i, j)].abs() > basis[(lead, j)].abs() {
                lead = i;
            }
        }
        if basis[(lead, j)] < 0.0 {
            for i in 0..n {
                basis[(i, j)] = -basis[(i, j)];
            }
        }
    }
    Ok(SymEig { eigenvalues, basis })
}

/// ‖S − Sᵀ‖_F / ‖S‖_F, with 0 for the zero matrix.
pub fn symmetry_deviation(s: &SquareMatrix) -> f64 {
    let fro = s.frobenius_norm();
    if fro == 0.0 {
        0.0
    } else {
        (s - &s.transpose()).frobenius_norm() / fro
    }
}

/// A symmetric positive-definite matrix, validated on construction, carrying
/// its eigendecomposition for downstream spectral work.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "SquareMatrix", into = "SquareMatrix")]
pub struct SpdMatrix {
    base: SquareMatrix,
    eig: SymEig,
}

impl SpdMatrix {
    /// # Errors
    ///
    /// `NotSymmetric` beyond 1e-12 relative; `NotSpd` if the smallest
    /// eigenvalue is not strictly positive.
    pub fn new(base: SquareMatrix) -> Result<Self> {
        let eig = sym_eig(&base)?;
        let lambda_min = *eig.eigenvalues.last().expect("n >= 1");
        if lambda_min <= 0.0 {
            return Err(Error::NotSpd { lambda_min });
        }
        Ok(Self { base, eig })
    }

    pub fn identity(n: usize) -> Self {
        Self::new(SquareMatrix::identity(n)).expect("identity is SPD")
    }

    pub fn base(&self) -> &SquareMatrix {
        &self.base
    }

    pub fn n(&self) -> usize {
        self.base.n()
    }

    pub fn eig(&self) -> &SymEig {
        &self.eig
    }

    pub fn lambda_min(&self) -> f64 {
        *self.eig.eigenvalues.last().expect("n >= 1")
    }

    pub fn lambda_max(&self) -> f64 {
        self.eig.eigenvalues[0]
    }
}

/// The eigendecomposition is derived data, so equality is equality of bases.
impl PartialEq for SpdMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.base == other.base
    }
}

impl TryFrom<SquareMatrix> for SpdMatrix {
    type Error = Error;
    fn try_from(base: SquareMatrix) -> Result<Self> {
        Self::new(base)
    }
}

impl From<SpdMatrix> for SquareMatrix {
    fn from(s: SpdMatrix) -> Self {
        s.base
    }
}

/// SPD square root via the spectral calculus: R = Q·diag(√λ)·Qᵀ.
///
/// The type already certifies λ_min > 0, so the root always exists; the
/// result is revalidated to keep the SPD invariant airtight.
pub fn spd_sqrt(s: &SpdMatrix) -> SpdMatrix {
    let root = s.eig().spectral_map(f64::sqrt).sym_part();
    SpdMatrix::new(root).expect("spectral root of an SPD matrix is SPD")
}
