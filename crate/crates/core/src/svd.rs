//! Singular value decomposition of invertible dense matrices.
//!
//! Two routes share one public entry point: an analytic route for n ≤ 3
//! (eigendecomposition of AAᵀ, right factor recovered as V = AᵀU·diag(1/σ),
//! which stays orthogonal even under repeated singular values) and a
//! one-sided Jacobi sweep for larger n. Both refuse singular input; the
//! library only ever needs the SVD of invertible matrices.

use crate::eig::sym_eig;
use crate::error::{Error, Result};
use crate::matrix::{determinant, SquareMatrix};
use crate::tol;

/// A = u·diag(singular_values)·vᵀ with orthogonal u, v and the singular
/// values sorted descending (all strictly positive).
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: SquareMatrix,
    pub singular_values: Vec<f64>,
    pub v: SquareMatrix,
}

/// # Errors
///
/// `Singular` below the scale-aware determinant threshold; `NoConvergence`
/// if the Jacobi sweep cap is hit (n ≥ 4 route).
pub fn svd(a: &SquareMatrix) -> Result<Svd> {
    let det = determinant(a);
    let threshold = tol::singularity_threshold(a.n(), a.frobenius_norm());
    if det.abs() <= threshold {
        return Err(Error::Singular { det, threshold });
    }
    let mut out = if a.n() <= 3 { svd_small(a)? } else { svd_jacobi(a)? };
    fix_signs(&mut out);
    Ok(out)
}

/// Analytic route: AAᵀ = U·diag(σ²)·Uᵀ, then V = AᵀU·diag(1/σ).
fn svd_small(a: &SquareMatrix) -> Result<Svd> {
    let gram = (a * &a.transpose()).sym_part();
    let eig = sym_eig(&gram)?;
    let singular_values: Vec<f64> =
        eig.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()).collect();
    let u = eig.basis;
    let atu = &a.transpose() * &u;
    let v = SquareMatrix::from_fn(a.n(), |i, j| atu[(i, j)] / singular_values[j]);
    Ok(Svd { u, singular_values, v })
}

/// One-sided Jacobi: right rotations orthogonalize the columns of A; the
/// rotated matrix's column norms are the singular values.
fn svd_jacobi(a: &SquareMatrix) -> Result<Svd> {
    let n = a.n();
    let mut g = a.clone();
    let mut v = SquareMatrix::identity(n);
    let mut sweeps = 0;
    loop {
        let mut rotated = false;
        for i in 0..n {
            for j in (i + 1)..n {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = 0.0;
                for k in 0..n {
                    alpha += g[(k, i)] * g[(k, i)];
                    beta += g[(k, j)] * g[(k, j)];
                    gamma += g[(k, i)] * g[(k, j)];
                }
                if gamma.abs() <= tol::SVD_ORTH * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = if zeta >= 0.0 {
                    1.0 / (zeta + (zeta * zeta + 1.0).sqrt())
                } else {
                    -1.0 / (-zeta + (zeta * zeta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = c * t;
                for k in 0..n {
                    let gki = g[(k, i)];
                    let gkj = g[(k, j)];
                    g[(k, i)] = c * gki - s * gkj;
                    g[(k, j)] = s * gki + c * gkj;
                    let vki = v[(k, i)];
                    let vkj = v[(k, j)];
                    v[(k, i)] = c * vki - s * vkj;
                    v[(k, j)] = s * vki + c * vkj;
                }
            }
        }
        if !rotated {
            break;
        }
        sweeps += 1;
        if sweeps >= tol::SVD_SWEEP_CAP {
            return Err(Error::NoConvergence { sweeps });
        }
    }

    let mut norms: Vec<f64> = (0..n)
        .map(|j| (0..n).map(|k| g[(k, j)] * g[(k, j)]).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap());
    norms.sort_by(|x, y| y.partial_cmp(x).unwrap());
    let u = SquareMatrix::from_fn(n, |i, j| g[(i, order[j])] / norms[j]);
    let v = SquareMatrix::from_fn(n, |i, j| v[(i, order[j])]);
    Ok(Svd { u, singular_values: norms, v })
}

/// Deterministic orientation: the largest-magnitude entry of each u column
/// (first index on ties) is made positive, flipping the matching v column to
/// keep the product unchanged.
fn fix_signs(out: &mut Svd) {
    let n = out.u.n();
    for j in 0..n {
        let mut lead = 0;
        for i in 1..n {
            if out.u[(i, j)].abs() > out.u[(lead, j)].abs() {
                lead = i;
            }
        }
        if out.u[(lead, j)] < 0.0 {
            for i in 0..n {
                out.u[(i, j)] = -out.u[(i, j)];
                out.v[(i, j)] = -out.v[(i, j)];
            }
        }
    }
}
