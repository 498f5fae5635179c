//! Matrix exponential by scaling-and-squaring over a truncated power series.

use crate::matrix::SquareMatrix;
use crate::tol;

/// exp(M) for any finite square matrix.
///
/// M is halved until its Frobenius norm is at most 1/2, the degree-13 series
/// is summed (first dropped term ≤ 0.5¹⁴/14! ≈ 7e-16), and the result is
/// squared back up.
pub fn mat_exp(m: &SquareMatrix) -> SquareMatrix {
    let n = m.n();
    let mut scale = 1.0;
    let mut squarings = 0u32;
    while m.frobenius_norm() * scale > tol::EXPM_SCALE_LIMIT {
        scale *= 0.5;
        squarings += 1;
    }
    let x = m.scaled(scale);

    let mut sum = SquareMatrix::identity(n);
    let mut term = SquareMatrix::identity(n);
    for k in 1..=tol::EXPM_SERIES_DEGREE {
        term = (&term * &x).scaled(1.0 / k as f64);
        sum = &sum + &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}
