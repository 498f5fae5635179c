//! Dense row-major square matrices and the LU inverse/determinant kernel.
//!
//! `SquareMatrix` is the universal carrier for every matrix in the library.
//! Construction validates shape and finiteness once; everything downstream
//! may then assume a well-formed value.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tol;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    /// Builds from a row-major list of rows. Rejects empty, ragged, or
    /// non-finite input.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidShape { rows: 0, cols: 0 });
        }
        let mut data = Vec::with_capacity(n * n);
        for row in &rows {
            if row.len() != n {
                return Err(Error::InvalidShape { rows: n, cols: row.len() });
            }
            data.extend_from_slice(row);
        }
        Self::from_flat(n, data)
    }

    /// Builds from a flat row-major buffer of length n².
    pub fn from_flat(n: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 || data.len() != n * n {
            return Err(Error::InvalidShape { rows: n, cols: data.len() });
        }
        if !data.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { n, data })
    }

    /// Builds entrywise from a function of (row, column), called in
    /// row-major order (stateful fills rely on that).
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(n >= 1, "dimension must be positive");
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn zeros(n: usize) -> Self {
        Self::from_fn(n, |_, _| 0.0)
    }

    pub fn diag(entries: &[f64]) -> Self {
        Self::from_fn(entries.len(), |i, j| if i == j { entries[i] } else { 0.0 })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Rows as nested vectors (the JSON wire shape).
    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| self.data[i * self.n..(i + 1) * self.n].to_vec())
            .collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)])
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { n: self.n, data: self.data.iter().map(|x| x * s).collect() }
    }

    /// Symmetric part (M + Mᵀ)/2.
    pub fn sym_part(&self) -> Self {
        Self::from_fn(self.n, |i, j| 0.5 * (self[(i, j)] + self[(j, i)]))
    }

    /// Largest absolute asymmetry relative to the Frobenius norm; 0 for the
    /// zero matrix.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        let fro = self.frobenius_norm();
        if fro == 0.0 {
            0.0
        } else {
            worst / fro
        }
    }
}

impl Index<(usize, usize)> for SquareMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for SquareMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

impl TryFrom<Vec<Vec<f64>>> for SquareMatrix {
    type Error = Error;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(rows)
    }
}

impl From<SquareMatrix> for Vec<Vec<f64>> {
    fn from(m: SquareMatrix) -> Self {
        m.to_rows()
    }
}

impl Mul for &SquareMatrix {
    type Output = SquareMatrix;
    fn mul(self, rhs: &SquareMatrix) -> SquareMatrix {
        assert_eq!(self.n, rhs.n, "dimension mismatch in matrix product");
        let n = self.n;
        let mut out = SquareMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

impl Add for &SquareMatrix {
    type Output = SquareMatrix;
    fn add(self, rhs: &SquareMatrix) -> SquareMatrix {
        assert_eq!(self.n, rhs.n, "dimension mismatch in matrix sum");
        SquareMatrix::from_fn(self.n, |i, j| self[(i, j)] + rhs[(i, j)])
    }
}

impl Sub for &SquareMatrix {
    type Output = SquareMatrix;
    fn sub(self, rhs: &SquareMatrix) -> SquareMatrix {
        assert_eq!(self.n, rhs.n, "dimension mismatch in matrix difference");
        SquareMatrix::from_fn(self.n, |i, j| self[(i, j)] - rhs[(i, j)])
    }
}

/// LU factorization with partial pivoting, kept packed. A zero pivot is
/// recorded as determinant zero rather than an error so that determinant
/// queries never fail; only an explicit inverse demands regularity.
struct Lu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
    det: f64,
}

fn lu_factor(m: &SquareMatrix) -> Lu {
    let n = m.n();
    let mut lu: Vec<f64> = (0..n * n).map(|k| m[(k / n, k % n)]).collect();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut det = 1.0;
    for col in 0..n {
        let mut pivot_row = col;
        let mut pivot_abs = lu[col * n + col].abs();
        for r in (col + 1)..n {
            let v = lu[r * n + col].abs();
            if v > pivot_abs {
                pivot_abs = v;
                pivot_row = r;
            }
        }
        if pivot_abs == 0.0 {
            return Lu { n, lu, perm, det: 0.0 };
        }
        if pivot_row != col {
            for j in 0..n {
                lu.swap(col * n + j, pivot_row * n + j);
            }
            perm.swap(col, pivot_row);
            det = -det;
        }
        let pivot = lu[col * n + col];
        det *= pivot;
        for r in (col + 1)..n {
            let factor = lu[r * n + col] / pivot;
            lu[r * n + col] = factor;
            for j in (col + 1)..n {
                lu[r * n + j] -= factor * lu[col * n + j];
            }
        }
    }
    Lu { n, lu, perm, det }
}

impl Lu {
    /// Solves LUx = Pb in place of the permuted right-hand side.
    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 1..n {
            for j in 0..i {
                x[i] -= self.lu[i * n + j] * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in (i + 1)..n {
                x[i] -= self.lu[i * n + j] * x[j];
            }
            x[i] /= self.lu[i * n + i];
        }
        x
    }
}

/// Determinant via LU with partial pivoting; never fails.
pub fn determinant(m: &SquareMatrix) -> f64 {
    lu_factor(m).det
}

/// Solves Mx = b through one LU factorization.
///
/// Refuses only exactly singular elimination (a hard zero pivot). Callers
/// with generic, possibly near-singular input should go through
/// [`inverse_det`], whose scale-aware gate is calibrated for small n; this
/// entry point serves structurally solvable systems (e.g. SPD operators of
/// dimension n²) where that gate would misfire.
///
/// # Errors
///
/// `Singular` on a zero pivot; `DimensionMismatch` if the right-hand side
/// length differs from n.
pub fn solve_linear(m: &SquareMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = m.n();
    if b.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: b.len() });
    }
    let fac = lu_factor(m);
    if fac.det == 0.0 {
        return Err(Error::Singular { det: 0.0, threshold: 0.0 });
    }
    Ok(fac.solve(b))
}

/// Inverse and determinant in one factorization.
///
/// # Errors
///
/// `Singular` when `|det| ≤ 1e-12·(‖M‖_F/√n)ⁿ` (scale-aware threshold).
pub fn inverse_det(m: &SquareMatrix) -> Result<(SquareMatrix, f64)> {
    let n = m.n();
    let fac = lu_factor(m);
    let threshold = tol::singularity_threshold(n, m.frobenius_norm());
    if fac.det.abs() <= threshold {
        return Err(Error::Singular { det: fac.det, threshold });
    }
    let mut inv = SquareMatrix::zeros(n);
    let mut e = vec![0.0; n];
    for col in 0..n {
        e[col] = 1.0;
        let x = fac.solve(&e);
        e[col] = 0.0;
        for (row, v) in x.into_iter().enumerate() {
            inv[(row, col)] = v;
        }
    }
    Ok((inv, fac.det))
}
