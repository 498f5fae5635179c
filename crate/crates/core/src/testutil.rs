//! Proptest strategies shared by the unit-test modules.

use std::ops::RangeInclusive;

use proptest::prelude::*;

use crate::eig::SpdMatrix;
use crate::geometry::MongeInstance;
use crate::matrix::{determinant, SquareMatrix};

/// Dense matrix with entries in (-4, 4).
pub fn square(dims: RangeInclusive<usize>) -> impl Strategy<Value = SquareMatrix> {
    dims.prop_flat_map(|n| {
        proptest::collection::vec(-4.0f64..4.0, n * n)
            .prop_map(move |data| SquareMatrix::from_flat(n, data).unwrap())
    })
}

/// Symmetric matrix as the symmetric part of a dense draw.
pub fn symmetric(dims: RangeInclusive<usize>) -> impl Strategy<Value = SquareMatrix> {
    square(dims).prop_map(|m| m.sym_part())
}

/// Well-conditioned SPD matrix: MMᵀ + I/2 (λ_min ≥ 1/2 by construction).
pub fn spd(dims: RangeInclusive<usize>) -> impl Strategy<Value = SpdMatrix> {
    square(dims).prop_map(|m| {
        let gram = &m * &m.transpose();
        let shifted = &gram + &SquareMatrix::identity(m.n()).scaled(0.5);
        SpdMatrix::new(shifted.sym_part()).unwrap()
    })
}

/// Invertible matrix in the identity component, with the determinant bounded
/// away from zero so downstream solves stay well behaved.
pub fn invertible_pos(dims: RangeInclusive<usize>) -> impl Strategy<Value = SquareMatrix> {
    square(dims).prop_filter("det too small", |m| determinant(m) > 0.1)
}

/// Transport instance whose target covariance spectrum sits inside the
/// stability region of the default step size (fixed-step integration at
/// h = 0.1 needs λ_min(Σ₁) above h²).
pub fn instance(dims: RangeInclusive<usize>) -> impl Strategy<Value = MongeInstance> {
    dims.prop_flat_map(|n| (invertible_pos(n..=n), spd(n..=n)))
        .prop_filter_map("target covariance out of range", |(a, sigma0)| {
            let inst = MongeInstance::new(a, sigma0).ok()?;
            let ok = inst.sigma1().lambda_min() >= 0.05 && inst.sigma1().lambda_max() <= 1e3;
            ok.then_some(inst)
        })
}
