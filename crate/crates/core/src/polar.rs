//! Polar decomposition A = PQ with P symmetric positive definite and Q in
//! the generalized orthogonal group of Σ₀, once as the limit of the
//! vertical gradient flow and once through a direct closed form, plus a
//! verifier that checks any claimed factor pair.

use serde::{Deserialize, Serialize};

use crate::eig::{spd_sqrt, sym_eig, SpdMatrix};
use crate::error::{Error, Result};
use crate::flow::{integrate, FlowOptions};
use crate::geometry::{in_generalized_orthogonal, MongeInstance};
use crate::matrix::{inverse_det, SquareMatrix};
use crate::svd::{svd, Svd};
use crate::tol;

/// Which route produced a factor pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FactorMethod {
    Flow,
    Oracle,
}

/// A = P·Q with P the fiber's cost minimizer and Q carrying the isotropy
/// part. P depends only on (Σ₀, Σ₁), never on where A sits on the fiber.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PolarFactors {
    pub p: SpdMatrix,
    pub q: SquareMatrix,
    pub method: FactorMethod,
}

/// Named outcomes of [`verify_decomposition`]. Every field must hold for a
/// valid factor pair.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct VerificationReport {
    /// ‖PQ − A‖_F ≤ tol·‖A‖_F.
    pub reconstructs: bool,
    /// Relative asymmetry of P within tol.
    pub p_symmetric: bool,
    /// All eigenvalues of the symmetric part of P strictly positive.
    pub p_positive_definite: bool,
    /// QΣ₀Qᵀ = Σ₀ within tol.
    pub q_isotropy: bool,
    /// ‖PΣ₀Pᵀ − AΣ₀Aᵀ‖_F ≤ tol·‖AΣ₀Aᵀ‖_F.
    pub p_on_fiber: bool,
}

impl VerificationReport {
    pub fn all_pass(&self) -> bool {
        self.reconstructs
            && self.p_symmetric
            && self.p_positive_definite
            && self.q_isotropy
            && self.p_on_fiber
    }
}

fn check_conditioning(inst: &MongeInstance) -> Result<()> {
    let ratio = inst.sigma1().lambda_min() / inst.sigma1().lambda_max();
    if ratio < tol::ILL_CONDITION_RATIO {
        return Err(Error::IllConditioned { ratio });
    }
    Ok(())
}

/// Σ₀ = I route: A = WΣVᵀ gives P = WΣWᵀ and Q = WVᵀ.
fn oracle_svd(inst: &MongeInstance) -> Result<(SquareMatrix, SquareMatrix)> {
    let Svd { u, singular_values, v } = svd(inst.a())?;
    let p = (&(&u * &SquareMatrix::diag(&singular_values)) * &u.transpose()).sym_part();
    let q = &u * &v.transpose();
    Ok((p, q))
}

/// General route: P = Σ₀^{−1/2}(Σ₀^{1/2}Σ₁Σ₀^{1/2})^{1/2}Σ₀^{−1/2} is the
/// unique SPD solution of PΣ₀P = Σ₁, and Q = P⁻¹A.
fn oracle_general(inst: &MongeInstance) -> Result<(SquareMatrix, SquareMatrix)> {
    let s0 = inst.sigma0().eig();
    let half = s0.spectral_map(f64::sqrt).sym_part();
    let inv_half = s0.spectral_map(|l| 1.0 / l.sqrt()).sym_part();
    let middle = SpdMatrix::new((&(&half * inst.sigma1().base()) * &half).sym_part())?;
    let p = (&(&inv_half * spd_sqrt(&middle).base()) * &inv_half).sym_part();
    let (p_inv, _) = inverse_det(&p)?;
    let q = &p_inv * inst.a();
    Ok((p, q))
}

/// Direct polar decomposition, independent of the flow.
///
/// Inputs off the identity component are served only when the instance was
/// built with the explicit negative-determinant opt-in; Q then has negative
/// determinant and the flow route does not apply.
///
/// # Errors
///
/// `NegativeDeterminant` without the opt-in; `IllConditioned` when
/// λ_min(Σ₁)/λ_max(Σ₁) < 1e-10; `OffFiber` if the computed P misses
/// PΣ₀Pᵀ = Σ₁ at 1e-9 relative (the closed forms are verified, not
/// trusted).
pub fn polar_oracle(inst: &MongeInstance) -> Result<PolarFactors> {
    if inst.det_a() <= 0.0 && !inst.allow_negative_det() {
        return Err(Error::NegativeDeterminant { det: inst.det_a() });
    }
    check_conditioning(inst)?;
    let identity = SquareMatrix::identity(inst.n());
    let (p, q) = if *inst.sigma0().base() == identity {
        oracle_svd(inst)?
    } else {
        oracle_general(inst)?
    };
    let image = &(&p * inst.sigma0().base()) * &p.transpose();
    let residual = (&image - inst.sigma1().base()).frobenius_norm()
        / inst.sigma1().base().frobenius_norm();
    if residual > tol::ORACLE_FIBER {
        return Err(Error::OffFiber { residual, step: None });
    }
    Ok(PolarFactors { p: SpdMatrix::new(p)?, q, method: FactorMethod::Oracle })
}

/// Polar decomposition as the t → ∞ limit of the vertical gradient flow:
/// integrate, symmetrize the final state, validate SPD, and split off Q.
///
/// # Errors
///
/// `NegativeDeterminant` whenever det(A) ≤ 0 (the flow reaches P only from
/// the identity component, opt-in or not); `IllConditioned` as in
/// [`polar_oracle`]; `NotConverged` if ‖Ω‖_F still exceeds 1e-6 at
/// max_steps, with the candidate factors in the payload for diagnosis.
pub fn polar_via_flow(inst: &MongeInstance, opts: &FlowOptions) -> Result<PolarFactors> {
    if inst.det_a() <= 0.0 {
        return Err(Error::NegativeDeterminant { det: inst.det_a() });
    }
    check_conditioning(inst)?;
    let trace = integrate(inst, opts)?;
    let p_candidate = trace.final_state().b.sym_part();
    let omega_norm = *trace.omega_norm.last().expect("trace holds at least one record");
    if omega_norm > tol::FLOW_CONVERGENCE_CEILING {
        let q_candidate = match inverse_det(&p_candidate) {
            Ok((p_inv, _)) => &p_inv * inst.a(),
            // A singular symmetrized limit admits no meaningful Q candidate.
            Err(_) => SquareMatrix::zeros(inst.n()),
        };
        return Err(Error::NotConverged {
            omega_norm,
            p: Box::new(p_candidate),
            q: Box::new(q_candidate),
        });
    }
    let p = SpdMatrix::new(p_candidate)?;
    let (p_inv, _) = inverse_det(p.base())?;
    let q = &p_inv * inst.a();
    Ok(PolarFactors { p, q, method: FactorMethod::Flow })
}

/// Checks a factor pair against the matrix it claims to decompose. Purely
/// diagnostic: nothing is assumed about the inputs and nothing fails.
pub fn verify_decomposition(
    a: &SquareMatrix,
    factors: &PolarFactors,
    sigma0: &SpdMatrix,
    tol: f64,
) -> VerificationReport {
    verify_parts(a, factors.p.base(), &factors.q, sigma0, tol)
}

/// [`verify_decomposition`] on raw matrices, so that candidates which would
/// not pass SPD validation (e.g. from a `NotConverged` payload) can still be
/// examined.
pub fn verify_parts(
    a: &SquareMatrix,
    p: &SquareMatrix,
    q: &SquareMatrix,
    sigma0: &SpdMatrix,
    tol: f64,
) -> VerificationReport {
    let reconstructs = (&(p * q) - a).frobenius_norm() <= tol * a.frobenius_norm();
    let p_symmetric = p.asymmetry() <= tol;
    let p_positive_definite = match sym_eig(&p.sym_part()) {
        Ok(eig) => eig.eigenvalues.iter().all(|&l| l > 0.0),
        Err(_) => false,
    };
    let q_isotropy = in_generalized_orthogonal(q, sigma0, tol);
    let target = &(a * sigma0.base()) * &a.transpose();
    let image = &(p * sigma0.base()) * &p.transpose();
    let p_on_fiber = (&image - &target).frobenius_norm() <= tol * target.frobenius_norm();
    VerificationReport { reconstructs, p_symmetric, p_positive_definite, q_isotropy, p_on_fiber }
}
