//! The right-reduced vertical gradient flow Ḃ = ΩB restricted to one fiber:
//! the reduced gradient Ω, the inverse-free fiber identity for B⁻¹, the
//! structure-preserving Lie–Euler step, and full integration with
//! diagnostics.

use crate::error::{Error, Result};
use crate::expm::mat_exp;
use crate::geometry::{cost_j, distance, fiber_residual, MongeInstance};
use crate::matrix::{inverse_det, SquareMatrix};
use crate::sylvester::solve_lyapunov_skew;
use crate::tol;

/// One point on a trajectory.
#[derive(Clone, Debug)]
pub struct FlowState {
    pub b: SquareMatrix,
    pub step_index: usize,
    /// step_index · h.
    pub time: f64,
}

/// Integration controls. The defaults reproduce the reference experiment:
/// fixed step 0.1 for 300 steps, with an added gradient-norm stop at 1e-10
/// (Ω is the reduced gradient, so its norm is the natural first-order
/// optimality measure).
#[derive(Clone, Debug)]
pub struct FlowOptions {
    pub h: f64,
    pub max_steps: usize,
    /// Stop once ‖Ω‖_F drops to this.
    pub omega_tol: f64,
    /// Record every k-th state (the final state is always recorded).
    pub record_every: usize,
    /// Cross-check the fiber inverse identity against direct inversion at
    /// every recorded step; the worst relative deviation lands in the trace.
    pub check_inverse: bool,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            h: 0.1,
            max_steps: 300,
            omega_tol: tol::OMEGA_TOL_DEFAULT,
            record_every: 1,
            check_inverse: false,
        }
    }
}

/// Time-indexed record of one integration. All per-step lists share length;
/// entry i belongs to states[i].
#[derive(Clone, Debug)]
pub struct FlowTrace {
    pub states: Vec<FlowState>,
    /// J(B_k).
    pub cost: Vec<f64>,
    /// ‖Ω_k‖_F.
    pub omega_norm: Vec<f64>,
    /// Relative fiber residual of B_k.
    pub fiber_res: Vec<f64>,
    /// d²(B_k, reference), present when a reference was supplied.
    pub dist_to_ref_sq: Option<Vec<f64>>,
    /// Worst fiber residual over every step taken, recorded or not.
    pub max_fiber_residual: f64,
    /// Worst ‖ΩΣ₁ + Σ₁Ωᵀ‖_F / (‖Ω‖_F·‖Σ₁‖_F) over every step taken.
    pub max_skew_residual: f64,
    /// Worst relative deviation between the fiber inverse identity and
    /// direct inversion; present when `check_inverse` was set.
    pub max_inverse_dev: Option<f64>,
}

impl FlowTrace {
    pub fn final_state(&self) -> &FlowState {
        self.states.last().expect("a trace holds at least the initial state")
    }

    /// True when the last evaluated gradient norm reached the stop threshold.
    pub fn converged(&self, omega_tol: f64) -> bool {
        self.omega_norm.last().is_some_and(|&w| w <= omega_tol)
    }
}

/// B⁻¹ through the fiber identity B⁻¹ = Σ₀Bᵀ·(A⁻ᵀΣ₀⁻¹A⁻¹), valid because
/// BΣ₀Bᵀ = Σ₁ lets Bᵀ absorb the inverse. Costs two products per call; the
/// kernel in parentheses is factored once per instance.
///
/// # Errors
///
/// `OffFiber` when the relative fiber residual of B exceeds 1e-6 (the
/// identity is meaningless elsewhere).
pub fn b_inverse_fiber(b: &SquareMatrix, inst: &MongeInstance) -> Result<SquareMatrix> {
    let residual = fiber_residual(b, inst);
    if residual > tol::FIBER_PRECONDITION {
        return Err(Error::OffFiber { residual, step: None });
    }
    Ok(&(inst.sigma0().base() * &b.transpose()) * inst.inverse_kernel())
}

/// The reduced gradient: the unique Ω solving Σ₁Ω + ΩΣ₁ = 2Σ₁(B⁻¹ − B⁻ᵀ).
///
/// B⁻¹ − B⁻ᵀ is skew by construction, so the structured Lyapunov path
/// applies and ΩΣ₁ stays skew to machine precision (the generic solver
/// would lose that to a condition-number factor).
///
/// # Errors
///
/// `OffFiber` propagated from the inverse identity.
pub fn compute_omega(b: &SquareMatrix, inst: &MongeInstance) -> Result<SquareMatrix> {
    let b_inv = b_inverse_fiber(b, inst)?;
    let d = &b_inv - &b_inv.transpose();
    Ok(solve_lyapunov_skew(inst.sigma1(), &d))
}

fn advance(state: &FlowState, omega: &SquareMatrix, h: f64) -> FlowState {
    let step_index = state.step_index + 1;
    FlowState {
        b: &mat_exp(&omega.scaled(h)) * &state.b,
        step_index,
        time: step_index as f64 * h,
    }
}

/// One step of B_{k+1} = exp(hΩ_k)B_k. The exponential lies in the isotropy
/// group of Σ₁, so the step cannot leave the fiber.
///
/// # Errors
///
/// `OffFiber` propagated from the gradient computation.
pub fn lie_euler_step(state: &FlowState, inst: &MongeInstance, h: f64) -> Result<FlowState> {
    let omega = compute_omega(&state.b, inst)?;
    Ok(advance(state, &omega, h))
}

/// Instantaneous decay of the cost along the flow: dJ/dt = −2Tr(Σ₀ΩB).
/// Nonpositive wherever Ω is the reduced gradient at B.
pub fn djdt(b: &SquareMatrix, omega: &SquareMatrix, inst: &MongeInstance) -> f64 {
    -2.0 * (&(inst.sigma0().base() * omega) * b).trace()
}

/// Integrates the flow from B(0) = A until ‖Ω‖_F ≤ omega_tol or max_steps.
///
/// # Errors
///
/// `NegativeDeterminant` if the instance starts off the identity component
/// without the explicit opt-in; `OffFiber` if an iterate drifts beyond the
/// 1e-6 residual ceiling (a numerical fault, not a normal outcome).
pub fn integrate(inst: &MongeInstance, opts: &FlowOptions) -> Result<FlowTrace> {
    integrate_with_reference(inst, opts, None)
}

/// `integrate`, additionally recording the squared distance of every
/// recorded state to a reference point (the experiment harness passes the
/// directly computed polar factor).
pub fn integrate_with_reference(
    inst: &MongeInstance,
    opts: &FlowOptions,
    reference: Option<&SquareMatrix>,
) -> Result<FlowTrace> {
    assert!(opts.h > 0.0, "step size must be positive");
    assert!(opts.max_steps >= 1, "need at least one step");
    assert!(opts.record_every >= 1, "record_every must be positive");
    if inst.det_a() <= 0.0 && !inst.allow_negative_det() {
        return Err(Error::NegativeDeterminant { det: inst.det_a() });
    }

    let sigma1 = inst.sigma1().base();
    let sigma1_fro = sigma1.frobenius_norm();
    let mut trace = FlowTrace {
        states: Vec::new(),
        cost: Vec::new(),
        omega_norm: Vec::new(),
        fiber_res: Vec::new(),
        dist_to_ref_sq: reference.map(|_| Vec::new()),
        max_fiber_residual: 0.0,
        max_skew_residual: 0.0,
        max_inverse_dev: opts.check_inverse.then_some(0.0),
    };

    let mut state = FlowState { b: inst.a().clone(), step_index: 0, time: 0.0 };
    loop {
        let k = state.step_index;
        let residual = fiber_residual(&state.b, inst);
        trace.max_fiber_residual = trace.max_fiber_residual.max(residual);
        if residual > tol::OFF_FIBER_ABORT {
            return Err(Error::OffFiber { residual, step: Some(k) });
        }
        let omega = compute_omega(&state.b, inst)?;
        let omega_norm = omega.frobenius_norm();
        if omega_norm > 0.0 {
            let skew = (&(&omega * sigma1) + &(sigma1 * &omega.transpose())).frobenius_norm()
                / (omega_norm * sigma1_fro);
            trace.max_skew_residual = trace.max_skew_residual.max(skew);
        }
        let due = k % opts.record_every == 0;
        if due {
            if let Some(dev) = trace.max_inverse_dev.as_mut() {
                let (direct, _) = inverse_det(&state.b)?;
                let via_fiber = b_inverse_fiber(&state.b, inst)?;
                let rel = (&via_fiber - &direct).frobenius_norm() / direct.frobenius_norm();
                *dev = dev.max(rel);
            }
        }
        let stopping = omega_norm <= opts.omega_tol || k == opts.max_steps;
        if due || stopping {
            trace.cost.push(cost_j(&state.b, inst.sigma0())?);
            trace.omega_norm.push(omega_norm);
            trace.fiber_res.push(residual);
            if let Some(p) = reference {
                let d = distance(&state.b, p, inst.sigma0())?;
                trace.dist_to_ref_sq.as_mut().expect("allocated with reference").push(d * d);
            }
            trace.states.push(state.clone());
        }
        if stopping {
            break;
        }
        state = advance(&state, &omega, opts.h);
    }
    Ok(trace)
}
