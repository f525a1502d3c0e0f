//! Linearized state (sensitivity) solver and the model step size.
//!
//! The sensitivity system marches the same split steps as the forward solver
//! with the coefficients frozen at the current trajectory, plus the terms
//! from perturbing the transport field. A quadratic model of the objective
//! along a search direction follows, whose exact minimizer is the step size:
//! no line search and no extra state solves.

use crate::error::{Error, Result};
use crate::fem::{assemble_convection_c_frozen, assemble_convection_e_frozen};
use crate::solver::ConstrainedSystem;
use crate::state::{
    interpolate_target, ControlTrajectory, Discretization, Objective, StateTrajectory,
};
use crate::util::{axpy, dot, scale, sub};

/// Per-time-step sensitivity fields; index 0 holds the (zero) initial data.
#[derive(Clone, Debug)]
pub struct SensitivityTrajectory {
    pub w: Vec<Vec<f64>>,
    pub w_tilde: Vec<Vec<f64>>,
    pub q: Vec<Vec<f64>>,
    pub phi: Vec<Vec<f64>>,
}

/// Solve the linearized state system along the control direction `d`,
/// around the trajectory `state` (which must come from the current iterate).
pub fn solve_linearized(
    disc: &Discretization,
    state: &StateTrajectory,
    d: &ControlTrajectory,
) -> Result<SensitivityTrajectory> {
    let setup = disc.setup();
    let n = disc.n_fine();
    let n_steps = setup.steps;
    assert_eq!(d.steps(), n_steps);
    let dt = disc.dt();
    let mesh = &setup.mesh.fine;

    let mut w = Vec::with_capacity(n_steps + 1);
    let mut w_tilde = Vec::with_capacity(n_steps + 1);
    let mut q = Vec::with_capacity(n_steps + 1);
    let mut phi = Vec::with_capacity(n_steps + 1);
    w.push(vec![0.0; 2 * n]);
    w_tilde.push(vec![0.0; 2 * n]);
    q.push(vec![0.0; disc.n_pressure()]);
    phi.push(vec![0.0; n]);

    let theta_zero = vec![0.0; disc.theta_dirichlet.len()];
    let adv_zero = vec![0.0; disc.adv_nodes.len()];
    let proj_zero = vec![0.0; disc.proj_dofs.len()];

    for step in 1..=n_steps {
        let w_prev = &w[step - 1];

        // (i) temperature sensitivity: transport perturbation acts on the
        // current θ, boundary data is the direction dⁿ
        let a_theta = disc.theta_matrix(&state.y[step - 1]);
        let mut rhs = disc.ops.mass.matvec(&phi[step - 1]);
        scale(&mut rhs, 1.0 / dt);
        if setup.convection {
            let gt = assemble_convection_e_frozen(mesh, &state.theta[step]);
            gt.matvec_add_scaled(w_prev, -1.0, &mut rhs);
        }
        disc.control
            .to_field
            .matvec_add_scaled(&d.0[step - 1], 1.0, &mut rhs);
        let sys = ConstrainedSystem::new(&a_theta, &disc.theta_dirichlet)
            .map_err(|_| Error::LinearSolve { step, system: "sensitivity temperature" })?;
        let phin = sys.solve(&rhs, &theta_zero);

        // (ii) momentum sensitivity with frozen-coefficient convection
        let k = disc.momentum_matrix(&state.y[step - 1]);
        let bq = disc.div_t.matvec(&q[step - 1]);
        let mut rhs2 = disc.ops.mass2.matvec(w_prev);
        scale(&mut rhs2, 1.0 / dt);
        axpy(&mut rhs2, 1.0, &bq);
        if setup.convection {
            let gy = assemble_convection_c_frozen(mesh, &state.y_tilde[step]);
            gy.matvec_add_scaled(w_prev, -1.0, &mut rhs2);
        }
        disc.ops
            .mass
            .matvec_add_scaled(&phin, 1.0, &mut rhs2[n..]);
        let sys = ConstrainedSystem::new(&k, &disc.adv_nodes)
            .map_err(|_| Error::LinearSolve { step, system: "sensitivity momentum" })?;
        let mut wt = sys.solve(&rhs2[..n], &adv_zero);
        wt.extend_from_slice(&sys.solve(&rhs2[n..], &adv_zero));
        if wt.iter().any(|x| !x.is_finite()) {
            return Err(Error::LinearSolve { step, system: "sensitivity momentum" });
        }

        // (iii) projection with homogeneous constraints
        let mut rhs_vel = disc.ops.mass2.matvec(&wt);
        scale(&mut rhs_vel, 1.0 / dt);
        let rhs_div = vec![0.0; disc.n_pressure()];
        let (wn, dq) =
            disc.solve_saddle(&rhs_vel, &rhs_div, &proj_zero, step, "sensitivity projection")?;
        let mut qn = q[step - 1].clone();
        axpy(&mut qn, 1.0, &dq);

        w.push(wn);
        w_tilde.push(wt);
        q.push(qn);
        phi.push(phin);
    }
    Ok(SensitivityTrajectory { w, w_tilde, q, phi })
}

/// Closed-form minimizer of the quadratic model along `d`:
/// ρ̂ = −(g, d)_{U^Δt} / (Δt Σ ‖wⁿ‖² + α Δt Σ ‖dⁿ‖²_{Γc}), with the state
/// norm replaced by the curl form for the vorticity objective.
pub fn step_size(
    disc: &Discretization,
    g: &ControlTrajectory,
    d: &ControlTrajectory,
    w: &SensitivityTrajectory,
) -> Result<f64> {
    let numerator = disc.control.dot(g, d);
    let dt = disc.dt();
    let mut state_term = 0.0;
    for step in 1..=disc.setup().steps {
        state_term += match disc.setup().objective {
            Objective::Tracking { weight, .. } => {
                weight * dot(&disc.ops.mass2.matvec(&w.w[step]), &w.w[step])
            }
            Objective::Vorticity => disc.ops.curl.energy(&w.w[step]),
        };
    }
    let denominator = dt * state_term + disc.setup().alpha * disc.control.dot(d, d);
    if denominator < 1e-300 {
        return Err(Error::DegenerateDirection);
    }
    Ok(-numerator / denominator)
}

/// The quadratic model Q(ρ): the objective with yⁿ replaced by yⁿ + ρ wⁿ and
/// vⁿ by vⁿ + ρ dⁿ. Used by the step-size optimality checks.
pub fn quadratic_model(
    disc: &Discretization,
    state: &StateTrajectory,
    v: &ControlTrajectory,
    d: &ControlTrajectory,
    w: &SensitivityTrajectory,
    rho: f64,
) -> f64 {
    let setup = disc.setup();
    let dt = disc.dt();
    let mut state_term = 0.0;
    for step in 1..=setup.steps {
        let mut y = state.y[step].clone();
        axpy(&mut y, rho, &w.w[step]);
        state_term += match setup.objective {
            Objective::Tracking { weight, .. } => {
                let diff = sub(&y, &interpolate_target(disc, step));
                weight * dot(&disc.ops.mass2.matvec(&diff), &diff)
            }
            Objective::Vorticity => disc.ops.curl.energy(&y),
        };
    }
    let mut penalty = 0.0;
    for (vn, dn) in v.0.iter().zip(&d.0) {
        let mut c = vn.clone();
        axpy(&mut c, rho, dn);
        penalty += dot(&disc.control.mass.matvec(&c), &c);
    }
    0.5 * dt * state_term + 0.5 * setup.alpha * dt * penalty
}
