//! Backward adjoint solver and the control gradient.
//!
//! The adjoint systems are the exact transposes of the linearized forward
//! steps: transport operators enter transposed (which carries the ∇·y
//! correction of the strong form), the cross couplings are assembled with
//! the test function in the transport slot, and the projection adjoint
//! reuses the forward saddle factorization with the pressure block negated.
//! That transposition is what makes the discrete duality identity hold to
//! rounding and the gradient formula exact for the discrete objective.

use crate::error::{Error, Result};
use crate::fem::{assemble_convection_c_frozen, assemble_convection_e_frozen};
use crate::solver::ConstrainedSystem;
use crate::state::{
    interpolate_target, ControlTrajectory, Discretization, Objective, StateTrajectory,
};
use crate::util::{axpy, scale, sub};

/// Per-time-step adjoint fields. `z`, `z_tilde` and `zeta` are indexed by the
/// time step with terminal entries `[N+1]` identically zero; `xi[n]` holds
/// the pressure adjoint for steps `1..=N` (diagnostic only).
#[derive(Clone, Debug)]
pub struct AdjointTrajectory {
    pub z: Vec<Vec<f64>>,
    pub z_tilde: Vec<Vec<f64>>,
    pub xi: Vec<Vec<f64>>,
    pub zeta: Vec<Vec<f64>>,
}

/// Gradient of the state term of the objective with respect to yⁿ, without
/// the Δt weight: the tracking misfit tested against the velocity mass, or
/// the weak curl‑curl action for the vorticity objective.
pub fn state_gradient_source(
    disc: &Discretization,
    traj: &StateTrajectory,
    step: usize,
) -> Vec<f64> {
    match disc.setup().objective {
        Objective::Tracking { weight, .. } => {
            let diff = sub(&traj.y[step], &interpolate_target(disc, step));
            let mut r = disc.ops.mass2.matvec(&diff);
            scale(&mut r, weight);
            r
        }
        Objective::Vorticity => disc.ops.curl_form.matvec(&traj.y[step]),
    }
}

/// Backward sweep over the fully discrete adjoint system.
pub fn solve_adjoint(disc: &Discretization, state: &StateTrajectory) -> Result<AdjointTrajectory> {
    solve_adjoint_scaled(disc, state, 1.0)
}

/// Same as [`solve_adjoint`] with the objective source scaled by
/// `source_scale`; the adjoint is linear in that source for a frozen state,
/// which tests assert through this entry point.
pub fn solve_adjoint_scaled(
    disc: &Discretization,
    state: &StateTrajectory,
    source_scale: f64,
) -> Result<AdjointTrajectory> {
    let setup = disc.setup();
    let n = disc.n_fine();
    let n_steps = setup.steps;
    let dt = disc.dt();
    let mesh = &setup.mesh.fine;

    let mut z = vec![vec![0.0; 2 * n]; n_steps + 2];
    let mut z_tilde = vec![vec![0.0; 2 * n]; n_steps + 2];
    let mut xi = vec![vec![0.0; disc.n_pressure()]; n_steps + 1];
    let mut zeta = vec![vec![0.0; n]; n_steps + 2];

    let proj_zero = vec![0.0; disc.proj_dofs.len()];
    let theta_zero = vec![0.0; disc.theta_dirichlet.len()];

    for step in (1..=n_steps).rev() {
        // (i) projection adjoint for (zⁿ, ξⁿ)
        let mut rhs_vel = state_gradient_source(disc, state, step);
        if source_scale != 1.0 {
            scale(&mut rhs_vel, source_scale);
        }
        let mut rhs_div = vec![0.0; disc.n_pressure()];
        if step < n_steps {
            disc.ops
                .mass2
                .matvec_add_scaled(&z_tilde[step + 1], 1.0 / dt, &mut rhs_vel);
            if setup.convection {
                let gy = assemble_convection_c_frozen(mesh, &state.y_tilde[step + 1]);
                gy.transpose()
                    .matvec_add_scaled(&z_tilde[step + 1], -1.0, &mut rhs_vel);
                let gt = assemble_convection_e_frozen(mesh, &state.theta[step + 1]);
                gt.transpose()
                    .matvec_add_scaled(&zeta[step + 1], -1.0, &mut rhs_vel);
            }
            let coupled = sub(&z[step + 1], &z_tilde[step + 1]);
            rhs_div = disc.ops.divergence.matvec(&coupled);
        }
        let (zn, pressure_block) =
            disc.solve_saddle(&rhs_vel, &rhs_div, &proj_zero, step, "adjoint projection")?;
        let mut xin = pressure_block;
        scale(&mut xin, -1.0);

        // (ii) momentum adjoint: transposed advection-diffusion, homogeneous
        // Dirichlet where the forward step was constrained
        let kt = disc.momentum_matrix(&state.y[step - 1]).transpose();
        let sys = ConstrainedSystem::new(&kt, &disc.adv_nodes)
            .map_err(|_| Error::LinearSolve { step, system: "adjoint momentum" })?;
        let adv_zero = vec![0.0; disc.adv_nodes.len()];
        let mut rhs_x = disc.ops.mass.matvec(&zn[..n]);
        scale(&mut rhs_x, 1.0 / dt);
        let mut rhs_y = disc.ops.mass.matvec(&zn[n..]);
        scale(&mut rhs_y, 1.0 / dt);
        let mut ztn = sys.solve(&rhs_x, &adv_zero);
        ztn.extend_from_slice(&sys.solve(&rhs_y, &adv_zero));
        if ztn.iter().any(|x| !x.is_finite()) {
            return Err(Error::LinearSolve { step, system: "adjoint momentum" });
        }

        // (iii) temperature adjoint, sourced by the buoyancy pairing z̃ⁿ·e₂
        let at = disc.theta_matrix(&state.y[step - 1]).transpose();
        let mut rhs = disc.ops.mass.matvec(&zeta[step + 1]);
        scale(&mut rhs, 1.0 / dt);
        disc.ops.mass.matvec_add_scaled(&ztn[n..], 1.0, &mut rhs);
        let sys = ConstrainedSystem::new(&at, &disc.theta_dirichlet)
            .map_err(|_| Error::LinearSolve { step, system: "adjoint temperature" })?;
        let zetan = sys.solve(&rhs, &theta_zero);
        if zetan.iter().any(|x| !x.is_finite()) {
            return Err(Error::LinearSolve { step, system: "adjoint temperature" });
        }

        z[step] = zn;
        z_tilde[step] = ztn;
        xi[step] = xin;
        zeta[step] = zetan;
    }
    Ok(AdjointTrajectory { z, z_tilde, xi, zeta })
}

/// Riesz representer of the objective differential in U^Δt:
/// gⁿ = ζⁿ|_{Γ_c} + α vⁿ, so stationarity reads g = 0 nodally.
pub fn compute_gradient(
    disc: &Discretization,
    adj: &AdjointTrajectory,
    v: &ControlTrajectory,
) -> ControlTrajectory {
    let alpha = disc.setup().alpha;
    let mut g = Vec::with_capacity(v.steps());
    for step in 1..=v.steps() {
        let mut gn = disc.control.trace(&adj.zeta[step]);
        axpy(&mut gn, alpha, &v.0[step - 1]);
        g.push(gn);
    }
    ControlTrajectory(g)
}

/// Per-step CSV of (arc-length coordinate on Γ_c, gⁿ), one file per side.
pub fn write_gradient_csv(
    disc: &Discretization,
    g: &ControlTrajectory,
    dir: &std::path::Path,
) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for side in &disc.control.sides {
        let path = dir.join(format!("gradient_{}.csv", side.tag.name().to_lowercase()));
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        use std::io::Write;
        write!(f, "s")?;
        for step in 1..=g.steps() {
            write!(f, ",t{:.6}", step as f64 * disc.dt())?;
        }
        writeln!(f)?;
        for (k, &loc) in side.local.iter().enumerate() {
            write!(f, "{:.12e}", side.arclength[k])?;
            for gn in &g.0 {
                write!(f, ",{:.12e}", gn[loc])?;
            }
            writeln!(f)?;
        }
    }
    Ok(())
}
