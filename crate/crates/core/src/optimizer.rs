//! Limited-memory BFGS over the control space.
//!
//! All inner products and norms are the Δt-weighted boundary products of
//! U^Δt; the initial inverse-Hessian scaling is the identity on coefficient
//! space. Each iteration costs exactly one state solve, one adjoint solve
//! and one linearized solve (the model step size replaces any line search).
//! Pairs with nonpositive curvature are not stored; a degenerate model
//! denominator falls back to steepest descent for that iteration, which
//! costs one extra linearized solve and is logged.

use std::collections::VecDeque;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use crate::adjoint::{compute_gradient, solve_adjoint};
use crate::error::{Error, Result};
use crate::linearized::{solve_linearized, step_size};
use crate::state::{evaluate_objective, solve_state, ControlSpace, ControlTrajectory, Discretization};

#[derive(Clone, Copy, Debug)]
pub struct LbfgsOptions {
    /// Number of stored (δu, δg) pairs.
    pub memory: usize,
    /// Stop when ‖gₖ‖/‖g₀‖ drops below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Scalar initial inverse-Hessian scaling H₀ (identity by default).
    pub h0: f64,
    /// Optional |ρ| clamp for robustness experiments; off by default.
    pub rho_clamp: Option<f64>,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        Self {
            memory: 5,
            tol: 5e-3,
            max_iter: 200,
            h0: 1.0,
            rho_clamp: None,
        }
    }
}

/// One history row: iterate index, objective, relative gradient norm, step
/// size taken to reach this iterate, and wall time since the solve started.
#[derive(Clone, Copy, Debug)]
pub struct IterationRecord {
    pub k: usize,
    pub j: f64,
    pub grad_rel: f64,
    pub rho: f64,
    pub seconds: f64,
}

struct MemoryPair {
    du: ControlTrajectory,
    dg: ControlTrajectory,
    /// η = 1 / (δg, δu)_{U^Δt}, recorded at insertion.
    eta: f64,
}

/// Ring buffer of curvature pairs with the U^Δt inner product.
pub struct LbfgsMemory {
    m: usize,
    pairs: VecDeque<MemoryPair>,
}

impl LbfgsMemory {
    pub fn new(m: usize) -> Self {
        Self {
            m: m.max(1),
            pairs: VecDeque::new(),
        }
    }

    /// Store a pair unless its curvature (δg, δu)_{U^Δt} is nonpositive;
    /// returns whether it was stored. The oldest pair is evicted at capacity.
    pub fn push(&mut self, space: &ControlSpace, du: ControlTrajectory, dg: ControlTrajectory) -> bool {
        let curvature = space.dot(&dg, &du);
        if !(curvature > 0.0) {
            return false;
        }
        if self.pairs.len() == self.m {
            self.pairs.pop_front();
        }
        self.pairs.push_back(MemoryPair {
            du,
            dg,
            eta: 1.0 / curvature,
        });
        true
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Two-loop recursion: d = -H g with H built from the stored pairs over the
/// U^Δt inner product and H₀ = h0 · identity. Empty memory yields steepest
/// descent.
pub fn two_loop_direction(
    space: &ControlSpace,
    mem: &LbfgsMemory,
    g: &ControlTrajectory,
    h0: f64,
) -> ControlTrajectory {
    let mut d = g.scaled(-1.0);
    let k = mem.pairs.len();
    let mut tau = vec![0.0; k];
    for (i, pair) in mem.pairs.iter().enumerate().rev() {
        tau[i] = pair.eta * space.dot(&pair.du, &d);
        d.axpy(-tau[i], &pair.dg);
    }
    if h0 != 1.0 {
        d = d.scaled(h0);
    }
    for (i, pair) in mem.pairs.iter().enumerate() {
        let kappa = pair.eta * space.dot(&pair.dg, &d);
        d.axpy(tau[i] - kappa, &pair.du);
    }
    d
}

/// Full L-BFGS driver. Returns the best-objective iterate (the model step is
/// unsafeguarded, so the objective may occasionally rise) and the complete
/// iteration history.
pub fn lbfgs_solve(
    disc: &Discretization,
    u0: ControlTrajectory,
    opts: &LbfgsOptions,
) -> Result<(ControlTrajectory, Vec<IterationRecord>)> {
    let start = Instant::now();
    let space = &disc.control;

    let mut u = u0;
    let mut state = solve_state(disc, &u)?;
    let mut j = evaluate_objective(disc, &state, &u);
    let mut g = compute_gradient(disc, &solve_adjoint(disc, &state)?, &u);
    if !j.is_finite() || !g.is_finite() {
        return Err(Error::NonfiniteObjective {
            iteration: 0,
            iterate: Box::new(u),
        });
    }
    let g0_norm = space.norm(&g);
    let mut history = vec![IterationRecord {
        k: 0,
        j,
        grad_rel: 1.0,
        rho: 0.0,
        seconds: start.elapsed().as_secs_f64(),
    }];
    let mut best_j = j;
    let mut best_u = u.clone();
    if g0_norm == 0.0 {
        return Ok((u, history));
    }

    let mut mem = LbfgsMemory::new(opts.memory);
    for k in 0..opts.max_iter {
        let mut dir = two_loop_direction(space, &mem, &g, opts.h0);
        let mut sens = solve_linearized(disc, &state, &dir)?;
        let mut rho = match step_size(disc, &g, &dir, &sens) {
            Ok(r) => r,
            Err(Error::DegenerateDirection) => {
                log::warn!("iteration {k}: degenerate model direction, steepest-descent fallback");
                dir = g.scaled(-1.0);
                sens = solve_linearized(disc, &state, &dir)?;
                step_size(disc, &g, &dir, &sens)?
            }
            Err(e) => return Err(e),
        };
        if let Some(clamp) = opts.rho_clamp {
            rho = rho.clamp(-clamp, clamp);
        }

        let mut u_next = u.clone();
        u_next.axpy(rho, &dir);
        let state_next = solve_state(disc, &u_next)?;
        let j_next = evaluate_objective(disc, &state_next, &u_next);
        let g_next = compute_gradient(disc, &solve_adjoint(disc, &state_next)?, &u_next);
        if !j_next.is_finite() || !g_next.is_finite() {
            return Err(Error::NonfiniteObjective {
                iteration: k + 1,
                iterate: Box::new(u_next),
            });
        }

        let du = u_next.sub(&u);
        let dg = g_next.sub(&g);
        if !mem.push(space, du, dg) {
            log::info!("iteration {}: nonpositive curvature, pair skipped", k + 1);
        }

        u = u_next;
        state = state_next;
        j = j_next;
        g = g_next;
        let grad_rel = space.norm(&g) / g0_norm;
        log::debug!("iteration {}: J = {j:.6e}, |g|/|g0| = {grad_rel:.3e}, rho = {rho:.3e}", k + 1);
        history.push(IterationRecord {
            k: k + 1,
            j,
            grad_rel,
            rho,
            seconds: start.elapsed().as_secs_f64(),
        });
        if j < best_j {
            best_j = j;
            best_u = u.clone();
        }
        if grad_rel < opts.tol {
            break;
        }
    }
    Ok((best_u, history))
}

/// History CSV `k,J,grad_rel,rho,seconds`. Timing is zeroed unless
/// `include_timing` is set, keeping repeated runs byte-identical.
pub fn write_history_csv(
    records: &[IterationRecord],
    path: &Path,
    include_timing: bool,
) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "k,J,grad_rel,rho,seconds")?;
    for r in records {
        let seconds = if include_timing { r.seconds } else { 0.0 };
        writeln!(
            f,
            "{},{:.12e},{:.12e},{:.12e},{:.6}",
            r.k, r.j, r.grad_rel, r.rho, seconds
        )?;
    }
    Ok(())
}

/// Final (or intermediate) control in the boundary-field CSV format: one file
/// per controlled side, arc length rows against time-step columns.
pub fn write_control_csv(
    disc: &Discretization,
    u: &ControlTrajectory,
    dir: &Path,
    prefix: &str,
) -> Result<Vec<std::path::PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    for side in &disc.control.sides {
        let path = dir.join(format!("{prefix}{}.csv", side.tag.name().to_lowercase()));
        let mut f = std::io::BufWriter::new(std::fs::File::create(&path)?);
        write!(f, "s")?;
        for step in 1..=u.steps() {
            write!(f, ",t{:.6}", step as f64 * disc.dt())?;
        }
        writeln!(f)?;
        for (k, &loc) in side.local.iter().enumerate() {
            write!(f, "{:.12e}", side.arclength[k])?;
            for un in &u.0 {
                write!(f, ",{:.12e}", un[loc])?;
            }
            writeln!(f)?;
        }
        paths.push(path);
    }
    Ok(paths)
}
