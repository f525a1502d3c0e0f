//! Independent slow-but-sure verification tools.
//!
//! Everything here stays off the production assembly path on purpose: basis
//! functions are evaluated from monomial coefficients obtained by cofactor
//! inversion (the assembly code uses edge-vector formulas), integrals use
//! Gaussian rules of higher degree than needed, and reference solves use a
//! dense LU from a different library. Agreement with the fast path is then a
//! genuine cross-check, not a tautology.

use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::adjoint::{compute_gradient, solve_adjoint};
use crate::error::{Error, Result};
use crate::mesh::{Mesh, MeshPair, SegmentTag};
use crate::state::{evaluate_objective, solve_state, ControlTrajectory, Discretization};

/// Gaussian points on the reference triangle as (barycentric, weight),
/// weights summing to 1. Degree-5 rule (7 points).
const TRI_DEG5: [([f64; 3], f64); 7] = {
    const A1: f64 = 0.059_715_871_789_77;
    const B1: f64 = 0.470_142_064_105_115;
    const W1: f64 = 0.132_394_152_788_506;
    const A2: f64 = 0.797_426_985_353_087;
    const B2: f64 = 0.101_286_507_323_456;
    const W2: f64 = 0.125_939_180_544_827;
    [
        ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 0.225),
        ([A1, B1, B1], W1),
        ([B1, A1, B1], W1),
        ([B1, B1, A1], W1),
        ([A2, B2, B2], W2),
        ([B2, A2, B2], W2),
        ([B2, B2, A2], W2),
    ]
};

const TRI_DEG2: [([f64; 3], f64); 3] = [
    ([2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0], 1.0 / 3.0),
    ([1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0], 1.0 / 3.0),
    ([1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0], 1.0 / 3.0),
];

const TRI_DEG1: [([f64; 3], f64); 1] = [([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 1.0)];

fn rule_for_degree(degree: usize) -> Result<&'static [([f64; 3], f64)]> {
    match degree {
        0 | 1 => Ok(&TRI_DEG1),
        2 => Ok(&TRI_DEG2),
        3..=5 => Ok(&TRI_DEG5),
        _ => Err(Error::OracleGuard(format!(
            "quadrature degree {degree} exceeds the supported maximum of 5"
        ))),
    }
}

/// Monomial coefficients of the three P1 basis functions on one triangle:
/// φ_k(x, y) = coeff[k][0] + coeff[k][1] x + coeff[k][2] y, from cofactor
/// inversion of the Vandermonde system.
pub fn monomial_basis(mesh: &Mesh, t: usize) -> [[f64; 3]; 3] {
    let [a, b, c] = mesh.triangles[t];
    let ps = [mesh.nodes[a], mesh.nodes[b], mesh.nodes[c]];
    let det = ps[0][0] * (ps[1][1] - ps[2][1]) - ps[0][1] * (ps[1][0] - ps[2][0])
        + (ps[1][0] * ps[2][1] - ps[2][0] * ps[1][1]);
    let mut coeff = [[0.0; 3]; 3];
    for k in 0..3 {
        let (p, q) = (ps[(k + 1) % 3], ps[(k + 2) % 3]);
        coeff[k][0] = (p[0] * q[1] - q[0] * p[1]) / det;
        coeff[k][1] = (p[1] - q[1]) / det;
        coeff[k][2] = (q[0] - p[0]) / det;
    }
    coeff
}

fn tri_area(mesh: &Mesh, t: usize) -> f64 {
    let [a, b, c] = mesh.triangles[t];
    let (pa, pb, pc) = (mesh.nodes[a], mesh.nodes[b], mesh.nodes[c]);
    0.5 * ((pb[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (pb[1] - pa[1])).abs()
}

/// Per-triangle Gaussian quadrature of `f(triangle, x, y)` over the mesh.
pub fn quadrature_integrate<F: Fn(usize, f64, f64) -> f64>(
    mesh: &Mesh,
    degree: usize,
    f: F,
) -> Result<f64> {
    let rule = rule_for_degree(degree)?;
    let mut total = 0.0;
    for t in 0..mesh.n_triangles() {
        let [a, b, c] = mesh.triangles[t];
        let ps = [mesh.nodes[a], mesh.nodes[b], mesh.nodes[c]];
        let area = tri_area(mesh, t);
        for (lam, w) in rule {
            let x = lam[0] * ps[0][0] + lam[1] * ps[1][0] + lam[2] * ps[2][0];
            let y = lam[0] * ps[0][1] + lam[1] * ps[1][1] + lam[2] * ps[2][1];
            total += w * area * f(t, x, y);
        }
    }
    Ok(total)
}

/// Evaluate the P1 interpolant of nodal values inside triangle `t`.
pub fn eval_p1(mesh: &Mesh, values: &[f64], t: usize, x: f64, y: f64) -> f64 {
    let coeff = monomial_basis(mesh, t);
    let nodes = mesh.triangles[t];
    (0..3)
        .map(|k| values[nodes[k]] * (coeff[k][0] + coeff[k][1] * x + coeff[k][2] * y))
        .sum()
}

/// Constant gradient of the P1 interpolant on triangle `t`.
pub fn grad_p1(mesh: &Mesh, values: &[f64], t: usize) -> [f64; 2] {
    let coeff = monomial_basis(mesh, t);
    let nodes = mesh.triangles[t];
    let mut g = [0.0; 2];
    for k in 0..3 {
        g[0] += values[nodes[k]] * coeff[k][1];
        g[1] += values[nodes[k]] * coeff[k][2];
    }
    g
}

// ---------------------------------------------------------------------------
// Independent dense assemblies (own element loop, degree-5 quadrature).
// ---------------------------------------------------------------------------

pub fn oracle_mass(mesh: &Mesh) -> Vec<Vec<f64>> {
    let n = mesh.n_nodes();
    let mut m = vec![vec![0.0; n]; n];
    for t in 0..mesh.n_triangles() {
        let coeff = monomial_basis(mesh, t);
        let nodes = mesh.triangles[t];
        let [a, b, c] = nodes;
        let ps = [mesh.nodes[a], mesh.nodes[b], mesh.nodes[c]];
        let area = tri_area(mesh, t);
        for (lam, w) in TRI_DEG5 {
            let x = lam[0] * ps[0][0] + lam[1] * ps[1][0] + lam[2] * ps[2][0];
            let y = lam[0] * ps[0][1] + lam[1] * ps[1][1] + lam[2] * ps[2][1];
            for i in 0..3 {
                let pi = coeff[i][0] + coeff[i][1] * x + coeff[i][2] * y;
                for j in 0..3 {
                    let pj = coeff[j][0] + coeff[j][1] * x + coeff[j][2] * y;
                    m[nodes[i]][nodes[j]] += w * area * pi * pj;
                }
            }
        }
    }
    m
}

pub fn oracle_stiffness(mesh: &Mesh, nu: f64) -> Vec<Vec<f64>> {
    let n = mesh.n_nodes();
    let mut m = vec![vec![0.0; n]; n];
    for t in 0..mesh.n_triangles() {
        let coeff = monomial_basis(mesh, t);
        let nodes = mesh.triangles[t];
        let area = tri_area(mesh, t);
        for i in 0..3 {
            for j in 0..3 {
                let dot = coeff[i][1] * coeff[j][1] + coeff[i][2] * coeff[j][2];
                m[nodes[i]][nodes[j]] += nu * area * dot;
            }
        }
    }
    m
}

/// Boundary mass over the union of `tags` via 2-point Gauss on each edge.
pub fn oracle_boundary_mass(mesh: &Mesh, tags: &[SegmentTag]) -> Vec<Vec<f64>> {
    let n = mesh.n_nodes();
    let mut m = vec![vec![0.0; n]; n];
    let g = 1.0 / 3.0_f64.sqrt();
    for ([a, b], tag) in &mesh.boundary_edges {
        if !tags.contains(tag) {
            continue;
        }
        let (pa, pb) = (mesh.nodes[*a], mesh.nodes[*b]);
        let len = ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt();
        for s in [-g, g] {
            // shape values at the Gauss point: φ_a = (1-ŝ)/2, φ_b = (1+ŝ)/2
            let (va, vb) = (0.5 * (1.0 - s), 0.5 * (1.0 + s));
            let w = 0.5 * len;
            m[*a][*a] += w * va * va;
            m[*a][*b] += w * va * vb;
            m[*b][*a] += w * vb * va;
            m[*b][*b] += w * vb * vb;
        }
    }
    m
}

/// b(q, y) with coarse test functions: (coarse nodes) x (2 fine nodes).
pub fn oracle_divergence(pair: &MeshPair) -> Vec<Vec<f64>> {
    let n = pair.fine.n_nodes();
    let np = pair.coarse.n_nodes();
    let mut m = vec![vec![0.0; 2 * n]; np];
    for t in 0..pair.fine.n_triangles() {
        let coeff = monomial_basis(&pair.fine, t);
        let nodes = pair.fine.triangles[t];
        let [a, b, c] = nodes;
        let ps = [pair.fine.nodes[a], pair.fine.nodes[b], pair.fine.nodes[c]];
        let area = tri_area(&pair.fine, t);
        let parent = pair.fine_parent[t];
        let pcoeff = monomial_basis(&pair.coarse, parent);
        let pnodes = pair.coarse.triangles[parent];
        for (lam, w) in TRI_DEG2 {
            let x = lam[0] * ps[0][0] + lam[1] * ps[1][0] + lam[2] * ps[2][0];
            let y = lam[0] * ps[0][1] + lam[1] * ps[1][1] + lam[2] * ps[2][1];
            for (qk, q) in pnodes.iter().enumerate() {
                let qv = pcoeff[qk][0] + pcoeff[qk][1] * x + pcoeff[qk][2] * y;
                for i in 0..3 {
                    m[*q][nodes[i]] += w * area * qv * coeff[i][1];
                    m[*q][n + nodes[i]] += w * area * qv * coeff[i][2];
                }
            }
        }
    }
    m
}

/// Scalar convection e(y, ·, ·) with frozen P1 transport field.
pub fn oracle_convection(mesh: &Mesh, vel: &[f64]) -> Vec<Vec<f64>> {
    let n = mesh.n_nodes();
    let mut m = vec![vec![0.0; n]; n];
    for t in 0..mesh.n_triangles() {
        let coeff = monomial_basis(mesh, t);
        let nodes = mesh.triangles[t];
        let [a, b, c] = nodes;
        let ps = [mesh.nodes[a], mesh.nodes[b], mesh.nodes[c]];
        let area = tri_area(mesh, t);
        for (lam, w) in TRI_DEG5 {
            let x = lam[0] * ps[0][0] + lam[1] * ps[1][0] + lam[2] * ps[2][0];
            let y = lam[0] * ps[0][1] + lam[1] * ps[1][1] + lam[2] * ps[2][1];
            let mut yq = [0.0; 2];
            for k in 0..3 {
                let phi = coeff[k][0] + coeff[k][1] * x + coeff[k][2] * y;
                yq[0] += vel[nodes[k]] * phi;
                yq[1] += vel[n + nodes[k]] * phi;
            }
            for j in 0..3 {
                let adv = yq[0] * coeff[j][1] + yq[1] * coeff[j][2];
                for i in 0..3 {
                    let pi = coeff[i][0] + coeff[i][1] * x + coeff[i][2] * y;
                    m[nodes[i]][nodes[j]] += w * area * pi * adv;
                }
            }
        }
    }
    m
}

/// Quadratic curl form on the stacked velocity vector, assembled from the
/// monomial gradients.
pub fn oracle_curl_form(mesh: &Mesh) -> Vec<Vec<f64>> {
    let n = mesh.n_nodes();
    let mut m = vec![vec![0.0; 2 * n]; 2 * n];
    for t in 0..mesh.n_triangles() {
        let coeff = monomial_basis(mesh, t);
        let nodes = mesh.triangles[t];
        let area = tri_area(mesh, t);
        // curl coefficients per dof: -∂y/∂x₂ for component 1, +∂/∂x₁ for 2
        let mut c = vec![0.0; 6];
        for k in 0..3 {
            c[k] = -coeff[k][2];
            c[3 + k] = coeff[k][1];
        }
        let dof = |k: usize| if k < 3 { nodes[k] } else { n + nodes[k - 3] };
        for i in 0..6 {
            for j in 0..6 {
                m[dof(i)][dof(j)] += area * c[i] * c[j];
            }
        }
    }
    m
}

/// Dense LU reference solve (nalgebra), guarded to 5000 unknowns.
pub fn dense_reference_solve(a: &[Vec<f64>], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = a.len();
    if n > 5000 {
        return Err(Error::OracleGuard(format!(
            "dense reference solve limited to 5000 unknowns, got {n}"
        )));
    }
    if n == 0 || a.iter().any(|row| row.len() != n) || rhs.len() != n {
        return Err(Error::DenseSolve("dimension mismatch".into()));
    }
    let mat = nalgebra::DMatrix::from_fn(n, n, |i, j| a[i][j]);
    let b = nalgebra::DVector::from_column_slice(rhs);
    let lu = mat.lu();
    match lu.solve(&b) {
        Some(x) => Ok(x.iter().copied().collect()),
        None => Err(Error::DenseSolve("singular matrix".into())),
    }
}

// ---------------------------------------------------------------------------
// Finite-difference gradient verification.
// ---------------------------------------------------------------------------

/// Result of checking one random direction.
#[derive(Clone, Debug)]
pub struct FdDirection {
    pub id: usize,
    pub eps: Vec<f64>,
    /// Central-difference estimates per ε.
    pub fd: Vec<f64>,
    /// Adjoint directional derivative (g, δv)_{U^Δt}.
    pub derivative: f64,
    pub rel_errors: Vec<f64>,
    pub best_eps: f64,
    pub best_rel_error: f64,
}

/// Report over all checked directions.
#[derive(Clone, Debug)]
pub struct FdCheckReport {
    pub directions: Vec<FdDirection>,
}

impl FdCheckReport {
    pub fn all_pass(&self, tol: f64) -> bool {
        self.directions.iter().all(|d| d.best_rel_error < tol)
    }

    pub fn worst(&self) -> f64 {
        self.directions
            .iter()
            .map(|d| d.best_rel_error)
            .fold(0.0, f64::max)
    }

    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for d in &self.directions {
            writeln!(
                w,
                "direction {}: derivative {:.12e}, best rel error {:.3e} at eps {:.1e}",
                d.id, d.derivative, d.best_rel_error, d.best_eps
            )?;
            for ((e, fd), re) in d.eps.iter().zip(&d.fd).zip(&d.rel_errors) {
                writeln!(w, "  eps {e:.1e}: fd {fd:.12e}, rel error {re:.3e}")?;
            }
        }
        Ok(())
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "direction,eps,fd,adjoint,rel_error")?;
        for d in &self.directions {
            for ((e, fd), re) in d.eps.iter().zip(&d.fd).zip(&d.rel_errors) {
                writeln!(f, "{},{:.1e},{:.12e},{:.12e},{:.3e}", d.id, e, fd, d.derivative, re)?;
            }
        }
        Ok(())
    }
}

/// A pseudo-random control direction of unit U^Δt norm.
pub fn random_unit_direction(disc: &Discretization, rng: &mut impl Rng) -> ControlTrajectory {
    let mut d = disc.control.zero();
    for step in &mut d.0 {
        for x in step.iter_mut() {
            *x = rng.gen_range(-1.0..1.0);
        }
    }
    let norm = disc.control.norm(&d);
    d.scaled(1.0 / norm)
}

/// Compare the adjoint gradient against central differences of the objective
/// along `n_dirs` random unit directions, over the ε ladder 1e-2..1e-6.
/// Guarded to instances with at most 10⁴ fine degrees of freedom.
pub fn fd_gradient_check(
    disc: &Discretization,
    v: &ControlTrajectory,
    n_dirs: usize,
    seed: u64,
) -> Result<FdCheckReport> {
    if disc.n_fine() > 10_000 {
        return Err(Error::OracleGuard(format!(
            "finite-difference check limited to 1e4 fine dofs, got {}",
            disc.n_fine()
        )));
    }
    let eps_ladder = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6];
    let state = solve_state(disc, v)?;
    let g = compute_gradient(disc, &solve_adjoint(disc, &state)?, v);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut directions = Vec::with_capacity(n_dirs);
    for id in 0..n_dirs {
        let dv = random_unit_direction(disc, &mut rng);
        let derivative = disc.control.dot(&g, &dv);
        let mut fd = Vec::new();
        let mut rel = Vec::new();
        for &eps in &eps_ladder {
            let mut vp = v.clone();
            vp.axpy(eps, &dv);
            let mut vm = v.clone();
            vm.axpy(-eps, &dv);
            let jp = evaluate_objective(disc, &solve_state(disc, &vp)?, &vp);
            let jm = evaluate_objective(disc, &solve_state(disc, &vm)?, &vm);
            let est = (jp - jm) / (2.0 * eps);
            fd.push(est);
            let denom = derivative.abs().max(est.abs()).max(1e-300);
            rel.push((est - derivative).abs() / denom);
        }
        let (best_idx, _) = rel
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap();
        directions.push(FdDirection {
            id,
            eps: eps_ladder.to_vec(),
            fd,
            derivative,
            rel_errors: rel.clone(),
            best_eps: eps_ladder[best_idx],
            best_rel_error: rel[best_idx],
        });
    }
    Ok(FdCheckReport { directions })
}
