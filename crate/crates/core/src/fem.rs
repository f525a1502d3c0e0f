//! P1 assembly on the coarse/fine mesh pair.
//!
//! Velocity and temperature are P1 on the fine mesh (velocity stored as two
//! stacked scalar coefficient vectors, components `[0, n)` and `[n, 2n)`);
//! pressure is P1 on the coarse mesh. Products of two P1 factors use exact
//! element formulas; trilinear (convection) terms use the degree-2-exact
//! 3-point rule, which is still exact for P1 transport fields against P0
//! gradients.

use crate::error::{Error, Result};
use crate::mesh::{Mesh, MeshPair, SegmentTag};
use crate::sparse::{block_diag2, SparseOperator, Triplets};

/// Finite element space descriptor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SpaceKind {
    /// Scalar P1 on the fine mesh (V_h).
    ScalarFine,
    /// Scalar P1 on the fine mesh with zero trace (V_0h).
    ScalarFineZero,
    /// Scalar P1 on the coarse mesh with the zero-mean flag (P_H).
    PressureCoarse,
}

/// Dof bookkeeping for one space. Dof indices coincide with node indices of
/// the underlying mesh; constraints are applied at solve time by row/column
/// elimination, and the pressure zero-mean constraint by a multiplier row.
#[derive(Clone, Debug)]
pub struct FeSpace {
    pub kind: SpaceKind,
    pub ndof: usize,
    /// Dirichlet-constrained dofs (sorted); values are supplied per solve.
    pub constrained: Vec<usize>,
    pub zero_mean: bool,
}

pub fn make_space(pair: &MeshPair, kind: SpaceKind) -> FeSpace {
    match kind {
        SpaceKind::ScalarFine => FeSpace {
            kind,
            ndof: pair.fine.n_nodes(),
            constrained: Vec::new(),
            zero_mean: false,
        },
        SpaceKind::ScalarFineZero => FeSpace {
            kind,
            ndof: pair.fine.n_nodes(),
            constrained: pair.fine.boundary_nodes().into_iter().collect(),
            zero_mean: false,
        },
        SpaceKind::PressureCoarse => FeSpace {
            kind,
            ndof: pair.coarse.n_nodes(),
            constrained: Vec::new(),
            zero_mean: true,
        },
    }
}

/// Per-triangle geometry: area and the constant gradients of the three
/// nodal basis functions.
#[derive(Clone, Copy, Debug)]
pub struct TriGeometry {
    pub area: f64,
    pub grads: [[f64; 2]; 3],
}

pub fn tri_geometry(mesh: &Mesh, t: usize) -> TriGeometry {
    let [a, b, c] = mesh.triangles[t];
    let (pa, pb, pc) = (mesh.nodes[a], mesh.nodes[b], mesh.nodes[c]);
    let det = (pb[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (pb[1] - pa[1]);
    let area = 0.5 * det;
    let grads = [
        [(pb[1] - pc[1]) / det, (pc[0] - pb[0]) / det],
        [(pc[1] - pa[1]) / det, (pa[0] - pc[0]) / det],
        [(pa[1] - pb[1]) / det, (pb[0] - pa[0]) / det],
    ];
    TriGeometry { area, grads }
}

/// Degree-2-exact quadrature on the reference triangle in barycentric
/// coordinates, weights summing to one.
pub const TRI_QUAD_DEG2: [([f64; 3], f64); 3] = [
    ([2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0], 1.0 / 3.0),
    ([1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0], 1.0 / 3.0),
    ([1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0], 1.0 / 3.0),
];

const MASS_ELEM: [[f64; 3]; 3] = [[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]];

/// Mass matrix: (i, j) = ∫ φ_i φ_j dx, exact.
pub fn assemble_mass(mesh: &Mesh) -> SparseOperator {
    let n = mesh.n_nodes();
    let mut t = Triplets::with_capacity(n, n, 9 * mesh.n_triangles());
    for tri in 0..mesh.n_triangles() {
        let g = tri_geometry(mesh, tri);
        let nodes = mesh.triangles[tri];
        for i in 0..3 {
            for j in 0..3 {
                t.push(nodes[i], nodes[j], g.area / 12.0 * MASS_ELEM[i][j]);
            }
        }
    }
    t.into_csr()
}

/// Diffusion matrix: (i, j) = ν ∫ ∇φ_i · ∇φ_j dx. Rejects ν <= 0.
pub fn assemble_stiffness(mesh: &Mesh, nu: f64) -> Result<SparseOperator> {
    if !(nu > 0.0) {
        return Err(Error::Assembly(format!("diffusivity must be positive, got {nu}")));
    }
    let n = mesh.n_nodes();
    let mut t = Triplets::with_capacity(n, n, 9 * mesh.n_triangles());
    for tri in 0..mesh.n_triangles() {
        let g = tri_geometry(mesh, tri);
        let nodes = mesh.triangles[tri];
        for i in 0..3 {
            for j in 0..3 {
                let dot = g.grads[i][0] * g.grads[j][0] + g.grads[i][1] * g.grads[j][1];
                t.push(nodes[i], nodes[j], nu * g.area * dot);
            }
        }
    }
    Ok(t.into_csr())
}

/// Boundary mass over the union of `tags`: (i, j) = ∫_Γ φ_i φ_j ds, assembled
/// edgewise with the exact 1D P1 formula (ℓ/6)[[2,1],[1,2]].
pub fn assemble_boundary_mass(mesh: &Mesh, tags: &[SegmentTag]) -> Result<SparseOperator> {
    for tag in tags {
        if !mesh.has_tag(*tag) {
            return Err(Error::UnknownTag(tag.name().into()));
        }
    }
    let n = mesh.n_nodes();
    let mut t = Triplets::new(n, n);
    for ([a, b], tag) in &mesh.boundary_edges {
        if !tags.contains(tag) {
            continue;
        }
        let (pa, pb) = (mesh.nodes[*a], mesh.nodes[*b]);
        let len = ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt();
        let e = [*a, *b];
        for i in 0..2 {
            for j in 0..2 {
                let w = if i == j { 2.0 } else { 1.0 };
                t.push(e[i], e[j], len / 6.0 * w);
            }
        }
    }
    Ok(t.into_csr())
}

/// Coupling form b(q, y) = ∫ q ∇·y with coarse P1 test functions against the
/// fine P1 velocity: a (coarse nodes) x (2 fine nodes) matrix. The integrand
/// is linear per fine triangle, so the centroid value of the parent basis
/// times the triangle area is exact.
pub fn assemble_divergence(pair: &MeshPair) -> SparseOperator {
    let n = pair.fine.n_nodes();
    let np = pair.coarse.n_nodes();
    let mut t = Triplets::with_capacity(np, 2 * n, 18 * pair.fine.n_triangles());
    for tri in 0..pair.fine.n_triangles() {
        let g = tri_geometry(&pair.fine, tri);
        let nodes = pair.fine.triangles[tri];
        let parent = pair.fine_parent[tri];
        let pnodes = pair.coarse.triangles[parent];
        let centroid = centroid(&pair.fine, tri);
        let lam = barycentric(&pair.coarse, parent, centroid);
        for (q, lq) in pnodes.iter().zip(lam) {
            if lq == 0.0 {
                continue;
            }
            for i in 0..3 {
                for comp in 0..2 {
                    t.push(*q, comp * n + nodes[i], lq * g.area * g.grads[i][comp]);
                }
            }
        }
    }
    t.into_csr()
}

/// Scalar convection with frozen transport field: θ -> rows e(y, θ, ψ),
/// entry (i, j) = ∫ (y·∇φ_j) φ_i dx via the 3-point rule.
pub fn assemble_convection_e(mesh: &Mesh, vel: &[f64]) -> SparseOperator {
    let n = mesh.n_nodes();
    assert_eq!(vel.len(), 2 * n);
    let mut t = Triplets::with_capacity(n, n, 9 * mesh.n_triangles());
    for tri in 0..mesh.n_triangles() {
        let g = tri_geometry(mesh, tri);
        let nodes = mesh.triangles[tri];
        let mut elem = [[0.0; 3]; 3];
        for (lam, w) in TRI_QUAD_DEG2 {
            let mut y_q = [0.0; 2];
            for k in 0..3 {
                y_q[0] += lam[k] * vel[nodes[k]];
                y_q[1] += lam[k] * vel[n + nodes[k]];
            }
            for j in 0..3 {
                let adv = y_q[0] * g.grads[j][0] + y_q[1] * g.grads[j][1];
                for i in 0..3 {
                    elem[i][j] += w * g.area * lam[i] * adv;
                }
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                t.push(nodes[i], nodes[j], elem[i][j]);
            }
        }
    }
    t.into_csr()
}

/// Vector convection with frozen transport field: w -> rows c(y, w, φ).
/// Componentwise identical to the scalar operator, so this is its 2x2 block
/// diagonal.
pub fn assemble_convection_c(mesh: &Mesh, vel: &[f64]) -> SparseOperator {
    block_diag2(&assemble_convection_e(mesh, vel))
}

/// Convection linearized in the transport slot against a frozen scalar
/// field: δy -> rows e(δy, θ, ψ). Entry ((i), (b, j)) = (∂_b θ)|_T ∫ φ_i φ_j.
pub fn assemble_convection_e_frozen(mesh: &Mesh, theta: &[f64]) -> SparseOperator {
    let n = mesh.n_nodes();
    assert_eq!(theta.len(), n);
    let mut t = Triplets::with_capacity(n, 2 * n, 18 * mesh.n_triangles());
    for tri in 0..mesh.n_triangles() {
        let g = tri_geometry(mesh, tri);
        let nodes = mesh.triangles[tri];
        let mut grad = [0.0; 2];
        for k in 0..3 {
            grad[0] += theta[nodes[k]] * g.grads[k][0];
            grad[1] += theta[nodes[k]] * g.grads[k][1];
        }
        for b in 0..2 {
            if grad[b] == 0.0 {
                continue;
            }
            for i in 0..3 {
                for j in 0..3 {
                    t.push(nodes[i], b * n + nodes[j], grad[b] * g.area / 12.0 * MASS_ELEM[i][j]);
                }
            }
        }
    }
    t.into_csr()
}

/// Convection linearized in the transport slot against a frozen vector
/// field: δy -> rows c(δy, w, φ). Block (a, b) entry (i, j) =
/// (∂_b w_a)|_T ∫ φ_i φ_j.
pub fn assemble_convection_c_frozen(mesh: &Mesh, frozen: &[f64]) -> SparseOperator {
    let n = mesh.n_nodes();
    assert_eq!(frozen.len(), 2 * n);
    let mut t = Triplets::with_capacity(2 * n, 2 * n, 36 * mesh.n_triangles());
    for tri in 0..mesh.n_triangles() {
        let g = tri_geometry(mesh, tri);
        let nodes = mesh.triangles[tri];
        // grad[a][b] = ∂_b w_a, constant per triangle
        let mut grad = [[0.0; 2]; 2];
        for a in 0..2 {
            for k in 0..3 {
                grad[a][0] += frozen[a * n + nodes[k]] * g.grads[k][0];
                grad[a][1] += frozen[a * n + nodes[k]] * g.grads[k][1];
            }
        }
        for a in 0..2 {
            for b in 0..2 {
                if grad[a][b] == 0.0 {
                    continue;
                }
                for i in 0..3 {
                    for j in 0..3 {
                        t.push(
                            a * n + nodes[i],
                            b * n + nodes[j],
                            grad[a][b] * g.area / 12.0 * MASS_ELEM[i][j],
                        );
                    }
                }
            }
        }
    }
    t.into_csr()
}

/// Discrete curl of the P1 velocity: per-triangle constant
/// ∂y₂/∂x₁ − ∂y₁/∂x₂ plus the induced quadratic form Σ_T |T| curl_T².
#[derive(Clone, Debug)]
pub struct CurlOperator {
    /// (triangles) x (2 fine nodes) evaluation matrix.
    pub matrix: SparseOperator,
    /// Triangle areas, the quadrature weights of the form.
    pub areas: Vec<f64>,
}

impl CurlOperator {
    /// Elementwise-constant curl values.
    pub fn apply(&self, vel: &[f64]) -> Vec<f64> {
        self.matrix.matvec(vel)
    }

    /// ∫ |∇×y|² dx (callers halve it for the objective).
    pub fn energy(&self, vel: &[f64]) -> f64 {
        self.apply(vel)
            .iter()
            .zip(&self.areas)
            .map(|(c, a)| a * c * c)
            .sum()
    }
}

pub fn assemble_curl(mesh: &Mesh) -> CurlOperator {
    let n = mesh.n_nodes();
    let ntri = mesh.n_triangles();
    let mut t = Triplets::with_capacity(ntri, 2 * n, 6 * ntri);
    let mut areas = Vec::with_capacity(ntri);
    for tri in 0..ntri {
        let g = tri_geometry(mesh, tri);
        let nodes = mesh.triangles[tri];
        areas.push(g.area);
        for i in 0..3 {
            t.push(tri, nodes[i], -g.grads[i][1]);
            t.push(tri, n + nodes[i], g.grads[i][0]);
        }
    }
    CurlOperator {
        matrix: t.into_csr(),
        areas,
    }
}

/// Quadratic form of the curl as a sparse matrix: Curlᵀ diag(areas) Curl.
/// Its action gives the weak curl-curl source used by the vorticity adjoint.
pub fn assemble_curl_form(curl: &CurlOperator) -> SparseOperator {
    let (ntri, m) = (curl.matrix.nrows(), curl.matrix.ncols());
    let mut t = Triplets::new(m, m);
    for tri in 0..ntri {
        let (cols, vals) = curl.matrix.row(tri);
        for (ci, vi) in cols.iter().zip(vals) {
            for (cj, vj) in cols.iter().zip(vals) {
                t.push(*ci, *cj, curl.areas[tri] * vi * vj);
            }
        }
    }
    t.into_csr()
}

/// All constant-coefficient operators of the discretization.
#[derive(Clone, Debug)]
pub struct FemOperators {
    /// Fine scalar mass, used componentwise for velocity and for θ.
    pub mass: SparseOperator,
    /// Block-diagonal velocity mass.
    pub mass2: SparseOperator,
    /// ν₁-weighted fine stiffness (momentum diffusion, componentwise).
    pub stiffness_v: SparseOperator,
    /// ν₂-weighted fine stiffness (thermal diffusion).
    pub stiffness_t: SparseOperator,
    /// Pressure/velocity coupling b(q, y).
    pub divergence: SparseOperator,
    pub curl: CurlOperator,
    /// Curlᵀ diag(area) Curl on the stacked velocity vector.
    pub curl_form: SparseOperator,
}

pub fn assemble_operators(pair: &MeshPair, nu1: f64, nu2: f64) -> Result<FemOperators> {
    let mass = assemble_mass(&pair.fine);
    let mass2 = block_diag2(&mass);
    let stiffness_v = assemble_stiffness(&pair.fine, nu1)?;
    let stiffness_t = assemble_stiffness(&pair.fine, nu2)?;
    let divergence = assemble_divergence(pair);
    let curl = assemble_curl(&pair.fine);
    let curl_form = assemble_curl_form(&curl);
    Ok(FemOperators {
        mass,
        mass2,
        stiffness_v,
        stiffness_t,
        divergence,
        curl,
        curl_form,
    })
}

pub fn centroid(mesh: &Mesh, t: usize) -> [f64; 2] {
    let [a, b, c] = mesh.triangles[t];
    let (pa, pb, pc) = (mesh.nodes[a], mesh.nodes[b], mesh.nodes[c]);
    [
        (pa[0] + pb[0] + pc[0]) / 3.0,
        (pa[1] + pb[1] + pc[1]) / 3.0,
    ]
}

/// Barycentric coordinates of `p` with respect to triangle `t`.
pub fn barycentric(mesh: &Mesh, t: usize, p: [f64; 2]) -> [f64; 3] {
    let [a, b, c] = mesh.triangles[t];
    let (pa, pb, pc) = (mesh.nodes[a], mesh.nodes[b], mesh.nodes[c]);
    let det = (pb[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (pb[1] - pa[1]);
    let l1 = ((pb[0] - p[0]) * (pc[1] - p[1]) - (pc[0] - p[0]) * (pb[1] - p[1])) / det;
    let l2 = ((pc[0] - p[0]) * (pa[1] - p[1]) - (pa[0] - p[0]) * (pc[1] - p[1])) / det;
    [l1, l2, 1.0 - l1 - l2]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_unit_square, SegmentTag};

    fn single_triangle(scale: f64) -> Mesh {
        Mesh {
            nodes: vec![[0.0, 0.0], [scale, 0.0], [0.0, scale]],
            triangles: vec![[0, 1, 2]],
            boundary_edges: vec![
                ([0, 1], SegmentTag::Bottom),
                ([1, 2], SegmentTag::Right),
                ([2, 0], SegmentTag::Left),
            ],
        }
    }

    #[test]
    fn element_mass_matches_analytic() {
        let mesh = single_triangle(1.0);
        let m = assemble_mass(&mesh);
        let s = 0.5;
        for i in 0..3 {
            for j in 0..3 {
                let expect = s / 12.0 * if i == j { 2.0 } else { 1.0 };
                assert!((m.get(i, j) - expect).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn mass_row_sums_partition_unity() {
        let pair = build_unit_square(4).unwrap();
        let m = assemble_mass(&pair.fine);
        let ones = vec![1.0; m.ncols()];
        let mv = m.matvec(&ones);
        let total: f64 = mv.iter().sum();
        assert!((total - 1.0).abs() < 1e-13);
    }

    #[test]
    fn element_stiffness_matches_analytic() {
        // unit right triangle with legs on the axes, ν = 1
        let mesh = single_triangle(1.0);
        let a = assemble_stiffness(&mesh, 1.0).unwrap();
        let expect = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((a.get(i, j) - expect[i][j]).abs() < 1e-15, "({i},{j})");
            }
        }
    }

    #[test]
    fn stiffness_kernel_and_scaling() {
        let pair = build_unit_square(4).unwrap();
        let a1 = assemble_stiffness(&pair.fine, 0.7).unwrap();
        let a2 = assemble_stiffness(&pair.fine, 1.4).unwrap();
        let ones = vec![1.0; a1.ncols()];
        for v in a1.matvec(&ones) {
            assert!(v.abs() < 1e-13);
        }
        for (e1, e2) in a1.iter().zip(a2.iter()) {
            assert!((2.0 * e1.2 - e2.2).abs() < 1e-13);
        }
        assert!(assemble_stiffness(&pair.fine, 0.0).is_err());
        assert!(assemble_stiffness(&pair.fine, -1.0).is_err());
    }

    #[test]
    fn divergence_annihilates_divergence_free_fields() {
        let pair = build_unit_square(8).unwrap();
        let b = assemble_divergence(&pair);
        let n = pair.fine.n_nodes();
        // constant field
        let mut v = vec![0.0; 2 * n];
        for i in 0..n {
            v[i] = 0.3;
            v[n + i] = -0.7;
        }
        for r in b.matvec(&v) {
            assert!(r.abs() < 1e-13);
        }
        // rigid rotation (-x2, x1): exactly divergence-free and P1-exact
        for (i, p) in pair.fine.nodes.iter().enumerate() {
            v[i] = -p[1];
            v[n + i] = p[0];
        }
        for r in b.matvec(&v) {
            assert!(r.abs() < 1e-12);
        }
    }

    #[test]
    fn divergence_of_linear_shear_integrates_test_functions() {
        // y = (x1, 0) has div = 1, so (B y)_q = ∫ q dx
        let pair = build_unit_square(4).unwrap();
        let b = assemble_divergence(&pair);
        let n = pair.fine.n_nodes();
        let mut v = vec![0.0; 2 * n];
        for (i, p) in pair.fine.nodes.iter().enumerate() {
            v[i] = p[0];
        }
        let by = b.matvec(&v);
        let total: f64 = by.iter().sum();
        assert!((total - 1.0).abs() < 1e-12); // Σ_q ∫ q = ∫ 1 = |Ω|
        let mc = assemble_mass(&pair.coarse);
        let ones = vec![1.0; mc.ncols()];
        let lumped = mc.matvec(&ones); // ∫ q dx per coarse basis
        for (a, b) in by.iter().zip(&lumped) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn convection_zero_field_and_constants() {
        let pair = build_unit_square(4).unwrap();
        let n = pair.fine.n_nodes();
        let zero = vec![0.0; 2 * n];
        let e = assemble_convection_e(&pair.fine, &zero);
        assert_eq!(e.nnz(), 0);
        // transported constant: (y·∇)w = 0 for constant w, any y
        let mut y = vec![0.0; 2 * n];
        for (i, p) in pair.fine.nodes.iter().enumerate() {
            y[i] = p[1] * 0.5 + 0.1;
            y[n + i] = -p[0];
        }
        let e = assemble_convection_e(&pair.fine, &y);
        let ones = vec![1.0; n];
        for v in e.matvec(&ones) {
            assert!(v.abs() < 1e-13);
        }
    }

    #[test]
    fn boundary_mass_single_edge_and_lengths() {
        let mesh = single_triangle(2.0);
        let m = assemble_boundary_mass(&mesh, &[SegmentTag::Bottom]).unwrap();
        // edge of length 2: (l/6)[[2,1],[1,2]]
        assert!((m.get(0, 0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((m.get(0, 1) - 1.0 / 3.0).abs() < 1e-15);
        assert!((m.get(1, 1) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.get(2, 2), 0.0);

        let pair = build_unit_square(6).unwrap();
        let mc = assemble_boundary_mass(&pair.fine, &[SegmentTag::Left, SegmentTag::Right]).unwrap();
        let ones = vec![1.0; mc.ncols()];
        let total: f64 = mc.matvec(&ones).iter().sum();
        assert!((total - 2.0).abs() < 1e-13); // |Γ_c| = 2

        assert!(assemble_boundary_mass(&pair.fine, &[SegmentTag::Inlet]).is_err());
    }

    #[test]
    fn curl_of_rotation_and_gradient_fields() {
        let pair = build_unit_square(8).unwrap();
        let curl = assemble_curl(&pair.fine);
        let n = pair.fine.n_nodes();
        let mut v = vec![0.0; 2 * n];
        for (i, p) in pair.fine.nodes.iter().enumerate() {
            v[i] = -p[1];
            v[n + i] = p[0];
        }
        for c in curl.apply(&v) {
            assert!((c - 2.0).abs() < 1e-13);
        }
        // (1/2)∫|∇×y|² = 2|Ω| = 2
        assert!((0.5 * curl.energy(&v) - 2.0).abs() < 1e-12);
        let k = assemble_curl_form(&curl);
        let kv = k.matvec(&v);
        let quad: f64 = kv.iter().zip(&v).map(|(a, b)| a * b).sum();
        assert!((quad - curl.energy(&v)).abs() < 1e-12);

        // gradient field (x1, x2) is curl-free
        for (i, p) in pair.fine.nodes.iter().enumerate() {
            v[i] = p[0];
            v[n + i] = p[1];
        }
        for c in curl.apply(&v) {
            assert!(c.abs() < 1e-13);
        }
    }

    #[test]
    fn symmetric_forms_pass_symmetry_assertion() {
        let pair = build_unit_square(6).unwrap();
        let ops = assemble_operators(&pair, 0.01, 1.0 / 72.0).unwrap();
        for op in [&ops.mass, &ops.stiffness_v, &ops.stiffness_t, &ops.curl_form] {
            assert!(op.symmetry_error() < 1e-14 * op.max_abs().max(1.0));
        }
        let mc = assemble_boundary_mass(&pair.fine, &[SegmentTag::Left]).unwrap();
        assert!(mc.symmetry_error() < 1e-14);
    }

    #[test]
    fn frozen_convection_blocks_are_gradient_weighted_masses() {
        let pair = build_unit_square(2).unwrap();
        let n = pair.fine.n_nodes();
        // θ = 2 x1 - 3 x2: constant gradient (2, -3)
        let theta: Vec<f64> = pair.fine.nodes.iter().map(|p| 2.0 * p[0] - 3.0 * p[1]).collect();
        let g = assemble_convection_e_frozen(&pair.fine, &theta);
        let m = assemble_mass(&pair.fine);
        for i in 0..n {
            for j in 0..n {
                assert!((g.get(i, j) - 2.0 * m.get(i, j)).abs() < 1e-13);
                assert!((g.get(i, n + j) + 3.0 * m.get(i, j)).abs() < 1e-13);
            }
        }
    }
}
