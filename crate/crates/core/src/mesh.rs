//! Triangulations of the two example geometries.
//!
//! Velocity and temperature live on a fine mesh obtained by midpoint
//! refinement of a coarse mesh that carries the pressure (the P1-isoP2 /
//! Bercovier-Pironneau arrangement). Both builders produce structured
//! right-triangle meshes; cell diagonals are mirrored about `x = 1/2` so the
//! triangulation itself (not just the node set) is invariant under the
//! reflection `x -> 1 - x`. That makes the discrete reactor problem exactly
//! left-right symmetric, which the side-wall controls inherit.
//!
//! The reactor's outer dimensions are fixed here as one consistent
//! realization of the published schematic: the unit square `[0,1]^2` plus an
//! inlet channel `[1/3,2/3] x [1,4/3]`; the inlet is the channel top, the
//! inlet walls are the two channel sides, and the two outlets are
//! `[0,1/3] x {1}` and `[2/3,1] x {1}`. All stated segment lengths (susceptor
//! and side walls of length 1, inlet and outlets of width 1/3, inlet-wall
//! height 1/3) are honored.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use crate::error::{Error, Result};

/// Named boundary pieces of the two example domains.
///
/// The unit-square (cavity) geometry uses `Left`/`Right`/`Top`/`Bottom`; the
/// reactor uses the remaining variants. Tags partition the boundary edge set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SegmentTag {
    Left,
    Right,
    Top,
    Bottom,
    Susceptor,
    SideWallLeft,
    SideWallRight,
    InletWall,
    Inlet,
    OutletLeft,
    OutletRight,
}

impl SegmentTag {
    pub fn name(self) -> &'static str {
        match self {
            SegmentTag::Left => "LEFT",
            SegmentTag::Right => "RIGHT",
            SegmentTag::Top => "TOP",
            SegmentTag::Bottom => "BOTTOM",
            SegmentTag::Susceptor => "SUSCEPTOR",
            SegmentTag::SideWallLeft => "SIDE_L",
            SegmentTag::SideWallRight => "SIDE_R",
            SegmentTag::InletWall => "INLET_WALL",
            SegmentTag::Inlet => "INLET",
            SegmentTag::OutletLeft => "OUTLET_L",
            SegmentTag::OutletRight => "OUTLET_R",
        }
    }
}

impl std::fmt::Display for SegmentTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A conforming triangulation with tagged boundary edges.
///
/// Triangles are counter-clockwise; boundary edges are stored in the
/// orientation induced by their triangle, so the domain lies to their left.
#[derive(Clone, Debug)]
pub struct Mesh {
    pub nodes: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<([usize; 2], SegmentTag)>,
}

impl Mesh {
    /// Signed area of triangle `t` (positive for CCW orientation).
    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let (pa, pb, pc) = (self.nodes[a], self.nodes[b], self.nodes[c]);
        0.5 * ((pb[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (pb[1] - pa[1]))
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// All node ids lying on an edge carrying `tag`, sorted ascending.
    pub fn nodes_of_tag(&self, tag: SegmentTag) -> Vec<usize> {
        let mut set = BTreeSet::new();
        for ([a, b], t) in &self.boundary_edges {
            if *t == tag {
                set.insert(*a);
                set.insert(*b);
            }
        }
        set.into_iter().collect()
    }

    pub fn has_tag(&self, tag: SegmentTag) -> bool {
        self.boundary_edges.iter().any(|(_, t)| *t == tag)
    }

    pub fn tags(&self) -> Vec<SegmentTag> {
        let set: BTreeSet<_> = self.boundary_edges.iter().map(|(_, t)| *t).collect();
        set.into_iter().collect()
    }

    pub fn boundary_nodes(&self) -> BTreeSet<usize> {
        let mut set = BTreeSet::new();
        for ([a, b], _) in &self.boundary_edges {
            set.insert(*a);
            set.insert(*b);
        }
        set
    }

    /// Total length of the edges carrying `tag`.
    pub fn tag_length(&self, tag: SegmentTag) -> f64 {
        self.boundary_edges
            .iter()
            .filter(|(_, t)| *t == tag)
            .map(|([a, b], _)| {
                let (pa, pb) = (self.nodes[*a], self.nodes[*b]);
                ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt()
            })
            .sum()
    }

    /// Structural invariants: positive triangle areas, boundary edges are
    /// exactly the once-used edges, and they close up into loops.
    pub fn validate(&self) -> Result<()> {
        for t in 0..self.triangles.len() {
            if self.triangle_area(t) <= 0.0 {
                return Err(Error::Mesh(format!("triangle {t} has nonpositive area")));
            }
        }
        // Count edge usage over triangles.
        let mut usage: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                *usage.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        let boundary_set: BTreeSet<(usize, usize)> = self
            .boundary_edges
            .iter()
            .map(|([a, b], _)| (*a.min(b), *a.max(b)))
            .collect();
        if boundary_set.len() != self.boundary_edges.len() {
            return Err(Error::Mesh("duplicate boundary edge".into()));
        }
        for (e, n) in &usage {
            match n {
                1 if !boundary_set.contains(e) => {
                    return Err(Error::Mesh(format!("untagged boundary edge {e:?}")))
                }
                2 if boundary_set.contains(e) => {
                    return Err(Error::Mesh(format!("interior edge {e:?} tagged as boundary")))
                }
                1 | 2 => {}
                _ => return Err(Error::Mesh(format!("edge {e:?} used {n} times"))),
            }
        }
        for e in &boundary_set {
            if usage.get(e) != Some(&1) {
                return Err(Error::Mesh(format!("boundary edge {e:?} not on the mesh boundary")));
            }
        }
        // Closed loops: every boundary node has exactly two incident boundary edges.
        let mut deg: BTreeMap<usize, usize> = BTreeMap::new();
        for (a, b) in &boundary_set {
            *deg.entry(*a).or_insert(0) += 1;
            *deg.entry(*b).or_insert(0) += 1;
        }
        if deg.values().any(|&d| d != 2) {
            return Err(Error::Mesh("boundary is not a disjoint union of closed loops".into()));
        }
        Ok(())
    }

    /// Plain-text dump: `v x y`, `t i j k`, `b i j TAG` records.
    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for p in &self.nodes {
            writeln!(w, "v {:.17e} {:.17e}", p[0], p[1])?;
        }
        for t in &self.triangles {
            writeln!(w, "t {} {} {}", t[0], t[1], t[2])?;
        }
        for ([a, b], tag) in &self.boundary_edges {
            writeln!(w, "b {} {} {}", a, b, tag.name())?;
        }
        Ok(())
    }
}

/// Coarse/fine mesh pair with the refinement maps.
///
/// Fine nodes are ordered with the coarse nodes first (at identical indices),
/// then one node per coarse edge, so coarse-to-fine prolongation is an index
/// embedding plus edge-midpoint averaging.
#[derive(Clone, Debug)]
pub struct MeshPair {
    pub coarse: Mesh,
    pub fine: Mesh,
    /// Coarse edge (sorted node pair) -> fine midpoint node.
    pub edge_midpoint_map: BTreeMap<(usize, usize), usize>,
    /// Coarse node -> fine node (identity embedding by construction).
    pub coarse_node_embed: Vec<usize>,
    /// Fine triangle -> parent coarse triangle.
    pub fine_parent: Vec<usize>,
}

impl MeshPair {
    /// Evaluate a coarse nodal field at every fine node.
    pub fn prolongate(&self, coarse_field: &[f64]) -> Vec<f64> {
        assert_eq!(coarse_field.len(), self.coarse.n_nodes());
        let mut out = vec![0.0; self.fine.n_nodes()];
        for (c, &f) in self.coarse_node_embed.iter().enumerate() {
            out[f] = coarse_field[c];
        }
        for (&(a, b), &m) in &self.edge_midpoint_map {
            out[m] = 0.5 * (coarse_field[a] + coarse_field[b]);
        }
        out
    }
}

/// Split every triangle of `coarse` into four congruent children by joining
/// edge midpoints.
pub fn refine_midpoint(coarse: Mesh) -> Result<MeshPair> {
    coarse.validate()?;
    let mut fine_nodes = coarse.nodes.clone();
    let mut edge_midpoint_map = BTreeMap::new();

    let mut edges: BTreeSet<(usize, usize)> = BTreeSet::new();
    for tri in &coarse.triangles {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            edges.insert((a.min(b), a.max(b)));
        }
    }
    for &(a, b) in &edges {
        let (pa, pb) = (coarse.nodes[a], coarse.nodes[b]);
        let id = fine_nodes.len();
        fine_nodes.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
        edge_midpoint_map.insert((a, b), id);
    }
    let mid = |a: usize, b: usize| edge_midpoint_map[&(a.min(b), a.max(b))];

    let mut fine_triangles = Vec::with_capacity(4 * coarse.triangles.len());
    let mut fine_parent = Vec::with_capacity(4 * coarse.triangles.len());
    for (t, &[v0, v1, v2]) in coarse.triangles.iter().enumerate() {
        let (m01, m12, m20) = (mid(v0, v1), mid(v1, v2), mid(v2, v0));
        for child in [
            [v0, m01, m20],
            [v1, m12, m01],
            [v2, m20, m12],
            [m01, m12, m20],
        ] {
            fine_triangles.push(child);
            fine_parent.push(t);
        }
    }

    let mut fine_boundary = Vec::with_capacity(2 * coarse.boundary_edges.len());
    for ([a, b], tag) in &coarse.boundary_edges {
        let m = mid(*a, *b);
        fine_boundary.push(([*a, m], *tag));
        fine_boundary.push(([m, *b], *tag));
    }

    let fine = Mesh {
        nodes: fine_nodes,
        triangles: fine_triangles,
        boundary_edges: fine_boundary,
    };
    fine.validate()?;
    let coarse_node_embed = (0..coarse.n_nodes()).collect();
    Ok(MeshPair {
        coarse,
        fine,
        edge_midpoint_map,
        coarse_node_embed,
        fine_parent,
    })
}

/// Structured grid helper over integer lattice cells of size `1/m`.
struct GridBuilder {
    m: usize,
    index: BTreeMap<(usize, usize), usize>,
    nodes: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
}

impl GridBuilder {
    fn new(m: usize) -> Self {
        Self {
            m,
            index: BTreeMap::new(),
            nodes: Vec::new(),
            triangles: Vec::new(),
        }
    }

    fn node(&mut self, i: usize, j: usize) -> usize {
        let m = self.m;
        let nodes = &mut self.nodes;
        *self.index.entry((i, j)).or_insert_with(|| {
            nodes.push([i as f64 / m as f64, j as f64 / m as f64]);
            nodes.len() - 1
        })
    }

    /// Two CCW triangles for cell (i, j); the diagonal direction mirrors
    /// about x = 1/2 so reflected cells triangulate identically.
    fn cell(&mut self, i: usize, j: usize) {
        let bl = self.node(i, j);
        let br = self.node(i + 1, j);
        let tr = self.node(i + 1, j + 1);
        let tl = self.node(i, j + 1);
        if 2 * i < self.m {
            self.triangles.push([bl, br, tr]);
            self.triangles.push([bl, tr, tl]);
        } else {
            self.triangles.push([bl, br, tl]);
            self.triangles.push([br, tr, tl]);
        }
    }

    /// Finish into a mesh, tagging boundary edges through `tag`, which
    /// receives the lattice coordinates of the edge endpoints.
    fn finish(self, tag: impl Fn((usize, usize), (usize, usize)) -> SegmentTag) -> Mesh {
        let mut usage: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut oriented: BTreeMap<(usize, usize), (usize, usize)> = BTreeMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                *usage.entry((a.min(b), a.max(b))).or_insert(0) += 1;
                oriented.insert((a.min(b), a.max(b)), (a, b));
            }
        }
        let rev: BTreeMap<usize, (usize, usize)> =
            self.index.iter().map(|(&ij, &id)| (id, ij)).collect();
        let mut boundary_edges = Vec::new();
        for (e, n) in usage {
            if n == 1 {
                let (a, b) = oriented[&e];
                boundary_edges.push(([a, b], tag(rev[&a], rev[&b])));
            }
        }
        Mesh {
            nodes: self.nodes,
            triangles: self.triangles,
            boundary_edges,
        }
    }
}

/// Unit-square cavity with `n` fine subdivisions per side (`n` even, fine
/// mesh size `h = 1/n`). The controlled boundary is `Left | Right`.
pub fn build_unit_square(n: usize) -> Result<MeshPair> {
    if n < 2 || n % 2 != 0 {
        return Err(Error::Mesh(format!(
            "unit square needs an even subdivision count >= 2, got {n}"
        )));
    }
    let nc = n / 2;
    let mut g = GridBuilder::new(nc);
    for j in 0..nc {
        for i in 0..nc {
            g.cell(i, j);
        }
    }
    let coarse = g.finish(|(i1, j1), (i2, j2)| {
        if i1 == 0 && i2 == 0 {
            SegmentTag::Left
        } else if i1 == nc && i2 == nc {
            SegmentTag::Right
        } else if j1 == 0 && j2 == 0 {
            SegmentTag::Bottom
        } else {
            debug_assert!(j1 == nc && j2 == nc);
            SegmentTag::Top
        }
    });
    refine_midpoint(coarse)
}

/// CVD-reactor domain: unit square plus a centered inlet channel of width and
/// height 1/3 on top. `n` is the fine subdivision count per unit length and
/// must be divisible by 6 so the 1/3-wide features align with mesh lines.
pub fn build_reactor(n: usize) -> Result<MeshPair> {
    if n == 0 || n % 6 != 0 {
        return Err(Error::Mesh(format!(
            "reactor needs a subdivision count divisible by 6, got {n}"
        )));
    }
    let nc = n / 2;
    let third = nc / 3;
    let mut g = GridBuilder::new(nc);
    for j in 0..nc {
        for i in 0..nc {
            g.cell(i, j);
        }
    }
    for j in nc..nc + third {
        for i in third..2 * third {
            g.cell(i, j);
        }
    }
    let coarse = g.finish(|(i1, j1), (i2, j2)| {
        if j1 == 0 && j2 == 0 {
            SegmentTag::Susceptor
        } else if i1 == 0 && i2 == 0 {
            SegmentTag::SideWallLeft
        } else if i1 == nc && i2 == nc {
            SegmentTag::SideWallRight
        } else if j1 == nc + third && j2 == nc + third {
            SegmentTag::Inlet
        } else if j1 == nc && j2 == nc && i1.max(i2) <= third {
            SegmentTag::OutletLeft
        } else if j1 == nc && j2 == nc && i1.min(i2) >= 2 * third {
            SegmentTag::OutletRight
        } else {
            debug_assert!((i1 == third && i2 == third) || (i1 == 2 * third && i2 == 2 * third));
            SegmentTag::InletWall
        }
    });
    refine_midpoint(coarse)
}

/// Nodes of `tag` ordered by arc length along the segment, together with
/// their arc-length coordinates. The traversal starts from the segment
/// endpoint with lexicographically smallest (x, y).
pub fn nodes_by_arclength(mesh: &Mesh, tag: SegmentTag) -> Result<Vec<(usize, f64)>> {
    let edges: Vec<[usize; 2]> = mesh
        .boundary_edges
        .iter()
        .filter(|(_, t)| *t == tag)
        .map(|(e, _)| *e)
        .collect();
    if edges.is_empty() {
        return Err(Error::UnknownTag(tag.name().into()));
    }
    let mut adj: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for [a, b] in &edges {
        adj.entry(*a).or_default().push(*b);
        adj.entry(*b).or_default().push(*a);
    }
    let endpoints: Vec<usize> = adj
        .iter()
        .filter(|(_, nb)| nb.len() == 1)
        .map(|(&k, _)| k)
        .collect();
    if endpoints.len() != 2 {
        return Err(Error::Mesh(format!("tag {tag} is not a simple open polyline")));
    }
    let start = *endpoints
        .iter()
        .min_by(|&&a, &&b| {
            let (pa, pb) = (mesh.nodes[a], mesh.nodes[b]);
            pa.partial_cmp(&pb).unwrap()
        })
        .unwrap();
    let mut out = vec![(start, 0.0)];
    let mut prev = usize::MAX;
    let mut cur = start;
    let mut s = 0.0;
    while out.len() < adj.len() {
        let next = *adj[&cur].iter().find(|&&k| k != prev).ok_or_else(|| {
            Error::Mesh(format!("tag {tag} polyline traversal failed"))
        })?;
        let (pa, pb) = (mesh.nodes[cur], mesh.nodes[next]);
        s += ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt();
        out.push((next, s));
        prev = cur;
        cur = next;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square_counts_n2() {
        let pair = build_unit_square(2).unwrap();
        assert_eq!(pair.fine.n_nodes(), 9);
        assert_eq!(pair.fine.n_triangles(), 8);
        assert_eq!(pair.coarse.n_nodes(), 4);
        assert_eq!(pair.coarse.n_triangles(), 2);
        assert!((pair.fine.total_area() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unit_square_rejects_bad_n() {
        assert!(build_unit_square(3).is_err());
        assert!(build_unit_square(0).is_err());
    }

    #[test]
    fn unit_square_paper_scale_mesh_size() {
        let pair = build_unit_square(64).unwrap();
        assert_eq!(pair.fine.n_nodes(), 65 * 65);
        assert_eq!(pair.fine.n_triangles(), 2 * 64 * 64);
        // fine mesh size h = 1/64: shortest edges have this length
        let [a, b, c] = pair.fine.triangles[0];
        let h = (0..3)
            .map(|k| {
                let (p, q) = match k {
                    0 => (a, b),
                    1 => (b, c),
                    _ => (c, a),
                };
                let (pp, pq) = (pair.fine.nodes[p], pair.fine.nodes[q]);
                ((pq[0] - pp[0]).powi(2) + (pq[1] - pp[1]).powi(2)).sqrt()
            })
            .fold(f64::INFINITY, f64::min);
        assert!((h - 1.0 / 64.0).abs() < 1e-15);
    }

    #[test]
    fn reactor_area_and_tag_lengths() {
        let pair = build_reactor(6).unwrap();
        assert!((pair.fine.total_area() - 10.0 / 9.0).abs() < 1e-12);
        assert!((pair.coarse.total_area() - 10.0 / 9.0).abs() < 1e-12);
        assert!((pair.fine.tag_length(SegmentTag::Susceptor) - 1.0).abs() < 1e-12);
        assert!((pair.fine.tag_length(SegmentTag::SideWallLeft) - 1.0).abs() < 1e-12);
        assert!((pair.fine.tag_length(SegmentTag::SideWallRight) - 1.0).abs() < 1e-12);
        assert!((pair.fine.tag_length(SegmentTag::Inlet) - 1.0 / 3.0).abs() < 1e-12);
        assert!((pair.fine.tag_length(SegmentTag::OutletLeft) - 1.0 / 3.0).abs() < 1e-12);
        assert!((pair.fine.tag_length(SegmentTag::OutletRight) - 1.0 / 3.0).abs() < 1e-12);
        // two channel walls of height 1/3 each
        assert!((pair.fine.tag_length(SegmentTag::InletWall) - 2.0 / 3.0).abs() < 1e-12);
        assert!(build_reactor(4).is_err());
    }

    #[test]
    fn reactor_node_set_reflects_with_swapped_side_tags() {
        let pair = build_reactor(6).unwrap();
        let mesh = &pair.fine;
        // x -> 1 - x maps the node set onto itself
        for p in &mesh.nodes {
            let q = [1.0 - p[0], p[1]];
            let found = mesh
                .nodes
                .iter()
                .any(|r| (r[0] - q[0]).abs() < 1e-12 && (r[1] - q[1]).abs() < 1e-12);
            assert!(found, "no mirror partner for {p:?}");
        }
        // side-wall tags swap under the reflection
        let left = mesh.nodes_of_tag(SegmentTag::SideWallLeft);
        let right = mesh.nodes_of_tag(SegmentTag::SideWallRight);
        assert_eq!(left.len(), right.len());
        for &i in &left {
            let p = mesh.nodes[i];
            let found = right.iter().any(|&j| {
                let q = mesh.nodes[j];
                (q[0] - (1.0 - p[0])).abs() < 1e-12 && (q[1] - p[1]).abs() < 1e-12
            });
            assert!(found);
        }
    }

    #[test]
    fn refine_single_triangle() {
        let coarse = Mesh {
            nodes: vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            triangles: vec![[0, 1, 2]],
            boundary_edges: vec![
                ([0, 1], SegmentTag::Bottom),
                ([1, 2], SegmentTag::Right),
                ([2, 0], SegmentTag::Left),
            ],
        };
        let parent_area = coarse.triangle_area(0);
        let pair = refine_midpoint(coarse).unwrap();
        assert_eq!(pair.fine.n_triangles(), 4);
        assert_eq!(pair.fine.n_nodes(), 6);
        for t in 0..4 {
            assert!((pair.fine.triangle_area(t) - parent_area / 4.0).abs() < 1e-14);
        }
    }

    #[test]
    fn refine_two_triangle_square() {
        let coarse = Mesh {
            nodes: vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            triangles: vec![[0, 1, 2], [0, 2, 3]],
            boundary_edges: vec![
                ([0, 1], SegmentTag::Bottom),
                ([1, 2], SegmentTag::Right),
                ([2, 3], SegmentTag::Top),
                ([3, 0], SegmentTag::Left),
            ],
        };
        let pair = refine_midpoint(coarse).unwrap();
        assert_eq!(pair.fine.n_triangles(), 8);
        assert_eq!(pair.fine.n_nodes(), 9);
        assert!((pair.fine.total_area() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn fine_boundary_edges_inherit_parent_tags() {
        let pair = build_unit_square(8).unwrap();
        for ([a, b], tag) in &pair.fine.boundary_edges {
            // locate the coarse edge containing this fine edge by geometry
            let mid = [
                0.5 * (pair.fine.nodes[*a][0] + pair.fine.nodes[*b][0]),
                0.5 * (pair.fine.nodes[*a][1] + pair.fine.nodes[*b][1]),
            ];
            let expected = if mid[0].abs() < 1e-12 {
                SegmentTag::Left
            } else if (mid[0] - 1.0).abs() < 1e-12 {
                SegmentTag::Right
            } else if mid[1].abs() < 1e-12 {
                SegmentTag::Bottom
            } else {
                SegmentTag::Top
            };
            assert_eq!(*tag, expected);
        }
    }

    #[test]
    fn arclength_ordering_left_side() {
        let pair = build_unit_square(4).unwrap();
        let side = nodes_by_arclength(&pair.fine, SegmentTag::Left).unwrap();
        assert_eq!(side.len(), 5);
        assert!((side[0].1 - 0.0).abs() < 1e-15);
        assert!((side.last().unwrap().1 - 1.0).abs() < 1e-12);
        for w in side.windows(2) {
            assert!(w[1].1 > w[0].1);
            // on the left side, arc length equals the y coordinate
            assert!((pair.fine.nodes[w[1].0][1] - w[1].1).abs() < 1e-12);
        }
    }

    #[test]
    fn meshes_validate() {
        for pair in [build_unit_square(6).unwrap(), build_reactor(6).unwrap()] {
            pair.coarse.validate().unwrap();
            pair.fine.validate().unwrap();
        }
    }
}
