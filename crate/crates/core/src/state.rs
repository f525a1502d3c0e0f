//! Problem setup and the forward (state) solver.
//!
//! One time step of the split scheme solves, in order: the temperature
//! advection-diffusion system (transport frozen at the previous velocity,
//! heat-flux or Robin control data on the controlled boundary), the momentum
//! advection-diffusion system (sourced by the *current* temperature through
//! buoyancy and by the previous pressure gradient), and the incremental
//! projection — a degenerate Stokes saddle system in the velocity and the
//! pressure increment that enforces discrete incompressibility against the
//! coarse pressure space.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fem::{
    assemble_boundary_mass, assemble_convection_e, assemble_operators, FemOperators,
};
use crate::mesh::{nodes_by_arclength, MeshPair, SegmentTag};
use crate::solver::{ConstrainedSystem, LuFactor};
use crate::sparse::{SparseOperator, Triplets};
use crate::util::{axpy, dot};

/// Which boundary condition closes the projection step.
///
/// `NormalTrace` constrains only the normal velocity component on Dirichlet
/// segments (the scheme's default); `FullDirichlet` constrains both
/// components, trading well-posedness of the continuous limit for accuracy.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProjectionVariant {
    NormalTrace,
    FullDirichlet,
}

/// Time ramp for inflow data: linear rise, hold, linear fall.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TimeRamp {
    Constant,
    UpHoldDown { t_up: f64, t_down: f64, t_end: f64 },
}

impl TimeRamp {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            TimeRamp::Constant => 1.0,
            TimeRamp::UpHoldDown { t_up, t_down, t_end } => {
                if t <= 0.0 || t >= t_end {
                    0.0
                } else if t < t_up {
                    t / t_up
                } else if t <= t_down {
                    1.0
                } else {
                    (t_end - t) / (t_end - t_down)
                }
            }
        }
    }
}

/// Downward parabolic inflow on a horizontal segment `x in [x0, x1]`:
/// velocity (0, -4 (x - x0)(x1 - x) ramp(t)).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InflowProfile {
    pub x0: f64,
    pub x1: f64,
    pub ramp: TimeRamp,
}

impl InflowProfile {
    pub fn vertical_velocity(&self, x: f64, t: f64) -> f64 {
        -4.0 * (x - self.x0) * (self.x1 - x) * self.ramp.eval(t)
    }
}

/// Velocity boundary condition per tagged segment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum VelocityBc {
    NoSlip,
    Inflow(InflowProfile),
    /// Do-nothing outflow: no essential constraint in either step.
    Outflow,
}

/// Temperature boundary condition per tagged segment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ThetaBc {
    Dirichlet(f64),
    /// ν₂ ∂θ/∂n = v on a controlled segment.
    FluxControl,
    /// ν₂ ∂θ/∂n + θ = v on a controlled segment, realized weakly by a
    /// boundary-mass term on the left and the control pairing on the right.
    RobinControl,
    /// Natural zero-flux.
    Insulated,
}

/// Target velocity field of the tracking objective.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TargetField {
    Zero,
    /// (A φ(x₁)φ'(x₂), -A φ'(x₁)φ(x₂)) with φ(z) = z²(z-1)²; divergence-free
    /// and vanishing on the unit-square boundary.
    Pinwheel { amplitude: f64 },
}

impl TargetField {
    pub fn eval(&self, x: f64, y: f64, _t: f64) -> [f64; 2] {
        match *self {
            TargetField::Zero => [0.0, 0.0],
            TargetField::Pinwheel { amplitude } => {
                let phi = |z: f64| z * z * (z - 1.0) * (z - 1.0);
                let dphi = |z: f64| 2.0 * z * (z - 1.0) * (2.0 * z - 1.0);
                [amplitude * phi(x) * dphi(y), -amplitude * dphi(x) * phi(y)]
            }
        }
    }
}

/// Objective functional: velocity tracking or vorticity suppression, both
/// with the α-weighted control penalty.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Objective {
    /// (weight/2)∬|y-y_d|² + (α/2)∬_Γc v². `weight` is 1 except in tests
    /// that isolate the penalty term.
    Tracking { target: TargetField, weight: f64 },
    /// (1/2)∬|∇×y|² + (α/2)∬_Γc v².
    Vorticity,
}

/// Everything that defines one control problem instance.
#[derive(Clone, Debug)]
pub struct ProblemSetup {
    pub mesh: MeshPair,
    pub nu1: f64,
    pub nu2: f64,
    pub alpha: f64,
    pub t_final: f64,
    pub steps: usize,
    pub bc: BTreeMap<SegmentTag, (VelocityBc, ThetaBc)>,
    /// Tags forming Γ_c; their θ condition must be a control type.
    pub control_tags: Vec<SegmentTag>,
    pub objective: Objective,
    pub variant: ProjectionVariant,
    /// Initial fields; `None` means zero.
    pub initial_velocity: Option<Vec<f64>>,
    pub initial_theta: Option<Vec<f64>>,
    /// Disable the convection terms entirely; the state map then becomes
    /// linear in the control, which several oracles exploit.
    pub convection: bool,
}

impl ProblemSetup {
    pub fn dt(&self) -> f64 {
        self.t_final / self.steps as f64
    }

    /// Buoyancy-driven cavity tracking a pinwheel target through side-wall
    /// heat flux; `n` fine subdivisions per side, `steps` time steps.
    pub fn example1(n: usize, steps: usize) -> Result<Self> {
        let mesh = crate::mesh::build_unit_square(n)?;
        let mut bc = BTreeMap::new();
        bc.insert(SegmentTag::Left, (VelocityBc::NoSlip, ThetaBc::FluxControl));
        bc.insert(SegmentTag::Right, (VelocityBc::NoSlip, ThetaBc::FluxControl));
        bc.insert(SegmentTag::Top, (VelocityBc::NoSlip, ThetaBc::Dirichlet(0.0)));
        bc.insert(SegmentTag::Bottom, (VelocityBc::NoSlip, ThetaBc::Dirichlet(0.0)));
        let setup = Self {
            mesh,
            nu1: 1.0 / 100.0,
            nu2: 1.0 / 72.0,
            alpha: 5e-5,
            t_final: 5.0,
            steps,
            bc,
            control_tags: vec![SegmentTag::Left, SegmentTag::Right],
            objective: Objective::Tracking {
                target: TargetField::Pinwheel { amplitude: 100.0 },
                weight: 1.0,
            },
            variant: ProjectionVariant::NormalTrace,
            initial_velocity: None,
            initial_theta: None,
            convection: true,
        };
        setup.validate()?;
        Ok(setup)
    }

    /// CVD reactor with a ramped inlet, hot susceptor, outflow outlets, and
    /// Robin temperature control on the side walls; vorticity objective.
    pub fn example2(n: usize, steps: usize) -> Result<Self> {
        let mesh = crate::mesh::build_reactor(n)?;
        let t_final = 15.0;
        let inflow = InflowProfile {
            x0: 1.0 / 3.0,
            x1: 2.0 / 3.0,
            ramp: TimeRamp::UpHoldDown {
                t_up: t_final / 3.0,
                t_down: 2.0 * t_final / 3.0,
                t_end: t_final,
            },
        };
        let mut bc = BTreeMap::new();
        bc.insert(SegmentTag::Susceptor, (VelocityBc::NoSlip, ThetaBc::Dirichlet(1.0)));
        bc.insert(SegmentTag::SideWallLeft, (VelocityBc::NoSlip, ThetaBc::RobinControl));
        bc.insert(SegmentTag::SideWallRight, (VelocityBc::NoSlip, ThetaBc::RobinControl));
        bc.insert(SegmentTag::InletWall, (VelocityBc::NoSlip, ThetaBc::Dirichlet(0.0)));
        bc.insert(SegmentTag::Inlet, (VelocityBc::Inflow(inflow), ThetaBc::Dirichlet(0.0)));
        bc.insert(SegmentTag::OutletLeft, (VelocityBc::Outflow, ThetaBc::Insulated));
        bc.insert(SegmentTag::OutletRight, (VelocityBc::Outflow, ThetaBc::Insulated));
        let setup = Self {
            mesh,
            nu1: 1.0 / 100.0,
            nu2: 1.0 / 72.0,
            alpha: 1e-4,
            t_final,
            steps,
            bc,
            control_tags: vec![SegmentTag::SideWallLeft, SegmentTag::SideWallRight],
            objective: Objective::Vorticity,
            variant: ProjectionVariant::NormalTrace,
            initial_velocity: None,
            initial_theta: None,
            convection: true,
        };
        setup.validate()?;
        Ok(setup)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu1 > 0.0 && self.nu2 > 0.0 && self.alpha > 0.0) {
            return Err(Error::Config("nu1, nu2 and alpha must be positive".into()));
        }
        if self.steps == 0 || !(self.t_final > 0.0) {
            return Err(Error::Config("need t_final > 0 and at least one time step".into()));
        }
        for tag in self.mesh.fine.tags() {
            let Some((_, theta)) = self.bc.get(&tag) else {
                return Err(Error::Config(format!("no boundary condition for segment {tag}")));
            };
            let is_control = self.control_tags.contains(&tag);
            let is_control_bc = matches!(theta, ThetaBc::FluxControl | ThetaBc::RobinControl);
            if is_control != is_control_bc {
                return Err(Error::Config(format!(
                    "segment {tag}: control tags and control-type θ conditions must coincide"
                )));
            }
        }
        if self.control_tags.is_empty() {
            return Err(Error::Config("no controlled boundary segments".into()));
        }
        let n = self.mesh.fine.n_nodes();
        if let Some(v) = &self.initial_velocity {
            if v.len() != 2 * n {
                return Err(Error::Config("initial velocity has wrong dimension".into()));
            }
        }
        if let Some(t) = &self.initial_theta {
            if t.len() != n {
                return Err(Error::Config("initial temperature has wrong dimension".into()));
            }
        }
        Ok(())
    }
}

/// Per-time-step boundary heat-flux coefficients over the Γ_c nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlTrajectory(pub Vec<Vec<f64>>);

impl ControlTrajectory {
    pub fn steps(&self) -> usize {
        self.0.len()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self(
            self.0
                .iter()
                .map(|v| v.iter().map(|x| s * x).collect())
                .collect(),
        )
    }

    /// self += s * other
    pub fn axpy(&mut self, s: f64, other: &Self) {
        assert_eq!(self.0.len(), other.0.len());
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            axpy(a, s, b);
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.iter().all(|x| x.is_finite()))
    }

    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .map(|v| crate::util::max_abs(v))
            .fold(0.0, f64::max)
    }
}

/// One side of the controlled boundary: its nodes in arc-length order with
/// arc-length coordinates, as local indices into the control vector.
#[derive(Clone, Debug)]
pub struct ControlSide {
    pub tag: SegmentTag,
    /// Local control indices, ordered by arc length.
    pub local: Vec<usize>,
    pub arclength: Vec<f64>,
}

/// The discrete control space U^Δt: per-step fields over the Γ_c nodes with
/// the Δt-weighted L²(Γ_c) inner product.
#[derive(Clone, Debug)]
pub struct ControlSpace {
    /// Fine-mesh node ids of the control dofs (ascending).
    pub nodes: Vec<usize>,
    /// m x m boundary mass on Γ_c.
    pub mass: SparseOperator,
    /// n x m pairing matrix: control coefficients -> fine test functionals
    /// ∫_Γc v φ_i ds.
    pub to_field: SparseOperator,
    pub sides: Vec<ControlSide>,
    pub dt: f64,
    pub steps: usize,
}

impl ControlSpace {
    fn build(pair: &MeshPair, tags: &[SegmentTag], dt: f64, steps: usize) -> Result<Self> {
        let mesh = &pair.fine;
        let mut nodes: Vec<usize> = Vec::new();
        for &tag in tags {
            nodes.extend(mesh.nodes_of_tag(tag));
        }
        nodes.sort_unstable();
        nodes.dedup();
        if nodes.is_empty() {
            return Err(Error::Config("controlled boundary has no nodes".into()));
        }
        let mut local_of = BTreeMap::new();
        for (k, &i) in nodes.iter().enumerate() {
            local_of.insert(i, k);
        }
        let m = nodes.len();
        let n = mesh.n_nodes();
        let mut tm = Triplets::new(m, m);
        let mut tf = Triplets::new(n, m);
        for ([a, b], tag) in &mesh.boundary_edges {
            if !tags.contains(tag) {
                continue;
            }
            let (pa, pb) = (mesh.nodes[*a], mesh.nodes[*b]);
            let len = ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt();
            let e = [*a, *b];
            for i in 0..2 {
                for j in 0..2 {
                    let w = len / 6.0 * if i == j { 2.0 } else { 1.0 };
                    tm.push(local_of[&e[i]], local_of[&e[j]], w);
                    tf.push(e[i], local_of[&e[j]], w);
                }
            }
        }
        let mut sides = Vec::new();
        for &tag in tags {
            let ordered = nodes_by_arclength(mesh, tag)?;
            sides.push(ControlSide {
                tag,
                local: ordered.iter().map(|(i, _)| local_of[i]).collect(),
                arclength: ordered.iter().map(|(_, s)| *s).collect(),
            });
        }
        Ok(Self {
            nodes,
            mass: tm.into_csr(),
            to_field: tf.into_csr(),
            sides,
            dt,
            steps,
        })
    }

    pub fn dim(&self) -> usize {
        self.nodes.len()
    }

    pub fn zero(&self) -> ControlTrajectory {
        ControlTrajectory(vec![vec![0.0; self.dim()]; self.steps])
    }

    /// (u, v)_{U^Δt} = Δt Σ_n ∫_Γc uⁿ vⁿ ds.
    pub fn dot(&self, a: &ControlTrajectory, b: &ControlTrajectory) -> f64 {
        assert_eq!(a.steps(), self.steps);
        assert_eq!(b.steps(), self.steps);
        let mut acc = 0.0;
        for (ua, ub) in a.0.iter().zip(&b.0) {
            acc += dot(&self.mass.matvec(ua), ub);
        }
        self.dt * acc
    }

    pub fn norm(&self, a: &ControlTrajectory) -> f64 {
        self.dot(a, a).max(0.0).sqrt()
    }

    /// Restrict a fine nodal field to the control dofs.
    pub fn trace(&self, field: &[f64]) -> Vec<f64> {
        self.nodes.iter().map(|&i| field[i]).collect()
    }
}

/// Per-time-step state fields. Index 0 holds the initial data; `y_tilde[0]`
/// is unused.
#[derive(Clone, Debug)]
pub struct StateTrajectory {
    pub y: Vec<Vec<f64>>,
    pub y_tilde: Vec<Vec<f64>>,
    pub p: Vec<Vec<f64>>,
    pub theta: Vec<Vec<f64>>,
}

/// Static value or ramped inflow value for one constrained dof.
#[derive(Clone, Copy, Debug)]
enum BoundaryValue {
    Const(f64),
    /// value = base * ramp(t), base already folded with the spatial profile.
    Ramped { base: f64 },
}

struct SaddleSystem {
    factor: LuFactor,
    /// Free velocity dofs in [0, 2n).
    free: Vec<usize>,
    n_free: usize,
    np: usize,
    /// Zero-mean pressure multiplier present (closed cavities only).
    multiplier: bool,
}

/// Assembled, factorized realization of a [`ProblemSetup`].
pub struct Discretization {
    setup: ProblemSetup,
    pub ops: FemOperators,
    pub control: ControlSpace,
    /// Transpose of the divergence coupling (2n x np).
    pub div_t: SparseOperator,
    /// Robin boundary matrix over the control tags; `None` without Robin BCs.
    pub robin: Option<SparseOperator>,
    pub(crate) theta_dirichlet: Vec<usize>,
    theta_values: Vec<f64>,
    /// Advection-step constrained node set (same for both components).
    pub(crate) adv_nodes: Vec<usize>,
    adv_vx: Vec<BoundaryValue>,
    adv_vy: Vec<BoundaryValue>,
    pub(crate) proj_dofs: Vec<usize>,
    proj_values: Vec<BoundaryValue>,
    ramp: TimeRamp,
    saddle: SaddleSystem,
}

impl Discretization {
    pub fn new(setup: ProblemSetup) -> Result<Self> {
        setup.validate()?;
        let ops = assemble_operators(&setup.mesh, setup.nu1, setup.nu2)?;
        let control = ControlSpace::build(&setup.mesh, &setup.control_tags, setup.dt(), setup.steps)?;
        let div_t = ops.divergence.transpose();

        let robin_tags: Vec<SegmentTag> = setup
            .bc
            .iter()
            .filter(|(_, (_, t))| matches!(t, ThetaBc::RobinControl))
            .map(|(tag, _)| *tag)
            .collect();
        let robin = if robin_tags.is_empty() {
            None
        } else {
            Some(assemble_boundary_mass(&setup.mesh.fine, &robin_tags)?)
        };

        let mesh = &setup.mesh.fine;
        let n = mesh.n_nodes();

        // θ Dirichlet table; on conflicting tags the smallest tag wins.
        let mut theta_map: BTreeMap<usize, f64> = BTreeMap::new();
        for tag in mesh.tags() {
            if let (_, ThetaBc::Dirichlet(val)) = setup.bc[&tag] {
                for node in mesh.nodes_of_tag(tag) {
                    theta_map.entry(node).or_insert(val);
                }
            }
        }
        let theta_dirichlet: Vec<usize> = theta_map.keys().copied().collect();
        let theta_values: Vec<f64> = theta_map.values().copied().collect();

        // Advection-step velocity constraints: both components on every
        // Dirichlet segment node; outflow segments stay free.
        let mut ramp = TimeRamp::Constant;
        let mut adv_map: BTreeMap<usize, (BoundaryValue, BoundaryValue)> = BTreeMap::new();
        for tag in mesh.tags() {
            match setup.bc[&tag].0 {
                VelocityBc::NoSlip => {
                    for node in mesh.nodes_of_tag(tag) {
                        adv_map
                            .entry(node)
                            .or_insert((BoundaryValue::Const(0.0), BoundaryValue::Const(0.0)));
                    }
                }
                VelocityBc::Inflow(profile) => {
                    ramp = profile.ramp;
                    for node in mesh.nodes_of_tag(tag) {
                        let x = mesh.nodes[node][0];
                        let base = -4.0 * (x - profile.x0) * (profile.x1 - x);
                        adv_map.entry(node).or_insert((
                            BoundaryValue::Const(0.0),
                            BoundaryValue::Ramped { base },
                        ));
                    }
                }
                VelocityBc::Outflow => {}
            }
        }
        let adv_nodes: Vec<usize> = adv_map.keys().copied().collect();
        let adv_vx: Vec<BoundaryValue> = adv_map.values().map(|(x, _)| *x).collect();
        let adv_vy: Vec<BoundaryValue> = adv_map.values().map(|(_, y)| *y).collect();

        // Projection-step constraints. NormalTrace pins the component normal
        // to each Dirichlet boundary edge (edges are axis-aligned in both
        // geometries); FullDirichlet pins both components.
        let mut proj_map: BTreeMap<usize, BoundaryValue> = BTreeMap::new();
        for ([a, b], tag) in &mesh.boundary_edges {
            let vbc = setup.bc[tag].0;
            if matches!(vbc, VelocityBc::Outflow) {
                continue;
            }
            let (pa, pb) = (mesh.nodes[*a], mesh.nodes[*b]);
            let horizontal = (pb[1] - pa[1]).abs() <= (pb[0] - pa[0]).abs();
            for &node in &[*a, *b] {
                let x = mesh.nodes[node][0];
                let comps: &[usize] = match setup.variant {
                    ProjectionVariant::FullDirichlet => &[0, 1],
                    // normal of a horizontal edge is e2, of a vertical edge e1
                    ProjectionVariant::NormalTrace => {
                        if horizontal {
                            &[1]
                        } else {
                            &[0]
                        }
                    }
                };
                for &comp in comps {
                    let value = match (vbc, comp) {
                        (VelocityBc::Inflow(profile), 1) => BoundaryValue::Ramped {
                            base: -4.0 * (x - profile.x0) * (profile.x1 - x),
                        },
                        _ => BoundaryValue::Const(0.0),
                    };
                    proj_map.entry(comp * n + node).or_insert(value);
                }
            }
        }
        let proj_dofs: Vec<usize> = proj_map.keys().copied().collect();
        let proj_values: Vec<BoundaryValue> = proj_map.values().copied().collect();

        // Pressure is only determined up to constants when every boundary
        // segment carries an essential condition; pin the mean exactly then.
        let has_outflow = setup
            .bc
            .values()
            .any(|(v, _)| matches!(v, VelocityBc::Outflow));
        let saddle = build_saddle(&setup, &ops, &proj_dofs, !has_outflow)?;

        Ok(Self {
            setup,
            ops,
            control,
            div_t,
            robin,
            theta_dirichlet,
            theta_values,
            adv_nodes,
            adv_vx,
            adv_vy,
            proj_dofs,
            proj_values,
            ramp,
            saddle,
        })
    }

    pub fn setup(&self) -> &ProblemSetup {
        &self.setup
    }

    pub fn dt(&self) -> f64 {
        self.setup.dt()
    }

    pub fn n_fine(&self) -> usize {
        self.setup.mesh.fine.n_nodes()
    }

    pub fn n_pressure(&self) -> usize {
        self.setup.mesh.coarse.n_nodes()
    }

    /// Whether the projection saddle pins the pressure mean with a Lagrange
    /// multiplier (closed cavities; domains with outflow determine the
    /// pressure level through the natural boundary instead).
    pub fn pins_pressure_mean(&self) -> bool {
        self.saddle.multiplier
    }

    fn eval_bv(&self, bv: BoundaryValue, t: f64) -> f64 {
        match bv {
            BoundaryValue::Const(c) => c,
            BoundaryValue::Ramped { base } => base * self.ramp.eval(t),
        }
    }

    pub(crate) fn theta_constraints(&self) -> (&[usize], &[f64]) {
        (&self.theta_dirichlet, &self.theta_values)
    }

    pub(crate) fn adv_constraints(&self, t: f64) -> (&[usize], Vec<f64>, Vec<f64>) {
        let vx = self.adv_vx.iter().map(|&b| self.eval_bv(b, t)).collect();
        let vy = self.adv_vy.iter().map(|&b| self.eval_bv(b, t)).collect();
        (&self.adv_nodes, vx, vy)
    }

    fn proj_constraint_values(&self, t: f64) -> Vec<f64> {
        self.proj_values.iter().map(|&b| self.eval_bv(b, t)).collect()
    }

    /// Scalar advection-diffusion matrix M/Δt + νK + E(y) for the θ step
    /// (ν = ν₂, plus the Robin boundary term) or the momentum step (ν = ν₁).
    pub(crate) fn theta_matrix(&self, transport: &[f64]) -> SparseOperator {
        let mut a = self
            .ops
            .mass
            .scaled(1.0 / self.dt())
            .add(&self.ops.stiffness_t);
        if self.setup.convection {
            a = a.add(&assemble_convection_e(&self.setup.mesh.fine, transport));
        }
        if let Some(r) = &self.robin {
            a = a.add(r);
        }
        a
    }

    pub(crate) fn momentum_matrix(&self, transport: &[f64]) -> SparseOperator {
        let mut a = self
            .ops
            .mass
            .scaled(1.0 / self.dt())
            .add(&self.ops.stiffness_v);
        if self.setup.convection {
            a = a.add(&assemble_convection_e(&self.setup.mesh.fine, transport));
        }
        a
    }

    /// Solve the projection saddle system. `rhs_vel` is the full 2n velocity
    /// functional, `rhs_div` the np-dimensional divergence data, `values` the
    /// essential values on the projection-constrained dofs. Returns the full
    /// velocity vector and the pressure-block solution.
    pub(crate) fn solve_saddle(
        &self,
        rhs_vel: &[f64],
        rhs_div: &[f64],
        values: &[f64],
        step: usize,
        system: &'static str,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        let s = &self.saddle;
        let n2 = 2 * self.n_fine();
        let mut rhs = vec![0.0; s.factor.dim()];
        let any_lift = values.iter().any(|&v| v != 0.0);
        let mut lift_vel = vec![0.0; n2];
        if any_lift {
            let mut xd = vec![0.0; n2];
            for (&d, &v) in self.proj_dofs.iter().zip(values) {
                xd[d] = v;
            }
            self.ops
                .mass2
                .matvec_into(&xd, &mut lift_vel);
            crate::util::scale(&mut lift_vel, 1.0 / self.dt());
            let bd = self.ops.divergence.matvec(&xd);
            for (q, b) in bd.iter().enumerate() {
                rhs[s.n_free + q] -= b;
            }
        }
        for (k, &d) in s.free.iter().enumerate() {
            rhs[k] = rhs_vel[d] - lift_vel[d];
        }
        for q in 0..s.np {
            rhs[s.n_free + q] += rhs_div[q];
        }
        let sol = s.factor.solve(&rhs);
        if sol.iter().any(|x| !x.is_finite()) {
            return Err(Error::LinearSolve { step, system });
        }
        let mut vel = vec![0.0; n2];
        for (k, &d) in s.free.iter().enumerate() {
            vel[d] = sol[k];
        }
        for (&d, &v) in self.proj_dofs.iter().zip(values) {
            vel[d] = v;
        }
        let pressure = sol[s.n_free..s.n_free + s.np].to_vec();
        Ok((vel, pressure))
    }

    pub fn initial_velocity(&self) -> Vec<f64> {
        self.setup
            .initial_velocity
            .clone()
            .unwrap_or_else(|| vec![0.0; 2 * self.n_fine()])
    }

    pub fn initial_theta(&self) -> Vec<f64> {
        self.setup
            .initial_theta
            .clone()
            .unwrap_or_else(|| vec![0.0; self.n_fine()])
    }
}

fn build_saddle(
    setup: &ProblemSetup,
    ops: &FemOperators,
    proj_dofs: &[usize],
    multiplier: bool,
) -> Result<SaddleSystem> {
    let n2 = 2 * setup.mesh.fine.n_nodes();
    let np = setup.mesh.coarse.n_nodes();
    let mut is_constrained = vec![false; n2];
    for &d in proj_dofs {
        is_constrained[d] = true;
    }
    let free: Vec<usize> = (0..n2).filter(|&d| !is_constrained[d]).collect();
    let mut pos = vec![usize::MAX; n2];
    for (k, &d) in free.iter().enumerate() {
        pos[d] = k;
    }
    let n_free = free.len();
    let dim = n_free + np + usize::from(multiplier);
    let dt = setup.dt();

    let mut t = Triplets::new(dim, dim);
    for (r, c, v) in ops.mass2.iter() {
        if pos[r] != usize::MAX && pos[c] != usize::MAX {
            t.push(pos[r], pos[c], v / dt);
        }
    }
    for (q, d, v) in ops.divergence.iter() {
        if pos[d] != usize::MAX {
            t.push(n_free + q, pos[d], v);
            t.push(pos[d], n_free + q, -v);
        }
    }
    if multiplier {
        // ∫ q dx per coarse basis function
        let w = crate::fem::assemble_mass(&setup.mesh.coarse).matvec(&vec![1.0; np]);
        for (q, wq) in w.iter().enumerate() {
            t.push(n_free + q, n_free + np, *wq);
            t.push(n_free + np, n_free + q, *wq);
        }
    }
    let factor = LuFactor::new(&t.into_csr())?;
    Ok(SaddleSystem {
        factor,
        free,
        n_free,
        np,
        multiplier,
    })
}

/// Nodal interpolation of the tracking target at time step `n` (zeros for
/// the vorticity objective).
pub fn interpolate_target(disc: &Discretization, step: usize) -> Vec<f64> {
    let mesh = &disc.setup().mesh.fine;
    let n = mesh.n_nodes();
    let mut out = vec![0.0; 2 * n];
    if let Objective::Tracking { target, .. } = disc.setup().objective {
        let t = step as f64 * disc.dt();
        for (i, p) in mesh.nodes.iter().enumerate() {
            let v = target.eval(p[0], p[1], t);
            out[i] = v[0];
            out[n + i] = v[1];
        }
    }
    out
}

/// March the split state system for the whole control trajectory.
pub fn solve_state(disc: &Discretization, v: &ControlTrajectory) -> Result<StateTrajectory> {
    let setup = disc.setup();
    let n = disc.n_fine();
    let n_steps = setup.steps;
    assert_eq!(v.steps(), n_steps, "control has wrong number of steps");
    for step in &v.0 {
        assert_eq!(step.len(), disc.control.dim(), "control has wrong dimension");
    }
    let dt = disc.dt();

    let mut y = Vec::with_capacity(n_steps + 1);
    let mut y_tilde = Vec::with_capacity(n_steps + 1);
    let mut p = Vec::with_capacity(n_steps + 1);
    let mut theta = Vec::with_capacity(n_steps + 1);
    y.push(disc.initial_velocity());
    y_tilde.push(vec![0.0; 2 * n]);
    p.push(vec![0.0; disc.n_pressure()]);
    theta.push(disc.initial_theta());

    for step in 1..=n_steps {
        let t = step as f64 * dt;
        let y_prev = &y[step - 1];

        // (i) temperature advection-diffusion with control data
        let a_theta = disc.theta_matrix(y_prev);
        let mut rhs = disc.ops.mass.matvec(&theta[step - 1]);
        crate::util::scale(&mut rhs, 1.0 / dt);
        disc.control
            .to_field
            .matvec_add_scaled(&v.0[step - 1], 1.0, &mut rhs);
        let (tdofs, tvals) = disc.theta_constraints();
        let sys = ConstrainedSystem::new(&a_theta, tdofs)
            .map_err(|_| Error::LinearSolve { step, system: "temperature advection-diffusion" })?;
        let th = sys.solve(&rhs, tvals);
        if th.iter().any(|x| !x.is_finite()) {
            return Err(Error::LinearSolve { step, system: "temperature advection-diffusion" });
        }

        // (ii) momentum advection-diffusion: buoyancy uses the new θ,
        // pressure gradient the previous p
        let k = disc.momentum_matrix(y_prev);
        let bp = disc.div_t.matvec(&p[step - 1]);
        let mut rhs_x = disc.ops.mass.matvec(&y_prev[..n]);
        crate::util::scale(&mut rhs_x, 1.0 / dt);
        axpy(&mut rhs_x, 1.0, &bp[..n]);
        let mut rhs_y = disc.ops.mass.matvec(&y_prev[n..]);
        crate::util::scale(&mut rhs_y, 1.0 / dt);
        axpy(&mut rhs_y, 1.0, &bp[n..]);
        disc.ops.mass.matvec_add_scaled(&th, 1.0, &mut rhs_y);
        let (anodes, avx, avy) = disc.adv_constraints(t);
        let sys = ConstrainedSystem::new(&k, anodes)
            .map_err(|_| Error::LinearSolve { step, system: "momentum advection-diffusion" })?;
        let ty_x = sys.solve(&rhs_x, &avx);
        let ty_y = sys.solve(&rhs_y, &avy);
        let mut ty = ty_x;
        ty.extend_from_slice(&ty_y);
        if ty.iter().any(|x| !x.is_finite()) {
            return Err(Error::LinearSolve { step, system: "momentum advection-diffusion" });
        }

        // (iii) incremental projection
        let mut rhs_vel = disc.ops.mass2.matvec(&ty);
        crate::util::scale(&mut rhs_vel, 1.0 / dt);
        let values = disc.proj_constraint_values(t);
        let rhs_div = vec![0.0; disc.n_pressure()];
        let (y_new, dp) = disc.solve_saddle(&rhs_vel, &rhs_div, &values, step, "projection")?;
        let mut p_new = p[step - 1].clone();
        axpy(&mut p_new, 1.0, &dp);

        y.push(y_new);
        y_tilde.push(ty);
        p.push(p_new);
        theta.push(th);
    }
    Ok(StateTrajectory { y, y_tilde, p, theta })
}

/// Discrete objective (Δt/2)Σ tracking-or-vorticity + (αΔt/2)Σ ∥vⁿ∥²_{Γc}.
pub fn evaluate_objective(
    disc: &Discretization,
    traj: &StateTrajectory,
    v: &ControlTrajectory,
) -> f64 {
    let setup = disc.setup();
    let dt = disc.dt();
    let mut state_term = 0.0;
    for step in 1..=setup.steps {
        state_term += match setup.objective {
            Objective::Tracking { weight, .. } => {
                let diff = crate::util::sub(&traj.y[step], &interpolate_target(disc, step));
                weight * dot(&disc.ops.mass2.matvec(&diff), &diff)
            }
            Objective::Vorticity => disc.ops.curl.energy(&traj.y[step]),
        };
    }
    let mut penalty = 0.0;
    for vn in &v.0 {
        penalty += dot(&disc.control.mass.matvec(vn), vn);
    }
    0.5 * dt * state_term + 0.5 * setup.alpha * dt * penalty
}

/// Max over steps and coarse test functions of |b(q_H, yⁿ)|, the discrete
/// incompressibility residual.
pub fn divergence_residual(disc: &Discretization, traj: &StateTrajectory) -> f64 {
    let mut worst: f64 = 0.0;
    for step in 1..=disc.setup().steps {
        let b = disc.ops.divergence.matvec(&traj.y[step]);
        let norm = dot(&disc.ops.mass2.matvec(&traj.y[step]), &traj.y[step]).sqrt();
        worst = worst.max(crate::util::max_abs(&b) / (1.0 + norm));
    }
    worst
}

/// Relative tracking error ‖y(tₙ)−y_d(tₙ)‖ / ‖y_d(tₙ)‖ per step.
pub fn tracking_error_series(disc: &Discretization, traj: &StateTrajectory) -> Vec<(f64, f64)> {
    let dt = disc.dt();
    (1..=disc.setup().steps)
        .map(|step| {
            let yd = interpolate_target(disc, step);
            let diff = crate::util::sub(&traj.y[step], &yd);
            let num = dot(&disc.ops.mass2.matvec(&diff), &diff).sqrt();
            let den = dot(&disc.ops.mass2.matvec(&yd), &yd).sqrt();
            (step as f64 * dt, if den > 0.0 { num / den } else { num })
        })
        .collect()
}

/// Vorticity magnitude ‖∇×y(tₙ)‖ per step.
pub fn vorticity_series(disc: &Discretization, traj: &StateTrajectory) -> Vec<(f64, f64)> {
    let dt = disc.dt();
    (1..=disc.setup().steps)
        .map(|step| (step as f64 * dt, disc.ops.curl.energy(&traj.y[step]).sqrt()))
        .collect()
}

/// Write per-step nodal snapshots `x y y1 y2 theta p` (pressure prolongated
/// to the fine nodes), every `stride` steps.
pub fn write_snapshots(
    disc: &Discretization,
    traj: &StateTrajectory,
    dir: &Path,
    stride: usize,
) -> Result<()> {
    if stride == 0 {
        return Ok(());
    }
    std::fs::create_dir_all(dir)?;
    let mesh = &disc.setup().mesh;
    let n = mesh.fine.n_nodes();
    for step in (0..=disc.setup().steps).step_by(stride) {
        let path = dir.join(format!("state_{step:05}.txt"));
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "# t = {:.12e}", step as f64 * disc.dt())?;
        let p_fine = mesh.prolongate(&traj.p[step]);
        for i in 0..n {
            let [x, y] = mesh.fine.nodes[i];
            writeln!(
                f,
                "{:.12e} {:.12e} {:.12e} {:.12e} {:.12e} {:.12e}",
                x,
                y,
                traj.y[step][i],
                traj.y[step][n + i],
                traj.theta[step][i],
                p_fine[i]
            )?;
        }
    }
    Ok(())
}
