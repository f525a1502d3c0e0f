//! Configuration-driven entry points behind the command-line interface.
//!
//! A run is described by a flat `key = value` TOML file with sections
//! (`[problem]`, `[optimizer]`, `[output]`, `[run]`); every key can be
//! overridden by a command-line flag. Presets fill in the two published
//! experiment configurations at desk scale; the paper-scale settings
//! (n = 64, Δt = 1/64) are reached by overriding `n` and `steps` and are
//! documented as long-running.
//!
//! Artifacts are CSV files with fixed, versioned schemas (column names in
//! the header row) and are byte-stable across repeated runs: wall-clock
//! timing is zeroed in `history.csv` unless `output.log_timing` is set.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::optimizer::{lbfgs_solve, write_control_csv, write_history_csv, LbfgsOptions};
use crate::oracle::{fd_gradient_check, FdCheckReport};
use crate::state::{
    evaluate_objective, solve_state, tracking_error_series, vorticity_series, write_snapshots,
    Discretization, Objective, ProblemSetup, ProjectionVariant, TargetField,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PresetName {
    Example1,
    Example2,
    Custom,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometryName {
    UnitSquare,
    Reactor,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveName {
    Tracking,
    Vorticity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectionName {
    NormalTrace,
    FullDirichlet,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub preset: PresetName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<GeometryName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_final: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pr: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ra: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<ObjectiveName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub projection: Option<ProjectionName>,
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub memory: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_clamp: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_output_dir")]
    pub dir: PathBuf,
    /// Steps between state snapshots; 0 disables, unset means steps/8.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_stride: Option<usize>,
    /// Record wall-clock times in history.csv (breaks byte reproducibility).
    #[serde(default)]
    pub log_timing: bool,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: default_output_dir(),
            snapshot_stride: None,
            log_timing: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunMeta {
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub run: RunMeta,
}

impl RunConfig {
    pub fn preset(preset: PresetName) -> Self {
        Self {
            problem: ProblemConfig {
                preset,
                geometry: None,
                n: None,
                steps: None,
                t_final: None,
                nu1: None,
                nu2: None,
                pr: None,
                ra: None,
                alpha: None,
                objective: None,
                projection: None,
            },
            optimizer: OptimizerConfig::default(),
            output: OutputConfig::default(),
            run: RunMeta::default(),
        }
    }
}

pub fn parse_config(s: &str) -> Result<RunConfig> {
    toml::from_str(s).map_err(|e| Error::Config(format!("{e}")))
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let s = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&s)
}

pub fn to_toml(cfg: &RunConfig) -> String {
    toml::to_string_pretty(cfg).expect("config serialization cannot fail")
}

/// Desk-scale defaults per preset: (geometry, n, steps, memory).
fn preset_defaults(cfg: &ProblemConfig) -> Result<(GeometryName, usize, usize, usize)> {
    match cfg.preset {
        PresetName::Example1 => Ok((GeometryName::UnitSquare, 16, 80, 1)),
        PresetName::Example2 => Ok((GeometryName::Reactor, 12, 240, 5)),
        PresetName::Custom => {
            let geometry = cfg.geometry.ok_or_else(|| {
                Error::Config("problem.geometry is required for the custom preset".into())
            })?;
            match geometry {
                GeometryName::UnitSquare => Ok((geometry, 16, 80, 5)),
                GeometryName::Reactor => Ok((geometry, 12, 240, 5)),
            }
        }
    }
}

/// Resolve the configuration into a concrete problem instance.
pub fn build_setup(cfg: &RunConfig) -> Result<ProblemSetup> {
    let p = &cfg.problem;
    let (geometry, n_default, steps_default, _) = preset_defaults(p)?;
    if p.preset != PresetName::Custom {
        if let Some(g) = p.geometry {
            let expected = match p.preset {
                PresetName::Example1 => GeometryName::UnitSquare,
                PresetName::Example2 => GeometryName::Reactor,
                PresetName::Custom => g,
            };
            if g != expected {
                return Err(Error::Config(
                    "problem.geometry conflicts with the chosen preset".into(),
                ));
            }
        }
    }
    let n = p.n.unwrap_or(n_default);
    let steps = p.steps.unwrap_or(steps_default);
    let mut setup = match geometry {
        GeometryName::UnitSquare => ProblemSetup::example1(n, steps)?,
        GeometryName::Reactor => ProblemSetup::example2(n, steps)?,
    };
    if let Some(t) = p.t_final {
        setup.t_final = t;
    }

    let nu_given = p.nu1.is_some() || p.nu2.is_some();
    let prra_given = p.pr.is_some() || p.ra.is_some();
    match (nu_given, prra_given) {
        (true, true) => {
            return Err(Error::Config(
                "give either (nu1, nu2) or (pr, ra), not both".into(),
            ))
        }
        (true, false) => {
            let (Some(nu1), Some(nu2)) = (p.nu1, p.nu2) else {
                return Err(Error::Config("nu1 and nu2 must be given together".into()));
            };
            setup.nu1 = nu1;
            setup.nu2 = nu2;
        }
        (false, true) => {
            let (Some(pr), Some(ra)) = (p.pr, p.ra) else {
                return Err(Error::Config("pr and ra must be given together".into()));
            };
            if !(pr > 0.0 && ra > 0.0) {
                return Err(Error::Config("pr and ra must be positive".into()));
            }
            setup.nu1 = (pr / ra).sqrt();
            setup.nu2 = 1.0 / (ra * pr).sqrt();
        }
        (false, false) => {}
    }
    if let Some(alpha) = p.alpha {
        setup.alpha = alpha;
    }
    if let Some(objective) = p.objective {
        setup.objective = match objective {
            ObjectiveName::Tracking => Objective::Tracking {
                target: TargetField::Pinwheel { amplitude: 100.0 },
                weight: 1.0,
            },
            ObjectiveName::Vorticity => Objective::Vorticity,
        };
    }
    if let Some(projection) = p.projection {
        setup.variant = match projection {
            ProjectionName::NormalTrace => ProjectionVariant::NormalTrace,
            ProjectionName::FullDirichlet => ProjectionVariant::FullDirichlet,
        };
    }
    setup.validate()?;
    Ok(setup)
}

pub fn optimizer_options(cfg: &RunConfig) -> Result<LbfgsOptions> {
    let (_, _, _, memory_default) = preset_defaults(&cfg.problem)?;
    let opts = LbfgsOptions {
        memory: cfg.optimizer.memory.unwrap_or(memory_default),
        tol: cfg.optimizer.tol.unwrap_or(5e-3),
        max_iter: cfg.optimizer.max_iter.unwrap_or(200),
        h0: 1.0,
        rho_clamp: cfg.optimizer.rho_clamp,
    };
    if !(opts.tol > 0.0) {
        return Err(Error::Config("optimizer.tol must be positive".into()));
    }
    Ok(opts)
}

fn snapshot_stride(cfg: &RunConfig, steps: usize) -> usize {
    cfg.output.snapshot_stride.unwrap_or_else(|| (steps / 8).max(1))
}

fn write_series_csv(path: &Path, header: &str, series: &[(f64, f64)]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    use std::io::Write;
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "t,{header}")?;
    for (t, v) in series {
        writeln!(f, "{t:.12e},{v:.12e}")?;
    }
    Ok(())
}

fn write_objective_series(
    disc: &Discretization,
    traj: &crate::state::StateTrajectory,
    dir: &Path,
    prefix: &str,
) -> Result<()> {
    match disc.setup().objective {
        Objective::Tracking { .. } => write_series_csv(
            &dir.join(format!("{prefix}tracking_error.csv")),
            "rel_error",
            &tracking_error_series(disc, traj),
        ),
        Objective::Vorticity => write_series_csv(
            &dir.join(format!("{prefix}vorticity.csv")),
            "vorticity",
            &vorticity_series(disc, traj),
        ),
    }
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub j_initial: f64,
    pub j_final: f64,
    pub iterations: usize,
    pub grad_rel: f64,
}

/// Optimize and write all run artifacts: history, per-side control CSVs, the
/// objective time series of the optimized run, and state snapshots.
pub fn run(cfg: &RunConfig) -> Result<RunSummary> {
    let setup = build_setup(cfg)?;
    let opts = optimizer_options(cfg)?;
    let steps = setup.steps;
    let disc = Discretization::new(setup)?;
    let dir = cfg.output.dir.clone();
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join("config.toml"), to_toml(cfg))?;

    let (u, history) = lbfgs_solve(&disc, disc.control.zero(), &opts)?;
    write_history_csv(&history, &dir.join("history.csv"), cfg.output.log_timing)?;
    write_control_csv(&disc, &u, &dir, "control_")?;

    let traj = solve_state(&disc, &u)?;
    write_objective_series(&disc, &traj, &dir, "")?;
    write_snapshots(&disc, &traj, &dir.join("snapshots"), snapshot_stride(cfg, steps))?;

    let first = history.first().expect("history is never empty");
    let last = history.last().expect("history is never empty");
    Ok(RunSummary {
        output_dir: dir,
        j_initial: first.j,
        j_final: evaluate_objective(&disc, &traj, &u),
        iterations: last.k,
        grad_rel: last.grad_rel,
    })
}

/// Forward solve with v = 0; writes the same time series (and snapshots)
/// with a `baseline_` prefix for side-by-side comparison. Returns the
/// uncontrolled objective value.
pub fn uncontrolled_baseline(cfg: &RunConfig) -> Result<f64> {
    let setup = build_setup(cfg)?;
    let steps = setup.steps;
    let disc = Discretization::new(setup)?;
    let dir = cfg.output.dir.clone();
    std::fs::create_dir_all(&dir)?;
    let v = disc.control.zero();
    let traj = solve_state(&disc, &v)?;
    write_objective_series(&disc, &traj, &dir, "baseline_")?;
    write_snapshots(&disc, &traj, &dir.join("baseline_snapshots"), snapshot_stride(cfg, steps))?;
    Ok(evaluate_objective(&disc, &traj, &v))
}

/// Finite-difference verification of the adjoint gradient at v = 0; writes
/// the report in text and CSV form.
pub fn gradcheck(cfg: &RunConfig, n_dirs: usize) -> Result<FdCheckReport> {
    let setup = build_setup(cfg)?;
    let disc = Discretization::new(setup)?;
    let report = fd_gradient_check(&disc, &disc.control.zero(), n_dirs, cfg.run.seed)?;
    let dir = cfg.output.dir.clone();
    std::fs::create_dir_all(&dir)?;
    let mut text = Vec::new();
    report.write_text(&mut text)?;
    std::fs::write(dir.join("gradcheck.txt"), text)?;
    report.write_csv(&dir.join("gradcheck.csv"))?;
    Ok(report)
}

/// Write the chosen mesh in the plain-text `v/t/b` format.
pub fn mesh_dump(cfg: &RunConfig, out: &Path, coarse: bool) -> Result<()> {
    let setup = build_setup(cfg)?;
    let mesh: &Mesh = if coarse {
        &setup.mesh.coarse
    } else {
        &setup.mesh.fine
    };
    if let Some(parent) = out.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let f = std::io::BufWriter::new(std::fs::File::create(out)?);
    mesh.write_text(f)?;
    Ok(())
}
