//! Command-line driver.
//!
//! Exit codes: 0 success, 2 configuration error, 3 solver failure,
//! 4 gradient check failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use boussinesq_control::cli::{
    self, GeometryName, ObjectiveName, PresetName, ProjectionName, RunConfig,
};
use boussinesq_control::Error;

#[derive(Parser)]
#[command(name = "bouscontrol", version, about = "Boundary heat-flux control of 2D thermally convective flow")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Optimize a preset or configured problem and write run artifacts.
    Run(CommonArgs),
    /// Forward solve with zero control, for side-by-side comparison.
    Baseline(CommonArgs),
    /// Verify the adjoint gradient against central finite differences.
    Gradcheck {
        #[command(flatten)]
        args: CommonArgs,
        /// Number of random directions.
        #[arg(long, default_value_t = 5)]
        dirs: usize,
        /// Per-direction relative-error threshold.
        #[arg(long, default_value_t = 1e-5)]
        fd_tol: f64,
    },
    /// Write the mesh in plain-text node/triangle/tag format.
    MeshDump {
        #[command(flatten)]
        args: CommonArgs,
        /// Dump the coarse (pressure) mesh instead of the fine one.
        #[arg(long)]
        coarse: bool,
        #[arg(long, default_value = "mesh.txt")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct CommonArgs {
    /// Preset: example1 | example2 | custom.
    preset: Option<String>,
    /// TOML configuration file; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Fine-mesh subdivisions per unit length.
    #[arg(long)]
    n: Option<usize>,
    /// Number of time steps.
    #[arg(long = "nt", alias = "steps")]
    steps: Option<usize>,
    #[arg(long)]
    t_final: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    nu1: Option<f64>,
    #[arg(long)]
    nu2: Option<f64>,
    #[arg(long)]
    pr: Option<f64>,
    #[arg(long)]
    ra: Option<f64>,
    /// tracking | vorticity.
    #[arg(long)]
    objective: Option<String>,
    /// normal_trace | full_dirichlet.
    #[arg(long)]
    projection: Option<String>,
    /// L-BFGS memory length.
    #[arg(long)]
    memory: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Steps between state snapshots (0 disables).
    #[arg(long)]
    snapshot_stride: Option<usize>,
    /// Record wall-clock times in history.csv (breaks byte reproducibility).
    #[arg(long)]
    timing: bool,
    #[arg(long)]
    seed: Option<u64>,
}

fn parse_name<T: serde::de::DeserializeOwned>(what: &str, s: &str) -> Result<T, Error> {
    toml::from_str::<T>(&format!("\"{s}\""))
        .map_err(|_| Error::Config(format!("unknown {what} '{s}'")))
}

fn resolve_config(args: &CommonArgs) -> Result<RunConfig, Error> {
    let mut cfg = match &args.config {
        Some(path) => cli::load_config(path)?,
        None => {
            let preset = args.preset.as_deref().unwrap_or("example1");
            RunConfig::preset(parse_name::<PresetName>("preset", preset)?)
        }
    };
    if args.config.is_some() {
        if let Some(preset) = &args.preset {
            cfg.problem.preset = parse_name::<PresetName>("preset", preset)?;
        }
    }
    if let Some(n) = args.n {
        cfg.problem.n = Some(n);
    }
    if let Some(steps) = args.steps {
        cfg.problem.steps = Some(steps);
    }
    if let Some(t) = args.t_final {
        cfg.problem.t_final = Some(t);
    }
    if let Some(alpha) = args.alpha {
        cfg.problem.alpha = Some(alpha);
    }
    if let Some(nu1) = args.nu1 {
        cfg.problem.nu1 = Some(nu1);
    }
    if let Some(nu2) = args.nu2 {
        cfg.problem.nu2 = Some(nu2);
    }
    if let Some(pr) = args.pr {
        cfg.problem.pr = Some(pr);
    }
    if let Some(ra) = args.ra {
        cfg.problem.ra = Some(ra);
    }
    if let Some(objective) = &args.objective {
        cfg.problem.objective = Some(parse_name::<ObjectiveName>("objective", objective)?);
    }
    if let Some(projection) = &args.projection {
        cfg.problem.projection = Some(parse_name::<ProjectionName>("projection", projection)?);
    }
    if args.preset.as_deref() == Some("custom") && cfg.problem.geometry.is_none() {
        cfg.problem.geometry = Some(GeometryName::UnitSquare);
    }
    if let Some(memory) = args.memory {
        cfg.optimizer.memory = Some(memory);
    }
    if let Some(tol) = args.tol {
        cfg.optimizer.tol = Some(tol);
    }
    if let Some(max_iter) = args.max_iter {
        cfg.optimizer.max_iter = Some(max_iter);
    }
    if let Some(out) = &args.out {
        cfg.output.dir = out.clone();
    }
    if let Some(stride) = args.snapshot_stride {
        cfg.output.snapshot_stride = Some(stride);
    }
    if args.timing {
        cfg.output.log_timing = true;
    }
    if let Some(seed) = args.seed {
        cfg.run.seed = seed;
    }
    Ok(cfg)
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Mesh(_) | Error::UnknownTag(_) | Error::OracleGuard(_) => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Run(args) => resolve_config(args).and_then(|cfg| {
            let summary = cli::run(&cfg)?;
            println!(
                "run finished: J {:.6e} -> {:.6e} in {} iterations (|g|/|g0| = {:.3e}); artifacts in {}",
                summary.j_initial,
                summary.j_final,
                summary.iterations,
                summary.grad_rel,
                summary.output_dir.display()
            );
            Ok(ExitCode::SUCCESS)
        }),
        Cmd::Baseline(args) => resolve_config(args).and_then(|cfg| {
            let j = cli::uncontrolled_baseline(&cfg)?;
            println!("baseline J = {j:.6e}; artifacts in {}", cfg.output.dir.display());
            Ok(ExitCode::SUCCESS)
        }),
        Cmd::Gradcheck { args, dirs, fd_tol } => resolve_config(args).and_then(|cfg| {
            let report = cli::gradcheck(&cfg, *dirs)?;
            let mut text = Vec::new();
            report.write_text(&mut text)?;
            print!("{}", String::from_utf8_lossy(&text));
            if report.all_pass(*fd_tol) {
                println!("gradcheck passed: worst relative error {:.3e}", report.worst());
                Ok(ExitCode::SUCCESS)
            } else {
                println!("gradcheck FAILED: worst relative error {:.3e}", report.worst());
                Ok(ExitCode::from(4))
            }
        }),
        Cmd::MeshDump { args, coarse, out } => resolve_config(args).and_then(|cfg| {
            cli::mesh_dump(&cfg, out, *coarse)?;
            println!("mesh written to {}", out.display());
            Ok(ExitCode::SUCCESS)
        }),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
