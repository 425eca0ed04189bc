//! `slowb`: experiments and oracles for the exclusion process with slow
//! boundary.
//!
//! Exit status: 0 on success, 1 when the arguments are invalid, 2 when a
//! run fails.

mod config_file;

use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use slowb_core::experiments::{
    emit_report, hydrodynamic_experiment, hydrostatic_experiment, martingale_experiment,
    walk_experiment, with_jobs, ExperimentReport, HydrodynamicConfig, HydrostaticConfig,
    MartingaleConfig, ReportFormat, WalkConfig,
};
use slowb_core::hydrostatics::{covariance_solve, mean_profile_closed_form, StationaryRun};
use slowb_core::pde::{solve_heat, BoundaryKind, HeatProblem};
use slowb_core::{Error, ModelParams, Profile, TestFunction};

#[derive(Parser, Debug)]
#[command(
    name = "slowb",
    version,
    about = "Simulation and verification toolkit for the exclusion process with slow boundary",
    after_help = "Every command also accepts --config FILE with one `key = value` per line; \
                  flags on the command line take precedence."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Stationary Monte Carlo against the exact mean, covariance and limit profile.
    #[command(args_override_self = true)]
    Hydrostatic(HydrostaticArgs),
    /// Replica-averaged densities in diffusive time against the heat equation.
    #[command(args_override_self = true)]
    Hydrodynamic(HydrodynamicArgs),
    /// Exact stationary two-point correlations on the triangle.
    #[command(args_override_self = true)]
    Covariance(CovarianceArgs),
    /// Heat equation with the boundary condition of a regime.
    #[command(args_override_self = true)]
    Pde(PdeArgs),
    /// Occupation time of the absorbed walk on the triangle.
    #[command(args_override_self = true)]
    Walk(WalkArgs),
    /// Ensemble statistics of the Dynkin martingale.
    #[command(args_override_self = true)]
    Martingale(MartingaleArgs),
}

#[derive(Args, Debug)]
struct Reservoirs {
    /// Left reservoir density, in (0,1).
    #[arg(long, default_value_t = 0.2)]
    alpha: f64,
    /// Right reservoir density, in (0,1).
    #[arg(long, default_value_t = 0.8)]
    beta: f64,
}

#[derive(Args, Debug)]
struct Seeding {
    /// Master seed; required unless --seed-from-entropy is given.
    #[arg(long, conflicts_with = "seed_from_entropy")]
    seed: Option<u64>,
    /// Draw a fresh seed (it is recorded in the report).
    #[arg(long)]
    seed_from_entropy: bool,
    /// Worker threads [default: all cores].
    #[arg(long, env = "SLOWB_JOBS")]
    jobs: Option<usize>,
}

#[derive(Args, Debug)]
struct ReportOut {
    /// Report path.
    #[arg(long)]
    out: PathBuf,
    /// Report format [default: json for a .json path, csv otherwise].
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Flat `key = value` file read before the command line.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct HydrostaticArgs {
    /// Lattice sizes.
    #[arg(long = "N", action = ArgAction::Set, value_delimiter = ',', num_args = 1.., default_values_t = [50])]
    n: Vec<usize>,
    /// Boundary exponents.
    #[arg(long, action = ArgAction::Set, value_delimiter = ',', num_args = 1.., default_values_t = [1.0])]
    theta: Vec<f64>,
    #[command(flatten)]
    reservoirs: Reservoirs,
    /// Burn-in, macroscopic time units.
    #[arg(long, default_value_t = 200.0)]
    burn_in: f64,
    /// Recorded configurations per cell.
    #[arg(long, default_value_t = 500)]
    samples: usize,
    /// Macroscopic time between recorded configurations.
    #[arg(long, default_value_t = 1.0)]
    spacing: f64,
    /// Batch length for batch-means errors, macroscopic time units.
    #[arg(long, default_value_t = 50.0)]
    batch_length: f64,
    /// Association threshold.
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    /// Boundary window fraction for coarse-grained reservoir densities.
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    #[command(flatten)]
    seeding: Seeding,
    #[command(flatten)]
    out: ReportOut,
}

#[derive(Args, Debug)]
struct HydrodynamicArgs {
    /// Lattice sizes.
    #[arg(long = "N", action = ArgAction::Set, value_delimiter = ',', num_args = 1.., default_values_t = [64, 128, 256])]
    n: Vec<usize>,
    /// Boundary exponents; θ<1 Dirichlet, θ=1 Robin, θ>1 Neumann.
    #[arg(long, action = ArgAction::Set, value_delimiter = ',', num_args = 1.., default_values_t = [1.0])]
    theta: Vec<f64>,
    #[command(flatten)]
    reservoirs: Reservoirs,
    /// Initial profile: const:<c>, linear:<slope>:<intercept>, sin or parabola.
    #[arg(long, default_value = "const:0.5")]
    gamma: Profile,
    /// Final macroscopic time.
    #[arg(long, default_value_t = 0.1)]
    t_final: f64,
    /// Observation times [default: t-final only].
    #[arg(long, action = ArgAction::Set, value_delimiter = ',', num_args = 1..)]
    times: Option<Vec<f64>>,
    /// Independent trajectories per cell (at least 50).
    #[arg(long, default_value_t = 100)]
    replicas: usize,
    /// Box-average window in sites [default: ceil(N/16)].
    #[arg(long)]
    window: Option<usize>,
    /// PDE cells [default: N].
    #[arg(long = "M")]
    m: Option<usize>,
    /// PDE time step [default: h²/2].
    #[arg(long)]
    dt: Option<f64>,
    #[command(flatten)]
    seeding: Seeding,
    #[command(flatten)]
    out: ReportOut,
}

#[derive(Args, Debug)]
struct CovarianceArgs {
    #[arg(long = "N", default_value_t = 20)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    theta: f64,
    #[command(flatten)]
    reservoirs: Reservoirs,
    /// Field CSV (x,y,value).
    #[arg(long)]
    out: PathBuf,
    /// Also write the exact mean profile (x,value).
    #[arg(long)]
    mean_out: Option<PathBuf>,
    /// Flat `key = value` file read before the command line.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PdeArgs {
    /// dirichlet, robin or neumann [default: chosen from --theta].
    #[arg(long)]
    bc: Option<BoundaryKind>,
    /// Regime used when --bc is absent.
    #[arg(long, default_value_t = 1.0)]
    theta: f64,
    /// Left boundary density, in [0,1].
    #[arg(long, default_value_t = 0.2)]
    alpha: f64,
    /// Right boundary density, in [0,1].
    #[arg(long, default_value_t = 0.8)]
    beta: f64,
    /// Initial profile: const:<c>, linear:<slope>:<intercept>, sin or parabola.
    #[arg(long, default_value = "const:0.5")]
    gamma: Profile,
    /// Grid cells.
    #[arg(long = "M", default_value_t = 128)]
    m: usize,
    /// Time step [default: h²/2].
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long, default_value_t = 0.1)]
    t_final: f64,
    /// Steps between stored snapshots (the last step is always stored).
    #[arg(long, default_value_t = 10)]
    snapshot_every: usize,
    /// Grid CSV (metadata line, then t,u,value).
    #[arg(long)]
    out: PathBuf,
    /// Flat `key = value` file read before the command line.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct WalkArgs {
    #[arg(long = "N", default_value_t = 20)]
    n: usize,
    #[arg(long, default_value_t = 0.0)]
    theta: f64,
    /// Start point, 1 <= x < y <= N-1.
    #[arg(long, default_value_t = 5)]
    x: usize,
    #[arg(long, default_value_t = 10)]
    y: usize,
    #[arg(long, default_value_t = 10_000)]
    replicas: usize,
    /// Also run the layered coupling and KS-compare the two laws.
    #[arg(long)]
    coupling: bool,
    #[command(flatten)]
    seeding: Seeding,
    #[command(flatten)]
    out: ReportOut,
}

#[derive(Args, Debug)]
struct MartingaleArgs {
    #[arg(long = "N", default_value_t = 64)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    theta: f64,
    #[command(flatten)]
    reservoirs: Reservoirs,
    /// Initial profile: const:<c>, linear:<slope>:<intercept>, sin or parabola.
    #[arg(long, default_value = "const:0.5")]
    gamma: Profile,
    /// one, u, u2, sin_pi_u or cos_pi_u.
    #[arg(long, default_value = "sin_pi_u")]
    test_function: TestFunction,
    #[arg(long, default_value_t = 0.1)]
    t_final: f64,
    /// Equally spaced observation times in (0, t-final].
    #[arg(long, default_value_t = 10)]
    grid_points: usize,
    #[arg(long, default_value_t = 1000)]
    replicas: usize,
    #[command(flatten)]
    seeding: Seeding,
    #[command(flatten)]
    out: ReportOut,
}

/// Invalid input (exit 1) or failed run (exit 2).
#[derive(Debug)]
enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter { .. } => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Runtime(m) => f.write_str(m),
        }
    }
}

fn main() -> ExitCode {
    ExitCode::from(parse_and_dispatch(std::env::args_os().collect()))
}

fn parse_and_dispatch(argv: Vec<OsString>) -> u8 {
    let argv = match config_file::expand(argv) {
        Ok(a) => a,
        Err(msg) => {
            eprintln!("error: {msg}");
            return 1;
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.exit_code() == 0 { 0 } else { 1 };
        }
    };
    match dispatch(cli.command) {
        Ok(summary) => {
            println!("{summary}");
            0
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            1
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            2
        }
    }
}

fn dispatch(command: Command) -> Result<String, Failure> {
    match command {
        Command::Hydrostatic(a) => {
            let seed = resolve_seed(&a.seeding)?;
            let target = report_target(&a.out)?;
            let mut config = HydrostaticConfig::new(
                a.n,
                a.theta,
                a.reservoirs.alpha,
                a.reservoirs.beta,
                seed,
            );
            config.run = StationaryRun {
                burn_in: a.burn_in,
                samples: a.samples,
                spacing: a.spacing,
                batch_length: a.batch_length,
            };
            config.delta = a.delta;
            config.eps = a.eps;
            let report = with_jobs(a.seeding.jobs, || hydrostatic_experiment(&config))??;
            finish(report, target)
        }
        Command::Hydrodynamic(a) => {
            let seed = resolve_seed(&a.seeding)?;
            let target = report_target(&a.out)?;
            let times = a.times.unwrap_or_else(|| vec![a.t_final]);
            if times.iter().any(|&t| t > a.t_final) {
                return Err(Failure::Usage(format!(
                    "observation times must not exceed --t-final {}",
                    a.t_final
                )));
            }
            let mut config = HydrodynamicConfig::new(
                a.n,
                a.theta,
                a.reservoirs.alpha,
                a.reservoirs.beta,
                a.gamma,
                times,
                a.replicas,
                seed,
            );
            config.window = a.window;
            config.pde_cells = a.m;
            config.dt = a.dt;
            let report = with_jobs(a.seeding.jobs, || hydrodynamic_experiment(&config))??;
            finish(report, target)
        }
        Command::Covariance(a) => {
            let params = ModelParams::new(a.n, a.reservoirs.alpha, a.reservoirs.beta, a.theta)?;
            check_writable(&a.out)?;
            if let Some(p) = &a.mean_out {
                check_writable(p)?;
            }
            let field = covariance_solve(&params)?;
            field.phi.write_csv(&a.out)?;
            if let Some(p) = &a.mean_out {
                mean_profile_closed_form(&params).write_csv(p)?;
            }
            Ok(format!(
                "covariance: N={} theta={} a_N={:.6e} max|phi|={:.6e} -> {}",
                a.n,
                a.theta,
                field.a_n,
                field.phi.max_abs(),
                a.out.display()
            ))
        }
        Command::Pde(a) => {
            for (name, v) in [("alpha", a.alpha), ("beta", a.beta)] {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Failure::Usage(format!("--{name} must lie in [0,1], got {v}")));
                }
            }
            check_writable(&a.out)?;
            let bc = a.bc.unwrap_or_else(|| BoundaryKind::for_theta(a.theta));
            let mut problem = HeatProblem::new(bc, a.alpha, a.beta, a.m, a.t_final);
            problem.dt = a.dt;
            problem.snapshot_every = a.snapshot_every;
            let gamma = a.gamma;
            let field = solve_heat(&problem, |u| gamma.value(u))?;
            field.write_csv(&a.out)?;
            Ok(format!(
                "pde: {bc} M={} dt={:.3e} snapshots={} final mass={:.6} -> {}",
                a.m,
                field.dt,
                field.times.len(),
                field.mass(field.times.len() - 1),
                a.out.display()
            ))
        }
        Command::Walk(a) => {
            let seed = resolve_seed(&a.seeding)?;
            let target = report_target(&a.out)?;
            let config = WalkConfig {
                n: a.n,
                theta: a.theta,
                x: a.x,
                y: a.y,
                replicas: a.replicas,
                coupling: a.coupling,
                seed,
            };
            let report = with_jobs(a.seeding.jobs, || walk_experiment(&config))??;
            finish(report, target)
        }
        Command::Martingale(a) => {
            let seed = resolve_seed(&a.seeding)?;
            let target = report_target(&a.out)?;
            let config = MartingaleConfig {
                n: a.n,
                theta: a.theta,
                alpha: a.reservoirs.alpha,
                beta: a.reservoirs.beta,
                gamma: a.gamma,
                test_function: a.test_function,
                t_final: a.t_final,
                grid_points: a.grid_points,
                replicas: a.replicas,
                seed,
            };
            let report = with_jobs(a.seeding.jobs, || martingale_experiment(&config))??;
            finish(report, target)
        }
    }
}

fn resolve_seed(s: &Seeding) -> Result<u64, Failure> {
    match (s.seed, s.seed_from_entropy) {
        (Some(seed), _) => Ok(seed),
        (None, true) => Ok(rand::random()),
        (None, false) => Err(Failure::Usage(
            "Monte Carlo commands need --seed <u64> (or --seed-from-entropy)".into(),
        )),
    }
}

fn check_writable(path: &Path) -> Result<(), Failure> {
    if path.is_dir() {
        return Err(Failure::Usage(format!("output path {} is a directory", path.display())));
    }
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    if !parent.is_dir() {
        return Err(Failure::Usage(format!(
            "cannot write {}: directory {} does not exist",
            path.display(),
            parent.display()
        )));
    }
    Ok(())
}

fn report_target(out: &ReportOut) -> Result<(PathBuf, ReportFormat), Failure> {
    check_writable(&out.out)?;
    let format = match out.format {
        Some(Format::Csv) => ReportFormat::Csv,
        Some(Format::Json) => ReportFormat::Json,
        None if out.out.extension().is_some_and(|e| e == "json") => ReportFormat::Json,
        None => ReportFormat::Csv,
    };
    Ok((out.out.clone(), format))
}

fn finish(report: ExperimentReport, (path, format): (PathBuf, ReportFormat)) -> Result<String, Failure> {
    emit_report(&report, format, &path)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    let checks = report.rows.iter().filter(|r| r.pass.is_some()).count();
    let failed = report.failures().count();
    Ok(format!(
        "{}: {} rows, {}/{} checks passed, seed {} -> {}",
        report.experiment_id,
        report.rows.len(),
        checks - failed,
        checks,
        report.seed.map_or("-".to_string(), |s| s.to_string()),
        path.display()
    ))
}
