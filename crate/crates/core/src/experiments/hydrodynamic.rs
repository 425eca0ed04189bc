use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::{ExperimentReport, MetricRow};
use super::{box_average, default_window, strictly_decreasing};
use crate::error::{Error, Result};
use crate::lattice::{empirical_pairing, run_until, Configuration, ModelParams};
use crate::pde::{solve_heat, BoundaryKind, HeatProblem};
use crate::profile::{Profile, TestFunction};
use crate::rng::stream_rng;
use crate::stats::Moments;

pub const MIN_REPLICAS: usize = 50;
pub const MASS_Z_LIMIT: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HydrodynamicConfig {
    #[serde(rename = "N")]
    pub ns: Vec<usize>,
    pub thetas: Vec<f64>,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: Profile,
    pub times: Vec<f64>,
    pub replicas: usize,
    /// Box window in sites; `None` means `⌈N/16⌉`.
    pub window: Option<usize>,
    /// PDE cells; `None` means `M = N` so grid nodes sit on lattice sites.
    #[serde(rename = "M")]
    pub pde_cells: Option<usize>,
    pub dt: Option<f64>,
    pub family: Vec<TestFunction>,
    pub seed: u64,
}

impl HydrodynamicConfig {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        ns: Vec<usize>,
        thetas: Vec<f64>,
        alpha: f64,
        beta: f64,
        gamma: Profile,
        times: Vec<f64>,
        replicas: usize,
        seed: u64,
    ) -> Self {
        HydrodynamicConfig {
            ns,
            thetas,
            alpha,
            beta,
            gamma,
            times,
            replicas,
            window: None,
            pde_cells: None,
            dt: None,
            family: TestFunction::DEFAULT_FAMILY.to_vec(),
            seed,
        }
    }

    fn validate(&self) -> Result<Vec<ModelParams>> {
        if self.ns.is_empty() || self.thetas.is_empty() {
            return Err(Error::invalid("grid", "N list and theta list must be non-empty"));
        }
        if self.times.is_empty()
            || self.times.iter().any(|t| !(*t > 0.0 && t.is_finite()))
            || self.times.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(Error::invalid(
                "t_list",
                "times must be positive, finite and strictly increasing",
            ));
        }
        if self.replicas < MIN_REPLICAS {
            return Err(Error::invalid(
                "replicas",
                format!("need at least {MIN_REPLICAS}, got {}", self.replicas),
            ));
        }
        if self.window == Some(0) {
            return Err(Error::invalid("window", "must be at least 1 site"));
        }
        for u in [0.0, 0.5, 1.0] {
            let g = self.gamma.value(u);
            if !(0.0..=1.0).contains(&g) {
                return Err(Error::invalid("gamma", format!("value {g} at u = {u} is outside [0,1]")));
            }
        }
        let mut cells = Vec::new();
        for &theta in &self.thetas {
            for &n in &self.ns {
                cells.push(ModelParams::new(n, self.alpha, self.beta, theta)?);
            }
        }
        Ok(cells)
    }
}

/// One trajectory sampled at the configured times.
struct Trajectory {
    /// `profiles[k][x-1] = η_{t_k}(x)`.
    profiles: Vec<Vec<f64>>,
    pairings: Vec<Vec<f64>>,
    mass_change: Vec<f64>,
    compensator: Vec<f64>,
}

fn run_replica(
    params: &ModelParams,
    gamma: &Profile,
    times: &[f64],
    family: &[TestFunction],
    seed: u64,
    stream: u64,
) -> Result<Trajectory> {
    let mut rng = stream_rng(seed, stream);
    let mut config = Configuration::sample(params, |u| gamma.value(u), &mut rng)?;
    let n2 = (params.n as f64).powi(2);
    let s = params.boundary_scale();
    let last = params.n - 1;
    let drift = |c: &Configuration| s * (params.alpha - c.eta(1) + params.beta - c.eta(last));

    let start_count = config.particle_count() as i64;
    let mut injected = 0i64;
    let mut compensator = 0.0;
    let mut out = Trajectory {
        profiles: Vec::with_capacity(times.len()),
        pairings: Vec::with_capacity(times.len()),
        mass_change: Vec::with_capacity(times.len()),
        compensator: Vec::with_capacity(times.len()),
    };
    for &t in times {
        let target = t * n2;
        let mut since = config.micro_time;
        let log = run_until(&mut config, params, target, &mut rng, |c, _, at| {
            compensator += drift(c) * (at - since);
            since = at;
        });
        compensator += drift(&config) * (target - since);
        injected += log.net_injection();
        debug_assert_eq!(injected, config.particle_count() as i64 - start_count);

        out.profiles.push((1..params.n).map(|x| config.eta(x)).collect());
        out.pairings
            .push(family.iter().map(|h| empirical_pairing(&config, |u| h.value(u))).collect());
        out.mass_change.push(injected as f64);
        out.compensator.push(compensator);
    }
    Ok(out)
}

/// Replica-averaged lattice densities against the heat equation whose
/// boundary condition matches θ. Cell `c` (θ-major, then N) uses streams
/// `(seed, c·R + r)` for replicas `r < R`.
pub fn hydrodynamic_experiment(config: &HydrodynamicConfig) -> Result<ExperimentReport> {
    let cells = config.validate()?;
    let r = config.replicas;
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..r).map(move |i| (c, i)))
        .collect();
    let trajectories: Vec<Result<Trajectory>> = jobs
        .par_iter()
        .map(|&(c, i)| {
            run_replica(
                &cells[c],
                &config.gamma,
                &config.times,
                &config.family,
                config.seed,
                (c * r + i) as u64,
            )
        })
        .collect();
    let trajectories = trajectories.into_iter().collect::<Result<Vec<_>>>()?;

    let pde: Vec<Result<Vec<Vec<f64>>>> = cells
        .par_iter()
        .map(|p| pde_profiles(config, p))
        .collect();

    let config_echo = serde_json::to_value(config).expect("config serializes");
    let mut report = ExperimentReport::new("hydrodynamic", config_echo);
    report.seed = Some(config.seed);

    // l1[θ index][t index][N index]
    let mut l1 = vec![vec![vec![0.0; config.ns.len()]; config.times.len()]; config.thetas.len()];
    for (c, (params, pde)) in cells.iter().zip(pde).enumerate() {
        let pde = pde?;
        let reps = &trajectories[c * r..(c + 1) * r];
        let rows = cell_rows(config, params, reps, &pde, (c * r) as u64);
        for row in rows.iter().filter(|row| row.metric == "l1_annealed") {
            let ti = config.times.iter().position(|&t| Some(t) == row.t).unwrap();
            l1[c / config.ns.len()][ti][c % config.ns.len()] = row.value;
        }
        report.rows.extend(rows);
    }

    if config.ns.len() > 1 {
        let mut order: Vec<usize> = (0..config.ns.len()).collect();
        order.sort_by_key(|&i| config.ns[i]);
        for (ti, &theta) in config.thetas.iter().enumerate() {
            for (k, &t) in config.times.iter().enumerate() {
                let series: Vec<f64> = order.iter().map(|&i| l1[ti][k][i]).collect();
                let ok = strictly_decreasing(&series);
                let mut row =
                    MetricRow::new("l1_strictly_decreasing", if ok { 1.0 } else { 0.0 }).at(t).flag(ok);
                row.theta = Some(theta);
                report.rows.push(row);
            }
        }
    }
    Ok(report)
}

/// PDE densities at lattice sites, one vector per requested time.
fn pde_profiles(config: &HydrodynamicConfig, params: &ModelParams) -> Result<Vec<Vec<f64>>> {
    let bc = BoundaryKind::for_theta(params.theta);
    let m = config.pde_cells.unwrap_or(params.n).max(8);
    let n = params.n as f64;
    config
        .times
        .iter()
        .map(|&t| {
            let mut problem = HeatProblem::new(bc, config.alpha, config.beta, m, t);
            problem.dt = config.dt;
            problem.snapshot_every = usize::MAX;
            let field = solve_heat(&problem, |u| config.gamma.value(u))?;
            let k = field.times.len() - 1;
            Ok((1..params.n).map(|x| field.interpolate(k, x as f64 / n)).collect())
        })
        .collect()
}

fn cell_rows(
    config: &HydrodynamicConfig,
    params: &ModelParams,
    reps: &[Trajectory],
    pde: &[Vec<f64>],
    stream_offset: u64,
) -> Vec<MetricRow> {
    let (n, theta) = (params.n, params.theta);
    let nf = n as f64;
    let r = reps.len();
    let w = config.window.unwrap_or_else(|| default_window(n));
    let bc = BoundaryKind::for_theta(theta);
    let row = |metric: String, t: f64, value: f64| {
        MetricRow::new(metric, value)
            .cell(n, theta)
            .at(t)
            .streams(config.seed, stream_offset, r)
    };
    let mut rows = Vec::new();
    for (k, &t) in config.times.iter().enumerate() {
        let target = box_average(&pde[k], w);
        let sites = target.len();

        // Per-site replica statistics of the boxed empirical profile.
        let mut site_moments = vec![Moments::default(); sites];
        let mut quenched = Moments::default();
        for rep in reps {
            let boxed = box_average(&rep.profiles[k], w);
            let mut dist = 0.0;
            for (x, (b, p)) in boxed.iter().zip(&target).enumerate() {
                site_moments[x].push(*b);
                dist += (b - p).abs();
            }
            quenched.push(dist / nf);
        }
        let annealed = site_moments
            .iter()
            .zip(&target)
            .map(|(m, p)| (m.mean - p).abs())
            .sum::<f64>()
            / nf;
        // Expected L¹ of pure Gaussian noise with the measured site errors.
        let noise = (2.0 / std::f64::consts::PI).sqrt()
            * site_moments.iter().map(|m| m.std_error()).sum::<f64>()
            / nf;
        rows.push(row("l1_annealed".into(), t, annealed));
        rows.push(row("l1_noise_floor".into(), t, noise));
        rows.push(row("l1_quenched".into(), t, quenched.mean).std_error(quenched.std_error()));

        for (j, h) in config.family.iter().enumerate() {
            if bc == BoundaryKind::Dirichlet && !h.vanishes_at_boundary() {
                continue;
            }
            let exact = (1..n)
                .map(|x| h.value(x as f64 / nf) * pde[k][x - 1])
                .sum::<f64>()
                / nf;
            let gap: Moments = reps.iter().map(|rep| rep.pairings[k][j] - exact).collect();
            rows.push(row(format!("pairing_gap_{}", h.id()), t, gap.mean).std_error(gap.std_error()));
        }

        let change: Moments = reps.iter().map(|rep| rep.mass_change[k]).collect();
        let comp: Moments = reps.iter().map(|rep| rep.compensator[k]).collect();
        let diff: Moments = reps
            .iter()
            .map(|rep| rep.mass_change[k] - rep.compensator[k])
            .collect();
        let z = if diff.mean == 0.0 { 0.0 } else { diff.mean.abs() / diff.std_error() };
        rows.push(row("mass_change".into(), t, change.mean).std_error(change.std_error()));
        rows.push(row("mass_compensator".into(), t, comp.mean).std_error(comp.std_error()));
        rows.push(
            row("mass_martingale_mean".into(), t, diff.mean)
                .std_error(diff.std_error())
                .check(MASS_Z_LIMIT, z <= MASS_Z_LIMIT),
        );
    }
    rows
}
