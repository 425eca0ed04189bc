use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::{ExperimentReport, MetricRow};
use super::{association_deviations, coarse_grain_boundary, exceedance, strictly_decreasing};
use crate::error::{Error, Result};
use crate::hydrostatics::{
    covariance_solve, mean_profile_closed_form, stationary_mc_estimate, stationary_profile,
    StationaryRun,
};
use crate::lattice::{Configuration, ModelParams};
use crate::profile::TestFunction;
use crate::rng::stream_rng;

pub const Z_LIMIT: f64 = 4.0;
pub const Z_FRACTION: f64 = 0.95;
pub const ASSOCIATION_LIMIT: f64 = 0.05;
pub const MIN_EFFECTIVE_SAMPLES: f64 = 100.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HydrostaticConfig {
    #[serde(rename = "N")]
    pub ns: Vec<usize>,
    pub thetas: Vec<f64>,
    pub alpha: f64,
    pub beta: f64,
    pub run: StationaryRun,
    pub delta: f64,
    /// Boundary window fraction for the coarse-grained reservoir densities.
    pub eps: f64,
    pub family: Vec<TestFunction>,
    pub seed: u64,
}

impl HydrostaticConfig {
    pub fn new(ns: Vec<usize>, thetas: Vec<f64>, alpha: f64, beta: f64, seed: u64) -> Self {
        HydrostaticConfig {
            ns,
            thetas,
            alpha,
            beta,
            run: StationaryRun::default(),
            delta: 0.05,
            eps: 0.1,
            family: TestFunction::DEFAULT_FAMILY.to_vec(),
            seed,
        }
    }

    fn cells(&self) -> Result<Vec<ModelParams>> {
        if self.ns.is_empty() || self.thetas.is_empty() {
            return Err(Error::invalid("grid", "N list and theta list must be non-empty"));
        }
        if !(self.delta > 0.0) {
            return Err(Error::invalid("delta", format!("must be positive, got {}", self.delta)));
        }
        if !(self.eps > 0.0 && self.eps <= 1.0) {
            return Err(Error::invalid("eps", format!("must lie in (0,1], got {}", self.eps)));
        }
        if self.family.is_empty() {
            return Err(Error::invalid("family", "test-function family is empty"));
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

struct CellOutcome {
    rows: Vec<MetricRow>,
    warnings: Vec<String>,
    profile_gap: f64,
}

/// Stationary Monte Carlo against the exact one- and two-point oracles and
/// the limiting profile. Cell `c` (θ-major, then N) uses stream `(seed, c)`
/// and starts from product Bernoulli of the exact mean profile.
pub fn hydrostatic_experiment(config: &HydrostaticConfig) -> Result<ExperimentReport> {
    let cells = config.cells()?;
    let outcomes: Vec<Result<CellOutcome>> = cells
        .par_iter()
        .enumerate()
        .map(|(c, params)| run_cell(config, params, c as u64))
        .collect();

    let config_echo = serde_json::to_value(config).expect("config serializes");
    let mut report = ExperimentReport::new("hydrostatic", config_echo);
    report.seed = Some(config.seed);
    let mut gaps = Vec::with_capacity(outcomes.len());
    for outcome in outcomes {
        let outcome = outcome?;
        report.rows.extend(outcome.rows);
        report.warnings.extend(outcome.warnings);
        gaps.push(outcome.profile_gap);
    }

    // The exact profile gap is deterministic, so its trend needs no seed.
    if config.ns.len() > 1 {
        let mut order: Vec<usize> = (0..config.ns.len()).collect();
        order.sort_by_key(|&i| config.ns[i]);
        for (ti, &theta) in config.thetas.iter().enumerate() {
            let series: Vec<f64> = order.iter().map(|&i| gaps[ti * config.ns.len() + i]).collect();
            let ok = strictly_decreasing(&series);
            let mut row = MetricRow::new("profile_linf_strictly_decreasing", if ok { 1.0 } else { 0.0 })
                .flag(ok);
            row.theta = Some(theta);
            report.rows.push(row);
        }
    }
    Ok(report)
}

fn run_cell(config: &HydrostaticConfig, params: &ModelParams, stream: u64) -> Result<CellOutcome> {
    let (n, theta) = (params.n, params.theta);
    let mut rng = stream_rng(config.seed, stream);
    let exact = mean_profile_closed_form(params);
    let initial =
        Configuration::sample(params, |u| exact.at((u * n as f64).round() as usize), &mut rng)?;
    let pair = ((n / 3).max(1), (2 * n / 3).max(2).min(n - 1));
    let pairs = if pair.0 < pair.1 { vec![pair] } else { Vec::new() };
    let est = stationary_mc_estimate(params, initial, &config.run, &pairs, &mut rng)?;

    let row = |metric: &str, value: f64| {
        MetricRow::new(metric, value)
            .cell(n, theta)
            .streams(config.seed, stream, 1)
    };
    let mut rows = Vec::new();

    let mut linf: f64 = 0.0;
    let mut z_max: f64 = 0.0;
    let mut within = 0usize;
    for x in 1..n {
        let diff = est.means[x - 1] - exact.at(x);
        linf = linf.max(diff.abs());
        let se = est.mean_std_errors[x - 1];
        let z = if diff == 0.0 { 0.0 } else { diff.abs() / se };
        z_max = z_max.max(z);
        if z <= Z_LIMIT {
            within += 1;
        }
    }
    let fraction = within as f64 / params.sites() as f64;
    rows.push(row("mean_linf", linf));
    rows.push(row("mean_z_max", z_max));
    rows.push(row("mean_z_fraction_within_4", fraction).check(Z_FRACTION, fraction >= Z_FRACTION));

    let limit = stationary_profile(theta, config.alpha, config.beta);
    let profile_gap = (1..n)
        .map(|x| (exact.at(x) - limit.value(x as f64 / n as f64)).abs())
        .fold(0.0, f64::max);
    rows.push(row("profile_linf_exact", profile_gap));

    let deviations = association_deviations(&est.samples, |u| limit.value(u), &config.family);
    let assoc = exceedance(&deviations, config.delta);
    rows.push(row("association", assoc).check(ASSOCIATION_LIMIT, assoc <= ASSOCIATION_LIMIT));
    let mean_dev = deviations.iter().sum::<f64>() / deviations.len() as f64;
    rows.push(row("association_mean_deviation", mean_dev));

    if let Some(pc) = est.covariances.first() {
        let oracle = covariance_solve(params)?.get(pc.x, pc.y);
        let z = if pc.value == oracle { 0.0 } else { (pc.value - oracle).abs() / pc.std_error };
        rows.push(row("covariance_mc", pc.value).std_error(pc.std_error));
        rows.push(row("covariance_exact", oracle));
        rows.push(row("covariance_z", z).check(Z_LIMIT, z <= Z_LIMIT));
    }

    // Coarse-grained reservoir densities against the exact window averages.
    let mut warnings: Vec<String> = Vec::new();
    let k = ((config.eps * n as f64).floor() as usize).min(n - 1);
    if k == 0 {
        warnings.push(format!(
            "N={n} theta={theta}: eps = {} leaves no boundary window; skipped",
            config.eps
        ));
    } else {
        let exact_left = (1..=k).map(|x| exact.at(x)).sum::<f64>() / k as f64;
        let exact_right = (n - k..n).map(|x| exact.at(x)).sum::<f64>() / k as f64;
        let (mut left, mut right) = (0.0, 0.0);
        for c in &est.samples {
            let (l, r) = coarse_grain_boundary(c, config.eps)?;
            left += l;
            right += r;
        }
        let count = est.samples.len() as f64;
        rows.push(row("boundary_density_left", left / count));
        rows.push(row("boundary_density_left_exact", exact_left));
        rows.push(row("boundary_density_right", right / count));
        rows.push(row("boundary_density_right_exact", exact_right));
    }

    let ess = est.effective_sample_size;
    rows.push(row("effective_sample_size", ess).check(MIN_EFFECTIVE_SAMPLES, ess >= MIN_EFFECTIVE_SAMPLES));
    warnings.extend(
        est.warnings
            .into_iter()
            .map(|w| format!("N={n} theta={theta}: {w}")),
    );
    Ok(CellOutcome {
        rows,
        warnings,
        profile_gap,
    })
}
