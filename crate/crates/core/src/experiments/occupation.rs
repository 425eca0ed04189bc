use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::{ExperimentReport, MetricRow};
use crate::error::{Error, Result};
use crate::hydrostatics::{
    occupation_time_exact_theta0, occupation_time_samples, occupation_times, Triangle,
};
use crate::rng::stream_rng;
use crate::stats::{ks_two_sample, Moments};

pub const Z_LIMIT: f64 = 4.0;
pub const KS_LEVEL: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkConfig {
    #[serde(rename = "N")]
    pub n: usize,
    pub theta: f64,
    pub x: usize,
    pub y: usize,
    pub replicas: usize,
    /// Also run the layered coupling and compare the two laws.
    pub coupling: bool,
    pub seed: u64,
}

/// Diagonal occupation time of the absorbed walk from `(x, y)`: Monte Carlo
/// against the linear solve (and the closed form at θ = 0). Direct walks use
/// streams `(seed, r)`, coupled walks `(seed, R + r)`.
pub fn walk_experiment(config: &WalkConfig) -> Result<ExperimentReport> {
    if config.replicas < 2 {
        return Err(Error::invalid("replicas", "need at least 2"));
    }
    let triangle = Triangle::new(config.n, config.theta)?;
    let u = (config.x, config.y);
    if !(config.x >= 1 && config.x < config.y && config.y < config.n) {
        return Err(Error::invalid(
            "x/y",
            format!("({}, {}) must satisfy 1 <= x < y <= N-1", config.x, config.y),
        ));
    }
    let r = config.replicas;
    let direct = occupation_time_samples(u, &triangle, r, config.seed)?;
    let m: Moments = direct.iter().copied().collect();
    let exact = occupation_times(config.n, config.theta)?.get(config.x, config.y);

    let config_echo = serde_json::to_value(config).expect("config serializes");
    let mut report = ExperimentReport::new("walk", config_echo);
    report.seed = Some(config.seed);
    let row = |metric: &str, value: f64| MetricRow::new(metric, value).cell(config.n, config.theta);

    let z = (m.mean - exact).abs() / m.std_error();
    report.rows.push(
        row("occupation_mc", m.mean)
            .std_error(m.std_error())
            .streams(config.seed, 0, r),
    );
    report.rows.push(row("occupation_exact", exact));
    report
        .rows
        .push(row("occupation_z", z).streams(config.seed, 0, r).check(Z_LIMIT, z <= Z_LIMIT));
    if config.theta == 0.0 {
        report.rows.push(row(
            "occupation_closed_form",
            occupation_time_exact_theta0(config.x, config.y, config.n)?,
        ));
    }

    if config.coupling {
        let outcomes: Vec<Result<_>> = (0..r)
            .into_par_iter()
            .map(|i| triangle.coupling_walk(u, &mut stream_rng(config.seed, (r + i) as u64)))
            .collect();
        let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;
        let totals: Vec<f64> = outcomes.iter().map(|o| o.total_d_time()).collect();
        let total: Moments = totals.iter().copied().collect();
        let levels: Moments = outcomes.iter().map(|o| o.levels as f64).collect();
        let ks = ks_two_sample(&direct, &totals);
        let streams = |row: MetricRow| row.streams(config.seed, r as u64, r);
        report
            .rows
            .push(streams(row("coupling_total_mc", total.mean).std_error(total.std_error())));
        report
            .rows
            .push(streams(row("coupling_levels_mean", levels.mean).std_error(levels.std_error())));
        report.rows.push(row("coupling_levels_expected", triangle.boundary_conductance.recip()));
        report.rows.push(row("ks_statistic", ks.statistic));
        report
            .rows
            .push(row("ks_p_value", ks.p_value).check(KS_LEVEL, ks.passes(KS_LEVEL)));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta_zero_report_has_closed_form_and_passes() {
        let cfg = WalkConfig {
            n: 8,
            theta: 0.0,
            x: 3,
            y: 5,
            replicas: 4000,
            coupling: true,
            seed: 17,
        };
        let report = walk_experiment(&cfg).unwrap();
        let exact = report.find("occupation_exact", None, None).unwrap().value;
        let closed = report.find("occupation_closed_form", None, None).unwrap().value;
        assert!((exact - closed).abs() < 1e-10);
        assert_eq!(report.failures().count(), 0, "{:?}", report.rows);
    }

    #[test]
    fn rejects_points_off_the_interior() {
        let mut cfg = WalkConfig {
            n: 8,
            theta: 1.0,
            x: 0,
            y: 5,
            replicas: 10,
            coupling: false,
            seed: 1,
        };
        assert!(walk_experiment(&cfg).is_err());
        cfg.x = 5;
        assert!(walk_experiment(&cfg).is_err());
    }
}
