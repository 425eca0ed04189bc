use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::{ExperimentReport, MetricRow};
use crate::error::{Error, Result};
use crate::lattice::{Configuration, ModelParams};
use crate::martingale::{dynkin_martingale, quadratic_variation_bound, MartingaleSeries};
use crate::profile::{Profile, TestFunction};
use crate::rng::stream_rng;
use crate::stats::Moments;

pub const MEAN_Z_LIMIT: f64 = 4.0;
/// Allowed factor between the empirical variance and the bound or the mean
/// quadratic variation.
pub const VARIANCE_FACTOR: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartingaleConfig {
    #[serde(rename = "N")]
    pub n: usize,
    pub theta: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: Profile,
    pub test_function: TestFunction,
    pub t_final: f64,
    /// Number of equally spaced observation times in `(0, t_final]`.
    pub grid_points: usize,
    pub replicas: usize,
    pub seed: u64,
}

/// Ensemble statistics of `M_t(H)`: the mean against zero, the variance
/// against the quadratic-variation bound and against the mean compensator
/// of the quadratic variation. Replica `r` uses stream `(seed, r)`.
pub fn martingale_experiment(config: &MartingaleConfig) -> Result<ExperimentReport> {
    let params = ModelParams::new(config.n, config.alpha, config.beta, config.theta)?;
    if config.replicas < 2 {
        return Err(Error::invalid("replicas", "need at least 2"));
    }
    if config.grid_points == 0 || !(config.t_final > 0.0 && config.t_final.is_finite()) {
        return Err(Error::invalid(
            "t_final",
            "need a positive final time and at least one grid point",
        ));
    }
    let grid: Vec<f64> = (1..=config.grid_points)
        .map(|k| config.t_final * k as f64 / config.grid_points as f64)
        .collect();
    let h = config.test_function;
    let series: Vec<Result<MartingaleSeries>> = (0..config.replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(config.seed, r as u64);
            let mut start = Configuration::sample(&params, |u| config.gamma.value(u), &mut rng)?;
            dynkin_martingale(&params, &mut start, |u| h.value(u), h.id(), &grid, &mut rng)
        })
        .collect();
    let series = series.into_iter().collect::<Result<Vec<_>>>()?;

    let config_echo = serde_json::to_value(config).expect("config serializes");
    let mut report = ExperimentReport::new("martingale", config_echo);
    report.seed = Some(config.seed);
    let row = |metric: &str, t: f64, value: f64| {
        MetricRow::new(metric, value)
            .cell(config.n, config.theta)
            .at(t)
            .streams(config.seed, 0, config.replicas)
    };
    // Index 0 of every series is t = 0.
    for (k, &t) in grid.iter().enumerate() {
        let values: Moments = series.iter().map(|s| s.values[k + 1]).collect();
        let qv: Moments = series.iter().map(|s| s.quadratic_variation[k + 1]).collect();
        let var = values.variance();
        let bound = quadratic_variation_bound(&params, h.derivative_sup_norm(), h.sup_norm(), t);
        let z = values.mean.abs() / values.std_error();
        let ratio = var / qv.mean;
        report.rows.push(
            row("martingale_mean", t, values.mean)
                .std_error(values.std_error())
                .check(MEAN_Z_LIMIT, z <= MEAN_Z_LIMIT),
        );
        report.rows.push(row("martingale_variance", t, var));
        report.rows.push(row("quadratic_variation_mean", t, qv.mean).std_error(qv.std_error()));
        report.rows.push(row("quadratic_variation_bound", t, bound));
        report.rows.push(
            row("variance_over_bound", t, var / bound)
                .check(VARIANCE_FACTOR, var <= VARIANCE_FACTOR * bound),
        );
        report.rows.push(
            row("variance_over_quadratic_variation", t, ratio).check(
                VARIANCE_FACTOR,
                (1.0 / VARIANCE_FACTOR..=VARIANCE_FACTOR).contains(&ratio),
            ),
        );
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_ensemble_passes_its_checks() {
        let cfg = MartingaleConfig {
            n: 16,
            theta: 1.0,
            alpha: 0.2,
            beta: 0.8,
            gamma: Profile::Constant { value: 0.5 },
            test_function: TestFunction::SinPi,
            t_final: 0.1,
            grid_points: 2,
            replicas: 300,
            seed: 21,
        };
        let report = martingale_experiment(&cfg).unwrap();
        assert_eq!(report.rows.len(), 12);
        let failed: Vec<_> = report.failures().collect();
        assert!(failed.is_empty(), "{failed:?}");
    }

    #[test]
    fn needs_two_replicas() {
        let cfg = MartingaleConfig {
            n: 8,
            theta: 1.0,
            alpha: 0.2,
            beta: 0.8,
            gamma: Profile::Parabola,
            test_function: TestFunction::One,
            t_final: 0.1,
            grid_points: 1,
            replicas: 1,
            seed: 0,
        };
        assert!(martingale_experiment(&cfg).is_err());
    }
}
