//! Ergodic-average sampler of the stationary measure.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{simulate_until, Configuration, ModelParams};
use crate::stats::batch_means;

/// Run-length settings, in macroscopic time units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationaryRun {
    pub burn_in: f64,
    pub samples: usize,
    pub spacing: f64,
    /// Batch length for the batch-means error estimate. The default of 50
    /// macroscopic units is `50·N²` microscopic time.
    pub batch_length: f64,
}

impl Default for StationaryRun {
    fn default() -> Self {
        StationaryRun {
            burn_in: 200.0,
            samples: 500,
            spacing: 1.0,
            batch_length: 50.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCovariance {
    pub x: usize,
    pub y: usize,
    pub value: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryEstimate {
    /// `means[x-1]` estimates `E[η(x)]`.
    pub means: Vec<f64>,
    pub mean_std_errors: Vec<f64>,
    pub covariances: Vec<PairCovariance>,
    /// Smallest per-site effective sample size.
    pub effective_sample_size: f64,
    pub warnings: Vec<String>,
    /// The sampled configurations, in time order.
    pub samples: Vec<Configuration>,
}

/// Runs one chain from `initial` for `run.burn_in`, then records
/// `run.samples` configurations `run.spacing` apart. Means and the requested
/// pair covariances come with batch-means standard errors.
pub fn stationary_mc_estimate<R: Rng + ?Sized>(
    params: &ModelParams,
    initial: Configuration,
    run: &StationaryRun,
    pairs: &[(usize, usize)],
    rng: &mut R,
) -> Result<StationaryEstimate> {
    params.validate()?;
    if !(run.burn_in > 0.0) || !(run.spacing > 0.0) {
        return Err(Error::invalid(
            "burn_in/spacing",
            "burn-in and sample spacing must be positive",
        ));
    }
    if run.samples < 2 {
        return Err(Error::invalid("samples", "need at least two samples"));
    }
    for &(x, y) in pairs {
        if !(1 <= x && x < y && y < params.n) {
            return Err(Error::invalid(
                "pairs",
                format!("({x},{y}) must satisfy 1 <= x < y <= N-1"),
            ));
        }
    }
    let mut config = initial;
    simulate_until(&mut config, params, run.burn_in, rng);
    let mut samples = Vec::with_capacity(run.samples);
    for _ in 0..run.samples {
        simulate_until(&mut config, params, run.spacing, rng);
        samples.push(config.clone());
    }

    let batch = ((run.batch_length / run.spacing).round() as usize).clamp(1, run.samples / 2);
    let site_series = |x: usize| -> Vec<f64> { samples.iter().map(|c| c.eta(x)).collect() };

    let mut means = Vec::with_capacity(params.sites());
    let mut mean_std_errors = Vec::with_capacity(params.sites());
    let mut ess = f64::INFINITY;
    for x in 1..params.n {
        let bm = batch_means(&site_series(x), batch);
        means.push(bm.mean);
        mean_std_errors.push(bm.std_error);
        if bm.std_error > 0.0 {
            ess = ess.min(bm.effective_sample_size);
        }
    }
    if !ess.is_finite() {
        ess = run.samples as f64;
    }

    let covariances = pairs
        .iter()
        .map(|&(x, y)| {
            let (mx, my) = (means[x - 1], means[y - 1]);
            let z: Vec<f64> = samples
                .iter()
                .map(|c| (c.eta(x) - mx) * (c.eta(y) - my))
                .collect();
            let bm = batch_means(&z, batch);
            PairCovariance {
                x,
                y,
                value: bm.mean,
                std_error: bm.std_error,
            }
        })
        .collect();

    let mut warnings = Vec::new();
    if ess < 100.0 {
        warnings.push(format!(
            "effective sample size {ess:.1} is below 100; standard errors are unreliable"
        ));
    }
    Ok(StationaryEstimate {
        means,
        mean_std_errors,
        covariances,
        effective_sample_size: ess,
        warnings,
        samples,
    })
}
