//! Convergence studies tying the particle system to its oracles.
//!
//! Every study is a grid of independent cells; cells and replicas draw from
//! disjoint ChaCha streams of one seed, run in parallel, and are reduced in
//! a fixed order so reports are reproducible bit for bit.

mod dynkin;
mod hydrodynamic;
mod hydrostatic;
mod occupation;
mod report;

pub use dynkin::{martingale_experiment, MartingaleConfig};
pub use hydrodynamic::{hydrodynamic_experiment, HydrodynamicConfig};
pub use hydrostatic::{hydrostatic_experiment, HydrostaticConfig};
pub use occupation::{walk_experiment, WalkConfig};
pub use report::{
    emit_report, read_report_csv, read_report_json, ExperimentReport, MetricRow, ReportFormat,
    CSV_COLUMNS,
};

use crate::error::{Error, Result};
use crate::lattice::{empirical_pairing, Configuration};
use crate::profile::{integrate_unit, TestFunction};

/// Simpson intervals for `∫ H γ`.
const PROFILE_QUADRATURE: usize = 4096;

/// Runs `f` on a dedicated pool of `jobs` threads, or on the global pool
/// when `jobs` is `None`.
pub fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        None => Ok(f()),
        Some(0) => Err(Error::invalid("jobs", "must be at least 1")),
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| Error::invalid("jobs", e.to_string())),
    }
}

/// Densities of the `⌊εN⌋` sites next to each reservoir.
pub fn coarse_grain_boundary(config: &Configuration, eps: f64) -> Result<(f64, f64)> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::invalid("eps", format!("must lie in (0,1], got {eps}")));
    }
    let n = config.n();
    let k = (eps * n as f64).floor() as usize;
    if k == 0 {
        return Err(Error::invalid(
            "eps",
            format!("floor(eps*N) = 0 for eps = {eps}, N = {n}"),
        ));
    }
    let k = k.min(n - 1);
    let left = (1..=k).map(|y| config.eta(y)).sum::<f64>() / k as f64;
    let right = (n - k..n).map(|y| config.eta(y)).sum::<f64>() / k as f64;
    Ok((left, right))
}

/// Fraction of `configs` whose empirical measure misses `∫ H γ` by more than
/// `delta` for some `H` in `family`.
pub fn association_statistic(
    configs: &[Configuration],
    gamma: impl Fn(f64) -> f64,
    family: &[TestFunction],
    delta: f64,
) -> Result<f64> {
    if configs.is_empty() {
        return Err(Error::invalid("configs", "ensemble is empty"));
    }
    if family.is_empty() {
        return Err(Error::invalid("family", "test-function family is empty"));
    }
    let deviations = association_deviations(configs, gamma, family);
    Ok(exceedance(&deviations, delta))
}

/// `max_H |⟨π, H⟩ − ∫Hγ|` for each configuration.
pub(crate) fn association_deviations(
    configs: &[Configuration],
    gamma: impl Fn(f64) -> f64,
    family: &[TestFunction],
) -> Vec<f64> {
    let targets: Vec<f64> = family
        .iter()
        .map(|h| integrate_unit(|u| h.value(u) * gamma(u), PROFILE_QUADRATURE))
        .collect();
    configs
        .iter()
        .map(|c| {
            family
                .iter()
                .zip(&targets)
                .map(|(h, target)| (empirical_pairing(c, |u| h.value(u)) - target).abs())
                .fold(0.0, f64::max)
        })
        .collect()
}

pub(crate) fn exceedance(deviations: &[f64], delta: f64) -> f64 {
    deviations.iter().filter(|&&d| d > delta).count() as f64 / deviations.len() as f64
}

/// Sliding box average over `w` consecutive entries, as centred as the ends
/// allow. `w` is clamped to `1..=values.len()`.
pub fn box_average(values: &[f64], w: usize) -> Vec<f64> {
    let len = values.len();
    if len == 0 {
        return Vec::new();
    }
    let w = w.clamp(1, len);
    let mut prefix = Vec::with_capacity(len + 1);
    prefix.push(0.0);
    for v in values {
        prefix.push(prefix.last().unwrap() + v);
    }
    (0..len)
        .map(|i| {
            let lo = i.saturating_sub((w - 1) / 2).min(len - w);
            (prefix[lo + w] - prefix[lo]) / w as f64
        })
        .collect()
}

/// Default box window `⌈N/16⌉`.
pub fn default_window(n: usize) -> usize {
    n.div_ceil(16).max(1)
}

/// True when `values` strictly decrease.
pub(crate) fn strictly_decreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] < w[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::ModelParams;
    use crate::rng::stream_rng;
    use proptest::prelude::*;

    fn alternating(n: usize) -> Configuration {
        Configuration::from_occupancy((1..n).map(|x| x % 2 == 1).collect())
    }

    #[test]
    fn coarse_grain_examples() {
        let full = Configuration::full(20);
        assert_eq!(coarse_grain_boundary(&full, 0.3).unwrap(), (1.0, 1.0));

        let c = alternating(20);
        // floor(0.05 * 20) = 1
        assert_eq!(coarse_grain_boundary(&c, 0.05).unwrap(), (c.eta(1), c.eta(19)));
        // floor(0.2 * 20) = 4: sites 1..4 hold 1,0,1,0
        assert_eq!(coarse_grain_boundary(&c, 0.2).unwrap().0, 0.5);
    }

    #[test]
    fn coarse_grain_rejects_empty_window() {
        assert!(coarse_grain_boundary(&Configuration::full(10), 0.05).is_err());
        assert!(coarse_grain_boundary(&Configuration::full(10), 0.0).is_err());
        assert!(coarse_grain_boundary(&Configuration::full(10), 1.5).is_err());
    }

    #[test]
    fn empty_configs_against_zero_profile_never_exceed() {
        let configs = vec![Configuration::empty(30); 5];
        for delta in [1e-9, 0.01, 0.5] {
            let p = association_statistic(&configs, |_| 0.0, &TestFunction::DEFAULT_FAMILY, delta)
                .unwrap();
            assert_eq!(p, 0.0);
        }
    }

    #[test]
    fn product_measure_is_associated_at_large_n() {
        // Hoeffding: for each H with |H| <= 1, P(|dev| > 0.05) <= 2 exp(-2 N 0.05²)
        // which is ~1e-21 at N = 1e4, up to the O(1/N) quadrature offset.
        let gamma = |u: f64| 0.3 + 0.4 * u;
        let family = [
            TestFunction::One,
            TestFunction::Identity,
            TestFunction::Square,
            TestFunction::SinPi,
        ];
        let params = ModelParams::new(10_000, 0.5, 0.5, 1.0).unwrap();
        let mut rng = stream_rng(11, 0);
        let configs: Vec<_> = (0..200)
            .map(|_| Configuration::sample(&params, gamma, &mut rng).unwrap())
            .collect();
        let p = association_statistic(&configs, gamma, &family, 0.05).unwrap();
        assert!(p <= 0.01, "p = {p}");
    }

    #[test]
    fn association_rejects_empty_inputs() {
        assert!(association_statistic(&[], |_| 0.5, &TestFunction::DEFAULT_FAMILY, 0.1).is_err());
        assert!(association_statistic(&[Configuration::empty(5)], |_| 0.5, &[], 0.1).is_err());
    }

    #[test]
    fn box_average_edges() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(box_average(&v, 1), v.to_vec());
        assert_eq!(box_average(&v, 3), vec![2.0, 2.0, 3.0, 4.0, 4.0]);
        assert_eq!(box_average(&v, 99), vec![3.0; 5]);
        assert_eq!(default_window(64), 4);
        assert_eq!(default_window(65), 5);
    }

    #[test]
    fn jobs_knob_runs_on_a_sized_pool() {
        assert_eq!(with_jobs(Some(2), rayon::current_num_threads).unwrap(), 2);
        assert!(with_jobs(Some(0), || ()).is_err());
    }

    proptest! {
        #[test]
        fn association_is_monotone_in_delta(
            occ in prop::collection::vec(prop::collection::vec(any::<bool>(), 12), 1..20),
            d1 in 0.0..0.5f64,
            d2 in 0.0..0.5f64,
        ) {
            let configs: Vec<_> = occ.into_iter().map(Configuration::from_occupancy).collect();
            let gamma = |u: f64| u;
            let fam = TestFunction::DEFAULT_FAMILY;
            let (lo, hi) = (d1.min(d2), d1.max(d2));
            let p_lo = association_statistic(&configs, gamma, &fam, lo).unwrap();
            let p_hi = association_statistic(&configs, gamma, &fam, hi).unwrap();
            prop_assert!(p_hi <= p_lo);
        }

        #[test]
        fn full_window_box_average_is_global_density(
            occ in prop::collection::vec(any::<bool>(), 2..80),
        ) {
            let c = Configuration::from_occupancy(occ);
            let eta: Vec<f64> = (1..c.n()).map(|x| c.eta(x)).collect();
            let global = eta.iter().sum::<f64>() / eta.len() as f64;
            for b in box_average(&eta, eta.len()) {
                prop_assert!((b - global).abs() <= 1e-12);
            }
        }
    }
}
