//! Dynkin martingale of a test function along one trajectory.
//!
//! For `H: [0,1] → ℝ`,
//! `M_t(H) = ⟨π_t,H⟩ − ⟨π_0,H⟩ − ∫₀ᵗ N² L_N⟨π_s,H⟩ ds`.
//! `L_N⟨π,H⟩` is affine in `η`, so it is tracked incrementally and the
//! time integral is accumulated exactly between events. The predictable
//! quadratic variation `⟨M⟩_t` is tracked the same way.

use std::fs::File;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{empirical_pairing, rates, run_until, Configuration, Event, ModelParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartingaleSeries {
    pub test_function_id: String,
    /// Macroscopic times, strictly increasing, starting at 0.
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Predictable quadratic variation `⟨M⟩_t` at the same times.
    pub quadratic_variation: Vec<f64>,
}

impl MartingaleSeries {
    pub fn last(&self) -> f64 {
        *self.values.last().expect("series always holds t = 0")
    }

    /// CSV with columns `t,value`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = csv::Writer::from_writer(file);
        let wrap = |source| Error::Csv {
            path: path.to_path_buf(),
            source,
        };
        w.write_record(["t", "value"]).map_err(wrap)?;
        for (t, v) in self.times.iter().zip(&self.values) {
            w.write_record([t.to_string(), v.to_string()]).map_err(wrap)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Incremental bookkeeping of the drift `L_N⟨π,H⟩` and of the
/// quadratic-variation rate, both in microscopic time units.
struct Tracker {
    n: usize,
    /// `H(x/N)` for `x = 0..=N`.
    h: Vec<f64>,
    /// Drift weights `w_x`, indexed by site.
    weights: Vec<f64>,
    constant: f64,
    drift: f64,
    qv_rate: f64,
}

impl Tracker {
    fn new(params: &ModelParams, h: &impl Fn(f64) -> f64, config: &Configuration) -> Self {
        let n = params.n;
        let nf = n as f64;
        let h: Vec<f64> = (0..=n).map(|x| h(x as f64 / nf)).collect();
        let scale = params.boundary_scale();
        let mut weights = vec![0.0; n + 1];
        for b in 1..n - 1 {
            let g = (h[b + 1] - h[b]) / nf;
            weights[b] += g;
            weights[b + 1] -= g;
        }
        weights[1] -= scale * h[1] / nf;
        weights[n - 1] -= scale * h[n - 1] / nf;
        let constant = scale * (params.alpha * h[1] + params.beta * h[n - 1]) / nf;
        let mut t = Tracker {
            n,
            h,
            weights,
            constant,
            drift: 0.0,
            qv_rate: 0.0,
        };
        t.refresh(params, config);
        t
    }

    fn refresh(&mut self, params: &ModelParams, config: &Configuration) {
        self.drift = self.constant
            + (1..self.n)
                .map(|x| self.weights[x] * config.eta(x))
                .sum::<f64>();
        self.qv_rate = (1..self.n - 1).map(|b| self.bond_qv(config, b)).sum::<f64>()
            + self.boundary_qv(params, config);
    }

    fn bond_qv(&self, config: &Configuration, b: usize) -> f64 {
        if config.get(b) != config.get(b + 1) {
            let g = (self.h[b + 1] - self.h[b]) / self.n as f64;
            g * g
        } else {
            0.0
        }
    }

    fn boundary_qv(&self, params: &ModelParams, config: &Configuration) -> f64 {
        let r = rates(config, params);
        let nf = self.n as f64;
        let (hl, hr) = (self.h[1] / nf, self.h[self.n - 1] / nf);
        r.left_flip_rate * hl * hl + r.right_flip_rate * hr * hr
    }

    /// Sum of the QV terms that can change when `event` fires.
    fn local_qv(&self, params: &ModelParams, config: &Configuration, event: Event) -> f64 {
        let last_bond = self.n - 2;
        let (lo, hi) = match event {
            Event::Bond(b) => (b.saturating_sub(1).max(1), (b + 1).min(last_bond)),
            Event::LeftFlip => (1, 1),
            Event::RightFlip => (last_bond, last_bond),
        };
        (lo..=hi).map(|b| self.bond_qv(config, b)).sum::<f64>() + self.boundary_qv(params, config)
    }

    fn apply(&mut self, params: &ModelParams, config: &mut Configuration, event: Event) {
        let before = self.local_qv(params, config, event);
        match event {
            Event::Bond(b) => {
                let d = config.eta(b + 1) - config.eta(b);
                self.drift += (self.weights[b] - self.weights[b + 1]) * d;
            }
            Event::LeftFlip => self.drift += self.weights[1] * (1.0 - 2.0 * config.eta(1)),
            Event::RightFlip => {
                let x = self.n - 1;
                self.drift += self.weights[x] * (1.0 - 2.0 * config.eta(x));
            }
        }
        config.apply(event);
        self.qv_rate += self.local_qv(params, config, event) - before;
    }
}

/// Samples `M_t(H)` at the macroscopic times `t_grid` along one trajectory
/// started from `config` (which is advanced in place). A leading `t = 0` is
/// inserted if absent.
pub fn dynkin_martingale<R: Rng + ?Sized>(
    params: &ModelParams,
    config: &mut Configuration,
    h: impl Fn(f64) -> f64,
    test_function_id: &str,
    t_grid: &[f64],
    rng: &mut R,
) -> Result<MartingaleSeries> {
    params.validate()?;
    if config.n() != params.n {
        return Err(Error::invalid(
            "config",
            format!("has N = {}, params have N = {}", config.n(), params.n),
        ));
    }
    let mut times = Vec::with_capacity(t_grid.len() + 1);
    if t_grid.first() != Some(&0.0) {
        times.push(0.0);
    }
    times.extend_from_slice(t_grid);
    if times.iter().any(|t| !t.is_finite())
        || times.windows(2).any(|w| w[1] <= w[0])
        || times[0] < 0.0
    {
        return Err(Error::invalid(
            "t_grid",
            "times must be finite, non-negative and strictly increasing",
        ));
    }

    let n2 = (params.n as f64).powi(2);
    let start_micro = config.micro_time;
    let pairing0 = empirical_pairing(config, &h);
    let mut tracker = Tracker::new(params, &h, config);
    let mut compensator = 0.0;
    let mut qv = 0.0;
    let mut values = Vec::with_capacity(times.len());
    let mut quadratic_variation = Vec::with_capacity(times.len());

    for &t in &times {
        let target = start_micro + t * n2;
        let mut last = config.micro_time;
        // `run_until` hands us the pre-event state, so the tracker owns the
        // mutation through a shadow copy it keeps in sync.
        let mut shadow = config.clone();
        run_until(config, params, target, rng, |_, event, at| {
            compensator += tracker.drift * (at - last);
            qv += tracker.qv_rate * (at - last);
            last = at;
            tracker.apply(params, &mut shadow, event);
        });
        compensator += tracker.drift * (target - last);
        qv += tracker.qv_rate * (target - last);
        debug_assert_eq!(shadow.occupancy(), config.occupancy());
        // Bound floating drift of the incremental sums.
        tracker.refresh(params, config);
        values.push(empirical_pairing(config, &h) - pairing0 - compensator);
        quadratic_variation.push(qv);
    }

    Ok(MartingaleSeries {
        test_function_id: test_function_id.to_string(),
        times,
        values,
        quadratic_variation,
    })
}

/// `C(H)·T/N` with `C(H) = ‖H′‖²∞ + 2‖H‖²∞ N^{1−θ}`, the bound on the
/// expected quadratic variation `E⟨M⟩_T`.
pub fn quadratic_variation_bound(
    params: &ModelParams,
    derivative_sup: f64,
    value_sup: f64,
    t: f64,
) -> f64 {
    let n = params.n as f64;
    let c = derivative_sup.powi(2) + 2.0 * value_sup.powi(2) * n.powf(1.0 - params.theta);
    c * t / n
}
