//! Exact continuous-time simulation of the exclusion process with slow
//! boundary.
//!
//! Sites are `1..=N-1`. Every bond `(x, x+1)` rings at rate 1 and exchanges
//! the two occupancies (a no-op when they agree). Site 1 flips at rate
//! `α N^{-θ}` when empty and `(1-α) N^{-θ}` when occupied; site `N-1` does the
//! same with `β`. The simulator runs in microscopic time; a macroscopic time
//! `t` is converted once into `t·N²` microscopic units.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Lattice scale; sites are `1..=n-1`.
    pub n: usize,
    /// Left reservoir density.
    pub alpha: f64,
    /// Right reservoir density.
    pub beta: f64,
    /// Boundary slowdown exponent. `f64::INFINITY` freezes the reservoirs.
    pub theta: f64,
}

impl ModelParams {
    pub fn new(n: usize, alpha: f64, beta: f64, theta: f64) -> Result<Self> {
        let p = ModelParams {
            n,
            alpha,
            beta,
            theta,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(Error::invalid("N", format!("must be at least 3, got {}", self.n)));
        }
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::invalid(
                    name,
                    format!("must lie in the open interval (0,1), got {v}"),
                ));
            }
        }
        if self.theta.is_nan() || self.theta < 0.0 {
            return Err(Error::invalid(
                "theta",
                format!("must be >= 0, got {}", self.theta),
            ));
        }
        Ok(())
    }

    /// `N^{-θ}`, the boundary slowdown factor.
    #[inline]
    pub fn boundary_scale(&self) -> f64 {
        (self.n as f64).powf(-self.theta)
    }

    /// Number of sites, `N - 1`.
    #[inline]
    pub fn sites(&self) -> usize {
        self.n - 1
    }

    /// Microscopic duration of `t_macro` under diffusive scaling.
    #[inline]
    pub fn micro_duration(&self, t_macro: f64) -> f64 {
        t_macro * (self.n as f64).powi(2)
    }
}

/// Occupancy state `η ∈ {0,1}^{1..N-1}` plus elapsed microscopic time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    occupancy: Vec<bool>,
    pub micro_time: f64,
}

impl Configuration {
    /// Builds a configuration from the occupancies of sites `1..=N-1`.
    pub fn from_occupancy(occupancy: Vec<bool>) -> Self {
        Configuration {
            occupancy,
            micro_time: 0.0,
        }
    }

    pub fn empty(n: usize) -> Self {
        Self::from_occupancy(vec![false; n - 1])
    }

    pub fn full(n: usize) -> Self {
        Self::from_occupancy(vec![true; n - 1])
    }

    /// Product Bernoulli sample: site `x` is occupied with probability `γ(x/N)`.
    pub fn sample<R: Rng + ?Sized>(
        params: &ModelParams,
        gamma: impl Fn(f64) -> f64,
        rng: &mut R,
    ) -> Result<Self> {
        let n = params.n as f64;
        let mut occupancy = Vec::with_capacity(params.sites());
        for x in 1..params.n {
            let p = gamma(x as f64 / n);
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid(
                    "gamma",
                    format!("profile value {p} at u = {} lies outside [0,1]", x as f64 / n),
                ));
            }
            occupancy.push(rng.gen::<f64>() < p);
        }
        Ok(Self::from_occupancy(occupancy))
    }

    /// Lattice scale `N` (one more than the number of sites).
    #[inline]
    pub fn n(&self) -> usize {
        self.occupancy.len() + 1
    }

    /// Occupancy of site `x ∈ 1..=N-1`.
    #[inline]
    pub fn get(&self, x: usize) -> bool {
        self.occupancy[x - 1]
    }

    #[inline]
    pub fn eta(&self, x: usize) -> f64 {
        f64::from(u8::from(self.occupancy[x - 1]))
    }

    pub fn occupancy(&self) -> &[bool] {
        &self.occupancy
    }

    pub fn particle_count(&self) -> usize {
        self.occupancy.iter().filter(|&&b| b).count()
    }

    /// Applies `event`; returns whether the occupancy changed.
    pub fn apply(&mut self, event: Event) -> bool {
        match event {
            Event::Bond(x) => {
                let (a, b) = (self.occupancy[x - 1], self.occupancy[x]);
                self.occupancy.swap(x - 1, x);
                a != b
            }
            Event::LeftFlip => {
                self.occupancy[0] = !self.occupancy[0];
                true
            }
            Event::RightFlip => {
                let last = self.occupancy.len() - 1;
                self.occupancy[last] = !self.occupancy[last];
                true
            }
        }
    }

    pub fn snapshot(&self, n: usize) -> TrajectorySnapshot {
        TrajectorySnapshot {
            t_macro: self.micro_time / (n as f64).powi(2),
            occupancy: self.occupancy.iter().map(|&b| u8::from(b)).collect(),
        }
    }
}

/// One clock ring of the generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Event {
    /// Exchange across bond `(x, x+1)`.
    Bond(usize),
    LeftFlip,
    RightFlip,
}

/// Rates of every transition available from a configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateTable {
    pub bonds: usize,
    /// Common rate of every bulk bond.
    pub bond_rate: f64,
    pub left_flip_rate: f64,
    pub right_flip_rate: f64,
    pub total_rate: f64,
}

impl RateTable {
    pub fn bulk_rate(&self) -> f64 {
        self.bonds as f64 * self.bond_rate
    }
}

pub fn rates(config: &Configuration, params: &ModelParams) -> RateTable {
    debug_assert_eq!(config.n(), params.n);
    let scale = params.boundary_scale();
    let left = if config.get(1) {
        1.0 - params.alpha
    } else {
        params.alpha
    } * scale;
    let right = if config.get(params.n - 1) {
        1.0 - params.beta
    } else {
        params.beta
    } * scale;
    let bonds = params.n - 2;
    RateTable {
        bonds,
        bond_rate: 1.0,
        left_flip_rate: left,
        right_flip_rate: right,
        total_rate: bonds as f64 + left + right,
    }
}

/// Draws the holding time and the next event from the current rates without
/// applying it.
pub fn sample_event<R: Rng + ?Sized>(
    config: &Configuration,
    params: &ModelParams,
    rng: &mut R,
) -> (Event, f64) {
    let table = rates(config, params);
    let e: f64 = rng.sample(Exp1);
    let dt = e / table.total_rate;
    let bulk = table.bulk_rate();
    let pick = rng.gen::<f64>() * table.total_rate;
    let event = if pick < bulk {
        // Every bulk bond has rate one, so the integer part indexes the bond.
        Event::Bond(1 + (pick as usize).min(table.bonds - 1))
    } else if pick < bulk + table.left_flip_rate {
        Event::LeftFlip
    } else {
        Event::RightFlip
    };
    (event, dt)
}

/// Advances the process by one event.
pub fn step<R: Rng + ?Sized>(
    config: &mut Configuration,
    params: &ModelParams,
    rng: &mut R,
) -> (Event, f64) {
    let (event, dt) = sample_event(config, params, rng);
    config.apply(event);
    config.micro_time += dt;
    (event, dt)
}

/// Counts of executed events.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventLog {
    pub bulk_rings: u64,
    pub bulk_swaps: u64,
    pub left_in: u64,
    pub left_out: u64,
    pub right_in: u64,
    pub right_out: u64,
}

impl EventLog {
    /// Particles created minus particles annihilated.
    pub fn net_injection(&self) -> i64 {
        (self.left_in + self.right_in) as i64 - (self.left_out + self.right_out) as i64
    }

    pub fn merge(&mut self, other: &EventLog) {
        self.bulk_rings += other.bulk_rings;
        self.bulk_swaps += other.bulk_swaps;
        self.left_in += other.left_in;
        self.left_out += other.left_out;
        self.right_in += other.right_in;
        self.right_out += other.right_out;
    }

    fn record(&mut self, config: &Configuration, event: Event) {
        match event {
            Event::Bond(x) => {
                self.bulk_rings += 1;
                if config.get(x) != config.get(x + 1) {
                    self.bulk_swaps += 1;
                }
            }
            Event::LeftFlip if config.get(1) => self.left_out += 1,
            Event::LeftFlip => self.left_in += 1,
            Event::RightFlip if config.get(config.n() - 1) => self.right_out += 1,
            Event::RightFlip => self.right_in += 1,
        }
    }
}

/// Runs until microscopic time `target`, calling `observe(config, event, t)`
/// before each event is applied at time `t`. The final `micro_time` is
/// exactly `target`.
pub fn run_until<R: Rng + ?Sized>(
    config: &mut Configuration,
    params: &ModelParams,
    target: f64,
    rng: &mut R,
    mut observe: impl FnMut(&Configuration, Event, f64),
) -> EventLog {
    debug_assert_eq!(config.n(), params.n);
    let mut log = EventLog::default();
    loop {
        let (event, dt) = sample_event(config, params, rng);
        let t = config.micro_time + dt;
        if !(t <= target) {
            break;
        }
        observe(config, event, t);
        log.record(config, event);
        config.apply(event);
        config.micro_time = t;
    }
    config.micro_time = target;
    log
}

/// Advances by `t_macro` macroscopic time units.
pub fn simulate_until<R: Rng + ?Sized>(
    config: &mut Configuration,
    params: &ModelParams,
    t_macro: f64,
    rng: &mut R,
) -> EventLog {
    let target = config.micro_time + params.micro_duration(t_macro);
    run_until(config, params, target, rng, |_, _, _| {})
}

/// `⟨π^N, H⟩ = (1/N) Σ_{x=1}^{N-1} H(x/N) η(x)`.
pub fn empirical_pairing(config: &Configuration, h: impl Fn(f64) -> f64) -> f64 {
    let n = config.n() as f64;
    config
        .occupancy
        .iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .map(|(i, _)| h((i + 1) as f64 / n))
        .sum::<f64>()
        / n
}

/// JSON trajectory record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySnapshot {
    pub t_macro: f64,
    pub occupancy: Vec<u8>,
}

pub fn write_snapshots_json(path: &Path, snapshots: &[TrajectorySnapshot]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    serde_json::to_writer(BufWriter::new(file), snapshots).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    fn params(n: usize, alpha: f64, beta: f64, theta: f64) -> ModelParams {
        ModelParams::new(n, alpha, beta, theta).unwrap()
    }

    #[test]
    fn rejects_invalid_params() {
        assert!(ModelParams::new(2, 0.5, 0.5, 1.0).is_err());
        assert!(ModelParams::new(10, 0.0, 0.5, 1.0).is_err());
        assert!(ModelParams::new(10, 0.5, 1.0, 1.0).is_err());
        assert!(ModelParams::new(10, 0.5, 0.5, -0.1).is_err());
        assert!(ModelParams::new(10, 0.5, 0.5, f64::NAN).is_err());
        let err = ModelParams::new(10, 1.5, 0.5, 1.0).unwrap_err().to_string();
        assert!(err.contains("(0,1)"), "{err}");
    }

    #[test]
    fn left_flip_rate_for_empty_first_site() {
        let p = params(4, 0.3, 0.6, 1.0);
        let c = Configuration::from_occupancy(vec![false, true, true]);
        let r = rates(&c, &p);
        assert!((r.left_flip_rate - 0.075).abs() < 1e-15);
        assert!((r.right_flip_rate - 0.4 / 4.0).abs() < 1e-15);
        assert_eq!(r.bonds, 2);
        assert_eq!(r.total_rate, 2.0 + r.left_flip_rate + r.right_flip_rate);
    }

    #[test]
    fn symmetric_reservoir_rate_ignores_occupancy() {
        let p = params(4, 0.5, 0.5, 0.0);
        for occ in [false, true] {
            let c = Configuration::from_occupancy(vec![occ, false, false]);
            assert_eq!(rates(&c, &p).left_flip_rate, 0.5);
        }
    }

    #[test]
    fn degenerate_profiles_fill_or_empty_the_lattice() {
        let p = params(50, 0.5, 0.5, 1.0);
        let mut rng = stream_rng(1, 0);
        let full = Configuration::sample(&p, |_| 1.0, &mut rng).unwrap();
        assert_eq!(full, Configuration::full(50));
        let empty = Configuration::sample(&p, |_| 0.0, &mut rng).unwrap();
        assert_eq!(empty.particle_count(), 0);
        assert!(Configuration::sample(&p, |_| 1.2, &mut rng).is_err());
    }

    #[test]
    fn half_filled_sample_concentrates() {
        let p = params(10_000, 0.5, 0.5, 1.0);
        let tol = 4.0 * (0.25f64 / 9999.0).sqrt();
        let hits = (0..200)
            .filter(|&s| {
                let mut rng = stream_rng(s, 0);
                let c = Configuration::sample(&p, |_| 0.5, &mut rng).unwrap();
                (c.particle_count() as f64 / 9999.0 - 0.5).abs() <= tol
            })
            .count();
        assert!(hits >= 198, "{hits}");
    }

    #[test]
    fn bond_event_on_full_lattice_is_a_no_op() {
        let mut c = Configuration::full(6);
        for x in 1..5 {
            assert!(!c.apply(Event::Bond(x)));
        }
        assert_eq!(c, Configuration::full(6));
    }

    #[test]
    fn left_flip_fills_empty_site() {
        let mut c = Configuration::empty(6);
        c.apply(Event::LeftFlip);
        assert!(c.get(1));
        c.apply(Event::RightFlip);
        assert!(c.get(5));
    }

    #[test]
    fn zero_macro_time_leaves_configuration_unchanged() {
        let p = params(20, 0.2, 0.8, 1.0);
        let mut rng = stream_rng(3, 0);
        let c0 = Configuration::sample(&p, |_| 0.5, &mut rng).unwrap();
        let mut c = c0.clone();
        let log = simulate_until(&mut c, &p, 0.0, &mut rng);
        assert_eq!(c, c0);
        assert_eq!(log, EventLog::default());
    }

    #[test]
    fn micro_time_advances_by_n_squared() {
        let p = params(16, 0.2, 0.8, 1.0);
        let mut rng = stream_rng(3, 0);
        let mut c = Configuration::empty(16);
        simulate_until(&mut c, &p, 0.25, &mut rng);
        assert_eq!(c.micro_time, 0.25 * 256.0);
        simulate_until(&mut c, &p, 0.5, &mut rng);
        assert_eq!(c.micro_time, 0.25 * 256.0 + 0.5 * 256.0);
    }

    #[test]
    fn frozen_reservoirs_conserve_mass() {
        let p = params(30, 0.2, 0.8, f64::INFINITY);
        let mut rng = stream_rng(11, 0);
        let mut c = Configuration::sample(&p, |u| u, &mut rng).unwrap();
        let before = c.particle_count();
        let log = simulate_until(&mut c, &p, 1.0, &mut rng);
        assert_eq!(c.particle_count(), before);
        assert_eq!(log.net_injection(), 0);
        assert!(log.bulk_rings > 0);
    }

    #[test]
    fn event_log_accounts_for_mass_change() {
        let p = params(12, 0.3, 0.9, 0.0);
        let mut rng = stream_rng(5, 2);
        let mut c = Configuration::empty(12);
        let log = simulate_until(&mut c, &p, 2.0, &mut rng);
        assert_eq!(c.particle_count() as i64, log.net_injection());
    }

    #[test]
    fn identical_seeds_give_identical_trajectories() {
        let p = params(40, 0.1, 0.7, 0.5);
        let run = || {
            let mut rng = stream_rng(99, 4);
            let mut c = Configuration::sample(&p, |_| 0.5, &mut rng).unwrap();
            simulate_until(&mut c, &p, 0.3, &mut rng);
            c
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn event_frequencies_match_rate_proportions() {
        let p = params(6, 0.3, 0.6, 0.5);
        let c = Configuration::from_occupancy(vec![false, true, false, true, true]);
        let table = rates(&c, &p);
        let mut rng = stream_rng(21, 0);
        let draws = 100_000;
        let mut counts = [0u64; 3];
        for _ in 0..draws {
            match sample_event(&c, &p, &mut rng).0 {
                Event::Bond(_) => counts[0] += 1,
                Event::LeftFlip => counts[1] += 1,
                Event::RightFlip => counts[2] += 1,
            }
        }
        let probs = [
            table.bulk_rate() / table.total_rate,
            table.left_flip_rate / table.total_rate,
            table.right_flip_rate / table.total_rate,
        ];
        for (k, &q) in probs.iter().enumerate() {
            let se = (q * (1.0 - q) / draws as f64).sqrt();
            let freq = counts[k] as f64 / draws as f64;
            assert!((freq - q).abs() <= 4.0 * se, "class {k}: {freq} vs {q}");
        }
    }

    #[test]
    fn pairing_examples() {
        assert_eq!(empirical_pairing(&Configuration::full(4), |_| 1.0), 0.75);
        let c = Configuration::from_occupancy(vec![true, false, true]);
        assert!((empirical_pairing(&c, |u| u) - 0.25).abs() < 1e-15);
        assert_eq!(empirical_pairing(&Configuration::empty(9), |u| u.exp()), 0.0);
    }
}
