//! Continuous-time random walks on the triangle `V`.
//!
//! [`Triangle::occupation_time`] simulates the walk with generator `A_N^θ`
//! (unit rate to interior neighbours, `N^{−θ}` to `∂V`) and records the time
//! spent on the diagonal `D = {y = x+1}`. [`Triangle::coupling_walk`] builds
//! the same law from layers of the `θ = 0` walk: each attempted jump into
//! `∂V` succeeds with probability `N^{−θ}`, otherwise the walker restarts
//! in place on the next layer.

use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::ModelParams;
use crate::rng::stream_rng;
use crate::stats::Moments;

/// Step budget after which a walk is declared stuck.
pub const DEFAULT_MAX_STEPS: u64 = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangle {
    pub n: usize,
    /// `N^{−θ}`.
    pub boundary_conductance: f64,
    pub max_steps: u64,
}

/// Diagonal occupation per layer of one coupled walk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingOutcome {
    /// Number of coin tosses until absorption (`Y`).
    pub levels: u64,
    /// `D^{(1)}, …, D^{(Y)}`.
    pub d_times: Vec<f64>,
}

impl CouplingOutcome {
    pub fn total_d_time(&self) -> f64 {
        self.d_times.iter().sum()
    }
}

/// Where a walk at an interior point can go next.
struct Moves {
    inner: [(usize, usize); 4],
    inner_count: usize,
    boundary_count: usize,
}

impl Triangle {
    /// Walk geometry for lattice scale `n ≥ 2`.
    pub fn new(n: usize, theta: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid("N", format!("must be at least 2, got {n}")));
        }
        if theta.is_nan() || theta < 0.0 {
            return Err(Error::invalid("theta", format!("must be >= 0, got {theta}")));
        }
        Ok(Triangle {
            n,
            boundary_conductance: (n as f64).powf(-theta),
            max_steps: DEFAULT_MAX_STEPS,
        })
    }

    pub fn from_params(params: &ModelParams) -> Result<Self> {
        Self::new(params.n, params.theta)
    }

    fn check_point(&self, (x, y): (usize, usize)) -> Result<()> {
        if x < y && y <= self.n {
            Ok(())
        } else {
            Err(Error::invalid(
                "u",
                format!("({x},{y}) is not in the triangle 0 <= x < y <= {}", self.n),
            ))
        }
    }

    #[inline]
    fn absorbed(&self, (x, y): (usize, usize)) -> bool {
        x == 0 || y == self.n
    }

    #[inline]
    fn moves(&self, (x, y): (usize, usize)) -> Moves {
        let mut inner = [(0, 0); 4];
        let mut k = 0;
        let mut boundary = 0;
        let mut push = |p: (usize, usize), on_boundary: bool| {
            if on_boundary {
                boundary += 1;
            } else {
                inner[k] = p;
                k += 1;
            }
        };
        push((x - 1, y), x == 1);
        if x + 1 < y {
            push((x + 1, y), false);
        }
        if x + 1 < y {
            push((x, y - 1), false);
        }
        push((x, y + 1), y + 1 == self.n);
        Moves {
            inner,
            inner_count: k,
            boundary_count: boundary,
        }
    }

    /// Total time on `D` of one walk with generator `A_N^θ` started at `u`.
    pub fn occupation_time<R: Rng + ?Sized>(&self, u: (usize, usize), rng: &mut R) -> Result<f64> {
        self.check_point(u)?;
        let mut pos = u;
        let mut d_time = 0.0;
        let mut steps = 0u64;
        while !self.absorbed(pos) {
            steps += 1;
            if steps > self.max_steps {
                return Err(Error::CircuitBreaker { steps: self.max_steps });
            }
            let m = self.moves(pos);
            let total = m.inner_count as f64 + m.boundary_count as f64 * self.boundary_conductance;
            if pos.1 == pos.0 + 1 {
                d_time += rng.sample::<f64, _>(Exp1) / total;
            }
            let pick = rng.gen::<f64>() * total;
            if pick < m.inner_count as f64 {
                pos = m.inner[(pick as usize).min(m.inner_count - 1)];
            } else {
                break;
            }
        }
        Ok(d_time)
    }

    /// One realization of the layered coupling started at `u`.
    pub fn coupling_walk<R: Rng + ?Sized>(
        &self,
        u: (usize, usize),
        rng: &mut R,
    ) -> Result<CouplingOutcome> {
        self.check_point(u)?;
        let mut d_times = vec![0.0];
        if self.absorbed(u) {
            return Ok(CouplingOutcome {
                levels: 1,
                d_times,
            });
        }
        let mut pos = u;
        let mut steps = 0u64;
        loop {
            steps += 1;
            if steps > self.max_steps {
                return Err(Error::CircuitBreaker { steps: self.max_steps });
            }
            let m = self.moves(pos);
            // The θ = 0 walk: unit rate to every neighbour, boundary included.
            let total = (m.inner_count + m.boundary_count) as f64;
            if pos.1 == pos.0 + 1 {
                *d_times.last_mut().unwrap() += rng.sample::<f64, _>(Exp1) / total;
            }
            let pick = rng.gen::<f64>() * total;
            if pick < m.inner_count as f64 {
                pos = m.inner[(pick as usize).min(m.inner_count - 1)];
                continue;
            }
            if rng.gen::<f64>() < self.boundary_conductance {
                break;
            }
            d_times.push(0.0);
        }
        Ok(CouplingOutcome {
            levels: d_times.len() as u64,
            d_times,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OccupationEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub replicas: usize,
}

/// Independent diagonal occupation times; replica `r` uses stream `(seed, r)`.
pub fn occupation_time_samples(
    u: (usize, usize),
    triangle: &Triangle,
    replicas: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    (0..replicas)
        .into_par_iter()
        .map(|r| triangle.occupation_time(u, &mut stream_rng(seed, r as u64)))
        .collect()
}

/// Monte Carlo estimate of `T^θ_u` with its CLT standard error.
pub fn occupation_time_mc(
    u: (usize, usize),
    params: &ModelParams,
    replicas: usize,
    seed: u64,
) -> Result<OccupationEstimate> {
    if replicas == 0 {
        return Err(Error::invalid("replicas", "must be at least 1"));
    }
    let triangle = Triangle::from_params(params)?;
    let samples = occupation_time_samples(u, &triangle, replicas, seed)?;
    let m: Moments = samples.into_iter().collect();
    Ok(OccupationEstimate {
        estimate: m.mean,
        std_error: if replicas > 1 { m.std_error() } else { f64::NAN },
        replicas,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hydrostatics::occupation_times;

    #[test]
    fn moves_respect_the_triangle() {
        let t = Triangle::new(6, 1.0).unwrap();
        // Corner (1, 5): both (0,5) and (1,6) are absorbing.
        let m = t.moves((1, 5));
        assert_eq!(m.boundary_count, 2);
        assert_eq!(&m.inner[..m.inner_count], &[(2, 5), (1, 4)]);
        // Diagonal point (2, 3): (3,3) and (2,2) are outside V.
        let m = t.moves((2, 3));
        assert_eq!(m.boundary_count, 0);
        assert_eq!(&m.inner[..m.inner_count], &[(1, 3), (2, 4)]);
    }

    #[test]
    fn degenerate_triangle_absorbs_immediately() {
        let t = Triangle::new(2, 1.0).unwrap();
        let mut rng = stream_rng(0, 0);
        assert_eq!(t.occupation_time((1, 2), &mut rng).unwrap(), 0.0);
        let c = t.coupling_walk((1, 2), &mut rng).unwrap();
        assert_eq!(c.total_d_time(), 0.0);
    }

    #[test]
    fn theta_zero_coupling_has_one_level() {
        let t = Triangle::new(10, 0.0).unwrap();
        for r in 0..200 {
            let c = t.coupling_walk((3, 6), &mut stream_rng(1, r)).unwrap();
            assert_eq!(c.levels, 1);
        }
    }

    #[test]
    fn level_count_is_geometric() {
        let t = Triangle::new(10, 1.0).unwrap();
        let m: Moments = (0..10_000)
            .map(|r| t.coupling_walk((4, 5), &mut stream_rng(2, r)).unwrap().levels as f64)
            .collect();
        assert!((m.mean - 10.0).abs() <= 4.0 * m.std_error(), "{}", m.mean);
    }

    #[test]
    fn circuit_breaker_trips() {
        let mut t = Triangle::new(30, 4.0).unwrap();
        t.max_steps = 10;
        let err = t.occupation_time((10, 20), &mut stream_rng(0, 0)).unwrap_err();
        assert!(matches!(err, Error::CircuitBreaker { steps: 10 }));
    }

    #[test]
    fn rejects_points_outside_triangle() {
        let t = Triangle::new(8, 1.0).unwrap();
        assert!(t.occupation_time((4, 4), &mut stream_rng(0, 0)).is_err());
        assert!(t.coupling_walk((2, 9), &mut stream_rng(0, 0)).is_err());
    }

    #[test]
    fn slow_boundary_growth_is_bounded_by_n_plus_n_theta() {
        let theta = 2.0;
        let ratios: Vec<f64> = [10usize, 20, 40]
            .iter()
            .map(|&n| {
                let t = occupation_times(n, theta).unwrap();
                let nf = n as f64;
                t.max_value() / (nf + nf.powf(theta))
            })
            .collect();
        let c = ratios.iter().copied().fold(0.0, f64::max);
        // Ratios must not grow with N.
        assert!(ratios[2] <= ratios[0] * 1.05, "{ratios:?}");

        let p = ModelParams::new(20, 0.2, 0.8, theta).unwrap();
        let est = occupation_time_mc((5, 10), &p, 2000, 17).unwrap();
        let exact = occupation_times(20, theta).unwrap().get(5, 10);
        assert!((est.estimate - exact).abs() <= 4.0 * est.std_error);
        assert!(est.estimate <= c * (20.0 + 400.0) + 4.0 * est.std_error);
    }
}
