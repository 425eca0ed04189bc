//! Crank–Nicolson time stepping on the uniform grid `u_j = j/M`.
//!
//! Robin and Neumann closures eliminate a ghost node with the central
//! difference of the boundary condition, so every node `0..=M` is an
//! unknown. Dirichlet pins the two end nodes.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::BoundaryKind;
use crate::error::{Error, Result};
use crate::linalg::Tridiagonal;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatProblem {
    pub bc: BoundaryKind,
    pub alpha: f64,
    pub beta: f64,
    /// Number of cells.
    pub m: usize,
    /// Time step; `None` selects `h²/2`, inside the range where the scheme
    /// obeys the discrete maximum principle for all three closures.
    pub dt: Option<f64>,
    pub t_final: f64,
    /// Store a snapshot every this many steps (the final step is always
    /// stored).
    pub snapshot_every: usize,
}

impl HeatProblem {
    pub fn new(bc: BoundaryKind, alpha: f64, beta: f64, m: usize, t_final: f64) -> Self {
        HeatProblem {
            bc,
            alpha,
            beta,
            m,
            dt: None,
            t_final,
            snapshot_every: 10,
        }
    }

    pub fn default_dt(m: usize) -> f64 {
        let h = 1.0 / m as f64;
        0.5 * h * h
    }

    fn validate(&self) -> Result<()> {
        if self.m < 8 {
            return Err(Error::invalid("M", format!("must be at least 8, got {}", self.m)));
        }
        if !self.alpha.is_finite() || !self.beta.is_finite() {
            return Err(Error::invalid("alpha/beta", "boundary data must be finite"));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::invalid("dt", format!("must be positive, got {dt}")));
            }
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(Error::invalid(
                "t_final",
                format!("must be finite and >= 0, got {}", self.t_final),
            ));
        }
        if self.snapshot_every == 0 {
            return Err(Error::invalid("snapshot_every", "must be at least 1"));
        }
        Ok(())
    }
}

/// Metadata header of the CSV export.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridMetadata {
    pub bc_kind: BoundaryKind,
    #[serde(rename = "M")]
    pub m: usize,
    pub dt: f64,
    pub alpha: f64,
    pub beta: f64,
}

/// Space-time field `ρ(t, u_j)` stored at snapshot times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridField {
    pub bc: BoundaryKind,
    pub alpha: f64,
    pub beta: f64,
    pub m: usize,
    pub dt: f64,
    pub times: Vec<f64>,
    /// `snapshots[k][j] = ρ(times[k], j/M)`.
    pub snapshots: Vec<Vec<f64>>,
}

impl GridField {
    #[inline]
    pub fn h(&self) -> f64 {
        1.0 / self.m as f64
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        let h = self.h();
        (0..=self.m).map(move |j| j as f64 * h)
    }

    pub fn last(&self) -> &[f64] {
        self.snapshots.last().expect("field holds the initial snapshot")
    }

    /// Index of the snapshot taken at time `t`.
    pub fn snapshot_index(&self, t: f64) -> Option<usize> {
        let tol = 1e-12 * t.abs().max(1.0);
        self.times.iter().position(|&s| (s - t).abs() <= tol)
    }

    /// Piecewise-linear interpolation of snapshot `k` at `u`.
    pub fn interpolate(&self, k: usize, u: f64) -> f64 {
        let s = &self.snapshots[k];
        let x = u.clamp(0.0, 1.0) * self.m as f64;
        let j = (x.floor() as usize).min(self.m - 1);
        let w = x - j as f64;
        (1.0 - w) * s[j] + w * s[j + 1]
    }

    /// Trapezoid mass `Σ_j w_j ρ(t_k, u_j)`.
    pub fn mass(&self, k: usize) -> f64 {
        trapezoid(&self.snapshots[k], self.h())
    }

    pub fn metadata(&self) -> GridMetadata {
        GridMetadata {
            bc_kind: self.bc,
            m: self.m,
            dt: self.dt,
            alpha: self.alpha,
            beta: self.beta,
        }
    }

    /// CSV with a `# {json metadata}` first line, then `t,u,value`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        let header = serde_json::to_string(&self.metadata()).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        let io = |e| Error::io(path, e);
        writeln!(out, "# {header}").map_err(io)?;
        writeln!(out, "t,u,value").map_err(io)?;
        let h = self.h();
        for (t, snap) in self.times.iter().zip(&self.snapshots) {
            for (j, v) in snap.iter().enumerate() {
                writeln!(out, "{t},{},{v}", j as f64 * h).map_err(io)?;
            }
        }
        out.flush().map_err(io)
    }
}

/// Composite trapezoid rule on a uniform grid.
pub(crate) fn trapezoid(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    let inner: f64 = values[1..n - 1].iter().sum();
    h * (inner + 0.5 * (values[0] + values[n - 1]))
}

/// Spatial operator `K ρ + c` in units of `1/h²`.
struct SpatialOperator {
    k: Tridiagonal,
    c: Vec<f64>,
}

fn spatial_operator(bc: BoundaryKind, alpha: f64, beta: f64, m: usize) -> SpatialOperator {
    let h = 1.0 / m as f64;
    let nodes = m + 1;
    let mut k = Tridiagonal::new(nodes);
    let mut c = vec![0.0; nodes];
    for j in 0..nodes {
        k.lower[j] = 1.0;
        k.diag[j] = -2.0;
        k.upper[j] = 1.0;
    }
    match bc {
        BoundaryKind::Dirichlet => {
            // End rows are held fixed; the neighbours see α and β through `c`.
            for j in [0, m] {
                k.lower[j] = 0.0;
                k.diag[j] = 0.0;
                k.upper[j] = 0.0;
            }
            k.lower[1] = 0.0;
            k.upper[m - 1] = 0.0;
            c[1] = alpha;
            c[m - 1] = beta;
        }
        BoundaryKind::Robin | BoundaryKind::Neumann => {
            // Ghost nodes: ρ_{−1} = ρ_1 − 2h(ρ_0 − α), ρ_{M+1} = ρ_{M−1} + 2h(β − ρ_M).
            let robin = if bc == BoundaryKind::Robin { 1.0 } else { 0.0 };
            k.upper[0] = 2.0;
            k.diag[0] = -2.0 - 2.0 * h * robin;
            k.lower[m] = 2.0;
            k.diag[m] = -2.0 - 2.0 * h * robin;
            c[0] = 2.0 * h * robin * alpha;
            c[m] = 2.0 * h * robin * beta;
        }
    }
    SpatialOperator { k, c }
}

/// Solves `∂_t ρ = Δρ` on `[0, t_final]` from `ρ(0,·) = γ`.
pub fn solve_heat(problem: &HeatProblem, gamma: impl Fn(f64) -> f64) -> Result<GridField> {
    problem.validate()?;
    let m = problem.m;
    let h = 1.0 / m as f64;
    let mut rho: Vec<f64> = (0..=m).map(|j| gamma(j as f64 * h)).collect();
    if let Some(index) = rho.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: "initial profile",
            index,
        });
    }

    let dt_target = problem.dt.unwrap_or_else(|| HeatProblem::default_dt(m));
    let steps = if problem.t_final == 0.0 {
        0
    } else {
        ((problem.t_final / dt_target) - 1e-9).ceil().max(1.0) as usize
    };
    let dt = if steps == 0 {
        dt_target
    } else {
        problem.t_final / steps as f64
    };

    let mut field = GridField {
        bc: problem.bc,
        alpha: problem.alpha,
        beta: problem.beta,
        m,
        dt,
        times: vec![0.0],
        snapshots: vec![rho.clone()],
    };
    if steps == 0 {
        return Ok(field);
    }

    let op = spatial_operator(problem.bc, problem.alpha, problem.beta, m);
    let r = dt / (2.0 * h * h);
    let mut implicit = Tridiagonal::new(m + 1);
    for j in 0..=m {
        implicit.lower[j] = -r * op.k.lower[j];
        implicit.diag[j] = 1.0 - r * op.k.diag[j];
        implicit.upper[j] = -r * op.k.upper[j];
    }
    if problem.bc == BoundaryKind::Dirichlet {
        rho[0] = problem.alpha;
        rho[m] = problem.beta;
    }

    for step in 1..=steps {
        let k_rho = op.k.mul_vec(&rho);
        let rhs: Vec<f64> = (0..=m)
            .map(|j| rho[j] + r * k_rho[j] + 2.0 * r * op.c[j])
            .collect();
        rho = implicit.solve(&rhs)?;
        if step % problem.snapshot_every == 0 || step == steps {
            field.times.push(step as f64 * dt);
            field.snapshots.push(rho.clone());
        }
    }
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn max_dev(a: &[f64], b: impl Fn(usize) -> f64) -> f64 {
        a.iter()
            .enumerate()
            .map(|(j, v)| (v - b(j)).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn dirichlet_line_is_stationary() {
        let (a, b) = (0.2, 0.7);
        let p = HeatProblem::new(BoundaryKind::Dirichlet, a, b, 32, 0.2);
        let f = solve_heat(&p, |u| a + (b - a) * u).unwrap();
        for s in &f.snapshots {
            assert!(max_dev(s, |j| a + (b - a) * j as f64 / 32.0) < 1e-10);
        }
    }

    #[test]
    fn neumann_constant_is_stationary() {
        let p = HeatProblem::new(BoundaryKind::Neumann, 0.1, 0.9, 16, 0.3);
        let f = solve_heat(&p, |_| 0.4).unwrap();
        for s in &f.snapshots {
            assert!(max_dev(s, |_| 0.4) < 1e-12);
        }
    }

    #[test]
    fn dirichlet_sine_mode_decays() {
        let m = 64;
        let p = HeatProblem::new(BoundaryKind::Dirichlet, 0.0, 0.0, m, 0.1);
        let f = solve_heat(&p, |u| (PI * u).sin()).unwrap();
        let decay = (-PI * PI * 0.1).exp();
        let err = max_dev(f.last(), |j| decay * (PI * j as f64 / m as f64).sin());
        assert!(err < 2.0 / (m * m) as f64, "{err}");
    }

    #[test]
    fn neumann_conserves_trapezoid_mass() {
        let p = HeatProblem::new(BoundaryKind::Neumann, 0.0, 0.0, 40, 1.0);
        let f = solve_heat(&p, |u| if u < 0.3 { 1.0 } else { 0.0 }).unwrap();
        let m0 = f.mass(0);
        for k in 0..f.times.len() {
            assert!((f.mass(k) - m0).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_bad_input() {
        let p = HeatProblem::new(BoundaryKind::Robin, 0.0, 0.0, 16, 0.1);
        assert!(matches!(
            solve_heat(&p, |u| if u > 0.5 { f64::NAN } else { 0.0 }),
            Err(Error::NonFinite { .. })
        ));
        let coarse = HeatProblem::new(BoundaryKind::Robin, 0.0, 0.0, 4, 0.1);
        assert!(solve_heat(&coarse, |_| 0.0).is_err());
    }

    #[test]
    fn final_time_is_hit_exactly() {
        let mut p = HeatProblem::new(BoundaryKind::Robin, 0.1, 0.9, 10, 0.0123);
        p.dt = Some(1e-3);
        let f = solve_heat(&p, |_| 0.5).unwrap();
        assert!((f.times.last().unwrap() - 0.0123).abs() < 1e-15);
        assert!(f.dt <= 1e-3);
        assert_eq!(f.snapshot_index(0.0123), Some(f.times.len() - 1));
    }
}
