//! Two-point function on the triangle `V = {0 ≤ x < y ≤ N}`.
//!
//! With `c_θ(u,v) = 1` between interior neighbours, `N^{−θ}` from an interior
//! point to a neighbour on `∂V = {x = 0} ∪ {y = N}`, and 0 otherwise, the
//! stationary covariance `φ(x,y) = Cov(η(x), η(y))` solves
//! `A φ = a_N² 1{y = x+1}` with `φ = 0` on `∂V`, where
//! `A f(u) = Σ_v c_θ(u,v)(f(v) − f(u))`. Equivalently `φ = −a_N² T`, where
//! `T(u)` is the expected time the walk generated by `A` spends on the
//! diagonal before absorption.

use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hydrostatics::mean_profile_closed_form;
use crate::lattice::ModelParams;
use crate::linalg::{conjugate_gradient, SymmetricBanded};

/// Above this `N` the triangle system is solved by conjugate gradients
/// instead of a banded Cholesky factorization.
pub const ITERATIVE_THRESHOLD: usize = 2000;

/// A function on `V`, stored row-major by `y`: entry `(x, y)` lives at
/// `y(y−1)/2 + x`. Boundary entries are materialized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriangleField {
    pub n: usize,
    values: Vec<f64>,
}

impl TriangleField {
    pub fn zeros(n: usize) -> Self {
        TriangleField {
            n,
            values: vec![0.0; n * (n + 1) / 2],
        }
    }

    #[inline]
    fn index(x: usize, y: usize) -> usize {
        y * (y - 1) / 2 + x
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        x < y && y <= self.n
    }

    pub fn is_boundary(&self, x: usize, y: usize) -> bool {
        x == 0 || y == self.n
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        debug_assert!(self.contains(x, y));
        self.values[Self::index(x, y)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        debug_assert!(self.contains(x, y));
        self.values[Self::index(x, y)] = v;
    }

    /// All points of `V` in storage order.
    pub fn points(&self) -> impl Iterator<Item = (usize, usize)> {
        let n = self.n;
        (1..=n).flat_map(|y| (0..y).map(move |x| (x, y)))
    }

    /// Interior points `1 ≤ x < y ≤ N−1`.
    pub fn interior_points(&self) -> impl Iterator<Item = (usize, usize)> {
        let n = self.n;
        (2..n).flat_map(|y| (1..y).map(move |x| (x, y)))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        TriangleField {
            n: self.n,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    /// CSV with columns `x,y,value` over all of `V`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = csv::Writer::from_writer(file);
        let wrap = |source| Error::Csv {
            path: path.to_path_buf(),
            source,
        };
        w.write_record(["x", "y", "value"]).map_err(wrap)?;
        for (x, y) in self.points() {
            w.write_record([x.to_string(), y.to_string(), self.get(x, y).to_string()])
                .map_err(wrap)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Stationary two-point function `φ^N` together with the slope `a_N` that
/// scales it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceField {
    pub params: ModelParams,
    pub a_n: f64,
    pub phi: TriangleField,
}

impl CovarianceField {
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.phi.get(x, y)
    }
}

/// Interior unknown numbering, also row-major by `y`.
#[inline]
fn unknown(x: usize, y: usize) -> usize {
    (y - 1) * (y - 2) / 2 + (x - 1)
}

/// Interior neighbours of `(x, y)` and the number of its neighbours on `∂V`.
fn neighbours(n: usize, x: usize, y: usize) -> ([(usize, usize); 4], usize, usize) {
    let mut inner = [(0, 0); 4];
    let mut k = 0;
    let mut boundary = 0;
    if x == 1 {
        boundary += 1;
    } else {
        inner[k] = (x - 1, y);
        k += 1;
    }
    if x + 1 < y {
        inner[k] = (x + 1, y);
        k += 1;
    }
    if x < y - 1 {
        inner[k] = (x, y - 1);
        k += 1;
    }
    if y + 1 == n {
        boundary += 1;
    } else {
        inner[k] = (x, y + 1);
        k += 1;
    }
    (inner, k, boundary)
}

fn check_triangle(n: usize, theta: f64) -> Result<f64> {
    if n < 3 {
        return Err(Error::invalid("N", format!("must be at least 3, got {n}")));
    }
    let scale = (n as f64).powf(-theta);
    if !(scale > 0.0) {
        return Err(Error::invalid(
            "theta",
            "boundary conductance vanishes; the triangle walk is never absorbed",
        ));
    }
    Ok(scale)
}

/// Expected diagonal occupation times `T^θ_u` for every `u ∈ V`: the solution
/// of `−A T = 1_D` with `T = 0` on `∂V`.
pub fn occupation_times(n: usize, theta: f64) -> Result<TriangleField> {
    let scale = check_triangle(n, theta)?;
    let mut field = TriangleField::zeros(n);
    let unknowns = (n - 1) * (n - 2) / 2;
    if unknowns == 0 {
        return Ok(field);
    }
    let interior: Vec<(usize, usize)> = field.interior_points().collect();
    let rhs: Vec<f64> = interior
        .iter()
        .map(|&(x, y)| if y == x + 1 { 1.0 } else { 0.0 })
        .collect();

    let solution = if n <= ITERATIVE_THRESHOLD {
        let mut m = SymmetricBanded::new(unknowns, n.saturating_sub(2).max(1));
        for &(x, y) in &interior {
            let i = unknown(x, y);
            let (inner, k, boundary) = neighbours(n, x, y);
            m.add(i, i, k as f64 + boundary as f64 * scale);
            for &(vx, vy) in &inner[..k] {
                let j = unknown(vx, vy);
                if j < i {
                    m.add(i, j, -1.0);
                }
            }
        }
        m.cholesky()?.solve(&rhs)
    } else {
        conjugate_gradient(
            |v, out| {
                for &(x, y) in &interior {
                    let i = unknown(x, y);
                    let (inner, k, boundary) = neighbours(n, x, y);
                    let mut acc = (k as f64 + boundary as f64 * scale) * v[i];
                    for &(vx, vy) in &inner[..k] {
                        acc -= v[unknown(vx, vy)];
                    }
                    out[i] = acc;
                }
            },
            &rhs,
            1e-12,
            50 * n * n,
        )?
    };
    for (&(x, y), v) in interior.iter().zip(solution) {
        field.set(x, y, v);
    }
    Ok(field)
}

/// Stationary covariances `φ^N = −a_N² T^θ` on `V`.
pub fn covariance_solve(params: &ModelParams) -> Result<CovarianceField> {
    let a_n = mean_profile_closed_form(params).slope;
    let phi = if a_n == 0.0 {
        TriangleField::zeros(params.n)
    } else {
        occupation_times(params.n, params.theta)?.scaled(-a_n * a_n)
    };
    Ok(CovarianceField {
        params: *params,
        a_n,
        phi,
    })
}

/// `A_N^θ f` at every interior point of `V` (zero on `∂V`).
pub fn apply_conductance_laplacian(f: &TriangleField, theta: f64) -> TriangleField {
    let n = f.n;
    let scale = (n as f64).powf(-theta);
    let mut out = TriangleField::zeros(n);
    for (x, y) in f.interior_points() {
        let centre = f.get(x, y);
        let (inner, k, _) = neighbours(n, x, y);
        let mut acc: f64 = inner[..k].iter().map(|&(a, b)| f.get(a, b) - centre).sum();
        if x == 1 {
            acc += scale * (f.get(0, y) - centre);
        }
        if y + 1 == n {
            acc += scale * (f.get(x, n) - centre);
        }
        out.set(x, y, acc);
    }
    out
}

/// `T⁰_u = x(N−y)/(N−1)`, the diagonal occupation time of the simple
/// symmetric walk on `V` absorbed at `∂V`.
pub fn occupation_time_exact_theta0(x: usize, y: usize, n: usize) -> Result<f64> {
    if !(x < y && y <= n) || n < 2 {
        return Err(Error::invalid(
            "u",
            format!("({x},{y}) is not in the triangle 0 <= x < y <= {n}"),
        ));
    }
    if x == 0 || y == n {
        return Ok(0.0);
    }
    Ok((x * (n - y)) as f64 / (n - 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn storage_order_is_row_major_in_y() {
        let f = TriangleField::zeros(4);
        let pts: Vec<_> = f.points().collect();
        assert_eq!(pts.len(), 10);
        for (k, &(x, y)) in pts.iter().enumerate() {
            assert_eq!(TriangleField::index(x, y), k);
        }
        let interior: Vec<_> = f.interior_points().collect();
        assert_eq!(interior, vec![(1, 2), (1, 3), (2, 3)]);
        for (k, &(x, y)) in interior.iter().enumerate() {
            assert_eq!(unknown(x, y), k);
        }
    }

    #[test]
    fn small_triangle_matches_closed_form() {
        let p = ModelParams {
            n: 4,
            alpha: 0.0,
            beta: 1.0,
            theta: 0.0,
        };
        let c = covariance_solve(&p).unwrap();
        assert!((c.get(1, 3) + 1.0 / 48.0).abs() < 1e-15);
    }

    #[test]
    fn equal_reservoirs_give_zero_covariance() {
        let p = ModelParams::new(15, 0.4, 0.4, 1.0).unwrap();
        let c = covariance_solve(&p).unwrap();
        assert_eq!(c.phi.max_abs(), 0.0);
    }

    #[test]
    fn theta0_occupation_time_values() {
        assert!((occupation_time_exact_theta0(1, 3, 4).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(occupation_time_exact_theta0(0, 3, 4).unwrap(), 0.0);
        assert_eq!(occupation_time_exact_theta0(2, 4, 4).unwrap(), 0.0);
        assert_eq!(occupation_time_exact_theta0(1, 9, 10).unwrap(), 1.0 / 9.0);
        assert!(occupation_time_exact_theta0(3, 3, 4).is_err());
        assert!(occupation_time_exact_theta0(1, 5, 4).is_err());
    }

    #[test]
    fn boundary_entries_vanish_and_interior_is_non_positive() {
        let p = ModelParams::new(12, 0.1, 0.9, 1.5).unwrap();
        let c = covariance_solve(&p).unwrap();
        for (x, y) in c.phi.points() {
            if c.phi.is_boundary(x, y) {
                assert_eq!(c.get(x, y), 0.0);
            } else {
                assert!(c.get(x, y) <= 1e-14);
            }
        }
    }

    #[test]
    fn frozen_reservoirs_are_rejected() {
        assert!(occupation_times(10, f64::INFINITY).is_err());
    }
}
