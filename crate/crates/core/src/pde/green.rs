//! Inverse of `−Δ` on the Robin-compatible class
//! `𝓗 = {f : f′(0) = f(0), f′(1) = −f(1)}`.
//!
//! The kernel is `G(r,u) = (u+1)(2−r)/3 − (u−r)·1{r ≤ u}`, which is
//! symmetric and has a kink on the diagonal. The diagonal falls on grid
//! nodes, so the composite trapezoid rule over the grid splits the
//! integral at the kink exactly.

use serde::{Deserialize, Serialize};

use super::heat::{trapezoid, GridField};
use super::BoundaryKind;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GreenOperator {
    pub m: usize,
    /// `kernel[i*(m+1) + j] = G(u_j, u_i)`, row `i` integrates against `g`.
    kernel: Vec<f64>,
}

impl GreenOperator {
    pub fn new(m: usize) -> Self {
        let h = 1.0 / m as f64;
        let nodes = m + 1;
        let mut kernel = Vec::with_capacity(nodes * nodes);
        for i in 0..nodes {
            for j in 0..nodes {
                kernel.push(Self::kernel(j as f64 * h, i as f64 * h));
            }
        }
        GreenOperator { m, kernel }
    }

    /// `G(r, u)`.
    #[inline]
    pub fn kernel(r: f64, u: f64) -> f64 {
        let base = (u + 1.0) * (2.0 - r) / 3.0;
        if r <= u {
            base - (u - r)
        } else {
            base
        }
    }

    /// Tabulated `G(u_j, u_i)`.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.kernel[i * (self.m + 1) + j]
    }

    /// `f(u_i) = ∫₀¹ G(r, u_i) g(r) dr`.
    pub fn apply(&self, g: &[f64]) -> Vec<f64> {
        assert_eq!(g.len(), self.m + 1, "grid function has wrong length");
        let h = 1.0 / self.m as f64;
        let nodes = self.m + 1;
        (0..nodes)
            .map(|i| {
                let row = &self.kernel[i * nodes..(i + 1) * nodes];
                let prod: Vec<f64> = row.iter().zip(g).map(|(k, v)| k * v).collect();
                trapezoid(&prod, h)
            })
            .collect()
    }
}

/// `(−Δ)^{−1} g` for a grid function on `u_j = j/M`.
pub fn robin_inverse_laplacian(g: &[f64]) -> Vec<f64> {
    GreenOperator::new(g.len() - 1).apply(g)
}

/// Second-difference `−Δ_h f` with the ghost-node closures of `𝓗`.
pub fn robin_laplacian(f: &[f64]) -> Vec<f64> {
    let m = f.len() - 1;
    let h = 1.0 / m as f64;
    let h2 = h * h;
    let mut out = vec![0.0; m + 1];
    out[0] = -(2.0 * f[1] - 2.0 * f[0] - 2.0 * h * f[0]) / h2;
    for j in 1..m {
        out[j] = -(f[j - 1] - 2.0 * f[j] + f[j + 1]) / h2;
    }
    out[m] = -(2.0 * f[m - 1] - 2.0 * f[m] - 2.0 * h * f[m]) / h2;
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompositionReport {
    /// `max_{0<j<M} |−Δ_h (−Δ)^{−1} g − g|`.
    pub interior_max: f64,
    /// Same at the two closure rows.
    pub boundary_max: f64,
}

/// How far `−Δ_h ∘ (−Δ)^{−1}` is from the identity on `g`.
///
/// The ghost-node closure rows have a first-order local truncation error,
/// so they are reported separately from the interior.
pub fn composition_error(g: &[f64]) -> CompositionReport {
    let f = robin_inverse_laplacian(g);
    let back = robin_laplacian(&f);
    let m = g.len() - 1;
    let interior_max = (1..m)
        .map(|j| (back[j] - g[j]).abs())
        .fold(0.0, f64::max);
    let boundary_max = (back[0] - g[0]).abs().max((back[m] - g[m]).abs());
    CompositionReport {
        interior_max,
        boundary_max,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MembershipReport {
    pub slope_left: f64,
    pub slope_right: f64,
    /// `|f′(0) − f(0)|`.
    pub left_gap: f64,
    /// `|f′(1) + f(1)|`.
    pub right_gap: f64,
    pub pass: bool,
}

/// Checks `f′(0) = f(0)` and `f′(1) = −f(1)` with one-sided second-order
/// differences.
pub fn check_h_membership(f: &[f64], tol: f64) -> Result<MembershipReport> {
    if f.len() < 9 {
        return Err(Error::invalid(
            "f",
            format!("need a grid with M >= 8, got M = {}", f.len().saturating_sub(1)),
        ));
    }
    let m = f.len() - 1;
    let h = 1.0 / m as f64;
    let slope_left = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
    let slope_right = (3.0 * f[m] - 4.0 * f[m - 1] + f[m - 2]) / (2.0 * h);
    let left_gap = (slope_left - f[0]).abs();
    let right_gap = (slope_right + f[m]).abs();
    Ok(MembershipReport {
        slope_left,
        slope_right,
        left_gap,
        right_gap,
        pass: left_gap <= tol && right_gap <= tol,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniquenessReport {
    /// `⟨ρ_t, (−Δ)^{−1} ρ_t⟩`.
    pub quadratic_form: f64,
    /// `⟨ρ_0, (−Δ)^{−1} ρ_0⟩`.
    pub initial_quadratic_form: f64,
    /// `⟨ρ_t, (−Δ)^{−1} ρ_t⟩ − ⟨ρ_0, (−Δ)^{−1} ρ_0⟩`.
    pub lhs: f64,
    /// `−2 ∫₀ᵗ ⟨ρ_s, ρ_s⟩ ds`.
    pub rhs: f64,
    pub gap: f64,
}

/// Both sides of the energy identity
/// `⟨ρ_t,(−Δ)^{−1}ρ_t⟩ − ⟨ρ_0,(−Δ)^{−1}ρ_0⟩ = −2∫₀ᵗ⟨ρ_s,ρ_s⟩ds`
/// for a Robin solution with zero reservoir data.
pub fn uniqueness_identity_check(field: &GridField, t: f64) -> Result<UniquenessReport> {
    if field.bc != BoundaryKind::Robin || field.alpha != 0.0 || field.beta != 0.0 {
        return Err(Error::invalid(
            "field",
            "the identity holds for Robin solutions with alpha = beta = 0",
        ));
    }
    let k_end = field
        .snapshot_index(t)
        .ok_or_else(|| Error::invalid("t", format!("{t} is not a stored snapshot time")))?;
    let green = GreenOperator::new(field.m);
    let h = field.h();
    let form = |rho: &[f64]| {
        let f = green.apply(rho);
        let prod: Vec<f64> = rho.iter().zip(&f).map(|(a, b)| a * b).collect();
        trapezoid(&prod, h)
    };
    let l2 = |rho: &[f64]| {
        let sq: Vec<f64> = rho.iter().map(|v| v * v).collect();
        trapezoid(&sq, h)
    };
    let quadratic_form = form(&field.snapshots[k_end]);
    let initial_quadratic_form = form(&field.snapshots[0]);
    let mut integral = 0.0;
    for k in 1..=k_end {
        let dt = field.times[k] - field.times[k - 1];
        integral += 0.5 * dt * (l2(&field.snapshots[k - 1]) + l2(&field.snapshots[k]));
    }
    let lhs = quadratic_form - initial_quadratic_form;
    let rhs = -2.0 * integral;
    Ok(UniquenessReport {
        quadratic_form,
        initial_quadratic_form,
        lhs,
        rhs,
        gap: (lhs - rhs).abs(),
    })
}
