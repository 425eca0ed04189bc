//! Residuals of the weak formulations.
//!
//! For a test function `H(s,u)` the residual at time `t` is
//! `⟨ρ_t,H_t⟩ − ⟨γ,H_0⟩ − ∫₀ᵗ ⟨ρ_s,(∂_s+Δ)H_s⟩ ds − ∫₀ᵗ B_s ds`, with the
//! boundary integrand `B_s` depending on the boundary kind:
//!
//! * Dirichlet: `−(β ∂_uH_s(1) − α ∂_uH_s(0))`, and `H` must vanish at 0, 1;
//! * Robin: `ρ_s(0)∂_uH_s(0) − ρ_s(1)∂_uH_s(1) + H_s(0)(α−ρ_s(0)) + H_s(1)(β−ρ_s(1))`;
//! * Neumann: `−(ρ_s(1)∂_uH_s(1) − ρ_s(0)∂_uH_s(0))`.
//!
//! Boundary traces are the end values of the grid. Space and time integrals
//! use the trapezoid rule on the grid and on the stored snapshots.

use super::heat::{trapezoid, GridField};
use super::BoundaryKind;
use crate::error::{Error, Result};
use crate::profile::TestFunction;

/// A test function `H ∈ C^{1,2}([0,T]×[0,1])`.
pub trait SpaceTimeTest {
    fn value(&self, s: f64, u: f64) -> f64;
    fn ds(&self, s: f64, u: f64) -> f64;
    fn du(&self, s: f64, u: f64) -> f64;
    fn duu(&self, s: f64, u: f64) -> f64;
}

impl SpaceTimeTest for TestFunction {
    fn value(&self, _: f64, u: f64) -> f64 {
        TestFunction::value(self, u)
    }
    fn ds(&self, _: f64, _: f64) -> f64 {
        0.0
    }
    fn du(&self, _: f64, u: f64) -> f64 {
        self.derivative(u)
    }
    fn duu(&self, _: f64, u: f64) -> f64 {
        self.second_derivative(u)
    }
}

/// `H(s,u) = e^{rate·s} G(u)`.
#[derive(Debug, Clone, Copy)]
pub struct ExpTimeTest {
    pub rate: f64,
    pub space: TestFunction,
}

impl SpaceTimeTest for ExpTimeTest {
    fn value(&self, s: f64, u: f64) -> f64 {
        (self.rate * s).exp() * self.space.value(u)
    }
    fn ds(&self, s: f64, u: f64) -> f64 {
        self.rate * self.value(s, u)
    }
    fn du(&self, s: f64, u: f64) -> f64 {
        (self.rate * s).exp() * self.space.derivative(u)
    }
    fn duu(&self, s: f64, u: f64) -> f64 {
        (self.rate * s).exp() * self.space.second_derivative(u)
    }
}

fn pairing(field: &GridField, k: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = field.h();
    let prod: Vec<f64> = field.snapshots[k]
        .iter()
        .enumerate()
        .map(|(j, r)| r * f(j as f64 * h))
        .collect();
    trapezoid(&prod, h)
}

/// Signed residual of the weak formulation matching `field.bc`, evaluated at
/// the snapshot time `t`.
pub fn weak_residual(field: &GridField, test: &impl SpaceTimeTest, t: f64) -> Result<f64> {
    let k_end = field.snapshot_index(t).ok_or_else(|| {
        Error::invalid("t", format!("{t} is not one of the stored snapshot times"))
    })?;
    if field.bc == BoundaryKind::Dirichlet {
        for &s in &field.times[..=k_end] {
            let (h0, h1) = (test.value(s, 0.0), test.value(s, 1.0));
            if h0.abs() > 1e-10 || h1.abs() > 1e-10 {
                return Err(Error::invalid(
                    "H",
                    format!(
                        "Dirichlet test functions must vanish at u = 0 and u = 1 \
                         (H({s},0) = {h0}, H({s},1) = {h1})"
                    ),
                ));
            }
        }
    }

    let (alpha, beta) = (field.alpha, field.beta);
    let integrand = |k: usize| -> f64 {
        let s = field.times[k];
        let rho = &field.snapshots[k];
        let (r0, r1) = (rho[0], rho[field.m]);
        let bulk = pairing(field, k, |u| test.ds(s, u) + test.duu(s, u));
        let boundary = match field.bc {
            BoundaryKind::Dirichlet => -(beta * test.du(s, 1.0) - alpha * test.du(s, 0.0)),
            BoundaryKind::Robin => {
                r0 * test.du(s, 0.0) - r1 * test.du(s, 1.0)
                    + test.value(s, 0.0) * (alpha - r0)
                    + test.value(s, 1.0) * (beta - r1)
            }
            BoundaryKind::Neumann => -(r1 * test.du(s, 1.0) - r0 * test.du(s, 0.0)),
        };
        bulk + boundary
    };

    let mut time_integral = 0.0;
    let mut prev = integrand(0);
    for k in 1..=k_end {
        let cur = integrand(k);
        time_integral += 0.5 * (field.times[k] - field.times[k - 1]) * (prev + cur);
        prev = cur;
    }
    let lhs = pairing(field, k_end, |u| test.value(t, u)) - pairing(field, 0, |u| test.value(0.0, u));
    Ok(lhs - time_integral)
}
