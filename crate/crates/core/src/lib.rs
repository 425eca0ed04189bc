//! Simulation and verification toolkit for the one-dimensional symmetric
//! simple exclusion process with slow boundary reservoirs.
//!
//! The crate is organised around four layers:
//!
//! * [`lattice`] and [`martingale`]: an exact continuous-time simulator of the
//!   particle system in diffusive time, with empirical-measure pairings and
//!   the Dynkin martingale of a test function.
//! * [`hydrostatics`]: exact oracles for the stationary state (mean profile,
//!   two-point function on the triangle, absorbed-walk occupation times) and
//!   Monte Carlo estimators that are checked against them.
//! * [`pde`]: Crank–Nicolson solvers for the heat equation with Dirichlet,
//!   Robin and Neumann boundary data, weak-formulation residuals and the
//!   Robin inverse Laplacian.
//! * [`experiments`]: the harness tying the lattice process to the oracles,
//!   with CSV/JSON reports.

pub mod error;
pub mod experiments;
pub mod hydrostatics;
pub mod lattice;
pub mod linalg;
pub mod martingale;
pub mod pde;
pub mod profile;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use lattice::{Configuration, Event, EventLog, ModelParams, RateTable};
pub use profile::{LinearProfile, Profile, TestFunction};
