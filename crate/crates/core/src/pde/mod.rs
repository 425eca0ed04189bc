//! Finite-difference solvers and checks for the three limiting heat
//! equations.

mod green;
mod heat;
mod weak;

pub use green::{
    check_h_membership, composition_error, robin_inverse_laplacian, robin_laplacian,
    uniqueness_identity_check, CompositionReport, GreenOperator, MembershipReport,
    UniquenessReport,
};
pub use heat::{solve_heat, GridField, GridMetadata, HeatProblem};
pub use weak::{weak_residual, ExpTimeTest, SpaceTimeTest};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::profile::LinearProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryKind {
    /// `ρ(t,0) = α`, `ρ(t,1) = β`.
    Dirichlet,
    /// `∂_u ρ(t,0) = ρ(t,0) − α`, `∂_u ρ(t,1) = β − ρ(t,1)`.
    Robin,
    /// Zero flux at both ends.
    Neumann,
}

impl BoundaryKind {
    /// Boundary regime selected by the slowdown exponent.
    pub fn for_theta(theta: f64) -> Self {
        if theta < 1.0 {
            BoundaryKind::Dirichlet
        } else if theta == 1.0 {
            BoundaryKind::Robin
        } else {
            BoundaryKind::Neumann
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BoundaryKind::Dirichlet => "dirichlet",
            BoundaryKind::Robin => "robin",
            BoundaryKind::Neumann => "neumann",
        }
    }
}

impl fmt::Display for BoundaryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BoundaryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dirichlet" => Ok(BoundaryKind::Dirichlet),
            "robin" => Ok(BoundaryKind::Robin),
            "neumann" => Ok(BoundaryKind::Neumann),
            _ => Err(Error::invalid(
                "bc",
                format!("expected dirichlet, robin or neumann, got `{s}`"),
            )),
        }
    }
}

/// Stationary solution of the heat equation with the given boundary data.
pub fn stationary_solution(bc: BoundaryKind, alpha: f64, beta: f64) -> LinearProfile {
    match bc {
        BoundaryKind::Dirichlet => LinearProfile {
            slope: beta - alpha,
            intercept: alpha,
        },
        BoundaryKind::Robin => {
            let slope = (beta - alpha) / 3.0;
            LinearProfile {
                slope,
                intercept: alpha + slope,
            }
        }
        BoundaryKind::Neumann => LinearProfile::constant((alpha + beta) / 2.0),
    }
}
