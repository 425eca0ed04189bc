//! Stationary-state oracles and estimators.

mod covariance;
mod mean;
mod stationary;
mod walk;

pub use covariance::{
    apply_conductance_laplacian, covariance_solve, occupation_time_exact_theta0,
    occupation_times, CovarianceField, TriangleField, ITERATIVE_THRESHOLD,
};
pub use mean::{mean_profile_closed_form, mean_profile_recurrence, MeanProfile};
pub use stationary::{stationary_mc_estimate, PairCovariance, StationaryEstimate, StationaryRun};
pub use walk::{
    occupation_time_mc, occupation_time_samples, CouplingOutcome, OccupationEstimate, Triangle,
    DEFAULT_MAX_STEPS,
};

use crate::profile::LinearProfile;

/// Limiting stationary profile of the lattice process for boundary exponent
/// `theta`: the line through `α` and `β` for `θ < 1`, the line with slope
/// `(β−α)/3` for `θ = 1`, and the constant `(α+β)/2` for `θ > 1`.
pub fn stationary_profile(theta: f64, alpha: f64, beta: f64) -> LinearProfile {
    if theta < 1.0 {
        LinearProfile {
            slope: beta - alpha,
            intercept: alpha,
        }
    } else if theta == 1.0 {
        let slope = (beta - alpha) / 3.0;
        LinearProfile {
            slope,
            intercept: alpha + slope,
        }
    } else {
        LinearProfile::constant((alpha + beta) / 2.0)
    }
}
