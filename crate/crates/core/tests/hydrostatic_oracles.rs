use proptest::prelude::*;
use slowb_core::hydrostatics::{
    apply_conductance_laplacian, covariance_solve, mean_profile_closed_form,
    mean_profile_recurrence, occupation_time_mc, occupation_times, stationary_profile,
};
use slowb_core::ModelParams;

fn max_profile_gap(n: usize, theta: f64) -> f64 {
    let (alpha, beta) = (0.2, 0.8);
    let params = ModelParams::new(n, alpha, beta, theta).unwrap();
    let exact = mean_profile_closed_form(&params);
    let limit = stationary_profile(theta, alpha, beta);
    (1..n)
        .map(|x| (exact.at(x) - limit.value(x as f64 / n as f64)).abs())
        .fold(0.0, f64::max)
}

#[test]
fn discrete_profile_approaches_its_limit_as_n_doubles() {
    for theta in [0.5, 1.0, 2.0] {
        let gaps: Vec<f64> = [10, 20, 40, 80, 160].iter().map(|&n| max_profile_gap(n, theta)).collect();
        assert!(gaps.windows(2).all(|w| w[1] < w[0]), "θ={theta}: {gaps:?}");
    }
    // At θ = 0 the discrete profile is the sampled limit line.
    for n in [10, 20, 40] {
        assert!(max_profile_gap(n, 0.0) < 1e-15);
    }
}

#[test]
fn correlations_vanish_as_n_doubles() {
    for theta in [0.0, 1.0, 2.0] {
        let maxima: Vec<f64> = [10, 20, 40, 80]
            .iter()
            .map(|&n| {
                let params = ModelParams::new(n, 0.2, 0.8, theta).unwrap();
                covariance_solve(&params).unwrap().phi.max_abs()
            })
            .collect();
        assert!(maxima.windows(2).all(|w| w[1] < w[0]), "θ={theta}: {maxima:?}");
    }
}

#[test]
fn occupation_time_monte_carlo_matches_the_linear_solve() {
    for (n, theta, u) in [(12, 0.5, (3, 7)), (9, 2.0, (4, 5))] {
        let params = ModelParams::new(n, 0.2, 0.8, theta).unwrap();
        let exact = occupation_times(n, theta).unwrap().get(u.0, u.1);
        let est = occupation_time_mc(u, &params, 20_000, 31).unwrap();
        let z = (est.estimate - exact).abs() / est.std_error;
        assert!(z <= 4.0, "N={n} θ={theta}: {} ± {} vs {exact}", est.estimate, est.std_error);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn closed_form_mean_equals_recurrence(
        n in 3usize..400,
        alpha in 0.01..0.99f64,
        beta in 0.01..0.99f64,
        theta in 0.0..3.0f64,
    ) {
        let params = ModelParams::new(n, alpha, beta, theta).unwrap();
        let closed = mean_profile_closed_form(&params);
        let rec = mean_profile_recurrence(&params).unwrap();
        prop_assert!(closed.max_abs_diff(&rec) <= 1e-12);
    }

    #[test]
    fn covariance_is_non_positive_and_solves_its_equation(
        n in 3usize..40,
        alpha in 0.01..0.99f64,
        beta in 0.01..0.99f64,
        theta in 0.0..3.0f64,
    ) {
        let params = ModelParams::new(n, alpha, beta, theta).unwrap();
        let field = covariance_solve(&params).unwrap();
        prop_assert!(field.phi.max_value() <= 1e-14);
        let lap = apply_conductance_laplacian(&field.phi, theta);
        let a2 = field.a_n * field.a_n;
        for (x, y) in lap.interior_points() {
            let want = if y == x + 1 { a2 } else { 0.0 };
            prop_assert!((lap.get(x, y) - want).abs() <= 1e-10);
        }
    }
}
