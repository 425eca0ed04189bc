use proptest::prelude::*;
use slowb_core::lattice::{rates, run_until, sample_event, simulate_until};
use slowb_core::rng::stream_rng;
use slowb_core::stats::{ks_one_sample, Moments};
use slowb_core::{Configuration, Event, ModelParams};

#[test]
fn frozen_state_waiting_times_are_exponential() {
    let params = ModelParams::new(12, 0.3, 0.6, 1.0).unwrap();
    let config = Configuration::from_occupancy(
        [1, 0, 0, 1, 1, 0, 1, 0, 1, 1, 0].iter().map(|&b| b == 1).collect(),
    );
    let total = rates(&config, &params).total_rate;
    let mut rng = stream_rng(404, 0);
    let waits: Vec<f64> = (0..10_000)
        .map(|_| sample_event(&config, &params, &mut rng).1)
        .collect();
    let ks = ks_one_sample(&waits, |t| 1.0 - (-total * t).exp());
    assert!(ks.passes(0.01), "{ks:?}");
}

#[test]
fn equal_reservoirs_keep_product_bernoulli_invariant() {
    let rho = 0.3;
    let params = ModelParams::new(20, rho, rho, 1.0).unwrap();
    let replicas = 2000;
    let mut sites = vec![Moments::default(); params.sites()];
    for r in 0..replicas {
        let mut rng = stream_rng(77, r);
        let mut c = Configuration::sample(&params, |_| rho, &mut rng).unwrap();
        simulate_until(&mut c, &params, 0.3, &mut rng);
        for (x, m) in sites.iter_mut().enumerate() {
            m.push(c.eta(x + 1));
        }
    }
    for (x, m) in sites.iter().enumerate() {
        let z = (m.mean - rho).abs() / m.std_error();
        assert!(z <= 4.0, "site {}: mean {} z {z}", x + 1, m.mean);
    }
}

#[test]
fn same_seed_same_final_configuration() {
    let params = ModelParams::new(30, 0.1, 0.9, 0.5).unwrap();
    let run = || {
        let mut rng = stream_rng(5, 2);
        let mut c = Configuration::sample(&params, |u| u, &mut rng).unwrap();
        simulate_until(&mut c, &params, 0.2, &mut rng);
        c
    };
    assert_eq!(run(), run());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn only_boundary_flips_change_mass(
        n in 3usize..40,
        alpha in 0.01..0.99f64,
        beta in 0.01..0.99f64,
        theta in 0.0..3.0f64,
        seed in any::<u64>(),
        t in 0.0..0.05f64,
    ) {
        let params = ModelParams::new(n, alpha, beta, theta).unwrap();
        let mut rng = stream_rng(seed, 0);
        let mut config = Configuration::sample(&params, |u| u * (1.0 - u) * 4.0 * 0.9, &mut rng).unwrap();
        let start = config.particle_count() as i64;
        let mut shadow = config.clone();
        let mut ok = true;
        let target = params.micro_duration(t);
        let log = run_until(&mut config, &params, target, &mut rng, |_, event, _| {
            let before = shadow.particle_count() as i64;
            shadow.apply(event);
            let delta = shadow.particle_count() as i64 - before;
            ok &= match event {
                Event::Bond(_) => delta == 0,
                Event::LeftFlip | Event::RightFlip => delta.abs() == 1,
            };
        });
        prop_assert!(ok);
        prop_assert_eq!(shadow.occupancy(), config.occupancy());
        prop_assert_eq!(config.particle_count() as i64 - start, log.net_injection());
        prop_assert_eq!(config.micro_time, target);
    }
}
