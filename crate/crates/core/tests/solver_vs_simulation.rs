mod common;

use attentive_core::design::{build_ctmc, build_reward_structures};
use attentive_core::rng::SimRng;
use attentive_core::sim::estimate_rewards;
use attentive_core::synthesis::{evaluate, GenotypeEnumerator};
use attentive_core::transient::expected_cumulative_rewards;
use attentive_core::SolverSettings;

#[test]
fn random_chains_fall_inside_the_interval() {
    let mut rng = SimRng::new(2024);
    let settings = SolverSettings::default();
    let mut inside = 0;
    let cases = 20;
    for case in 0..cases {
        let (ctmc, reward) = common::random_chain(&mut rng, 8);
        let horizon = 0.5 + 4.5 * rng.uniform();
        let exact = &expected_cumulative_rewards(&ctmc, core::slice::from_ref(&reward), horizon, &settings).unwrap()[0];
        let est = estimate_rewards(&ctmc, core::slice::from_ref(&reward), horizon, 20_000, 1000 * case).unwrap();
        if (est[0].mean - exact.value).abs() <= est[0].confidence_99_half_width + exact.error_bound {
            inside += 1;
        }
    }
    assert!(inside >= 18, "{inside}/{cases}");
}

#[test]
fn every_tiny_controller_agrees_with_simulation() {
    let spec = common::n2m1q1_mrm();
    let r = build_reward_structures(&spec).unwrap();
    let rewards = [r.nuisance, r.progress, r.risk];
    let settings = SolverSettings::default();
    for (k, g) in GenotypeEnumerator::new(&spec).enumerate() {
        let ctmc = build_ctmc(&spec, &g).unwrap();
        let exact = evaluate(&spec, &g, &settings).unwrap().as_array();
        let est = estimate_rewards(&ctmc, &rewards, spec.horizon_t, 20_000, 77 + k as u64).unwrap();
        for (e, x) in est.iter().zip(exact) {
            assert!(
                e.brackets(x) || (e.std_error == 0.0 && (e.mean - x).abs() <= 1e-9 * x.abs()),
                "{g}: {} +/- {} vs {x}",
                e.mean,
                e.confidence_99_half_width
            );
        }
    }
}

#[test]
fn three_level_controller_agrees_with_simulation() {
    let spec = common::three_level();
    let g = "3-2-1-0-7-6-5-4-1-1-1-1-6-6-6-6".parse().unwrap();
    let ctmc = build_ctmc(&spec, &g).unwrap();
    let r = build_reward_structures(&spec).unwrap();
    let rewards = [r.nuisance, r.progress, r.risk];
    let exact = expected_cumulative_rewards(&ctmc, &rewards, spec.horizon_t, &SolverSettings::default()).unwrap();
    let est = estimate_rewards(&ctmc, &rewards, spec.horizon_t, 4_000, 31).unwrap();
    for (e, x) in est.iter().zip(&exact) {
        assert!(e.brackets(x.value), "{} +/- {} vs {}", e.mean, e.confidence_99_half_width, x.value);
    }
}
