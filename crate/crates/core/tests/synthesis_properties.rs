mod common;

use attentive_core::pareto::dominated_pairs;
use attentive_core::synthesis::{exhaustive_pareto, nsga2_with, reference_point, CachedEvaluator};
use attentive_core::{GaSettings, SolverSettings};

#[test]
fn ga_matches_the_exhaustive_front_on_256_controllers() {
    let spec = common::n2m2q1();
    let solver = SolverSettings::default();
    let exact = exhaustive_pareto(&spec, &solver, 1024).unwrap();
    assert_eq!(dominated_pairs(&exact.objectives()), 0);
    let reference = reference_point(&spec);
    let target = exact.hypervolume(&reference).unwrap();
    let mut good = 0;
    for seed in 1..=5 {
        let ga = GaSettings { population_size: 32, generations: 50, seed, ..GaSettings::default() };
        let mut ev = CachedEvaluator::new(&spec, solver).unwrap();
        let out = nsga2_with(&spec, &ga, &mut ev, &reference, &mut |_| {}).unwrap();
        assert_eq!(dominated_pairs(&out.front.objectives()), 0);
        if out.front.hypervolume(&reference).unwrap() >= 0.99 * target {
            good += 1;
        }
    }
    assert!(good >= 4, "{good}/5");
}

#[test]
fn archive_hypervolume_never_decreases() {
    let spec = common::three_level();
    let ga = GaSettings { population_size: 20, generations: 15, seed: 4, ..GaSettings::default() };
    let mut ev = CachedEvaluator::new(&spec, SolverSettings::default()).unwrap();
    let out = nsga2_with(&spec, &ga, &mut ev, &reference_point(&spec), &mut |_| {}).unwrap();
    assert_eq!(out.progress.len(), 16);
    for w in out.progress.windows(2) {
        assert!(w[1].hypervolume >= w[0].hypervolume, "{w:?}");
        assert!(w[1].evaluations >= w[0].evaluations);
    }
    assert_eq!(dominated_pairs(&out.front.objectives()), 0);
}
