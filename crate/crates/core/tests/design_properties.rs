mod common;

use std::collections::BTreeSet;

use attentive_core::design::{build_ctmc, decode_option, ControllerGenotype};
use attentive_core::mape::{interpret_trajectory, TransitionFamily};
use attentive_core::sim::simulate;
use attentive_core::synthesis::{evaluate, exhaustive_pareto};
use attentive_core::{ProblemSpec, SolverSettings};
use proptest::prelude::*;

/// Alert/speed settings the controller can ever reach from the initial state.
fn reachable_settings(spec: &ProblemSpec, g: &ControllerGenotype) -> BTreeSet<(usize, usize)> {
    let mut seen = BTreeSet::from([(0, 0)]);
    loop {
        let mut grew = false;
        for (a, v) in seen.clone() {
            for level in 1..spec.n {
                let next = decode_option(spec, g.option(spec, level, a, v) as usize).unwrap();
                grew |= seen.insert(next);
            }
        }
        if !grew {
            return seen;
        }
    }
}

fn genotype(spec: &ProblemSpec) -> impl Strategy<Value = ControllerGenotype> {
    prop::collection::vec(0..spec.option_count() as u32, spec.genotype_len()).prop_map(ControllerGenotype::new)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn unreachable_options_do_not_change_objectives(
        g in genotype(&common::three_level()),
        noise in prop::collection::vec(0u32..8, 16),
    ) {
        let spec = common::three_level();
        let reach = reachable_settings(&spec, &g);
        let mut other = g.clone();
        for level in 1..spec.n {
            for a in 0..spec.alert_combinations() {
                for v in 0..spec.q {
                    if !reach.contains(&(a, v)) {
                        let i = ControllerGenotype::position(&spec, level, a, v);
                        other.options[i] = noise[i];
                    }
                }
            }
        }
        let s = SolverSettings::default();
        prop_assert_eq!(evaluate(&spec, &g, &s).unwrap().bits(), evaluate(&spec, &other, &s).unwrap().bits());
    }

    #[test]
    fn every_transition_is_classified(g in genotype(&common::three_level()), seed in any::<u64>(), mrm in any::<bool>()) {
        let mut spec = common::three_level();
        spec.mrm_enabled = mrm;
        spec.horizon_t = 1800.0;
        let traj = simulate(&build_ctmc(&spec, &g).unwrap(), spec.horizon_t, seed).unwrap();
        let events = interpret_trajectory(&spec, &traj).unwrap();
        prop_assert_eq!(events.len(), traj.events.len());
        if !mrm {
            prop_assert!(events.iter().all(|e| !matches!(e.family, TransitionFamily::MrmTimeout | TransitionFamily::MrmComplete)));
        }
    }
}

fn front_genotypes(spec: &ProblemSpec) -> BTreeSet<ControllerGenotype> {
    exhaustive_pareto(spec, &SolverSettings::default(), 1024)
        .unwrap()
        .entries
        .into_iter()
        .map(|(g, _)| g)
        .collect()
}

#[test]
fn scaling_nuisance_keeps_the_pareto_set() {
    let spec = common::n2m2q1();
    let base = front_genotypes(&spec);
    for factor in [4.0, 0.25, 3.0] {
        let mut scaled = spec.clone();
        for x in scaled.nuisance.iter_mut() {
            *x *= factor;
        }
        assert_eq!(front_genotypes(&scaled), base, "factor {factor}");
    }
}

#[test]
fn mrm_enabled_spec_has_a_reachable_mrm_state() {
    let spec = common::n2m1q1_mrm();
    let g = ControllerGenotype::zeros(&spec);
    let ctmc = build_ctmc(&spec, &g).unwrap();
    let mrm = spec.mrm_state().unwrap();
    assert!(ctmc.reachable()[mrm]);
    let o = evaluate(&spec, &g, &SolverSettings::default()).unwrap();
    let mut off = spec.clone();
    off.mrm_enabled = false;
    let o_off = evaluate(&off, &g, &SolverSettings::default()).unwrap();
    assert!(o.risk > o_off.risk, "{} vs {}", o.risk, o_off.risk);
}
