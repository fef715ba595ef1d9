#![allow(dead_code)]

use attentive_core::rng::SimRng;
use attentive_core::{Ctmc, ProblemSpec, RewardStructure};

/// Degradation rates scale with `deg[alerts]`, recovery with `rec[alerts]`
/// and by `slow` at reduced speed.
fn fill_rates(spec: &mut ProblemSpec, base: &[(usize, usize, f64)], deg: &[f64], rec: &[f64], slow: f64) {
    for &(from, to, rate) in base {
        for a in 0..spec.alert_combinations() {
            for v in 0..spec.q {
                let r = if to > from {
                    rate * deg[a]
                } else {
                    rate * rec[a] * if v == 1 { slow } else { 1.0 }
                };
                spec.set_driver_rate(from, to, a, v, r);
            }
        }
    }
}

pub fn three_level() -> ProblemSpec {
    let mut s = ProblemSpec::zeroed(3, 2, 2);
    s.nuisance = vec![0.0, 0.2, 0.3, 0.6];
    s.progress = vec![1.0 / 60.0, 1.0 / 90.0];
    s.risk = vec![vec![1e-5, 5e-6], vec![5e-5, 2.5e-5], vec![4e-4, 1.5e-4]];
    s.risk_mrm = 0.05;
    s.mrm_timeout_tau = 15.0;
    s.controller_action_rate = 2.0;
    s.timer_rate = 1.0 / 30.0;
    s.horizon_t = 4.0 * 3600.0;
    fill_rates(
        &mut s,
        &[(0, 1, 1.0 / 300.0), (0, 2, 1.0 / 1800.0), (1, 2, 1.0 / 240.0), (1, 0, 1.0 / 120.0), (2, 1, 1.0 / 90.0), (2, 0, 1.0 / 600.0)],
        &[1.0, 0.6, 0.5, 0.35],
        &[1.0, 3.0, 4.0, 6.0],
        1.2,
    );
    s
}

pub fn n2m2q1() -> ProblemSpec {
    let mut s = ProblemSpec::zeroed(2, 2, 1);
    s.nuisance = vec![0.0, 0.2, 0.3, 0.6];
    s.progress = vec![1.0 / 60.0];
    s.risk = vec![vec![1e-5], vec![4e-4]];
    s.risk_mrm = 0.05;
    s.controller_action_rate = 2.0;
    s.timer_rate = 1.0 / 30.0;
    s.horizon_t = 3600.0;
    fill_rates(&mut s, &[(0, 1, 1.0 / 400.0), (1, 0, 1.0 / 150.0)], &[1.0, 0.6, 0.5, 0.35], &[1.0, 3.0, 4.0, 6.0], 1.0);
    s
}

pub fn n2m1q1_mrm() -> ProblemSpec {
    let mut s = ProblemSpec::zeroed(2, 1, 1);
    s.nuisance = vec![0.0, 0.5];
    s.progress = vec![1.0 / 60.0];
    s.risk = vec![vec![1e-5], vec![4e-4]];
    s.risk_mrm = 0.05;
    s.mrm_enabled = true;
    s.controller_action_rate = 2.0;
    s.timer_rate = 1.0 / 30.0;
    s.horizon_t = 1800.0;
    fill_rates(&mut s, &[(0, 1, 1.0 / 200.0), (1, 0, 1.0 / 100.0)], &[1.0, 0.5], &[1.0, 5.0], 1.0);
    s
}

/// Random chain with 2 to `max_states` states and a random reward. No state
/// is absorbing.
pub fn random_chain(rng: &mut SimRng, max_states: usize) -> (Ctmc, RewardStructure) {
    let n = 2 + rng.below(max_states as u64 - 1) as usize;
    let mut rows = vec![Vec::new(); n];
    for (s, row) in rows.iter_mut().enumerate() {
        for t in 0..n {
            if t != s && rng.chance(0.4) {
                row.push((t, 0.1 + 1.9 * rng.uniform()));
            }
        }
        if row.is_empty() {
            let t = (s + 1 + rng.below(n as u64 - 1) as usize) % n;
            row.push((t, 0.1 + 1.9 * rng.uniform()));
        }
    }
    let ctmc = Ctmc::from_rows(n, rng.below(n as u64) as usize, &rows);
    let mut reward = RewardStructure::zero(n);
    for r in reward.state_rates.iter_mut() {
        *r = rng.uniform();
    }
    for (s, row) in rows.iter().enumerate() {
        for &(t, _) in row {
            if rng.chance(0.3) {
                reward = reward.with_transition(s, t, rng.uniform());
            }
        }
    }
    (ctmc, reward)
}
