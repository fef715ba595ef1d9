//! Transient distributions and expected cumulative rewards by uniformization.
//!
//! With uniformization rate `L = 1.02 * max_exit_rate` (over reachable states) and `P = I + Q / L`,
//! the distribution at time `t` is `sum_k Poisson(k; L t) * pi0 P^k`, and the
//! expected time spent in each state over `[0, T]` is
//! `(1 / L) * sum_k P(N > k) * pi0 P^k` with `N ~ Poisson(L T)`. Every reward
//! is a linear functional of that occupancy vector, so one pass serves any
//! number of reward structures. The expected number of firings of an edge
//! `(s, t)` equals `occupancy(s) * R(s, t)`, which folds transition rewards
//! into an effective per-state rate.

use alloc::format;
use alloc::vec::Vec;

use crate::ctmc::{Ctmc, RewardStructure};
use crate::poisson::{poisson_truncation, PoissonWeights};
use crate::{Error, Result};

/// Uniformization rate padding over the maximal exit rate.
pub const UNIFORMIZATION_PADDING: f64 = 1.02;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    /// Budget for the Poisson mass dropped by truncation.
    pub epsilon: f64,
    /// Cap on the right truncation index (uniformization steps).
    pub max_iterations: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            epsilon: 1e-9,
            max_iterations: 10_000_000,
        }
    }
}

impl SolverSettings {
    pub fn with_epsilon(epsilon: f64) -> Self {
        SolverSettings {
            epsilon,
            ..Self::default()
        }
    }

    pub fn check(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::input(format!(
                "solver epsilon must lie in (0, 1), got {}",
                self.epsilon
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::input("solver max_iterations must be positive"));
        }
        Ok(())
    }
}

/// Expected time spent in each state during `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Occupancy {
    pub per_state: Vec<f64>,
    pub horizon: f64,
    /// 0 when the chain has no transitions.
    pub uniformization_rate: f64,
    pub steps: usize,
}

impl Occupancy {
    /// `sum_s occupancy(s) * exit_rate(s)`: expected number of jumps.
    pub fn expected_jumps(&self, ctmc: &Ctmc) -> f64 {
        self.per_state
            .iter()
            .enumerate()
            .map(|(s, occ)| occ * ctmc.edges(s).map(|(_, r)| r).sum::<f64>())
            .sum()
    }
}

/// A cumulative reward value with its truncation error bound
/// `epsilon * (max r1 * T + max r2 * expected jumps)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardValue {
    pub value: f64,
    pub error_bound: f64,
}

fn check_horizon(t: f64) -> Result<()> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::input(format!("time must be finite and >= 0, got {t}")));
    }
    Ok(())
}

fn check_initial(ctmc: &Ctmc) -> Result<()> {
    if ctmc.initial_state() >= ctmc.num_states() {
        return Err(Error::input("initial state out of range"));
    }
    Ok(())
}

/// One uniformized DTMC step with precomputed self- and edge-probabilities.
struct Stepper<'a> {
    stay: Vec<f64>,
    row_start: &'a [usize],
    targets: &'a [usize],
    jump: Vec<f64>,
}

impl<'a> Stepper<'a> {
    fn new(ctmc: &'a Ctmc, rate: f64) -> Self {
        let (row_start, targets, rates) = ctmc.csr();
        let stay = (0..ctmc.num_states())
            .map(|s| {
                let exit: f64 = rates[row_start[s]..row_start[s + 1]].iter().sum();
                1.0 - exit / rate
            })
            .collect();
        let jump = rates.iter().map(|r| r / rate).collect();
        Stepper {
            stay,
            row_start,
            targets,
            jump,
        }
    }

    fn step(&self, from: &[f64], to: &mut [f64]) {
        for (t, (x, stay)) in to.iter_mut().zip(from.iter().zip(&self.stay)) {
            *t = x * stay;
        }
        for (s, &mass) in from.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            for e in self.row_start[s]..self.row_start[s + 1] {
                to[self.targets[e]] += mass * self.jump[e];
            }
        }
    }
}

/// Maximal exit rate over states reachable from the initial state; states
/// that can never carry probability mass do not constrain uniformization.
fn reachable_max_exit(ctmc: &Ctmc) -> f64 {
    ctmc.reachable()
        .iter()
        .enumerate()
        .filter(|(_, &r)| r)
        .map(|(s, _)| ctmc.edges(s).map(|(_, r)| r).sum::<f64>())
        .fold(0.0, f64::max)
}

fn weights_for(lambda: f64, settings: &SolverSettings) -> Result<PoissonWeights> {
    settings.check()?;
    poisson_truncation(lambda, settings.epsilon, settings.max_iterations)
}

/// `P(N > k)` for `k = 0..=right`.
///
/// Masses below the window come from continuing the ratio recurrence down to
/// zero, so the only unknown is the mass omitted above the window, which is
/// then `1 - sum` and is added back to every term.
fn survival_function(weights: &PoissonWeights, lambda: f64) -> Vec<f64> {
    let mut pmf = Vec::with_capacity(weights.right + 1);
    let mut w = weights.weights[0];
    for k in (1..=weights.left).rev() {
        w *= k as f64 / lambda;
        pmf.push(w);
    }
    pmf.reverse();
    pmf.extend_from_slice(&weights.weights);
    let total: f64 = pmf.iter().sum();
    let omitted_right = (1.0 - total).max(0.0);
    let mut survival = alloc::vec![0.0; pmf.len()];
    let mut acc = 0.0;
    for k in (0..pmf.len()).rev() {
        survival[k] = acc + omitted_right;
        acc += pmf[k];
    }
    survival
}

/// State distribution at time `t`, starting from the initial state.
pub fn transient_distribution(ctmc: &Ctmc, t: f64, settings: &SolverSettings) -> Result<Vec<f64>> {
    check_horizon(t)?;
    check_initial(ctmc)?;
    settings.check()?;
    let n = ctmc.num_states();
    let mut pi = alloc::vec![0.0; n];
    pi[ctmc.initial_state()] = 1.0;
    let max_exit = reachable_max_exit(ctmc);
    if t == 0.0 || max_exit == 0.0 {
        return Ok(pi);
    }
    let rate = UNIFORMIZATION_PADDING * max_exit;
    let weights = weights_for(rate * t, settings)?;
    let stepper = Stepper::new(ctmc, rate);
    let mut out = alloc::vec![0.0; n];
    let mut next = alloc::vec![0.0; n];
    for k in 0..=weights.right {
        let w = weights.weight(k);
        if w != 0.0 {
            for (o, p) in out.iter_mut().zip(&pi) {
                *o += w * p;
            }
        }
        if k < weights.right {
            stepper.step(&pi, &mut next);
            core::mem::swap(&mut pi, &mut next);
        }
    }
    Ok(out)
}

/// Expected time spent in each state over `[0, horizon]`.
pub fn cumulative_occupancy(ctmc: &Ctmc, horizon: f64, settings: &SolverSettings) -> Result<Occupancy> {
    check_horizon(horizon)?;
    check_initial(ctmc)?;
    settings.check()?;
    let n = ctmc.num_states();
    let mut per_state = alloc::vec![0.0; n];
    let max_exit = reachable_max_exit(ctmc);
    if max_exit == 0.0 {
        per_state[ctmc.initial_state()] = horizon;
        return Ok(Occupancy {
            per_state,
            horizon,
            uniformization_rate: 0.0,
            steps: 0,
        });
    }
    if horizon == 0.0 {
        return Ok(Occupancy {
            per_state,
            horizon,
            uniformization_rate: 0.0,
            steps: 0,
        });
    }
    let rate = UNIFORMIZATION_PADDING * max_exit;
    let lambda = rate * horizon;
    let weights = weights_for(lambda, settings)?;
    let survival = survival_function(&weights, lambda);

    let stepper = Stepper::new(ctmc, rate);
    let mut pi = alloc::vec![0.0; n];
    pi[ctmc.initial_state()] = 1.0;
    let mut next = alloc::vec![0.0; n];
    let last = weights.right;
    for &c in survival.iter().take(last) {
        for (o, p) in per_state.iter_mut().zip(&pi) {
            *o += c * p;
        }
        stepper.step(&pi, &mut next);
        core::mem::swap(&mut pi, &mut next);
    }
    for o in per_state.iter_mut() {
        *o /= rate;
    }
    Ok(Occupancy {
        per_state,
        horizon,
        uniformization_rate: rate,
        steps: last,
    })
}

fn check_reward(ctmc: &Ctmc, reward: &RewardStructure) -> Result<()> {
    if reward.state_rates.len() != ctmc.num_states() {
        return Err(Error::input(format!(
            "reward structure has {} state rates, chain has {} states",
            reward.state_rates.len(),
            ctmc.num_states()
        )));
    }
    for &(s, t) in reward.transition_rewards.keys() {
        if !ctmc.has_transition(s, t) {
            return Err(Error::input(format!("dangling transition reward on {s}->{t}")));
        }
    }
    Ok(())
}

/// Evaluates one reward structure against a precomputed occupancy vector.
pub fn reward_from_occupancy(
    ctmc: &Ctmc,
    occupancy: &Occupancy,
    reward: &RewardStructure,
    epsilon: f64,
) -> Result<RewardValue> {
    check_reward(ctmc, reward)?;
    let effective = reward.effective_rates(ctmc);
    let value = occupancy
        .per_state
        .iter()
        .zip(&effective)
        .map(|(o, r)| o * r)
        .sum();
    let max_state = reward.state_rates.iter().copied().fold(0.0, f64::max);
    let max_transition = reward.transition_rewards.values().copied().fold(0.0, f64::max);
    let jumps = if max_transition > 0.0 {
        occupancy.expected_jumps(ctmc)
    } else {
        0.0
    };
    Ok(RewardValue {
        value,
        error_bound: epsilon * (max_state * occupancy.horizon + max_transition * jumps),
    })
}

/// Expected reward accumulated over `[0, horizon]`: `R{X}=? [C<=T]`.
pub fn expected_cumulative_reward(
    ctmc: &Ctmc,
    reward: &RewardStructure,
    horizon: f64,
    settings: &SolverSettings,
) -> Result<f64> {
    check_reward(ctmc, reward)?;
    let occupancy = cumulative_occupancy(ctmc, horizon, settings)?;
    Ok(reward_from_occupancy(ctmc, &occupancy, reward, settings.epsilon)?.value)
}

/// Several cumulative rewards from a single uniformization pass.
pub fn expected_cumulative_rewards(
    ctmc: &Ctmc,
    rewards: &[RewardStructure],
    horizon: f64,
    settings: &SolverSettings,
) -> Result<Vec<RewardValue>> {
    for r in rewards {
        check_reward(ctmc, r)?;
    }
    let occupancy = cumulative_occupancy(ctmc, horizon, settings)?;
    rewards
        .iter()
        .map(|r| reward_from_occupancy(ctmc, &occupancy, r, settings.epsilon))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn absorbing_pair(lambda: f64) -> Ctmc {
        Ctmc::from_rows(2, 0, &[vec![(1, lambda)], vec![]])
    }

    #[test]
    fn distribution_at_time_zero_is_the_initial_indicator() {
        let c = Ctmc::from_rows(3, 1, &[vec![(1, 1.0)], vec![(2, 2.0)], vec![(0, 3.0)]]);
        let pi = transient_distribution(&c, 0.0, &SolverSettings::default()).unwrap();
        assert_eq!(pi, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn single_exponential_distribution() {
        let pi = transient_distribution(&absorbing_pair(1.0), 1.0, &SolverSettings::default()).unwrap();
        let e = (-1.0f64).exp();
        assert!((pi[0] - e).abs() < 1e-8);
        assert!((pi[1] - (1.0 - e)).abs() < 1e-8);
        assert!((pi[0] - 0.367_879_441).abs() < 1e-8);
    }

    #[test]
    fn one_state_reward_is_rate_times_horizon() {
        let c = Ctmc::from_rows(1, 0, &[]);
        let r = RewardStructure::new(vec![2.0]);
        let v = expected_cumulative_reward(&c, &r, 3.0, &SolverSettings::default()).unwrap();
        assert_eq!(v, 6.0);
    }

    #[test]
    fn time_in_first_state_of_absorbing_pair() {
        let r = RewardStructure::new(vec![1.0, 0.0]);
        let v = expected_cumulative_reward(&absorbing_pair(1.0), &r, 1.0, &SolverSettings::default())
            .unwrap();
        let exact = 1.0 - (-1.0f64).exp();
        assert!((v - exact).abs() < 1e-8, "{v} vs {exact}");
    }

    #[test]
    fn transition_reward_counts_expected_firings() {
        // Expected firings of 0->1 in [0, T] is 1 - e^{-T}.
        let c = absorbing_pair(1.0);
        let r = RewardStructure::new(vec![0.0, 0.0]).with_transition(0, 1, 5.0);
        for &t in &[0.5, 2.0, 10.0] {
            let v = expected_cumulative_reward(&c, &r, t, &SolverSettings::default()).unwrap();
            assert!((v - 5.0 * (1.0 - (-t).exp())).abs() < 1e-8);
        }
    }

    #[test]
    fn negative_time_is_rejected() {
        let c = absorbing_pair(1.0);
        assert!(matches!(
            transient_distribution(&c, -1.0, &SolverSettings::default()),
            Err(Error::Input(_))
        ));
        let r = RewardStructure::zero(2);
        assert!(expected_cumulative_reward(&c, &r, -0.1, &SolverSettings::default()).is_err());
    }

    #[test]
    fn iteration_cap_is_a_resource_error() {
        let settings = SolverSettings {
            epsilon: 1e-9,
            max_iterations: 100,
        };
        let err = transient_distribution(&absorbing_pair(1.0), 1000.0, &settings).unwrap_err();
        assert!(matches!(err, Error::Resource { .. }));
    }

    #[test]
    fn mismatched_reward_length_is_rejected() {
        let r = RewardStructure::new(vec![1.0]);
        assert!(expected_cumulative_reward(&absorbing_pair(1.0), &r, 1.0, &SolverSettings::default()).is_err());
    }

    #[test]
    fn two_state_flip_flop_matches_closed_form() {
        // 0 <-> 1 with rates a, b: p1(t) = a/(a+b) (1 - e^{-(a+b)t}).
        let (a, b) = (0.7, 1.9);
        let c = Ctmc::from_rows(2, 0, &[vec![(1, a)], vec![(0, b)]]);
        let t = 3.3;
        let pi = transient_distribution(&c, t, &SolverSettings::default()).unwrap();
        let p1 = a / (a + b) * (1.0 - (-(a + b) * t).exp());
        assert!((pi[1] - p1).abs() < 1e-9);
        // time in state 1 over [0,t]: a/(a+b) (t - (1 - e^{-(a+b)t})/(a+b))
        let occ = cumulative_occupancy(&c, t, &SolverSettings::default()).unwrap();
        let s = a + b;
        let exact = a / s * (t - (1.0 - (-s * t).exp()) / s);
        assert!((occ.per_state[1] - exact).abs() < 1e-9);
        let missing = t - (occ.per_state[0] + occ.per_state[1]);
        assert!(missing >= 0.0 && missing <= SolverSettings::default().epsilon * t, "{missing}");
    }

    fn random_chain() -> impl Strategy<Value = (Ctmc, Vec<f64>, Vec<f64>)> {
        (1usize..=6).prop_flat_map(|n| {
            (
                proptest::collection::vec(
                    proptest::collection::vec(prop_oneof![Just(0.0), 0.05f64..4.0], n),
                    n,
                ),
                proptest::collection::vec(0.0f64..5.0, n),
                proptest::collection::vec(0.0f64..5.0, n),
            )
                .prop_map(move |(dense, r1, r2)| {
                    let rows: Vec<Vec<(usize, f64)>> = dense
                        .iter()
                        .enumerate()
                        .map(|(s, row)| {
                            row.iter()
                                .enumerate()
                                .filter(|&(t, &r)| t != s && r > 0.0)
                                .map(|(t, &r)| (t, r))
                                .collect()
                        })
                        .collect();
                    (Ctmc::from_rows(n, 0, &rows), r1, r2)
                })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn distributions_conserve_probability((c, _, _) in random_chain(), t in 0.0f64..20.0) {
            let settings = SolverSettings::default();
            let pi = transient_distribution(&c, t, &settings).unwrap();
            let sum: f64 = pi.iter().sum();
            prop_assert!(pi.iter().all(|p| *p >= 0.0));
            prop_assert!((sum - 1.0).abs() <= settings.epsilon + 1e-12, "sum {}", sum);
        }

        #[test]
        fn cumulative_reward_is_monotone_in_horizon((c, r1, _) in random_chain()) {
            let settings = SolverSettings::default();
            let reward = RewardStructure::new(r1);
            let mut prev = 0.0;
            for i in 0..=12 {
                let t = i as f64 * 0.75;
                let v = expected_cumulative_reward(&c, &reward, t, &settings).unwrap();
                prop_assert!(v >= prev - 1e-12, "t={} {} < {}", t, v, prev);
                prev = v;
            }
        }

        #[test]
        fn cumulative_reward_is_linear(
            (c, r1, r2) in random_chain(),
            alpha in 0.0f64..3.0,
            beta in 0.0f64..3.0,
            t in 0.1f64..15.0,
        ) {
            let settings = SolverSettings::default();
            let x = RewardStructure::new(r1);
            let y = RewardStructure::new(r2);
            let ex = expected_cumulative_reward(&c, &x, t, &settings).unwrap();
            let ey = expected_cumulative_reward(&c, &y, t, &settings).unwrap();
            let exy = expected_cumulative_reward(&c, &x.combine(alpha, &y, beta), t, &settings).unwrap();
            prop_assert!((exy - (alpha * ex + beta * ey)).abs() <= 10.0 * settings.epsilon);
        }
    }
}
