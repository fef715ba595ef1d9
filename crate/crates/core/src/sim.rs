//! Exact stochastic simulation of CTMCs with reward accrual.

use alloc::format;
use alloc::vec::Vec;

use crate::ctmc::{Ctmc, RewardStructure, StateIndex};
use crate::rng::SimRng;
use crate::{Error, Result};

/// Two-sided 99% standard normal quantile.
pub const Z_99: f64 = 2.575_829_303_548_900_4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub from: StateIndex,
    pub to: StateIndex,
}

/// A sampled path on `[0, end_time]`. Event times are strictly increasing and
/// consecutive events chain.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub seed: u64,
    pub initial_state: StateIndex,
    pub events: Vec<Event>,
    pub end_time: f64,
}

impl Trajectory {
    pub fn final_state(&self) -> StateIndex {
        self.events.last().map_or(self.initial_state, |e| e.to)
    }
}

/// Mean, standard error and 99% normal-approximation half-width over
/// independent runs. The normal approximation is poor for small run counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub runs: u64,
    pub confidence_99_half_width: f64,
}

impl RewardEstimate {
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        let runs = samples.len();
        if runs < 2 {
            return Err(Error::input(format!("need at least 2 runs, got {runs}")));
        }
        let n = runs as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        let std_error = libm::sqrt(var / n);
        Ok(RewardEstimate {
            mean,
            std_error,
            runs: runs as u64,
            confidence_99_half_width: Z_99 * std_error,
        })
    }

    /// Whether `value` lies in the closed 99% interval.
    pub fn brackets(&self, value: f64) -> bool {
        (value - self.mean).abs() <= self.confidence_99_half_width
    }
}

/// Jump-chain sampler: exponential holding at the exit rate, successor chosen
/// proportionally to outgoing rates.
struct Walker<'a> {
    ctmc: &'a Ctmc,
    exit: Vec<f64>,
}

impl<'a> Walker<'a> {
    fn new(ctmc: &'a Ctmc) -> Self {
        let exit = (0..ctmc.num_states())
            .map(|s| ctmc.edges(s).map(|(_, r)| r).sum())
            .collect();
        Walker { ctmc, exit }
    }

    /// Calls `visit(event)` for every jump before `horizon`.
    fn run(&self, horizon: f64, rng: &mut SimRng, mut visit: impl FnMut(Event)) {
        let mut state = self.ctmc.initial_state();
        let mut now = 0.0;
        loop {
            let exit = self.exit[state];
            if exit <= 0.0 {
                return;
            }
            let next_time = now + rng.exponential(exit);
            if next_time > horizon || next_time <= now {
                return;
            }
            let target = rng.uniform() * exit;
            let mut acc = 0.0;
            let mut chosen = None;
            for (t, r) in self.ctmc.edges(state) {
                acc += r;
                chosen = Some(t);
                if target < acc {
                    break;
                }
            }
            // rounding can leave `target` just above the last partial sum;
            // the last edge is then the correct pick
            let to = chosen.expect("positive exit rate implies an edge");
            visit(Event {
                time: next_time,
                from: state,
                to,
            });
            state = to;
            now = next_time;
        }
    }
}

fn check_horizon(horizon: f64) -> Result<()> {
    if !(horizon.is_finite() && horizon >= 0.0) {
        return Err(Error::input(format!("horizon must be finite and >= 0, got {horizon}")));
    }
    Ok(())
}

/// Samples one trajectory on `[0, horizon]`, deterministic in `seed`.
pub fn simulate(ctmc: &Ctmc, horizon: f64, seed: u64) -> Result<Trajectory> {
    check_horizon(horizon)?;
    let mut events = Vec::new();
    let mut rng = SimRng::new(seed);
    Walker::new(ctmc).run(horizon, &mut rng, |e| events.push(e));
    Ok(Trajectory {
        seed,
        initial_state: ctmc.initial_state(),
        events,
        end_time: horizon,
    })
}

/// Pathwise cumulative reward: `r1` times holding times plus `r2` per firing.
pub fn accrue_rewards(trajectory: &Trajectory, reward: &RewardStructure) -> Result<f64> {
    let rate = |s: StateIndex| {
        reward.state_rates.get(s).copied().ok_or_else(|| {
            Error::input(format!(
                "trajectory visits state {s} but the reward has {} states",
                reward.state_rates.len()
            ))
        })
    };
    let mut total = 0.0;
    let mut state = trajectory.initial_state;
    let mut since = 0.0;
    for e in &trajectory.events {
        if e.from != state {
            return Err(Error::input(format!(
                "event at {} leaves state {} but the path is in {state}",
                e.time, e.from
            )));
        }
        total += rate(state)? * (e.time - since);
        total += reward.transition_reward(e.from, e.to);
        state = e.to;
        since = e.time;
    }
    total += rate(state)? * (trajectory.end_time - since);
    Ok(total)
}

/// Cumulative values of every reward on run `run` of a batch seeded with
/// `seed`; identical to [`simulate`] followed by [`accrue_rewards`] on the
/// seed `seed + run`.
pub fn sample_run(
    ctmc: &Ctmc,
    rewards: &[RewardStructure],
    horizon: f64,
    seed: u64,
    run: u64,
) -> Vec<f64> {
    let mut rng = SimRng::for_run(seed, run);
    let mut totals = alloc::vec![0.0; rewards.len()];
    let mut state = ctmc.initial_state();
    let mut since = 0.0;
    Walker::new(ctmc).run(horizon, &mut rng, |e| {
        for (acc, r) in totals.iter_mut().zip(rewards) {
            *acc += r.state_rates[state] * (e.time - since) + r.transition_reward(e.from, e.to);
        }
        state = e.to;
        since = e.time;
    });
    for (acc, r) in totals.iter_mut().zip(rewards) {
        *acc += r.state_rates[state] * (horizon - since);
    }
    totals
}

pub fn check_estimate_inputs(ctmc: &Ctmc, rewards: &[RewardStructure], horizon: f64, runs: u64) -> Result<()> {
    check_horizon(horizon)?;
    if runs < 2 {
        return Err(Error::input(format!("need at least 2 runs, got {runs}")));
    }
    for (k, r) in rewards.iter().enumerate() {
        if r.state_rates.len() != ctmc.num_states() {
            return Err(Error::input(format!(
                "reward structure {k} has {} state rates, chain has {} states",
                r.state_rates.len(),
                ctmc.num_states()
            )));
        }
    }
    Ok(())
}

/// Per-reward summaries from per-run sample rows (`samples[run][reward]`).
pub fn summarize(samples: &[Vec<f64>], rewards: usize) -> Result<Vec<RewardEstimate>> {
    (0..rewards)
        .map(|k| {
            let column: Vec<f64> = samples.iter().map(|row| row[k]).collect();
            RewardEstimate::from_samples(&column)
        })
        .collect()
}

/// Monte Carlo estimates of each cumulative reward over `runs` independent
/// trajectories seeded `seed, seed + 1, ...`.
pub fn estimate_rewards(
    ctmc: &Ctmc,
    rewards: &[RewardStructure],
    horizon: f64,
    runs: u64,
    seed: u64,
) -> Result<Vec<RewardEstimate>> {
    check_estimate_inputs(ctmc, rewards, horizon, runs)?;
    let samples: Vec<Vec<f64>> = (0..runs)
        .map(|run| sample_run(ctmc, rewards, horizon, seed, run))
        .collect();
    summarize(&samples, rewards.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn pair() -> Ctmc {
        Ctmc::from_rows(2, 0, &[vec![(1, 1.0)], vec![]])
    }

    #[test]
    fn absorbing_start_has_no_events() {
        let c = Ctmc::from_rows(2, 1, &[vec![(1, 1.0)], vec![]]);
        let t = simulate(&c, 10.0, 5).unwrap();
        assert!(t.events.is_empty());
        assert_eq!(t.final_state(), 1);
    }

    #[test]
    fn first_jump_time_has_unit_mean() {
        let runs = 100_000u64;
        let mean = (0..runs)
            .map(|s| simulate(&pair(), 1e9, s).unwrap().events[0].time)
            .sum::<f64>()
            / runs as f64;
        assert!((mean - 1.0).abs() < 3.0 / (runs as f64).sqrt(), "{mean}");
    }

    #[test]
    fn simulation_is_deterministic_and_well_formed() {
        let c = Ctmc::from_rows(3, 0, &[vec![(1, 2.0), (2, 1.0)], vec![(0, 3.0)], vec![(1, 0.5)]]);
        let a = simulate(&c, 50.0, 11).unwrap();
        assert_eq!(a, simulate(&c, 50.0, 11).unwrap());
        assert!(!a.events.is_empty());
        for w in a.events.windows(2) {
            assert!(w[0].time < w[1].time);
            assert_eq!(w[0].to, w[1].from);
        }
        assert!(a.events.last().unwrap().time <= a.end_time);
        assert_eq!(a.events[0].from, 0);
    }

    #[test]
    fn accrual_by_hand() {
        let t = Trajectory {
            seed: 0,
            initial_state: 0,
            events: vec![Event { time: 1.0, from: 0, to: 1 }],
            end_time: 2.0,
        };
        let r = RewardStructure::new(vec![1.0, 0.0]).with_transition(0, 1, 5.0);
        assert_eq!(accrue_rewards(&t, &r).unwrap(), 6.0);
        assert_eq!(accrue_rewards(&t, &RewardStructure::zero(2)).unwrap(), 0.0);
        let empty = Trajectory { events: vec![], ..t.clone() };
        assert_eq!(accrue_rewards(&empty, &RewardStructure::new(vec![3.0, 0.0])).unwrap(), 6.0);
        assert!(accrue_rewards(&t, &RewardStructure::new(vec![1.0])).is_err());
    }

    #[test]
    fn batch_runs_match_simulate_then_accrue() {
        let c = Ctmc::from_rows(3, 0, &[vec![(1, 2.0), (2, 1.0)], vec![(0, 3.0)], vec![(1, 0.5)]]);
        let r = RewardStructure::new(vec![1.0, 2.0, 0.5]).with_transition(0, 2, 4.0);
        for run in 0..20 {
            let traj = simulate(&c, 7.0, 100 + run).unwrap();
            let direct = accrue_rewards(&traj, &r).unwrap();
            let batch = sample_run(&c, core::slice::from_ref(&r), 7.0, 100, run)[0];
            assert!((direct - batch).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_reward_has_zero_error() {
        let c = Ctmc::from_rows(1, 0, &[]);
        let est = estimate_rewards(&c, &[RewardStructure::new(vec![2.5])], 4.0, 10, 0).unwrap();
        assert_eq!(est[0].mean, 10.0);
        assert_eq!(est[0].std_error, 0.0);
        assert_eq!(est[0].runs, 10);
    }

    #[test]
    fn estimate_brackets_closed_form() {
        let r = RewardStructure::new(vec![1.0, 0.0]);
        let est = estimate_rewards(&pair(), &[r], 1.0, 100_000, 9).unwrap();
        let exact = 1.0 - (-1.0f64).exp();
        assert!((est[0].mean - exact).abs() < 3.0 * est[0].std_error);
    }

    #[test]
    fn too_few_runs_rejected() {
        assert!(estimate_rewards(&pair(), &[], 1.0, 1, 0).is_err());
    }
}
