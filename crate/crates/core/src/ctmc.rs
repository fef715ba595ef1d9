//! Sparse continuous-time Markov chains and reward structures.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::{Error, Result};

pub type StateIndex = usize;

/// A CTMC `(S, s0, R)` with the rate matrix stored row-grouped: the outgoing
/// edges of state `s` are `targets[row_start[s]..row_start[s + 1]]`.
///
/// Rates are in 1/s. Self-loops are never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct Ctmc {
    num_states: usize,
    initial_state: StateIndex,
    row_start: Vec<usize>,
    targets: Vec<StateIndex>,
    rates: Vec<f64>,
    labels: BTreeMap<StateIndex, String>,
}

impl Ctmc {
    /// Assembles a chain from per-source edge lists without checking it.
    ///
    /// Use [`validate`] to audit the result; [`CtmcBuilder`] is the checked
    /// construction path.
    pub fn from_rows(
        num_states: usize,
        initial_state: StateIndex,
        rows: &[Vec<(StateIndex, f64)>],
    ) -> Self {
        let mut row_start = Vec::with_capacity(num_states + 1);
        let mut targets = Vec::new();
        let mut rates = Vec::new();
        row_start.push(0);
        for s in 0..num_states {
            if let Some(row) = rows.get(s) {
                for &(t, r) in row {
                    targets.push(t);
                    rates.push(r);
                }
            }
            row_start.push(targets.len());
        }
        Ctmc {
            num_states,
            initial_state,
            row_start,
            targets,
            rates,
            labels: BTreeMap::new(),
        }
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn initial_state(&self) -> StateIndex {
        self.initial_state
    }

    pub(crate) fn csr(&self) -> (&[usize], &[StateIndex], &[f64]) {
        (&self.row_start, &self.targets, &self.rates)
    }

    pub fn num_transitions(&self) -> usize {
        self.targets.len()
    }

    pub fn label(&self, s: StateIndex) -> Option<&str> {
        self.labels.get(&s).map(String::as_str)
    }

    pub fn set_label(&mut self, s: StateIndex, label: impl Into<String>) {
        self.labels.insert(s, label.into());
    }

    /// Outgoing `(target, rate)` pairs of `s` in storage order.
    ///
    /// Panics if `s` is out of range.
    pub fn edges(&self, s: StateIndex) -> impl Iterator<Item = (StateIndex, f64)> + '_ {
        let range = self.row_start[s]..self.row_start[s + 1];
        self.targets[range.clone()]
            .iter()
            .copied()
            .zip(self.rates[range].iter().copied())
    }

    /// All transitions as `(source, target, rate)` in storage order.
    pub fn transitions(&self) -> impl Iterator<Item = (StateIndex, StateIndex, f64)> + '_ {
        (0..self.num_states).flat_map(move |s| self.edges(s).map(move |(t, r)| (s, t, r)))
    }

    /// Rate of the edge `source -> target`, 0 when absent.
    pub fn rate(&self, source: StateIndex, target: StateIndex) -> f64 {
        if source >= self.num_states {
            return 0.0;
        }
        self.edges(source)
            .filter(|&(t, _)| t == target)
            .map(|(_, r)| r)
            .sum()
    }

    pub fn has_transition(&self, source: StateIndex, target: StateIndex) -> bool {
        source < self.num_states && self.edges(source).any(|(t, _)| t == target)
    }

    /// Total outgoing rate of `s`; 0 for absorbing states.
    pub fn exit_rate(&self, s: StateIndex) -> Result<f64> {
        if s >= self.num_states {
            return Err(Error::input(alloc::format!(
                "state index {s} out of range for {} states",
                self.num_states
            )));
        }
        Ok(self.edges(s).map(|(_, r)| r).sum())
    }

    pub fn max_exit_rate(&self) -> f64 {
        (0..self.num_states)
            .map(|s| self.edges(s).map(|(_, r)| r).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// States reachable from the initial state, as a membership mask.
    pub fn reachable(&self) -> Vec<bool> {
        let mut seen = alloc::vec![false; self.num_states];
        if self.initial_state >= self.num_states {
            return seen;
        }
        let mut stack = alloc::vec![self.initial_state];
        seen[self.initial_state] = true;
        while let Some(s) = stack.pop() {
            for (t, _) in self.edges(s) {
                if t < self.num_states && !seen[t] {
                    seen[t] = true;
                    stack.push(t);
                }
            }
        }
        seen
    }
}

/// Checked construction of a [`Ctmc`].
///
/// Parallel edges between the same pair of states are merged by summing their
/// rates. Self-loops carry no meaning in a CTMC and are dropped; each dropped
/// edge is recorded in [`CtmcBuilder::dropped_self_loops`].
#[derive(Debug, Clone)]
pub struct CtmcBuilder {
    num_states: usize,
    initial_state: StateIndex,
    rows: Vec<Vec<(StateIndex, f64)>>,
    labels: BTreeMap<StateIndex, String>,
    dropped: Vec<StateIndex>,
}

impl CtmcBuilder {
    pub fn new(num_states: usize, initial_state: StateIndex) -> Result<Self> {
        if num_states == 0 {
            return Err(Error::input("a CTMC needs at least one state"));
        }
        if initial_state >= num_states {
            return Err(Error::input(alloc::format!(
                "initial state {initial_state} out of range for {num_states} states"
            )));
        }
        Ok(CtmcBuilder {
            num_states,
            initial_state,
            rows: alloc::vec![Vec::new(); num_states],
            labels: BTreeMap::new(),
            dropped: Vec::new(),
        })
    }

    /// Adds `rate` to the edge `source -> target`.
    pub fn add(&mut self, source: StateIndex, target: StateIndex, rate: f64) -> Result<&mut Self> {
        if source >= self.num_states || target >= self.num_states {
            return Err(Error::input(alloc::format!(
                "transition {source}->{target} out of range for {} states",
                self.num_states
            )));
        }
        if !(rate.is_finite() && rate > 0.0) {
            return Err(Error::input(alloc::format!(
                "transition {source}->{target} has non-positive or non-finite rate {rate}"
            )));
        }
        if source == target {
            self.dropped.push(source);
            return Ok(self);
        }
        let row = &mut self.rows[source];
        match row.iter_mut().find(|(t, _)| *t == target) {
            Some(edge) => edge.1 += rate,
            None => row.push((target, rate)),
        }
        Ok(self)
    }

    pub fn label(&mut self, s: StateIndex, label: impl Into<String>) -> &mut Self {
        self.labels.insert(s, label.into());
        self
    }

    /// Source states of self-loops dropped so far.
    pub fn dropped_self_loops(&self) -> &[StateIndex] {
        &self.dropped
    }

    pub fn build(self) -> Ctmc {
        let mut ctmc = Ctmc::from_rows(self.num_states, self.initial_state, &self.rows);
        ctmc.labels = self.labels;
        ctmc
    }
}

/// A reward structure `(r1, r2)`: per-state accrual rates and per-transition
/// impulse rewards.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RewardStructure {
    pub state_rates: Vec<f64>,
    pub transition_rewards: BTreeMap<(StateIndex, StateIndex), f64>,
}

impl RewardStructure {
    pub fn new(state_rates: Vec<f64>) -> Self {
        RewardStructure {
            state_rates,
            transition_rewards: BTreeMap::new(),
        }
    }

    pub fn with_transition(mut self, source: StateIndex, target: StateIndex, reward: f64) -> Self {
        self.transition_rewards.insert((source, target), reward);
        self
    }

    pub fn zero(num_states: usize) -> Self {
        Self::new(alloc::vec![0.0; num_states])
    }

    pub fn transition_reward(&self, source: StateIndex, target: StateIndex) -> f64 {
        self.transition_rewards
            .get(&(source, target))
            .copied()
            .unwrap_or(0.0)
    }

    /// `alpha * self + beta * other`, state- and transition-wise.
    pub fn combine(&self, alpha: f64, other: &RewardStructure, beta: f64) -> RewardStructure {
        let len = self.state_rates.len().max(other.state_rates.len());
        let at = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
        let state_rates = (0..len)
            .map(|i| alpha * at(&self.state_rates, i) + beta * at(&other.state_rates, i))
            .collect();
        let mut transition_rewards = BTreeMap::new();
        for (&k, &v) in &self.transition_rewards {
            *transition_rewards.entry(k).or_insert(0.0) += alpha * v;
        }
        for (&k, &v) in &other.transition_rewards {
            *transition_rewards.entry(k).or_insert(0.0) += beta * v;
        }
        RewardStructure {
            state_rates,
            transition_rewards,
        }
    }

    /// Per-state reward rate including the expected impulse rewards:
    /// `r1(s) + sum_t R(s, t) * r2(s, t)`.
    pub(crate) fn effective_rates(&self, ctmc: &Ctmc) -> Vec<f64> {
        let mut out: Vec<f64> = (0..ctmc.num_states())
            .map(|s| self.state_rates.get(s).copied().unwrap_or(0.0))
            .collect();
        for (&(s, t), &reward) in &self.transition_rewards {
            if s < out.len() {
                out[s] += ctmc.rate(s, t) * reward;
            }
        }
        out
    }
}

/// One failed invariant found by [`validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NoStates,
    InitialStateOutOfRange { initial: StateIndex, num_states: usize },
    NonPositiveRate { source: StateIndex, target: StateIndex, rate: f64 },
    NonFiniteRate { source: StateIndex, target: StateIndex, rate: f64 },
    SelfLoop { state: StateIndex },
    TargetOutOfRange { source: StateIndex, target: StateIndex },
    DuplicateTransition { source: StateIndex, target: StateIndex },
    RewardLength { reward: usize, expected: usize, found: usize },
    InvalidStateReward { reward: usize, state: StateIndex, value: f64 },
    InvalidTransitionReward { reward: usize, source: StateIndex, target: StateIndex, value: f64 },
    DanglingTransitionReward { reward: usize, source: StateIndex, target: StateIndex },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            NoStates => write!(f, "empty state space"),
            InitialStateOutOfRange { initial, num_states } => {
                write!(f, "initial state {initial} out of range for {num_states} states")
            }
            NonPositiveRate { source, target, rate } => {
                write!(f, "non-positive rate {rate} on {source}->{target}")
            }
            NonFiniteRate { source, target, rate } => {
                write!(f, "non-finite rate {rate} on {source}->{target}")
            }
            SelfLoop { state } => write!(f, "self-loop on state {state}"),
            TargetOutOfRange { source, target } => {
                write!(f, "transition {source}->{target} targets a missing state")
            }
            DuplicateTransition { source, target } => {
                write!(f, "duplicate transition {source}->{target}")
            }
            RewardLength { reward, expected, found } => write!(
                f,
                "reward structure {reward} has {found} state rates, expected {expected}"
            ),
            InvalidStateReward { reward, state, value } => write!(
                f,
                "reward structure {reward}: state {state} has negative or non-finite rate {value}"
            ),
            InvalidTransitionReward { reward, source, target, value } => write!(
                f,
                "reward structure {reward}: transition {source}->{target} has negative or non-finite reward {value}"
            ),
            DanglingTransitionReward { reward, source, target } => write!(
                f,
                "dangling transition reward in structure {reward}: no transition {source}->{target}"
            ),
        }
    }
}

/// Audits a chain and its reward structures, reporting every violation.
pub fn validate(ctmc: &Ctmc, rewards: &[RewardStructure]) -> core::result::Result<(), Vec<Violation>> {
    let mut out = Vec::new();
    let n = ctmc.num_states();
    if n == 0 {
        out.push(Violation::NoStates);
    }
    if ctmc.initial_state() >= n && n > 0 {
        out.push(Violation::InitialStateOutOfRange {
            initial: ctmc.initial_state(),
            num_states: n,
        });
    }
    for s in 0..n {
        let mut seen: Vec<StateIndex> = Vec::new();
        for (t, rate) in ctmc.edges(s) {
            if !rate.is_finite() {
                out.push(Violation::NonFiniteRate { source: s, target: t, rate });
            } else if rate <= 0.0 {
                out.push(Violation::NonPositiveRate { source: s, target: t, rate });
            }
            if t == s {
                out.push(Violation::SelfLoop { state: s });
            }
            if t >= n {
                out.push(Violation::TargetOutOfRange { source: s, target: t });
            }
            if seen.contains(&t) {
                out.push(Violation::DuplicateTransition { source: s, target: t });
            } else {
                seen.push(t);
            }
        }
    }
    for (k, reward) in rewards.iter().enumerate() {
        if reward.state_rates.len() != n {
            out.push(Violation::RewardLength {
                reward: k,
                expected: n,
                found: reward.state_rates.len(),
            });
        }
        for (s, &value) in reward.state_rates.iter().enumerate() {
            if !(value.is_finite() && value >= 0.0) {
                out.push(Violation::InvalidStateReward { reward: k, state: s, value });
            }
        }
        for (&(source, target), &value) in &reward.transition_rewards {
            if !(value.is_finite() && value >= 0.0) {
                out.push(Violation::InvalidTransitionReward { reward: k, source, target, value });
            }
            if !ctmc.has_transition(source, target) {
                out.push(Violation::DanglingTransitionReward { reward: k, source, target });
            }
        }
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;
    use proptest::prelude::*;

    fn two_state(rate: f64) -> Ctmc {
        Ctmc::from_rows(2, 0, &[vec![(1, rate)], vec![]])
    }

    #[test]
    fn exit_rate_of_absorbing_single_state_is_zero() {
        let c = Ctmc::from_rows(1, 0, &[]);
        assert_eq!(c.exit_rate(0).unwrap(), 0.0);
        assert_eq!(c.max_exit_rate(), 0.0);
    }

    #[test]
    fn exit_rate_single_edge() {
        let c = two_state(3.0);
        assert_eq!(c.exit_rate(0).unwrap(), 3.0);
        assert_eq!(c.exit_rate(1).unwrap(), 0.0);
        assert!(matches!(c.exit_rate(2), Err(Error::Input(_))));
    }

    #[test]
    fn max_exit_rate_picks_largest_row() {
        let c = Ctmc::from_rows(2, 0, &[vec![(1, 3.0)], vec![(0, 5.0)]]);
        assert_eq!(c.max_exit_rate(), 5.0);
    }

    #[test]
    fn well_formed_chain_validates() {
        assert_eq!(validate(&two_state(1.0), &[]), Ok(()));
    }

    #[test]
    fn zero_rate_is_reported() {
        let errs = validate(&two_state(0.0), &[]).unwrap_err();
        assert_eq!(errs.len(), 1);
        assert!(errs[0].to_string().contains("non-positive rate"));
    }

    #[test]
    fn dangling_transition_reward_is_reported() {
        let reward = RewardStructure::new(vec![0.0, 0.0]).with_transition(1, 0, 2.0);
        let errs = validate(&two_state(1.0), &[reward]).unwrap_err();
        assert!(errs[0].to_string().contains("dangling transition reward"));
    }

    #[test]
    fn validate_collects_every_violation() {
        let c = Ctmc::from_rows(2, 5, &[vec![(0, 1.0), (1, -1.0), (3, f64::NAN)], vec![]]);
        let bad = RewardStructure::new(vec![-1.0]).with_transition(1, 0, f64::INFINITY);
        let errs = validate(&c, &[bad]).unwrap_err();
        assert_eq!(errs.len(), 9, "{errs:?}");
    }

    #[test]
    fn builder_drops_self_loops_and_merges_parallel_edges() {
        let mut b = CtmcBuilder::new(2, 0).unwrap();
        b.add(0, 0, 1.0).unwrap();
        b.add(0, 1, 1.5).unwrap();
        b.add(0, 1, 0.5).unwrap();
        assert_eq!(b.dropped_self_loops(), &[0]);
        let c = b.build();
        assert_eq!(c.num_transitions(), 1);
        assert_eq!(c.rate(0, 1), 2.0);
        assert!(validate(&c, &[]).is_ok());
    }

    #[test]
    fn builder_rejects_bad_rates_and_indices() {
        let mut b = CtmcBuilder::new(2, 0).unwrap();
        assert!(b.add(0, 1, 0.0).is_err());
        assert!(b.add(0, 2, 1.0).is_err());
        assert!(CtmcBuilder::new(2, 2).is_err());
        assert!(CtmcBuilder::new(0, 0).is_err());
    }

    fn random_dense() -> impl Strategy<Value = Vec<Vec<f64>>> {
        (1usize..=20).prop_flat_map(|n| {
            proptest::collection::vec(
                proptest::collection::vec(
                    prop_oneof![Just(0.0), 0.001f64..100.0],
                    n,
                ),
                n,
            )
        })
    }

    proptest! {
        #[test]
        fn exit_rate_matches_dense_reference(dense in random_dense()) {
            let n = dense.len();
            let mut b = CtmcBuilder::new(n, 0).unwrap();
            for (s, row) in dense.iter().enumerate() {
                for (t, &r) in row.iter().enumerate() {
                    if r > 0.0 {
                        b.add(s, t, r).unwrap();
                    }
                }
            }
            let c = b.build();
            prop_assert!(validate(&c, &[]).is_ok());
            let mut max = 0.0f64;
            for (s, row) in dense.iter().enumerate() {
                let expected: f64 = row.iter().enumerate().filter(|&(t, _)| t != s).map(|(_, r)| r).sum();
                let got = c.exit_rate(s).unwrap();
                prop_assert!((got - expected).abs() <= 1e-12 * expected.max(1.0));
                max = max.max(got);
            }
            prop_assert_eq!(c.max_exit_rate(), max);
        }
    }
}
