//! The driver-attentiveness controller design space.
//!
//! A problem instance fixes `n` attentiveness levels (0 = attentive, `n - 1` =
//! inattentive), `m` alerts and `q` speed levels. The CTMC state is
//! `(level, alerts, speed, controller_active)`; a controller is the vector of
//! option parameters choosing an `(alerts, speed)` pair for every context
//! `(level >= 1, alerts, speed)` in which it finds the driver not attentive.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigUint;

use crate::ctmc::{Ctmc, CtmcBuilder, RewardStructure, StateIndex};
use crate::{Error, Result};

/// A full problem instance. Rates are in 1/s and times in seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub n: usize,
    pub m: usize,
    pub q: usize,
    /// Indexed by alert bitmask; `nuisance[0]` must be 0.
    pub nuisance: Vec<f64>,
    /// Indexed by speed level.
    pub progress: Vec<f64>,
    /// `risk[level][speed]`.
    pub risk: Vec<Vec<f64>>,
    pub risk_mrm: f64,
    pub mrm_timeout_tau: f64,
    pub mrm_enabled: bool,
    /// Flat `[from][to][alerts][speed]` table; entries with `from == to` are
    /// ignored and kept at 0. Use [`ProblemSpec::driver_rate`] to read it.
    pub driver_rates: Vec<f64>,
    pub controller_action_rate: f64,
    pub timer_rate: f64,
    pub horizon_t: f64,
}

/// Upper bound on `m`; option values and bitmasks must fit the genotype type.
pub const MAX_ALERTS: usize = 16;

impl ProblemSpec {
    /// An instance with all tables zeroed, `tau = 15 s`, MRM off.
    pub fn zeroed(n: usize, m: usize, q: usize) -> Self {
        let alerts = 1usize << m.min(MAX_ALERTS);
        ProblemSpec {
            n,
            m,
            q,
            nuisance: alloc::vec![0.0; alerts],
            progress: alloc::vec![0.0; q],
            risk: alloc::vec![alloc::vec![0.0; q]; n],
            risk_mrm: 0.0,
            mrm_timeout_tau: 15.0,
            mrm_enabled: false,
            driver_rates: alloc::vec![0.0; n * n * alerts * q],
            controller_action_rate: 2.0,
            timer_rate: 1.0,
            horizon_t: 1.0,
        }
    }

    pub fn alert_combinations(&self) -> usize {
        1 << self.m
    }

    /// `2^m * q`, the number of values each option parameter can take.
    pub fn option_count(&self) -> usize {
        self.alert_combinations() * self.q
    }

    /// `(n - 1) * 2^m * q`, the genotype length.
    pub fn genotype_len(&self) -> usize {
        (self.n - 1) * self.option_count()
    }

    /// `n * 2^m * q * 2`, plus one when the MRM state is generated.
    pub fn num_states(&self) -> usize {
        self.base_states() + usize::from(self.mrm_enabled)
    }

    fn base_states(&self) -> usize {
        self.n * self.option_count() * 2
    }

    /// Index of the MRM state, when enabled.
    pub fn mrm_state(&self) -> Option<StateIndex> {
        self.mrm_enabled.then(|| self.base_states())
    }

    fn rate_index(&self, from: usize, to: usize, alerts: usize, speed: usize) -> usize {
        ((from * self.n + to) * self.alert_combinations() + alerts) * self.q + speed
    }

    pub fn driver_rate(&self, from: usize, to: usize, alerts: usize, speed: usize) -> f64 {
        if from == to {
            return 0.0;
        }
        self.driver_rates[self.rate_index(from, to, alerts, speed)]
    }

    pub fn set_driver_rate(&mut self, from: usize, to: usize, alerts: usize, speed: usize, rate: f64) {
        let i = self.rate_index(from, to, alerts, speed);
        self.driver_rates[i] = rate;
    }

    /// Checks every field, reporting each problem with its field path.
    pub fn validate(&self) -> core::result::Result<(), Vec<String>> {
        let mut errs = Vec::new();
        if self.n < 2 {
            errs.push(format!("n: must be >= 2, got {}", self.n));
        }
        if self.m < 1 || self.m > MAX_ALERTS {
            errs.push(format!("m: must lie in [1, {MAX_ALERTS}], got {}", self.m));
        }
        if self.q < 1 {
            errs.push(format!("q: must be >= 1, got {}", self.q));
        }
        if !errs.is_empty() {
            return Err(errs);
        }
        let check = |errs: &mut Vec<String>, path: String, v: f64| {
            if !(v.is_finite() && v >= 0.0) {
                errs.push(format!("{path}: must be finite and >= 0, got {v}"));
            }
        };
        let alerts = self.alert_combinations();
        if self.nuisance.len() != alerts {
            errs.push(format!("nuisance: expected {alerts} entries, got {}", self.nuisance.len()));
        }
        for (i, &v) in self.nuisance.iter().enumerate() {
            check(&mut errs, format!("nuisance[{i}]"), v);
        }
        if self.nuisance.first().is_some_and(|&v| v != 0.0) {
            errs.push(format!(
                "nuisance[0]: must be 0 (no alerts, no nuisance), got {}",
                self.nuisance[0]
            ));
        }
        if self.progress.len() != self.q {
            errs.push(format!("progress: expected {} entries, got {}", self.q, self.progress.len()));
        }
        for (i, &v) in self.progress.iter().enumerate() {
            check(&mut errs, format!("progress[{i}]"), v);
        }
        if self.risk.len() != self.n {
            errs.push(format!("risk: expected {} rows, got {}", self.n, self.risk.len()));
        }
        for (l, row) in self.risk.iter().enumerate() {
            if row.len() != self.q {
                errs.push(format!("risk[{l}]: expected {} entries, got {}", self.q, row.len()));
            }
            for (v, &x) in row.iter().enumerate() {
                check(&mut errs, format!("risk[{l}][{v}]"), x);
            }
        }
        check(&mut errs, "risk_mrm".into(), self.risk_mrm);
        if !(self.mrm_timeout_tau.is_finite() && self.mrm_timeout_tau > 0.0) {
            errs.push(format!("mrm_timeout_tau: must be > 0, got {}", self.mrm_timeout_tau));
        }
        let expected = self.n * self.n * alerts * self.q;
        if self.driver_rates.len() != expected {
            errs.push(format!(
                "driver_rates: expected {expected} entries, got {}",
                self.driver_rates.len()
            ));
        } else {
            for from in 0..self.n {
                for to in 0..self.n {
                    for a in 0..alerts {
                        for v in 0..self.q {
                            let x = self.driver_rates[self.rate_index(from, to, a, v)];
                            let path = format!("driver_rates[{from}][{to}][{a}][{v}]");
                            if from == to {
                                if x != 0.0 {
                                    errs.push(format!("{path}: self-transition rate must be 0, got {x}"));
                                }
                            } else {
                                check(&mut errs, path, x);
                            }
                        }
                    }
                }
            }
        }
        for (name, v) in [
            ("controller_action_rate", self.controller_action_rate),
            ("timer_rate", self.timer_rate),
            ("horizon_T", self.horizon_t),
        ] {
            if !(v.is_finite() && v > 0.0) {
                errs.push(format!("{name}: must be finite and > 0, got {v}"));
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }

    pub fn checked(&self) -> Result<()> {
        self.validate()
            .map_err(|errs| Error::Input(errs.join("; ")))
    }

    /// A point weakly dominated by every achievable objective vector, in the
    /// natural orientation: nuisance and risk at their maxima, progress 0.
    ///
    /// Each MRM costs `risk_mrm` and at most `T / tau` are expected in
    /// `[0, T]`, which bounds the risk.
    pub fn objective_bounds(&self) -> (f64, f64, f64) {
        let t = self.horizon_t;
        let max_nuisance = self.nuisance.iter().copied().fold(0.0, f64::max);
        let max_progress = self.progress.iter().copied().fold(0.0, f64::max);
        let max_risk = self.risk.iter().flatten().copied().fold(0.0, f64::max);
        let mrm = if self.mrm_enabled {
            self.risk_mrm * t / self.mrm_timeout_tau
        } else {
            0.0
        };
        (max_nuisance * t, max_progress * t, max_risk * t + mrm)
    }
}

/// One CTMC state as `(level, alerts, speed, controller_active)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateCoord {
    pub level: usize,
    pub alerts: usize,
    pub speed: usize,
    pub controller_active: bool,
}

impl StateCoord {
    pub const fn new(level: usize, alerts: usize, speed: usize, controller_active: bool) -> Self {
        StateCoord {
            level,
            alerts,
            speed,
            controller_active,
        }
    }

    pub const INITIAL: StateCoord = StateCoord::new(0, 0, 0, false);
}

impl fmt::Display for StateCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(l{},a{:b},v{},{})",
            self.level,
            self.alerts,
            self.speed,
            if self.controller_active { "c" } else { "~c" }
        )
    }
}

/// A CTMC state: either a regular coordinate or the MRM state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DesignState {
    Regular(StateCoord),
    Mrm,
}

/// State ordering: controller flag fastest, then speed, alerts, level.
pub fn state_index(spec: &ProblemSpec, coord: StateCoord) -> Result<StateIndex> {
    if coord.level >= spec.n || coord.alerts >= spec.alert_combinations() || coord.speed >= spec.q {
        return Err(Error::input(format!(
            "state coordinate {coord} out of range for n={}, m={}, q={}",
            spec.n, spec.m, spec.q
        )));
    }
    Ok(((coord.level * spec.alert_combinations() + coord.alerts) * spec.q + coord.speed) * 2
        + usize::from(coord.controller_active))
}

/// Inverse of [`state_index`] over the regular states.
pub fn state_coord(spec: &ProblemSpec, index: StateIndex) -> Result<StateCoord> {
    match design_state(spec, index)? {
        DesignState::Regular(c) => Ok(c),
        DesignState::Mrm => Err(Error::input(format!("state {index} is the MRM state"))),
    }
}

pub fn design_state(spec: &ProblemSpec, index: StateIndex) -> Result<DesignState> {
    if spec.mrm_state() == Some(index) {
        return Ok(DesignState::Mrm);
    }
    if index >= spec.base_states() {
        return Err(Error::input(format!(
            "state index {index} out of range for {} states",
            spec.num_states()
        )));
    }
    let active = index % 2 == 1;
    let rest = index / 2;
    let speed = rest % spec.q;
    let rest = rest / spec.q;
    let alerts = rest % spec.alert_combinations();
    let level = rest / spec.alert_combinations();
    Ok(DesignState::Regular(StateCoord::new(level, alerts, speed, active)))
}

/// `option -> (alerts, speed)` with alerts in the low part:
/// `alerts = option mod 2^m`, `speed = option div 2^m`. Bit `i` of the mask is
/// alert `i + 1`.
pub fn decode_option(spec: &ProblemSpec, option: usize) -> Result<(usize, usize)> {
    if option >= spec.option_count() {
        return Err(Error::input(format!(
            "option {option} out of range [0, {})",
            spec.option_count()
        )));
    }
    Ok((option % spec.alert_combinations(), option / spec.alert_combinations()))
}

pub fn encode_option(spec: &ProblemSpec, alerts: usize, speed: usize) -> usize {
    speed * spec.alert_combinations() + alerts
}

/// `(2^m q)^((n - 1) 2^m q)`, exactly.
pub fn design_space_size(spec: &ProblemSpec) -> BigUint {
    BigUint::from(spec.option_count()).pow(spec.genotype_len() as u32)
}

/// A deterministic controller: one option per `(level >= 1, alerts, speed)`
/// context, ordered with `level - 1` outermost, then alerts, then speed.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ControllerGenotype {
    pub options: Vec<u32>,
}

impl ControllerGenotype {
    pub fn new(options: Vec<u32>) -> Self {
        ControllerGenotype { options }
    }

    pub fn zeros(spec: &ProblemSpec) -> Self {
        Self::new(alloc::vec![0; spec.genotype_len()])
    }

    /// Position of the option for the context `(level, alerts, speed)`,
    /// `level >= 1`.
    pub fn position(spec: &ProblemSpec, level: usize, alerts: usize, speed: usize) -> usize {
        ((level - 1) * spec.alert_combinations() + alerts) * spec.q + speed
    }

    pub fn option(&self, spec: &ProblemSpec, level: usize, alerts: usize, speed: usize) -> u32 {
        self.options[Self::position(spec, level, alerts, speed)]
    }

    pub fn check(&self, spec: &ProblemSpec) -> Result<()> {
        let len = spec.genotype_len();
        let count = spec.option_count();
        if self.options.len() != len {
            return Err(Error::input(format!(
                "genotype has {} options, expected {len} integers each in [0, {count})",
                self.options.len()
            )));
        }
        if let Some((i, o)) = self
            .options
            .iter()
            .enumerate()
            .find(|(_, &o)| o as usize >= count)
        {
            return Err(Error::input(format!(
                "genotype option {i} is {o}, expected {len} integers each in [0, {count})"
            )));
        }
        Ok(())
    }
}

impl fmt::Display for ControllerGenotype {
    /// Hyphen-joined option integers.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, o) in self.options.iter().enumerate() {
            if i > 0 {
                f.write_str("-")?;
            }
            write!(f, "{o}")?;
        }
        Ok(())
    }
}

impl core::str::FromStr for ControllerGenotype {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.trim()
            .split('-')
            .map(|part| {
                part.trim()
                    .parse::<u32>()
                    .map_err(|_| Error::input(format!("genotype entry {part:?} is not a non-negative integer")))
            })
            .collect::<Result<Vec<_>>>()
            .map(ControllerGenotype::new)
    }
}

fn coord_label(spec: &ProblemSpec, c: StateCoord) -> String {
    let level = match c.level {
        0 => String::from("A"),
        l if l + 1 == spec.n => String::from("I"),
        l => format!("L{l}"),
    };
    format!(
        "{level},{:0width$b},{},{}",
        c.alerts,
        c.speed,
        if c.controller_active { "c" } else { "~c" },
        width = spec.m
    )
}

/// Materializes the CTMC of the controller encoded by `genotype`.
///
/// Edges per source state, in this order:
/// - inactive, any level: driver transitions to `(l', a, v, active)`;
/// - inactive, level > 0: timer activation to `(l, a, v, active)`;
/// - active, level 0: reset to the initial state;
/// - active, level > 0: the chosen option, deactivating the controller;
/// - level `n - 1`, MRM enabled: timeout to the MRM state.
///
/// The MRM state returns to the initial state at the controller action rate.
pub fn build_ctmc(spec: &ProblemSpec, genotype: &ControllerGenotype) -> Result<Ctmc> {
    spec.checked()?;
    genotype.check(spec)?;
    let initial = state_index(spec, StateCoord::INITIAL)?;
    let mut b = CtmcBuilder::new(spec.num_states(), initial)?;
    let mrm = spec.mrm_state();
    for level in 0..spec.n {
        for alerts in 0..spec.alert_combinations() {
            for speed in 0..spec.q {
                let idle = StateCoord::new(level, alerts, speed, false);
                let awake = StateCoord::new(level, alerts, speed, true);
                let idle_ix = state_index(spec, idle)?;
                let awake_ix = state_index(spec, awake)?;
                b.label(idle_ix, coord_label(spec, idle));
                b.label(awake_ix, coord_label(spec, awake));

                for to in (0..spec.n).filter(|&to| to != level) {
                    let rate = spec.driver_rate(level, to, alerts, speed);
                    if rate > 0.0 {
                        let target = state_index(spec, StateCoord::new(to, alerts, speed, true))?;
                        b.add(idle_ix, target, rate)?;
                    }
                }
                if level != 0 {
                    b.add(idle_ix, awake_ix, spec.timer_rate)?;
                }
                if let (Some(mrm), true) = (mrm, level + 1 == spec.n) {
                    b.add(idle_ix, mrm, 1.0 / spec.mrm_timeout_tau)?;
                }

                if level == 0 {
                    b.add(awake_ix, initial, spec.controller_action_rate)?;
                } else {
                    let option = genotype.option(spec, level, alerts, speed) as usize;
                    let (a2, v2) = decode_option(spec, option)?;
                    let target = state_index(spec, StateCoord::new(level, a2, v2, false))?;
                    b.add(awake_ix, target, spec.controller_action_rate)?;
                }
                if let (Some(mrm), true) = (mrm, level + 1 == spec.n) {
                    b.add(awake_ix, mrm, 1.0 / spec.mrm_timeout_tau)?;
                }
            }
        }
    }
    if let Some(mrm) = mrm {
        b.label(mrm, "MRM");
        b.add(mrm, initial, spec.controller_action_rate)?;
    }
    Ok(b.build())
}

/// The three objective reward structures, indexed like [`build_ctmc`].
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveRewards {
    pub nuisance: RewardStructure,
    pub progress: RewardStructure,
    pub risk: RewardStructure,
}

impl ObjectiveRewards {
    pub fn as_array(&self) -> [&RewardStructure; 3] {
        [&self.nuisance, &self.progress, &self.risk]
    }
}

/// State rates `nuisance(a)`, `progress(v)` and `risk(l, v)`. The MRM state
/// (alerts off, vehicle stopped) accrues nothing; each edge entering it carries
/// the transition reward `risk_mrm` in the risk structure.
pub fn build_reward_structures(spec: &ProblemSpec) -> Result<ObjectiveRewards> {
    spec.checked()?;
    let states = spec.num_states();
    let mut nuisance = alloc::vec![0.0; states];
    let mut progress = alloc::vec![0.0; states];
    let mut risk = alloc::vec![0.0; states];
    for s in 0..spec.base_states() {
        let c = state_coord(spec, s)?;
        nuisance[s] = spec.nuisance[c.alerts];
        progress[s] = spec.progress[c.speed];
        risk[s] = spec.risk[c.level][c.speed];
    }
    let mut risk = RewardStructure::new(risk);
    if let Some(mrm) = spec.mrm_state() {
        let level = spec.n - 1;
        for alerts in 0..spec.alert_combinations() {
            for speed in 0..spec.q {
                for active in [false, true] {
                    let s = state_index(spec, StateCoord::new(level, alerts, speed, active))?;
                    risk.transition_rewards.insert((s, mrm), spec.risk_mrm);
                }
            }
        }
    }
    Ok(ObjectiveRewards {
        nuisance: RewardStructure::new(nuisance),
        progress: RewardStructure::new(progress),
        risk,
    })
}
