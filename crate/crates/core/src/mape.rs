//! Reading simulated trajectories as monitor/analyse/plan/execute event logs.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::design::{design_state, DesignState, ProblemSpec, StateCoord};
use crate::sim::Trajectory;
use crate::{Error, Result};

/// Which construction rule produced a transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TransitionFamily {
    /// Driver attentiveness change, activating the controller.
    DriverChange,
    /// Controller finds the driver attentive and resets alerts and speed.
    Reset,
    /// Periodic timer activating the controller while not attentive.
    Timer,
    /// Controller applies its chosen alerts and speed.
    ControllerOption,
    MrmTimeout,
    MrmComplete,
}

impl TransitionFamily {
    pub fn is_controller_action(self) -> bool {
        matches!(self, TransitionFamily::Reset | TransitionFamily::ControllerOption)
    }

    /// MAPE stage narrated by the transition.
    pub fn stage(self) -> &'static str {
        match self {
            TransitionFamily::DriverChange => "monitor/analyse",
            TransitionFamily::Timer => "monitor",
            TransitionFamily::Reset | TransitionFamily::ControllerOption => "plan/execute",
            TransitionFamily::MrmTimeout | TransitionFamily::MrmComplete => "execute",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapeEvent {
    pub time: f64,
    pub family: TransitionFamily,
    pub from: DesignState,
    pub to: DesignState,
    message: String,
}

impl MapeEvent {
    pub fn message(&self) -> &str {
        &self.message
    }
}

impl fmt::Display for MapeEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:.3}s] {}", self.time, self.message)
    }
}

fn level_name(spec: &ProblemSpec, level: usize) -> String {
    match level {
        0 => String::from("attentive"),
        l if l + 1 == spec.n => String::from("inattentive"),
        l => format!("level {l}"),
    }
}

/// `alert1 ON, alert2 OFF, speed level 1`
pub fn describe_setting(spec: &ProblemSpec, alerts: usize, speed: usize) -> String {
    let mut out = String::new();
    for i in 0..spec.m {
        let on = alerts >> i & 1 == 1;
        out.push_str(&format!("alert{} {}, ", i + 1, if on { "ON" } else { "OFF" }));
    }
    out.push_str(&format!("speed level {speed}"));
    out
}

fn classify(spec: &ProblemSpec, time: f64, from: DesignState, to: DesignState) -> Result<MapeEvent> {
    use DesignState::{Mrm, Regular};
    let (family, message) = match (from, to) {
        (Regular(a), Regular(b)) if !a.controller_active && b.controller_active => {
            if a.alerts != b.alerts || a.speed != b.speed {
                return Err(unclassifiable(from, to));
            }
            if a.level != b.level {
                (
                    TransitionFamily::DriverChange,
                    format!(
                        "monitor: driver {} -> {}; analyse: controller activated",
                        level_name(spec, a.level),
                        level_name(spec, b.level)
                    ),
                )
            } else if a.level != 0 {
                (
                    TransitionFamily::Timer,
                    format!("timer: controller activated, driver still {}", level_name(spec, a.level)),
                )
            } else {
                return Err(unclassifiable(from, to));
            }
        }
        (Regular(a), Regular(b)) if a.controller_active && !b.controller_active => {
            if a.level == 0 && b == StateCoord::INITIAL {
                (
                    TransitionFamily::Reset,
                    format!("controller: driver attentive, {}", describe_setting(spec, 0, 0)),
                )
            } else if a.level != 0 && a.level == b.level {
                (
                    TransitionFamily::ControllerOption,
                    format!("controller: {}", describe_setting(spec, b.alerts, b.speed)),
                )
            } else {
                return Err(unclassifiable(from, to));
            }
        }
        (Regular(a), Mrm) if a.level + 1 == spec.n => (
            TransitionFamily::MrmTimeout,
            format!("MRM: driver inattentive for tau = {} s, minimum-risk manoeuvre", spec.mrm_timeout_tau),
        ),
        (Mrm, Regular(b)) if b == StateCoord::INITIAL => (
            TransitionFamily::MrmComplete,
            String::from("MRM complete: vehicle stopped, controller reset"),
        ),
        _ => return Err(unclassifiable(from, to)),
    };
    Ok(MapeEvent {
        time,
        family,
        from,
        to,
        message,
    })
}

fn unclassifiable(from: DesignState, to: DesignState) -> Error {
    Error::Consistency(format!(
        "transition {from:?} -> {to:?} matches no transition family"
    ))
}

/// Classifies every transition of a trajectory over a CTMC built from `spec`.
pub fn interpret_trajectory(spec: &ProblemSpec, trajectory: &Trajectory) -> Result<Vec<MapeEvent>> {
    trajectory
        .events
        .iter()
        .map(|e| {
            let from = design_state(spec, e.from).map_err(|err| Error::Consistency(format!("{err}")))?;
            let to = design_state(spec, e.to).map_err(|err| Error::Consistency(format!("{err}")))?;
            classify(spec, e.time, from, to)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{build_ctmc, encode_option, state_index, ControllerGenotype};
    use crate::sim::{simulate, Event};
    use alloc::vec;

    fn spec() -> ProblemSpec {
        let mut s = ProblemSpec::zeroed(3, 2, 2);
        for from in 0..3 {
            for to in 0..3 {
                for a in 0..4 {
                    for v in 0..2 {
                        if from != to {
                            s.set_driver_rate(from, to, a, v, 0.2);
                        }
                    }
                }
            }
        }
        s.nuisance = vec![0.0, 1.0, 1.0, 2.0];
        s.timer_rate = 0.5;
        s.horizon_t = 60.0;
        s
    }

    #[test]
    fn empty_trajectory_gives_empty_log() {
        let t = Trajectory { seed: 0, initial_state: 0, events: vec![], end_time: 5.0 };
        assert!(interpret_trajectory(&spec(), &t).unwrap().is_empty());
    }

    #[test]
    fn option_line_names_alerts_and_speed() {
        let s = spec();
        let from = state_index(&s, StateCoord::new(1, 0, 0, true)).unwrap();
        let to = state_index(&s, StateCoord::new(1, 0b01, 1, false)).unwrap();
        let t = Trajectory {
            seed: 0,
            initial_state: from,
            events: vec![Event { time: 1.0, from, to }],
            end_time: 2.0,
        };
        let log = interpret_trajectory(&s, &t).unwrap();
        assert_eq!(log[0].family, TransitionFamily::ControllerOption);
        assert_eq!(log[0].message(), "controller: alert1 ON, alert2 OFF, speed level 1");
    }

    #[test]
    fn foreign_transition_is_a_consistency_error() {
        let s = spec();
        let from = state_index(&s, StateCoord::new(1, 0, 0, false)).unwrap();
        let to = state_index(&s, StateCoord::new(2, 1, 0, false)).unwrap();
        let t = Trajectory { seed: 0, initial_state: from, events: vec![Event { time: 1.0, from, to }], end_time: 2.0 };
        assert!(matches!(interpret_trajectory(&s, &t), Err(Error::Consistency(_))));
    }

    #[test]
    fn controller_actions_recount() {
        let s = spec();
        let mut g = ControllerGenotype::zeros(&s);
        for (i, o) in g.options.iter_mut().enumerate() {
            *o = (i % s.option_count()) as u32;
        }
        g.options[0] = encode_option(&s, 0b11, 1) as u32;
        let c = build_ctmc(&s, &g).unwrap();
        for seed in 0..20 {
            let t = simulate(&c, 200.0, seed).unwrap();
            let log = interpret_trajectory(&s, &t).unwrap();
            assert_eq!(log.len(), t.events.len());
            let actions = log.iter().filter(|e| e.family.is_controller_action()).count();
            let raw = t
                .events
                .iter()
                .filter(|e| e.from % 2 == 1 && e.to % 2 == 0)
                .count();
            assert_eq!(actions, raw);
        }
    }
}
