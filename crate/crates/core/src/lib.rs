//! Driver-attentiveness controller synthesis over parametric continuous-time
//! Markov chains.
//!
//! The crate is `no_std` (with `alloc`) and carries every algorithm: the sparse
//! CTMC and reward-structure types, a uniformization solver for expected
//! cumulative rewards, the controller design space, an exact stochastic
//! simulator with a MAPE-style trajectory interpreter, and NSGA-II search with
//! an exhaustive oracle. File formats, parallel evaluation and the command line
//! live in the `attentive` companion crate.
#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod ctmc;
pub mod design;
mod error;
pub mod mape;
pub mod pareto;
pub mod poisson;
pub mod rng;
pub mod sim;
pub mod synthesis;
pub mod transient;

pub use ctmc::{Ctmc, RewardStructure, StateIndex, Violation};
pub use design::{ControllerGenotype, ProblemSpec, StateCoord};
pub use error::Error;
pub use pareto::ObjectiveVector;
pub use sim::{RewardEstimate, Trajectory};
pub use synthesis::{GaSettings, ParetoFront};
pub use transient::SolverSettings;

pub type Result<T> = core::result::Result<T, Error>;
