//! Configuration files, result formats, parallel evaluation and the command
//! line for `attentive_core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod formats;
pub mod manifest;
pub mod parallel;

pub use error::{exit, AppError};
