//! Problem configuration files.
//!
//! A configuration is a TOML document whose keys mirror the problem fields.
//! Rates are in 1/s and `mrm_timeout_tau` in seconds. `horizon_T` is given in
//! hours and converted to seconds on load.
//!
//! ```toml
//! schema_version = 1
//! n = 2
//! m = 1
//! q = 1
//! nuisance = [0.0, 0.3]            # by alert bitmask, entry 0 must be 0
//! progress = [0.0167]              # by speed level
//! risk = [[1e-5], [4e-4]]          # [level][speed]
//! risk_mrm = 0.05
//! mrm_timeout_tau = 15.0
//! mrm_enabled = false
//! controller_action_rate = 2.0
//! timer_rate = 0.0333
//! horizon_T = 4.0                  # hours
//!
//! [[driver_rates]]                 # one block per ordered level pair
//! from = 0
//! to = 1
//! rates = [[0.0033], [0.002]]      # [alert bitmask][speed]
//!
//! [solver]                         # optional
//! epsilon = 1e-9
//! ```

use std::path::Path;

use attentive_core::{ProblemSpec, SolverSettings};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::AppError;

pub const SCHEMA_VERSION: u32 = 1;

pub const SECONDS_PER_HOUR: f64 = 3600.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriverRateBlock {
    pub from: usize,
    pub to: usize,
    /// `rates[alerts][speed]`.
    pub rates: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub max_iterations: Option<usize>,
}

fn default_tau() -> f64 {
    15.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub schema_version: u32,
    #[serde(default)]
    pub description: Option<String>,
    pub n: usize,
    pub m: usize,
    pub q: usize,
    pub nuisance: Vec<f64>,
    pub progress: Vec<f64>,
    pub risk: Vec<Vec<f64>>,
    pub risk_mrm: f64,
    #[serde(default = "default_tau")]
    pub mrm_timeout_tau: f64,
    #[serde(default)]
    pub mrm_enabled: bool,
    pub driver_rates: Vec<DriverRateBlock>,
    pub controller_action_rate: f64,
    pub timer_rate: f64,
    #[serde(rename = "horizon_T")]
    pub horizon_t_hours: f64,
    #[serde(default)]
    pub solver: Option<SolverSection>,
}

/// A parsed configuration with the bytes it came from.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub spec: ProblemSpec,
    pub solver: SolverSettings,
    pub sha256: String,
    pub description: Option<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, AppError> {
        toml::from_str(text).map_err(|e| AppError::Parse(e.to_string()))
    }

    /// Converts to a validated problem; every violation is reported with its
    /// field path.
    pub fn to_spec(&self) -> Result<ProblemSpec, AppError> {
        let mut errs = Vec::new();
        if self.schema_version != SCHEMA_VERSION {
            errs.push(format!(
                "schema_version: unsupported version {}, expected {SCHEMA_VERSION}",
                self.schema_version
            ));
        }
        if self.n < 2 || self.m < 1 || self.m > attentive_core::design::MAX_ALERTS || self.q < 1 {
            let shell = ProblemSpec { n: self.n, m: self.m, q: self.q, ..ProblemSpec::zeroed(2, 1, 1) };
            errs.extend(shell.validate().err().unwrap_or_default());
            return Err(AppError::Invalid(errs));
        }
        let mut spec = ProblemSpec::zeroed(self.n, self.m, self.q);
        spec.nuisance = self.nuisance.clone();
        spec.progress = self.progress.clone();
        spec.risk = self.risk.clone();
        spec.risk_mrm = self.risk_mrm;
        spec.mrm_timeout_tau = self.mrm_timeout_tau;
        spec.mrm_enabled = self.mrm_enabled;
        spec.controller_action_rate = self.controller_action_rate;
        spec.timer_rate = self.timer_rate;
        if !(self.horizon_t_hours.is_finite() && self.horizon_t_hours > 0.0) {
            errs.push(format!("horizon_T: must be finite and > 0 hours, got {}", self.horizon_t_hours));
        }
        spec.horizon_t = self.horizon_t_hours * SECONDS_PER_HOUR;

        let alerts = spec.alert_combinations();
        let mut seen = vec![false; self.n * self.n];
        for (k, block) in self.driver_rates.iter().enumerate() {
            let path = format!("driver_rates[{k}]");
            if block.from >= self.n || block.to >= self.n {
                errs.push(format!("{path}: levels ({}, {}) out of range [0, {})", block.from, block.to, self.n));
                continue;
            }
            if block.from == block.to {
                errs.push(format!("{path}: from and to must differ, both are {}", block.from));
                continue;
            }
            let pair = block.from * self.n + block.to;
            if seen[pair] {
                errs.push(format!("{path}: duplicate block for levels {} -> {}", block.from, block.to));
                continue;
            }
            seen[pair] = true;
            if block.rates.len() != alerts {
                errs.push(format!("{path}.rates: expected {alerts} alert rows, got {}", block.rates.len()));
                continue;
            }
            for (a, row) in block.rates.iter().enumerate() {
                if row.len() != self.q {
                    errs.push(format!("{path}.rates[{a}]: expected {} speed entries, got {}", self.q, row.len()));
                    continue;
                }
                for (v, &rate) in row.iter().enumerate() {
                    if !(rate.is_finite() && rate >= 0.0) {
                        errs.push(format!("{path}.rates[{a}][{v}]: must be finite and >= 0, got {rate}"));
                    }
                    spec.set_driver_rate(block.from, block.to, a, v, rate);
                }
            }
        }
        for from in 0..self.n {
            for to in (0..self.n).filter(|&to| to != from) {
                if !seen[from * self.n + to] {
                    errs.push(format!("driver_rates: missing block for levels {from} -> {to}"));
                }
            }
        }
        if let Err(more) = spec.validate() {
            for e in more {
                if !errs.contains(&e) {
                    errs.push(e);
                }
            }
        }
        if errs.is_empty() {
            Ok(spec)
        } else {
            Err(AppError::Invalid(errs))
        }
    }

    pub fn solver_settings(&self) -> Result<SolverSettings, AppError> {
        let mut s = SolverSettings::default();
        if let Some(section) = &self.solver {
            if let Some(e) = section.epsilon {
                s.epsilon = e;
            }
            if let Some(i) = section.max_iterations {
                s.max_iterations = i;
            }
        }
        s.check()
            .map_err(|e| AppError::Invalid(vec![format!("solver: {e}")]))?;
        Ok(s)
    }
}

pub fn load_config(path: &Path) -> Result<LoadedConfig, AppError> {
    let bytes = std::fs::read(path).map_err(|source| AppError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| AppError::Parse(format!("{}: not valid UTF-8", path.display())))?;
    let file = ConfigFile::parse(&text)?;
    Ok(LoadedConfig {
        spec: file.to_spec()?,
        solver: file.solver_settings()?,
        sha256: sha256_hex(&bytes),
        description: file.description.clone(),
    })
}
