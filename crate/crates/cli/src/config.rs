use dormhgt::experiments::{Direction, DEFAULT_EVENT_CAP, DEFAULT_RADIUS};
use dormhgt::ode::System;
use dormhgt::regime::Axis;
use dormhgt::Params;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::CliError;

/// Everything a run needs. Every emitted echo of this structure parses back
/// to an equal value.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<Params>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ode: Option<OdeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ssa: Option<SsaConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub invade: Option<InvadeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regime_map: Option<MapConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branching: Option<BranchingConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OdeConfig {
    pub system: System,
    /// Defaults to 0.1 in every coordinate.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init: Option<Vec<f64>>,
    pub t_end: f64,
    pub dt: f64,
    pub rtol: f64,
    pub atol: f64,
    pub converge: bool,
    pub t_cap: f64,
    pub match_tol: f64,
}

impl Default for OdeConfig {
    fn default() -> Self {
        Self {
            system: System::Full,
            init: None,
            t_end: 50.0,
            dt: 0.1,
            rtol: 1e-9,
            atol: 1e-12,
            converge: false,
            t_cap: 1e4,
            match_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SsaConfig {
    #[serde(rename = "K")]
    pub capacity: u64,
    /// Initial counts (active, dormant, trait 2).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init: Option<[u64; 3]>,
    /// Initial densities, multiplied by `K` and rounded.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init_scaled: Option<[f64; 3]>,
    pub t_end: f64,
    pub dt: f64,
    pub event_cap: u64,
}

impl Default for SsaConfig {
    fn default() -> Self {
        Self {
            capacity: 1000,
            init: None,
            init_scaled: None,
            t_end: 10.0,
            dt: 0.1,
            event_cap: DEFAULT_EVENT_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InvadeConfig {
    pub direction: Direction,
    #[serde(rename = "K")]
    pub capacities: Vec<u64>,
    pub trials: u64,
    pub beta: f64,
    pub event_cap: u64,
}

impl Default for InvadeConfig {
    fn default() -> Self {
        Self {
            direction: Direction::TwoIntoOne,
            capacities: vec![1000],
            trials: 1000,
            beta: DEFAULT_RADIUS,
            event_cap: DEFAULT_EVENT_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MapConfig {
    pub lambda1: Axis,
    pub lambda2: Axis,
}

impl Default for MapConfig {
    fn default() -> Self {
        let axis = Axis {
            min: 0.1,
            max: 5.0,
            points: 50,
        };
        Self {
            lambda1: axis,
            lambda2: axis,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BranchingConfig {
    pub verify_mc: u64,
    pub survival_threshold: u64,
    pub event_cap: u64,
}

impl Default for BranchingConfig {
    fn default() -> Self {
        Self {
            verify_mc: 0,
            survival_threshold: 10_000,
            event_cap: 100_000_000,
        }
    }
}

pub fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<RunConfig, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Usage(format!("bad config: {e}")))
}
