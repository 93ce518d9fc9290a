//! Scenario files: JSON documents describing one simulation setup.
//!
//! Every field except `seed` has a default; unknown keys are rejected.
//!
//! ```json
//! {
//!   "seed": 42,
//!   "system": { "total_volume": 20.0, "transparent": true },
//!   "sampler": { "kind": "uniform", "low": 0.5, "high": 3.0 },
//!   "runs_per_pair": 10000,
//!   "tie_policy": "error",
//!   "locality_samples": 1000,
//!   "amplitudes": [[0.0, 0.0], ..., [1.0, 0.0], ...],
//!   "singlet_angles": [0.0, 270.0, 45.0, 135.0],
//!   "singlet_mode": "analytic",
//!   "flow": { "lambda_a": 2.0, "lambda_b": 1.0, "dt": 0.0001 }
//! }
//! ```

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bell::LambdaDistribution;
use crate::error::{Error, Result};
use crate::quantum::{make_state, SingletSettings, VesselSuperpositionState, STATE_COUNT};
use crate::vessel::{SiphonDiameters, TiePolicy, VesselSystem};

pub const DEFAULT_RUNS_PER_PAIR: usize = 10_000;
pub const DEFAULT_LOCALITY_SAMPLES: usize = 1_000;
pub const DEFAULT_FLOW_STEP: f64 = 1e-4;
/// Settings (A, A', B, B') in degrees reaching 2√2 on the singlet.
pub const DEFAULT_SINGLET_ANGLES: [f64; 4] = [0.0, 270.0, 45.0, 135.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SingletMode {
    /// Exact expectations `-a·b`.
    #[default]
    Analytic,
    /// Sampled outcomes, `runs_per_pair` per pair.
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    pub lambda_a: f64,
    pub lambda_b: f64,
    #[serde(default = "default_flow_step")]
    pub dt: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            lambda_a: 2.0,
            lambda_b: 1.0,
            dt: DEFAULT_FLOW_STEP,
        }
    }
}

impl FlowConfig {
    pub fn lambda(&self) -> Result<SiphonDiameters> {
        SiphonDiameters::new(self.lambda_a, self.lambda_b)
    }
}

fn default_flow_step() -> f64 {
    DEFAULT_FLOW_STEP
}

fn default_runs() -> usize {
    DEFAULT_RUNS_PER_PAIR
}

fn default_locality_samples() -> usize {
    DEFAULT_LOCALITY_SAMPLES
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawScenario")]
pub struct Scenario {
    pub seed: u64,
    pub system: VesselSystem,
    pub sampler: LambdaDistribution,
    pub runs_per_pair: usize,
    pub tie_policy: TiePolicy,
    pub locality_samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amplitudes: Option<Vec<[f64; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub singlet_angles: Option<[f64; 4]>,
    pub singlet_mode: SingletMode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flow: Option<FlowConfig>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    seed: Option<u64>,
    #[serde(default)]
    system: VesselSystem,
    #[serde(default)]
    sampler: LambdaDistribution,
    #[serde(default = "default_runs")]
    runs_per_pair: usize,
    #[serde(default)]
    tie_policy: TiePolicy,
    #[serde(default = "default_locality_samples")]
    locality_samples: usize,
    #[serde(default)]
    amplitudes: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    singlet_angles: Option<[f64; 4]>,
    #[serde(default)]
    singlet_mode: SingletMode,
    #[serde(default)]
    flow: Option<FlowConfig>,
}

impl TryFrom<RawScenario> for Scenario {
    type Error = String;

    fn try_from(raw: RawScenario) -> std::result::Result<Self, String> {
        let seed = raw
            .seed
            .ok_or("field `seed` is required: give an explicit 64-bit seed so the run is reproducible")?;
        if raw.runs_per_pair == 0 {
            return Err("field `runs_per_pair` must be at least 1".into());
        }
        if raw.locality_samples == 0 {
            return Err("field `locality_samples` must be at least 1".into());
        }
        raw.sampler.validate().map_err(|e| format!("field `sampler`: {e}"))?;
        if let Some(amps) = &raw.amplitudes {
            if amps.len() != STATE_COUNT {
                return Err(format!(
                    "field `amplitudes`: expected {STATE_COUNT} [re, im] pairs, got {}",
                    amps.len()
                ));
            }
            if amps.iter().flatten().any(|v| !v.is_finite()) {
                return Err("field `amplitudes`: entries must be finite".into());
            }
        }
        if let Some(angles) = raw.singlet_angles {
            if angles.iter().any(|a| !a.is_finite()) {
                return Err("field `singlet_angles`: angles must be finite".into());
            }
        }
        if let Some(flow) = raw.flow {
            flow.lambda().map_err(|e| format!("field `flow`: {e}"))?;
            if !(flow.dt.is_finite() && flow.dt > 0.0) {
                return Err(format!("field `flow.dt`: must be > 0, got {}", flow.dt));
            }
        }
        Ok(Scenario {
            seed,
            system: raw.system,
            sampler: raw.sampler,
            runs_per_pair: raw.runs_per_pair,
            tie_policy: raw.tie_policy,
            locality_samples: raw.locality_samples,
            amplitudes: raw.amplitudes,
            singlet_angles: raw.singlet_angles,
            singlet_mode: raw.singlet_mode,
            flow: raw.flow,
        })
    }
}

impl Scenario {
    /// Defaults everywhere, with the given seed.
    pub fn with_seed(seed: u64) -> Self {
        parse_scenario_str(&format!("{{\"seed\": {seed}}}")).expect("default scenario is valid")
    }

    /// The superposition state; uniform over all 11 splits when no amplitudes
    /// are given.
    pub fn state(&self) -> Result<VesselSuperpositionState> {
        match &self.amplitudes {
            None => Ok(VesselSuperpositionState::uniform()),
            Some(pairs) => {
                let amps: Vec<Complex64> = pairs.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
                make_state(&amps, false)
            }
        }
    }

    pub fn singlet_settings(&self) -> SingletSettings {
        SingletSettings::planar(self.singlet_angles.unwrap_or(DEFAULT_SINGLET_ANGLES))
    }

    pub fn flow_config(&self) -> FlowConfig {
        self.flow.unwrap_or_default()
    }
}

pub fn parse_scenario_str(text: &str) -> Result<Scenario> {
    serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
}

pub fn parse_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read scenario {}: {e}", path.display())))?;
    parse_scenario_str(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}
