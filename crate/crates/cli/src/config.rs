//! Experiment configuration: JSON schema, validation, and instance building.
//!
//! A configuration names exactly one instance source — a bundled preset, a
//! theta list for the two-state family, or inline arm descriptions — plus the
//! policy, horizon, runs, base seed, and optional checkpoint grid and output
//! path. Every emitted file carries an FNV-1a hash of the effective
//! configuration so results can be traced back to the exact inputs.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use banditlab_core::presets::Preset;
use banditlab_core::{make_arm, theta_arm, Arm, BanditInstance};

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Bundled instance name: "S1" or "S2".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    /// Theta parameters of the two-state family, one arm each.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thetas: Option<Vec<f64>>,
    /// Inline arm descriptions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arms: Option<Vec<ArmSpec>>,
    #[serde(default)]
    pub policy: PolicySpec,
    #[serde(default = "default_horizon")]
    pub horizon: u64,
    #[serde(default = "default_runs")]
    pub runs: u64,
    #[serde(default = "default_seed")]
    pub base_seed: u64,
    /// Explicit checkpoint horizons; a logarithmic grid when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoints: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

fn default_horizon() -> u64 {
    10_000
}

fn default_runs() -> u64 {
    100
}

fn default_seed() -> u64 {
    42
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            preset: None,
            thetas: None,
            arms: None,
            policy: PolicySpec::default(),
            horizon: default_horizon(),
            runs: default_runs(),
            base_seed: default_seed(),
            checkpoints: None,
            output: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySpec {
    #[serde(default = "default_policy_name")]
    pub name: String,
    #[serde(rename = "L", default = "default_exploration")]
    pub l: f64,
}

fn default_policy_name() -> String {
    "ucb".to_string()
}

fn default_exploration() -> f64 {
    2.0
}

impl Default for PolicySpec {
    fn default() -> Self {
        PolicySpec {
            name: default_policy_name(),
            l: default_exploration(),
        }
    }
}

/// One arm: either a `theta` shorthand for the two-state family, or a full
/// chain description (transition rows + rewards, optional labels and initial
/// distribution).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub states: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transition: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rewards: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_dist: Option<Vec<f64>>,
}

impl ExperimentConfig {
    pub fn from_file(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))
    }

    /// Field-level validation; instance construction happens separately.
    pub fn validate(&self) -> Result<(), CliError> {
        let mut sources = Vec::new();
        if self.preset.is_some() {
            sources.push("preset");
        }
        if self.thetas.is_some() {
            sources.push("thetas");
        }
        if self.arms.is_some() {
            sources.push("arms");
        }
        match sources.len() {
            0 => {
                return Err(CliError::Config(
                    "no instance source: set exactly one of `preset`, `thetas`, `arms`"
                        .to_string(),
                ))
            }
            1 => {}
            _ => {
                return Err(CliError::Config(format!(
                    "multiple instance sources set ({}); set exactly one of `preset`, `thetas`, `arms`",
                    sources.join(", ")
                )))
            }
        }
        if self.policy.name != "ucb" {
            return Err(CliError::Config(format!(
                "policy.name: unknown policy `{}`; only `ucb` is available",
                self.policy.name
            )));
        }
        if !(self.policy.l >= 0.0 && self.policy.l.is_finite()) {
            return Err(CliError::Config(format!(
                "policy.L must be a nonnegative finite number, got {}",
                self.policy.l
            )));
        }
        if self.runs < 1 {
            return Err(CliError::Config("runs must be at least 1".to_string()));
        }
        if self.horizon < 1 {
            return Err(CliError::Config("horizon must be at least 1".to_string()));
        }
        Ok(())
    }

    /// Builds the bandit instance this configuration describes.
    pub fn build_instance(&self) -> Result<BanditInstance, CliError> {
        let arms: Vec<Arm> = if let Some(name) = &self.preset {
            let preset = Preset::from_name(name).ok_or_else(|| {
                CliError::Config(format!(
                    "preset: unknown preset `{name}` (available: S1, S2)"
                ))
            })?;
            return Ok(preset.instance());
        } else if let Some(thetas) = &self.thetas {
            thetas
                .iter()
                .map(|&t| theta_arm(t).map_err(CliError::from))
                .collect::<Result<_, _>>()?
        } else if let Some(specs) = &self.arms {
            specs
                .iter()
                .enumerate()
                .map(|(i, spec)| build_arm(i, spec))
                .collect::<Result<_, _>>()?
        } else {
            unreachable!("validate() guarantees one source")
        };

        BanditInstance::new(arms).map_err(|e| CliError::Config(e.to_string()))
    }

    /// The theta parameters behind the instance, when it is a theta family.
    pub fn effective_thetas(&self) -> Option<Vec<f64>> {
        if let Some(thetas) = &self.thetas {
            return Some(thetas.clone());
        }
        if let Some(name) = &self.preset {
            return Preset::from_name(name).and_then(Preset::thetas);
        }
        if let Some(specs) = &self.arms {
            let thetas: Vec<f64> = specs.iter().filter_map(|s| s.theta).collect();
            if thetas.len() == specs.len() {
                return Some(thetas);
            }
        }
        None
    }
}

fn build_arm(index: usize, spec: &ArmSpec) -> Result<Arm, CliError> {
    match (&spec.theta, &spec.transition, &spec.rewards) {
        (Some(theta), None, None) => {
            if spec.initial_dist.is_some() {
                return Err(CliError::Config(format!(
                    "arms[{index}]: `initial_dist` cannot be combined with the `theta` shorthand"
                )));
            }
            Ok(theta_arm(*theta)?)
        }
        (Some(_), _, _) => Err(CliError::Config(format!(
            "arms[{index}]: set either `theta` or `transition`+`rewards`, not both"
        ))),
        (None, Some(transition), Some(rewards)) => {
            if let Some(labels) = &spec.states {
                if labels.len() != transition.len() {
                    return Err(CliError::Config(format!(
                        "arms[{index}].states: {} labels for {} transition rows",
                        labels.len(),
                        transition.len()
                    )));
                }
            }
            Ok(make_arm(
                transition.clone(),
                rewards.clone(),
                spec.initial_dist.clone(),
            )?)
        }
        (None, None, _) => Err(CliError::Config(format!(
            "arms[{index}].transition is missing"
        ))),
        (None, Some(_), None) => Err(CliError::Config(format!(
            "arms[{index}].rewards is missing"
        ))),
    }
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Stable hash of any serializable value, for output provenance lines.
pub fn config_hash<T: Serialize>(value: &T) -> String {
    let canonical = serde_json::to_string(value).expect("config serializes");
    format!("{:016x}", fnv1a64(canonical.as_bytes()))
}
