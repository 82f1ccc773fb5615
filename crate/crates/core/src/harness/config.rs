use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{HarnessError, Result};
use crate::agents::{DqnConfig, GreedyConfig, QLearningConfig};
use crate::channel::{ChannelParams, JammerProcess};
use crate::env::EnvConfig;

const DEFAULT_CONFIG: &str = include_str!("../../configs/default.json");

/// Either explicit level weights or a target mean solved for by tilting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum JammerSpec {
    Weights { levels: Vec<f64>, weights: Vec<f64> },
    Mean { levels: Vec<f64>, p_off: f64, p_avg: f64 },
}

impl JammerSpec {
    pub fn levels(&self) -> &[f64] {
        match self {
            JammerSpec::Weights { levels, .. } | JammerSpec::Mean { levels, .. } => levels,
        }
    }

    pub fn process(&self) -> Result<JammerProcess<f64>> {
        Ok(match self {
            JammerSpec::Weights { levels, weights } => {
                JammerProcess::new(levels.clone(), weights.clone())?
            }
            JammerSpec::Mean { levels, p_off, p_avg } => {
                JammerProcess::from_mean(levels.clone(), *p_off, *p_avg)?
            }
        })
    }

    /// Same levels and off-probability, new mean power.
    pub fn with_mean(&self, p_avg: f64) -> JammerSpec {
        let p_off = match self {
            JammerSpec::Weights { weights, .. } => weights.first().copied().unwrap_or(0.0),
            JammerSpec::Mean { p_off, .. } => *p_off,
        };
        JammerSpec::Mean {
            levels: self.levels().to_vec(),
            p_off,
            p_avg,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AgentKind {
    Dqn,
    Qlearning,
    Greedy,
    Random,
    OraclePolicy,
}

impl AgentKind {
    pub fn name(&self) -> &'static str {
        match self {
            AgentKind::Dqn => "dqn",
            AgentKind::Qlearning => "qlearning",
            AgentKind::Greedy => "greedy",
            AgentKind::Random => "random",
            AgentKind::OraclePolicy => "oracle-policy",
        }
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AgentKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        [
            AgentKind::Dqn,
            AgentKind::Qlearning,
            AgentKind::Greedy,
            AgentKind::Random,
            AgentKind::OraclePolicy,
        ]
        .into_iter()
        .find(|k| k.name() == s)
        .ok_or_else(|| HarnessError::Config(format!("unknown agent `{s}`")))
    }
}

/// Stopping rule for the dynamic-programming solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub tolerance: f64,
    pub max_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub env: EnvConfig,
    pub jammer: JammerSpec,
    pub channel: ChannelParams<f64>,
    pub agent: AgentKind,
    pub dqn: DqnConfig,
    pub qlearning: QLearningConfig,
    pub greedy: GreedyConfig,
    pub oracle: OracleConfig,
    pub training_slots: u64,
    pub evaluation_slots: u64,
    /// Independent seeds per sweep cell.
    pub seeds: usize,
    /// Reporting window for the training reward curve, in slots.
    pub window: u64,
    pub base_seed: u64,
    pub output_dir: PathBuf,
}

impl RunConfig {
    /// The checked-in default configuration.
    pub fn default_config() -> Self {
        Self::from_json(DEFAULT_CONFIG).expect("bundled default config is valid")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<()> {
        let jammer = self.jammer.process()?;
        self.env.validate(jammer.num_levels())?;
        self.channel.validate()?;
        self.dqn.validate()?;
        self.qlearning.validate()?;
        self.greedy.validate()?;
        if !(self.oracle.tolerance > 0.0) || self.oracle.max_iterations == 0 {
            return Err(HarnessError::Config(
                "oracle tolerance and iteration cap must be positive".into(),
            ));
        }
        if self.training_slots == 0 || self.evaluation_slots == 0 {
            return Err(HarnessError::Config(
                "training and evaluation slot counts must be positive".into(),
            ));
        }
        if self.seeds == 0 || self.window == 0 {
            return Err(HarnessError::Config("seeds and window must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_loads() {
        let cfg = RunConfig::default_config();
        assert_eq!(cfg.env.state_space().len(), 242);
        assert_eq!(cfg.env.num_actions(), 6);
        let jammer = cfg.jammer.process().unwrap();
        assert!((jammer.p_avg() - 7.0).abs() < 1e-9);
        assert_eq!(cfg.agent, AgentKind::Dqn);
    }

    #[test]
    fn json_round_trip() {
        let cfg = RunConfig::default_config();
        assert_eq!(RunConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }

    #[test]
    fn explicit_weights_are_accepted() {
        let mut cfg = RunConfig::default_config();
        cfg.jammer = JammerSpec::Weights {
            levels: vec![0.0, 5.0, 10.0, 15.0],
            weights: vec![0.0, 0.0, 0.0, 1.0],
        };
        let back = RunConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back.jammer, cfg.jammer);
        assert_eq!(back.jammer.process().unwrap().p_avg(), 15.0);
    }

    #[test]
    fn rejects_invalid_configs() {
        let mut cfg = RunConfig::default_config();
        cfg.training_slots = 0;
        assert!(matches!(cfg.validate(), Err(HarnessError::Config(_))));

        let mut cfg = RunConfig::default_config();
        cfg.jammer = cfg.jammer.with_mean(12.0);
        assert!(cfg.validate().unwrap_err().is_config_error());

        let mut cfg = RunConfig::default_config();
        cfg.greedy.t_harvest = 11;
        assert!(cfg.validate().unwrap_err().is_config_error());

        let text = RunConfig::default_config().to_json().replace("\"seeds\"", "\"seedz\"");
        assert!(RunConfig::from_json(&text).is_err());
    }

    #[test]
    fn agent_names_parse() {
        for k in ["dqn", "qlearning", "greedy", "random", "oracle-policy"] {
            assert_eq!(k.parse::<AgentKind>().unwrap().name(), k);
        }
        assert!("ppo".parse::<AgentKind>().is_err());
    }
}
