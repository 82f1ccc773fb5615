use serde::{Deserialize, Serialize};

use super::{AgentError, Policy, Result};
use crate::env::{Action, State};

/// Fixed EH-then-AmBC cycle used while jammed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GreedyConfig {
    /// Length of the repeating cycle in slots.
    pub t_cycle: u32,
    /// Harvesting slots at the start of every cycle.
    pub t_harvest: u32,
}

impl GreedyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.t_cycle == 0 || self.t_harvest > self.t_cycle {
            return Err(AgentError::Config(format!(
                "need 1 <= t_cycle and t_harvest <= t_cycle, got t_cycle={}, t_harvest={}",
                self.t_cycle, self.t_harvest
            )));
        }
        Ok(())
    }
}

/// AT when clear; when jammed, EH for the first `t_harvest` slots of each
/// cycle and AmBC for the rest. `phase` counts consecutive jammed slots.
pub fn greedy_act(state: &State, phase: u64, cfg: &GreedyConfig) -> Action {
    if !state.jammed {
        return Action::ActiveTx;
    }
    if phase % u64::from(cfg.t_cycle) < u64::from(cfg.t_harvest) {
        Action::Harvest
    } else {
        Action::Backscatter
    }
}

#[derive(Debug, Clone)]
pub struct GreedyPolicy {
    cfg: GreedyConfig,
    phase: u64,
}

impl GreedyPolicy {
    pub fn new(cfg: GreedyConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { cfg, phase: 0 })
    }

    pub fn phase(&self) -> u64 {
        self.phase
    }
}

impl Policy for GreedyPolicy {
    fn act(&mut self, state: &State) -> Action {
        if !state.jammed {
            self.phase = 0;
            return Action::ActiveTx;
        }
        let a = greedy_act(state, self.phase, &self.cfg);
        self.phase += 1;
        a
    }
}
