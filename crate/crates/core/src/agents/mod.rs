//! Policies compared by the harness: DQN, tabular Q-learning, the greedy
//! EH/AmBC heuristic, plus a uniform random policy.

mod dqn;
mod greedy;
mod qlearning;
mod replay;

pub use dqn::{
    dqn_act, dqn_sync_target, dqn_train_step, BootstrapTarget, DqnAgent, DqnConfig,
    NetworkTarget, TabulatedTarget, TrainScratch,
};
pub use greedy::{greedy_act, GreedyConfig, GreedyPolicy};
pub use qlearning::{qlearning_update, QLearningAgent, QLearningConfig, QTable};
pub use replay::{ReplayBuffer, Transition};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{Action, EnvError, State, StateSpace, StepOutcome};
use crate::nn::NnError;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error("invalid agent config: {0}")]
    Config(String),
    #[error("malformed Q-table file: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, AgentError>;

/// Anything that picks an action for an observed state.
pub trait Policy {
    fn act(&mut self, state: &State) -> Action;
}

/// A policy that also learns from each observed slot.
pub trait Learner: Policy {
    fn observe(&mut self, state: &State, action: Action, outcome: &StepOutcome) -> Result<()>;

    /// The current greedy (exploration-free) policy as a lookup table.
    fn greedy_policy(&self) -> TablePolicy;
}

/// Multiplicative exploration decay applied once per environment step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonConfig {
    pub start: f64,
    pub end: f64,
    pub decay: f64,
}

impl EpsilonConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.end && self.end <= self.start && self.start <= 1.0) {
            return Err(AgentError::Config(format!(
                "need 0 <= epsilon end ({}) <= start ({}) <= 1",
                self.end, self.start
            )));
        }
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return Err(AgentError::Config(format!(
                "epsilon decay must lie in (0, 1], got {}",
                self.decay
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonSchedule {
    cfg: EpsilonConfig,
    steps: u64,
}

impl EpsilonSchedule {
    pub fn new(cfg: EpsilonConfig) -> Self {
        Self { cfg, steps: 0 }
    }

    /// `max(end, start * decay^k)` after `k` decay steps.
    pub fn value(&self) -> f64 {
        (self.cfg.start * self.cfg.decay.powf(self.steps as f64)).max(self.cfg.end)
    }

    pub fn advance(&mut self) {
        self.steps += 1;
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }
}

/// Lowest index among the maximal entries.
pub fn argmax<T: PartialOrd + Copy>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Uniformly random action.
pub fn random_act<R: Rng + ?Sized>(rng: &mut R, ra_levels: usize) -> Action {
    let index = rng.random_range(0..4 + ra_levels);
    Action::from_index(index, ra_levels).expect("index drawn within the action range")
}

#[derive(Debug, Clone)]
pub struct RandomPolicy {
    rng: ChaCha8Rng,
    ra_levels: usize,
}

impl RandomPolicy {
    pub fn new(ra_levels: usize, seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            ra_levels,
        }
    }
}

impl Policy for RandomPolicy {
    fn act(&mut self, _state: &State) -> Action {
        random_act(&mut self.rng, self.ra_levels)
    }
}

/// Deterministic stationary policy indexed by state.
#[derive(Debug, Clone, PartialEq)]
pub struct TablePolicy {
    space: StateSpace,
    actions: Vec<Action>,
}

impl TablePolicy {
    pub fn new(space: StateSpace, actions: Vec<Action>) -> Self {
        assert_eq!(space.len(), actions.len(), "one action per state");
        Self { space, actions }
    }

    pub fn from_indices(space: StateSpace, indices: &[usize], ra_levels: usize) -> Result<Self> {
        let actions = indices
            .iter()
            .map(|i| Action::from_index(*i, ra_levels))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        if actions.len() != space.len() {
            return Err(AgentError::Config(format!(
                "policy covers {} states, state space has {}",
                actions.len(),
                space.len()
            )));
        }
        Ok(Self { space, actions })
    }

    pub fn action(&self, state: &State) -> Action {
        self.actions[self.space.index(state)]
    }

    pub fn actions(&self) -> &[Action] {
        &self.actions
    }

    pub fn indices(&self) -> Vec<usize> {
        self.actions.iter().map(Action::index).collect()
    }
}

impl Policy for TablePolicy {
    fn act(&mut self, state: &State) -> Action {
        self.action(state)
    }
}
