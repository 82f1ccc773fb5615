use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{argmax, random_act, AgentError, EpsilonConfig, EpsilonSchedule, Learner, Policy, Result, TablePolicy};
use crate::env::{Action, EnvConfig, State, StateSpace, StepOutcome};
use crate::scalar::{cast, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QLearningConfig {
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon: EpsilonConfig,
}

impl QLearningConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(AgentError::Config(format!(
                "learning rate must lie in (0, 1], got {}",
                self.alpha
            )));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(AgentError::Config(format!(
                "discount must lie in (0, 1), got {}",
                self.gamma
            )));
        }
        self.epsilon.validate()
    }
}

/// Dense `|S| × |A|` action-value table, row-major by state index.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable<T> {
    states: usize,
    actions: usize,
    values: Vec<T>,
    pub alpha: T,
    pub gamma: T,
}

impl<T: Scalar> QTable<T> {
    pub fn new(states: usize, actions: usize, alpha: T, gamma: T) -> Self {
        Self {
            states,
            actions,
            values: vec![T::zero(); states * actions],
            alpha,
            gamma,
        }
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn get(&self, s: usize, a: usize) -> T {
        self.values[s * self.actions + a]
    }

    pub fn set(&mut self, s: usize, a: usize, v: T) {
        self.values[s * self.actions + a] = v;
    }

    pub fn row(&self, s: usize) -> &[T] {
        &self.values[s * self.actions..(s + 1) * self.actions]
    }

    pub fn greedy(&self, s: usize) -> usize {
        argmax(self.row(s))
    }

    pub fn max(&self, s: usize) -> T {
        self.row(s).iter().copied().fold(T::neg_infinity(), T::max)
    }

    /// `Q(s,a) += α (r + γ max_a' Q(s',a') − Q(s,a))`
    pub fn update(&mut self, s: usize, a: usize, reward: T, next: usize) {
        let target = reward + self.gamma * self.max(next);
        let q = self.get(s, a);
        self.set(s, a, q + self.alpha * (target - q));
    }

    /// Plain-text dump: a `qtable <states> <actions>` header, then one row per state.
    pub fn save<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "qtable {} {}", self.states, self.actions)?;
        for s in 0..self.states {
            let row: Vec<String> = self.row(s).iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", row.join(" "))?;
        }
        Ok(())
    }

    /// Reads a dump written by [`QTable::save`]; `alpha` and `gamma` are not stored.
    pub fn load<R: BufRead>(r: R, alpha: T, gamma: T) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .transpose()?
            .ok_or_else(|| AgentError::Parse("empty file".into()))?;
        let dims: Vec<&str> = header.split_whitespace().collect();
        let (states, actions) = match dims.as_slice() {
            ["qtable", s, a] => (
                s.parse::<usize>().map_err(|e| AgentError::Parse(e.to_string()))?,
                a.parse::<usize>().map_err(|e| AgentError::Parse(e.to_string()))?,
            ),
            _ => return Err(AgentError::Parse(format!("bad header `{header}`"))),
        };
        let mut table = Self::new(states, actions, alpha, gamma);
        for s in 0..states {
            let line = lines
                .next()
                .transpose()?
                .ok_or_else(|| AgentError::Parse(format!("missing row {s}")))?;
            let row: Vec<T> = line
                .split_whitespace()
                .map(|t| t.parse::<T>().map_err(|_| AgentError::Parse(format!("bad number `{t}`"))))
                .collect::<Result<_>>()?;
            if row.len() != actions {
                return Err(AgentError::Parse(format!(
                    "row {s} has {} values, expected {actions}",
                    row.len()
                )));
            }
            table.values[s * actions..(s + 1) * actions].copy_from_slice(&row);
        }
        Ok(table)
    }
}

/// Watkins update on state/action values addressed through `space`.
pub fn qlearning_update<T: Scalar>(
    table: &mut QTable<T>,
    space: &StateSpace,
    s: &State,
    a: Action,
    reward: T,
    s_next: &State,
) {
    table.update(space.index(s), a.index(), reward, space.index(s_next));
}

/// ε-greedy tabular Q-learning agent.
#[derive(Debug, Clone)]
pub struct QLearningAgent<T> {
    table: QTable<T>,
    space: StateSpace,
    ra_levels: usize,
    epsilon: EpsilonSchedule,
    rng: ChaCha8Rng,
}

impl<T: Scalar> QLearningAgent<T> {
    pub fn new(cfg: QLearningConfig, env: &EnvConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let space = env.state_space();
        Ok(Self {
            table: QTable::new(space.len(), env.num_actions(), cast(cfg.alpha), cast(cfg.gamma)),
            space,
            ra_levels: env.ra.len(),
            epsilon: EpsilonSchedule::new(cfg.epsilon),
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn table(&self) -> &QTable<T> {
        &self.table
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon.value()
    }
}

impl<T: Scalar> Policy for QLearningAgent<T> {
    fn act(&mut self, state: &State) -> Action {
        if self.rng.random::<f64>() < self.epsilon.value() {
            return random_act(&mut self.rng, self.ra_levels);
        }
        Action::from_index(self.table.greedy(self.space.index(state)), self.ra_levels)
            .expect("table width matches the action space")
    }
}

impl<T: Scalar> Learner for QLearningAgent<T> {
    fn observe(&mut self, state: &State, action: Action, outcome: &StepOutcome) -> Result<()> {
        qlearning_update(
            &mut self.table,
            &self.space,
            state,
            action,
            cast(outcome.reward as f64),
            &outcome.next,
        );
        self.epsilon.advance();
        Ok(())
    }

    fn greedy_policy(&self) -> TablePolicy {
        let indices: Vec<usize> = (0..self.space.len()).map(|s| self.table.greedy(s)).collect();
        TablePolicy::from_indices(self.space, &indices, self.ra_levels)
            .expect("table covers the state space")
    }
}
