//! Discrete-time simulator and learning harness for an energy-harvesting
//! ambient-backscatter transmitter facing a UAV jammer.
//!
//! The crate is organised bottom-up:
//!
//! * [`channel`]: air-to-ground path loss, LoS probability, SINR and the
//!   exogenous jamming power-level process.
//! * [`env`]: the slotted MDP: states, actions, the one-slot transition
//!   kernel and a seeded simulator around it.
//! * [`nn`]: a small multilayer perceptron with analytic gradients and Adam.
//! * [`agents`]: DQN, tabular Q-learning, the greedy EH/AmBC heuristic and
//!   a uniform random policy.
//! * [`oracle`]: the exact transition model plus discounted value iteration
//!   and relative value iteration for the average-reward objective.
//! * [`harness`]: configuration, seeded runs, metrics, sweeps and CSV/SVG
//!   output.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below name the concrete instantiations used by the harness and tests.

pub mod agents;
pub mod channel;
pub mod env;
pub mod harness;
pub mod nn;
pub mod oracle;
mod scalar;

pub use scalar::{cast, from_count, Scalar};

/// Scalar type used for DQN training in the harness.
pub type LearnerReal = f32;

pub type Mlp32 = nn::Mlp<f32>;
pub type Mlp64 = nn::Mlp<f64>;
pub type AdamState32 = nn::AdamState<f32>;
pub type AdamState64 = nn::AdamState<f64>;
pub type DqnAgent32 = agents::DqnAgent<f32>;
pub type DqnAgent64 = agents::DqnAgent<f64>;
pub type QTable64 = agents::QTable<f64>;
pub type JammerProcess64 = channel::JammerProcess<f64>;
pub type ChannelParams64 = channel::ChannelParams<f64>;
pub type TransitionModel64 = oracle::TransitionModel<f64>;
pub type Solution64 = oracle::Solution<f64>;
