//! Configuration, seeded training and evaluation runs, parameter sweeps
//! and CSV/SVG output.

mod config;
mod csv;
mod runner;
mod seed;
mod svg;
mod sweep;

pub use self::config::{AgentKind, JammerSpec, OracleConfig, RunConfig};
pub use self::csv::{emit_csv, read_csv, ConvergenceRow, CsvRow, EvalRow, SweepRow};
pub use self::runner::{
    convergence_rows, convergence_step, evaluate, evaluate_agent, run_training, solve_oracle,
    trailing_average, Checkpoint, Metrics, OracleReport, TrainingReport,
};
pub use self::seed::derive_run_seed;
pub use self::svg::{emit_svg, render_svg, Series};
pub use self::sweep::{sweep, Cell, SweepParam, SweepTable, GREEDY_BEST, METRICS};

use thiserror::Error;

use crate::agents::AgentError;
use crate::channel::ChannelError;
use crate::env::EnvError;
use crate::nn::NnError;
use crate::oracle::OracleError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("{0}")]
    Domain(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] ::csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    /// True for errors caught while validating input rather than while running.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            HarnessError::Config(_) | HarnessError::Channel(_) | HarnessError::Json(_)
        ) || matches!(self, HarnessError::Agent(AgentError::Config(_)))
            || matches!(self, HarnessError::Env(EnvError::InvalidConfig(_) | EnvError::InvalidRate(_)))
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
