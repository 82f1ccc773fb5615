use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use super::config::{AgentKind, RunConfig};
use super::csv::SweepRow;
use super::runner::{evaluate_agent, Metrics};
use super::seed::derive_run_seed;
use super::svg::Series;
use super::{HarnessError, Result};

/// Agent label of the greedy heuristic at its best harvesting period.
pub const GREEDY_BEST: &str = "greedy-best";

pub const METRICS: [&str; 3] = ["throughput", "packet_loss_rate", "pdr"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepParam {
    PAvg,
    DtHat,
    THarvest,
}

impl SweepParam {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParam::PAvg => "p_avg",
            SweepParam::DtHat => "dt_hat",
            SweepParam::THarvest => "t_harvest",
        }
    }

    /// Copy of `cfg` with this parameter set to `value`.
    pub fn apply(&self, cfg: &RunConfig, value: f64) -> Result<RunConfig> {
        let mut out = cfg.clone();
        let integer = |lo: f64, hi: f64| -> Result<u32> {
            if value.fract() != 0.0 || value < lo || value > hi {
                return Err(HarnessError::Config(format!(
                    "{} must be an integer in [{lo}, {hi}], got {value}",
                    self.name()
                )));
            }
            Ok(value as u32)
        };
        match self {
            SweepParam::PAvg => out.jammer = cfg.jammer.with_mean(value),
            SweepParam::DtHat => out.env.dt_hat = integer(1.0, cfg.env.d_max as f64)?,
            SweepParam::THarvest => out.greedy.t_harvest = integer(0.0, cfg.greedy.t_cycle as f64)?,
        }
        out.validate()?;
        Ok(out)
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParam {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "p_avg" => Ok(SweepParam::PAvg),
            "dt_hat" => Ok(SweepParam::DtHat),
            "t_harvest" => Ok(SweepParam::THarvest),
            _ => Err(HarnessError::Config(format!(
                "unknown sweep parameter `{s}` (expected p_avg, dt_hat or t_harvest)"
            ))),
        }
    }
}

/// Per-seed evaluation metrics of one agent at one parameter value.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub value: f64,
    pub agent: String,
    pub runs: Vec<Metrics>,
}

impl Cell {
    pub fn samples(&self, metric: &str) -> Vec<f64> {
        self.runs
            .iter()
            .map(|m| match metric {
                "throughput" => m.avg_throughput(),
                "packet_loss_rate" => m.packet_loss_rate(),
                "pdr" => m.pdr(),
                other => panic!("unknown metric `{other}`"),
            })
            .collect()
    }

    /// Mean and sample standard deviation.
    pub fn stats(&self, metric: &str) -> (f64, f64) {
        mean_std(&self.samples(metric))
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub param: SweepParam,
    pub cells: Vec<Cell>,
    /// Harvesting period picked for the greedy baseline at each value.
    pub greedy_choice: Vec<(f64, u32)>,
}

impl SweepTable {
    pub fn cell(&self, value: f64, agent: &str) -> Option<&Cell> {
        self.cells.iter().find(|c| c.value == value && c.agent == agent)
    }

    pub fn agents(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for c in &self.cells {
            if !out.contains(&c.agent) {
                out.push(c.agent.clone());
            }
        }
        out
    }

    pub fn rows(&self) -> Vec<SweepRow> {
        let mut rows = Vec::new();
        for c in &self.cells {
            for metric in METRICS {
                let (mean, stddev) = c.stats(metric);
                rows.push(SweepRow {
                    param: self.param.name().into(),
                    value: c.value,
                    agent: c.agent.clone(),
                    metric: metric.into(),
                    mean,
                    stddev,
                    n_seeds: c.runs.len(),
                });
            }
        }
        rows
    }

    /// One series per agent for `metric`, ordered by parameter value.
    pub fn series(&self, metric: &str) -> Vec<Series> {
        self.agents()
            .into_iter()
            .map(|agent| {
                let mut points: Vec<(f64, f64, f64)> = self
                    .cells
                    .iter()
                    .filter(|c| c.agent == agent)
                    .map(|c| {
                        let (m, s) = c.stats(metric);
                        (c.value, m, s)
                    })
                    .collect();
                points.sort_by(|a, b| a.0.total_cmp(&b.0));
                Series { name: agent, points }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy)]
enum Job {
    Agent(AgentKind),
    GreedyAt(u32),
}

/// Evaluates the configured agent and the greedy baseline at every value,
/// over `cfg.seeds` seeds each.
///
/// When sweeping `p_avg` or `dt_hat`, greedy is run at every harvesting
/// period in `0..=t_cycle` and the one with the highest mean throughput is
/// reported as `greedy-best`. When sweeping `t_harvest`, only greedy runs.
/// A greedy configured agent yields only the greedy baseline.
pub fn sweep(cfg: &RunConfig, param: SweepParam, values: &[f64]) -> Result<SweepTable> {
    cfg.validate()?;
    let configs: Vec<RunConfig> = values
        .iter()
        .map(|v| param.apply(cfg, *v))
        .collect::<Result<_>>()?;
    let mut jobs: Vec<(usize, Job, usize)> = Vec::new();
    for vi in 0..values.len() {
        let mut kinds = Vec::new();
        if param == SweepParam::THarvest {
            kinds.push(Job::Agent(AgentKind::Greedy));
        } else {
            if cfg.agent != AgentKind::Greedy {
                kinds.push(Job::Agent(cfg.agent));
            }
            kinds.extend((0..=cfg.greedy.t_cycle).map(Job::GreedyAt));
        }
        for kind in kinds {
            jobs.extend((0..cfg.seeds).map(|s| (vi, kind, s)));
        }
    }
    let results: Vec<Metrics> = jobs
        .par_iter()
        .map(|(vi, job, s)| {
            let seed = derive_run_seed(cfg.base_seed, *s as u64);
            match job {
                Job::Agent(kind) => evaluate_agent(&configs[*vi], *kind, seed),
                Job::GreedyAt(t) => {
                    let mut c = configs[*vi].clone();
                    c.greedy.t_harvest = *t;
                    evaluate_agent(&c, AgentKind::Greedy, seed)
                }
            }
        })
        .collect::<Result<_>>()?;

    let mut cells = Vec::new();
    let mut greedy_choice = Vec::new();
    let chunks = jobs.chunks(cfg.seeds).zip(results.chunks(cfg.seeds));
    let mut greedy_runs: Vec<(u32, Vec<Metrics>)> = Vec::new();
    let mut current = usize::MAX;
    let mut flush = |vi: usize, runs: &mut Vec<(u32, Vec<Metrics>)>, cells: &mut Vec<Cell>| {
        if runs.is_empty() {
            return;
        }
        let best = runs
            .iter()
            .map(|(t, r)| (*t, mean_std(&r.iter().map(Metrics::avg_throughput).collect::<Vec<_>>()).0))
            .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
        let runs_at_best = runs.iter().find(|(t, _)| *t == best.0).map(|(_, r)| r.clone()).unwrap_or_default();
        greedy_choice.push((values[vi], best.0));
        cells.push(Cell {
            value: values[vi],
            agent: GREEDY_BEST.into(),
            runs: runs_at_best,
        });
        runs.clear();
    };
    for (job_chunk, metric_chunk) in chunks {
        let (vi, job, _) = job_chunk[0];
        if vi != current {
            if current != usize::MAX {
                flush(current, &mut greedy_runs, &mut cells);
            }
            current = vi;
        }
        match job {
            Job::Agent(kind) => cells.push(Cell {
                value: values[vi],
                agent: kind.name().into(),
                runs: metric_chunk.to_vec(),
            }),
            Job::GreedyAt(t) => greedy_runs.push((t, metric_chunk.to_vec())),
        }
    }
    if current != usize::MAX {
        flush(current, &mut greedy_runs, &mut cells);
    }
    Ok(SweepTable {
        param,
        cells,
        greedy_choice,
    })
}
