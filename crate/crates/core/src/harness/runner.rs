use std::io::Write;

use super::config::{AgentKind, RunConfig};
use super::csv::ConvergenceRow;
use super::seed::derive_run_seed;
use super::Result;
use crate::agents::{
    DqnAgent, GreedyConfig, GreedyPolicy, Learner, Policy, QLearningAgent, QTable, RandomPolicy,
    TablePolicy,
};
use crate::env::{Action, Environment, State, StepOutcome};
use crate::nn::Mlp;
use crate::oracle::{build_model, policy_gain, relative_value_iteration, value_iteration, Solution, TransitionModel};
use crate::LearnerReal;

// Sub-stream indices under a run seed.
const ENV_STREAM: u64 = 0;
const AGENT_STREAM: u64 = 1;
const EVAL_STREAM: u64 = 2;
const EVAL_POLICY_STREAM: u64 = 3;

/// Packet and energy accounting over a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Metrics {
    pub slots: u64,
    pub arrived: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub total_reward: u64,
    pub initial_buffer: u64,
    pub final_buffer: u64,
    pub energy_spent: u64,
    pub energy_harvested: u64,
}

impl Metrics {
    fn starting_at(state: &State) -> Self {
        Self {
            initial_buffer: state.buffer as u64,
            final_buffer: state.buffer as u64,
            ..Self::default()
        }
    }

    fn record(&mut self, o: &StepOutcome) {
        self.slots += 1;
        self.arrived += o.arrived as u64;
        self.delivered += o.delivered as u64;
        self.dropped += o.dropped as u64;
        self.total_reward += o.reward as u64;
        self.energy_spent += o.energy_spent as u64;
        self.energy_harvested += o.energy_harvested as u64;
        self.final_buffer = o.next.buffer as u64;
    }

    /// Delivered packets per slot.
    pub fn avg_throughput(&self) -> f64 {
        ratio(self.delivered, self.slots, 0.0)
    }

    pub fn avg_reward(&self) -> f64 {
        ratio(self.total_reward, self.slots, 0.0)
    }

    /// Delivered over arrived; 1 when nothing arrived.
    pub fn pdr(&self) -> f64 {
        ratio(self.delivered, self.arrived, 1.0)
    }

    /// Dropped over arrived; 0 when nothing arrived.
    pub fn packet_loss_rate(&self) -> f64 {
        ratio(self.dropped, self.arrived, 0.0)
    }

    /// `delivered + dropped + Δbuffer = arrived`
    pub fn accounting_holds(&self) -> bool {
        self.delivered + self.dropped + self.final_buffer == self.arrived + self.initial_buffer
    }
}

fn ratio(num: u64, den: u64, empty: f64) -> f64 {
    if den == 0 {
        empty
    } else {
        num as f64 / den as f64
    }
}

/// What a training run leaves behind.
#[derive(Debug, Clone)]
pub enum Checkpoint {
    Dqn(Mlp<LearnerReal>),
    QTable(QTable<f64>),
    Greedy(GreedyConfig),
    Random,
    Oracle(TablePolicy),
}

impl Checkpoint {
    /// File extension used by [`Checkpoint::save`].
    pub fn extension(&self) -> &'static str {
        match self {
            Checkpoint::Dqn(_) => "mlp",
            Checkpoint::QTable(_) => "qtable",
            _ => "txt",
        }
    }

    pub fn save<W: Write>(&self, mut w: W) -> Result<()> {
        match self {
            Checkpoint::Dqn(net) => net.save(w)?,
            Checkpoint::QTable(table) => table.save(w)?,
            Checkpoint::Greedy(g) => writeln!(w, "greedy t_cycle={} t_harvest={}", g.t_cycle, g.t_harvest)?,
            Checkpoint::Random => writeln!(w, "random")?,
            Checkpoint::Oracle(p) => {
                for a in p.actions() {
                    writeln!(w, "{}", a.name())?;
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainingReport {
    pub agent: AgentKind,
    pub seed: u64,
    pub metrics: Metrics,
    /// `(slot count at window end, mean reward over the window)`
    pub reward_curve: Vec<(u64, f64)>,
    pub checkpoint: Checkpoint,
    /// Exploration-free policy for evaluation, if the agent is state-indexed.
    pub greedy_table: Option<TablePolicy>,
    ra: usize,
}

impl TrainingReport {
    /// The policy evaluated after training: the greedy table for learned and
    /// oracle agents, a fresh heuristic or random policy otherwise.
    pub fn eval_policy(&self) -> Box<dyn Policy> {
        match (&self.greedy_table, &self.checkpoint) {
            (Some(t), _) => Box::new(t.clone()),
            (None, Checkpoint::Greedy(g)) => Box::new(GreedyPolicy::new(*g).expect("validated")),
            (None, _) => Box::new(RandomPolicy::new(
                self.ra,
                derive_run_seed(self.seed, EVAL_POLICY_STREAM),
            )),
        }
    }
}

enum Driver {
    Dqn(Box<DqnAgent<LearnerReal>>),
    QLearning(Box<QLearningAgent<f64>>),
    Fixed(Box<dyn Policy>, Checkpoint, Option<TablePolicy>),
}

impl Driver {
    fn act(&mut self, s: &State) -> Action {
        match self {
            Driver::Dqn(a) => a.act(s),
            Driver::QLearning(a) => a.act(s),
            Driver::Fixed(p, ..) => p.act(s),
        }
    }

    fn observe(&mut self, s: &State, a: Action, o: &StepOutcome) -> Result<()> {
        match self {
            Driver::Dqn(agent) => agent.observe(s, a, o)?,
            Driver::QLearning(agent) => agent.observe(s, a, o)?,
            Driver::Fixed(..) => {}
        }
        Ok(())
    }

    fn finish(self) -> (Checkpoint, Option<TablePolicy>) {
        match self {
            Driver::Dqn(a) => (Checkpoint::Dqn(a.net().clone()), Some(a.greedy_policy())),
            Driver::QLearning(a) => (Checkpoint::QTable(a.table().clone()), Some(a.greedy_policy())),
            Driver::Fixed(_, c, t) => (c, t),
        }
    }
}

fn driver(cfg: &RunConfig, agent: AgentKind, seed: u64) -> Result<Driver> {
    let agent_seed = derive_run_seed(seed, AGENT_STREAM);
    Ok(match agent {
        AgentKind::Dqn => Driver::Dqn(Box::new(DqnAgent::new(cfg.dqn.clone(), &cfg.env, agent_seed)?)),
        AgentKind::Qlearning => {
            Driver::QLearning(Box::new(QLearningAgent::new(cfg.qlearning, &cfg.env, agent_seed)?))
        }
        AgentKind::Greedy => Driver::Fixed(
            Box::new(GreedyPolicy::new(cfg.greedy)?),
            Checkpoint::Greedy(cfg.greedy),
            None,
        ),
        AgentKind::Random => Driver::Fixed(
            Box::new(RandomPolicy::new(cfg.env.ra.len(), agent_seed)),
            Checkpoint::Random,
            None,
        ),
        AgentKind::OraclePolicy => {
            let policy = solve_oracle(cfg)?.average_policy(cfg)?;
            Driver::Fixed(
                Box::new(policy.clone()),
                Checkpoint::Oracle(policy.clone()),
                Some(policy),
            )
        }
    })
}

/// Runs `cfg.training_slots` slots of the configured agent on one seed.
///
/// Each slot: act, step the environment, hand the outcome to the learner
/// (which stores it, trains on a replay batch and syncs its target on
/// schedule), and accumulate the reward window.
pub fn run_training(cfg: &RunConfig, seed: u64) -> Result<TrainingReport> {
    cfg.validate()?;
    run_training_as(cfg, cfg.agent, seed)
}

fn run_training_as(cfg: &RunConfig, agent: AgentKind, seed: u64) -> Result<TrainingReport> {
    let mut env = Environment::new(
        cfg.env.clone(),
        cfg.jammer.process()?,
        derive_run_seed(seed, ENV_STREAM),
    )?;
    let mut driver = driver(cfg, agent, seed)?;
    let mut metrics = Metrics::starting_at(&env.state());
    let mut curve = Vec::with_capacity((cfg.training_slots / cfg.window) as usize + 1);
    let (mut window_sum, mut window_len) = (0u64, 0u64);
    for slot in 1..=cfg.training_slots {
        let s = env.state();
        let a = driver.act(&s);
        let o = env.step(a)?;
        driver.observe(&s, a, &o)?;
        metrics.record(&o);
        window_sum += o.reward as u64;
        window_len += 1;
        if window_len == cfg.window || slot == cfg.training_slots {
            curve.push((slot, window_sum as f64 / window_len as f64));
            window_sum = 0;
            window_len = 0;
        }
    }
    let (checkpoint, greedy_table) = driver.finish();
    Ok(TrainingReport {
        agent,
        seed,
        metrics,
        reward_curve: curve,
        checkpoint,
        greedy_table,
        ra: cfg.env.ra.len(),
    })
}

/// Runs `cfg.evaluation_slots` slots of a fixed policy on a fresh stream.
pub fn evaluate(policy: &mut dyn Policy, cfg: &RunConfig, seed: u64) -> Result<Metrics> {
    let mut env = Environment::new(
        cfg.env.clone(),
        cfg.jammer.process()?,
        derive_run_seed(seed, EVAL_STREAM),
    )?;
    let mut metrics = Metrics::starting_at(&env.state());
    for _ in 0..cfg.evaluation_slots {
        let s = env.state();
        let o = env.step(policy.act(&s))?;
        metrics.record(&o);
    }
    Ok(metrics)
}

/// Evaluation metrics of `agent` on one seed: learned agents are trained
/// first; the heuristic, random and oracle policies are evaluated directly.
pub fn evaluate_agent(cfg: &RunConfig, agent: AgentKind, seed: u64) -> Result<Metrics> {
    let mut policy: Box<dyn Policy> = match agent {
        AgentKind::Dqn | AgentKind::Qlearning => {
            run_training_as(cfg, agent, seed)?.eval_policy()
        }
        AgentKind::Greedy => Box::new(GreedyPolicy::new(cfg.greedy)?),
        AgentKind::Random => Box::new(RandomPolicy::new(
            cfg.env.ra.len(),
            derive_run_seed(seed, EVAL_POLICY_STREAM),
        )),
        AgentKind::OraclePolicy => Box::new(solve_oracle(cfg)?.average_policy(cfg)?),
    };
    evaluate(policy.as_mut(), cfg, seed)
}

/// Mean of the last `span` window averages ending at each window.
pub fn trailing_average(curve: &[(u64, f64)], span: usize) -> Vec<(u64, f64)> {
    let span = span.max(1);
    (0..curve.len())
        .map(|i| {
            let lo = (i + 1).saturating_sub(span);
            let part = &curve[lo..=i];
            (curve[i].0, part.iter().map(|(_, r)| r).sum::<f64>() / part.len() as f64)
        })
        .collect()
}

/// First slot at which the `span`-window trailing average reaches
/// `fraction` of its final value. Only full spans are considered.
pub fn convergence_step(curve: &[(u64, f64)], span: usize, fraction: f64) -> Option<u64> {
    let avg = trailing_average(curve, span);
    let full = avg.get(span.max(1) - 1..)?;
    let last = full.last()?.1;
    full.iter().find(|(_, r)| *r >= fraction * last).map(|(s, _)| *s)
}

pub fn convergence_rows(report: &TrainingReport) -> Vec<ConvergenceRow> {
    report
        .reward_curve
        .iter()
        .map(|(step, r)| ConvergenceRow {
            step: *step,
            window_avg_reward: *r,
            agent: report.agent.name().to_string(),
            seed: report.seed,
        })
        .collect()
}

/// Discounted and average-reward solutions of the configured MDP.
#[derive(Debug, Clone)]
pub struct OracleReport {
    pub model: TransitionModel<f64>,
    /// Discounted optimum at the DQN discount factor.
    pub discounted: Solution<f64>,
    pub average: Solution<f64>,
    /// Long-run average reward of the discounted-optimal policy.
    pub discounted_policy_gain: f64,
}

impl OracleReport {
    pub fn gain(&self) -> f64 {
        self.average.gain.expect("average-reward solution carries a gain")
    }

    pub fn average_policy(&self, cfg: &RunConfig) -> Result<TablePolicy> {
        Ok(TablePolicy::from_indices(
            cfg.env.state_space(),
            &self.average.policy,
            cfg.env.ra.len(),
        )?)
    }

    /// States where the two optimal policies pick different actions.
    pub fn policy_disagreements(&self) -> usize {
        self.average
            .policy
            .iter()
            .zip(&self.discounted.policy)
            .filter(|(a, b)| a != b)
            .count()
    }
}

pub fn solve_oracle(cfg: &RunConfig) -> Result<OracleReport> {
    let model = build_model(&cfg.env, &cfg.jammer.process()?)?;
    let tol = cfg.oracle.tolerance;
    let iters = cfg.oracle.max_iterations;
    let discounted = value_iteration(&model, cfg.dqn.gamma, tol, iters)?;
    let average = relative_value_iteration(&model, tol, iters)?;
    let discounted_policy_gain = policy_gain(&model, &discounted.policy, tol, iters)?;
    Ok(OracleReport {
        model,
        discounted,
        average,
        discounted_policy_gain,
    })
}
