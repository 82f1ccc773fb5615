//! Exact transition model of the MDP and the dynamic-programming solvers
//! used as ground truth: discounted value iteration, relative value
//! iteration for the average-reward criterion, and policy evaluation.

use std::collections::VecDeque;
use std::io::Write;

use rayon::prelude::*;
use thiserror::Error;

use crate::channel::JammerProcess;
use crate::env::{arrival_pmf_truncated, step, EnvConfig, EnvError, State};
use crate::scalar::{cast, from_count, Scalar};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, OracleError>;

/// Outgoing distribution and expected reward of one `(state, action)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Row<T> {
    pub next: Vec<(usize, T)>,
    pub reward: T,
}

impl<T: Scalar> Row<T> {
    pub fn total_probability(&self) -> T {
        self.next.iter().map(|(_, p)| *p).sum()
    }

    #[inline]
    fn expect(&self, values: &[T]) -> T {
        self.next.iter().map(|(s, p)| *p * values[*s]).sum()
    }
}

/// Sparse kernel `P(s' | s, a)` with expected rewards, row-major by state.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionModel<T> {
    states: usize,
    actions: usize,
    rows: Vec<Row<T>>,
    initial: Vec<usize>,
}

impl<T: Scalar> TransitionModel<T> {
    /// `rows[s * actions + a]`; each row must sum to one.
    pub fn new(states: usize, actions: usize, rows: Vec<Row<T>>) -> Result<Self> {
        if states == 0 || actions == 0 || rows.len() != states * actions {
            return Err(OracleError::InvalidModel(format!(
                "{} rows for {states} states × {actions} actions",
                rows.len()
            )));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.next.iter().any(|(s, p)| *s >= states || !(*p >= T::zero())) {
                return Err(OracleError::InvalidModel(format!("row {i} has a bad entry")));
            }
            let total = row.total_probability();
            if (total - T::one()).abs() > T::probability_tolerance() {
                return Err(OracleError::InvalidModel(format!(
                    "row {i} sums to {total}"
                )));
            }
        }
        Ok(Self {
            states,
            actions,
            rows,
            initial: vec![0],
        })
    }

    /// States from which reachability is checked.
    pub fn with_initial_states(mut self, initial: Vec<usize>) -> Self {
        self.initial = initial;
        self
    }

    pub fn num_states(&self) -> usize {
        self.states
    }

    pub fn num_actions(&self) -> usize {
        self.actions
    }

    pub fn row(&self, s: usize, a: usize) -> &Row<T> {
        &self.rows[s * self.actions + a]
    }

    pub fn rows(&self) -> &[Row<T>] {
        &self.rows
    }

    pub fn initial_states(&self) -> &[usize] {
        &self.initial
    }

    /// Largest deviation of a row sum from one.
    pub fn max_row_error(&self) -> T {
        self.rows
            .iter()
            .map(|r| (r.total_probability() - T::one()).abs())
            .fold(T::zero(), T::max)
    }

    /// States not reachable from the initial set when every action has
    /// positive probability.
    pub fn unreachable_states(&self) -> Vec<usize> {
        let mut seen = vec![false; self.states];
        let mut queue: VecDeque<usize> = self.initial.iter().copied().collect();
        for s in &self.initial {
            seen[*s] = true;
        }
        while let Some(s) = queue.pop_front() {
            for a in 0..self.actions {
                for (n, p) in &self.row(s, a).next {
                    if *p > T::zero() && !seen[*n] {
                        seen[*n] = true;
                        queue.push_back(*n);
                    }
                }
            }
        }
        (0..self.states).filter(|s| !seen[*s]).collect()
    }

    #[inline]
    pub fn q_value(&self, s: usize, a: usize, values: &[T], gamma: T) -> T {
        let row = self.row(s, a);
        row.reward + gamma * row.expect(values)
    }
}

/// Enumerates every `(state, action)` and marginalises exactly over the jam
/// level, truncated Poisson arrivals and the next slot's jamming flag.
pub fn build_model<T: Scalar>(env: &EnvConfig, jammer: &JammerProcess<T>) -> Result<TransitionModel<T>> {
    env.validate(jammer.num_levels())?;
    let space = env.state_space();
    let n = space.len();
    let actions: Vec<_> = env.actions().collect();
    let arrivals = arrival_pmf_truncated::<T>(cast(env.lambda), env.d_max as usize);
    let jammed_levels = jammer.jammed_conditional();
    let p_next_jammed = jammer.jam_probability();
    let p_next_clear = jammer.weights()[0];
    let nonzero_level = usize::from(jammer.num_levels() > 1);

    let rows: Vec<Vec<Row<T>>> = (0..n)
        .into_par_iter()
        .map(|si| -> Result<Vec<Row<T>>> {
            let s = space.state(si);
            let levels: Vec<(usize, T)> = if s.jammed {
                jammed_levels
                    .iter()
                    .enumerate()
                    .filter(|(_, p)| **p > T::zero())
                    .map(|(k, p)| (k, *p))
                    .collect()
            } else {
                vec![(0, T::one())]
            };
            let mut dense = vec![T::zero(); n];
            let mut out = Vec::with_capacity(actions.len());
            for &action in &actions {
                let mut reward = T::zero();
                for &(level, p_level) in &levels {
                    for (k, p_k) in arrivals.iter().enumerate() {
                        if *p_k == T::zero() {
                            continue;
                        }
                        let o = step(env, &s, action, level, k as u32, nonzero_level)?;
                        let p = p_level * *p_k;
                        reward += p * from_count::<T>(o.delivered as usize);
                        let clear = State { jammed: false, ..o.next };
                        let jammed = State { jammed: true, ..o.next };
                        dense[space.index(&clear)] += p * p_next_clear;
                        dense[space.index(&jammed)] += p * p_next_jammed;
                    }
                }
                let mut next = Vec::new();
                for (i, p) in dense.iter_mut().enumerate() {
                    if *p > T::zero() {
                        next.push((i, *p));
                    }
                    *p = T::zero();
                }
                out.push(Row { next, reward });
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let mut initial = Vec::new();
    for jammed in [false, true] {
        let p = if jammed { p_next_jammed } else { p_next_clear };
        if p > T::zero() {
            initial.push(space.index(&State {
                jammed,
                buffer: 0,
                energy: env.e_max / 2,
            }));
        }
    }
    Ok(TransitionModel::new(n, actions.len(), rows.into_iter().flatten().collect())?
        .with_initial_states(initial))
}

/// Result of a solver run.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution<T> {
    /// Discounted values, or the relative bias for the average-reward solver.
    pub values: Vec<T>,
    pub policy: Vec<usize>,
    /// Optimal average reward per slot (average-reward solver only).
    pub gain: Option<T>,
    pub residual: T,
    pub iterations: usize,
    pub residual_history: Vec<T>,
    /// States unreachable from the model's initial states.
    pub unreachable: Vec<usize>,
}

fn tie_tolerance<T: Scalar>(scale: T) -> T {
    T::epsilon() * cast(1024.0) * scale.abs().max(T::one())
}

/// Greedy policy with respect to `values`; near-ties go to the lowest action index.
pub fn greedy_policy<T: Scalar>(model: &TransitionModel<T>, values: &[T], gamma: T) -> Vec<usize> {
    (0..model.num_states())
        .map(|s| {
            let q: Vec<T> = (0..model.num_actions())
                .map(|a| model.q_value(s, a, values, gamma))
                .collect();
            let best = q.iter().copied().fold(T::neg_infinity(), T::max);
            let tol = tie_tolerance(best);
            q.iter().position(|v| *v >= best - tol).unwrap_or(0)
        })
        .collect()
}

/// Discounted value iteration to sup-norm residual below `tol`.
pub fn value_iteration<T: Scalar>(
    model: &TransitionModel<T>,
    gamma: T,
    tol: T,
    max_iters: usize,
) -> Result<Solution<T>> {
    if !(gamma > T::zero() && gamma < T::one()) {
        return Err(OracleError::InvalidArgument(format!(
            "discount must lie in (0, 1), got {gamma}"
        )));
    }
    let n = model.num_states();
    let mut v = vec![T::zero(); n];
    let mut next = vec![T::zero(); n];
    let mut history = Vec::new();
    let mut residual = T::infinity();
    for it in 1..=max_iters {
        residual = T::zero();
        for s in 0..n {
            let best = (0..model.num_actions())
                .map(|a| model.q_value(s, a, &v, gamma))
                .fold(T::neg_infinity(), T::max);
            residual = residual.max((best - v[s]).abs());
            next[s] = best;
        }
        std::mem::swap(&mut v, &mut next);
        history.push(residual);
        if residual < tol {
            return Ok(Solution {
                policy: greedy_policy(model, &v, gamma),
                values: v,
                gain: None,
                residual,
                iterations: it,
                residual_history: history,
                unreachable: model.unreachable_states(),
            });
        }
    }
    Err(OracleError::NonConvergence {
        iterations: max_iters,
        residual: residual.to_f64().unwrap_or(f64::NAN),
    })
}

/// Self-loop weight of the aperiodicity transform `τP + (1 − τ)I`.
const APERIODICITY: f64 = 0.5;

/// Relative value iteration over either all actions or a fixed policy.
fn relative_iteration<T: Scalar>(
    model: &TransitionModel<T>,
    fixed: Option<&[usize]>,
    tol: T,
    max_iters: usize,
) -> Result<(Vec<T>, T, T, usize, Vec<T>)> {
    let n = model.num_states();
    let tau: T = cast(APERIODICITY);
    let reference = model.initial_states().first().copied().unwrap_or(0);
    let mut h = vec![T::zero(); n];
    let mut w = vec![T::zero(); n];
    let mut history = Vec::new();
    let mut span = T::infinity();
    for it in 1..=max_iters {
        let (mut lo, mut hi) = (T::infinity(), T::neg_infinity());
        for s in 0..n {
            let value = |a: usize| {
                let row = model.row(s, a);
                row.reward + tau * row.expect(&h) + (T::one() - tau) * h[s]
            };
            let best = match fixed {
                Some(policy) => value(policy[s]),
                None => (0..model.num_actions()).map(value).fold(T::neg_infinity(), T::max),
            };
            let diff = best - h[s];
            lo = lo.min(diff);
            hi = hi.max(diff);
            w[s] = best;
        }
        span = hi - lo;
        history.push(span);
        let offset = w[reference];
        for s in 0..n {
            h[s] = w[s] - offset;
        }
        if span < tol {
            let gain = (lo + hi) / cast(2.0);
            return Ok((h, gain, span, it, history));
        }
    }
    Err(OracleError::NonConvergence {
        iterations: max_iters,
        residual: span.to_f64().unwrap_or(f64::NAN),
    })
}

/// Optimal average reward per slot and a gain-optimal greedy policy.
pub fn relative_value_iteration<T: Scalar>(
    model: &TransitionModel<T>,
    tol: T,
    max_iters: usize,
) -> Result<Solution<T>> {
    let unreachable = model.unreachable_states();
    if !unreachable.is_empty() {
        log::warn!(
            "{} of {} states are unreachable from the initial states; the gain refers to the reachable component",
            unreachable.len(),
            model.num_states()
        );
    }
    let (h, gain, span, iterations, history) = relative_iteration(model, None, tol, max_iters)?;
    Ok(Solution {
        policy: greedy_policy(model, &h, T::one()),
        values: h,
        gain: Some(gain),
        residual: span,
        iterations,
        residual_history: history,
        unreachable,
    })
}

/// Long-run average reward of a fixed stationary policy.
pub fn policy_gain<T: Scalar>(
    model: &TransitionModel<T>,
    policy: &[usize],
    tol: T,
    max_iters: usize,
) -> Result<T> {
    check_policy(model, policy)?;
    Ok(relative_iteration(model, Some(policy), tol, max_iters)?.1)
}

fn check_policy<T: Scalar>(model: &TransitionModel<T>, policy: &[usize]) -> Result<()> {
    if policy.len() != model.num_states() || policy.iter().any(|a| *a >= model.num_actions()) {
        return Err(OracleError::InvalidArgument(
            "policy must assign a valid action to every state".into(),
        ));
    }
    Ok(())
}

/// Discounted values of a fixed policy by successive approximation.
pub fn policy_evaluation<T: Scalar>(
    model: &TransitionModel<T>,
    policy: &[usize],
    gamma: T,
) -> Result<Vec<T>> {
    check_policy(model, policy)?;
    if !(gamma >= T::zero() && gamma < T::one()) {
        return Err(OracleError::InvalidArgument(format!(
            "discount must lie in [0, 1), got {gamma}"
        )));
    }
    let n = model.num_states();
    let mut v = vec![T::zero(); n];
    let mut next = vec![T::zero(); n];
    let max_iters = 1_000_000;
    let mut residual = T::infinity();
    for _ in 0..max_iters {
        residual = T::zero();
        let mut scale = T::zero();
        for s in 0..n {
            next[s] = model.q_value(s, policy[s], &v, gamma);
            residual = residual.max((next[s] - v[s]).abs());
            scale = scale.max(next[s].abs());
        }
        std::mem::swap(&mut v, &mut next);
        let tol = cast::<T>(1e-10).max(T::epsilon() * cast(8.0) * scale);
        if residual < tol {
            return Ok(v);
        }
    }
    Err(OracleError::NonConvergence {
        iterations: max_iters,
        residual: residual.to_f64().unwrap_or(f64::NAN),
    })
}

/// Writes `j,d,e,action,value` rows preceded by a `# gain` comment line.
pub fn write_solution<T: Scalar, W: Write>(
    env: &EnvConfig,
    solution: &Solution<T>,
    mut w: W,
) -> Result<()> {
    match solution.gain {
        Some(g) => writeln!(w, "# gain {g}")?,
        None => writeln!(w, "# gain none")?,
    }
    writeln!(w, "j,d,e,action,value")?;
    let space = env.state_space();
    for (i, (a, v)) in solution.policy.iter().zip(&solution.values).enumerate() {
        let s = space.state(i);
        writeln!(
            w,
            "{},{},{},{},{}",
            s.jammed as u8,
            s.buffer,
            s.energy,
            env.action(*a)?.name(),
            v
        )?;
    }
    Ok(())
}
