use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{argmax, random_act, AgentError, EpsilonConfig, EpsilonSchedule, Learner, Policy, ReplayBuffer, Result, TablePolicy, Transition};
use crate::env::{Action, EnvConfig, State, StateSpace, StepOutcome};
use crate::nn::{adam_step, clip_global_norm, AdamConfig, AdamState, BatchScratch, ForwardBuffer, Gradient, Mlp, Sample};
use crate::scalar::{cast, Scalar};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DqnConfig {
    pub learning_rate: f64,
    pub gamma: f64,
    pub replay_capacity: usize,
    pub batch_size: usize,
    /// Environment steps between target-network syncs.
    pub target_update_period: u64,
    pub epsilon: EpsilonConfig,
    /// Training starts once the buffer holds `max(batch_size, learning_starts)` transitions.
    pub learning_starts: usize,
    pub hidden_layers: Vec<usize>,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    #[serde(default)]
    pub max_grad_norm: Option<f64>,
}

impl DqnConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(AgentError::Config(m));
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad(format!("discount must lie in (0, 1), got {}", self.gamma));
        }
        if self.replay_capacity == 0 || self.batch_size == 0 || self.target_update_period == 0 {
            return bad("replay capacity, batch size and target period must be positive".into());
        }
        if self.learning_threshold() > self.replay_capacity {
            return bad(format!(
                "learning threshold {} exceeds replay capacity {}",
                self.learning_threshold(),
                self.replay_capacity
            ));
        }
        if !(self.learning_rate > 0.0) {
            return bad(format!("learning rate must be positive, got {}", self.learning_rate));
        }
        if self.hidden_layers.contains(&0) {
            return bad("hidden layer widths must be positive".into());
        }
        if let Some(n) = self.max_grad_norm {
            if !(n > 0.0) {
                return bad(format!("max_grad_norm must be positive, got {n}"));
            }
        }
        self.epsilon.validate()
    }

    pub fn learning_threshold(&self) -> usize {
        self.batch_size.max(self.learning_starts)
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            epsilon: self.adam_epsilon,
        }
    }

    /// `3 → hidden… → num_actions`
    pub fn layer_sizes(&self, num_actions: usize) -> Vec<usize> {
        let mut sizes = vec![3];
        sizes.extend(&self.hidden_layers);
        sizes.push(num_actions);
        sizes
    }
}

/// Source of `max_a' Q̂(s', a')` for bootstrap targets.
pub trait BootstrapTarget<T> {
    fn max_next_q(&self, next: &State) -> T;
}

/// Evaluates the target network on demand.
pub struct NetworkTarget<'a, T> {
    pub net: &'a Mlp<T>,
    pub space: StateSpace,
}

impl<T: Scalar> BootstrapTarget<T> for NetworkTarget<'_, T> {
    fn max_next_q(&self, next: &State) -> T {
        let q = self
            .net
            .forward(&self.space.features::<T>(next))
            .expect("target network sized for state features");
        q.into_iter().fold(T::neg_infinity(), T::max)
    }
}

/// `max_a' Q̂(s', a')` precomputed for every state of a frozen target network.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedTarget<T> {
    space: StateSpace,
    values: Vec<T>,
}

impl<T: Scalar> TabulatedTarget<T> {
    pub fn from_network(net: &Mlp<T>, space: StateSpace) -> Self {
        let direct = NetworkTarget { net, space };
        let values = space.iter().map(|s| direct.max_next_q(&s)).collect();
        Self { space, values }
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }
}

impl<T: Scalar> BootstrapTarget<T> for TabulatedTarget<T> {
    fn max_next_q(&self, next: &State) -> T {
        self.values[self.space.index(next)]
    }
}

/// Reusable buffers for [`dqn_train_step`].
#[derive(Debug, Clone)]
pub struct TrainScratch<T> {
    features: Vec<[T; 3]>,
    targets: Vec<(usize, T)>,
    grad: Option<Gradient<T>>,
    batch: BatchScratch<T>,
}

impl<T: Default> Default for TrainScratch<T> {
    fn default() -> Self {
        Self {
            features: Vec::new(),
            targets: Vec::new(),
            grad: None,
            batch: BatchScratch::default(),
        }
    }
}

/// ε-greedy action selection on the online network.
pub fn dqn_act<T: Scalar, R: Rng + ?Sized>(
    net: &Mlp<T>,
    space: &StateSpace,
    state: &State,
    epsilon: f64,
    rng: &mut R,
) -> Action {
    let ra_levels = net.output_size() - 4;
    if rng.random::<f64>() < epsilon {
        return random_act(rng, ra_levels);
    }
    let q = net
        .forward(&space.features::<T>(state))
        .expect("network sized for state features");
    Action::from_index(argmax(&q), ra_levels).expect("output index is a valid action")
}

/// Exact copy of the online network.
pub fn dqn_sync_target<T: Scalar>(net: &Mlp<T>) -> Mlp<T> {
    net.clone()
}

/// One minibatch update of `net` towards `r + γ max_a' Q̂(s', a')`.
///
/// Returns `Ok(None)` without touching anything while the buffer is below
/// the learning threshold.
#[allow(clippy::too_many_arguments)]
pub fn dqn_train_step<T: Scalar, B: BootstrapTarget<T>, R: Rng + ?Sized>(
    net: &mut Mlp<T>,
    target: &B,
    buffer: &ReplayBuffer,
    opt: &mut AdamState<T>,
    cfg: &DqnConfig,
    space: &StateSpace,
    rng: &mut R,
    scratch: &mut TrainScratch<T>,
) -> Result<Option<T>> {
    if buffer.len() < cfg.learning_threshold() {
        return Ok(None);
    }
    let gamma: T = cast(cfg.gamma);
    scratch.features.clear();
    scratch.targets.clear();
    for t in buffer.sample(cfg.batch_size, rng) {
        scratch.features.push(space.features(&t.state));
        let y = cast::<T>(t.reward) + gamma * target.max_next_q(&t.next);
        scratch.targets.push((t.action, y));
    }
    let batch: Vec<Sample<'_, T>> = scratch
        .features
        .iter()
        .zip(&scratch.targets)
        .map(|(f, (a, y))| Sample {
            features: f,
            action: *a,
            target: *y,
        })
        .collect();
    let grad = scratch.grad.get_or_insert_with(|| net.zeros_like());
    let loss = net.loss_and_gradient_into(&batch, &mut scratch.batch, grad)?;
    if let Some(max) = cfg.max_grad_norm {
        clip_global_norm(grad, cast(max));
    }
    adam_step(net, grad, opt)?;
    Ok(Some(loss))
}

/// DQN with experience replay and a periodically synced target network.
#[derive(Debug, Clone)]
pub struct DqnAgent<T> {
    cfg: DqnConfig,
    space: StateSpace,
    net: Mlp<T>,
    target: Mlp<T>,
    target_table: TabulatedTarget<T>,
    opt: AdamState<T>,
    buffer: ReplayBuffer,
    epsilon: EpsilonSchedule,
    rng: ChaCha8Rng,
    scratch: TrainScratch<T>,
    forward: ForwardBuffer<T>,
    steps: u64,
    updates: u64,
    syncs: u64,
    last_loss: Option<T>,
}

impl<T: Scalar> DqnAgent<T> {
    pub fn new(cfg: DqnConfig, env: &EnvConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let space = env.state_space();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = Mlp::init(&cfg.layer_sizes(env.num_actions()), &mut rng)?;
        let target = dqn_sync_target(&net);
        Ok(Self {
            target_table: TabulatedTarget::from_network(&target, space),
            opt: AdamState::new(&net, &cfg.adam()),
            buffer: ReplayBuffer::new(cfg.replay_capacity),
            epsilon: EpsilonSchedule::new(cfg.epsilon),
            scratch: TrainScratch::default(),
            forward: ForwardBuffer::default(),
            cfg,
            space,
            net,
            target,
            rng,
            steps: 0,
            updates: 0,
            syncs: 0,
            last_loss: None,
        })
    }

    pub fn net(&self) -> &Mlp<T> {
        &self.net
    }

    pub fn target(&self) -> &Mlp<T> {
        &self.target
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon.value()
    }

    /// Environment steps observed so far.
    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Gradient updates applied so far.
    pub fn updates(&self) -> u64 {
        self.updates
    }

    /// Target syncs performed so far (excluding the initial copy).
    pub fn syncs(&self) -> u64 {
        self.syncs
    }

    pub fn last_loss(&self) -> Option<T> {
        self.last_loss
    }

    pub fn q_values(&mut self, state: &State) -> Vec<T> {
        let x = self.space.features::<T>(state);
        self.net
            .forward_with(&x, &mut self.forward)
            .expect("network sized for state features")
            .to_vec()
    }

    pub fn greedy_action(&mut self, state: &State) -> Action {
        let q = self.q_values(state);
        Action::from_index(argmax(&q), self.net.output_size() - 4).expect("valid output index")
    }

    pub fn sync_target(&mut self) {
        self.target = dqn_sync_target(&self.net);
        self.target_table = TabulatedTarget::from_network(&self.target, self.space);
        self.syncs += 1;
    }
}

impl<T: Scalar> Policy for DqnAgent<T> {
    fn act(&mut self, state: &State) -> Action {
        if self.rng.random::<f64>() < self.epsilon.value() {
            return random_act(&mut self.rng, self.net.output_size() - 4);
        }
        self.greedy_action(state)
    }
}

impl<T: Scalar> Learner for DqnAgent<T> {
    fn observe(&mut self, state: &State, action: Action, outcome: &StepOutcome) -> Result<()> {
        self.buffer.push(Transition {
            state: *state,
            action: action.index(),
            reward: outcome.reward as f64,
            next: outcome.next,
        });
        let loss = dqn_train_step(
            &mut self.net,
            &self.target_table,
            &self.buffer,
            &mut self.opt,
            &self.cfg,
            &self.space,
            &mut self.rng,
            &mut self.scratch,
        )?;
        if loss.is_some() {
            self.updates += 1;
            self.last_loss = loss;
        }
        self.steps += 1;
        self.epsilon.advance();
        if self.steps % self.cfg.target_update_period == 0 {
            self.sync_target();
        }
        Ok(())
    }

    fn greedy_policy(&self) -> TablePolicy {
        let ra_levels = self.net.output_size() - 4;
        let mut buf = ForwardBuffer::default();
        let actions = self
            .space
            .iter()
            .map(|s| {
                let q = self
                    .net
                    .forward_with(&self.space.features::<T>(&s), &mut buf)
                    .expect("network sized for state features");
                Action::from_index(argmax(q), ra_levels).expect("valid output index")
            })
            .collect();
        TablePolicy::new(self.space, actions)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Dense;

    fn cfg() -> DqnConfig {
        DqnConfig {
            learning_rate: 1e-3,
            gamma: 0.9,
            replay_capacity: 1000,
            batch_size: 8,
            target_update_period: 50,
            epsilon: EpsilonConfig {
                start: 1.0,
                end: 0.01,
                decay: 0.9999,
            },
            learning_starts: 16,
            hidden_layers: vec![16],
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            max_grad_norm: None,
        }
    }

    fn env_cfg() -> EnvConfig {
        EnvConfig {
            d_max: 10,
            e_max: 10,
            lambda: 3.0,
            dt_hat: 4,
            at_cost_per_packet: 1,
            eh_table: vec![0, 1, 2, 3],
            ambc_table: vec![0, 1, 2, 3],
            ra: vec![
                crate::env::RaLevel { packets: 1, energy_cost: 2 },
                crate::env::RaLevel { packets: 2, energy_cost: 4 },
            ],
            at_under_jamming_wastes_energy: true,
        }
    }

    fn space() -> StateSpace {
        env_cfg().state_space()
    }

    /// Linear net whose output equals its bias vector for any input.
    fn constant_net(bias: Vec<f64>) -> Mlp<f64> {
        let n = bias.len();
        Mlp::from_layers(vec![Dense {
            inputs: 3,
            outputs: n,
            weights: vec![0.0; 3 * n],
            biases: bias,
        }])
        .unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(cfg().validate().is_ok());
        assert!(DqnConfig { gamma: 1.0, ..cfg() }.validate().is_err());
        assert!(DqnConfig { learning_starts: 5000, ..cfg() }.validate().is_err());
        assert!(DqnConfig { batch_size: 0, ..cfg() }.validate().is_err());
        assert_eq!(DqnConfig { learning_starts: 2, ..cfg() }.learning_threshold(), 8);
    }

    #[test]
    fn exploitation_picks_strict_maximum() {
        let net = constant_net(vec![0.0, 1.0, 2.0, 5.0, 3.0, 4.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let a = dqn_act(&net, &space(), &State::new(true, 3, 3), 0.0, &mut rng);
            assert_eq!(a, Action::Backscatter);
        }
        let zero = constant_net(vec![0.0; 6]);
        assert_eq!(dqn_act(&zero, &space(), &State::new(false, 0, 0), 0.0, &mut rng), Action::Idle);
    }

    #[test]
    fn full_exploration_is_uniform() {
        let net = constant_net(vec![0.0, 1.0, 2.0, 5.0, 3.0, 4.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 100_000;
        let mut counts = [0usize; 6];
        for _ in 0..n {
            counts[dqn_act(&net, &space(), &State::new(true, 3, 3), 1.0, &mut rng).index()] += 1;
        }
        let p = 1.0 / 6.0;
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        for c in counts {
            assert!((c as f64 / n as f64 - p).abs() <= 3.0 * sigma, "{counts:?}");
        }
    }

    #[test]
    fn argmax_invariant_under_output_scaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = Mlp::<f64>::init(&[3, 16, 16, 6], &mut rng).unwrap();
        for c in [0.01, 0.5, 3.0, 100.0] {
            let mut scaled = net.clone();
            let last = scaled.layers_mut().len() - 1;
            let layer = &mut scaled.layers_mut()[last];
            layer.weights.iter_mut().chain(layer.biases.iter_mut()).for_each(|w| *w *= c);
            for s in space().iter() {
                let a = dqn_act(&net, &space(), &s, 0.0, &mut rng);
                let b = dqn_act(&scaled, &space(), &s, 0.0, &mut rng);
                assert_eq!(a, b);
            }
        }
    }

    fn filled_buffer(reward: f64) -> ReplayBuffer {
        let mut buf = ReplayBuffer::new(100);
        for (i, s) in space().iter().take(40).enumerate() {
            buf.push(Transition {
                state: s,
                action: i % 6,
                reward: if reward.is_nan() { (i % 4) as f64 } else { reward },
                next: space().state((i * 7) % space().len()),
            });
        }
        buf
    }

    /// Loss of one update from an all-zero online net; equals mean(y^2).
    fn zero_net_loss<B: BootstrapTarget<f64>>(target: &B, gamma: f64, reward: f64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut net = constant_net(vec![0.0; 6]);
        let mut opt = AdamState::new(&net, &cfg().adam());
        let c = DqnConfig { gamma, ..cfg() };
        dqn_train_step(&mut net, target, &filled_buffer(reward), &mut opt, &c, &space(), &mut rng, &mut TrainScratch::default())
            .unwrap()
            .unwrap()
    }

    #[test]
    fn myopic_targets_equal_rewards() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let tgt = Mlp::<f64>::init(&[3, 8, 6], &mut rng).unwrap();
        let table = TabulatedTarget::from_network(&tgt, space());
        assert!(table.values().iter().any(|v| *v != 0.0));
        assert_eq!(zero_net_loss(&table, 0.0, 2.5), 6.25);
    }

    #[test]
    fn zero_target_network_gives_reward_targets() {
        let zero = constant_net(vec![0.0; 6]);
        let table = TabulatedTarget::from_network(&zero, space());
        assert!(table.values().iter().all(|v| *v == 0.0));
        assert_eq!(zero_net_loss(&table, 0.5, 2.5), 6.25);
        assert_eq!(zero_net_loss(&NetworkTarget { net: &zero, space: space() }, 0.9, 1.5), 2.25);
    }

    #[test]
    fn below_threshold_is_a_noop() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut net = Mlp::<f64>::init(&[3, 8, 6], &mut rng).unwrap();
        let before = net.clone();
        let mut opt = AdamState::new(&net, &cfg().adam());
        let mut buf = ReplayBuffer::new(100);
        buf.push(*filled_buffer(1.0).get(0));
        let tgt = dqn_sync_target(&net);
        let out = dqn_train_step(
            &mut net,
            &NetworkTarget { net: &tgt, space: space() },
            &buf,
            &mut opt,
            &cfg(),
            &space(),
            &mut rng,
            &mut TrainScratch::default(),
        )
        .unwrap();
        assert!(out.is_none());
        assert_eq!(net, before);
        assert_eq!(opt.t, 0);
    }

    #[test]
    fn tabulated_target_matches_network() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let net = Mlp::<f64>::init(&[3, 16, 16, 6], &mut rng).unwrap();
        let direct = NetworkTarget { net: &net, space: space() };
        let table = TabulatedTarget::from_network(&net, space());
        for s in space().iter() {
            assert_eq!(direct.max_next_q(&s), table.max_next_q(&s));
        }
    }

    #[test]
    fn frozen_buffer_regression_converges() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut net = Mlp::<f64>::init(&[3, 32, 32, 6], &mut rng).unwrap();
        let frozen = Mlp::<f64>::init(&[3, 32, 32, 6], &mut rng).unwrap();
        let target = TabulatedTarget::from_network(&frozen, space());
        let buf = filled_buffer(f64::NAN);
        let c = DqnConfig { learning_rate: 3e-3, batch_size: 40, learning_starts: 0, ..cfg() };
        let mut opt = AdamState::new(&net, &c.adam());
        let mut scratch = TrainScratch::default();
        let mut loss = f64::INFINITY;
        for _ in 0..4000 {
            loss = dqn_train_step(&mut net, &target, &buf, &mut opt, &c, &space(), &mut rng, &mut scratch)
                .unwrap()
                .unwrap();
        }
        // Evaluate on the full buffer rather than the last random minibatch.
        let mut total = 0.0;
        for t in buf.chronological() {
            let y = t.reward + 0.9 * target.max_next_q(&t.next);
            let q = net.forward(&space().features(&t.state)).unwrap()[t.action];
            total += (q - y).powi(2);
        }
        let full = total / buf.len() as f64;
        assert!(full < 1e-3, "full-buffer loss {full}, last batch {loss}");
    }

    #[test]
    fn sync_produces_independent_copy() {
        let mut agent = DqnAgent::<f64>::new(cfg(), &env_cfg(), 9).unwrap();
        assert_eq!(agent.net(), agent.target());
        let snapshot = agent.target().clone();
        let env = env_cfg();
        let mut s = State::new(false, 3, 5);
        for i in 0..49 {
            let a = agent.act(&s);
            let out = crate::env::step(&env, &s, a, 0, (i % 3) as u32, 0).unwrap();
            agent.observe(&s, a, &out).unwrap();
            s = out.next;
        }
        assert_ne!(agent.net(), agent.target());
        assert_eq!(agent.target(), &snapshot);
        assert_eq!(agent.syncs(), 0);
        let a = agent.act(&s);
        let out = crate::env::step(&env, &s, a, 0, 1, 0).unwrap();
        agent.observe(&s, a, &out).unwrap();
        assert_eq!(agent.syncs(), 1);
        assert_eq!(agent.net(), agent.target());
        assert_eq!(agent.updates(), 50 - 16 + 1);
    }
}
