//! The slotted MDP: state, actions, the one-slot transition kernel and a
//! seeded simulator that drives it with jamming and Poisson arrivals.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{sample_level, JammerProcess};
use crate::scalar::{from_count, Scalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("jam level {level} is inconsistent with jamming flag {jammed}")]
    InconsistentJamLevel { level: usize, jammed: bool },
    #[error("jam level {level} out of range for {levels} levels")]
    JamLevelOutOfRange { level: usize, levels: usize },
    #[error("action index {index} out of range for {count} actions")]
    InvalidAction { index: usize, count: usize },
    #[error("state {0} lies outside the configured state space")]
    InvalidState(State),
    #[error("arrival rate must be finite and nonnegative, got {0}")]
    InvalidRate(f64),
    #[error("invalid environment config: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, EnvError>;

/// Observation of the transmitter: jamming flag, buffered packets, stored energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct State {
    pub jammed: bool,
    pub buffer: u32,
    pub energy: u32,
}

impl State {
    pub fn new(jammed: bool, buffer: u32, energy: u32) -> Self {
        Self {
            jammed,
            buffer,
            energy,
        }
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.jammed as u8, self.buffer, self.energy)
    }
}

/// Enumeration of `{0,1} × [0, d_max] × [0, e_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateSpace {
    pub d_max: u32,
    pub e_max: u32,
}

impl StateSpace {
    pub fn len(&self) -> usize {
        2 * self.per_flag()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn per_flag(&self) -> usize {
        (self.d_max as usize + 1) * (self.e_max as usize + 1)
    }

    pub fn contains(&self, s: &State) -> bool {
        s.buffer <= self.d_max && s.energy <= self.e_max
    }

    /// `j·(D+1)(E+1) + d·(E+1) + e`
    pub fn index(&self, s: &State) -> usize {
        debug_assert!(self.contains(s));
        s.jammed as usize * self.per_flag()
            + s.buffer as usize * (self.e_max as usize + 1)
            + s.energy as usize
    }

    pub fn state(&self, index: usize) -> State {
        let per = self.per_flag();
        let width = self.e_max as usize + 1;
        let rest = index % per;
        State {
            jammed: index >= per,
            buffer: (rest / width) as u32,
            energy: (rest % width) as u32,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = State> + '_ {
        (0..self.len()).map(move |i| self.state(i))
    }

    /// Network input `(j, d/D_max, e/E_max)`.
    pub fn features<T: Scalar>(&self, s: &State) -> [T; 3] {
        let scale = |v: u32, max: u32| {
            if max == 0 {
                T::zero()
            } else {
                from_count::<T>(v as usize) / from_count(max as usize)
            }
        };
        [
            if s.jammed { T::one() } else { T::zero() },
            scale(s.buffer, self.d_max),
            scale(s.energy, self.e_max),
        ]
    }
}

/// Transmitter operating mode for one slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    Idle,
    ActiveTx,
    Harvest,
    Backscatter,
    /// Rate-adapted active transmission at level `m` (1-based).
    RateAdapted(u8),
}

impl Action {
    /// 0-based index: Idle, AT, EH, AmBC, then AT-RA_1..M.
    pub fn index(&self) -> usize {
        match self {
            Action::Idle => 0,
            Action::ActiveTx => 1,
            Action::Harvest => 2,
            Action::Backscatter => 3,
            Action::RateAdapted(m) => 3 + *m as usize,
        }
    }

    pub fn from_index(index: usize, ra_levels: usize) -> Result<Self> {
        let count = 4 + ra_levels;
        match index {
            0 => Ok(Action::Idle),
            1 => Ok(Action::ActiveTx),
            2 => Ok(Action::Harvest),
            3 => Ok(Action::Backscatter),
            i if i < count => Ok(Action::RateAdapted((i - 3) as u8)),
            _ => Err(EnvError::InvalidAction { index, count }),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Action::Idle => "Idle".into(),
            Action::ActiveTx => "AT".into(),
            Action::Harvest => "EH".into(),
            Action::Backscatter => "AmBC".into(),
            Action::RateAdapted(m) => format!("AT-RA{m}"),
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// One rate-adaptation level: packets pushed through under jamming and its energy cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RaLevel {
    pub packets: u32,
    pub energy_cost: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub d_max: u32,
    pub e_max: u32,
    /// Poisson arrival rate in packets per slot.
    pub lambda: f64,
    /// Packets active transmission can send on a clear slot.
    pub dt_hat: u32,
    pub at_cost_per_packet: u32,
    /// Harvested energy units per jamming level index.
    pub eh_table: Vec<u32>,
    /// Backscatterable packets per jamming level index.
    pub ambc_table: Vec<u32>,
    pub ra: Vec<RaLevel>,
    pub at_under_jamming_wastes_energy: bool,
}

impl EnvConfig {
    pub fn state_space(&self) -> StateSpace {
        StateSpace {
            d_max: self.d_max,
            e_max: self.e_max,
        }
    }

    pub fn num_actions(&self) -> usize {
        4 + self.ra.len()
    }

    pub fn actions(&self) -> impl Iterator<Item = Action> + '_ {
        (0..self.num_actions()).map(move |i| Action::from_index(i, self.ra.len()).unwrap())
    }

    pub fn action(&self, index: usize) -> Result<Action> {
        Action::from_index(index, self.ra.len())
    }

    pub fn num_levels(&self) -> usize {
        self.eh_table.len()
    }

    /// Checks the config against a jammer with `levels` power levels.
    pub fn validate(&self, levels: usize) -> Result<()> {
        let bad = |m: String| Err(EnvError::InvalidConfig(m));
        if self.eh_table.len() != levels || self.ambc_table.len() != levels {
            return bad(format!(
                "eh_table ({}) and ambc_table ({}) need one entry per jamming level ({levels})",
                self.eh_table.len(),
                self.ambc_table.len()
            ));
        }
        if self.eh_table.first() != Some(&0) || self.ambc_table.first() != Some(&0) {
            return bad("the zero-power level must yield no energy and no backscatter".into());
        }
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return Err(EnvError::InvalidRate(self.lambda));
        }
        if self.ra.len() > u8::MAX as usize - 4 {
            return bad(format!("too many rate-adaptation levels: {}", self.ra.len()));
        }
        Ok(())
    }
}

/// Full accounting of one slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepOutcome {
    pub next: State,
    pub reward: u32,
    pub delivered: u32,
    pub dropped: u32,
    pub arrived: u32,
    pub energy_spent: u32,
    pub energy_harvested: u32,
}

/// Applies one slot of dynamics.
///
/// Within a slot: the action is resolved against `jam_level`, delivered
/// packets leave the buffer and the energy delta is applied, arrivals join
/// (overflow is dropped), and the next jamming flag is read off
/// `next_jam_level`.
pub fn step(
    cfg: &EnvConfig,
    s: &State,
    action: Action,
    jam_level: usize,
    arrivals: u32,
    next_jam_level: usize,
) -> Result<StepOutcome> {
    let levels = cfg.num_levels();
    for level in [jam_level, next_jam_level] {
        if level >= levels {
            return Err(EnvError::JamLevelOutOfRange { level, levels });
        }
    }
    if (jam_level > 0) != s.jammed {
        return Err(EnvError::InconsistentJamLevel {
            level: jam_level,
            jammed: s.jammed,
        });
    }
    if !cfg.state_space().contains(s) {
        return Err(EnvError::InvalidState(*s));
    }
    if action.index() >= cfg.num_actions() || matches!(action, Action::RateAdapted(0)) {
        return Err(EnvError::InvalidAction {
            index: action.index(),
            count: cfg.num_actions(),
        });
    }

    let d = s.buffer;
    let e = s.energy;
    let affordable_at = || {
        let by_energy = e.checked_div(cfg.at_cost_per_packet).unwrap_or(u32::MAX);
        d.min(cfg.dt_hat).min(by_energy)
    };

    let (delivered, spent, harvested) = match (action, s.jammed) {
        (Action::Idle, _) => (0, 0, 0),
        (Action::ActiveTx, false) => {
            let n = affordable_at();
            (n, n * cfg.at_cost_per_packet, 0)
        }
        (Action::ActiveTx, true) => {
            if cfg.at_under_jamming_wastes_energy {
                (0, affordable_at() * cfg.at_cost_per_packet, 0)
            } else {
                (0, 0, 0)
            }
        }
        (Action::Harvest, true) => (0, 0, cfg.eh_table[jam_level].min(cfg.e_max - e)),
        (Action::Harvest, false) => (0, 0, 0),
        (Action::Backscatter, true) => (d.min(cfg.ambc_table[jam_level]), 0, 0),
        (Action::Backscatter, false) => (0, 0, 0),
        (Action::RateAdapted(m), true) => {
            let level = cfg.ra[m as usize - 1];
            if e >= level.energy_cost {
                (d.min(level.packets), level.energy_cost, 0)
            } else {
                (0, 0, 0)
            }
        }
        (Action::RateAdapted(_), false) => (0, 0, 0),
    };

    let after_delivery = d - delivered;
    let room = cfg.d_max - after_delivery;
    let accepted = arrivals.min(room);
    let energy = (e - spent + harvested).min(cfg.e_max);

    Ok(StepOutcome {
        next: State {
            jammed: next_jam_level > 0,
            buffer: after_delivery + accepted,
            energy,
        },
        reward: delivered,
        delivered,
        dropped: arrivals - accepted,
        arrived: arrivals,
        energy_spent: spent,
        energy_harvested: harvested,
    })
}

/// Poisson arrival sampler with the distribution built once.
#[derive(Debug, Clone)]
pub struct ArrivalSampler {
    poisson: Option<Poisson<f64>>,
}

impl ArrivalSampler {
    pub fn new(lambda: f64) -> Result<Self> {
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(EnvError::InvalidRate(lambda));
        }
        let poisson = if lambda > 0.0 {
            Some(Poisson::new(lambda).map_err(|_| EnvError::InvalidRate(lambda))?)
        } else {
            None
        };
        Ok(Self { poisson })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        match &self.poisson {
            Some(p) => {
                let k = p.sample(rng);
                if k >= u32::MAX as f64 {
                    u32::MAX
                } else {
                    k as u32
                }
            }
            None => 0,
        }
    }
}

/// Draws a Poisson(`lambda`) packet count.
pub fn sample_arrivals<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> Result<u32> {
    Ok(ArrivalSampler::new(lambda)?.sample(rng))
}

/// Poisson pmf for `k < headroom` with the remaining tail mass lumped at `headroom`.
pub fn arrival_pmf_truncated<T: Scalar>(lambda: T, headroom: usize) -> Vec<T> {
    let mut pmf = Vec::with_capacity(headroom + 1);
    let mut p = (-lambda).exp();
    let mut total = T::zero();
    for k in 0..headroom {
        pmf.push(p);
        total += p;
        p = p * lambda / from_count(k + 1);
    }
    let tail = T::one() - total;
    pmf.push(if tail > T::zero() { tail } else { T::zero() });
    pmf
}

/// Seeded simulator around [`step`]. Owns its random stream.
#[derive(Debug, Clone)]
pub struct Environment {
    cfg: EnvConfig,
    jammer: JammerProcess<f64>,
    arrivals: ArrivalSampler,
    rng: ChaCha8Rng,
    state: State,
    jam_level: usize,
}

impl Environment {
    /// Starts in `(j ~ jammer, d = 0, e = E_max / 2)`.
    pub fn new(cfg: EnvConfig, jammer: JammerProcess<f64>, seed: u64) -> Result<Self> {
        cfg.validate(jammer.num_levels())?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let jam_level = sample_level(&jammer, &mut rng);
        let state = State {
            jammed: jam_level > 0,
            buffer: 0,
            energy: cfg.e_max / 2,
        };
        Ok(Self {
            arrivals: ArrivalSampler::new(cfg.lambda)?,
            cfg,
            jammer,
            rng,
            state,
            jam_level,
        })
    }

    pub fn state(&self) -> State {
        self.state
    }

    pub fn jam_level(&self) -> usize {
        self.jam_level
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn step(&mut self, action: Action) -> Result<StepOutcome> {
        let arrivals = self.arrivals.sample(&mut self.rng);
        let next_level = sample_level(&self.jammer, &mut self.rng);
        let out = step(
            &self.cfg,
            &self.state,
            action,
            self.jam_level,
            arrivals,
            next_level,
        )?;
        self.state = out.next;
        self.jam_level = next_level;
        Ok(out)
    }
}

/// Mean of a Poisson pmf vector, used by tests and reports.
pub fn pmf_mean<T: Scalar>(pmf: &[T]) -> T {
    pmf.iter()
        .enumerate()
        .map(|(k, p)| from_count::<T>(k) * *p)
        .sum()
}
