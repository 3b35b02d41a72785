//! Per-node hysteretic Q-learning agent.
//!
//! The agent observes the collision probability of its last epoch (the
//! state), picks a transmit probability (the action), and is rewarded from the
//! change in its own throughput and in its one-hop fairness.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Collision probability is quantized into this many equal bins.
pub const STATE_COUNT: usize = 24;
/// Transmit probabilities `1/20, 2/20, ..., 20/20`.
pub const ACTION_COUNT: usize = 20;

/// Index of a quantized collision level, `0..STATE_COUNT`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StateId(pub u8);

impl StateId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Action identifier, `1..=ACTION_COUNT`. Action `k` transmits each packet
/// with probability `k / ACTION_COUNT`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ActionId(u8);

impl ActionId {
    pub const ALWAYS: ActionId = ActionId(ACTION_COUNT as u8);

    pub fn new(id: usize) -> Result<Self> {
        if (1..=ACTION_COUNT).contains(&id) {
            Ok(Self(id as u8))
        } else {
            Err(Error::Validation(format!(
                "action id {id} outside 1..={ACTION_COUNT}"
            )))
        }
    }

    fn from_index(index: usize) -> Self {
        Self(index as u8 + 1)
    }

    pub fn id(self) -> usize {
        self.0 as usize
    }

    fn index(self) -> usize {
        self.0 as usize - 1
    }

    pub fn probability(self) -> f64 {
        self.0 as f64 / ACTION_COUNT as f64
    }
}

/// Maps a collision probability to its state bin: `floor(p * 24)`, with
/// `p = 1` folded into the top bin.
pub fn discretize_state(collision_prob: f64) -> Result<StateId> {
    if !(0.0..=1.0).contains(&collision_prob) {
        return Err(Error::Validation(format!(
            "collision probability {collision_prob} outside [0, 1]"
        )));
    }
    let bin = (collision_prob * STATE_COUNT as f64).floor() as usize;
    Ok(StateId(bin.min(STATE_COUNT - 1) as u8))
}

pub fn action_probability(action_id: usize) -> Result<f64> {
    ActionId::new(action_id).map(ActionId::probability)
}

/// Exploration rate decaying as `initial * exp(-epoch / decay_epochs)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EpsilonSchedule {
    pub initial: f64,
    pub decay_epochs: f64,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        Self {
            initial: 1.0,
            decay_epochs: 1000.0,
        }
    }
}

impl EpsilonSchedule {
    pub fn at(&self, epoch_id: u64) -> f64 {
        (self.initial * (-(epoch_id as f64) / self.decay_epochs).exp()).clamp(0.0, 1.0)
    }
}

/// `exp(-epoch_id / 1000)`, the default schedule.
pub fn exploration_epsilon(epoch_id: u64) -> f64 {
    EpsilonSchedule::default().at(epoch_id)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentConfig {
    /// Learning rate for non-negative temporal-difference errors.
    pub alpha: f64,
    /// Learning rate for negative temporal-difference errors.
    pub beta: f64,
    pub gamma: f64,
    pub epsilon: EpsilonSchedule,
    /// Margin subtracted from the throughput change before taking its sign.
    pub delta_margin: f64,
    /// Subtracted from the reward whenever the node's throughput is zero.
    pub zero_throughput_penalty: f64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            alpha: 0.9,
            beta: 0.1,
            gamma: 0.95,
            epsilon: EpsilonSchedule::default(),
            delta_margin: 0.005,
            zero_throughput_penalty: 0.8,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        let rate_ok = |x: f64| x > 0.0 && x <= 1.0;
        if !rate_ok(self.alpha) || !rate_ok(self.beta) {
            return Err(Error::Config("alpha and beta must lie in (0, 1]".into()));
        }
        if self.beta > self.alpha {
            return Err(Error::Config(format!(
                "beta ({}) must not exceed alpha ({})",
                self.beta, self.alpha
            )));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::Config("gamma must lie in [0, 1)".into()));
        }
        if !(0.0..=1.0).contains(&self.epsilon.initial) || !(self.epsilon.decay_epochs > 0.0) {
            return Err(Error::Config("invalid epsilon schedule".into()));
        }
        if self.delta_margin < 0.0 || self.zero_throughput_penalty < 0.0 {
            return Err(Error::Config(
                "delta_margin and zero_throughput_penalty must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Action values and visit counts, `STATE_COUNT x ACTION_COUNT`, zero
/// initialized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTable {
    values: Vec<f64>,
    visits: Vec<u32>,
}

impl Default for QTable {
    fn default() -> Self {
        Self::new()
    }
}

impl QTable {
    pub fn new() -> Self {
        Self {
            values: vec![0.0; STATE_COUNT * ACTION_COUNT],
            visits: vec![0; STATE_COUNT * ACTION_COUNT],
        }
    }

    /// All values, row-major by state.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of updates applied across the whole table.
    pub fn total_visits(&self) -> u64 {
        self.visits.iter().map(|&v| u64::from(v)).sum()
    }

    fn cell(state: StateId, action: ActionId) -> usize {
        state.index() * ACTION_COUNT + action.index()
    }

    pub fn get(&self, state: StateId, action: ActionId) -> f64 {
        self.values[Self::cell(state, action)]
    }

    pub fn set(&mut self, state: StateId, action: ActionId, value: f64) {
        self.values[Self::cell(state, action)] = value;
    }

    pub fn visits(&self, state: StateId, action: ActionId) -> u32 {
        self.visits[Self::cell(state, action)]
    }

    pub fn row(&self, state: StateId) -> &[f64] {
        let start = state.index() * ACTION_COUNT;
        &self.values[start..start + ACTION_COUNT]
    }

    pub fn row_mut(&mut self, state: StateId) -> &mut [f64] {
        let start = state.index() * ACTION_COUNT;
        &mut self.values[start..start + ACTION_COUNT]
    }

    pub fn max_value(&self, state: StateId) -> f64 {
        self.row(state).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Highest-valued action of a row; ties go to the lowest action id.
    pub fn greedy(&self, state: StateId) -> ActionId {
        let row = self.row(state);
        let mut best = 0;
        for (i, &v) in row.iter().enumerate().skip(1) {
            if v > row[best] {
                best = i;
            }
        }
        ActionId::from_index(best)
    }
}

/// Epsilon-greedy choice: uniform over all actions with probability
/// `epsilon`, greedy otherwise.
pub fn select_action<R: Rng + ?Sized>(
    q: &QTable,
    state: StateId,
    epsilon: f64,
    rng: &mut R,
) -> ActionId {
    if epsilon > 0.0 && rng.gen::<f64>() < epsilon {
        ActionId::from_index(rng.gen_range(0..ACTION_COUNT))
    } else {
        q.greedy(state)
    }
}

/// Negated sum of absolute throughput differences to each one-hop neighbor.
/// Zero is perfectly fair.
pub fn fairness(own_throughput: f64, neighbor_throughputs: &[f64]) -> Result<f64> {
    if neighbor_throughputs.is_empty() {
        return Err(Error::Config("fairness needs at least one neighbor".into()));
    }
    Ok(-neighbor_throughputs
        .iter()
        .map(|s| (own_throughput - s).abs())
        .sum::<f64>())
}

pub const REWARD_BOTH_UP: f64 = 50.0;
pub const REWARD_THROUGHPUT_UP_FAIRNESS_DOWN: f64 = -30.0;
pub const REWARD_THROUGHPUT_DOWN_FAIRNESS_UP: f64 = 10.0;
pub const REWARD_BOTH_DOWN: f64 = -50.0;

/// Reward from the throughput and fairness changes. A change counts as an
/// increase when it is non-negative (after subtracting the margin for
/// throughput).
pub fn compute_reward(delta_s: f64, delta_f: f64, cfg: &AgentConfig, throughput_is_zero: bool) -> f64 {
    let throughput_up = delta_s - cfg.delta_margin >= 0.0;
    let fairness_up = delta_f >= 0.0;
    let base = match (throughput_up, fairness_up) {
        (true, true) => REWARD_BOTH_UP,
        (true, false) => REWARD_THROUGHPUT_UP_FAIRNESS_DOWN,
        (false, true) => REWARD_THROUGHPUT_DOWN_FAIRNESS_UP,
        (false, false) => REWARD_BOTH_DOWN,
    };
    if throughput_is_zero {
        base - cfg.zero_throughput_penalty
    } else {
        base
    }
}

/// Applies one hysteretic update to `Q(s, a)` and returns the TD error.
/// Non-negative errors use `alpha`, negative ones `beta`.
pub fn hysteretic_update(
    q: &mut QTable,
    state: StateId,
    action: ActionId,
    reward: f64,
    next_state: StateId,
    cfg: &AgentConfig,
) -> f64 {
    let current = q.get(state, action);
    let delta = reward + cfg.gamma * q.max_value(next_state) - current;
    let rate = if delta >= 0.0 { cfg.alpha } else { cfg.beta };
    q.set(state, action, current + rate * delta);
    q.visits[QTable::cell(state, action)] += 1;
    delta
}

/// What a node knows at the end of one of its epochs.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation<'a> {
    pub collision_prob: f64,
    pub throughput: f64,
    pub neighbor_throughputs: &'a [f64],
}

/// Result of one learning step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub state: StateId,
    pub action: ActionId,
    pub fairness: f64,
    /// `None` on the first epoch, which has no predecessor to compare with.
    pub reward: Option<f64>,
    /// Exploration rate used to pick `action`.
    pub epsilon: f64,
}

#[derive(Debug, Clone)]
pub struct MacAgent {
    cfg: AgentConfig,
    q: QTable,
    state: StateId,
    action: ActionId,
    prev: Option<(f64, f64)>,
    epoch_id: u64,
    learning: bool,
}

impl MacAgent {
    /// A learning agent. Its first action is drawn with the epoch-0
    /// exploration rate from state 0.
    pub fn learner<R: Rng + ?Sized>(cfg: AgentConfig, rng: &mut R) -> Self {
        let q = QTable::new();
        let state = StateId(0);
        let action = select_action(&q, state, cfg.epsilon.at(0), rng);
        Self {
            cfg,
            q,
            state,
            action,
            prev: None,
            epoch_id: 0,
            learning: true,
        }
    }

    /// A non-learning agent pinned to one action.
    pub fn fixed(action: ActionId) -> Self {
        Self {
            cfg: AgentConfig::default(),
            q: QTable::new(),
            state: StateId(0),
            action,
            prev: None,
            epoch_id: 0,
            learning: false,
        }
    }

    pub fn is_learning(&self) -> bool {
        self.learning
    }

    pub fn action(&self) -> ActionId {
        self.action
    }

    pub fn transmit_probability(&self) -> f64 {
        self.action.probability()
    }

    pub fn state(&self) -> StateId {
        self.state
    }

    pub fn q_table(&self) -> &QTable {
        &self.q
    }

    pub fn epochs_completed(&self) -> u64 {
        self.epoch_id
    }

    /// Closes an epoch: rewards the action that was in force, updates the
    /// Q-table and picks the action for the next epoch.
    pub fn end_epoch<R: Rng + ?Sized>(&mut self, obs: &Observation<'_>, rng: &mut R) -> Result<Step> {
        let next_state = discretize_state(obs.collision_prob)?;
        let fair = fairness(obs.throughput, obs.neighbor_throughputs)?;
        self.epoch_id += 1;

        if !self.learning {
            self.state = next_state;
            return Ok(Step {
                state: next_state,
                action: self.action,
                fairness: fair,
                reward: None,
                epsilon: 0.0,
            });
        }

        let reward = self.prev.map(|(prev_s, prev_f)| {
            let r = compute_reward(
                obs.throughput - prev_s,
                fair - prev_f,
                &self.cfg,
                obs.throughput == 0.0,
            );
            hysteretic_update(&mut self.q, self.state, self.action, r, next_state, &self.cfg);
            r
        });
        self.prev = Some((obs.throughput, fair));

        let epsilon = self.cfg.epsilon.at(self.epoch_id);
        self.state = next_state;
        self.action = select_action(&self.q, next_state, epsilon, rng);
        Ok(Step {
            state: next_state,
            action: self.action,
            fairness: fair,
            reward,
            epsilon,
        })
    }
}
