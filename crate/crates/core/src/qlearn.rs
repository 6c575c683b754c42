//! Tabular Q-learning with one table per robot, trained simultaneously on a
//! shared reward, plus distillation of each table's greedy policy into a
//! small network.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::fuzzy::{Domain, FisDomains, N_INPUTS};
use crate::mlp::{self, Example, MlpError, MlpParams, TrainConfig};
use crate::sim::{Features, Scenario, SimError, Vec2, World, WorldConfig};

pub type StateId = u32;

/// Smallest dataset `distill` accepts.
pub const MIN_DISTILL_ROWS: usize = 10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QError {
    #[error("invalid q-learning config: {0}")]
    Invalid(String),
    #[error("q-table is empty; nothing to distill")]
    EmptyTable,
    #[error("dataset has {0} rows, need at least {MIN_DISTILL_ROWS}")]
    TooFewRows(usize),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Mlp(#[from] MlpError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QLearnConfig {
    pub alpha: f64,
    pub gamma: f64,
    pub episodes: usize,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Bin counts for (ρ, φ, v_Bx, v_By).
    pub bins: [usize; N_INPUTS],
    pub action_levels: Vec<f64>,
    pub rng_seed: u64,
}

impl Default for QLearnConfig {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            gamma: 0.95,
            episodes: 5000,
            epsilon_start: 0.5,
            epsilon_end: 0.05,
            bins: [9, 9, 5, 5],
            action_levels: vec![-12.0, -6.0, 0.0, 6.0, 12.0],
            rng_seed: 1,
        }
    }
}

impl QLearnConfig {
    pub fn validate(&self, v_max: f64) -> Result<(), QError> {
        let bad = |m: String| Err(QError::Invalid(m));
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad(format!("alpha must be in (0, 1], got {}", self.alpha));
        }
        if !(self.gamma >= 0.0 && self.gamma < 1.0) {
            return bad(format!("gamma must be in [0, 1), got {}", self.gamma));
        }
        for (name, e) in [("epsilon_start", self.epsilon_start), ("epsilon_end", self.epsilon_end)] {
            if !(0.0..=1.0).contains(&e) {
                return bad(format!("{name} must be in [0, 1], got {e}"));
            }
        }
        if self.bins.iter().any(|&b| b < 2) {
            return bad(format!("every bin count must be >= 2, got {:?}", self.bins));
        }
        if self.bins.iter().map(|&b| b as u64).product::<u64>() > StateId::MAX as u64 {
            return bad("too many states".into());
        }
        if self.action_levels.is_empty() {
            return bad("action_levels must be non-empty".into());
        }
        if let Some(v) = self.action_levels.iter().find(|v| !(v.abs() <= v_max)) {
            return bad(format!("action level {v} exceeds v_max {v_max}"));
        }
        Ok(())
    }

    /// Exploration probability used throughout episode `e`.
    pub fn epsilon(&self, e: usize) -> f64 {
        if self.episodes <= 1 {
            return self.epsilon_start;
        }
        let frac = e as f64 / (self.episodes - 1) as f64;
        self.epsilon_start + (self.epsilon_end - self.epsilon_start) * frac
    }
}

/// Uniform binning over the fuzzy feature domains, combined ρ-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discretizer {
    pub domains: [Domain; N_INPUTS],
    pub bins: [usize; N_INPUTS],
}

impl Discretizer {
    pub fn new(domains: [Domain; N_INPUTS], bins: [usize; N_INPUTS]) -> Self {
        Self { domains, bins }
    }

    pub fn for_world(cfg: &WorldConfig, bins: [usize; N_INPUTS]) -> Self {
        Self::new(FisDomains::for_world(cfg).inputs, bins)
    }

    pub fn n_states(&self) -> usize {
        self.bins.iter().product()
    }

    pub fn bin(&self, feature: usize, x: f64) -> usize {
        let d = self.domains[feature];
        let n = self.bins[feature];
        let u = (d.clamp(x) - d.min) / d.width();
        ((u * n as f64).floor() as usize).min(n - 1)
    }

    pub fn state_id(&self, f: &Features) -> StateId {
        let x = f.to_array();
        let mut id = 0;
        for k in 0..N_INPUTS {
            id = id * self.bins[k] + self.bin(k, x[k]);
        }
        id as StateId
    }

    pub fn decompose(&self, id: StateId) -> [usize; N_INPUTS] {
        let mut rest = id as usize;
        let mut out = [0; N_INPUTS];
        for k in (0..N_INPUTS).rev() {
            out[k] = rest % self.bins[k];
            rest /= self.bins[k];
        }
        out
    }

    pub fn bin_center(&self, id: StateId) -> Features {
        let idx = self.decompose(id);
        Features::from_array(std::array::from_fn(|k| {
            let d = self.domains[k];
            d.min + (idx[k] as f64 + 0.5) * d.width() / self.bins[k] as f64
        }))
    }
}

/// Sparse Q store. Unstored entries read as 0.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    n_actions: usize,
    rows: BTreeMap<StateId, Vec<Option<f64>>>,
}

impl QTable {
    pub fn new(n_actions: usize) -> Self {
        Self { n_actions, rows: BTreeMap::new() }
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    /// Number of states with at least one stored entry.
    pub fn n_states(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(&self, s: StateId, a: usize) -> f64 {
        self.rows.get(&s).and_then(|r| r[a]).unwrap_or(0.0)
    }

    pub fn set(&mut self, s: StateId, a: usize, q: f64) {
        assert!(a < self.n_actions, "action {a} out of range");
        self.rows.entry(s).or_insert_with(|| vec![None; self.n_actions])[a] = Some(q);
    }

    pub fn max_q(&self, s: StateId) -> f64 {
        (0..self.n_actions).map(|a| self.get(s, a)).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Argmax action; ties go to the lowest action id.
    pub fn greedy(&self, s: StateId) -> usize {
        let mut best = 0;
        let mut best_q = self.get(s, 0);
        for a in 1..self.n_actions {
            let q = self.get(s, a);
            if q > best_q {
                best = a;
                best_q = q;
            }
        }
        best
    }

    pub fn visited_states(&self) -> impl Iterator<Item = StateId> + '_ {
        self.rows.keys().copied()
    }

    /// Stored entries as (state, action, q), state-major.
    pub fn entries(&self) -> Vec<(StateId, usize, f64)> {
        self.rows
            .iter()
            .flat_map(|(&s, row)| row.iter().enumerate().filter_map(move |(a, q)| q.map(|q| (s, a, q))))
            .collect()
    }

    pub fn from_entries(n_actions: usize, entries: &[(StateId, usize, f64)]) -> Result<Self, QError> {
        let mut t = Self::new(n_actions);
        for &(s, a, q) in entries {
            if a >= n_actions || !q.is_finite() {
                return Err(QError::Invalid(format!("bad q-table entry ({s}, {a}, {q})")));
            }
            t.set(s, a, q);
        }
        Ok(t)
    }
}

pub fn reward(dist_t: f64, dist_next: f64) -> f64 {
    dist_t - dist_next
}

/// `Q(s,a) <- (1-α) Q(s,a) + α (r + γ max_a' Q(s',a'))`.
pub fn q_update(table: &mut QTable, s: StateId, a: usize, r: f64, s_next: StateId, cfg: &QLearnConfig) {
    let target = r + cfg.gamma * table.max_q(s_next);
    let q = (1.0 - cfg.alpha) * table.get(s, a) + cfg.alpha * target;
    table.set(s, a, q);
}

/// Result of one joint step.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    /// Next state of every agent.
    pub states: Vec<StateId>,
    pub reward: f64,
    pub done: bool,
}

/// An environment where every agent observes its own discrete state and all
/// agents share one reward per step.
pub trait MultiAgentEnv {
    fn n_agents(&self) -> usize;
    fn n_actions(&self) -> usize;
    /// Start episode `episode` and return the initial states.
    fn reset(&mut self, episode: usize) -> Result<Vec<StateId>, QError>;
    fn step(&mut self, actions: &[usize]) -> Result<Transition, QError>;
}

/// Pick an action: with probability ε a uniform id, otherwise greedy.
/// Always draws the coin first, then the uniform id only when exploring.
pub fn epsilon_greedy<R: Rng>(table: &QTable, s: StateId, epsilon: f64, rng: &mut R) -> usize {
    if rng.gen::<f64>() < epsilon {
        rng.gen_range(0..table.n_actions())
    } else {
        table.greedy(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QTraining {
    pub tables: Vec<QTable>,
    /// Undiscounted return of each episode; `None` when the episode faulted.
    pub returns: Vec<Option<f64>>,
}

/// Train one table per agent. Agents pick actions in index order from their
/// own table, the joint action is applied, and every table is updated with
/// the shared reward. A faulting episode is logged and abandoned.
pub fn train_tables<E: MultiAgentEnv>(env: &mut E, cfg: &QLearnConfig) -> QTraining {
    let n = env.n_agents();
    let mut tables = vec![QTable::new(env.n_actions()); n];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut returns = Vec::with_capacity(cfg.episodes);
    let mut actions = vec![0; n];
    for e in 0..cfg.episodes {
        let eps = cfg.epsilon(e);
        let mut states = match env.reset(e) {
            Ok(s) => s,
            Err(err) => {
                log::warn!("episode {e}: reset failed: {err}");
                returns.push(None);
                continue;
            }
        };
        let mut total = 0.0;
        let outcome = loop {
            for i in 0..n {
                actions[i] = epsilon_greedy(&tables[i], states[i], eps, &mut rng);
            }
            let tr = match env.step(&actions) {
                Ok(tr) => tr,
                Err(err) => break Err(err),
            };
            for i in 0..n {
                q_update(&mut tables[i], states[i], actions[i], tr.reward, tr.states[i], cfg);
            }
            total += tr.reward;
            states = tr.states;
            if tr.done {
                break Ok(total);
            }
        };
        match outcome {
            Ok(total) => returns.push(Some(total)),
            Err(err) => {
                log::warn!("episode {e} aborted: {err}");
                returns.push(None);
            }
        }
    }
    QTraining { tables, returns }
}

/// The cable world as a multi-agent environment. Scenarios are visited
/// round-robin; an episode ends at the horizon or when a cable breaks.
#[derive(Debug, Clone)]
pub struct CableEnv {
    pub world_cfg: WorldConfig,
    pub scenarios: Vec<Scenario>,
    pub discretizer: Discretizer,
    pub action_levels: Vec<f64>,
    world: World,
    target: Vec2,
    dist: f64,
    step: usize,
    voltages: Vec<f64>,
}

impl CableEnv {
    pub fn new(world_cfg: WorldConfig, scenarios: Vec<Scenario>, cfg: &QLearnConfig) -> Result<Self, QError> {
        cfg.validate(world_cfg.v_max)?;
        if scenarios.is_empty() {
            return Err(QError::Invalid("no training scenarios".into()));
        }
        for s in &scenarios {
            s.validate(&world_cfg)?;
        }
        let world = World::new(&world_cfg)?;
        Ok(Self {
            discretizer: Discretizer::for_world(&world_cfg, cfg.bins),
            action_levels: cfg.action_levels.clone(),
            voltages: vec![0.0; world_cfg.n_robots],
            world_cfg,
            scenarios,
            world,
            target: Vec2::ZERO,
            dist: 0.0,
            step: 0,
        })
    }

    /// Distance from object to target right now.
    pub fn distance(&self) -> f64 {
        self.dist
    }

    fn observe(&self) -> Result<Vec<StateId>, QError> {
        (0..self.world_cfg.n_robots)
            .map(|i| Ok(self.discretizer.state_id(&self.world.perceive(self.target, i)?)))
            .collect()
    }
}

impl MultiAgentEnv for CableEnv {
    fn n_agents(&self) -> usize {
        self.world_cfg.n_robots
    }

    fn n_actions(&self) -> usize {
        self.action_levels.len()
    }

    fn reset(&mut self, episode: usize) -> Result<Vec<StateId>, QError> {
        self.world = World::new(&self.world_cfg)?;
        self.target = self.scenarios[episode % self.scenarios.len()].target;
        self.dist = (self.world.object.position - self.target).norm();
        self.step = 0;
        self.observe()
    }

    fn step(&mut self, actions: &[usize]) -> Result<Transition, QError> {
        for (v, &a) in self.voltages.iter_mut().zip(actions) {
            *v = self.action_levels[a];
        }
        self.world.step(&self.voltages, &self.world_cfg)?;
        self.step += 1;
        let pos = self.world.object.position;
        let dist = (pos - self.target).norm();
        let r = reward(self.dist, dist);
        self.dist = dist;
        let broke = self
            .world
            .anchors
            .iter()
            .any(|a| (*a - pos).norm() > self.world_cfg.break_length);
        let done = broke || self.step >= self.world_cfg.horizon_steps();
        Ok(Transition { states: self.observe()?, reward: r, done })
    }
}

/// Train the robot fleet in the cable world.
pub fn train_fleet(
    cfg: &QLearnConfig,
    scenarios: &[Scenario],
    world_cfg: &WorldConfig,
) -> Result<QTraining, QError> {
    let mut env = CableEnv::new(world_cfg.clone(), scenarios.to_vec(), cfg)?;
    Ok(train_tables(&mut env, cfg))
}

/// One distillation row: a state's bin center and its greedy voltage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistillRow {
    pub state: StateId,
    pub features: Features,
    pub voltage: f64,
}

/// One row per visited state, in state-id order.
pub fn extract_dataset(
    table: &QTable,
    discretizer: &Discretizer,
    action_levels: &[f64],
) -> Result<Vec<DistillRow>, QError> {
    if table.is_empty() {
        return Err(QError::EmptyTable);
    }
    Ok(table
        .visited_states()
        .map(|s| DistillRow {
            state: s,
            features: discretizer.bin_center(s),
            voltage: action_levels[table.greedy(s)],
        })
        .collect())
}

/// Fit a network to a table's greedy policy. Returns the network and its
/// per-epoch training MSE.
pub fn distill(rows: &[DistillRow], cfg: &TrainConfig) -> Result<(MlpParams, Vec<f64>), QError> {
    if rows.len() < MIN_DISTILL_ROWS {
        return Err(QError::TooFewRows(rows.len()));
    }
    let data: Vec<Example> =
        rows.iter().map(|r| Example { x: r.features.to_array(), y: r.voltage }).collect();
    let batch = TrainConfig { batch_size: cfg.batch_size.min(data.len()), ..cfg.clone() };
    Ok(mlp::train(&data, &batch)?)
}

/// Deterministic chain MDP with a value-iteration oracle. Serves as a
/// known-answer fixture for the learner.
pub mod chain {
    use super::*;

    pub const LEFT: usize = 0;
    pub const RIGHT: usize = 1;

    /// States `0..n`; state `n-1` is terminal. Moving right into the
    /// terminal pays +1, every other move pays 0. Moving left from 0 stays
    /// at 0. Episodes start round-robin over the non-terminal states and are
    /// cut after `max_steps`.
    #[derive(Debug, Clone)]
    pub struct ChainEnv {
        pub n_states: usize,
        pub max_steps: usize,
        state: usize,
        steps: usize,
    }

    impl ChainEnv {
        pub fn new(n_states: usize, max_steps: usize) -> Self {
            assert!(n_states >= 2);
            Self { n_states, max_steps, state: 0, steps: 0 }
        }

        pub fn terminal(&self) -> usize {
            self.n_states - 1
        }

        /// (next state, reward) for a move from a non-terminal state.
        pub fn transition(&self, s: usize, a: usize) -> (usize, f64) {
            let next = if a == RIGHT { s + 1 } else { s.saturating_sub(1) };
            let r = if next == self.terminal() { 1.0 } else { 0.0 };
            (next, r)
        }
    }

    impl MultiAgentEnv for ChainEnv {
        fn n_agents(&self) -> usize {
            1
        }

        fn n_actions(&self) -> usize {
            2
        }

        fn reset(&mut self, episode: usize) -> Result<Vec<StateId>, QError> {
            self.state = episode % self.terminal();
            self.steps = 0;
            Ok(vec![self.state as StateId])
        }

        fn step(&mut self, actions: &[usize]) -> Result<Transition, QError> {
            let (next, r) = self.transition(self.state, actions[0]);
            self.state = next;
            self.steps += 1;
            let done = next == self.terminal() || self.steps >= self.max_steps;
            Ok(Transition { states: vec![next as StateId], reward: r, done })
        }
    }

    /// Optimal values and greedy policy by value iteration. Terminal value
    /// is 0; policy ties go to the lower action.
    pub fn value_iteration(env: &ChainEnv, gamma: f64) -> (Vec<f64>, Vec<usize>) {
        let n = env.n_states;
        let mut v = vec![0.0; n];
        let q = |v: &[f64], s: usize, a: usize| {
            let (next, r) = env.transition(s, a);
            r + gamma * v[next]
        };
        loop {
            let mut delta: f64 = 0.0;
            for s in 0..env.terminal() {
                let best = q(&v, s, LEFT).max(q(&v, s, RIGHT));
                delta = delta.max((best - v[s]).abs());
                v[s] = best;
            }
            if delta < 1e-12 {
                break;
            }
        }
        let policy = (0..env.terminal())
            .map(|s| if q(&v, s, RIGHT) > q(&v, s, LEFT) { RIGHT } else { LEFT })
            .collect();
        (v, policy)
    }

    /// Settings used by the chain fixture.
    pub fn fixture_config() -> QLearnConfig {
        QLearnConfig {
            alpha: 0.5,
            gamma: 0.9,
            episodes: 500,
            epsilon_start: 1.0,
            epsilon_end: 0.1,
            bins: [2; N_INPUTS],
            action_levels: vec![-1.0, 1.0],
            rng_seed: 7,
        }
    }

    /// Train on a 5-state chain and compare against value iteration.
    /// Returns (learned greedy policy, oracle policy) over non-terminal states.
    pub fn self_test() -> (Vec<usize>, Vec<usize>) {
        let cfg = fixture_config();
        let mut env = ChainEnv::new(5, 100);
        let trained = train_tables(&mut env, &cfg);
        let learned = (0..env.terminal()).map(|s| trained.tables[0].greedy(s as StateId)).collect();
        let (_, oracle) = value_iteration(&env, cfg.gamma);
        (learned, oracle)
    }
}
