//! Mean-field multi-agent Q-learning on a neighbour graph, with the Ising
//! game as the benchmark environment.
//!
//! Each agent keys its Q-table on `(state, own action, bin of ā)` where `ā`
//! is the average one-hot action of its neighbours. The Ising game is
//! stateless (state id 0); its actions are `0 ↔ spin −1` and `1 ↔ spin +1`,
//! and agent `j` earns `s_j · J · Σ_{k∈N(j)} s_k`. Spins persist across
//! episodes; an episode is a block of steps at one temperature.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::anneal::{schedule_temperature, CoolingSchedule};
use crate::ising::CouplingGraph;
use crate::math::{exp, log_sum_exp, round};
use crate::{DiscreteDistribution, Error, Result, RngStream};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborGraph {
    adjacency: Vec<Vec<usize>>,
}

impl NeighborGraph {
    pub fn new(n_agents: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); n_agents];
        for &(i, j) in edges {
            if i >= n_agents || j >= n_agents {
                return Err(Error::validation(format!("edge ({i}, {j}) outside 0..{n_agents}")));
            }
            if i == j {
                return Err(Error::validation(format!("self-loop at agent {i}")));
            }
            if adjacency[i].contains(&j) {
                return Err(Error::validation(format!("duplicate edge ({i}, {j})")));
            }
            adjacency[i].push(j);
            adjacency[j].push(i);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(NeighborGraph { adjacency })
    }

    pub fn from_coupling(graph: &CouplingGraph) -> Result<Self> {
        let edges: Vec<(usize, usize)> = graph.edges().iter().map(|&(i, j, _)| (i, j)).collect();
        Self::new(graph.n_sites(), &edges)
    }

    pub fn torus(side: usize) -> Result<Self> {
        Self::from_coupling(&CouplingGraph::torus(side, 1.0, 0.0)?)
    }

    pub fn n_agents(&self) -> usize {
        self.adjacency.len()
    }

    pub fn neighbors(&self, agent: usize) -> &[usize] {
        &self.adjacency[agent]
    }
}

/// Average of the neighbours' one-hot actions.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanAction(Vec<f64>);

impl MeanAction {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// Index of the grid cell nearest to `ā`, with `bins` points on `[0, 1]`
    /// per action dimension.
    pub fn bin(&self, bins: usize) -> usize {
        let last = (bins.max(2) - 1) as f64;
        self.0
            .iter()
            .rev()
            .fold(0, |acc, &v| acc * bins.max(2) + round(v * last) as usize)
    }
}

pub fn mean_action(neighbor_actions: &[usize], n_actions: usize) -> Result<MeanAction> {
    if neighbor_actions.is_empty() {
        return Err(Error::domain("mean action of an empty neighbourhood"));
    }
    let mut counts = vec![0.0; n_actions];
    for &a in neighbor_actions {
        if a >= n_actions {
            return Err(Error::validation(format!("action {a} outside 0..{n_actions}")));
        }
        counts[a] += 1.0;
    }
    let n = neighbor_actions.len() as f64;
    Ok(MeanAction(counts.into_iter().map(|c| c / n).collect()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct QKey {
    pub state: u64,
    pub action: usize,
    pub bin: usize,
}

/// Sparse action-value table; missing entries read as zero.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct QTable {
    values: BTreeMap<QKey, f64>,
    visits: BTreeMap<QKey, u64>,
}

impl QTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, key: QKey) -> f64 {
        self.values.get(&key).copied().unwrap_or(0.0)
    }

    pub fn visits(&self, key: QKey) -> u64 {
        self.visits.get(&key).copied().unwrap_or(0)
    }

    /// `Q(state, ·, bin)` over actions `0..n_actions`.
    pub fn row(&self, state: u64, bin: usize, n_actions: usize) -> Vec<f64> {
        (0..n_actions).map(|action| self.get(QKey { state, action, bin })).collect()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&QKey, &f64)> {
        self.values.iter()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `Q ← (1 − α) Q + α (r + γ V′)`; returns the new value.
pub fn mf_q_update(q: &mut QTable, key: QKey, reward: f64, next_value: f64, alpha: f64, gamma: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::validation(format!("alpha = {alpha} outside [0, 1]")));
    }
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::validation(format!("gamma = {gamma} outside [0, 1)")));
    }
    if !reward.is_finite() || !next_value.is_finite() {
        return Err(Error::validation("reward and next value must be finite"));
    }
    let old = q.get(key);
    let target = reward + gamma * next_value;
    let new = if alpha == 1.0 { target } else { (1.0 - alpha) * old + alpha * target };
    q.values.insert(key, new);
    *q.visits.entry(key).or_insert(0) += 1;
    Ok(new)
}

/// `softmax(Q / τ)`.
pub fn boltzmann_policy(q_row: &[f64], temperature: f64) -> Result<DiscreteDistribution> {
    if !(temperature > 0.0) || !temperature.is_finite() {
        return Err(Error::validation(format!("temperature {temperature} must be > 0")));
    }
    softmax(&q_row.iter().map(|q| q / temperature).collect::<Vec<_>>())
}

fn softmax(logits: &[f64]) -> Result<DiscreteDistribution> {
    if logits.is_empty() {
        return Err(Error::validation("empty action set"));
    }
    if logits.iter().any(|x| !x.is_finite()) {
        return Err(Error::validation("values must be finite"));
    }
    let z = log_sum_exp(logits);
    let p: Vec<f64> = logits.iter().map(|l| exp(l - z)).collect();
    DiscreteDistribution::from_weights(&p)
}

/// `V = Σ_a π(a) Q(a)`.
pub fn mf_value(q_row: &[f64], policy: &DiscreteDistribution) -> Result<f64> {
    if q_row.len() != policy.len() {
        return Err(Error::validation(format!(
            "{} Q values but {} policy entries",
            q_row.len(),
            policy.len()
        )));
    }
    Ok(q_row.iter().zip(policy.probs()).map(|(q, p)| p * q).sum())
}

/// `∇_θ ln π(a|θ) · Q = (onehot(a) − π) Q` for a softmax policy.
pub fn mf_actor_critic_grad(logits: &[f64], own_action: usize, q_value: f64) -> Result<Vec<f64>> {
    if own_action >= logits.len() {
        return Err(Error::validation(format!("action {own_action} outside 0..{}", logits.len())));
    }
    if !q_value.is_finite() {
        return Err(Error::validation("Q value must be finite"));
    }
    let pi = softmax(logits)?;
    Ok(pi
        .probs()
        .iter()
        .enumerate()
        .map(|(a, p)| (((a == own_action) as u8 as f64) - p) * q_value)
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsingGameEnv {
    pub graph: NeighborGraph,
    pub coupling: f64,
}

impl IsingGameEnv {
    pub fn new(graph: NeighborGraph, coupling: f64) -> Result<Self> {
        if !coupling.is_finite() {
            return Err(Error::validation("coupling must be finite"));
        }
        Ok(IsingGameEnv { graph, coupling })
    }

    /// `s_j · J · Σ_{k∈N(j)} s_k`
    pub fn reward(&self, spins: &[i8], agent: usize) -> f64 {
        let field: f64 = self.graph.neighbors(agent).iter().map(|&k| spins[k] as f64).sum();
        spins[agent] as f64 * self.coupling * field
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LearningRate {
    Constant(f64),
    /// `1 / (visit count)` per key.
    InverseVisits,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GameConfig {
    pub episodes: u64,
    pub steps_per_episode: u64,
    pub learning_rate: LearningRate,
    pub gamma: f64,
    pub schedule: CoolingSchedule,
    pub bins: usize,
}

impl GameConfig {
    pub const DEFAULT_BINS: usize = 11;
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameRun {
    pub q_tables: Vec<QTable>,
    /// `|(1/N) Σ_j s_j|` at the end of each episode.
    pub magnetization: Vec<f64>,
    pub final_spins: Vec<i8>,
}

const N_ACTIONS: usize = 2;

fn spin_of(action: usize) -> i8 {
    if action == 1 {
        1
    } else {
        -1
    }
}

fn action_of(spin: i8) -> usize {
    (spin > 0) as usize
}

/// Runs the game from uniformly random spins. Agents act one at a time in
/// id order; each sees its neighbours' current actions.
pub fn run_ising_game(env: &IsingGameEnv, config: &GameConfig, rng: &mut RngStream) -> Result<GameRun> {
    if let LearningRate::Constant(alpha) = config.learning_rate {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::validation(format!("alpha = {alpha} outside [0, 1]")));
        }
    }
    if !(0.0..1.0).contains(&config.gamma) {
        return Err(Error::validation(format!("gamma = {} outside [0, 1)", config.gamma)));
    }
    if config.bins < 2 {
        return Err(Error::validation("need at least 2 mean-action bins"));
    }
    config.schedule.validate()?;
    let n = env.graph.n_agents();
    if n == 0 {
        return Err(Error::validation("game has no agents"));
    }
    let mut spins: Vec<i8> = (0..n).map(|_| if rng.bernoulli(0.5) { 1 } else { -1 }).collect();
    let mut q_tables = vec![QTable::new(); n];
    let mut magnetization = Vec::with_capacity(config.episodes as usize);
    for episode in 0..config.episodes {
        let temperature = schedule_temperature(&config.schedule, episode)?;
        for _ in 0..config.steps_per_episode {
            for j in 0..n {
                let actions: Vec<usize> = env.graph.neighbors(j).iter().map(|&k| action_of(spins[k])).collect();
                let bin = mean_action(&actions, N_ACTIONS)
                    .map_err(|e| e.context(&format!("agent {j}")))?
                    .bin(config.bins);
                let table = &mut q_tables[j];
                let policy = boltzmann_policy(&table.row(0, bin, N_ACTIONS), temperature)?;
                let a = rng.categorical(policy.probs());
                spins[j] = spin_of(a);
                let reward = env.reward(&spins, j);
                let key = QKey { state: 0, action: a, bin };
                let alpha = match config.learning_rate {
                    LearningRate::Constant(alpha) => alpha,
                    LearningRate::InverseVisits => 1.0 / (table.visits(key) + 1) as f64,
                };
                let row = table.row(0, bin, N_ACTIONS);
                let next_value = mf_value(&row, &boltzmann_policy(&row, temperature)?)?;
                mf_q_update(table, key, reward, next_value, alpha, config.gamma)?;
            }
        }
        let m = spins.iter().map(|&s| s as f64).sum::<f64>() / n as f64;
        magnetization.push(m.abs());
    }
    Ok(GameRun {
        q_tables,
        magnetization,
        final_spins: spins,
    })
}
