//! Free energies and discrete planning.
//!
//! [`expected_free_energy`] and [`fe_value_iteration`] take the free-energy
//! expressions literally: the per-step cost is `E[r(o, s) − ln Q(s′|s, a)]`
//! and the Bellman operator minimises over actions. Because `r` then enters a
//! quantity being minimised, [`RewardSign`] selects whether the model's `r`
//! is used as given or negated.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::info::kl_divergence;
use crate::math::{ln, xlnx};
use crate::{DiscreteDistribution, Error, Result, SUM_TOLERANCE};

pub use crate::meanfield::{mean_field_update, FactorizedPosterior, LogTable, MeanFieldRun};

/// `A = U − T S`
pub fn helmholtz_free_energy(u: f64, t: f64, s: f64) -> Result<f64> {
    if !u.is_finite() || !t.is_finite() || !s.is_finite() {
        return Err(Error::validation("free energy inputs must be finite"));
    }
    if t < 0.0 {
        return Err(Error::validation(format!("temperature {t} must be >= 0")));
    }
    Ok(u - t * s)
}

/// Exact posterior `P(Z|X) ∝ P(Z) P(X|Z)` for one observed `X`, given the
/// column `P(X = x | Z = z)` over `z`.
pub fn exact_posterior(prior: &DiscreteDistribution, likelihood_column: &[f64]) -> Result<DiscreteDistribution> {
    if likelihood_column.len() != prior.len() {
        return Err(Error::validation(format!(
            "likelihood has {} entries, prior has {}",
            likelihood_column.len(),
            prior.len()
        )));
    }
    if let Some(l) = likelihood_column.iter().find(|l| !(**l >= 0.0) || !l.is_finite()) {
        return Err(Error::validation(format!("likelihood {l} must be finite and >= 0")));
    }
    let joint: Vec<f64> = prior.probs().iter().zip(likelihood_column).map(|(p, l)| p * l).collect();
    if joint.iter().sum::<f64>() <= 0.0 {
        return Err(Error::domain("observation has zero evidence"));
    }
    DiscreteDistribution::from_weights(&joint)
}

/// `F = KL(Q(Z) ‖ P(Z|X))`.
pub fn variational_free_energy(q: &DiscreteDistribution, prior: &DiscreteDistribution, likelihood_column: &[f64]) -> Result<f64> {
    let posterior = exact_posterior(prior, likelihood_column)?;
    kl_divergence(q, &posterior)
}

/// Whether `r(o, s)` enters the free-energy cost as given or negated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RewardSign {
    #[default]
    AsGiven,
    Negated,
}

impl RewardSign {
    fn factor(self) -> f64 {
        match self {
            RewardSign::AsGiven => 1.0,
            RewardSign::Negated => -1.0,
        }
    }
}

fn check_stochastic(name: &str, rows: &[Vec<f64>], width: usize) -> Result<()> {
    for (i, row) in rows.iter().enumerate() {
        if row.len() != width {
            return Err(Error::validation(format!("{name} row {i} has {} entries, expected {width}", row.len())));
        }
        if row.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(Error::validation(format!("{name} row {i} has a negative or non-finite entry")));
        }
        let s: f64 = row.iter().sum();
        if (s - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::validation(format!("{name} row {i} sums to {s}")));
        }
    }
    Ok(())
}

fn check_discount(gamma: f64) -> Result<()> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::validation(format!("discount {gamma} outside [0, 1)")));
    }
    Ok(())
}

/// States, actions and observations are indices. `transition[a][s][s′]` is
/// `Q(s′|s, a)`, `likelihood[s][o]` is `P(o|s)` and `reward[s][o]` is `r(o, s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerativeModel {
    prior: DiscreteDistribution,
    likelihood: Vec<Vec<f64>>,
    transition: Vec<Vec<Vec<f64>>>,
    reward: Vec<Vec<f64>>,
    sign: RewardSign,
}

impl GenerativeModel {
    pub fn new(
        prior: DiscreteDistribution,
        likelihood: Vec<Vec<f64>>,
        transition: Vec<Vec<Vec<f64>>>,
        reward: Vec<Vec<f64>>,
        sign: RewardSign,
    ) -> Result<Self> {
        let n = prior.len();
        if likelihood.len() != n || reward.len() != n {
            return Err(Error::validation(format!("likelihood and reward need {n} rows")));
        }
        let n_obs = likelihood.first().map_or(0, Vec::len);
        if n_obs == 0 {
            return Err(Error::validation("model has no observations"));
        }
        check_stochastic("likelihood", &likelihood, n_obs)?;
        if transition.is_empty() {
            return Err(Error::validation("model has no actions"));
        }
        for (a, t) in transition.iter().enumerate() {
            if t.len() != n {
                return Err(Error::validation(format!("transition for action {a} needs {n} rows")));
            }
            check_stochastic("transition", t, n)?;
        }
        for (s, row) in reward.iter().enumerate() {
            if row.len() != n_obs || row.iter().any(|r| !r.is_finite()) {
                return Err(Error::validation(format!("reward row {s} must hold {n_obs} finite values")));
            }
        }
        Ok(GenerativeModel {
            prior,
            likelihood,
            transition,
            reward,
            sign,
        })
    }

    pub fn n_states(&self) -> usize {
        self.prior.len()
    }

    pub fn n_actions(&self) -> usize {
        self.transition.len()
    }

    pub fn prior(&self) -> &DiscreteDistribution {
        &self.prior
    }

    pub fn transition(&self) -> &[Vec<Vec<f64>>] {
        &self.transition
    }

    /// One-step cost `c(s, a) = E_{o|s}[±r(o, s)] + E_{s′|s,a}[−ln Q(s′|s, a)]`.
    pub fn step_cost(&self, s: usize, a: usize) -> f64 {
        let k = self.sign.factor();
        let reward: f64 = self.likelihood[s].iter().zip(&self.reward[s]).map(|(p, r)| p * k * r).sum();
        let surprise: f64 = -self.transition[a][s].iter().map(|&q| xlnx(q)).sum::<f64>();
        reward + surprise
    }

    /// `c(s, a)` as an `n_states × n_actions` table.
    pub fn cost_table(&self) -> Vec<Vec<f64>> {
        (0..self.n_states())
            .map(|s| (0..self.n_actions()).map(|a| self.step_cost(s, a)).collect())
            .collect()
    }
}

/// `G(π) = Σ_t E[r(o_t, s_t) − ln Q(s_{t+1}|s_t, a_t)]` along the roll-out of
/// the state distribution from `start`.
pub fn expected_free_energy(policy: &[usize], model: &GenerativeModel, start: &DiscreteDistribution) -> Result<f64> {
    let n = model.n_states();
    if start.len() != n {
        return Err(Error::validation(format!("start distribution has {} states, model has {n}", start.len())));
    }
    if let Some(a) = policy.iter().find(|&&a| a >= model.n_actions()) {
        return Err(Error::validation(format!("action {a} outside 0..{}", model.n_actions())));
    }
    let mut state = start.probs().to_vec();
    let mut g = 0.0;
    for &a in policy {
        let mut next = vec![0.0; n];
        for (s, &p) in state.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            g += p * model.step_cost(s, a);
            for (s2, q) in model.transition[a][s].iter().enumerate() {
                next[s2] += p * q;
            }
        }
        state = next;
    }
    Ok(g)
}

/// `transition[s][a][s′] = P(s′|s, a)`, `reward[s][a] = R(s, a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMDP {
    n_states: usize,
    n_actions: usize,
    transition: Vec<Vec<Vec<f64>>>,
    reward: Vec<Vec<f64>>,
    gamma: f64,
}

impl DiscreteMDP {
    pub fn new(transition: Vec<Vec<Vec<f64>>>, reward: Vec<Vec<f64>>, gamma: f64) -> Result<Self> {
        check_discount(gamma)?;
        let n_states = transition.len();
        if n_states == 0 {
            return Err(Error::validation("MDP has no states"));
        }
        let n_actions = transition[0].len();
        if n_actions == 0 {
            return Err(Error::validation("MDP has no actions"));
        }
        for (s, rows) in transition.iter().enumerate() {
            if rows.len() != n_actions {
                return Err(Error::validation(format!("state {s} has {} actions, expected {n_actions}", rows.len())));
            }
            check_stochastic("transition", rows, n_states).map_err(|e| e.context(&format!("state {s}")))?;
        }
        if reward.len() != n_states {
            return Err(Error::validation(format!("reward has {} rows, expected {n_states}", reward.len())));
        }
        for (s, row) in reward.iter().enumerate() {
            if row.len() != n_actions || row.iter().any(|r| !r.is_finite()) {
                return Err(Error::validation(format!("reward row {s} must hold {n_actions} finite values")));
            }
        }
        Ok(DiscreteMDP {
            n_states,
            n_actions,
            transition,
            reward,
            gamma,
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn transition(&self, s: usize, a: usize) -> &[f64] {
        &self.transition[s][a]
    }

    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.reward[s][a]
    }

    /// The same dynamics with `R → αR + β`.
    pub fn with_affine_reward(&self, alpha: f64, beta: f64) -> Result<Self> {
        let reward = self.reward.iter().map(|r| r.iter().map(|x| alpha * x + beta).collect()).collect();
        DiscreteMDP::new(self.transition.clone(), reward, self.gamma)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueIterationReport {
    pub values: Vec<f64>,
    pub policy: Vec<usize>,
    pub iterations: usize,
    /// `‖T V − V‖_∞` at the returned `V`.
    pub residual: f64,
    /// `‖V_{k+1} − V_k‖_∞` for every sweep.
    pub diffs: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Objective {
    Max,
    Min,
}

const MAX_SWEEPS: usize = 1_000_000;

/// One Bellman backup of `V` at `s`, returning the value and its best action
/// (lowest index on ties).
fn backup<'m>(
    s: usize,
    n_actions: usize,
    values: &[f64],
    gamma: f64,
    payoff: &dyn Fn(usize, usize) -> f64,
    next: &dyn Fn(usize, usize) -> &'m [f64],
    objective: Objective,
) -> (f64, usize) {
    let mut best = (0.0, usize::MAX);
    for a in 0..n_actions {
        let ev: f64 = next(s, a).iter().zip(values).map(|(p, v)| p * v).sum();
        let q = payoff(s, a) + gamma * ev;
        let better = match objective {
            Objective::Max => q > best.0,
            Objective::Min => q < best.0,
        };
        if best.1 == usize::MAX || better {
            best = (q, a);
        }
    }
    best
}

fn best_action(q: &[f64], objective: Objective) -> usize {
    let mut best = 0;
    for a in 1..q.len() {
        let better = match objective {
            Objective::Max => q[a] > q[best],
            Objective::Min => q[a] < q[best],
        };
        if better {
            best = a;
        }
    }
    best
}

/// Value iteration in increment form: each sweep propagates the last change
/// `δ_k = V_k − V_{k−1}` through `ΔQ = γ P δ_k` instead of recomputing
/// `R + γ P V`, so the reported sweep differences keep full relative
/// precision even when they are far below the rounding error of `V`.
fn iterate<'m>(
    n_states: usize,
    n_actions: usize,
    gamma: f64,
    tolerance: f64,
    payoff: &dyn Fn(usize, usize) -> f64,
    next: &dyn Fn(usize, usize) -> &'m [f64],
    objective: Objective,
) -> Result<ValueIterationReport> {
    if !(tolerance > 0.0) || !tolerance.is_finite() {
        return Err(Error::validation(format!("tolerance {tolerance} must be > 0")));
    }
    let sup = |d: &[f64]| d.iter().fold(0.0, |m: f64, x| m.max(x.abs()));
    let mut q: Vec<Vec<f64>> = (0..n_states).map(|s| (0..n_actions).map(|a| payoff(s, a)).collect()).collect();
    let mut greedy: Vec<usize> = q.iter().map(|row| best_action(row, objective)).collect();
    let mut values: Vec<f64> = q.iter().zip(&greedy).map(|(row, &a)| row[a]).collect();
    let mut delta = values.clone();
    let mut diffs = vec![sup(&delta)];
    let mut dq = vec![0.0; n_actions];
    loop {
        let diff = *diffs.last().expect("non-empty");
        if !diff.is_finite() {
            return Err(Error::Convergence("value iteration diverged".into()));
        }
        if diff < tolerance {
            break;
        }
        if diffs.len() >= MAX_SWEEPS {
            return Err(Error::Convergence(format!("no convergence after {MAX_SWEEPS} sweeps (last change {diff})")));
        }
        let mut step = vec![0.0; n_states];
        for s in 0..n_states {
            for (a, d) in dq.iter_mut().enumerate() {
                *d = gamma * next(s, a).iter().zip(&delta).map(|(p, x)| p * x).sum::<f64>();
            }
            let old = greedy[s];
            let shifted: Vec<f64> = q[s].iter().zip(&dq).map(|(x, d)| x + d).collect();
            let new = best_action(&shifted, objective);
            step[s] = if new == old {
                dq[new]
            } else {
                // the exact change lies between the two actions' increments
                let raw = (q[s][new] - q[s][old]) + dq[new];
                raw.clamp(dq[new].min(dq[old]), dq[new].max(dq[old]))
            };
            q[s] = shifted;
            greedy[s] = new;
        }
        for (v, d) in values.iter_mut().zip(&step) {
            *v += d;
        }
        diffs.push(sup(&step));
        delta = step;
    }
    let mut residual: f64 = 0.0;
    let mut policy = Vec::with_capacity(n_states);
    for s in 0..n_states {
        let (v, a) = backup(s, n_actions, &values, gamma, payoff, next, objective);
        residual = residual.max((v - values[s]).abs());
        policy.push(a);
    }
    Ok(ValueIterationReport {
        values,
        policy,
        iterations: diffs.len(),
        residual,
        diffs,
    })
}

/// `V(s) ← max_a [R(s, a) + γ Σ_{s′} P(s′|s, a) V(s′)]` from `V = 0` until
/// successive iterates differ by less than `tolerance` in sup-norm.
pub fn value_iteration(mdp: &DiscreteMDP, tolerance: f64) -> Result<ValueIterationReport> {
    iterate(
        mdp.n_states,
        mdp.n_actions,
        mdp.gamma,
        tolerance,
        &|s, a| mdp.reward[s][a],
        &|s, a| &mdp.transition[s][a],
        Objective::Max,
    )
}

/// `V(s) ← min_a [c(s, a) + γ Σ_{s′} Q(s′|s, a) V(s′)]` with the model's
/// free-energy step cost.
pub fn fe_value_iteration(model: &GenerativeModel, gamma: f64, tolerance: f64) -> Result<ValueIterationReport> {
    check_discount(gamma)?;
    let costs = model.cost_table();
    iterate(
        model.n_states(),
        model.n_actions(),
        gamma,
        tolerance,
        &|s, a| costs[s][a],
        &|s, a| &model.transition[a][s],
        Objective::Min,
    )
}

/// Shannon surprise `−ln p` of an outcome.
pub fn surprise(p: f64) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::domain(format!("probability {p} outside (0, 1]")));
    }
    Ok(-ln(p))
}
