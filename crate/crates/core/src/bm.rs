//! Restricted Boltzmann machines with binary `{0, 1}` units.
//!
//! `E(v, h) = −Σ_i a_i v_i − Σ_j b_j h_j − Σ_{ij} v_i w_ij h_j` at unit
//! inverse temperature; scale the parameters to change temperature. Only
//! visible–hidden couplings exist, so `W` is an `n_v × n_h` matrix. The
//! `±1` convention maps onto this one through `s = 2u − 1`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::math::{exp, ln, log_sum_exp, logistic};
use crate::{DiscreteDistribution, Error, Result, RngStream, MAX_ENUMERATION_SITES};

#[derive(Debug, Clone, PartialEq)]
pub struct BoltzmannMachine {
    a: Vec<f64>,
    b: Vec<f64>,
    /// row-major `n_v × n_h`
    w: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BMState {
    pub v: Vec<u8>,
    pub h: Vec<u8>,
}

fn check_binary(name: &str, x: &[u8]) -> Result<()> {
    if let Some(i) = x.iter().position(|&u| u > 1) {
        return Err(Error::validation(format!("{name}[{i}] = {} is not binary", x[i])));
    }
    Ok(())
}

impl BMState {
    pub fn new(v: Vec<u8>, h: Vec<u8>) -> Result<Self> {
        check_binary("v", &v)?;
        check_binary("h", &h)?;
        Ok(BMState { v, h })
    }

    /// State number `index` of the joint enumeration: visible units occupy
    /// the low bits, hidden units the bits above them.
    pub fn from_index(index: usize, n_v: usize, n_h: usize) -> Self {
        BMState {
            v: (0..n_v).map(|i| (index >> i & 1) as u8).collect(),
            h: (0..n_h).map(|j| (index >> (n_v + j) & 1) as u8).collect(),
        }
    }

    pub fn index(&self) -> usize {
        let nv = self.v.len();
        let v = self.v.iter().enumerate().fold(0, |acc, (i, &x)| acc | (x as usize) << i);
        self.h.iter().enumerate().fold(v, |acc, (j, &x)| acc | (x as usize) << (nv + j))
    }
}

/// Index of a visible vector in the `2^{n_v}` enumeration (bit `i` = `v_i`).
pub fn visible_index(v: &[u8]) -> usize {
    v.iter().enumerate().fold(0, |acc, (i, &x)| acc | (x as usize) << i)
}

fn visible_from_index(index: usize, n_v: usize) -> Vec<u8> {
    (0..n_v).map(|i| (index >> i & 1) as u8).collect()
}

/// Gradient of the mean negative log-likelihood, laid out like the machine.
#[derive(Debug, Clone, PartialEq)]
pub struct BmGradient {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub w: Vec<f64>,
}

impl BmGradient {
    pub fn flatten(&self) -> Vec<f64> {
        self.a.iter().chain(&self.b).chain(&self.w).copied().collect()
    }
}

impl BoltzmannMachine {
    pub fn new(a: Vec<f64>, b: Vec<f64>, w: Vec<Vec<f64>>) -> Result<Self> {
        if w.len() != a.len() {
            return Err(Error::validation(format!(
                "W has {} rows, expected n_v = {}",
                w.len(),
                a.len()
            )));
        }
        if let Some(i) = w.iter().position(|row| row.len() != b.len()) {
            return Err(Error::validation(format!(
                "W row {i} has {} columns, expected n_h = {}",
                w[i].len(),
                b.len()
            )));
        }
        let flat: Vec<f64> = w.into_iter().flatten().collect();
        if a.iter().chain(&b).chain(&flat).any(|x| !x.is_finite()) {
            return Err(Error::validation("machine parameters must be finite"));
        }
        Ok(BoltzmannMachine { a, b, w: flat })
    }

    pub fn zeros(n_v: usize, n_h: usize) -> Self {
        BoltzmannMachine {
            a: vec![0.0; n_v],
            b: vec![0.0; n_h],
            w: vec![0.0; n_v * n_h],
        }
    }

    /// Parameters drawn uniformly from `[−scale, scale)`.
    pub fn random(n_v: usize, n_h: usize, scale: f64, rng: &mut RngStream) -> Self {
        let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.uniform_range(-scale, scale)).collect() };
        let a = draw(n_v);
        let b = draw(n_h);
        let w = draw(n_v * n_h);
        BoltzmannMachine { a, b, w }
    }

    pub fn n_visible(&self) -> usize {
        self.a.len()
    }

    pub fn n_hidden(&self) -> usize {
        self.b.len()
    }

    pub fn visible_bias(&self) -> &[f64] {
        &self.a
    }

    pub fn hidden_bias(&self) -> &[f64] {
        &self.b
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.w[i * self.b.len() + j]
    }

    pub fn weights(&self) -> Vec<Vec<f64>> {
        self.w.chunks(self.b.len().max(1)).take(self.a.len()).map(|r| r.to_vec()).collect()
    }

    /// All parameters in the order `a`, `b`, `W` (row-major).
    pub fn parameters(&self) -> Vec<f64> {
        self.a.iter().chain(&self.b).chain(&self.w).copied().collect()
    }

    /// Inverse of [`BoltzmannMachine::parameters`].
    pub fn set_parameters(&mut self, p: &[f64]) -> Result<()> {
        let (nv, nh) = (self.a.len(), self.b.len());
        if p.len() != nv + nh + nv * nh {
            return Err(Error::validation("parameter vector has the wrong length"));
        }
        self.a.copy_from_slice(&p[..nv]);
        self.b.copy_from_slice(&p[nv..nv + nh]);
        self.w.copy_from_slice(&p[nv + nh..]);
        Ok(())
    }

    fn check_state(&self, s: &BMState) -> Result<()> {
        if s.v.len() != self.a.len() || s.h.len() != self.b.len() {
            return Err(Error::validation(format!(
                "state has {}v/{}h units, machine has {}v/{}h",
                s.v.len(),
                s.h.len(),
                self.a.len(),
                self.b.len()
            )));
        }
        check_binary("v", &s.v)?;
        check_binary("h", &s.h)
    }

    fn check_visible(&self, v: &[u8]) -> Result<()> {
        if v.len() != self.a.len() {
            return Err(Error::validation(format!(
                "visible vector has {} units, machine has {}",
                v.len(),
                self.a.len()
            )));
        }
        check_binary("v", v)
    }

    fn check_exact(&self) -> Result<()> {
        let units = self.a.len() + self.b.len();
        if units > MAX_ENUMERATION_SITES {
            return Err(Error::Capacity {
                what: "Boltzmann machine",
                size: units,
                limit: MAX_ENUMERATION_SITES,
            });
        }
        Ok(())
    }

    /// `b_j + Σ_i v_i w_ij`
    pub fn hidden_input(&self, v: &[u8], j: usize) -> f64 {
        let nh = self.b.len();
        self.b[j] + v.iter().enumerate().filter(|(_, &x)| x == 1).map(|(i, _)| self.w[i * nh + j]).sum::<f64>()
    }

    /// `a_i + Σ_j w_ij h_j`
    pub fn visible_input(&self, h: &[u8], i: usize) -> f64 {
        let nh = self.b.len();
        self.a[i] + h.iter().enumerate().filter(|(_, &x)| x == 1).map(|(j, _)| self.w[i * nh + j]).sum::<f64>()
    }

    /// `p(h_j = 1 | v)` for every hidden unit.
    pub fn hidden_probabilities(&self, v: &[u8]) -> Vec<f64> {
        (0..self.b.len()).map(|j| logistic(self.hidden_input(v, j))).collect()
    }

    /// `p(v_i = 1 | h)` for every visible unit.
    pub fn visible_probabilities(&self, h: &[u8]) -> Vec<f64> {
        (0..self.a.len()).map(|i| logistic(self.visible_input(h, i))).collect()
    }

    fn energy_unchecked(&self, s: &BMState) -> f64 {
        let nh = self.b.len();
        let mut e = 0.0;
        for (i, &vi) in s.v.iter().enumerate() {
            if vi == 1 {
                e -= self.a[i];
                for (j, &hj) in s.h.iter().enumerate() {
                    if hj == 1 {
                        e -= self.w[i * nh + j];
                    }
                }
            }
        }
        for (j, &hj) in s.h.iter().enumerate() {
            if hj == 1 {
                e -= self.b[j];
            }
        }
        e
    }

    /// `−ln Σ_h e^{−E(v,h)} = −a·v − Σ_j ln(1 + e^{b_j + v·W_j})`.
    pub fn free_energy(&self, v: &[u8]) -> f64 {
        let av: f64 = v.iter().zip(&self.a).filter(|(&x, _)| x == 1).map(|(_, a)| a).sum();
        let softplus: f64 = (0..self.b.len())
            .map(|j| {
                let x = self.hidden_input(v, j);
                // ln(1 + e^x) without overflow
                x.max(0.0) + ln(1.0 + exp(-x.abs()))
            })
            .sum();
        -av - softplus
    }

    /// `ln Z` by enumerating visible vectors with hidden units summed out.
    pub fn log_partition(&self) -> Result<f64> {
        self.check_exact()?;
        let nv = self.a.len();
        let neg_free: Vec<f64> = (0..1usize << nv)
            .map(|k| -self.free_energy(&visible_from_index(k, nv)))
            .collect();
        Ok(log_sum_exp(&neg_free))
    }

    /// Model marginal `p(v)` over the `2^{n_v}` visible vectors.
    pub fn visible_marginal(&self) -> Result<DiscreteDistribution> {
        let log_z = self.log_partition()?;
        let nv = self.a.len();
        let p: Vec<f64> = (0..1usize << nv)
            .map(|k| exp(-self.free_energy(&visible_from_index(k, nv)) - log_z))
            .collect();
        DiscreteDistribution::from_weights(&p)
    }

    /// Mean of `−ln p(v)` over the data.
    pub fn negative_log_likelihood(&self, data: &[Vec<u8>]) -> Result<f64> {
        if data.is_empty() {
            return Err(Error::validation("no training vectors"));
        }
        let log_z = self.log_partition()?;
        let mut total = 0.0;
        for v in data {
            self.check_visible(v)?;
            total += self.free_energy(v) + log_z;
        }
        Ok(total / data.len() as f64)
    }

    /// Exact gradient of [`BoltzmannMachine::negative_log_likelihood`]:
    /// `∂/∂w_ij = ⟨v_i h_j⟩_model − ⟨v_i h_j⟩_data`, likewise for biases,
    /// with hidden units integrated out analytically.
    pub fn nll_gradient(&self, data: &[Vec<u8>]) -> Result<BmGradient> {
        if data.is_empty() {
            return Err(Error::validation("no training vectors"));
        }
        for v in data {
            self.check_visible(v)?;
        }
        let nv = self.a.len();
        let marginal = self.visible_marginal()?;
        let mut model = self.zero_gradient();
        for (k, &p) in marginal.probs().iter().enumerate() {
            if p > 0.0 {
                self.accumulate_stats(&mut model, &visible_from_index(k, nv), p);
            }
        }
        let mut data_stats = self.zero_gradient();
        let wgt = 1.0 / data.len() as f64;
        for v in data {
            self.accumulate_stats(&mut data_stats, v, wgt);
        }
        Ok(self.difference(&model, &data_stats))
    }

    fn zero_gradient(&self) -> BmGradient {
        BmGradient {
            a: vec![0.0; self.a.len()],
            b: vec![0.0; self.b.len()],
            w: vec![0.0; self.w.len()],
        }
    }

    /// Adds `weight · (v, E[h|v], v E[h|v]ᵀ)` into `acc`.
    fn accumulate_stats(&self, acc: &mut BmGradient, v: &[u8], weight: f64) {
        let ph = self.hidden_probabilities(v);
        self.accumulate_pair(acc, v, &ph, weight);
    }

    fn accumulate_pair(&self, acc: &mut BmGradient, v: &[u8], h: &[f64], weight: f64) {
        let nh = self.b.len();
        for (i, &vi) in v.iter().enumerate() {
            if vi == 1 {
                acc.a[i] += weight;
                for (j, &hj) in h.iter().enumerate() {
                    acc.w[i * nh + j] += weight * hj;
                }
            }
        }
        for (j, &hj) in h.iter().enumerate() {
            acc.b[j] += weight * hj;
        }
    }

    fn difference(&self, model: &BmGradient, data: &BmGradient) -> BmGradient {
        let sub = |m: &[f64], d: &[f64]| m.iter().zip(d).map(|(x, y)| x - y).collect();
        BmGradient {
            a: sub(&model.a, &data.a),
            b: sub(&model.b, &data.b),
            w: sub(&model.w, &data.w),
        }
    }

    /// CD-k estimate of the NLL gradient: positive statistics from the data,
    /// negative statistics after `k` Gibbs sweeps started at each data vector.
    pub fn cd_gradient(&self, data: &[Vec<u8>], k: usize, rng: &mut RngStream) -> Result<BmGradient> {
        if data.is_empty() {
            return Err(Error::validation("no training vectors"));
        }
        if k == 0 {
            return Err(Error::validation("CD-k needs k >= 1"));
        }
        let wgt = 1.0 / data.len() as f64;
        let mut positive = self.zero_gradient();
        let mut negative = self.zero_gradient();
        for v0 in data {
            self.check_visible(v0)?;
            self.accumulate_stats(&mut positive, v0, wgt);
            let mut v = v0.clone();
            for _ in 0..k {
                let h = self.sample_hidden(&v, rng);
                v = self.sample_visible(&h, rng);
            }
            self.accumulate_stats(&mut negative, &v, wgt);
        }
        Ok(self.difference(&negative, &positive))
    }

    pub fn sample_hidden(&self, v: &[u8], rng: &mut RngStream) -> Vec<u8> {
        (0..self.b.len())
            .map(|j| rng.bernoulli(logistic(self.hidden_input(v, j))) as u8)
            .collect()
    }

    pub fn sample_visible(&self, h: &[u8], rng: &mut RngStream) -> Vec<u8> {
        (0..self.a.len())
            .map(|i| rng.bernoulli(logistic(self.visible_input(h, i))) as u8)
            .collect()
    }

    fn apply(&mut self, g: &BmGradient, learning_rate: f64) {
        for (p, d) in self.a.iter_mut().zip(&g.a) {
            *p -= learning_rate * d;
        }
        for (p, d) in self.b.iter_mut().zip(&g.b) {
            *p -= learning_rate * d;
        }
        for (p, d) in self.w.iter_mut().zip(&g.w) {
            *p -= learning_rate * d;
        }
    }
}

pub fn bm_energy(state: &BMState, machine: &BoltzmannMachine) -> Result<f64> {
    machine.check_state(state)?;
    Ok(machine.energy_unchecked(state))
}

/// `Z = Σ_{v,h} e^{−E(v,h)}` and the joint distribution over all
/// `2^{n_v + n_h}` states, indexed as in [`BMState::from_index`].
pub fn bm_partition_exact(machine: &BoltzmannMachine) -> Result<(f64, DiscreteDistribution)> {
    machine.check_exact()?;
    let (nv, nh) = (machine.n_visible(), machine.n_hidden());
    let neg_e: Vec<f64> = (0..1usize << (nv + nh))
        .map(|k| -machine.energy_unchecked(&BMState::from_index(k, nv, nh)))
        .collect();
    let log_z = log_sum_exp(&neg_e);
    let probs: Vec<f64> = neg_e.iter().map(|x| exp(x - log_z)).collect();
    Ok((exp(log_z), DiscreteDistribution::from_weights(&probs)?))
}

/// Block Gibbs sampling: each step draws `h ~ p(h|v)` and then
/// `v ~ p(v|h)`, recording the resulting `(v, h)` pair.
pub fn bm_gibbs_sample(machine: &BoltzmannMachine, steps: usize, rng: &mut RngStream, start: BMState) -> Result<Vec<BMState>> {
    machine.check_state(&start)?;
    let mut v = start.v;
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        let h = machine.sample_hidden(&v, rng);
        v = machine.sample_visible(&h, rng);
        out.push(BMState { v: v.clone(), h });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainMethod {
    ExactGradient,
    ContrastiveDivergence { k: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub method: TrainMethod,
    pub learning_rate: f64,
    pub epochs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub machine: BoltzmannMachine,
    /// Exact mean NLL after each epoch; empty when the machine is too
    /// large to enumerate.
    pub loss_curve: Vec<f64>,
}

/// Full-batch gradient descent on the mean NLL.
pub fn bm_train(machine: &BoltzmannMachine, data: &[Vec<u8>], config: TrainConfig, rng: &mut RngStream) -> Result<TrainOutcome> {
    if !(config.learning_rate >= 0.0) || !config.learning_rate.is_finite() {
        return Err(Error::validation(format!(
            "learning rate {} must be finite and >= 0",
            config.learning_rate
        )));
    }
    if data.is_empty() {
        return Err(Error::validation("no training vectors"));
    }
    for v in data {
        machine.check_visible(v)?;
    }
    let enumerable = machine.check_exact().is_ok();
    if matches!(config.method, TrainMethod::ExactGradient) && !enumerable {
        machine.check_exact()?;
    }
    let mut m = machine.clone();
    let mut loss_curve = Vec::new();
    for _ in 0..config.epochs {
        let g = match config.method {
            TrainMethod::ExactGradient => m.nll_gradient(data)?,
            TrainMethod::ContrastiveDivergence { k } => m.cd_gradient(data, k, rng)?,
        };
        m.apply(&g, config.learning_rate);
        if enumerable {
            loss_curve.push(m.negative_log_likelihood(data)?);
        }
    }
    Ok(TrainOutcome { machine: m, loss_curve })
}
