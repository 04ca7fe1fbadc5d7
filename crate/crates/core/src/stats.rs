//! Statistical foundations: importance sampling, CLT standardisation,
//! PAC sample bounds and approximation ratios.

use alloc::format;
use alloc::vec::Vec;

use crate::math::{ceil, erf, ln, sqrt};
use crate::prob::WeightedSample;
use crate::{DiscreteDistribution, Error, Result, RngStream};

/// `(1/N) Σ h(x_i) p(x_i) / q(x_i)` for samples drawn from `q`.
pub fn importance_estimate(h_values: &[f64], p_densities: &[f64], q_densities: &[f64]) -> Result<f64> {
    let n = h_values.len();
    if p_densities.len() != n || q_densities.len() != n {
        return Err(Error::validation(format!(
            "length mismatch: {} h values, {} p densities, {} q densities",
            n,
            p_densities.len(),
            q_densities.len()
        )));
    }
    if n == 0 {
        return Err(Error::validation("importance estimate of zero samples"));
    }
    let mut total = 0.0;
    for ((&h, &p), &q) in h_values.iter().zip(p_densities).zip(q_densities) {
        let s = WeightedSample::from_densities(h, p, q)?;
        // p == q gives weight exactly 1, so the sum is bit-identical to the plain mean
        total += s.value * s.weight;
    }
    Ok(total / n as f64)
}

/// Self-contained sampler descriptions with known mean and variance.
#[derive(Debug, Clone, PartialEq)]
pub enum Sampler {
    Bernoulli(f64),
    /// Uniform on `[lo, hi)`.
    Uniform { lo: f64, hi: f64 },
    Constant(f64),
    /// Outcome index `i` with probability `p_i`.
    Categorical(DiscreteDistribution),
}

impl Sampler {
    pub fn mean(&self) -> f64 {
        match self {
            Sampler::Bernoulli(p) => *p,
            Sampler::Uniform { lo, hi } => 0.5 * (lo + hi),
            Sampler::Constant(c) => *c,
            Sampler::Categorical(d) => d.index_mean(),
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            Sampler::Bernoulli(p) => p * (1.0 - p),
            Sampler::Uniform { lo, hi } => (hi - lo) * (hi - lo) / 12.0,
            Sampler::Constant(_) => 0.0,
            Sampler::Categorical(d) => {
                let m = d.index_mean();
                d.probs()
                    .iter()
                    .enumerate()
                    .map(|(i, p)| p * (i as f64 - m) * (i as f64 - m))
                    .sum()
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Sampler::Bernoulli(p) if !(0.0..=1.0).contains(p) => {
                Err(Error::validation(format!("Bernoulli p = {p} outside [0,1]")))
            }
            Sampler::Uniform { lo, hi } if !(lo.is_finite() && hi.is_finite() && lo <= hi) => {
                Err(Error::validation(format!("uniform range [{lo}, {hi}) is invalid")))
            }
            Sampler::Constant(c) if !c.is_finite() => Err(Error::validation("constant must be finite")),
            _ => Ok(()),
        }
    }

    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        match self {
            Sampler::Bernoulli(p) => {
                if rng.bernoulli(*p) {
                    1.0
                } else {
                    0.0
                }
            }
            Sampler::Uniform { lo, hi } => rng.uniform_range(*lo, *hi),
            Sampler::Constant(c) => *c,
            Sampler::Categorical(d) => rng.categorical(d.probs()) as f64,
        }
    }
}

/// `reps` draws of `(S_n − nμ) / (σ √n)` where `S_n` sums `n` samples.
pub fn clt_standardized_sums(sampler: &Sampler, n: usize, reps: usize, rng: &mut RngStream) -> Result<Vec<f64>> {
    sampler.validate()?;
    if n == 0 || reps == 0 {
        return Err(Error::validation("n and reps must be >= 1"));
    }
    let mu = sampler.mean();
    let var = sampler.variance();
    if !(var > 0.0) {
        return Err(Error::domain("sampler has zero variance; standardisation undefined"));
    }
    let scale = sqrt(var) * sqrt(n as f64);
    let shift = n as f64 * mu;
    Ok((0..reps)
        .map(|_| {
            let s: f64 = (0..n).map(|_| sampler.sample(rng)).sum();
            (s - shift) / scale
        })
        .collect())
}

pub fn standard_normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + erf(x / core::f64::consts::SQRT_2))
}

/// Kolmogorov–Smirnov distance between the empirical CDF of `samples` and
/// `cdf`. Ties are handled by evaluating both one-sided limits at every
/// distinct sample value.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::validation("KS statistic of an empty sample"));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::validation("sample contains NaN"));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < xs.len() {
        let mut j = i;
        while j < xs.len() && xs[j] == xs[i] {
            j += 1;
        }
        let f = cdf(xs[i]);
        d = d.max((f - i as f64 / n).abs()).max((j as f64 / n - f).abs());
        i = j;
    }
    Ok(d)
}

/// [`ks_statistic`] against the standard normal.
///
/// For lattice-valued sums (Bernoulli, integer samplers) the statistic
/// never drops below roughly half the largest lattice probability, however
/// many repetitions are drawn.
pub fn ks_statistic_normal(samples: &[f64]) -> Result<f64> {
    ks_statistic(samples, standard_normal_cdf)
}

/// Sample mean and unbiased sample variance.
pub fn mean_and_variance(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var)
}

/// PAC sample size `⌈(1/ε)(ln(|H|/δ) + k)⌉`, never below zero. Natural log.
pub fn pac_sample_bound(epsilon: f64, delta: f64, hypothesis_count: u64, k: f64) -> Result<u64> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::validation(format!("epsilon = {epsilon} outside (0, 1]")));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::validation(format!("delta = {delta} outside (0, 1]")));
    }
    if hypothesis_count == 0 {
        return Err(Error::validation("hypothesis count must be >= 1"));
    }
    if !k.is_finite() {
        return Err(Error::validation("k must be finite"));
    }
    let m = (ln(hypothesis_count as f64 / delta) + k) / epsilon;
    Ok(ceil(m).max(0.0) as u64)
}

/// `max(C/C*, C*/C)`.
pub fn approximation_ratio(cost: f64, optimal_cost: f64) -> Result<f64> {
    if !(cost > 0.0 && optimal_cost > 0.0) || !cost.is_finite() || !optimal_cost.is_finite() {
        return Err(Error::validation(format!(
            "costs must be positive and finite, got {cost} and {optimal_cost}"
        )));
    }
    Ok((cost / optimal_cost).max(optimal_cost / cost))
}
