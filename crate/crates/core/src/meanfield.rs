//! Mean-field variational inference over a small table of `ln p(h, x)`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::info::kl_divergence;
use crate::math::{exp, log_sum_exp};
use crate::{DiscreteDistribution, Error, Result};

pub const MAX_VARIABLES: usize = 3;
pub const MAX_VALUES: usize = 16;

/// `ln p(h, x)` for fixed `x` over up to three hidden variables, stored
/// row-major (the last variable varies fastest). Entries may be `−∞`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogTable {
    dims: Vec<usize>,
    values: Vec<f64>,
}

impl LogTable {
    pub fn new(dims: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::validation("every hidden variable needs at least one value"));
        }
        if dims.len() > MAX_VARIABLES {
            return Err(Error::Capacity {
                what: "mean-field variables",
                size: dims.len(),
                limit: MAX_VARIABLES,
            });
        }
        if let Some(&d) = dims.iter().find(|&&d| d > MAX_VALUES) {
            return Err(Error::Capacity {
                what: "mean-field variable values",
                size: d,
                limit: MAX_VALUES,
            });
        }
        let size: usize = dims.iter().product();
        if values.len() != size {
            return Err(Error::validation(format!("table has {} entries, expected {size}", values.len())));
        }
        if values.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
            return Err(Error::validation("log table entries must be finite or -inf"));
        }
        if values.iter().all(|v| *v == f64::NEG_INFINITY) {
            return Err(Error::validation("log table has no mass"));
        }
        Ok(LogTable { dims, values })
    }

    /// Log table of a probability table (zeros become `−∞`).
    pub fn from_probabilities(dims: Vec<usize>, probs: &[f64]) -> Result<Self> {
        let values = probs.iter().map(|&p| if p > 0.0 { crate::math::ln(p) } else { f64::NEG_INFINITY }).collect();
        Self::new(dims, values)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    fn unravel(&self, mut k: usize, out: &mut [usize]) {
        for (slot, &d) in out.iter_mut().zip(&self.dims).rev() {
            *slot = k % d;
            k /= d;
        }
    }

    /// The normalised posterior `p(h | x)` over the flattened table.
    pub fn posterior(&self) -> DiscreteDistribution {
        let z = log_sum_exp(&self.values);
        let p: Vec<f64> = self.values.iter().map(|v| exp(v - z)).collect();
        DiscreteDistribution::from_weights(&p).expect("table with mass normalises")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorizedPosterior {
    pub factors: Vec<DiscreteDistribution>,
}

impl FactorizedPosterior {
    pub fn new(factors: Vec<DiscreteDistribution>) -> Self {
        FactorizedPosterior { factors }
    }

    pub fn uniform(dims: &[usize]) -> Result<Self> {
        Ok(FactorizedPosterior {
            factors: dims.iter().map(|&d| DiscreteDistribution::uniform(d)).collect::<Result<_>>()?,
        })
    }

    /// `Π_i q_i(h_i)` over the flattened table.
    pub fn joint(&self) -> Vec<f64> {
        let mut out = vec![1.0];
        for f in &self.factors {
            out = out.iter().flat_map(|a| f.probs().iter().map(move |b| a * b)).collect();
        }
        out
    }

    fn check(&self, table: &LogTable) -> Result<()> {
        let dims: Vec<usize> = self.factors.iter().map(|f| f.len()).collect();
        if dims != table.dims {
            return Err(Error::validation(format!("factor sizes {dims:?} do not match table {:?}", table.dims)));
        }
        Ok(())
    }

    /// `KL(q ‖ p(h | x))`.
    pub fn kl_to(&self, table: &LogTable) -> Result<f64> {
        self.check(table)?;
        let q = DiscreteDistribution::from_weights(&self.joint())?;
        kl_divergence(&q, &table.posterior())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanFieldRun {
    pub posterior: FactorizedPosterior,
    /// KL before the first sweep, then after every sweep.
    pub kl_history: Vec<f64>,
}

/// Coordinate ascent `q_i(h_i) ∝ exp(E_{q_{−i}}[ln p(h, x)])`, cycling
/// through the variables once per sweep.
pub fn mean_field_update(posterior: &FactorizedPosterior, table: &LogTable, sweeps: usize) -> Result<MeanFieldRun> {
    posterior.check(table)?;
    let mut q = posterior.clone();
    let mut kl_history = vec![q.kl_to(table)?];
    let nvar = table.dims.len();
    let mut idx = vec![0usize; nvar];
    for _ in 0..sweeps {
        for i in 0..nvar {
            let mut expected = vec![0.0; table.dims[i]];
            // entries with zero weight under q_{-i} drop out, including -inf ones
            let mut reachable = vec![false; table.dims[i]];
            for (k, &lp) in table.values.iter().enumerate() {
                table.unravel(k, &mut idx);
                let w: f64 = (0..nvar).filter(|&j| j != i).map(|j| q.factors[j].probs()[idx[j]]).product();
                if w > 0.0 {
                    expected[idx[i]] += w * lp;
                    reachable[idx[i]] = true;
                }
            }
            for (e, r) in expected.iter_mut().zip(&reachable) {
                if !r || e.is_nan() {
                    *e = f64::NEG_INFINITY;
                }
            }
            let z = log_sum_exp(&expected);
            if !z.is_finite() {
                return Err(Error::Convergence(format!("mean-field factor {i} lost all mass")));
            }
            let p: Vec<f64> = expected.iter().map(|e| exp(e - z)).collect();
            q.factors[i] = DiscreteDistribution::from_weights(&p)?;
        }
        kl_history.push(q.kl_to(table)?);
    }
    Ok(MeanFieldRun { posterior: q, kl_history })
}
