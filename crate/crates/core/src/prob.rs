//! Finite probability distributions.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::{Error, Result, SUM_TOLERANCE};

/// A probability vector over a finite outcome set.
///
/// Entries are non-negative and sum to one within [`SUM_TOLERANCE`].
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    probs: Vec<f64>,
    labels: Option<Vec<String>>,
}

fn check_probs(probs: &[f64]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::validation("distribution has no outcomes"));
    }
    for (i, &p) in probs.iter().enumerate() {
        if !p.is_finite() || p < 0.0 {
            return Err(Error::validation(format!("entry {i} is {p}, must be finite and >= 0")));
        }
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > SUM_TOLERANCE {
        return Err(Error::validation(format!("entries sum to {sum}, expected 1")));
    }
    Ok(())
}

impl DiscreteDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        check_probs(&probs)?;
        Ok(DiscreteDistribution {
            probs,
            labels: None,
        })
    }

    pub fn with_labels(probs: Vec<f64>, labels: Vec<String>) -> Result<Self> {
        if labels.len() != probs.len() {
            return Err(Error::validation(format!(
                "{} labels for {} outcomes",
                labels.len(),
                probs.len()
            )));
        }
        let mut d = Self::new(probs)?;
        d.labels = Some(labels);
        Ok(d)
    }

    /// Normalises non-negative weights into a distribution.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::validation("weights must be finite and >= 0"));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::validation("weights sum to zero"));
        }
        Self::new(weights.iter().map(|w| w / total).collect())
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::validation("uniform over zero outcomes"));
        }
        Ok(DiscreteDistribution {
            probs: alloc::vec![1.0 / n as f64; n],
            labels: None,
        })
    }

    pub fn point_mass(n: usize, at: usize) -> Result<Self> {
        if at >= n {
            return Err(Error::validation(format!("point mass at {at} outside 0..{n}")));
        }
        let mut probs = alloc::vec![0.0; n];
        probs[at] = 1.0;
        Ok(DiscreteDistribution {
            probs,
            labels: None,
        })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn into_probs(self) -> Vec<f64> {
        self.probs
    }

    /// Mean of the outcome index, treating outcome `i` as the integer `i`.
    pub fn index_mean(&self) -> f64 {
        self.probs.iter().enumerate().map(|(i, p)| i as f64 * p).sum()
    }

    /// Index of the largest probability; lowest index wins ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = i;
            }
        }
        best
    }

    /// Total-variation distance `½ Σ |p_i − q_i|`.
    pub fn total_variation(&self, other: &DiscreteDistribution) -> Result<f64> {
        if self.len() != other.len() {
            return Err(Error::validation("total variation between different supports"));
        }
        Ok(0.5
            * self
                .probs
                .iter()
                .zip(&other.probs)
                .map(|(p, q)| (p - q).abs())
                .sum::<f64>())
    }
}

/// A joint probability table over pairs of outcomes, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    rows: usize,
    cols: usize,
    table: Vec<f64>,
}

impl JointDistribution {
    pub fn new(rows: usize, cols: usize, table: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::validation("joint table has an empty axis"));
        }
        if table.len() != rows * cols {
            return Err(Error::validation(format!(
                "joint table has {} entries, expected {rows}x{cols}",
                table.len()
            )));
        }
        check_probs(&table)?;
        Ok(JointDistribution { rows, cols, table })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::validation("joint table rows have unequal lengths"));
        }
        Self::new(n, m, rows.iter().flatten().copied().collect())
    }

    /// Joint of independent marginals.
    pub fn product(x: &DiscreteDistribution, y: &DiscreteDistribution) -> Self {
        let mut table = Vec::with_capacity(x.len() * y.len());
        for &px in x.probs() {
            for &py in y.probs() {
                table.push(px * py);
            }
        }
        JointDistribution {
            rows: x.len(),
            cols: y.len(),
            table,
        }
    }

    /// Joint concentrated on the diagonal, i.e. `Y = X` with `X ~ p`.
    pub fn diagonal(p: &DiscreteDistribution) -> Self {
        let n = p.len();
        let mut table = alloc::vec![0.0; n * n];
        for (i, &pi) in p.probs().iter().enumerate() {
            table[i * n + i] = pi;
        }
        JointDistribution {
            rows: n,
            cols: n,
            table,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.table[r * self.cols + c]
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    fn renormalized(v: Vec<f64>) -> DiscreteDistribution {
        // marginals of a valid table sum to 1 up to rounding; absorb it
        let s: f64 = v.iter().sum();
        DiscreteDistribution {
            probs: v.into_iter().map(|x| x / s).collect(),
            labels: None,
        }
    }

    pub fn row_marginal(&self) -> DiscreteDistribution {
        let v = self
            .table
            .chunks_exact(self.cols)
            .map(|row| row.iter().sum())
            .collect();
        Self::renormalized(v)
    }

    pub fn col_marginal(&self) -> DiscreteDistribution {
        let mut v = alloc::vec![0.0; self.cols];
        for row in self.table.chunks_exact(self.cols) {
            for (acc, &p) in v.iter_mut().zip(row) {
                *acc += p;
            }
        }
        Self::renormalized(v)
    }

    /// The table flattened into a distribution over `rows * cols` outcomes.
    pub fn flattened(&self) -> DiscreteDistribution {
        DiscreteDistribution {
            probs: self.table.clone(),
            labels: None,
        }
    }

    pub fn transposed(&self) -> JointDistribution {
        let mut table = alloc::vec![0.0; self.table.len()];
        for r in 0..self.rows {
            for c in 0..self.cols {
                table[c * self.rows + r] = self.get(r, c);
            }
        }
        JointDistribution {
            rows: self.cols,
            cols: self.rows,
            table,
        }
    }
}

/// A sample value paired with its importance ratio `p(x)/q(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedSample {
    pub value: f64,
    pub weight: f64,
}

impl WeightedSample {
    /// Builds the sample from target and proposal densities at `value`.
    pub fn from_densities(value: f64, p: f64, q: f64) -> Result<Self> {
        if !(q > 0.0) || !q.is_finite() {
            return Err(Error::domain(format!("proposal density {q} must be > 0")));
        }
        if !(p >= 0.0) || !p.is_finite() {
            return Err(Error::validation(format!("target density {p} must be >= 0")));
        }
        Ok(WeightedSample {
            value,
            weight: p / q,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn rejects_negative_and_bad_sum() {
        assert!(matches!(
            DiscreteDistribution::new(vec![0.5, -0.1, 0.6]),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            DiscreteDistribution::new(vec![0.5, 0.4]),
            Err(Error::Validation(_))
        ));
        assert!(DiscreteDistribution::new(vec![0.5, 0.5 + 1e-12]).is_ok());
    }

    #[test]
    fn marginals_of_joint() {
        let j = JointDistribution::from_rows(&[vec![0.1, 0.2], vec![0.3, 0.4]]).unwrap();
        let r = j.row_marginal();
        let c = j.col_marginal();
        assert!((r.probs()[0] - 0.3).abs() < 1e-15);
        assert!((c.probs()[1] - 0.6).abs() < 1e-15);
        assert_eq!(j.transposed().get(1, 0), 0.2);
    }

    #[test]
    fn weighted_sample_needs_positive_proposal() {
        assert!(WeightedSample::from_densities(1.0, 0.5, 0.0).is_err());
        let s = WeightedSample::from_densities(1.0, 0.8, 0.5).unwrap();
        assert!((s.weight - 1.6).abs() < 1e-15);
    }
}
