//! Energy-based learning over a finite label set: inference, the Gibbs
//! posterior and the perceptron, hinge and negative-log-likelihood losses.

use alloc::format;
use alloc::vec::Vec;

use crate::math::{exp, ln, log_sum_exp};
use crate::{DiscreteDistribution, Error, Result};

/// Energies `E(y, X)` of every label `y` for one fixed input `X`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyTable(Vec<f64>);

impl EnergyTable {
    pub fn new(energies: Vec<f64>) -> Result<Self> {
        if energies.is_empty() {
            return Err(Error::validation("energy table is empty"));
        }
        if let Some(e) = energies.iter().find(|e| !e.is_finite()) {
            return Err(Error::validation(format!("energy {e} is not finite")));
        }
        Ok(EnergyTable(energies))
    }

    pub fn energies(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn check_label(&self, label: usize) -> Result<()> {
        if label >= self.0.len() {
            return Err(Error::validation(format!(
                "label {label} outside 0..{}",
                self.0.len()
            )));
        }
        Ok(())
    }
}

/// `argmin_y E(y, X)`; the lowest index wins ties.
pub fn ebl_infer(energies: &EnergyTable) -> usize {
    let e = energies.energies();
    let mut best = 0;
    for (i, &v) in e.iter().enumerate() {
        if v < e[best] {
            best = i;
        }
    }
    best
}

/// Gibbs posterior with its normaliser.
#[derive(Debug, Clone, PartialEq)]
pub struct GibbsPosterior {
    pub distribution: DiscreteDistribution,
    /// `ln Z(X)`, finite even when `Z` itself would overflow.
    pub log_partition: f64,
}

impl GibbsPosterior {
    pub fn partition(&self) -> f64 {
        exp(self.log_partition)
    }
}

/// `P(y|X) = e^{−βE(y,X)} / Z(X)` computed with a max shift.
pub fn gibbs_posterior(energies: &EnergyTable, beta: f64) -> Result<GibbsPosterior> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::validation(format!("beta = {beta} must be finite and >= 0")));
    }
    let logits: Vec<f64> = energies.energies().iter().map(|e| -beta * e).collect();
    let log_partition = log_sum_exp(&logits);
    let weights: Vec<f64> = logits.iter().map(|l| exp(l - log_partition)).collect();
    Ok(GibbsPosterior {
        distribution: DiscreteDistribution::from_weights(&weights)?,
        log_partition,
    })
}

/// `E(y_correct, X) − min_y E(y, X)`.
pub fn loss_perceptron(energies: &EnergyTable, correct: usize) -> Result<f64> {
    energies.check_label(correct)?;
    Ok(energies.energies()[correct] - energies.min())
}

/// `max(0, m + E_correct − E_incorrect)`.
pub fn loss_hinge(e_correct: f64, e_incorrect: f64, margin: f64) -> Result<f64> {
    if !(margin >= 0.0) || !margin.is_finite() {
        return Err(Error::validation(format!("margin {margin} must be >= 0")));
    }
    if !e_correct.is_finite() || !e_incorrect.is_finite() {
        return Err(Error::validation("energies must be finite"));
    }
    Ok((margin + e_correct - e_incorrect).max(0.0))
}

/// `E(y_correct, X) + (1/β) ln Σ_y e^{−βE(y,X)}`, log-sum-exp stabilised.
pub fn loss_nll(energies: &EnergyTable, correct: usize, beta: f64) -> Result<f64> {
    energies.check_label(correct)?;
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::validation(format!("beta = {beta} must be > 0")));
    }
    let logits: Vec<f64> = energies.energies().iter().map(|e| -beta * e).collect();
    let loss = energies.energies()[correct] + log_sum_exp(&logits) / beta;
    // mathematically >= 0; clamp the rounding residue
    Ok(loss.max(0.0))
}

/// `−(1/β) ln P(y_correct | X)`, the posterior form of [`loss_nll`].
pub fn loss_nll_from_posterior(posterior: &GibbsPosterior, correct: usize, beta: f64) -> Result<f64> {
    let p = posterior
        .distribution
        .probs()
        .get(correct)
        .copied()
        .ok_or_else(|| Error::validation(format!("label {correct} out of range")))?;
    if !(beta > 0.0) {
        return Err(Error::validation(format!("beta = {beta} must be > 0")));
    }
    Ok(-ln(p) / beta)
}
