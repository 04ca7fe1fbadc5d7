//! Hypothesis boosting by reweighting: three weak hypotheses trained on
//! `D`, a balanced `D₂` and the disagreement set `D₃`, combined by majority.

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;

use crate::{DiscreteDistribution, Error, Result, RngStream};

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedDataset {
    items: Vec<(f64, u8)>,
    weights: DiscreteDistribution,
}

impl WeightedDataset {
    pub fn new(items: Vec<(f64, u8)>, weights: DiscreteDistribution) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::validation("dataset has no items"));
        }
        if items.len() != weights.len() {
            return Err(Error::validation(format!(
                "{} items but {} weights",
                items.len(),
                weights.len()
            )));
        }
        if let Some((i, (x, y))) = items.iter().enumerate().find(|(_, (x, y))| !x.is_finite() || *y > 1) {
            return Err(Error::validation(format!("item {i} = ({x}, {y}) must have finite x and y in {{0, 1}}")));
        }
        Ok(WeightedDataset { items, weights })
    }

    pub fn uniform(items: Vec<(f64, u8)>) -> Result<Self> {
        let w = DiscreteDistribution::uniform(items.len().max(1))?;
        Self::new(items, w)
    }

    pub fn items(&self) -> &[(f64, u8)] {
        &self.items
    }

    pub fn weights(&self) -> &[f64] {
        self.weights.probs()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    fn with_weights(&self, w: &[f64]) -> Result<Self> {
        Ok(WeightedDataset {
            items: self.items.clone(),
            weights: DiscreteDistribution::from_weights(w)?,
        })
    }
}

/// `n` items with `x` uniform on `[0, 1)` labelled by `1[x ≥ threshold]`.
pub fn threshold_dataset(n: usize, threshold: f64, rng: &mut RngStream) -> Result<WeightedDataset> {
    let items = (0..n)
        .map(|_| {
            let x = rng.uniform();
            (x, (x >= threshold) as u8)
        })
        .collect();
    WeightedDataset::uniform(items)
}

pub trait Hypothesis {
    fn predict(&self, x: f64) -> u8;
}

impl<F: Fn(f64) -> u8> Hypothesis for F {
    fn predict(&self, x: f64) -> u8 {
        self(x)
    }
}

impl Hypothesis for Box<dyn Hypothesis> {
    fn predict(&self, x: f64) -> u8 {
        (**self).predict(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold(pub f64);

impl Hypothesis for Threshold {
    fn predict(&self, x: f64) -> u8 {
        (x >= self.0) as u8
    }
}

pub trait WeakLearner {
    /// The advantage `γ` the learner promises over chance.
    fn advantage(&self) -> f64;
    fn train(&self, dataset: &WeightedDataset, rng: &mut RngStream) -> Result<Box<dyn Hypothesis>>;
}

/// `Σ_i w_i 1[h(x_i) ≠ y_i]`
pub fn empirical_risk(h: &dyn Hypothesis, dataset: &WeightedDataset) -> f64 {
    dataset
        .items
        .iter()
        .zip(dataset.weights())
        .filter(|((x, y), _)| h.predict(*x) != *y)
        .map(|(_, w)| w)
        .sum::<f64>()
        .min(1.0)
}

/// Half the mass on items `h1` gets right and half on those it gets wrong,
/// each side rescaled proportionally.
pub fn reweight_d2(dataset: &WeightedDataset, h1: &dyn Hypothesis) -> Result<WeightedDataset> {
    let wrong: Vec<bool> = dataset.items.iter().map(|(x, y)| h1.predict(*x) != *y).collect();
    let w = dataset.weights();
    let mass_wrong: f64 = w.iter().zip(&wrong).filter(|(_, &m)| m).map(|(p, _)| p).sum();
    let mass_right: f64 = w.iter().zip(&wrong).filter(|(_, &m)| !m).map(|(p, _)| p).sum();
    if mass_wrong <= 0.0 {
        return Err(Error::DegenerateSplit("h1 makes no weighted mistakes".into()));
    }
    if mass_right <= 0.0 {
        return Err(Error::DegenerateSplit("h1 is wrong on every weighted item".into()));
    }
    let new: Vec<f64> = w
        .iter()
        .zip(&wrong)
        .map(|(p, &m)| if m { 0.5 * p / mass_wrong } else { 0.5 * p / mass_right })
        .collect();
    dataset.with_weights(&new)
}

/// Original weights restricted to the items where `h1` and `h2` disagree.
pub fn reweight_d3(dataset: &WeightedDataset, h1: &dyn Hypothesis, h2: &dyn Hypothesis) -> Result<WeightedDataset> {
    let new: Vec<f64> = dataset
        .items
        .iter()
        .zip(dataset.weights())
        .map(|((x, _), &p)| if h1.predict(*x) != h2.predict(*x) { p } else { 0.0 })
        .collect();
    if new.iter().sum::<f64>() <= 0.0 {
        return Err(Error::DegenerateSplit("h1 and h2 agree on every weighted item".into()));
    }
    dataset.with_weights(&new)
}

pub struct MajorityVote {
    voters: [Box<dyn Hypothesis>; 3],
}

impl Hypothesis for MajorityVote {
    fn predict(&self, x: f64) -> u8 {
        let ones: u8 = self.voters.iter().map(|h| h.predict(x)).sum();
        (ones >= 2) as u8
    }
}

pub fn majority_vote(h1: Box<dyn Hypothesis>, h2: Box<dyn Hypothesis>, h3: Box<dyn Hypothesis>) -> MajorityVote {
    MajorityVote { voters: [h1, h2, h3] }
}

/// `3(1/2 − γ)² − 2(1/2 − γ)³`
pub fn boost_error_bound(gamma: f64) -> Result<f64> {
    if !(0.0..=0.5).contains(&gamma) {
        return Err(Error::validation(format!("gamma = {gamma} outside [0, 1/2]")));
    }
    Ok(error_map(0.5 - gamma))
}

/// `g(ε) = 3ε² − 2ε³`, the majority-of-three error map.
fn error_map(eps: f64) -> f64 {
    eps * eps * (3.0 - 2.0 * eps)
}

/// Weighted errors of the three hypotheses, each under its own distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct Boost3Diagnostics {
    pub h1_err: f64,
    /// `None` when `h1` was already perfect and no further rounds ran.
    pub h2_err: Option<f64>,
    pub h3_err: Option<f64>,
    /// Error of the combined hypothesis under the input distribution.
    pub final_err: f64,
    pub bound: f64,
}

const CONTRACT_SLACK: f64 = 1e-12;

fn check_contract(round: &str, err: f64, gamma: f64) -> Result<()> {
    if err > 0.5 - gamma + CONTRACT_SLACK {
        return Err(Error::Convergence(format!(
            "weak learner broke its contract on {round}: error {err} > 1/2 - {gamma}"
        )));
    }
    Ok(())
}

pub fn boost3(weak: &dyn WeakLearner, dataset: &WeightedDataset, rng: &mut RngStream) -> Result<(Box<dyn Hypothesis>, Boost3Diagnostics)> {
    let gamma = weak.advantage();
    let bound = boost_error_bound(gamma)?;
    let h1 = weak.train(dataset, rng)?;
    let h1_err = empirical_risk(&h1, dataset);
    check_contract("D1", h1_err, gamma)?;
    if h1_err == 0.0 {
        let diag = Boost3Diagnostics {
            h1_err,
            h2_err: None,
            h3_err: None,
            final_err: 0.0,
            bound,
        };
        return Ok((h1, diag));
    }
    let d2 = reweight_d2(dataset, &h1).map_err(|e| e.context("building D2"))?;
    let h2 = weak.train(&d2, rng)?;
    let h2_err = empirical_risk(&h2, &d2);
    check_contract("D2", h2_err, gamma)?;
    let d3 = reweight_d3(dataset, &h1, &h2).map_err(|e| e.context("building D3"))?;
    let h3 = weak.train(&d3, rng)?;
    let h3_err = empirical_risk(&h3, &d3);
    check_contract("D3", h3_err, gamma)?;
    let vote: Box<dyn Hypothesis> = Box::new(majority_vote(h1, h2, h3));
    let final_err = empirical_risk(&vote, dataset);
    let diag = Boost3Diagnostics {
        h1_err,
        h2_err: Some(h2_err),
        h3_err: Some(h3_err),
        final_err,
        bound,
    };
    Ok((vote, diag))
}

const DEPTH_TOLERANCE: f64 = 1e-12;

/// Smallest `d` with `g⁽ᵈ⁾(1/2 − γ) ≤ ε`.
pub fn boost_depth(gamma: f64, target_epsilon: f64) -> Result<usize> {
    boost_error_bound(gamma)?;
    if !(target_epsilon > 0.0 && target_epsilon < 0.5) {
        return Err(Error::validation(format!("target epsilon {target_epsilon} outside (0, 1/2)")));
    }
    let mut eps = 0.5 - gamma;
    let mut depth = 0;
    while eps > target_epsilon + DEPTH_TOLERANCE {
        let next = error_map(eps);
        if next >= eps {
            return Err(Error::Convergence(format!("error bound {eps} does not improve (gamma = {gamma})")));
        }
        eps = next;
        depth += 1;
    }
    Ok(depth)
}

/// A boosted learner viewed as a weak learner with the improved advantage.
struct Boosted<'a> {
    inner: &'a dyn WeakLearner,
}

impl WeakLearner for Boosted<'_> {
    fn advantage(&self) -> f64 {
        0.5 - error_map(0.5 - self.inner.advantage())
    }

    fn train(&self, dataset: &WeightedDataset, rng: &mut RngStream) -> Result<Box<dyn Hypothesis>> {
        Ok(boost3(self.inner, dataset, rng)?.0)
    }
}

/// Recursive boosting to the depth [`boost_depth`] prescribes. Returns the
/// hypothesis and the depth used.
pub fn boost_recursive(weak: &dyn WeakLearner, dataset: &WeightedDataset, target_epsilon: f64, rng: &mut RngStream) -> Result<(Box<dyn Hypothesis>, usize)> {
    let depth = boost_depth(weak.advantage(), target_epsilon)?;
    let h = train_at_depth(weak, depth, dataset, rng)?;
    Ok((h, depth))
}

fn train_at_depth(weak: &dyn WeakLearner, depth: usize, dataset: &WeightedDataset, rng: &mut RngStream) -> Result<Box<dyn Hypothesis>> {
    if depth == 0 {
        return weak.train(dataset, rng);
    }
    let level = Leveled { weak, depth: depth - 1 };
    Boosted { inner: &level }.train(dataset, rng)
}

/// `weak` boosted `depth` times.
struct Leveled<'a> {
    weak: &'a dyn WeakLearner,
    depth: usize,
}

impl WeakLearner for Leveled<'_> {
    fn advantage(&self) -> f64 {
        let mut eps = 0.5 - self.weak.advantage();
        for _ in 0..self.depth {
            eps = error_map(eps);
        }
        0.5 - eps
    }

    fn train(&self, dataset: &WeightedDataset, rng: &mut RngStream) -> Result<Box<dyn Hypothesis>> {
        train_at_depth(self.weak, self.depth, dataset, rng)
    }
}

/// The true threshold concept with each item's label flipped independently
/// with probability `1/2 − γ`. Draws are repeated until the weighted error
/// meets the `1/2 − γ` contract; the accepted flips are then frozen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoisyThresholdLearner {
    pub threshold: f64,
    pub gamma: f64,
    pub max_attempts: usize,
}

impl NoisyThresholdLearner {
    pub fn new(threshold: f64, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma <= 0.5) {
            return Err(Error::validation(format!("gamma = {gamma} outside (0, 1/2]")));
        }
        Ok(NoisyThresholdLearner {
            threshold,
            gamma,
            max_attempts: 10_000,
        })
    }
}

/// Threshold hypothesis with a frozen set of flipped inputs.
pub struct FlippedThreshold {
    threshold: f64,
    flipped: BTreeSet<u64>,
}

impl Hypothesis for FlippedThreshold {
    fn predict(&self, x: f64) -> u8 {
        let base = (x >= self.threshold) as u8;
        base ^ self.flipped.contains(&x.to_bits()) as u8
    }
}

impl WeakLearner for NoisyThresholdLearner {
    fn advantage(&self) -> f64 {
        self.gamma
    }

    fn train(&self, dataset: &WeightedDataset, rng: &mut RngStream) -> Result<Box<dyn Hypothesis>> {
        let p_flip = 0.5 - self.gamma;
        let concept = Threshold(self.threshold);
        for _ in 0..self.max_attempts {
            let flips: Vec<bool> = dataset.items.iter().map(|_| rng.bernoulli(p_flip)).collect();
            let err: f64 = dataset
                .items
                .iter()
                .zip(dataset.weights())
                .zip(&flips)
                .filter(|(((x, y), _), &f)| (concept.predict(*x) ^ f as u8) != *y)
                .map(|((_, w), _)| w)
                .sum();
            if err <= 0.5 - self.gamma {
                let flipped = dataset
                    .items
                    .iter()
                    .zip(&flips)
                    .filter(|(_, &f)| f)
                    .map(|((x, _), _)| x.to_bits())
                    .collect();
                return Ok(Box::new(FlippedThreshold {
                    threshold: self.threshold,
                    flipped,
                }));
            }
        }
        Err(Error::Convergence(format!(
            "no noise draw met the error contract in {} attempts",
            self.max_attempts
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(items: &[(f64, u8)], w: &[f64]) -> WeightedDataset {
        WeightedDataset::new(items.to_vec(), DiscreteDistribution::new(w.to_vec()).unwrap()).unwrap()
    }

    struct Perfect;
    impl WeakLearner for Perfect {
        fn advantage(&self) -> f64 {
            0.5
        }
        fn train(&self, _: &WeightedDataset, _: &mut RngStream) -> Result<Box<dyn Hypothesis>> {
            Ok(Box::new(Threshold(0.5)))
        }
    }

    #[test]
    fn risk_examples() {
        let d = ds(&[(0.1, 0), (0.2, 0), (0.7, 1), (0.9, 1)], &[0.25; 4]);
        assert_eq!(empirical_risk(&Threshold(0.5), &d), 0.0);
        assert_eq!(empirical_risk(&|_x: f64| 1u8, &d), 0.5);
        let d = ds(&[(0.1, 0), (0.7, 1), (0.9, 1)], &[0.3, 0.3, 0.4]);
        assert!((empirical_risk(&Threshold(0.05), &d) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn d2_examples() {
        let d = ds(&[(0.1, 0), (0.2, 0), (0.7, 1), (0.9, 1)], &[0.25; 4]);
        let balanced = reweight_d2(&d, &|_x: f64| 1u8).unwrap();
        assert_eq!(balanced.weights(), d.weights());
        let one_wrong = reweight_d2(&d, &Threshold(0.15)).unwrap();
        let w = one_wrong.weights();
        assert!((w[1] - 0.5).abs() < 1e-15);
        for i in [0, 2, 3] {
            assert!((w[i] - 1.0 / 6.0).abs() < 1e-15);
        }
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((empirical_risk(&Threshold(0.15), &one_wrong) - 0.5).abs() < 1e-12);
        assert!(matches!(reweight_d2(&d, &Threshold(0.5)), Err(Error::DegenerateSplit(_))));
        assert!(matches!(reweight_d2(&d, &|x: f64| (x < 0.5) as u8), Err(Error::DegenerateSplit(_))));
    }

    #[test]
    fn d3_examples() {
        let d = ds(&[(0.1, 0), (0.2, 0), (0.7, 1), (0.9, 1)], &[0.1, 0.2, 0.3, 0.4]);
        assert!(reweight_d3(&d, &Threshold(0.5), &Threshold(0.5)).is_err());
        let point = reweight_d3(&d, &Threshold(0.5), &Threshold(0.8)).unwrap();
        assert_eq!(point.weights(), &[0.0, 0.0, 1.0, 0.0]);
        let pair = reweight_d3(&d, &Threshold(0.5), &|x: f64| ((x >= 0.5) as u8) ^ ((x == 0.1 || x == 0.7) as u8)).unwrap();
        assert!((pair.weights()[0] - 0.25).abs() < 1e-15);
        assert!((pair.weights()[2] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn majority_examples() {
        let one = || -> Box<dyn Hypothesis> { Box::new(|_x: f64| 1u8) };
        let zero = || -> Box<dyn Hypothesis> { Box::new(|_x: f64| 0u8) };
        assert_eq!(majority_vote(one(), one(), one()).predict(0.3), 1);
        assert_eq!(majority_vote(one(), one(), zero()).predict(0.3), 1);
        assert_eq!(majority_vote(zero(), zero(), one()).predict(0.3), 0);
        let t = || -> Box<dyn Hypothesis> { Box::new(Threshold(0.4)) };
        let v = majority_vote(t(), t(), t());
        for x in [0.0, 0.39, 0.4, 0.9] {
            assert_eq!(v.predict(x), Threshold(0.4).predict(x));
        }
    }

    #[test]
    fn bound_values_and_shape() {
        assert!((boost_error_bound(0.0).unwrap() - 0.5).abs() < 1e-12);
        assert!((boost_error_bound(0.1).unwrap() - 0.352).abs() < 1e-12);
        assert!(boost_error_bound(0.5).unwrap().abs() < 1e-12);
        assert!(boost_error_bound(-0.01).is_err());
        assert!(boost_error_bound(0.51).is_err());
        let mut prev = boost_error_bound(0.0).unwrap();
        for k in 1..500 {
            let g = k as f64 * 1e-3;
            let b = boost_error_bound(g).unwrap();
            assert!(b < 0.5 - g);
            assert!(b < prev);
            prev = b;
        }
    }

    #[test]
    fn depth_by_direct_iteration() {
        let oracle = |gamma: f64, eps: f64| {
            let mut x = 0.5 - gamma;
            let mut d = 0;
            while x > eps + 1e-12 {
                x = 3.0 * x * x - 2.0 * x * x * x;
                d += 1;
            }
            d
        };
        assert_eq!(boost_depth(0.1, 0.352).unwrap(), 1);
        assert_eq!(boost_depth(0.1, 0.4).unwrap(), 0);
        assert_eq!(boost_depth(0.1, 0.45).unwrap(), 0);
        assert_eq!(boost_depth(0.1, 0.1).unwrap(), oracle(0.1, 0.1));
        assert_eq!(boost_depth(0.1, 0.1).unwrap(), 5);
        for (g, e) in [(0.05, 0.01), (0.2, 0.2), (0.3, 0.001)] {
            assert_eq!(boost_depth(g, e).unwrap(), oracle(g, e));
        }
        assert!(matches!(boost_depth(0.0, 0.1), Err(Error::Convergence(_))));
        assert!(boost_depth(0.1, 0.0).is_err());
    }

    #[test]
    fn perfect_learner_passes_through() {
        let d = ds(&[(0.1, 0), (0.2, 0), (0.7, 1), (0.9, 1)], &[0.25; 4]);
        let mut rng = RngStream::new(0, 0);
        let (h, diag) = boost3(&Perfect, &d, &mut rng).unwrap();
        assert_eq!(diag.final_err, 0.0);
        assert_eq!(diag.h2_err, None);
        assert_eq!(empirical_risk(&h, &d), 0.0);
    }

    #[test]
    fn synthetic_boost3_meets_bound() {
        let weak = NoisyThresholdLearner::new(0.5, 0.1).unwrap();
        let mut passes = 0;
        for seed in 0..20 {
            let mut rng = RngStream::new(seed, 0);
            let d = threshold_dataset(10_000, 0.5, &mut rng).unwrap();
            let (_, diag) = boost3(&weak, &d, &mut rng).unwrap();
            for e in [Some(diag.h1_err), diag.h2_err, diag.h3_err] {
                assert!(e.unwrap() <= 0.4 + 1e-12);
            }
            if diag.final_err <= diag.bound + 0.05 {
                passes += 1;
            }
        }
        assert!(passes >= 18);
    }

    #[test]
    fn learner_hypotheses_are_frozen() {
        let weak = NoisyThresholdLearner::new(0.3, 0.2).unwrap();
        let mut rng = RngStream::new(2, 0);
        let d = threshold_dataset(200, 0.3, &mut rng).unwrap();
        let h = weak.train(&d, &mut rng).unwrap();
        let first: Vec<u8> = d.items().iter().map(|(x, _)| h.predict(*x)).collect();
        let again: Vec<u8> = d.items().iter().map(|(x, _)| h.predict(*x)).collect();
        assert_eq!(first, again);
        assert!(empirical_risk(&h, &d) <= 0.3);
    }

    #[test]
    fn recursive_boosting_reaches_target() {
        let weak = NoisyThresholdLearner::new(0.5, 0.1).unwrap();
        let mut rng = RngStream::new(77, 0);
        let d = threshold_dataset(3_000, 0.5, &mut rng).unwrap();
        let (h, depth) = boost_recursive(&weak, &d, 0.1, &mut rng).unwrap();
        assert_eq!(depth, 5);
        assert!(empirical_risk(&h, &d) <= 0.1);
        let (h0, depth0) = boost_recursive(&weak, &d, 0.45, &mut rng).unwrap();
        assert_eq!(depth0, 0);
        assert!(empirical_risk(&h0, &d) <= 0.4);
    }
}
