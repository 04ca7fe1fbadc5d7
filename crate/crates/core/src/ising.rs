//! Ising model: energy, exact small-system thermodynamics and Metropolis
//! sampling with single-spin-flip proposals.
//!
//! The Hamiltonian is `E(s) = −Σ_{(i,j)} J_ij s_i s_j − Σ_i h_i s_i` where
//! every undirected edge appears once. A model written with a double sum
//! over ordered pairs is the same as this one with `J` doubled.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::math::{exp, ln, sqrt};
use crate::{DiscreteDistribution, Error, Result, RngStream, MAX_ENUMERATION_SITES};

/// Spin assignment with entries in `{−1, +1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpinConfig(Vec<i8>);

impl SpinConfig {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if let Some(i) = spins.iter().position(|&s| s != 1 && s != -1) {
            return Err(Error::validation(format!("spin {i} is {}, expected ±1", spins[i])));
        }
        Ok(SpinConfig(spins))
    }

    pub fn all_up(n: usize) -> Self {
        SpinConfig(vec![1; n])
    }

    pub fn random(n: usize, rng: &mut RngStream) -> Self {
        SpinConfig((0..n).map(|_| if rng.bernoulli(0.5) { 1 } else { -1 }).collect())
    }

    /// Configuration number `index` of the `2^n` enumeration: bit `i` set
    /// means spin `i` is `−1`.
    pub fn from_index(index: usize, n: usize) -> Self {
        SpinConfig((0..n).map(|i| if index >> i & 1 == 1 { -1 } else { 1 }).collect())
    }

    /// Inverse of [`SpinConfig::from_index`].
    pub fn index(&self) -> usize {
        self.0
            .iter()
            .enumerate()
            .fold(0, |acc, (i, &s)| if s < 0 { acc | 1 << i } else { acc })
    }

    pub fn spins(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn flip(&mut self, site: usize) {
        self.0[site] = -self.0[site];
    }

    /// Mean spin `(1/N) Σ s_i`.
    pub fn magnetization(&self) -> f64 {
        if self.0.is_empty() {
            return 0.0;
        }
        self.0.iter().map(|&s| s as f64).sum::<f64>() / self.0.len() as f64
    }
}

/// Couplings `J_ij` on undirected edges and local fields `h_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingGraph {
    n_sites: usize,
    edges: Vec<(usize, usize, f64)>,
    fields: Vec<f64>,
    neighbors: Vec<Vec<(usize, f64)>>,
}

impl CouplingGraph {
    /// Edges may be given in either orientation; they are stored with `i < j`.
    pub fn new(n_sites: usize, edges: Vec<(usize, usize, f64)>, fields: Vec<f64>) -> Result<Self> {
        if fields.len() != n_sites {
            return Err(Error::validation(format!(
                "{} fields for {n_sites} sites",
                fields.len()
            )));
        }
        if let Some(h) = fields.iter().find(|h| !h.is_finite()) {
            return Err(Error::validation(format!("field {h} is not finite")));
        }
        let mut normalized = Vec::with_capacity(edges.len());
        let mut neighbors = vec![Vec::new(); n_sites];
        for (i, j, coupling) in edges {
            if i == j {
                return Err(Error::validation(format!("self-loop at site {i}")));
            }
            if i >= n_sites || j >= n_sites {
                return Err(Error::validation(format!("edge ({i}, {j}) outside 0..{n_sites}")));
            }
            if !coupling.is_finite() {
                return Err(Error::validation(format!("coupling on ({i}, {j}) is not finite")));
            }
            let (a, b) = if i < j { (i, j) } else { (j, i) };
            if normalized.iter().any(|&(x, y, _)| x == a && y == b) {
                return Err(Error::validation(format!("duplicate edge ({a}, {b})")));
            }
            normalized.push((a, b, coupling));
            neighbors[a].push((b, coupling));
            neighbors[b].push((a, coupling));
        }
        Ok(CouplingGraph {
            n_sites,
            edges: normalized,
            fields,
            neighbors,
        })
    }

    /// Open chain `0 − 1 − … − (n−1)` with uniform coupling and field.
    pub fn chain(n: usize, coupling: f64, field: f64) -> Result<Self> {
        let edges = (1..n).map(|i| (i - 1, i, coupling)).collect();
        Self::new(n, edges, vec![field; n])
    }

    /// Complete graph on `n` sites with uniform coupling and field.
    pub fn complete(n: usize, coupling: f64, field: f64) -> Result<Self> {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                edges.push((i, j, coupling));
            }
        }
        Self::new(n, edges, vec![field; n])
    }

    /// Periodic `side × side` square lattice. Needs `side >= 3` so that no
    /// edge is generated twice.
    pub fn torus(side: usize, coupling: f64, field: f64) -> Result<Self> {
        if side < 3 {
            return Err(Error::validation("torus side must be >= 3"));
        }
        let id = |r: usize, c: usize| r * side + c;
        let mut edges = Vec::new();
        for r in 0..side {
            for c in 0..side {
                edges.push((id(r, c), id(r, (c + 1) % side), coupling));
                edges.push((id(r, c), id((r + 1) % side, c), coupling));
            }
        }
        Self::new(side * side, edges, vec![field; side * side])
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn fields(&self) -> &[f64] {
        &self.fields
    }

    pub fn neighbors(&self, site: usize) -> &[(usize, f64)] {
        &self.neighbors[site]
    }

    fn check(&self, config: &SpinConfig) -> Result<()> {
        if config.len() != self.n_sites {
            return Err(Error::validation(format!(
                "configuration has {} spins, graph has {} sites",
                config.len(),
                self.n_sites
            )));
        }
        Ok(())
    }

    /// `E(s') − E(s)` for flipping `site`: `2 s_i (Σ_j J_ij s_j + h_i)`.
    pub fn flip_delta(&self, config: &SpinConfig, site: usize) -> f64 {
        let s = config.0[site] as f64;
        let local: f64 = self.neighbors[site]
            .iter()
            .map(|&(j, coupling)| coupling * config.0[j] as f64)
            .sum();
        2.0 * s * (local + self.fields[site])
    }

    fn energy_unchecked(&self, config: &SpinConfig) -> f64 {
        let s = &config.0;
        let pair: f64 = self
            .edges
            .iter()
            .map(|&(i, j, coupling)| coupling * (s[i] * s[j]) as f64)
            .sum();
        let field: f64 = self.fields.iter().zip(s).map(|(h, &si)| h * si as f64).sum();
        -pair - field
    }
}

/// Inverse temperature `β = 1/(k_B T)`; finite and non-negative.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Beta(f64);

impl Beta {
    pub fn new(value: f64) -> Result<Self> {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::validation(format!("beta = {value} must be finite and >= 0")));
        }
        Ok(Beta(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// One row of a sampling trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub step: u64,
    pub energy: f64,
    pub accepted: bool,
    pub magnetization: f64,
}

/// Step-indexed record of a Metropolis run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunTrace {
    pub rows: Vec<TraceRow>,
}

impl RunTrace {
    pub fn acceptance_rate(&self) -> f64 {
        if self.rows.is_empty() {
            return 0.0;
        }
        self.rows.iter().filter(|r| r.accepted).count() as f64 / self.rows.len() as f64
    }
}

pub fn ising_energy(config: &SpinConfig, graph: &CouplingGraph) -> Result<f64> {
    graph.check(config)?;
    Ok(graph.energy_unchecked(config))
}

/// Exact Gibbs distribution over all `2^N` configurations, indexed as in
/// [`SpinConfig::from_index`]. Returns `(Z, distribution)`.
pub fn partition_exact(graph: &CouplingGraph, beta: Beta) -> Result<(f64, DiscreteDistribution)> {
    let n = graph.n_sites;
    if n > MAX_ENUMERATION_SITES {
        return Err(Error::Capacity {
            what: "Ising graph",
            size: n,
            limit: MAX_ENUMERATION_SITES,
        });
    }
    let energies: Vec<f64> = (0..1usize << n)
        .map(|k| graph.energy_unchecked(&SpinConfig::from_index(k, n)))
        .collect();
    let b = beta.value();
    // shift by the ground-state energy so the largest weight is exactly 1
    let e_min = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = energies.iter().map(|e| exp(-b * (e - e_min))).collect();
    let shifted_z: f64 = weights.iter().sum();
    let z = shifted_z * exp(-b * e_min);
    let probs = weights.into_iter().map(|w| w / shifted_z).collect();
    Ok((z, DiscreteDistribution::new(probs)?))
}

/// `S = k_B ln Ω`.
pub fn boltzmann_entropy(multiplicity: u64, k_b: f64) -> Result<f64> {
    if multiplicity < 1 {
        return Err(Error::validation("multiplicity must be >= 1"));
    }
    if !(k_b > 0.0) || !k_b.is_finite() {
        return Err(Error::validation(format!("k_B = {k_b} must be > 0")));
    }
    Ok(k_b * ln(multiplicity as f64))
}

/// `S = k_B ln Ω` for a multiplicity given through its natural log, for
/// counts that do not fit in an integer (for instance `Ω = e`).
pub fn boltzmann_entropy_from_ln(ln_multiplicity: f64, k_b: f64) -> Result<f64> {
    if !(ln_multiplicity >= 0.0) || !ln_multiplicity.is_finite() {
        return Err(Error::validation("ln multiplicity must be finite and >= 0"));
    }
    if !(k_b > 0.0) || !k_b.is_finite() {
        return Err(Error::validation(format!("k_B = {k_b} must be > 0")));
    }
    Ok(k_b * ln_multiplicity)
}

/// Metropolis acceptance rule shared with the annealer: downhill and flat
/// moves always pass, uphill moves pass when `r < exp(−β ΔH)` with `r`
/// uniform on `[0, 1)`. Draws `r` only for uphill moves.
pub fn metropolis_accept(delta: f64, beta: f64, rng: &mut RngStream) -> bool {
    if delta <= 0.0 {
        return true;
    }
    rng.uniform() < exp(-beta * delta)
}

/// Outcome of one Metropolis update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub site: usize,
    pub accepted: bool,
    pub delta: f64,
}

/// Proposes flipping one uniformly chosen spin and applies the Metropolis
/// rule, updating `state` in place when accepted.
pub fn metropolis_step(
    state: &mut SpinConfig,
    graph: &CouplingGraph,
    beta: Beta,
    rng: &mut RngStream,
) -> Result<StepOutcome> {
    graph.check(state)?;
    if state.is_empty() {
        return Err(Error::validation("cannot step an empty configuration"));
    }
    Ok(step_unchecked(state, graph, beta.value(), rng))
}

fn step_unchecked(state: &mut SpinConfig, graph: &CouplingGraph, beta: f64, rng: &mut RngStream) -> StepOutcome {
    let site = rng.below(state.len());
    let delta = graph.flip_delta(state, site);
    let accepted = metropolis_accept(delta, beta, rng);
    if accepted {
        state.flip(site);
    }
    StepOutcome {
        site,
        accepted,
        delta,
    }
}

/// Analytic single-flip Metropolis kernel `P(a → b)`.
///
/// For configurations differing in exactly one spin this is
/// `(1/N) min(1, e^{−βΔH})`; the self-transition takes the remaining mass,
/// and every other pair has probability zero.
pub fn metropolis_transition_probability(
    from: &SpinConfig,
    to: &SpinConfig,
    graph: &CouplingGraph,
    beta: Beta,
) -> Result<f64> {
    graph.check(from)?;
    graph.check(to)?;
    let n = from.len();
    let flip_prob = |site: usize| {
        let d = graph.flip_delta(from, site);
        if d <= 0.0 {
            1.0
        } else {
            exp(-beta.value() * d)
        }
    };
    let differing: Vec<usize> = (0..n).filter(|&i| from.0[i] != to.0[i]).collect();
    match differing.as_slice() {
        [] => Ok(1.0 - (0..n).map(flip_prob).sum::<f64>() / n as f64),
        [site] => Ok(flip_prob(*site) / n as f64),
        _ => Ok(0.0),
    }
}

/// Settings for [`metropolis_chain`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainConfig {
    /// Total number of Metropolis steps, burn-in included.
    pub steps: u64,
    pub burn_in: u64,
    /// Keep every `thin`-th post-burn-in state; 1 keeps all.
    pub thin: u64,
}

impl ChainConfig {
    /// Burn-in defaults to a tenth of the steps, no thinning.
    pub fn new(steps: u64) -> Self {
        ChainConfig {
            steps,
            burn_in: steps / 10,
            thin: 1,
        }
    }
}

/// Output of [`metropolis_chain`].
#[derive(Debug, Clone, PartialEq)]
pub struct ChainRun {
    pub samples: Vec<SpinConfig>,
    pub trace: RunTrace,
    pub final_state: SpinConfig,
}

/// Runs a Metropolis chain and records every post-burn-in state (subject
/// to thinning) plus one trace row per step. Steps are numbered from 1.
///
/// With `initial = None` the chain starts from a uniformly random
/// configuration drawn from `rng`.
pub fn metropolis_chain(
    graph: &CouplingGraph,
    beta: Beta,
    config: ChainConfig,
    rng: &mut RngStream,
    initial: Option<SpinConfig>,
) -> Result<ChainRun> {
    if config.steps <= config.burn_in {
        return Err(Error::validation(format!(
            "steps ({}) must exceed burn_in ({})",
            config.steps, config.burn_in
        )));
    }
    if config.thin == 0 {
        return Err(Error::validation("thin must be >= 1"));
    }
    if graph.n_sites == 0 {
        return Err(Error::validation("graph has no sites"));
    }
    let mut state = match initial {
        Some(s) => {
            graph.check(&s)?;
            s
        }
        None => SpinConfig::random(graph.n_sites, rng),
    };
    let mut energy = graph.energy_unchecked(&state);
    let kept = (config.steps - config.burn_in) / config.thin;
    let mut samples = Vec::with_capacity(kept as usize);
    let mut rows = Vec::with_capacity(config.steps as usize);
    let mut spin_sum: i64 = state.0.iter().map(|&s| s as i64).sum();
    let n = graph.n_sites as f64;
    for step in 1..=config.steps {
        let out = step_unchecked(&mut state, graph, beta.value(), rng);
        if out.accepted {
            energy += out.delta;
            spin_sum += 2 * state.0[out.site] as i64;
            debug_assert!(
                (energy - graph.energy_unchecked(&state)).abs() <= 1e-9 * (1.0 + energy.abs()),
                "incremental energy drifted from full recomputation"
            );
        }
        rows.push(TraceRow {
            step,
            energy,
            accepted: out.accepted,
            magnetization: spin_sum as f64 / n,
        });
        if step > config.burn_in && (step - config.burn_in).is_multiple_of(config.thin) {
            samples.push(state.clone());
        }
    }
    Ok(ChainRun {
        samples,
        trace: RunTrace { rows },
        final_state: state,
    })
}

/// Empirical frequencies of sampled configurations over the `2^N`
/// enumeration order used by [`partition_exact`].
pub fn empirical_distribution(samples: &[SpinConfig], n_sites: usize) -> Result<DiscreteDistribution> {
    if n_sites > MAX_ENUMERATION_SITES {
        return Err(Error::Capacity {
            what: "Ising graph",
            size: n_sites,
            limit: MAX_ENUMERATION_SITES,
        });
    }
    if samples.is_empty() {
        return Err(Error::validation("no samples"));
    }
    let mut counts = vec![0.0; 1 << n_sites];
    for s in samples {
        if s.len() != n_sites {
            return Err(Error::validation("sample size does not match n_sites"));
        }
        counts[s.index()] += 1.0;
    }
    DiscreteDistribution::from_weights(&counts)
}

/// Sample means with batch-means standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observables {
    pub mean_energy: f64,
    pub mean_magnetization: f64,
    pub energy_std_error: f64,
    pub magnetization_std_error: f64,
    pub batches: usize,
}

/// Number of batches used by [`estimate_observables`] (fewer if there are
/// fewer samples).
pub const OBSERVABLE_BATCHES: usize = 20;

fn batch_means_error(values: &[f64], batches: usize) -> f64 {
    if batches < 2 {
        return 0.0;
    }
    let size = values.len() / batches;
    let means: Vec<f64> = values
        .chunks_exact(size)
        .take(batches)
        .map(|c| c.iter().sum::<f64>() / size as f64)
        .collect();
    let m = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (batches - 1) as f64;
    sqrt(var / batches as f64)
}

pub fn estimate_observables(samples: &[SpinConfig], graph: &CouplingGraph) -> Result<Observables> {
    if samples.is_empty() {
        return Err(Error::validation("cannot estimate observables from zero samples"));
    }
    let mut energies = Vec::with_capacity(samples.len());
    let mut mags = Vec::with_capacity(samples.len());
    for s in samples {
        energies.push(ising_energy(s, graph)?);
        mags.push(s.magnetization());
    }
    let n = samples.len() as f64;
    let batches = OBSERVABLE_BATCHES.min(samples.len());
    Ok(Observables {
        mean_energy: energies.iter().sum::<f64>() / n,
        mean_magnetization: mags.iter().sum::<f64>() / n,
        energy_std_error: batch_means_error(&energies, batches),
        magnetization_std_error: batch_means_error(&mags, batches),
        batches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn energy_examples() {
        let g = CouplingGraph::new(3, vec![(0, 1, 0.0), (1, 2, 0.0)], vec![0.0; 3]).unwrap();
        assert_eq!(ising_energy(&SpinConfig::all_up(3), &g).unwrap(), 0.0);
        let g = CouplingGraph::new(2, vec![(0, 1, 1.0)], vec![0.0; 2]).unwrap();
        assert_eq!(ising_energy(&SpinConfig::new(vec![1, 1]).unwrap(), &g).unwrap(), -1.0);
        let g = CouplingGraph::new(1, vec![], vec![2.0]).unwrap();
        assert_eq!(ising_energy(&SpinConfig::new(vec![-1]).unwrap(), &g).unwrap(), 2.0);
        assert!(ising_energy(&SpinConfig::all_up(2), &g).is_err());
    }

    #[test]
    fn graph_validation() {
        assert!(CouplingGraph::new(2, vec![(0, 0, 1.0)], vec![0.0; 2]).is_err());
        assert!(CouplingGraph::new(2, vec![(0, 1, 1.0), (1, 0, 2.0)], vec![0.0; 2]).is_err());
        assert!(CouplingGraph::new(2, vec![(0, 2, 1.0)], vec![0.0; 2]).is_err());
        assert!(SpinConfig::new(vec![1, 0]).is_err());
        assert_eq!(CouplingGraph::torus(4, 1.0, 0.0).unwrap().edges().len(), 32);
    }

    #[test]
    fn partition_examples() {
        let one = CouplingGraph::new(1, vec![], vec![0.0]).unwrap();
        for b in [0.0, 0.7, 5.0] {
            let (z, p) = partition_exact(&one, Beta::new(b).unwrap()).unwrap();
            assert!((z - 2.0).abs() < 1e-15);
            assert_eq!(p.probs(), &[0.5, 0.5]);
        }
        let two = CouplingGraph::new(2, vec![(0, 1, 1.0)], vec![0.0; 2]).unwrap();
        let (z, _) = partition_exact(&two, Beta::new(1.0).unwrap()).unwrap();
        let e = core::f64::consts::E;
        assert!((z - (2.0 * e + 2.0 / e)).abs() < 1e-12);
        assert!((z - 6.1723).abs() < 1e-4);
        let zero = CouplingGraph::chain(5, 0.0, 0.0).unwrap();
        let (z, p) = partition_exact(&zero, Beta::new(1.3).unwrap()).unwrap();
        assert!((z - 32.0).abs() < 1e-12);
        assert!(p.probs().iter().all(|&x| (x - 1.0 / 32.0).abs() < 1e-15));
        let big = CouplingGraph::chain(21, 1.0, 0.0).unwrap();
        assert!(matches!(
            partition_exact(&big, Beta::new(1.0).unwrap()),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn gibbs_mode_is_a_ground_state() {
        let g = CouplingGraph::new(4, vec![(0, 1, 1.0), (1, 2, -0.5), (2, 3, 0.8), (0, 3, 0.3)], vec![0.1, -0.2, 0.0, 0.4])
            .unwrap();
        let (_, p) = partition_exact(&g, Beta::new(2.0).unwrap()).unwrap();
        assert!((p.probs().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let energies: Vec<f64> = (0..16).map(|k| ising_energy(&SpinConfig::from_index(k, 4), &g).unwrap()).collect();
        let e_min = energies.iter().copied().fold(f64::INFINITY, f64::min);
        assert_eq!(energies[p.argmax()], e_min);
    }

    #[test]
    fn boltzmann_entropy_examples() {
        assert_eq!(boltzmann_entropy(1, 1.0).unwrap(), 0.0);
        let s = boltzmann_entropy(1 << 10, 1.0).unwrap();
        assert!((s - 10.0 * 2f64.ln()).abs() < 1e-12);
        assert!((boltzmann_entropy_from_ln(1.0, 1.38e-16).unwrap() - 1.38e-16).abs() < 1e-30);
        assert!(boltzmann_entropy(0, 1.0).is_err());
    }

    #[test]
    fn downhill_and_flat_moves_always_accepted() {
        let mut rng = RngStream::new(0, 0);
        for _ in 0..1000 {
            assert!(metropolis_accept(-1.0, 3.0, &mut rng));
            assert!(metropolis_accept(0.0, 3.0, &mut rng));
        }
    }

    #[test]
    fn uphill_acceptance_frequency() {
        let mut rng = RngStream::new(17, 0);
        let trials = 100_000;
        let hits = (0..trials).filter(|_| metropolis_accept(2.0, 0.5, &mut rng)).count();
        let rate = hits as f64 / trials as f64;
        assert!((rate - (-1.0f64).exp()).abs() < 0.01, "rate {rate}");
    }

    #[test]
    fn zero_beta_accepts_everything() {
        let g = CouplingGraph::chain(5, 1.0, 0.3).unwrap();
        let mut rng = RngStream::new(1, 2);
        let run = metropolis_chain(&g, Beta::new(0.0).unwrap(), ChainConfig::new(5000), &mut rng, None).unwrap();
        assert_eq!(run.trace.acceptance_rate(), 1.0);
    }

    #[test]
    fn frozen_ferromagnet_aligns() {
        let g = CouplingGraph::chain(3, 1.0, 0.0).unwrap();
        let mut rng = RngStream::new(8, 0);
        let run = metropolis_chain(
            &g,
            Beta::new(50.0).unwrap(),
            ChainConfig {
                steps: 2000,
                burn_in: 200,
                thin: 1,
            },
            &mut rng,
            Some(SpinConfig::new(vec![1, -1, 1]).unwrap()),
        )
        .unwrap();
        let first = run.trace.rows.iter().position(|r| r.magnetization.abs() == 1.0).unwrap();
        assert!(run.trace.rows[first..].iter().all(|r| r.magnetization.abs() == 1.0));
        assert!(run.samples.iter().all(|s| s.magnetization().abs() == 1.0));
    }

    #[test]
    fn chain_rejects_bad_config() {
        let g = CouplingGraph::chain(3, 1.0, 0.0).unwrap();
        let mut rng = RngStream::new(0, 0);
        let cfg = ChainConfig {
            steps: 10,
            burn_in: 10,
            thin: 1,
        };
        assert!(metropolis_chain(&g, Beta::new(1.0).unwrap(), cfg, &mut rng, None).is_err());
    }

    #[test]
    fn trace_reproducible() {
        let g = CouplingGraph::chain(6, 1.0, 0.1).unwrap();
        let run = |seed| {
            let mut rng = RngStream::new(seed, 3);
            metropolis_chain(&g, Beta::new(0.8).unwrap(), ChainConfig::new(3000), &mut rng, None).unwrap()
        };
        assert_eq!(run(5), run(5));
        assert_ne!(run(5).trace, run(6).trace);
    }

    #[test]
    fn observables_examples() {
        let g = CouplingGraph::chain(3, 1.0, 0.0).unwrap();
        let up = SpinConfig::all_up(3);
        let down = SpinConfig::new(vec![-1, -1, -1]).unwrap();
        let o = estimate_observables(std::slice::from_ref(&up), &g).unwrap();
        assert_eq!(o.mean_magnetization, 1.0);
        assert_eq!(o.mean_energy, -2.0);
        let o = estimate_observables(&[up.clone(), down.clone(), up, down], &g).unwrap();
        assert_eq!(o.mean_magnetization, 0.0);
        assert!(estimate_observables(&[], &g).is_err());
    }

    #[test]
    fn infinite_temperature_magnetization_centered() {
        // uniform over {±1}^3: E[m] = 0 and Var[m] = 1/3 per sample
        let g = CouplingGraph::chain(3, 1.0, 0.0).unwrap();
        let mut rng = RngStream::new(21, 0);
        let run = metropolis_chain(&g, Beta::new(0.0).unwrap(), ChainConfig::new(60_000), &mut rng, None).unwrap();
        let o = estimate_observables(&run.samples, &g).unwrap();
        assert!(o.mean_magnetization.abs() < 3.0 * o.magnetization_std_error.max(1e-3));
        let iid_se = (1.0f64 / 3.0 / run.samples.len() as f64).sqrt();
        assert!(o.mean_magnetization.abs() < 3.0 * iid_se * 4.0);
    }
}
