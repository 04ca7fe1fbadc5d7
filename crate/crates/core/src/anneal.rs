//! Simulated annealing over pluggable energy landscapes.
//!
//! Each sweep runs a fixed number of Metropolis proposals at `β = 1/T(k)`
//! where `T(k)` comes from a [`CoolingSchedule`]. The best state ever
//! visited is returned, not the last one.

use alloc::format;
use alloc::vec::Vec;

use crate::ising::{metropolis_accept, CouplingGraph, SpinConfig};
use crate::math::{ln, powf};
use crate::{Error, Result, RngStream};

/// Energy of a candidate and its change relative to the current state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyChange {
    pub delta: f64,
    pub energy: f64,
}

/// A minimisation problem: an energy over states and a proposal move.
///
/// Implementations must not keep hidden mutable state so that parallel
/// restarts can share one landscape.
pub trait EnergyLandscape {
    type State: Clone;

    fn energy(&self, state: &Self::State) -> f64;

    fn propose(&self, state: &Self::State, rng: &mut RngStream) -> Self::State;

    fn random_state(&self, rng: &mut RngStream) -> Self::State;

    /// Energy of `candidate` given the current state and its energy.
    /// Override when a local update is cheaper than a full evaluation.
    fn energy_change(&self, _current: &Self::State, current_energy: f64, candidate: &Self::State) -> EnergyChange {
        let energy = self.energy(candidate);
        EnergyChange {
            delta: energy - current_energy,
            energy,
        }
    }
}

/// Temperature as a function of the sweep index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoolingSchedule {
    /// `T0 · r^k`
    Geometric { t0: f64, ratio: f64 },
    /// `max(T0 − slope·k, floor)`
    Linear { t0: f64, slope: f64, floor: f64 },
    /// `T0 / ln(k + 2)`
    Logarithmic { t0: f64 },
    Constant { t0: f64 },
}

impl CoolingSchedule {
    /// Builds a schedule from a kind name and one parameter: the ratio for
    /// `geometric`, the slope for `linear` (floor `T0·1e-3`), ignored for
    /// `logarithmic` and `constant`.
    pub fn from_kind(kind: &str, t0: f64, parameter: f64) -> Result<Self> {
        let s = match kind {
            "geometric" => CoolingSchedule::Geometric { t0, ratio: parameter },
            "linear" => CoolingSchedule::Linear {
                t0,
                slope: parameter,
                floor: t0 * 1e-3,
            },
            "logarithmic" => CoolingSchedule::Logarithmic { t0 },
            "constant" => CoolingSchedule::Constant { t0 },
            other => return Err(Error::validation(format!("unknown schedule kind {other:?}"))),
        };
        s.validate()?;
        Ok(s)
    }

    /// Geometric schedule going from `start` at `k = 0` to `end` at
    /// `k = steps − 1`.
    pub fn geometric_between(start: f64, end: f64, steps: u64) -> Result<Self> {
        if !(start > 0.0 && end > 0.0 && end <= start) {
            return Err(Error::validation(format!(
                "need 0 < end <= start, got start {start}, end {end}"
            )));
        }
        let ratio = if steps > 1 {
            powf(end / start, 1.0 / (steps - 1) as f64)
        } else {
            1.0
        };
        let s = CoolingSchedule::Geometric { t0: start, ratio };
        s.validate()?;
        Ok(s)
    }

    pub fn t0(&self) -> f64 {
        match *self {
            CoolingSchedule::Geometric { t0, .. }
            | CoolingSchedule::Linear { t0, .. }
            | CoolingSchedule::Logarithmic { t0 }
            | CoolingSchedule::Constant { t0 } => t0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let t0 = self.t0();
        if !(t0 > 0.0) || !t0.is_finite() {
            return Err(Error::validation(format!("T0 = {t0} must be positive and finite")));
        }
        match *self {
            CoolingSchedule::Geometric { ratio, .. } if !(ratio > 0.0 && ratio <= 1.0) => {
                Err(Error::validation(format!("geometric ratio {ratio} outside (0, 1]")))
            }
            CoolingSchedule::Linear { slope, floor, .. } if !(slope >= 0.0) || !(floor > 0.0) => Err(
                Error::validation(format!("linear schedule needs slope >= 0 and floor > 0, got {slope}, {floor}")),
            ),
            _ => Ok(()),
        }
    }
}

/// `T(k)` for the schedule; errors if the result is not a positive number.
pub fn schedule_temperature(schedule: &CoolingSchedule, k: u64) -> Result<f64> {
    schedule.validate()?;
    let kf = k as f64;
    let t = match *schedule {
        CoolingSchedule::Geometric { t0, ratio } => t0 * powf(ratio, kf),
        CoolingSchedule::Linear { t0, slope, floor } => (t0 - slope * kf).max(floor),
        CoolingSchedule::Logarithmic { t0 } => t0 / ln(kf + 2.0),
        CoolingSchedule::Constant { t0 } => t0,
    };
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::validation(format!("schedule produced T = {t} at sweep {k}")));
    }
    Ok(t)
}

/// Per-sweep record of an annealing run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnealRow {
    pub sweep: u64,
    pub temperature: f64,
    pub current_energy: f64,
    pub best_energy: f64,
    pub acceptance_rate: f64,
    /// Accepted fraction among proposals with `ΔH > 0`; zero when none were made.
    pub uphill_acceptance_rate: f64,
}

#[derive(Debug, Clone)]
pub struct AnnealResult<S> {
    pub best_state: S,
    pub best_energy: f64,
    pub final_state: S,
    pub trace: Vec<AnnealRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnnealConfig {
    pub sweeps: u64,
    pub proposals_per_sweep: u64,
}

/// Anneals from a random state drawn with `rng`.
pub fn anneal<L: EnergyLandscape>(
    problem: &L,
    schedule: &CoolingSchedule,
    config: AnnealConfig,
    rng: &mut RngStream,
) -> Result<AnnealResult<L::State>> {
    let initial = problem.random_state(rng);
    anneal_from(problem, initial, schedule, config, rng)
}

/// Anneals from a given initial state.
pub fn anneal_from<L: EnergyLandscape>(
    problem: &L,
    initial: L::State,
    schedule: &CoolingSchedule,
    config: AnnealConfig,
    rng: &mut RngStream,
) -> Result<AnnealResult<L::State>> {
    if config.sweeps == 0 {
        return Err(Error::validation("sweeps must be >= 1"));
    }
    if config.proposals_per_sweep == 0 {
        return Err(Error::validation("proposals_per_sweep must be >= 1"));
    }
    // fail before doing any work if the schedule leaves (0, ∞) anywhere
    schedule_temperature(schedule, 0)?;
    schedule_temperature(schedule, config.sweeps - 1)?;

    let mut current = initial;
    let mut current_energy = problem.energy(&current);
    if !current_energy.is_finite() {
        return Err(Error::validation("initial state has non-finite energy"));
    }
    let mut best = current.clone();
    let mut best_energy = current_energy;
    let mut trace = Vec::with_capacity(config.sweeps as usize);

    for sweep in 0..config.sweeps {
        let temperature = schedule_temperature(schedule, sweep)?;
        let beta = 1.0 / temperature;
        let mut accepted = 0u64;
        let mut uphill = 0u64;
        let mut uphill_accepted = 0u64;
        for _ in 0..config.proposals_per_sweep {
            let candidate = problem.propose(&current, rng);
            let change = problem.energy_change(&current, current_energy, &candidate);
            let is_uphill = change.delta > 0.0;
            if metropolis_accept(change.delta, beta, rng) {
                current = candidate;
                current_energy = change.energy;
                accepted += 1;
                if is_uphill {
                    uphill_accepted += 1;
                }
                if current_energy < best_energy {
                    best_energy = current_energy;
                    best = current.clone();
                }
            }
            if is_uphill {
                uphill += 1;
            }
        }
        trace.push(AnnealRow {
            sweep,
            temperature,
            current_energy,
            best_energy,
            acceptance_rate: accepted as f64 / config.proposals_per_sweep as f64,
            uphill_acceptance_rate: if uphill > 0 {
                uphill_accepted as f64 / uphill as f64
            } else {
                0.0
            },
        });
    }
    Ok(AnnealResult {
        best_state: best,
        best_energy,
        final_state: current,
        trace,
    })
}

/// Ising ground-state search with single-spin-flip proposals. Consumes
/// randomness in the same order as [`crate::ising::metropolis_step`].
#[derive(Debug, Clone)]
pub struct IsingLandscape<'a> {
    pub graph: &'a CouplingGraph,
}

impl EnergyLandscape for IsingLandscape<'_> {
    type State = SpinConfig;

    fn energy(&self, state: &SpinConfig) -> f64 {
        crate::ising::ising_energy(state, self.graph).unwrap_or(f64::NAN)
    }

    fn propose(&self, state: &SpinConfig, rng: &mut RngStream) -> SpinConfig {
        let mut next = state.clone();
        next.flip(rng.below(state.len()));
        next
    }

    fn random_state(&self, rng: &mut RngStream) -> SpinConfig {
        SpinConfig::random(self.graph.n_sites(), rng)
    }

    fn energy_change(&self, current: &SpinConfig, current_energy: f64, candidate: &SpinConfig) -> EnergyChange {
        match current.spins().iter().zip(candidate.spins()).position(|(a, b)| a != b) {
            Some(site) => {
                let delta = self.graph.flip_delta(current, site);
                EnergyChange {
                    delta,
                    energy: current_energy + delta,
                }
            }
            None => EnergyChange {
                delta: 0.0,
                energy: current_energy,
            },
        }
    }
}
