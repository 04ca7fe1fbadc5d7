//! Statistical-mechanics algorithms for machine learning.
//!
//! The crate is `no_std` and needs only `alloc`. Everything here is a pure
//! function of its inputs plus an explicit [`RngStream`] where randomness is
//! involved, so results are reproducible from `(seed, stream)` alone.
//!
//! - [`prob`] / [`info`] / [`stats`]: distributions, entropy, KL, mutual
//!   information, importance sampling, CLT and PAC helpers
//! - [`ising`]: Ising energy, exact partition function, Metropolis sampling
//! - [`anneal`] / [`digest`]: simulated annealing and the double-digest problem
//! - [`ebm`] / [`bm`]: energy-based losses and restricted Boltzmann machines
//! - [`conv`]: naive and FFT convolution
//! - [`boost`]: three-hypothesis boosting
//! - [`activeinf`] / [`meanfield`]: free energies, value iteration, mean-field VI
//! - [`marl`]: mean-field multi-agent Q-learning on the Ising game
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod activeinf;
pub mod anneal;
pub mod bm;
pub mod boost;
pub mod conv;
pub mod digest;
pub mod ebm;
mod error;
pub mod info;
pub mod ising;
pub mod marl;
pub(crate) mod math;
pub mod meanfield;
pub mod prob;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use prob::{DiscreteDistribution, JointDistribution};
pub use rng::RngStream;

/// Tolerance used when checking that probabilities sum to one.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// Largest system (spins or units) that the exact enumeration routines accept.
pub const MAX_ENUMERATION_SITES: usize = 20;
