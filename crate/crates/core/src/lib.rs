//! Variational quantum optimisation of ambulance placement.
//!
//! Facility-location instances are encoded as QUBO models ([`encoders`]),
//! simulated exactly on a statevector ([`statevector`]) and optimised with
//! QAOA ([`qaoa`]) or a hardware-efficient VQE ansatz ([`vqe`]). Classical
//! baselines ([`baselines`]) and small annealing studies ([`anneal`]) provide
//! the reference points.
//!
//! Restart loops, read loops and parameter sweeps run through [`exec`], which
//! uses rayon when the `parallel` feature is on.

pub mod anneal;
pub mod baselines;
pub mod bits;
pub mod encoders;
pub mod error;
pub mod exec;
pub mod ising;
pub mod stats;
pub mod vqe;
pub mod metrics;
pub mod optimizers;
pub mod qaoa;
pub mod statevector;

pub use bits::BitString;
pub use error::{Error, Result};
pub use exec::Execution;
pub use ising::{CostModel, IsingModel, QuboModel};
