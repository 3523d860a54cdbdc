//! Figures of merit for a state or a sample set over an encoded problem.
//!
//! Feasible states are scored with the penalty-free objective, so the
//! approximation ratio does not depend on the penalty weight.

use crate::encoders::Encoding;
use crate::error::{check_capacity, Result};
use crate::ising::{same_energy, CostModel};
use crate::statevector::{StateVector, MAX_STATEVECTOR_QUBITS};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunMetrics {
    /// `(⟨C⟩_feas - C_max) / (C_min - C_max)` with `⟨C⟩_feas` the mean
    /// objective of the normalised feasible component.
    pub r_approx: f64,
    pub p_feas: f64,
    pub p_gnd: f64,
    /// Set when the feasible probability is zero; `r_approx` is then 0.
    pub no_feasible_mass: bool,
}

/// Feasible basis states of an encoding with their objective values.
#[derive(Debug, Clone)]
pub struct FeasibleSet {
    n: usize,
    states: Vec<(u64, f64)>,
    ground: Vec<u64>,
    c_min: f64,
    c_max: f64,
}

impl FeasibleSet {
    /// Walks all `2^n` basis states of the register.
    pub fn new(encoding: &Encoding) -> Result<Self> {
        let n = encoding.num_qubits();
        check_capacity("qubits for feasibility scan", n, MAX_STATEVECTOR_QUBITS)?;
        let objective = encoding.objective();
        let states: Vec<(u64, f64)> = (0..1u64 << n)
            .filter(|&i| encoding.is_feasible(i))
            .map(|i| (i, objective.energy_of_index(i)))
            .collect();
        let c_min = states.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
        let c_max = states.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
        let ground = states
            .iter()
            .filter(|s| same_energy(s.1, c_min))
            .map(|s| s.0)
            .collect();
        Ok(Self {
            n,
            states,
            ground,
            c_min,
            c_max,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn c_min(&self) -> f64 {
        self.c_min
    }

    pub fn c_max(&self) -> f64 {
        self.c_max
    }

    pub fn ground_states(&self) -> &[u64] {
        &self.ground
    }

    /// Scores a probability distribution given as `prob(index)`.
    pub fn score(&self, prob: impl Fn(u64) -> f64) -> RunMetrics {
        let mut p_feas = 0.0;
        let mut weighted = 0.0;
        for &(i, e) in &self.states {
            let p = prob(i);
            p_feas += p;
            weighted += p * e;
        }
        let p_gnd = self.ground.iter().map(|&i| prob(i)).sum();
        let no_feasible_mass = p_feas == 0.0;
        let r_approx = if no_feasible_mass {
            0.0
        } else if same_energy(self.c_min, self.c_max) {
            1.0
        } else {
            ((weighted / p_feas - self.c_max) / (self.c_min - self.c_max)).clamp(0.0, 1.0)
        };
        RunMetrics {
            r_approx,
            p_feas,
            p_gnd,
            no_feasible_mass,
        }
    }

    pub fn score_state(&self, state: &StateVector) -> RunMetrics {
        let amps = state.amplitudes();
        self.score(|i| amps[i as usize].norm_sqr())
    }
}
