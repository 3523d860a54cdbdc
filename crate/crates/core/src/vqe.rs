//! Hardware-efficient VQE ansatz with exact, sampled and light-cone
//! estimators.
//!
//! The ansatz is an optional layer of `Ry` rotations followed by entangling
//! layers. Each entangling layer applies CNOTs on even pairs `(0,1), (2,3), …`,
//! `Ry` on qubits `0..n-1`, CNOTs on odd pairs `(1,2), (3,4), …`, then `Ry` on
//! qubits `1..n`. Every rotation has its own parameter, numbered in gate order.

use std::f64::consts::PI;

use rand::Rng;

use crate::encoders::Encoding;
use crate::error::{invalid, Error, Result};
use crate::exec::{try_map_indexed, Execution};
use crate::ising::{CostModel, IsingModel};
use crate::metrics::{FeasibleSet, RunMetrics};
use crate::optimizers::{minimize, OptimizerConfig};
use crate::statevector::StateVector;
use crate::stats::{derive_seed, rng_from_seed};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Ry { qubit: usize, param: usize },
    Cnot { control: usize, target: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HardwareEfficientAnsatz {
    n: usize,
    initial_layer: bool,
    layers: usize,
    gates: Vec<Gate>,
}

impl HardwareEfficientAnsatz {
    pub fn new(n: usize, initial_layer: bool, layers: usize) -> Result<Self> {
        if n < 2 {
            return Err(invalid("ansatz needs at least two qubits"));
        }
        let mut gates = Vec::new();
        let mut param = 0;
        let mut ry = |gates: &mut Vec<Gate>, qubit: usize| {
            gates.push(Gate::Ry { qubit, param });
            param += 1;
        };
        if initial_layer {
            for q in 0..n {
                ry(&mut gates, q);
            }
        }
        for _ in 0..layers {
            for c in (0..n - 1).step_by(2) {
                gates.push(Gate::Cnot {
                    control: c,
                    target: c + 1,
                });
            }
            for q in 0..n - 1 {
                ry(&mut gates, q);
            }
            for c in (1..n - 1).step_by(2) {
                gates.push(Gate::Cnot {
                    control: c,
                    target: c + 1,
                });
            }
            for q in 1..n {
                ry(&mut gates, q);
            }
        }
        Ok(Self {
            n,
            initial_layer,
            layers,
            gates,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn has_initial_layer(&self) -> bool {
        self.initial_layer
    }

    /// `n·[initial layer] + 2(n-1)·layers`.
    pub fn num_params(&self) -> usize {
        usize::from(self.initial_layer) * self.n + 2 * (self.n - 1) * self.layers
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    fn check_params(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.num_params() {
            return Err(Error::LengthMismatch {
                expected: self.num_params(),
                got: theta.len(),
            });
        }
        Ok(())
    }

    pub fn state(&self, theta: &[f64]) -> Result<StateVector> {
        self.check_params(theta)?;
        run_gates(self.n, &self.gates, theta)
    }

    /// Gates that can influence the measured qubits, found by walking the
    /// circuit backwards from the end.
    pub fn causal_cone(&self, measured: &[usize]) -> Result<CausalCone> {
        let mut active = 0u64;
        for &q in measured {
            if q >= self.n {
                return Err(Error::IndexOutOfRange { index: q, n: self.n });
            }
            active |= 1 << q;
        }
        let mut kept = Vec::new();
        for gate in self.gates.iter().rev() {
            match *gate {
                Gate::Ry { qubit, .. } if active >> qubit & 1 == 1 => kept.push(*gate),
                Gate::Cnot { control, target }
                    if (active >> control | active >> target) & 1 == 1 =>
                {
                    active |= 1 << control | 1 << target;
                    kept.push(*gate);
                }
                _ => {}
            }
        }
        kept.reverse();
        let qubits: Vec<usize> = (0..self.n).filter(|&q| active >> q & 1 == 1).collect();
        let local = |q: usize| qubits.iter().position(|&x| x == q).expect("in cone");
        let gates = kept
            .into_iter()
            .map(|g| match g {
                Gate::Ry { qubit, param } => Gate::Ry {
                    qubit: local(qubit),
                    param,
                },
                Gate::Cnot { control, target } => Gate::Cnot {
                    control: local(control),
                    target: local(target),
                },
            })
            .collect();
        Ok(CausalCone {
            measured: measured.iter().map(|&q| local(q)).collect(),
            qubits,
            gates,
        })
    }
}

fn run_gates(n: usize, gates: &[Gate], theta: &[f64]) -> Result<StateVector> {
    let mut psi = StateVector::basis(n, 0)?;
    for g in gates {
        match *g {
            Gate::Ry { qubit, param } => psi.apply_ry(qubit, theta[param])?,
            Gate::Cnot { control, target } => psi.apply_cnot(control, target)?,
        }
    }
    Ok(psi)
}

/// Reduced circuit on the qubits that can affect a set of measured qubits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CausalCone {
    /// Global qubit indices, ascending; local qubit `k` is `qubits[k]`.
    pub qubits: Vec<usize>,
    /// Local positions of the measured qubits.
    pub measured: Vec<usize>,
    /// Gates in local indices; parameters index the full vector.
    pub gates: Vec<Gate>,
}

impl CausalCone {
    pub fn state(&self, theta: &[f64]) -> Result<StateVector> {
        run_gates(self.qubits.len(), &self.gates, theta)
    }

    /// Distribution over the measured qubits; entry `k` has measured qubit
    /// `j` in bit `j` of `k`.
    pub fn marginal(&self, theta: &[f64]) -> Result<Vec<f64>> {
        Ok(marginal_of(&self.state(theta)?, &self.measured))
    }
}

/// Marginal distribution of `qubits` in a state.
pub fn marginal_of(state: &StateVector, qubits: &[usize]) -> Vec<f64> {
    let mut out = vec![0.0; 1 << qubits.len()];
    for (i, a) in state.amplitudes().iter().enumerate() {
        let k = qubits
            .iter()
            .enumerate()
            .fold(0usize, |acc, (b, &q)| acc | (i >> q & 1) << b);
        out[k] += a.norm_sqr();
    }
    out
}

/// An estimated expectation value with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

pub fn ev_statevector<M: CostModel + ?Sized>(
    ansatz: &HardwareEfficientAnsatz,
    theta: &[f64],
    model: &M,
) -> Result<f64> {
    ansatz.state(theta)?.expectation(model)
}

/// Measures every qubit `shots` times and averages the cost.
pub fn ev_all_qubit_sampling<M: CostModel + ?Sized>(
    ansatz: &HardwareEfficientAnsatz,
    theta: &[f64],
    model: &M,
    shots: usize,
    seed: u64,
) -> Result<Estimate> {
    if shots == 0 {
        return Err(invalid("shots must be positive"));
    }
    let samples = ansatz.state(theta)?.sample(shots, seed);
    let (mean, stderr) = samples.mean_and_stderr(|i| model.energy_of_index(i));
    Ok(Estimate { mean, stderr })
}

/// Per-term estimator: each Ising field or coupling is measured on its own
/// light-cone circuit.
#[derive(Debug, Clone)]
pub struct ConeEstimator {
    offset: f64,
    terms: Vec<(f64, CausalCone)>,
}

impl ConeEstimator {
    pub fn new(ansatz: &HardwareEfficientAnsatz, model: &IsingModel) -> Result<Self> {
        if model.num_spins() != ansatz.num_qubits() {
            return Err(Error::LengthMismatch {
                expected: ansatz.num_qubits(),
                got: model.num_spins(),
            });
        }
        let mut terms = Vec::new();
        for (i, h) in model.fields() {
            terms.push((h, ansatz.causal_cone(&[i])?));
        }
        for ((i, j), c) in model.couplings() {
            terms.push((c, ansatz.causal_cone(&[i, j])?));
        }
        Ok(Self {
            offset: model.offset(),
            terms,
        })
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn cones(&self) -> impl Iterator<Item = &CausalCone> {
        self.terms.iter().map(|(_, c)| c)
    }

    /// `shots` measurements per term; term `t` uses seed `derive_seed(seed, t)`.
    pub fn estimate(&self, theta: &[f64], shots: usize, seed: u64) -> Result<Estimate> {
        if shots == 0 {
            return Err(invalid("shots must be positive"));
        }
        let mut mean = self.offset;
        let mut var = 0.0;
        for (t, (coeff, cone)) in self.terms.iter().enumerate() {
            let samples = cone.state(theta)?.sample(shots, derive_seed(seed, t as u64));
            let parity = |i: u64| {
                let ones: u32 = cone.measured.iter().map(|&q| (i >> q & 1) as u32).sum();
                if ones % 2 == 0 {
                    1.0
                } else {
                    -1.0
                }
            };
            let (m, se) = samples.mean_and_stderr(parity);
            mean += coeff * m;
            var += (coeff * se).powi(2);
        }
        Ok(Estimate {
            mean,
            stderr: var.sqrt(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    Statevector,
    Sampling { shots: usize },
    Cone { shots: usize },
}

impl Estimator {
    pub fn label(&self) -> &'static str {
        match self {
            Estimator::Statevector => "sv",
            Estimator::Sampling { .. } => "sample",
            Estimator::Cone { .. } => "cone",
        }
    }

    pub fn shots(&self) -> usize {
        match *self {
            Estimator::Statevector => 0,
            Estimator::Sampling { shots } | Estimator::Cone { shots } => shots,
        }
    }
}

#[derive(Debug, Clone)]
pub struct VqeConfig {
    pub restarts: usize,
    pub optimizer: OptimizerConfig,
    pub estimator: Estimator,
    pub seed: u64,
    pub execution: Execution,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VqeRun {
    pub run_id: usize,
    pub seed: u64,
    pub theta: Vec<f64>,
    /// Exact expectation value at the returned parameters.
    pub ev: f64,
    pub metrics: RunMetrics,
    pub evaluations: usize,
}

/// Independent optimisations from uniform random parameters in `[0, 2π)`.
/// Scores are computed exactly from the final state whatever the estimator.
pub fn vqe_restart_search(
    ansatz: &HardwareEfficientAnsatz,
    encoding: &Encoding,
    cfg: &VqeConfig,
) -> Result<Vec<VqeRun>> {
    if encoding.num_qubits() != ansatz.num_qubits() {
        return Err(Error::LengthMismatch {
            expected: ansatz.num_qubits(),
            got: encoding.num_qubits(),
        });
    }
    let model = encoding.model();
    let diagonal = model.diagonal()?;
    let feasible = FeasibleSet::new(encoding)?;
    let cone = match cfg.estimator {
        Estimator::Cone { .. } => Some(ConeEstimator::new(ansatz, &model.to_ising())?),
        _ => None,
    };
    try_map_indexed(cfg.restarts, cfg.execution, |k| {
        let seed = derive_seed(cfg.seed, k as u64);
        let mut rng = rng_from_seed(seed);
        let x0: Vec<f64> = (0..ansatz.num_params())
            .map(|_| rng.random::<f64>() * 2.0 * PI)
            .collect();
        let mut calls = 0u64;
        let objective = |theta: &[f64]| {
            calls += 1;
            let shot_seed = derive_seed(seed, calls);
            let value = match cfg.estimator {
                Estimator::Statevector => ansatz
                    .state(theta)
                    .map(|s| s.expectation_diagonal(&diagonal)),
                Estimator::Sampling { shots } => {
                    ev_all_qubit_sampling(ansatz, theta, model, shots, shot_seed).map(|e| e.mean)
                }
                Estimator::Cone { shots } => cone
                    .as_ref()
                    .expect("built for cone estimator")
                    .estimate(theta, shots, shot_seed)
                    .map(|e| e.mean),
            };
            value.unwrap_or(f64::NAN)
        };
        let res = minimize(objective, &x0, &cfg.optimizer, seed)?;
        let state = ansatz.state(&res.x_best)?;
        Ok(VqeRun {
            run_id: k,
            seed,
            ev: state.expectation_diagonal(&diagonal),
            metrics: feasible.score_state(&state),
            theta: res.x_best,
            evaluations: res.evaluations,
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoders::presets;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn parameter_counts() {
        let count = |n, init, l| HardwareEfficientAnsatz::new(n, init, l).unwrap().num_params();
        assert_eq!(count(5, false, 1), 8);
        assert_eq!(count(5, true, 1), 13);
        assert_eq!(count(5, true, 2), 21);
        assert_eq!(count(16, false, 1), 30);
        assert_eq!(count(16, true, 1), 46);
    }

    #[test]
    fn gate_order() {
        let a = HardwareEfficientAnsatz::new(5, false, 1).unwrap();
        let expect = vec![
            Gate::Cnot { control: 0, target: 1 },
            Gate::Cnot { control: 2, target: 3 },
            Gate::Ry { qubit: 0, param: 0 },
            Gate::Ry { qubit: 1, param: 1 },
            Gate::Ry { qubit: 2, param: 2 },
            Gate::Ry { qubit: 3, param: 3 },
            Gate::Cnot { control: 1, target: 2 },
            Gate::Cnot { control: 3, target: 4 },
            Gate::Ry { qubit: 1, param: 4 },
            Gate::Ry { qubit: 2, param: 5 },
            Gate::Ry { qubit: 3, param: 6 },
            Gate::Ry { qubit: 4, param: 7 },
        ];
        assert_eq!(a.gates(), expect.as_slice());
    }

    #[test]
    fn cone_of_edge_zero_two() {
        for init in [false, true] {
            let a = HardwareEfficientAnsatz::new(5, init, 1).unwrap();
            assert_eq!(a.causal_cone(&[0, 2]).unwrap().qubits, vec![0, 1, 2, 3]);
        }
    }

    #[test]
    fn cone_drops_late_gates() {
        let a = HardwareEfficientAnsatz::new(5, true, 1).unwrap();
        let cone = a.causal_cone(&[0, 2]).unwrap();
        // the final rotations on qubits 1 and 3 act after their last
        // interaction with the measured pair
        let params: Vec<usize> = cone
            .gates
            .iter()
            .filter_map(|g| match g {
                Gate::Ry { param, .. } => Some(*param),
                _ => None,
            })
            .collect();
        assert_eq!(params, vec![0, 1, 2, 3, 5, 6, 7, 10]);
    }

    #[test]
    fn wrong_length_rejected() {
        let a = HardwareEfficientAnsatz::new(5, false, 1).unwrap();
        assert!(a.state(&[0.0; 7]).is_err());
        assert!(HardwareEfficientAnsatz::new(1, true, 1).is_err());
    }

    #[test]
    fn ground_state_reachable_with_eight_params() {
        // qubits 0,1,3,4 set, qubit 2 clear
        let a = HardwareEfficientAnsatz::new(5, false, 1).unwrap();
        let mut theta = vec![0.0; 8];
        theta[0] = PI;
        theta[4] = PI;
        theta[6] = PI;
        theta[7] = PI;
        let s = a.state(&theta).unwrap();
        let idx = "11011".parse::<crate::BitString>().unwrap().to_index().unwrap();
        assert_abs_diff_eq!(s.probabilities()[idx as usize], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn cone_estimator_matches_exact_without_noise() {
        let enc = presets::problem_a(40.0).unwrap();
        let ising = enc.model().to_ising();
        let a = HardwareEfficientAnsatz::new(5, true, 1).unwrap();
        let est = ConeEstimator::new(&a, &ising).unwrap();
        assert_eq!(est.num_terms(), 15);
        let theta: Vec<f64> = (0..13).map(|k| 0.3 * k as f64).collect();
        let exact = ev_statevector(&a, &theta, enc.model()).unwrap();
        let e = est.estimate(&theta, 200_000, 3).unwrap();
        assert!((e.mean - exact).abs() < 5.0 * e.stderr, "{} vs {exact} ± {}", e.mean, e.stderr);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn cone_marginals_match_full_state(theta in proptest::collection::vec(0.0f64..6.3, 13), i in 0usize..5, j in 0usize..5) {
            prop_assume!(i != j);
            let a = HardwareEfficientAnsatz::new(5, true, 1).unwrap();
            let full = marginal_of(&a.state(&theta).unwrap(), &[i, j]);
            let cone = a.causal_cone(&[i, j]).unwrap().marginal(&theta).unwrap();
            for (x, y) in full.iter().zip(&cone) {
                prop_assert!((x - y).abs() < 1e-10);
            }
        }
    }
}
