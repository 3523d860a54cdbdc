//! Annealing-side utilities that run without hardware: small closed-system
//! annealing dynamics, time to solution, chain strength, chain-break
//! resolution and a penalty-weight sweep over a classical stand-in sampler.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;

use crate::baselines::{anneal_walk, SimAnnealConfig};
use crate::bits::BitString;
use crate::encoders::{Encoding, EncodingKind, FacilityProblem, Penalty};
use crate::error::{check_capacity, invalid, Error, Result};
use crate::exec::{map_indexed, try_map_indexed, Execution};
use crate::ising::{ground_level, same_energy, CostModel, IsingModel};
use crate::metrics::RunMetrics;
use crate::statevector::{StateVector, C64};
use crate::stats::{derive_seed, rng_from_seed};

/// Largest register simulated by the annealing dynamics.
pub const MAX_DYNAMICS_QUBITS: usize = 10;

/// Path through `s ∈ [0, 1]` for `H(s) = -(1-s)·Σσx + s·H_problem`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScheduleKind {
    /// `s` rises linearly from 0 to 1 over `total_time`.
    Forward { total_time: f64 },
    /// `s` falls from 1 to `s_min` over `leg_time`, holds for `hold`, then rises back.
    Reverse { s_min: f64, hold: f64, leg_time: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnealSchedule {
    pub kind: ScheduleKind,
    /// Integration steps per ramp; the hold segment uses the same count.
    pub steps: usize,
}

impl AnnealSchedule {
    pub fn forward(total_time: f64, steps: usize) -> Self {
        Self {
            kind: ScheduleKind::Forward { total_time },
            steps,
        }
    }

    pub fn reverse(s_min: f64, hold: f64, leg_time: f64, steps: usize) -> Self {
        Self {
            kind: ScheduleKind::Reverse {
                s_min,
                hold,
                leg_time,
            },
            steps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(invalid("schedule needs at least one step"));
        }
        match self.kind {
            ScheduleKind::Forward { total_time } if total_time.is_nan() || total_time <= 0.0 => {
                Err(invalid(format!("anneal time must be positive, got {total_time}")))
            }
            ScheduleKind::Reverse {
                s_min,
                hold,
                leg_time,
            } => {
                if !(s_min > 0.0 && s_min <= 1.0) {
                    Err(invalid(format!("s_min must lie in (0, 1], got {s_min}")))
                } else if !(hold >= 0.0 && leg_time >= 0.0) {
                    Err(invalid("hold and leg times must be non-negative"))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// `(s, dt)` for each propagation step, with `s` at the step midpoint.
    fn segments(&self) -> Vec<(f64, f64)> {
        let k = self.steps;
        let ramp = |from: f64, to: f64, time: f64| -> Vec<(f64, f64)> {
            let dt = time / k as f64;
            (0..k)
                .map(|j| (from + (to - from) * (j as f64 + 0.5) / k as f64, dt))
                .collect()
        };
        match self.kind {
            ScheduleKind::Forward { total_time } => ramp(0.0, 1.0, total_time),
            ScheduleKind::Reverse {
                s_min,
                hold,
                leg_time,
            } => {
                let mut out = ramp(1.0, s_min, leg_time);
                if hold > 0.0 {
                    out.extend(ramp(s_min, s_min, hold));
                }
                out.extend(ramp(s_min, 1.0, leg_time));
                out
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct AnnealOutcome {
    pub state: StateVector,
    /// Probability mass on the problem's ground states.
    pub p_gnd: f64,
    /// `| ‖ψ‖² - 1 |` after the final step.
    pub norm_drift: f64,
}

/// Evolves the uniform superposition along a forward schedule.
pub fn simulate_forward_anneal(model: &IsingModel, schedule: &AnnealSchedule) -> Result<AnnealOutcome> {
    if !matches!(schedule.kind, ScheduleKind::Forward { .. }) {
        return Err(invalid("forward anneal needs a forward schedule"));
    }
    let n = model.num_spins();
    check_capacity("qubits for annealing dynamics", n, MAX_DYNAMICS_QUBITS)?;
    evolve(model, StateVector::uniform(n)?, schedule)
}

/// Evolves a basis seed state along a reverse schedule.
pub fn simulate_reverse_anneal(
    model: &IsingModel,
    seed_state: &BitString,
    schedule: &AnnealSchedule,
) -> Result<AnnealOutcome> {
    if !matches!(schedule.kind, ScheduleKind::Reverse { .. }) {
        return Err(invalid("reverse anneal needs a reverse schedule"));
    }
    let n = model.num_spins();
    check_capacity("qubits for annealing dynamics", n, MAX_DYNAMICS_QUBITS)?;
    if seed_state.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: seed_state.len(),
        });
    }
    evolve(model, StateVector::basis(n, seed_state.to_index()?)?, schedule)
}

fn evolve(model: &IsingModel, start: StateVector, schedule: &AnnealSchedule) -> Result<AnnealOutcome> {
    schedule.validate()?;
    let n = model.num_spins();
    let dim = 1usize << n;
    let diag = model.diagonal()?;
    let mut psi: Vec<C64> = start.amplitudes().to_vec();
    for (s, dt) in schedule.segments() {
        if dt == 0.0 {
            continue;
        }
        let h = DMatrix::from_fn(dim, dim, |r, c| {
            if r == c {
                s * diag[r]
            } else if (r ^ c).is_power_of_two() {
                -(1.0 - s)
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(h);
        // ψ ← V · diag(e^{-iλ dt}) · Vᵀ ψ
        let v = &eig.eigenvectors;
        let re = DVector::from_iterator(dim, psi.iter().map(|a| a.re));
        let im = DVector::from_iterator(dim, psi.iter().map(|a| a.im));
        let (pr, pi) = (v.tr_mul(&re), v.tr_mul(&im));
        let mut rot_re = DVector::zeros(dim);
        let mut rot_im = DVector::zeros(dim);
        for k in 0..dim {
            let phase = C64::from_polar(1.0, -eig.eigenvalues[k] * dt);
            let z = C64::new(pr[k], pi[k]) * phase;
            rot_re[k] = z.re;
            rot_im[k] = z.im;
        }
        let (nr, ni) = (v * rot_re, v * rot_im);
        for k in 0..dim {
            psi[k] = C64::new(nr[k], ni[k]);
        }
    }
    let state = StateVector::from_amplitudes(n, psi)?;
    let ground = ground_level(model, None)?.expect("non-empty register");
    let p_gnd = ground
        .states
        .iter()
        .map(|&i| state.amplitude(i).norm_sqr())
        .sum();
    let norm_drift = (state.norm_sqr() - 1.0).abs();
    Ok(AnnealOutcome {
        state,
        p_gnd,
        norm_drift,
    })
}

/// Time to reach a solution with 99% confidence: `t_cycle · ln 0.01 / ln(1 - p_sol)`.
pub fn tts(p_sol: f64, t_cycle: f64) -> Result<f64> {
    if !(p_sol > 0.0 && p_sol < 1.0) {
        return Err(invalid(format!("success probability must lie in (0, 1), got {p_sol}")));
    }
    Ok(t_cycle * 0.01f64.ln() / (1.0 - p_sol).ln())
}

/// `prefactor · rms(J) · sqrt(mean couplings per spin)`, where the mean
/// counts each coupling at both ends (`2|E| / n`).
pub fn chain_strength(prefactor: f64, model: &IsingModel) -> Result<f64> {
    let edges = model.couplings().count();
    if edges == 0 {
        return Err(invalid("chain strength needs at least one coupling"));
    }
    let per_spin = 2.0 * edges as f64 / model.num_spins() as f64;
    Ok(prefactor * model.rms_coupling() * per_spin.sqrt())
}

/// Majority vote over each chain of physical qubits.
///
/// Exact ties are settled by a coin drawn from `derive_seed(seed, chain)`.
pub fn resolve_chain_majority(chains: &[Vec<usize>], physical: &[bool], seed: u64) -> Result<BitString> {
    let mut seen = vec![false; physical.len()];
    let mut logical = Vec::with_capacity(chains.len());
    for (c, chain) in chains.iter().enumerate() {
        if chain.is_empty() {
            return Err(invalid(format!("chain {c} is empty")));
        }
        let mut ones = 0usize;
        for &q in chain {
            if q >= physical.len() {
                return Err(Error::IndexOutOfRange {
                    index: q,
                    n: physical.len(),
                });
            }
            if std::mem::replace(&mut seen[q], true) {
                return Err(invalid(format!("physical qubit {q} appears in two chains")));
            }
            ones += physical[q] as usize;
        }
        let zeros = chain.len() - ones;
        let bit = match ones.cmp(&zeros) {
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Less => false,
            std::cmp::Ordering::Equal => rng_from_seed(derive_seed(seed, c as u64)).random::<bool>(),
        };
        logical.push(bit);
    }
    Ok(BitString::from_bools(logical))
}

/// Scores a multiset of reads against the feasible objective range.
pub fn score_reads<'a>(encoding: &Encoding, reads: impl IntoIterator<Item = &'a BitString>) -> RunMetrics {
    let (c_min, c_max) = encoding.feasible_objective_range();
    let objective = encoding.objective();
    let (mut total, mut feasible, mut ground, mut sum) = (0usize, 0usize, 0usize, 0.0);
    for bits in reads {
        total += 1;
        if !encoding.is_feasible_bits(bits) {
            continue;
        }
        let e = objective.energy_of_bits(bits).expect("sized read");
        feasible += 1;
        sum += e;
        if same_energy(e, c_min) {
            ground += 1;
        }
    }
    let frac = |k: usize| if total == 0 { 0.0 } else { k as f64 / total as f64 };
    let r_approx = if feasible == 0 {
        0.0
    } else if same_energy(c_min, c_max) {
        1.0
    } else {
        ((sum / feasible as f64 - c_max) / (c_min - c_max)).clamp(0.0, 1.0)
    };
    RunMetrics {
        r_approx,
        p_feas: frac(feasible),
        p_gnd: frac(ground),
        no_feasible_mass: feasible == 0,
    }
}

/// Source of reads for the sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sampler {
    /// Final states of Metropolis annealing on the model scaled to unit
    /// largest coefficient, mimicking a fixed hardware coupling range.
    SimAnneal(SimAnnealConfig),
    /// Measurements of the forward-anneal final state (small registers only).
    ToyDynamics(AnnealSchedule),
}

impl Sampler {
    pub fn label(&self) -> &'static str {
        match self {
            Self::SimAnneal(_) => "sim-anneal",
            Self::ToyDynamics(_) => "toy-dynamics",
        }
    }

    /// Draws `reads` bitstrings from the full encoded model.
    pub fn sample(&self, encoding: &Encoding, reads: usize, seed: u64, execution: Execution) -> Result<Vec<BitString>> {
        match self {
            Self::SimAnneal(cfg) => {
                cfg.validate()?;
                let model = encoding.model();
                let scale = model.max_abs_coefficient();
                let graph = if scale > 0.0 {
                    model.scaled(1.0 / scale).graph()
                } else {
                    model.graph()
                };
                Ok(map_indexed(reads, execution, |r| {
                    let (_, last) = anneal_walk(&graph, cfg, derive_seed(seed, r as u64));
                    BitString::from_bools(last)
                }))
            }
            Self::ToyDynamics(schedule) => {
                let outcome = simulate_forward_anneal(&encoding.model().to_ising(), schedule)?;
                let n = encoding.num_qubits();
                let counts = outcome.state.sample(reads, seed);
                Ok(counts
                    .counts
                    .iter()
                    .flat_map(|(&i, &c)| std::iter::repeat_n(BitString::from_index(i, n), c as usize))
                    .collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub lambda_ratio: f64,
    pub reads: usize,
    pub seed: u64,
    pub metrics: RunMetrics,
}

/// Re-encodes the problem at each penalty ratio and scores `reads` samples.
pub fn anneal_parameter_sweep(
    problem: &FacilityProblem,
    kind: EncodingKind,
    lambda_ratios: &[f64],
    sampler: &Sampler,
    reads: usize,
    seed: u64,
    execution: Execution,
) -> Result<Vec<SweepPoint>> {
    if reads == 0 {
        return Err(invalid("need at least one read"));
    }
    try_map_indexed(lambda_ratios.len(), Execution::Sequential, |k| {
        let ratio = lambda_ratios[k];
        let encoding = Encoding::build(&problem.clone().with_penalty(Penalty::Ratio(ratio)), kind)?;
        let point_seed = derive_seed(seed, k as u64);
        let samples = sampler.sample(&encoding, reads, point_seed, execution)?;
        Ok(SweepPoint {
            lambda_ratio: ratio,
            reads,
            seed: point_seed,
            metrics: score_reads(&encoding, &samples),
        })
    })
}
