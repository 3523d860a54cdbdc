//! Classical references for the facility problem: an exact enumeration
//! oracle and two single-flip local-search heuristics with restart statistics.

use std::fmt;

use itertools::Itertools;
use rand::Rng;

use crate::bits::BitString;
use crate::encoders::{Encoding, FacilityProblem, Placement};
use crate::error::{check_capacity, invalid, Result};
use crate::exec::{try_map_indexed, Execution};
use crate::ising::{same_energy, QuboGraph, QuboModel};
use crate::stats::{derive_seed, rng_from_seed};

/// Largest node count accepted by [`exact_facility_optimum`].
pub const MAX_ORACLE_NODES: usize = 1000;

/// Exact minimum of the total service distance and every placement that attains it.
#[derive(Debug, Clone, PartialEq)]
pub struct FacilityOptimum {
    pub d_min: f64,
    pub placements: Vec<Placement>,
}

/// Enumerates every set of distinct ambulance positions.
///
/// Each node is served by its nearest chosen position; ties go to the
/// lower position index.
pub fn exact_facility_optimum(problem: &FacilityProblem) -> Result<FacilityOptimum> {
    let l = problem.num_nodes();
    let m = problem.ambulances;
    check_capacity("nodes for exact oracle", l, MAX_ORACLE_NODES)?;
    if m == 0 || m > l {
        return Err(invalid(format!("cannot place {m} ambulances on {l} nodes")));
    }
    let d = problem.distances();
    let mut best = f64::INFINITY;
    let mut winners: Vec<Vec<usize>> = Vec::new();
    for combo in (0..l).combinations(m) {
        let cost = d.service_cost(&combo);
        if best.is_finite() && same_energy(cost, best) {
            winners.push(combo);
        } else if cost < best {
            best = cost;
            winners = vec![combo];
        }
    }
    let placements = winners
        .into_iter()
        .map(|positions| nearest_placement(&d, positions))
        .collect();
    Ok(FacilityOptimum {
        d_min: best,
        placements,
    })
}

fn nearest_placement(d: &crate::encoders::DistanceMatrix, positions: Vec<usize>) -> Placement {
    let assignments: Vec<usize> = (0..d.len())
        .map(|node| {
            (0..positions.len())
                .min_by(|&a, &b| {
                    d.get(positions[a], node)
                        .total_cmp(&d.get(positions[b], node))
                        .then(positions[a].cmp(&positions[b]))
                })
                .expect("non-empty placement")
        })
        .collect();
    let total_distance = assignments
        .iter()
        .enumerate()
        .map(|(node, &a)| d.get(positions[a], node))
        .sum();
    Placement {
        positions,
        assignments,
        total_distance,
    }
}

/// Smallest integer-step penalty weight that makes every QUBO minimiser of
/// the start/destination layout feasible: one more than the best
/// single-site service cost.
///
/// With a smaller weight an ambulance left without a start position serves
/// nodes for free and undercuts every feasible placement.
pub fn covering_penalty(problem: &FacilityProblem) -> Result<f64> {
    check_capacity("nodes for exact oracle", problem.num_nodes(), MAX_ORACLE_NODES)?;
    let d = problem.distances();
    let one_site = (0..problem.num_nodes())
        .map(|i| d.service_cost(&[i]))
        .fold(f64::INFINITY, f64::min);
    Ok(one_site + 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimAnnealConfig {
    pub sweeps: usize,
    pub beta_initial: f64,
    pub beta_final: f64,
}

impl Default for SimAnnealConfig {
    fn default() -> Self {
        Self {
            sweeps: 1000,
            beta_initial: 0.1,
            beta_final: 10.0,
        }
    }
}

impl SimAnnealConfig {
    /// Inverse temperature of sweep `k`, geometric from initial to final.
    pub fn beta(&self, k: usize) -> f64 {
        if self.sweeps <= 1 {
            return self.beta_final;
        }
        let frac = k as f64 / (self.sweeps - 1) as f64;
        self.beta_initial * (self.beta_final / self.beta_initial).powf(frac)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sweeps == 0 {
            return Err(invalid("annealing needs at least one sweep"));
        }
        if !(self.beta_initial > 0.0 && self.beta_final > self.beta_initial) {
            return Err(invalid(format!(
                "need 0 < beta_initial < beta_final, got {} and {}",
                self.beta_initial, self.beta_final
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TabuConfig {
    /// `None` uses `max(10, n / 4)`.
    pub tenure: Option<usize>,
    pub max_iter: usize,
}

impl Default for TabuConfig {
    fn default() -> Self {
        Self {
            tenure: None,
            max_iter: 1000,
        }
    }
}

impl TabuConfig {
    pub fn tenure_for(&self, n: usize) -> usize {
        self.tenure.unwrap_or_else(|| (n / 4).max(10))
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(invalid("tabu search needs at least one iteration"));
        }
        if self.tenure == Some(0) {
            return Err(invalid("tabu tenure must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HeuristicConfig {
    SimAnneal(SimAnnealConfig),
    Tabu(TabuConfig),
}

impl HeuristicConfig {
    pub fn name(&self) -> &'static str {
        match self {
            Self::SimAnneal(_) => "simulated-annealing",
            Self::Tabu(_) => "tabu",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::SimAnneal(c) => c.validate(),
            Self::Tabu(c) => c.validate(),
        }
    }
}

impl fmt::Display for HeuristicConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Best state seen by a heuristic run.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub bits: BitString,
    pub energy: f64,
}

pub fn simulated_annealing(model: &QuboModel, cfg: &SimAnnealConfig, seed: u64) -> Result<Solution> {
    cfg.validate()?;
    Ok(anneal_graph(&model.graph(), cfg, seed))
}

pub fn tabu_search(model: &QuboModel, cfg: &TabuConfig, seed: u64) -> Result<Solution> {
    cfg.validate()?;
    Ok(tabu_graph(&model.graph(), cfg, seed))
}

pub(crate) fn run_heuristic(graph: &QuboGraph, cfg: &HeuristicConfig, seed: u64) -> Solution {
    match cfg {
        HeuristicConfig::SimAnneal(c) => anneal_graph(graph, c, seed),
        HeuristicConfig::Tabu(c) => tabu_graph(graph, c, seed),
    }
}

fn random_state(n: usize, rng: &mut impl Rng) -> Vec<bool> {
    (0..n).map(|_| rng.random::<bool>()).collect()
}

pub(crate) fn anneal_graph(graph: &QuboGraph, cfg: &SimAnnealConfig, seed: u64) -> Solution {
    let (best, _) = anneal_walk(graph, cfg, seed);
    Solution {
        energy: graph.energy(&best),
        bits: BitString::from_bools(best),
    }
}

/// Metropolis sweeps from a random state; returns the best-seen and the final state.
pub(crate) fn anneal_walk(graph: &QuboGraph, cfg: &SimAnnealConfig, seed: u64) -> (Vec<bool>, Vec<bool>) {
    let n = graph.num_vars();
    let mut rng = rng_from_seed(seed);
    let mut s = random_state(n, &mut rng);
    let mut field = graph.local_fields(&s);
    let mut energy = graph.energy(&s);
    let mut best = (energy, s.clone());
    for k in 0..cfg.sweeps {
        let beta = cfg.beta(k);
        for i in 0..n {
            let delta = QuboGraph::flip_delta(&field, &s, i);
            if delta <= 0.0 || rng.random::<f64>() < (-beta * delta).exp() {
                graph.apply_flip(&mut field, &mut s, i);
                energy += delta;
                if energy < best.0 {
                    best = (energy, s.clone());
                }
            }
        }
    }
    (best.1, s)
}

pub(crate) fn tabu_graph(graph: &QuboGraph, cfg: &TabuConfig, seed: u64) -> Solution {
    let n = graph.num_vars();
    let mut rng = rng_from_seed(seed);
    let mut s = random_state(n, &mut rng);
    if n == 0 {
        return Solution {
            energy: graph.energy(&s),
            bits: BitString::from_bools(s),
        };
    }
    let tenure = cfg.tenure_for(n);
    let mut field = graph.local_fields(&s);
    let mut energy = graph.energy(&s);
    let mut best = (energy, s.clone());
    let mut tabu_until = vec![0usize; n];
    for iter in 1..=cfg.max_iter {
        // Best admissible move, falling back to the best tabu move.
        let mut chosen: Option<(f64, usize)> = None;
        let mut fallback: Option<(f64, usize)> = None;
        let mut ties = 0u32;
        for (i, &until) in tabu_until.iter().enumerate() {
            let delta = QuboGraph::flip_delta(&field, &s, i);
            let admissible = until < iter || energy + delta < best.0 - 1e-12;
            if !admissible {
                if fallback.is_none_or(|(d, _)| delta < d) {
                    fallback = Some((delta, i));
                }
                continue;
            }
            match chosen {
                Some((d, _)) if delta > d => {}
                Some((d, _)) if delta == d => {
                    ties += 1;
                    if rng.random_range(0..=ties) == 0 {
                        chosen = Some((delta, i));
                    }
                }
                _ => {
                    ties = 0;
                    chosen = Some((delta, i));
                }
            }
        }
        let (delta, i) = chosen.or(fallback).expect("n > 0");
        graph.apply_flip(&mut field, &mut s, i);
        energy += delta;
        tabu_until[i] = iter + tenure;
        if energy < best.0 {
            best = (energy, s.clone());
        }
    }
    Solution {
        energy: graph.energy(&best.1),
        bits: BitString::from_bools(best.1),
    }
}

/// Outcome of one seeded heuristic run on an encoded facility problem.
#[derive(Debug, Clone, PartialEq)]
pub struct HeuristicRun {
    pub run_id: usize,
    pub seed: u64,
    pub energy: f64,
    /// Service distance of the decoded placement; `None` if infeasible.
    pub distance: Option<f64>,
}

/// Aggregate over restarts, reported against the exact oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct HeuristicSummary {
    pub algorithm: &'static str,
    pub restarts: usize,
    pub feasible_runs: usize,
    /// Smallest decoded distance over feasible runs.
    pub best: Option<f64>,
    /// Fraction of all runs reaching `best`.
    pub frequency: f64,
    pub d_min: f64,
    /// `best / d_min`.
    pub ratio: Option<f64>,
    pub runs: Vec<HeuristicRun>,
}

pub struct RestartPlan {
    pub heuristic: HeuristicConfig,
    pub restarts: usize,
    pub seed: u64,
    pub execution: Execution,
}

/// Runs seeded restarts on the full encoded model and scores decoded placements.
pub fn restart_harness(encoding: &Encoding, plan: &RestartPlan, d_min: f64) -> Result<HeuristicSummary> {
    plan.heuristic.validate()?;
    if plan.restarts == 0 {
        return Err(invalid("need at least one restart"));
    }
    let graph = encoding.model().graph();
    let runs = try_map_indexed(plan.restarts, plan.execution, |run_id| -> Result<HeuristicRun> {
        let seed = derive_seed(plan.seed, run_id as u64);
        let sol = run_heuristic(&graph, &plan.heuristic, seed);
        let distance = encoding.decode(&sol.bits).ok().map(|p| p.total_distance);
        Ok(HeuristicRun {
            run_id,
            seed,
            energy: sol.energy,
            distance,
        })
    })?;
    let feasible: Vec<f64> = runs.iter().filter_map(|r| r.distance).collect();
    let best = feasible.iter().copied().reduce(f64::min);
    let hits = best.map_or(0, |b| feasible.iter().filter(|&&d| same_energy(d, b)).count());
    Ok(HeuristicSummary {
        algorithm: plan.heuristic.name(),
        restarts: plan.restarts,
        feasible_runs: feasible.len(),
        best,
        frequency: hits as f64 / plan.restarts as f64,
        d_min,
        ratio: best.map(|b| b / d_min),
        runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoders::{presets, Geometry, Penalty};
    use crate::ising::enumerate_spectrum;
    use proptest::prelude::*;

    fn grid(side: usize) -> FacilityProblem {
        FacilityProblem::new(
            Geometry::Grid {
                rows: side,
                cols: side,
            },
            2,
        )
    }

    fn four_var() -> QuboModel {
        let mut q = QuboModel::new(4);
        for (i, c) in [(0, -3.0), (1, 2.0), (2, -1.0), (3, 1.5)] {
            q.add_linear(i, c).unwrap();
        }
        q.add_quadratic(0, 1, -4.0).unwrap();
        q.add_quadratic(1, 2, 3.0).unwrap();
        q.add_quadratic(2, 3, -2.5).unwrap();
        q.add_quadratic(0, 3, 1.0).unwrap();
        q
    }

    #[test]
    fn line_of_four_oracle() {
        let opt = exact_facility_optimum(&FacilityProblem::new(Geometry::Line { nodes: 4 }, 2)).unwrap();
        assert_eq!(opt.d_min, 2.0);
        assert!(opt.placements.iter().all(|p| p.total_distance == 2.0));
    }

    #[test]
    fn small_grid_oracles() {
        assert_eq!(exact_facility_optimum(&grid(5)).unwrap().d_min, 65.0);
        assert_eq!(exact_facility_optimum(&grid(6)).unwrap().d_min, 134.0);
    }

    #[test]
    fn covering_penalty_makes_ground_feasible() {
        let line = FacilityProblem::new(Geometry::Line { nodes: 4 }, 2);
        let lambda = covering_penalty(&line).unwrap();
        assert_eq!(lambda, 7.0);
        for (lam, feasible) in [(lambda, true), (1.5, false)] {
            let enc = crate::encoders::encode_start_dest(
                &line.clone().with_penalty(Penalty::Absolute(lam)),
            )
            .unwrap();
            let ground = enumerate_spectrum(enc.model(), None).unwrap().remove(0);
            assert_eq!(
                ground.states.iter().all(|&i| enc.is_feasible(i)),
                feasible,
                "lambda {lam}"
            );
        }
    }

    #[test]
    fn oracle_rejects_oversized_grid() {
        assert!(exact_facility_optimum(&grid(32)).is_err());
    }

    #[test]
    fn annealing_finds_four_var_minimum() {
        let q = four_var();
        let spectrum = enumerate_spectrum(&q, None).unwrap();
        assert_eq!(spectrum[0].states.len(), 1);
        let hits = (0..100)
            .filter(|&s| {
                let sol = simulated_annealing(&q, &SimAnnealConfig::default(), s).unwrap();
                same_energy(sol.energy, spectrum[0].energy)
            })
            .count();
        assert!(hits >= 95, "{hits}");
    }

    #[test]
    fn zero_model_returns_offset() {
        let mut q = QuboModel::new(3);
        q.add_offset(2.5);
        let sol = simulated_annealing(&q, &SimAnnealConfig::default(), 1).unwrap();
        assert_eq!(sol.energy, 2.5);
        assert_eq!(tabu_search(&q, &TabuConfig::default(), 1).unwrap().energy, 2.5);
    }

    #[test]
    fn single_variable_tabu_takes_one_move() {
        let mut q = QuboModel::new(1);
        q.add_linear(0, -1.0).unwrap();
        let cfg = TabuConfig {
            tenure: None,
            max_iter: 1,
        };
        for seed in 0..10 {
            assert_eq!(tabu_search(&q, &cfg, seed).unwrap().energy, -1.0);
        }
    }

    #[test]
    fn invalid_schedules_are_rejected() {
        let bad = SimAnnealConfig {
            beta_final: 0.05,
            ..Default::default()
        };
        assert!(simulated_annealing(&four_var(), &bad, 0).is_err());
        let cold = SimAnnealConfig {
            sweeps: 0,
            ..Default::default()
        };
        assert!(cold.validate().is_err());
    }

    #[test]
    fn harness_exact_hit_has_unit_ratio() {
        let enc = presets::problem_b(Penalty::default()).unwrap();
        let plan = RestartPlan {
            heuristic: HeuristicConfig::Tabu(TabuConfig::default()),
            restarts: 20,
            seed: 3,
            execution: Execution::Sequential,
        };
        let s = restart_harness(&enc, &plan, 2.0).unwrap();
        assert_eq!(s.best, Some(2.0));
        assert_eq!(s.ratio, Some(1.0));
        assert!(s.frequency > 0.0);
    }

    #[test]
    fn harness_is_deterministic_across_execution_modes() {
        let enc = presets::problem_b(Penalty::default()).unwrap();
        let plan = |execution| RestartPlan {
            heuristic: HeuristicConfig::SimAnneal(SimAnnealConfig {
                sweeps: 50,
                ..Default::default()
            }),
            restarts: 8,
            seed: 11,
            execution,
        };
        let a = restart_harness(&enc, &plan(Execution::Parallel), 2.0).unwrap();
        let b = restart_harness(&enc, &plan(Execution::Sequential), 2.0).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn heuristic_energy_is_consistent_and_bounded(
            coeffs in prop::collection::vec(-5.0f64..5.0, 10),
            seed in any::<u64>(),
        ) {
            let mut q = QuboModel::new(4);
            for (i, &c) in coeffs[..4].iter().enumerate() {
                q.add_linear(i, c).unwrap();
            }
            for (k, (i, j)) in (0..4).tuple_combinations().enumerate() {
                q.add_quadratic(i, j, coeffs[4 + k]).unwrap();
            }
            let floor = enumerate_spectrum(&q, None).unwrap()[0].energy;
            let cfg_sa = SimAnnealConfig { sweeps: 20, ..Default::default() };
            for sol in [
                simulated_annealing(&q, &cfg_sa, seed).unwrap(),
                tabu_search(&q, &TabuConfig { tenure: Some(2), max_iter: 20 }, seed).unwrap(),
            ] {
                prop_assert!((sol.energy - q.energy_of_bits(&sol.bits).unwrap()).abs() < 1e-9);
                prop_assert!(sol.energy >= floor - 1e-9);
            }
        }
    }
}
