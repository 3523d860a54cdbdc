//! End-to-end paths through the public API.

use vqo_core::baselines::{
    covering_penalty, exact_facility_optimum, simulated_annealing, tabu_search, SimAnnealConfig, TabuConfig,
};
use vqo_core::encoders::{presets, Encoding, EncodingKind, FacilityProblem, Geometry, Penalty};
use vqo_core::optimizers::{NelderMeadConfig, OptimizerConfig};
use vqo_core::qaoa::{random_restart_search, InitialState, Mixer, QaoaInstance, RestartConfig};
use vqo_core::{BitString, Execution, QuboModel};

#[test]
fn qaoa_ground_state_decodes_to_oracle_placement() {
    let enc = presets::problem_a(10.0).unwrap();
    let inst = QaoaInstance::new(&enc, Mixer::xy_full(enc.num_qubits()), InitialState::Dicke(4)).unwrap();
    let runs = random_restart_search(
        &inst,
        &RestartConfig {
            depth: 3,
            restarts: 5,
            optimizer: OptimizerConfig::NelderMead(NelderMeadConfig::default()),
            seed: 21,
            execution: Execution::Parallel,
        },
    )
    .unwrap();
    let best = runs.iter().min_by(|a, b| a.result.ev.total_cmp(&b.result.ev)).unwrap();
    let state = inst.state(&best.result.angles).unwrap();
    let (index, _) = state
        .amplitudes()
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm_sqr().total_cmp(&b.1.norm_sqr()))
        .unwrap();
    let bits = BitString::from_index(index as u64, enc.num_qubits());
    let placement = enc.decode(&bits).unwrap();
    let oracle = exact_facility_optimum(enc.problem()).unwrap();
    assert_eq!(placement.total_distance, oracle.d_min);
    assert!(oracle.placements.iter().any(|p| p.positions == placement.positions));
}

#[test]
fn restart_search_is_execution_independent() {
    let enc = presets::problem_a(20.0).unwrap();
    let inst = QaoaInstance::new(&enc, Mixer::X, InitialState::Uniform).unwrap();
    let cfg = |execution| RestartConfig {
        depth: 2,
        restarts: 6,
        optimizer: OptimizerConfig::default(),
        seed: 8,
        execution,
    };
    let par = random_restart_search(&inst, &cfg(Execution::Parallel)).unwrap();
    let seq = random_restart_search(&inst, &cfg(Execution::Sequential)).unwrap();
    assert_eq!(par, seq);
}

#[test]
fn qubo_text_round_trip_preserves_energies() {
    let enc = presets::problem_b(Penalty::Ratio(1.0)).unwrap();
    let model = enc.model();
    let back = QuboModel::from_text(&model.to_text()).unwrap();
    for index in 0..(1u64 << model.num_vars()) {
        let bits = BitString::from_index(index, model.num_vars());
        assert_eq!(model.energy_of_bits(&bits).unwrap(), back.energy_of_bits(&bits).unwrap());
    }
}

#[test]
fn tabu_matches_or_beats_annealing_on_six_by_six() {
    let problem = FacilityProblem::new(Geometry::Grid { rows: 6, cols: 6 }, 2);
    let lambda = covering_penalty(&problem).unwrap();
    let enc = Encoding::build(&problem.with_penalty(Penalty::Absolute(lambda)), EncodingKind::StartDest).unwrap();
    let sa_cfg = SimAnnealConfig::default();
    let tabu_cfg = TabuConfig::default();
    let trials = 20;
    let wins = (0..trials)
        .filter(|&k| {
            let t = tabu_search(enc.model(), &tabu_cfg, k).unwrap();
            let s = simulated_annealing(enc.model(), &sa_cfg, k).unwrap();
            t.energy <= s.energy + 1e-9
        })
        .count();
    assert!(wins * 2 > trials as usize, "tabu no worse in {wins}/{trials}");
}
