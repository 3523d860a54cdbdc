//! CSV column layouts. `--help` prints these same constants.

pub const ORACLE: &[&str] = &["geometry", "ambulances", "metric", "d_min", "optimal_placements", "positions"];

pub const QAOA_RUNS: &[&str] = &[
    "run_id",
    "seed",
    "depth",
    "mixer",
    "init",
    "ev",
    "r_approx",
    "p_feas",
    "p_gnd",
    "evaluations",
    "angles",
];

pub const QAOA_SCHEDULE: &[&str] = &[
    "strategy",
    "depth",
    "ev",
    "r_approx",
    "p_feas",
    "p_gnd",
    "evaluations",
    "angles",
];

pub const VQE_RUNS: &[&str] = &[
    "run_id",
    "seed",
    "estimator",
    "shots",
    "ev",
    "r_approx",
    "p_feas",
    "p_gnd",
    "evaluations",
    "theta",
];

pub const BASELINE: &[&str] = &["grid", "algorithm", "restarts", "best", "frequency", "d_min", "ratio"];

pub const ANNEAL_SWEEP: &[&str] = &["lambda_ratio", "p_gnd", "p_feas", "r_approx", "reads", "seed"];

pub const ANNEAL_TIME: &[&str] = &["anneal_time", "p_gnd", "p_feas", "r_approx", "reads", "seed"];

pub const TTS: &[&str] = &["p_sol", "t_cycle", "tts"];

pub const SUMMARY: &[&str] = &[
    "metric",
    "count",
    "mean",
    "err_2sd",
    "min",
    "max",
    "freq_of_best",
    "best_run",
];

/// Marks the aggregate row appended after per-run rows.
pub const SUMMARY_ROW: &str = "summary";

pub fn describe(layouts: &[(&str, &[&str])]) -> String {
    let mut out = String::from("CSV output:\n");
    for (label, cols) in layouts {
        out.push_str(&format!("  {label} columns: {}\n", cols.join(",")));
    }
    out
}
