//! Experiment drivers behind each subcommand.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde_json::{json, Value};
use vqo_core::anneal::{
    anneal_parameter_sweep, simulate_forward_anneal, simulate_reverse_anneal, tts, AnnealSchedule,
    Sampler,
};
use vqo_core::baselines::{
    covering_penalty, exact_facility_optimum, restart_harness, HeuristicConfig, RestartPlan,
    SimAnnealConfig, TabuConfig,
};
use vqo_core::encoders::{encode_position_linear, Encoding, EncodingKind, FacilityProblem, Metric, Penalty};
use vqo_core::metrics::{FeasibleSet, RunMetrics};
use vqo_core::optimizers::{NelderMeadConfig, OptimizerConfig, QuasiNewtonConfig, SpsaConfig};
use vqo_core::qaoa::{
    gain_decomposition, increasing_p_schedule, random_restart_search, AngleScheme, Evaluated,
    GainInputs, InitialState, Mixer, QaoaInstance, RestartConfig, RestartSummary, Strategy,
};
use vqo_core::stats::MeanError;
use vqo_core::vqe::{vqe_restart_search, Estimator, HardwareEfficientAnsatz, VqeConfig};
use vqo_core::{BitString, Execution};

use crate::config::{Config, Section};
use crate::schema;

/// Shared inputs of every subcommand.
pub struct RunContext {
    pub config: Config,
    pub seed: u64,
    pub out: PathBuf,
    pub execution: Execution,
}

/// What a command produced, for the manifest.
#[derive(Default)]
pub struct Report {
    pub outputs: Vec<PathBuf>,
    pub extra: BTreeMap<String, Value>,
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

fn joined(xs: &[f64]) -> String {
    xs.iter().map(f64::to_string).collect::<Vec<_>>().join(";")
}

fn metric_cells(m: &RunMetrics) -> [String; 3] {
    [m.r_approx.to_string(), m.p_feas.to_string(), m.p_gnd.to_string()]
}

/// Preset shapes for the benchmark instances; explicit keys override them.
fn preset_pairs(name: &str) -> Result<&'static [(&'static str, &'static str)]> {
    Ok(match name.to_ascii_lowercase().as_str() {
        "a" => &[("geometry", "line"), ("nodes", "5"), ("ambulances", "1"), ("encoding", "complement-single")],
        "b" => &[("geometry", "line"), ("nodes", "4"), ("ambulances", "2"), ("encoding", "start-dest")],
        "c" => &[("geometry", "line"), ("nodes", "8"), ("ambulances", "2"), ("encoding", "position-linear")],
        other => bail!("unknown preset {other:?}; expected a, b or c"),
    })
}

fn problem_pairs<'a>(sec: &Section<'a>) -> Result<Vec<(&'a str, &'a str)>> {
    let mut pairs: Vec<(&str, &str)> = match sec.raw("preset") {
        Some(p) => preset_pairs(p)?.to_vec(),
        None => Vec::new(),
    };
    pairs.extend(sec.pairs());
    Ok(pairs)
}

pub fn problem_from(cfg: &Config) -> Result<(FacilityProblem, EncodingKind, bool)> {
    let sec = cfg.section("problem");
    let pairs = problem_pairs(&sec)?;
    let problem = FacilityProblem::from_key_values(pairs.iter().copied())?;
    let kind = match pairs.iter().rev().find(|(k, _)| *k == "encoding") {
        Some((_, v)) => v.parse()?,
        None if problem.ambulances == 1 => EncodingKind::ComplementSingle,
        None => EncodingKind::StartDest,
    };
    let cardinality = sec.get_or("cardinality_penalty", true)?;
    Ok((problem, kind, cardinality))
}

fn penalty_configured(cfg: &Config) -> bool {
    let sec = cfg.section("problem");
    sec.contains("lambda") || sec.contains("lambda_ratio")
}

fn build_encoding(problem: &FacilityProblem, kind: EncodingKind, cardinality: bool) -> Result<Encoding> {
    Ok(match kind {
        EncodingKind::PositionLinear => encode_position_linear(problem, cardinality)?,
        _ => Encoding::build(problem, kind)?,
    })
}

pub fn encoding_from(cfg: &Config) -> Result<Encoding> {
    let (problem, kind, cardinality) = problem_from(cfg)?;
    build_encoding(&problem, kind, cardinality)
}

fn metric_label(m: Metric) -> &'static str {
    match m {
        Metric::SquaredEuclidean => "squared-euclidean",
        Metric::Euclidean => "euclidean",
        Metric::Manhattan => "manhattan",
    }
}

pub fn optimizer_from(cfg: &Config) -> Result<OptimizerConfig> {
    let sec = cfg.section("optimizer");
    let method = sec.get_or("method", "nelder-mead".to_string())?;
    Ok(match method.as_str() {
        "nelder-mead" | "nm" => {
            let d = NelderMeadConfig::default();
            OptimizerConfig::NelderMead(NelderMeadConfig {
                max_iter: sec.get_or("max_iter", d.max_iter)?,
                max_evals: sec.get_or("max_evals", d.max_evals)?,
                f_tol: sec.get_or("f_tol", d.f_tol)?,
                x_tol: sec.get_or("x_tol", d.x_tol)?,
                initial_step: sec.get_or("initial_step", d.initial_step)?,
            })
        }
        "spsa" => {
            let d = SpsaConfig::default();
            OptimizerConfig::Spsa(SpsaConfig {
                a: sec.get_or("a", d.a)?,
                c: sec.get_or("c", d.c)?,
                n_iter: sec.get_or("n_iter", d.n_iter)?,
                alpha: sec.get_or("alpha", d.alpha)?,
                gamma: sec.get_or("gamma", d.gamma)?,
            })
        }
        "quasi-newton" | "fd-quasi-newton" => {
            let d = QuasiNewtonConfig::default();
            OptimizerConfig::FdQuasiNewton(QuasiNewtonConfig {
                epsilon: sec.get_or("epsilon", d.epsilon)?,
                max_iter: sec.get_or("max_iter", d.max_iter)?,
                grad_tol: sec.get_or("grad_tol", d.grad_tol)?,
            })
        }
        other => bail!("unknown optimizer method {other:?}"),
    })
}

fn scheme_from(sec: &Section<'_>) -> Result<AngleScheme> {
    match sec.list::<usize>("scheme")?.as_deref() {
        None => Ok(AngleScheme::SHARED),
        Some([b, g]) => Ok(AngleScheme::new(*b, *g)?),
        Some(other) => bail!("scheme needs two numbers, got {other:?}"),
    }
}

fn qaoa_instance(cfg: &Config, enc: &Encoding) -> Result<QaoaInstance> {
    let sec = cfg.section("qaoa");
    let mixer_name = sec.get_or("mixer", "x".to_string())?;
    let mixer = match mixer_name.as_str() {
        "x" => Mixer::X,
        "xy" => Mixer::xy_full(enc.num_qubits()),
        "3xy" => Mixer::three_xy(enc, scheme_from(&sec)?)?,
        other => bail!("unknown mixer {other:?}; expected x, xy or 3xy"),
    };
    let default_init = match mixer {
        Mixer::X => "uniform",
        Mixer::Xy { .. } => "dicke",
        Mixer::ThreeXy { .. } => "dicke-blocks",
    };
    let init = match sec.get_or("init", default_init.to_string())?.as_str() {
        "uniform" => InitialState::Uniform,
        "dicke" => {
            let k = match sec.get::<usize>("dicke")? {
                Some(k) => k,
                None => enc
                    .hamming_targets()
                    .first()
                    .map(|t| t.weight)
                    .context("encoding has no Hamming target; set dicke = k")?,
            };
            InitialState::Dicke(k)
        }
        "dicke-blocks" => InitialState::DickeBlocks,
        "basis" => InitialState::Basis(
            sec.get::<BitString>("basis")?
                .context("init = basis needs basis = <bitstring>")?,
        ),
        other => bail!("unknown initial state {other:?}"),
    };
    Ok(QaoaInstance::new(enc, mixer, init)?)
}

fn evaluated_row(label: String, e: &Evaluated) -> Vec<String> {
    let [r, f, g] = metric_cells(&e.metrics);
    vec![
        label,
        e.angles.depth().to_string(),
        e.ev.to_string(),
        r,
        f,
        g,
        e.evaluations.to_string(),
        joined(&e.angles.to_vec()),
    ]
}

fn mean_error_json(m: &MeanError) -> Value {
    json!({ "mean": m.mean, "err_2sd": m.error(), "min": m.min, "max": m.max, "count": m.count })
}

pub fn run_qaoa(ctx: &RunContext) -> Result<Report> {
    let enc = encoding_from(&ctx.config)?;
    let inst = qaoa_instance(&ctx.config, &enc)?;
    let sec = ctx.config.section("qaoa");
    let optimizer = optimizer_from(&ctx.config)?;
    let depth = sec.get_or("depth", 1usize)?;
    let restarts = sec.get_or("restarts", 10usize)?;
    let runs = random_restart_search(
        &inst,
        &RestartConfig {
            depth,
            restarts,
            optimizer,
            seed: ctx.seed,
            execution: ctx.execution,
        },
    )?;
    let summary = RestartSummary::from_runs(&runs).context("no restarts requested")?;
    let mut report = Report::default();
    report.extra.insert("ev".into(), mean_error_json(&summary.ev));
    report.extra.insert("p_gnd".into(), mean_error_json(&summary.p_gnd));
    report.extra.insert("best_run".into(), json!(summary.best_run));
    report.extra.insert("num_qubits".into(), json!(inst.num_qubits()));

    let strategies: Option<Vec<String>> = sec.list("strategy")?;
    match strategies {
        None => {
            let mixer = inst.mixer().label();
            let init = inst.initial_state_kind().label();
            let mut rows: Vec<Vec<String>> = runs
                .iter()
                .map(|r| {
                    let [ra, f, g] = metric_cells(&r.result.metrics);
                    vec![
                        r.run_id.to_string(),
                        r.seed.to_string(),
                        depth.to_string(),
                        mixer.clone(),
                        init.clone(),
                        r.result.ev.to_string(),
                        ra,
                        f,
                        g,
                        r.result.evaluations.to_string(),
                        joined(&r.result.angles.to_vec()),
                    ]
                })
                .collect();
            let evals: Vec<f64> = runs.iter().map(|r| r.result.evaluations as f64).collect();
            rows.push(vec![
                schema::SUMMARY_ROW.into(),
                ctx.seed.to_string(),
                depth.to_string(),
                mixer,
                init,
                summary.ev.mean.to_string(),
                summary.r_approx.mean.to_string(),
                summary.p_feas.mean.to_string(),
                summary.p_gnd.mean.to_string(),
                MeanError::from_samples(&evals).expect("non-empty").mean.to_string(),
                format!("best_run={}", summary.best_run),
            ]);
            write_csv(&ctx.out, schema::QAOA_RUNS, &rows)?;
        }
        Some(names) => {
            let max_depth = sec.get_or("max_depth", 10usize)?;
            let chosen: Vec<Strategy> = if names.iter().any(|n| n == "all") {
                Strategy::ALL.to_vec()
            } else {
                names.iter().map(|n| n.parse()).collect::<vqo_core::Result<_>>()?
            };
            let seed_run = &runs[summary.best_run].result;
            let mut rows = Vec::new();
            let mut best_final: Option<Evaluated> = None;
            for (k, strategy) in chosen.iter().enumerate() {
                let levels = increasing_p_schedule(
                    &inst,
                    *strategy,
                    &seed_run.angles,
                    max_depth,
                    &optimizer,
                    vqo_core::stats::derive_seed(ctx.seed, 1_000_000 + k as u64),
                )?;
                rows.extend(levels.iter().map(|e| evaluated_row(strategy.to_string(), e)));
                let last = levels.last().expect("non-empty").clone();
                if best_final.as_ref().is_none_or(|b| last.ev < b.ev) {
                    best_final = Some(last);
                }
            }
            write_csv(&ctx.out, schema::QAOA_SCHEDULE, &rows)?;
            let final_state = best_final.expect("at least one strategy");
            match gain_decomposition(&GainInputs {
                uniform: inst.uniform_metrics()?,
                initial: inst.initial_metrics(),
                seed: seed_run.metrics,
                final_state: final_state.metrics,
            }) {
                Ok(g) => {
                    report.extra.insert(
                        "gains".into(),
                        json!({
                            "mixer": g.mixer, "seed": g.seed, "feasible": g.feasible,
                            "approx": g.approx, "mix": g.mix, "overall": g.overall,
                        }),
                    );
                }
                Err(e) => {
                    report.extra.insert("gains".into(), json!(format!("undefined: {e}")));
                }
            }
        }
    }
    report.outputs.push(ctx.out.clone());
    Ok(report)
}

pub fn run_vqe(ctx: &RunContext) -> Result<Report> {
    let enc = encoding_from(&ctx.config)?;
    let sec = ctx.config.section("vqe");
    let ansatz = HardwareEfficientAnsatz::new(
        enc.num_qubits(),
        sec.get_or("initial_layer", false)?,
        sec.get_or("layers", 1usize)?,
    )?;
    let shots = sec.get_or("shots", 1000usize)?;
    let estimator = match sec.get_or("estimator", "sv".to_string())?.as_str() {
        "sv" | "statevector" => Estimator::Statevector,
        "sample" | "sampling" => Estimator::Sampling { shots },
        "cone" => Estimator::Cone { shots },
        other => bail!("unknown estimator {other:?}; expected sv, sample or cone"),
    };
    let restarts = sec.get_or("restarts", 10usize)?;
    let runs = vqe_restart_search(
        &ansatz,
        &enc,
        &VqeConfig {
            restarts,
            optimizer: optimizer_from(&ctx.config)?,
            estimator,
            seed: ctx.seed,
            execution: ctx.execution,
        },
    )?;
    if runs.is_empty() {
        bail!("no restarts requested");
    }
    let col = |f: &dyn Fn(&vqo_core::vqe::VqeRun) -> f64| {
        MeanError::from_samples(&runs.iter().map(f).collect::<Vec<_>>()).expect("non-empty")
    };
    let best = runs
        .iter()
        .min_by(|a, b| a.ev.total_cmp(&b.ev))
        .expect("non-empty");
    let mut rows: Vec<Vec<String>> = runs
        .iter()
        .map(|r| {
            let [ra, f, g] = metric_cells(&r.metrics);
            vec![
                r.run_id.to_string(),
                r.seed.to_string(),
                estimator.label().into(),
                estimator.shots().to_string(),
                r.ev.to_string(),
                ra,
                f,
                g,
                r.evaluations.to_string(),
                joined(&r.theta),
            ]
        })
        .collect();
    let p_gnd = col(&|r| r.metrics.p_gnd);
    rows.push(vec![
        schema::SUMMARY_ROW.into(),
        ctx.seed.to_string(),
        estimator.label().into(),
        estimator.shots().to_string(),
        col(&|r| r.ev).mean.to_string(),
        col(&|r| r.metrics.r_approx).mean.to_string(),
        col(&|r| r.metrics.p_feas).mean.to_string(),
        p_gnd.mean.to_string(),
        col(&|r| r.evaluations as f64).mean.to_string(),
        format!("best_run={}", best.run_id),
    ]);
    write_csv(&ctx.out, schema::VQE_RUNS, &rows)?;
    let mut report = Report::default();
    report.extra.insert("num_params".into(), json!(ansatz.num_params()));
    report.extra.insert("p_gnd".into(), mean_error_json(&p_gnd));
    report.outputs.push(ctx.out.clone());
    Ok(report)
}

pub fn run_oracle(ctx: &RunContext) -> Result<Report> {
    let (problem, _, _) = problem_from(&ctx.config)?;
    let opt = exact_facility_optimum(&problem)?;
    let positions = opt
        .placements
        .iter()
        .map(|p| p.positions.iter().map(usize::to_string).collect::<Vec<_>>().join(" "))
        .collect::<Vec<_>>()
        .join(";");
    write_csv(
        &ctx.out,
        schema::ORACLE,
        &[vec![
            problem.geometry.to_string(),
            problem.ambulances.to_string(),
            metric_label(problem.metric).into(),
            opt.d_min.to_string(),
            opt.placements.len().to_string(),
            positions,
        ]],
    )?;
    let mut report = Report::default();
    report.extra.insert("d_min".into(), json!(opt.d_min));
    report.outputs.push(ctx.out.clone());
    Ok(report)
}

fn sim_anneal_from(sec: &Section<'_>) -> Result<SimAnnealConfig> {
    let d = SimAnnealConfig::default();
    Ok(SimAnnealConfig {
        sweeps: sec.get_or("sweeps", d.sweeps)?,
        beta_initial: sec.get_or("beta_initial", d.beta_initial)?,
        beta_final: sec.get_or("beta_final", d.beta_final)?,
    })
}

pub fn run_baseline(ctx: &RunContext) -> Result<Report> {
    let (problem, kind, cardinality) = problem_from(&ctx.config)?;
    let mut report = Report::default();
    let problem = if penalty_configured(&ctx.config) {
        problem
    } else {
        let lambda = covering_penalty(&problem)?;
        report.extra.insert("lambda_default".into(), json!(lambda));
        problem.with_penalty(Penalty::Absolute(lambda))
    };
    let enc = build_encoding(&problem, kind, cardinality)?;
    let d_min = exact_facility_optimum(&problem)?.d_min;
    let sec = ctx.config.section("baseline");
    let names: Vec<String> = sec.list("heuristic")?.unwrap_or_else(|| vec!["tabu".into()]);
    let restarts = sec.get_or("restarts", 100usize)?;
    let mut rows = Vec::new();
    for (k, name) in names.iter().enumerate() {
        let heuristic = match name.as_str() {
            "tabu" => HeuristicConfig::Tabu(TabuConfig {
                tenure: sec.get("tenure")?,
                max_iter: sec.get_or("max_iter", TabuConfig::default().max_iter)?,
            }),
            "sa" | "simulated-annealing" => HeuristicConfig::SimAnneal(sim_anneal_from(&sec)?),
            other => bail!("unknown heuristic {other:?}; expected tabu or sa"),
        };
        let s = restart_harness(
            &enc,
            &RestartPlan {
                heuristic,
                restarts,
                seed: vqo_core::stats::derive_seed(ctx.seed, k as u64),
                execution: ctx.execution,
            },
            d_min,
        )?;
        let opt = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
        rows.push(vec![
            problem.geometry.to_string(),
            s.algorithm.into(),
            s.restarts.to_string(),
            opt(s.best),
            s.frequency.to_string(),
            s.d_min.to_string(),
            opt(s.ratio),
        ]);
    }
    write_csv(&ctx.out, schema::BASELINE, &rows)?;
    report.extra.insert("lambda".into(), json!(enc.lambda()));
    report.outputs.push(ctx.out.clone());
    Ok(report)
}

fn schedule_from(sec: &Section<'_>, time: f64) -> Result<AnnealSchedule> {
    let steps = sec.get_or("steps", 100usize)?;
    Ok(match sec.get_or("schedule", "forward".to_string())?.as_str() {
        "forward" => AnnealSchedule::forward(time, steps),
        "reverse" => AnnealSchedule::reverse(
            sec.get::<f64>("s_min")?.context("reverse schedule needs s_min")?,
            sec.get_or("hold", 0.0)?,
            time,
            steps,
        ),
        other => bail!("unknown schedule {other:?}; expected forward or reverse"),
    })
}

pub fn run_anneal(ctx: &RunContext) -> Result<Report> {
    let sec = ctx.config.section("anneal");
    let mode = sec.get_or("mode", "sweep".to_string())?;
    let mut report = Report::default();
    match mode.as_str() {
        "sweep" => {
            let (problem, kind, _) = problem_from(&ctx.config)?;
            let ratios: Vec<f64> = sec.list("ratios")?.unwrap_or_else(|| vec![1.0]);
            let reads = sec.get_or("reads", 1000usize)?;
            let sampler = match sec.get_or("sampler", "sa".to_string())?.as_str() {
                "sa" => Sampler::SimAnneal(sim_anneal_from(&sec)?),
                "toy" => Sampler::ToyDynamics(schedule_from(&sec, sec.get_or("anneal_time", 10.0)?)?),
                other => bail!("unknown sampler {other:?}; expected sa or toy"),
            };
            let points = anneal_parameter_sweep(&problem, kind, &ratios, &sampler, reads, ctx.seed, ctx.execution)?;
            let rows: Vec<Vec<String>> = points
                .iter()
                .map(|p| {
                    vec![
                        p.lambda_ratio.to_string(),
                        p.metrics.p_gnd.to_string(),
                        p.metrics.p_feas.to_string(),
                        p.metrics.r_approx.to_string(),
                        p.reads.to_string(),
                        p.seed.to_string(),
                    ]
                })
                .collect();
            write_csv(&ctx.out, schema::ANNEAL_SWEEP, &rows)?;
            report.extra.insert("sampler".into(), json!(sampler.label()));
        }
        "sim" => {
            let enc = encoding_from(&ctx.config)?;
            let ising = enc.model().to_ising();
            let feasible = FeasibleSet::new(&enc)?;
            let times: Vec<f64> = sec.list("anneal_times")?.unwrap_or_else(|| vec![10.0]);
            let seed_state: Option<BitString> = sec.get("seed_state")?;
            let mut rows = Vec::new();
            let mut drift = 0.0f64;
            for &t in &times {
                let schedule = schedule_from(&sec, t)?;
                let outcome = match &seed_state {
                    Some(s) => simulate_reverse_anneal(&ising, s, &schedule)?,
                    None => simulate_forward_anneal(&ising, &schedule)?,
                };
                drift = drift.max(outcome.norm_drift);
                let m = feasible.score_state(&outcome.state);
                rows.push(vec![
                    t.to_string(),
                    m.p_gnd.to_string(),
                    m.p_feas.to_string(),
                    m.r_approx.to_string(),
                    "0".into(),
                    ctx.seed.to_string(),
                ]);
            }
            write_csv(&ctx.out, schema::ANNEAL_TIME, &rows)?;
            report.extra.insert("max_norm_drift".into(), json!(drift));
        }
        other => bail!("unknown anneal mode {other:?}; expected sweep or sim"),
    }
    report.outputs.push(ctx.out.clone());
    Ok(report)
}

pub fn run_tts(ctx: &RunContext) -> Result<Report> {
    let sec = ctx.config.section("tts");
    let probs: Vec<f64> = sec.list("p_sol")?.context("[tts] needs p_sol")?;
    let cycles: Vec<f64> = sec.list("t_cycle")?.context("[tts] needs t_cycle")?;
    let mut rows = Vec::new();
    for &p in &probs {
        for &t in &cycles {
            rows.push(vec![p.to_string(), t.to_string(), tts(p, t)?.to_string()]);
        }
    }
    write_csv(&ctx.out, schema::TTS, &rows)?;
    Ok(Report {
        outputs: vec![ctx.out.clone()],
        ..Default::default()
    })
}

pub fn run_encode(ctx: &RunContext) -> Result<Report> {
    let enc = encoding_from(&ctx.config)?;
    std::fs::write(&ctx.out, enc.model().to_text()).with_context(|| format!("writing {}", ctx.out.display()))?;
    let mut report = Report::default();
    report.extra.insert("encoding".into(), json!(enc.kind().to_string()));
    report.extra.insert("num_qubits".into(), json!(enc.num_qubits()));
    report.extra.insert("lambda".into(), json!(enc.lambda()));
    report.extra.insert("terms".into(), json!(enc.model().num_terms()));
    report.outputs.push(ctx.out.clone());
    Ok(report)
}

pub fn run_summarize(ctx: &RunContext, input: &Path) -> Result<Report> {
    let stats = crate::summary::summarize_file(input)?;
    let rows: Vec<Vec<String>> = stats.iter().map(|s| s.record()).collect();
    write_csv(&ctx.out, schema::SUMMARY, &rows)?;
    let mut report = Report::default();
    report.extra.insert("input".into(), json!(input.display().to_string()));
    report.outputs.push(ctx.out.clone());
    Ok(report)
}
