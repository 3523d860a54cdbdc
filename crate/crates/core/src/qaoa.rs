//! QAOA with transverse-field and XY mixers, random-restart search,
//! layer-by-layer angle extension and the gain decomposition.
//!
//! A depth-`p` circuit applies `exp(-iβ_ℓ B) exp(-iγ_ℓ C)` for `ℓ = 1..p` to
//! the initial state.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;

use crate::bits::BitString;
use crate::encoders::Encoding;
use crate::error::{invalid, Error, Result};
use crate::exec::{try_map_indexed, Execution};
use crate::ising::CostModel;
use crate::metrics::{FeasibleSet, RunMetrics};
use crate::optimizers::{minimize, OptimizerConfig};
use crate::statevector::{Block, BlockContent, StateVector, XyRingPropagator};
use crate::stats::{derive_seed, rng_from_seed, MeanError};

/// Number of independent mixer and phase angles per layer for the
/// three-ring XY mixer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AngleScheme {
    pub betas: usize,
    pub gammas: usize,
}

impl AngleScheme {
    pub const SHARED: Self = Self { betas: 1, gammas: 1 };

    pub fn new(betas: usize, gammas: usize) -> Result<Self> {
        match (betas, gammas) {
            (1, 1) | (2, 1) | (3, 1) | (3, 3) => Ok(Self { betas, gammas }),
            _ => Err(invalid(format!("unsupported angle scheme {{{betas},{gammas}}}"))),
        }
    }
}

impl fmt::Display for AngleScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{},{}}}", self.betas, self.gammas)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Mixer {
    /// `B = Σ_q X_q`.
    X,
    /// XY rings sharing one angle.
    Xy { rings: Vec<Vec<usize>> },
    /// Three XY rings (two start blocks, then the dispatch block).
    ThreeXy {
        rings: [Vec<usize>; 3],
        scheme: AngleScheme,
    },
}

impl Mixer {
    /// Single ring over every qubit.
    pub fn xy_full(n: usize) -> Self {
        Mixer::Xy {
            rings: vec![(0..n).collect()],
        }
    }

    /// One ring per Hamming target of the encoding.
    pub fn three_xy(encoding: &Encoding, scheme: AngleScheme) -> Result<Self> {
        let t = encoding.hamming_targets();
        if t.len() != 3 {
            return Err(invalid(format!(
                "three-ring mixer needs three Hamming blocks, encoding has {}",
                t.len()
            )));
        }
        Ok(Mixer::ThreeXy {
            rings: [t[0].qubits.clone(), t[1].qubits.clone(), t[2].qubits.clone()],
            scheme,
        })
    }

    pub fn scheme(&self) -> AngleScheme {
        match self {
            Mixer::ThreeXy { scheme, .. } => *scheme,
            _ => AngleScheme::SHARED,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Mixer::X => "x".into(),
            Mixer::Xy { .. } => "xy".into(),
            Mixer::ThreeXy { scheme, .. } => format!("3xy{}{}", scheme.betas, scheme.gammas),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    Uniform,
    Dicke(usize),
    /// One Dicke state per Hamming target of the encoding.
    DickeBlocks,
    Basis(BitString),
}

impl InitialState {
    pub fn label(&self) -> String {
        match self {
            Self::Uniform => "uniform".into(),
            Self::Dicke(k) => format!("dicke{k}"),
            Self::DickeBlocks => "dicke-blocks".into(),
            Self::Basis(b) => format!("basis{b}"),
        }
    }
}

/// Mixer and phase angles, stored per angle family and per layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Angles {
    pub betas: Vec<Vec<f64>>,
    pub gammas: Vec<Vec<f64>>,
}

impl Angles {
    pub fn zeros(scheme: AngleScheme, p: usize) -> Self {
        Self {
            betas: vec![vec![0.0; p]; scheme.betas],
            gammas: vec![vec![0.0; p]; scheme.gammas],
        }
    }

    /// Single-family angles from per-layer lists.
    pub fn shared(betas: Vec<f64>, gammas: Vec<f64>) -> Result<Self> {
        if betas.len() != gammas.len() {
            return Err(Error::LengthMismatch {
                expected: betas.len(),
                got: gammas.len(),
            });
        }
        Ok(Self {
            betas: vec![betas],
            gammas: vec![gammas],
        })
    }

    pub fn depth(&self) -> usize {
        self.betas.first().map_or(0, Vec::len)
    }

    pub fn scheme(&self) -> AngleScheme {
        AngleScheme {
            betas: self.betas.len(),
            gammas: self.gammas.len(),
        }
    }

    /// Flattened as all β families layer by layer, then all γ families.
    pub fn to_vec(&self) -> Vec<f64> {
        self.betas
            .iter()
            .chain(&self.gammas)
            .flat_map(|f| f.iter().copied())
            .collect()
    }

    pub fn from_slice(scheme: AngleScheme, p: usize, x: &[f64]) -> Result<Self> {
        let expected = (scheme.betas + scheme.gammas) * p;
        if x.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                got: x.len(),
            });
        }
        let mut chunks = x.chunks(p.max(1)).map(<[f64]>::to_vec);
        let betas = (0..scheme.betas).map(|_| chunks.next().unwrap_or_default()).collect();
        let gammas = (0..scheme.gammas).map(|_| chunks.next().unwrap_or_default()).collect();
        Ok(Self { betas, gammas })
    }

    fn map_families(&self, f: impl Fn(&[f64]) -> Vec<f64>) -> Self {
        Self {
            betas: self.betas.iter().map(|v| f(v)).collect(),
            gammas: self.gammas.iter().map(|v| f(v)).collect(),
        }
    }

    /// Depth `p → p+1` by linear interpolation of each angle family:
    /// `new_i = (i-1)/p · old_{i-1} + (p-i+1)/p · old_i`, `old_0 = old_{p+1} = 0`.
    pub fn interp_extend(&self) -> Self {
        self.map_families(|old| {
            let p = old.len();
            if p == 0 {
                return vec![0.0];
            }
            let at = |i: usize| if i == 0 || i > p { 0.0 } else { old[i - 1] };
            (1..=p + 1)
                .map(|i| {
                    let (fi, fp) = (i as f64, p as f64);
                    (fi - 1.0) / fp * at(i - 1) + (fp - fi + 1.0) / fp * at(i)
                })
                .collect()
        })
    }

    /// Appends `by` zero-angle layers, which leave the state unchanged.
    pub fn extrap_extend(&self, by: usize) -> Self {
        self.map_families(|old| {
            let mut v = old.to_vec();
            v.extend(std::iter::repeat_n(0.0, by));
            v
        })
    }
}

/// A compiled QAOA problem: cost diagonals, mixer, initial state and the
/// feasibility oracle used for scoring.
pub struct QaoaInstance {
    n: usize,
    mixer: Mixer,
    init: InitialState,
    initial: StateVector,
    full_diagonal: Vec<f64>,
    /// Diagonal pieces per phase-angle family; they sum to `full_diagonal`
    /// up to the constant offset.
    family_diagonals: Vec<Vec<f64>>,
    ring_betas: Vec<(Vec<usize>, usize, Arc<XyRingPropagator>)>,
    subspace: Option<Subspace>,
    feasible: FeasibleSet,
}

/// Basis states reachable from the initial state under XY mixing: every
/// ring keeps its Hamming weight and qubits outside the rings keep their
/// values. Simulating here is exact and avoids sweeping the full register.
struct Subspace {
    states: Vec<u64>,
    initial: Vec<Complex64>,
    full_diagonal: Vec<f64>,
    family_diagonals: Vec<Vec<f64>>,
    /// Per ring: weight block and groups of subspace indices in block order.
    ring_groups: Vec<Option<(usize, Vec<Vec<u32>>)>>,
}

impl Subspace {
    fn build(
        n: usize,
        initial: &StateVector,
        rings: &[(Vec<usize>, usize, Arc<XyRingPropagator>)],
        full_diagonal: &[f64],
        family_diagonals: &[Vec<f64>],
    ) -> Option<Self> {
        let masks: Vec<u64> = rings
            .iter()
            .map(|(r, _, _)| r.iter().fold(0u64, |m, &q| m | 1 << q))
            .collect();
        let mut union = 0u64;
        for &m in &masks {
            if union & m != 0 {
                return None;
            }
            union |= m;
        }
        let zero = Complex64::new(0.0, 0.0);
        let support: Vec<u64> = (0..initial.amplitudes().len() as u64)
            .filter(|&i| initial.amplitude(i) != zero)
            .collect();
        let first = *support.first()?;
        let weights: Vec<u32> = masks.iter().map(|m| (first & m).count_ones()).collect();
        let outside = first & !union;
        let fits = |i: u64| {
            i & !union == outside && masks.iter().zip(&weights).all(|(m, &w)| (i & m).count_ones() == w)
        };
        if !support.iter().all(|&i| fits(i)) {
            return None;
        }
        let states: Vec<u64> = (0..1u64 << n).filter(|&i| fits(i)).collect();
        let ring_groups = rings
            .iter()
            .zip(&masks)
            .map(|((ring, _, prop), &mask)| {
                let mut groups: std::collections::BTreeMap<u64, Vec<u32>> = Default::default();
                let mut sector_of = None;
                for (k, &s) in states.iter().enumerate() {
                    let local = ring
                        .iter()
                        .enumerate()
                        .fold(0usize, |acc, (b, &q)| acc | ((s >> q & 1) as usize) << b);
                    let (sector, pos) = prop.locate(local)?;
                    sector_of = Some(sector);
                    let g = groups
                        .entry(s & !mask)
                        .or_insert_with(|| vec![u32::MAX; prop.block_len(sector)]);
                    g[pos] = k as u32;
                }
                Some((sector_of?, groups.into_values().collect()))
            })
            .collect();
        Some(Self {
            initial: states.iter().map(|&i| initial.amplitude(i)).collect(),
            full_diagonal: states.iter().map(|&i| full_diagonal[i as usize]).collect(),
            family_diagonals: family_diagonals
                .iter()
                .map(|d| states.iter().map(|&i| d[i as usize]).collect())
                .collect(),
            states,
            ring_groups,
        })
    }
}

impl QaoaInstance {
    pub fn new(encoding: &Encoding, mixer: Mixer, init: InitialState) -> Result<Self> {
        let n = encoding.num_qubits();
        let model = encoding.model();
        let full_diagonal = model.diagonal()?;
        let scheme = mixer.scheme();

        let ring_betas = match &mixer {
            Mixer::X => Vec::new(),
            Mixer::Xy { rings } => rings
                .iter()
                .map(|r| Ok((r.clone(), 0, XyRingPropagator::shared(r.len())?)))
                .collect::<Result<Vec<_>>>()?,
            Mixer::ThreeXy { rings, scheme } => rings
                .iter()
                .enumerate()
                .map(|(k, r)| {
                    let family = match scheme.betas {
                        1 => 0,
                        2 => usize::from(k == 2),
                        _ => k,
                    };
                    Ok((r.clone(), family, XyRingPropagator::shared(r.len())?))
                })
                .collect::<Result<Vec<_>>>()?,
        };

        let family_diagonals = if scheme.gammas == 1 {
            vec![full_diagonal.clone()]
        } else {
            let Mixer::ThreeXy { rings, .. } = &mixer else {
                unreachable!("multiple phase families only with three rings")
            };
            let block_of = |q: usize| rings.iter().position(|r| r.contains(&q)).unwrap_or(0);
            let mut parts = vec![crate::ising::QuboModel::new(n); scheme.gammas];
            for (i, c) in model.linear() {
                parts[block_of(i)].add_linear(i, c)?;
            }
            for ((i, j), c) in model.quadratic() {
                // cross-block terms follow the lower-indexed (start) qubit
                parts[block_of(i.min(j))].add_quadratic(i, j, c)?;
            }
            parts[0].add_offset(model.offset());
            parts.iter().map(|m| m.diagonal()).collect::<Result<Vec<_>>>()?
        };

        let initial = match &init {
            InitialState::Uniform => StateVector::uniform(n)?,
            InitialState::Dicke(k) => StateVector::dicke(n, *k)?,
            InitialState::DickeBlocks => {
                let blocks: Vec<Block> = encoding
                    .hamming_targets()
                    .iter()
                    .map(|t| Block {
                        qubits: t.qubits.clone(),
                        content: BlockContent::Dicke(t.weight),
                    })
                    .collect();
                StateVector::block_product(n, &blocks)?
            }
            InitialState::Basis(bits) => StateVector::basis(n, bits.to_index()?)?,
        };

        let subspace = if ring_betas.is_empty() {
            None
        } else {
            Subspace::build(n, &initial, &ring_betas, &full_diagonal, &family_diagonals)
        };

        Ok(Self {
            n,
            mixer,
            init,
            initial,
            full_diagonal,
            family_diagonals,
            ring_betas,
            subspace,
            feasible: FeasibleSet::new(encoding)?,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn mixer(&self) -> &Mixer {
        &self.mixer
    }

    pub fn initial_state_kind(&self) -> &InitialState {
        &self.init
    }

    pub fn scheme(&self) -> AngleScheme {
        self.mixer.scheme()
    }

    pub fn feasible_set(&self) -> &FeasibleSet {
        &self.feasible
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.full_diagonal
    }

    pub fn initial_state(&self) -> &StateVector {
        &self.initial
    }

    fn check_scheme(&self, angles: &Angles) -> Result<()> {
        if angles.scheme() != self.scheme() {
            return Err(invalid(format!(
                "angles use scheme {}, mixer needs {}",
                angles.scheme(),
                self.scheme()
            )));
        }
        Ok(())
    }

    /// Runs the circuit inside the invariant subspace.
    fn evolve_subspace(&self, sub: &Subspace, angles: &Angles) -> Vec<Complex64> {
        let mut psi = sub.initial.clone();
        let zero = Complex64::new(0.0, 0.0);
        let mut buf = Vec::new();
        let mut scratch = Vec::new();
        for layer in 0..angles.depth() {
            for (k, a) in psi.iter_mut().enumerate() {
                if *a == zero {
                    continue;
                }
                let phase: f64 = angles
                    .gammas
                    .iter()
                    .zip(&sub.family_diagonals)
                    .map(|(g, d)| g[layer] * d[k])
                    .sum();
                *a *= Complex64::from_polar(1.0, -phase);
            }
            for ((_, family, prop), groups) in self.ring_betas.iter().zip(&sub.ring_groups) {
                let Some((sector, groups)) = groups else { continue };
                let phases = prop.phases(angles.betas[*family][layer]);
                for g in groups {
                    buf.clear();
                    buf.extend(g.iter().map(|&i| psi[i as usize]));
                    prop.rotate(*sector, &phases[*sector], &mut buf, &mut scratch);
                    for (&i, &a) in g.iter().zip(&buf) {
                        psi[i as usize] = a;
                    }
                }
            }
        }
        psi
    }

    pub fn state(&self, angles: &Angles) -> Result<StateVector> {
        self.check_scheme(angles)?;
        if let Some(sub) = &self.subspace {
            let mut amps = vec![Complex64::new(0.0, 0.0); 1 << self.n];
            for (&i, a) in sub.states.iter().zip(self.evolve_subspace(sub, angles)) {
                amps[i as usize] = a;
            }
            return StateVector::from_amplitudes(self.n, amps);
        }
        let mut psi = self.initial.clone();
        for layer in 0..angles.depth() {
            self.apply_phase(&mut psi, angles, layer);
            match &self.mixer {
                Mixer::X => psi.apply_x_mixer(angles.betas[0][layer]),
                _ => {
                    for (ring, family, prop) in &self.ring_betas {
                        prop.apply(&mut psi, ring, angles.betas[*family][layer])?;
                    }
                }
            }
        }
        Ok(psi)
    }

    fn apply_phase(&self, psi: &mut StateVector, angles: &Angles, layer: usize) {
        let zero = Complex64::new(0.0, 0.0);
        let gammas: Vec<f64> = angles.gammas.iter().map(|g| g[layer]).collect();
        for (k, a) in psi.amplitudes_mut().iter_mut().enumerate() {
            if *a == zero {
                continue;
            }
            let phase: f64 = gammas
                .iter()
                .zip(&self.family_diagonals)
                .map(|(g, d)| g * d[k])
                .sum();
            *a *= Complex64::from_polar(1.0, -phase);
        }
    }

    pub fn expectation(&self, angles: &Angles) -> Result<f64> {
        if let Some(sub) = &self.subspace {
            self.check_scheme(angles)?;
            let psi = self.evolve_subspace(sub, angles);
            return Ok(psi
                .iter()
                .zip(&sub.full_diagonal)
                .map(|(a, e)| a.norm_sqr() * e)
                .sum());
        }
        Ok(self.state(angles)?.expectation_diagonal(&self.full_diagonal))
    }

    pub fn metrics(&self, angles: &Angles) -> Result<RunMetrics> {
        Ok(self.feasible.score_state(&self.state(angles)?))
    }

    /// Scores of the initial state.
    pub fn initial_metrics(&self) -> RunMetrics {
        self.feasible.score_state(&self.initial)
    }

    /// Scores of the uniform superposition over the whole register.
    pub fn uniform_metrics(&self) -> Result<RunMetrics> {
        Ok(self.feasible.score_state(&StateVector::uniform(self.n)?))
    }

    /// Optimises angles starting from `start`.
    pub fn optimize(&self, start: &Angles, optimizer: &OptimizerConfig, seed: u64) -> Result<Evaluated> {
        let (scheme, p) = (start.scheme(), start.depth());
        let objective = |x: &[f64]| {
            Angles::from_slice(scheme, p, x)
                .and_then(|a| self.expectation(&a))
                .unwrap_or(f64::NAN)
        };
        let res = minimize(objective, &start.to_vec(), optimizer, seed)?;
        let angles = Angles::from_slice(scheme, p, &res.x_best)?;
        Ok(Evaluated {
            metrics: self.metrics(&angles)?,
            ev: res.f_best,
            angles,
            evaluations: res.evaluations,
        })
    }
}

/// Angles with their expectation value and scores.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluated {
    pub angles: Angles,
    pub ev: f64,
    pub metrics: RunMetrics,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RestartRun {
    pub run_id: usize,
    pub seed: u64,
    pub result: Evaluated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RestartSummary {
    pub ev: MeanError,
    pub r_approx: MeanError,
    pub p_feas: MeanError,
    pub p_gnd: MeanError,
    /// Run with the lowest expectation value.
    pub best_run: usize,
}

impl RestartSummary {
    pub fn from_runs(runs: &[RestartRun]) -> Option<Self> {
        let col = |f: &dyn Fn(&RestartRun) -> f64| -> Option<MeanError> {
            MeanError::from_samples(&runs.iter().map(f).collect::<Vec<_>>())
        };
        Some(Self {
            ev: col(&|r| r.result.ev)?,
            r_approx: col(&|r| r.result.metrics.r_approx)?,
            p_feas: col(&|r| r.result.metrics.p_feas)?,
            p_gnd: col(&|r| r.result.metrics.p_gnd)?,
            best_run: runs
                .iter()
                .min_by(|a, b| a.result.ev.total_cmp(&b.result.ev))?
                .run_id,
        })
    }
}

#[derive(Debug, Clone)]
pub struct RestartConfig {
    pub depth: usize,
    pub restarts: usize,
    pub optimizer: OptimizerConfig,
    pub seed: u64,
    pub execution: Execution,
}

/// Uniform random angles in `[0, 2π)`.
pub fn random_angles(scheme: AngleScheme, p: usize, seed: u64) -> Angles {
    let mut rng = rng_from_seed(seed);
    let x: Vec<f64> = (0..(scheme.betas + scheme.gammas) * p)
        .map(|_| rng.random::<f64>() * 2.0 * PI)
        .collect();
    Angles::from_slice(scheme, p, &x).expect("sized")
}

/// Independent optimisations from random angles; run `k` uses seed
/// `derive_seed(seed, k)`.
pub fn random_restart_search(instance: &QaoaInstance, cfg: &RestartConfig) -> Result<Vec<RestartRun>> {
    if cfg.depth == 0 {
        return Err(invalid("depth must be at least 1"));
    }
    try_map_indexed(cfg.restarts, cfg.execution, |k| {
        let seed = derive_seed(cfg.seed, k as u64);
        let start = random_angles(instance.scheme(), cfg.depth, seed);
        let result = instance.optimize(&start, &cfg.optimizer, seed)?;
        Ok(RestartRun {
            run_id: k,
            seed,
            result,
        })
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Interp,
    Extrap1,
    Extrap2,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Interp, Strategy::Extrap1, Strategy::Extrap2];
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Interp => "interp",
            Strategy::Extrap1 => "extrap1",
            Strategy::Extrap2 => "extrap2",
        })
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "interp" => Ok(Self::Interp),
            "extrap1" => Ok(Self::Extrap1),
            "extrap2" => Ok(Self::Extrap2),
            other => Err(invalid(format!("unknown strategy {other:?}"))),
        }
    }
}

/// Grows the circuit from `seed_angles` to depth `max_depth`, re-optimising
/// after every extension. The first entry is the seed itself.
///
/// Interpolated starts do not reproduce the previous state, so the
/// zero-padded previous angles are kept as a fallback candidate; the
/// expectation value therefore never increases between levels.
pub fn increasing_p_schedule(
    instance: &QaoaInstance,
    strategy: Strategy,
    seed_angles: &Angles,
    max_depth: usize,
    optimizer: &OptimizerConfig,
    seed: u64,
) -> Result<Vec<Evaluated>> {
    let mut levels = vec![Evaluated {
        ev: instance.expectation(seed_angles)?,
        metrics: instance.metrics(seed_angles)?,
        angles: seed_angles.clone(),
        evaluations: 1,
    }];
    while levels.last().expect("non-empty").angles.depth() < max_depth {
        let prev = levels.last().expect("non-empty");
        let p = prev.angles.depth();
        let step = match strategy {
            Strategy::Extrap2 => 2.min(max_depth - p),
            _ => 1,
        };
        let padded = prev.angles.extrap_extend(step);
        let start = match strategy {
            Strategy::Interp => prev.angles.interp_extend(),
            _ => padded.clone(),
        };
        let level_seed = derive_seed(seed, (p + step) as u64);
        let mut next = instance.optimize(&start, optimizer, level_seed)?;
        if next.ev > prev.ev {
            next = Evaluated {
                ev: prev.ev,
                metrics: prev.metrics,
                angles: padded,
                evaluations: next.evaluations,
            };
        }
        levels.push(next);
    }
    Ok(levels)
}

/// Multiplicative breakdown of the ground-state probability gain from the
/// uniform superposition to the final optimised state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainTable {
    /// Initial state versus the uniform superposition.
    pub mixer: f64,
    /// Seed optimisation versus the initial state.
    pub seed: f64,
    /// Feasible probability, final versus seed.
    pub feasible: f64,
    /// Approximation ratio, final versus seed.
    pub approx: f64,
    /// Whatever remains of the final-to-seed gain.
    pub mix: f64,
    pub overall: f64,
}

impl GainTable {
    pub fn product(&self) -> f64 {
        self.mixer * self.seed * self.feasible * self.approx * self.mix
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainInputs {
    pub uniform: RunMetrics,
    pub initial: RunMetrics,
    pub seed: RunMetrics,
    pub final_state: RunMetrics,
}

pub fn gain_decomposition(inputs: &GainInputs) -> Result<GainTable> {
    let div = |num: f64, den: f64, what: &'static str| {
        if den == 0.0 {
            Err(Error::ZeroDenominator(what))
        } else {
            Ok(num / den)
        }
    };
    let mixer = div(inputs.initial.p_gnd, inputs.uniform.p_gnd, "uniform ground probability")?;
    let seed = div(inputs.seed.p_gnd, inputs.initial.p_gnd, "initial ground probability")?;
    let feasible = div(inputs.final_state.p_feas, inputs.seed.p_feas, "seed feasible probability")?;
    let approx = div(inputs.final_state.r_approx, inputs.seed.r_approx, "seed approximation ratio")?;
    let total = div(inputs.final_state.p_gnd, inputs.seed.p_gnd, "seed ground probability")?;
    let mix = div(total, feasible * approx, "feasible and approximation gains")?;
    let overall = div(inputs.final_state.p_gnd, inputs.uniform.p_gnd, "uniform ground probability")?;
    Ok(GainTable {
        mixer,
        seed,
        feasible,
        approx,
        mix,
        overall,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoders::{presets, Penalty};
    use crate::optimizers::NelderMeadConfig;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn interp_keeps_single_layer() {
        let a = Angles::shared(vec![0.7], vec![0.3]).unwrap();
        let b = a.interp_extend();
        assert_eq!(b.betas[0], vec![0.7, 0.7]);
        assert_eq!(b.gammas[0], vec![0.3, 0.3]);
    }

    #[test]
    fn interp_two_layers() {
        let a = Angles::shared(vec![1.0, 2.0], vec![0.0, 4.0]).unwrap();
        let b = a.interp_extend();
        assert_eq!(b.betas[0], vec![1.0, 1.5, 2.0]);
        assert_eq!(b.gammas[0], vec![0.0, 2.0, 4.0]);
    }

    #[test]
    fn flatten_round_trip() {
        let s = AngleScheme::new(3, 3).unwrap();
        let a = random_angles(s, 4, 5);
        assert_eq!(Angles::from_slice(s, 4, &a.to_vec()).unwrap(), a);
        assert!(AngleScheme::new(2, 3).is_err());
    }

    #[test]
    fn zero_angle_layers_leave_state() {
        let enc = presets::problem_a(40.0).unwrap();
        let inst = QaoaInstance::new(&enc, Mixer::X, InitialState::Uniform).unwrap();
        let a = random_angles(AngleScheme::SHARED, 2, 1);
        let e2 = inst.expectation(&a).unwrap();
        let e4 = inst.expectation(&a.extrap_extend(2)).unwrap();
        assert_abs_diff_eq!(e2, e4, epsilon = 1e-9);
    }

    #[test]
    fn xy_dicke_stays_feasible() {
        let enc = presets::problem_a(40.0).unwrap();
        let inst = QaoaInstance::new(&enc, Mixer::xy_full(5), InitialState::Dicke(4)).unwrap();
        let a = random_angles(AngleScheme::SHARED, 3, 2);
        let m = inst.metrics(&a).unwrap();
        assert_abs_diff_eq!(m.p_feas, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(inst.initial_metrics().p_gnd, 0.2, epsilon = 1e-12);
    }

    #[test]
    fn three_xy_phase_families_sum_to_full() {
        let enc = presets::problem_b(Penalty::Ratio(1.0)).unwrap();
        let mixer = Mixer::three_xy(&enc, AngleScheme::new(3, 3).unwrap()).unwrap();
        let inst = QaoaInstance::new(&enc, mixer, InitialState::DickeBlocks).unwrap();
        for k in [0usize, 17, 4097, 65535] {
            let s: f64 = inst.family_diagonals.iter().map(|d| d[k]).sum();
            assert_abs_diff_eq!(s, inst.full_diagonal[k], epsilon = 1e-9);
        }
        // equal angles across families reproduce the shared-angle circuit
        let shared = QaoaInstance::new(
            &enc,
            Mixer::three_xy(&enc, AngleScheme::SHARED).unwrap(),
            InitialState::DickeBlocks,
        )
        .unwrap();
        let a = Angles::shared(vec![0.4], vec![0.9]).unwrap();
        let b = Angles {
            betas: vec![vec![0.4]; 3],
            gammas: vec![vec![0.9]; 3],
        };
        assert_abs_diff_eq!(
            shared.expectation(&a).unwrap(),
            inst.expectation(&b).unwrap(),
            epsilon = 1e-9
        );
    }

    #[test]
    fn subspace_matches_full_register() {
        let enc = presets::problem_b(Penalty::Ratio(1.0)).unwrap();
        let scheme = AngleScheme::new(3, 3).unwrap();
        let inst = QaoaInstance::new(&enc, Mixer::three_xy(&enc, scheme).unwrap(), InitialState::DickeBlocks).unwrap();
        assert_eq!(inst.subspace.as_ref().unwrap().states.len(), 1120);
        let a = random_angles(scheme, 2, 4);
        let fast = inst.state(&a).unwrap();
        let mut slow = inst.initial.clone();
        for layer in 0..2 {
            inst.apply_phase(&mut slow, &a, layer);
            for (ring, family, prop) in &inst.ring_betas {
                prop.apply(&mut slow, ring, a.betas[*family][layer]).unwrap();
            }
        }
        for (x, y) in fast.amplitudes().iter().zip(slow.amplitudes()) {
            assert_abs_diff_eq!((x - y).norm(), 0.0, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(
            inst.expectation(&a).unwrap(),
            slow.expectation_diagonal(inst.diagonal()),
            epsilon = 1e-9
        );
    }

    #[test]
    fn gain_product_matches_overall() {
        let m = |r, f, g| RunMetrics {
            r_approx: r,
            p_feas: f,
            p_gnd: g,
            no_feasible_mass: false,
        };
        let t = gain_decomposition(&GainInputs {
            uniform: m(0.5, 0.1, 1.0 / 256.0),
            initial: m(0.6, 1.0, 1.0 / 28.0),
            seed: m(0.8, 1.0, 0.13),
            final_state: m(0.97, 1.0, 0.77),
        })
        .unwrap();
        assert_abs_diff_eq!(t.mixer, 256.0 / 28.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t.product(), t.overall, epsilon = 1e-9 * t.overall);
        let zero = m(0.0, 0.0, 0.0);
        assert!(gain_decomposition(&GainInputs {
            uniform: zero,
            initial: zero,
            seed: zero,
            final_state: zero
        })
        .is_err());
    }

    #[test]
    fn schedule_ev_non_increasing() {
        let enc = presets::problem_a(40.0).unwrap();
        let inst = QaoaInstance::new(&enc, Mixer::X, InitialState::Uniform).unwrap();
        let opt = OptimizerConfig::NelderMead(NelderMeadConfig {
            max_iter: 200,
            ..Default::default()
        });
        let seed = inst.optimize(&random_angles(AngleScheme::SHARED, 1, 3), &opt, 3).unwrap();
        for s in super::Strategy::ALL {
            let levels = increasing_p_schedule(&inst, s, &seed.angles, 4, &opt, 11).unwrap();
            assert_eq!(levels.last().unwrap().angles.depth(), 4);
            for w in levels.windows(2) {
                assert!(w[1].ev <= w[0].ev + 1e-9);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn interp_extends_by_one(v in proptest::collection::vec(-3.0f64..3.0, 1..6)) {
            let a = Angles::shared(v.clone(), v.clone()).unwrap();
            let b = a.interp_extend();
            prop_assert_eq!(b.depth(), v.len() + 1);
            prop_assert!((b.betas[0][0] - v[0]).abs() < 1e-15);
            prop_assert!((b.betas[0][v.len()] - v[v.len() - 1]).abs() < 1e-15);
        }

        #[test]
        fn metrics_in_range(seed in 0u64..500) {
            let enc = presets::problem_a(40.0).unwrap();
            let inst = QaoaInstance::new(&enc, Mixer::X, InitialState::Uniform).unwrap();
            let m = inst.metrics(&random_angles(AngleScheme::SHARED, 2, seed)).unwrap();
            prop_assert!((0.0..=1.0).contains(&m.r_approx));
            prop_assert!(m.p_gnd <= m.p_feas + 1e-15);
            prop_assert!(m.p_feas <= 1.0 + 1e-12);
        }
    }
}
