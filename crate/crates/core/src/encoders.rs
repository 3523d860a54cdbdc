//! Facility-location problems and their QUBO encodings.
//!
//! Three layouts are supported:
//!
//! * [`EncodingKind::ComplementSingle`]: one ambulance, one qubit per node,
//!   the ambulance sits where the bit is `0`.
//! * [`EncodingKind::StartDest`]: `2·m·L` qubits, a one-hot start block per
//!   ambulance followed by a dispatch block per ambulance.
//! * [`EncodingKind::PositionLinear`]: one qubit per node, `1` marks an
//!   ambulance, every node is charged its distance to every ambulance.
//!
//! Nodes of a grid are numbered row-major.

use std::fmt;
use std::str::FromStr;

use itertools::Itertools;

use crate::bits::BitString;
use crate::error::{invalid, Error, Result};
use crate::ising::QuboModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Geometry {
    Line { nodes: usize },
    Grid { rows: usize, cols: usize },
}

impl Geometry {
    pub fn num_nodes(&self) -> usize {
        match *self {
            Geometry::Line { nodes } => nodes,
            Geometry::Grid { rows, cols } => rows * cols,
        }
    }

    /// Integer coordinates `(row, col)`; a line is a single row.
    pub fn coords(&self, node: usize) -> (i64, i64) {
        match *self {
            Geometry::Line { .. } => (0, node as i64),
            Geometry::Grid { cols, .. } => ((node / cols) as i64, (node % cols) as i64),
        }
    }
}

impl fmt::Display for Geometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Geometry::Line { nodes } => write!(f, "line{nodes}"),
            Geometry::Grid { rows, cols } => write!(f, "{rows}x{cols}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Metric {
    #[default]
    SquaredEuclidean,
    Euclidean,
    Manhattan,
}

impl Metric {
    pub fn distance(self, a: (i64, i64), b: (i64, i64)) -> f64 {
        let (dr, dc) = ((a.0 - b.0) as f64, (a.1 - b.1) as f64);
        match self {
            Metric::SquaredEuclidean => dr * dr + dc * dc,
            Metric::Euclidean => (dr * dr + dc * dc).sqrt(),
            Metric::Manhattan => dr.abs() + dc.abs(),
        }
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "squared-euclidean" | "sq-euclidean" | "sqeuclidean" => Ok(Metric::SquaredEuclidean),
            "euclidean" => Ok(Metric::Euclidean),
            "manhattan" => Ok(Metric::Manhattan),
            other => Err(invalid(format!("unknown metric {other:?}"))),
        }
    }
}

/// Symmetric node-to-node distances.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn new(geometry: Geometry, metric: Metric) -> Self {
        let n = geometry.num_nodes();
        let coords: Vec<_> = (0..n).map(|i| geometry.coords(i)).collect();
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                data[i * n + j] = metric.distance(coords[i], coords[j]);
            }
        }
        Self { n, data }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }

    /// Total distance when every node uses its nearest site.
    pub fn service_cost(&self, sites: &[usize]) -> f64 {
        (0..self.n)
            .map(|l| {
                sites
                    .iter()
                    .map(|&s| self.get(s, l))
                    .fold(f64::INFINITY, f64::min)
            })
            .sum()
    }
}

/// Penalty weight, either absolute or relative to the largest distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Penalty {
    Absolute(f64),
    Ratio(f64),
}

impl Default for Penalty {
    fn default() -> Self {
        Penalty::Ratio(1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FacilityProblem {
    pub geometry: Geometry,
    pub ambulances: usize,
    pub metric: Metric,
    pub penalty: Penalty,
    pub forbid_colocation: bool,
}

impl FacilityProblem {
    pub fn new(geometry: Geometry, ambulances: usize) -> Self {
        Self {
            geometry,
            ambulances,
            metric: Metric::default(),
            penalty: Penalty::default(),
            forbid_colocation: false,
        }
    }

    pub fn with_penalty(mut self, penalty: Penalty) -> Self {
        self.penalty = penalty;
        self
    }

    pub fn with_metric(mut self, metric: Metric) -> Self {
        self.metric = metric;
        self
    }

    pub fn num_nodes(&self) -> usize {
        self.geometry.num_nodes()
    }

    pub fn distances(&self) -> DistanceMatrix {
        DistanceMatrix::new(self.geometry, self.metric)
    }

    pub fn lambda(&self) -> f64 {
        match self.penalty {
            Penalty::Absolute(l) => l,
            Penalty::Ratio(r) => r * self.distances().max(),
        }
    }

    /// Parses `key = value` lines: `geometry`, `nodes`, `rows`, `cols`,
    /// `ambulances`, `metric`, `lambda`, `lambda_ratio`, `forbid_colocation`.
    pub fn from_key_values<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<Self> {
        let mut geometry = None;
        let (mut nodes, mut rows, mut cols) = (None, None, None);
        let mut ambulances = 1;
        let mut metric = Metric::default();
        let mut penalty = Penalty::default();
        let mut forbid = false;
        let parse_usize = |k: &str, v: &str| {
            v.parse::<usize>()
                .map_err(|e| invalid(format!("{k}: {e}")))
        };
        let parse_f64 = |k: &str, v: &str| {
            v.parse::<f64>()
                .map_err(|e| invalid(format!("{k}: {e}")))
        };
        for (k, v) in pairs {
            let (k, v) = (k.trim(), v.trim());
            match k {
                "geometry" => geometry = Some(v.to_ascii_lowercase()),
                "nodes" => nodes = Some(parse_usize(k, v)?),
                "rows" => rows = Some(parse_usize(k, v)?),
                "cols" => cols = Some(parse_usize(k, v)?),
                "ambulances" => ambulances = parse_usize(k, v)?,
                "metric" => metric = v.parse()?,
                "lambda" => penalty = Penalty::Absolute(parse_f64(k, v)?),
                "lambda_ratio" => penalty = Penalty::Ratio(parse_f64(k, v)?),
                "forbid_colocation" => {
                    forbid = v
                        .parse::<bool>()
                        .map_err(|e| invalid(format!("{k}: {e}")))?
                }
                _ => {}
            }
        }
        let geometry = match geometry.as_deref() {
            Some("line") => Geometry::Line {
                nodes: nodes
                    .or(cols)
                    .ok_or_else(|| invalid("line geometry needs nodes"))?,
            },
            Some("grid") => Geometry::Grid {
                rows: rows.ok_or_else(|| invalid("grid geometry needs rows"))?,
                cols: cols.ok_or_else(|| invalid("grid geometry needs cols"))?,
            },
            Some(other) => return Err(invalid(format!("unknown geometry {other:?}"))),
            None => return Err(invalid("missing geometry")),
        };
        Ok(Self {
            geometry,
            ambulances,
            metric,
            penalty,
            forbid_colocation: forbid,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EncodingKind {
    ComplementSingle,
    StartDest,
    PositionLinear,
}

impl FromStr for EncodingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "complement-single" | "complement" => Ok(Self::ComplementSingle),
            "start-dest" | "startdest" => Ok(Self::StartDest),
            "position-linear" | "linear" => Ok(Self::PositionLinear),
            other => Err(invalid(format!("unknown encoding {other:?}"))),
        }
    }
}

impl fmt::Display for EncodingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::ComplementSingle => "complement-single",
            Self::StartDest => "start-dest",
            Self::PositionLinear => "position-linear",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QubitRole {
    Location { node: usize },
    Start { ambulance: usize, node: usize },
    Dest { ambulance: usize, node: usize },
}

/// A set of qubits whose Hamming weight is fixed in the feasible space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HammingTarget {
    pub qubits: Vec<usize>,
    pub weight: usize,
}

impl HammingTarget {
    pub fn mask(&self) -> u64 {
        self.qubits.iter().fold(0, |m, &q| m | 1 << q)
    }
}

/// Decoded ambulance positions and node assignments.
#[derive(Debug, Clone, PartialEq)]
pub struct Placement {
    pub positions: Vec<usize>,
    /// Serving ambulance per node.
    pub assignments: Vec<usize>,
    pub total_distance: f64,
}

/// A problem encoded as a QUBO, with the metadata needed to read results.
#[derive(Debug, Clone)]
pub struct Encoding {
    kind: EncodingKind,
    problem: FacilityProblem,
    distances: DistanceMatrix,
    lambda: f64,
    roles: Vec<QubitRole>,
    targets: Vec<HammingTarget>,
    objective: QuboModel,
    penalty: QuboModel,
    model: QuboModel,
    cardinality_penalty: bool,
}

impl Encoding {
    /// Encodes with the given layout; `PositionLinear` gets the cardinality
    /// penalty.
    pub fn build(problem: &FacilityProblem, kind: EncodingKind) -> Result<Self> {
        match kind {
            EncodingKind::ComplementSingle => encode_single_complement(problem),
            EncodingKind::StartDest => encode_start_dest(problem),
            EncodingKind::PositionLinear => encode_position_linear(problem, true),
        }
    }

    pub fn kind(&self) -> EncodingKind {
        self.kind
    }

    pub fn problem(&self) -> &FacilityProblem {
        &self.problem
    }

    pub fn distances(&self) -> &DistanceMatrix {
        &self.distances
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn num_qubits(&self) -> usize {
        self.roles.len()
    }

    pub fn roles(&self) -> &[QubitRole] {
        &self.roles
    }

    pub fn hamming_targets(&self) -> &[HammingTarget] {
        &self.targets
    }

    /// Full cost `objective + λ·penalty`.
    pub fn model(&self) -> &QuboModel {
        &self.model
    }

    /// Penalty-free part of the cost.
    pub fn objective(&self) -> &QuboModel {
        &self.objective
    }

    /// Penalty at unit weight.
    pub fn penalty(&self) -> &QuboModel {
        &self.penalty
    }

    pub fn has_cardinality_penalty(&self) -> bool {
        self.cardinality_penalty
    }

    /// The sole Hamming weight for single-ambulance complement layouts.
    pub fn complement_weight(&self) -> Option<usize> {
        (self.kind == EncodingKind::ComplementSingle).then(|| self.targets[0].weight)
    }

    /// All Hamming targets met (index form, `n ≤ 64`).
    pub fn in_sector(&self, index: u64) -> bool {
        self.targets
            .iter()
            .all(|t| (index & t.mask()).count_ones() as usize == t.weight)
    }

    /// Number of basis states meeting every Hamming target.
    pub fn sector_size(&self) -> u128 {
        self.targets
            .iter()
            .map(|t| binomial(t.qubits.len(), t.weight))
            .product()
    }

    /// Encodes a valid solution (index form, `n ≤ 64`).
    pub fn is_feasible(&self, index: u64) -> bool {
        match self.kind {
            EncodingKind::ComplementSingle | EncodingKind::PositionLinear => self.in_sector(index),
            EncodingKind::StartDest => {
                let (m, l) = (self.problem.ambulances, self.problem.num_nodes());
                let block = (1u64 << l) - 1;
                let starts_ok = (0..m).all(|a| (index >> (a * l) & block).count_ones() == 1);
                if !starts_ok {
                    return false;
                }
                let dest_base = m * l;
                let mut covered = 0u64;
                for a in 0..m {
                    let d = index >> (dest_base + a * l) & block;
                    if covered & d != 0 {
                        return false;
                    }
                    covered |= d;
                }
                if covered != block {
                    return false;
                }
                !self.problem.forbid_colocation || {
                    let mut seen = 0u64;
                    (0..m).all(|a| {
                        let s = index >> (a * l) & block;
                        let clash = seen & s != 0;
                        seen |= s;
                        !clash
                    })
                }
            }
        }
    }

    pub fn is_feasible_bits(&self, bits: &BitString) -> bool {
        self.decode(bits).is_ok()
    }

    /// Reads positions and assignments from a feasible bitstring.
    pub fn decode(&self, bits: &BitString) -> Result<Placement> {
        if bits.len() != self.num_qubits() {
            return Err(Error::LengthMismatch {
                expected: self.num_qubits(),
                got: bits.len(),
            });
        }
        let l = self.problem.num_nodes();
        let m = self.problem.ambulances;
        let infeasible = || invalid(format!("bitstring {bits} is not feasible"));
        match self.kind {
            EncodingKind::ComplementSingle => {
                let zeros: Vec<usize> = (0..l).filter(|&i| !bits.get(i)).collect();
                if zeros.len() != 1 {
                    return Err(infeasible());
                }
                Ok(self.nearest_placement(zeros))
            }
            EncodingKind::PositionLinear => {
                let ones: Vec<usize> = (0..l).filter(|&i| bits.get(i)).collect();
                if ones.len() != m {
                    return Err(infeasible());
                }
                Ok(self.nearest_placement(ones))
            }
            EncodingKind::StartDest => {
                let mut positions = Vec::with_capacity(m);
                for a in 0..m {
                    let ones: Vec<usize> = (0..l).filter(|&i| bits.get(a * l + i)).collect();
                    if ones.len() != 1 {
                        return Err(infeasible());
                    }
                    positions.push(ones[0]);
                }
                if self.problem.forbid_colocation && positions.iter().duplicates().next().is_some() {
                    return Err(infeasible());
                }
                let mut assignments = Vec::with_capacity(l);
                for node in 0..l {
                    let serving: Vec<usize> = (0..m)
                        .filter(|&a| bits.get(m * l + a * l + node))
                        .collect();
                    if serving.len() != 1 {
                        return Err(infeasible());
                    }
                    assignments.push(serving[0]);
                }
                let total_distance = assignments
                    .iter()
                    .enumerate()
                    .map(|(node, &a)| self.distances.get(positions[a], node))
                    .sum();
                Ok(Placement {
                    positions,
                    assignments,
                    total_distance,
                })
            }
        }
    }

    fn nearest_placement(&self, positions: Vec<usize>) -> Placement {
        let l = self.problem.num_nodes();
        let assignments: Vec<usize> = (0..l)
            .map(|node| {
                (0..positions.len())
                    .min_by(|&a, &b| {
                        self.distances
                            .get(positions[a], node)
                            .total_cmp(&self.distances.get(positions[b], node))
                            .then(positions[a].cmp(&positions[b]))
                    })
                    .expect("at least one ambulance")
            })
            .collect();
        let total_distance = assignments
            .iter()
            .enumerate()
            .map(|(node, &a)| self.distances.get(positions[a], node))
            .sum();
        Placement {
            positions,
            assignments,
            total_distance,
        }
    }

    /// Smallest and largest penalty-free cost over feasible states.
    pub fn feasible_objective_range(&self) -> (f64, f64) {
        let l = self.problem.num_nodes();
        let m = self.problem.ambulances;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        match self.kind {
            EncodingKind::ComplementSingle => {
                for pos in 0..l {
                    let bits: Vec<bool> = (0..l).map(|i| i != pos).collect();
                    let e = self.objective.energy(&bits).expect("sized");
                    lo = lo.min(e);
                    hi = hi.max(e);
                }
            }
            EncodingKind::PositionLinear => {
                for combo in (0..l).combinations(m) {
                    let mut bits = vec![false; l];
                    for &i in &combo {
                        bits[i] = true;
                    }
                    let e = self.objective.energy(&bits).expect("sized");
                    lo = lo.min(e);
                    hi = hi.max(e);
                }
            }
            EncodingKind::StartDest => {
                for tuple in (0..m).map(|_| 0..l).multi_cartesian_product() {
                    if self.problem.forbid_colocation && tuple.iter().duplicates().next().is_some() {
                        continue;
                    }
                    let mut near = 0.0;
                    let mut far = 0.0;
                    for node in 0..l {
                        let ds = tuple.iter().map(|&p| self.distances.get(p, node));
                        near += ds.clone().fold(f64::INFINITY, f64::min);
                        far += ds.fold(f64::NEG_INFINITY, f64::max);
                    }
                    lo = lo.min(near);
                    hi = hi.max(far);
                }
            }
        }
        (lo, hi)
    }
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Adds `(Σ_{q∈qubits} s_q - target)²` to `model`.
fn add_squared_count(model: &mut QuboModel, qubits: &[usize], target: usize) -> Result<()> {
    let k = target as f64;
    for &q in qubits {
        model.add_linear(q, 1.0 - 2.0 * k)?;
    }
    for (a, &qa) in qubits.iter().enumerate() {
        for &qb in &qubits[a + 1..] {
            model.add_quadratic(qa, qb, 2.0)?;
        }
    }
    model.add_offset(k * k);
    Ok(())
}

fn finish(
    kind: EncodingKind,
    problem: &FacilityProblem,
    roles: Vec<QubitRole>,
    targets: Vec<HammingTarget>,
    objective: QuboModel,
    penalty: QuboModel,
    cardinality_penalty: bool,
) -> Result<Encoding> {
    let lambda = problem.lambda();
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(invalid(format!("penalty weight {lambda} must be finite and non-negative")));
    }
    let mut model = objective.clone();
    model.add_scaled(&penalty, lambda)?;
    Ok(Encoding {
        kind,
        problem: problem.clone(),
        distances: problem.distances(),
        lambda,
        roles,
        targets,
        objective,
        penalty,
        model,
        cardinality_penalty,
    })
}

/// Single ambulance, `0` marks its node, `L - 1` ones in every feasible state.
///
/// Cost: `Σ_{i<j} -d_ij s_i s_j + λ(Σ_i (1 - 2c) s_i + Σ_{i<j} 2 s_i s_j)`
/// with `c = L - 1`.
pub fn encode_single_complement(problem: &FacilityProblem) -> Result<Encoding> {
    if problem.ambulances != 1 {
        return Err(invalid("complement encoding needs exactly one ambulance"));
    }
    let l = problem.num_nodes();
    if l < 2 {
        return Err(invalid("complement encoding needs at least two nodes"));
    }
    let c = l - 1;
    let d = problem.distances();
    let mut objective = QuboModel::new(l);
    let mut penalty = QuboModel::new(l);
    for i in 0..l {
        penalty.add_linear(i, 1.0 - 2.0 * c as f64)?;
        for j in i + 1..l {
            objective.add_quadratic(i, j, -d.get(i, j))?;
            penalty.add_quadratic(i, j, 2.0)?;
        }
    }
    finish(
        EncodingKind::ComplementSingle,
        problem,
        (0..l).map(|node| QubitRole::Location { node }).collect(),
        vec![HammingTarget {
            qubits: (0..l).collect(),
            weight: c,
        }],
        objective,
        penalty,
        false,
    )
}

/// Start/destination layout for `m` ambulances on `L` nodes.
///
/// Qubit `a·L + i` is "ambulance `a` starts at `i`"; qubit `m·L + a·L + ℓ` is
/// "ambulance `a` serves node `ℓ`".
pub fn encode_start_dest(problem: &FacilityProblem) -> Result<Encoding> {
    let (m, l) = (problem.ambulances, problem.num_nodes());
    if m == 0 || l == 0 {
        return Err(invalid("need at least one ambulance and one node"));
    }
    let n = 2 * m * l;
    let start = |a: usize, i: usize| a * l + i;
    let dest = |a: usize, node: usize| m * l + a * l + node;
    let d = problem.distances();
    let mut objective = QuboModel::new(n);
    let mut penalty = QuboModel::new(n);
    for a in 0..m {
        for i in 0..l {
            for node in 0..l {
                let dist = d.get(i, node);
                if dist != 0.0 {
                    objective.add_quadratic(start(a, i), dest(a, node), dist)?;
                }
            }
        }
    }
    let mut targets = Vec::with_capacity(m + 1);
    for a in 0..m {
        let block: Vec<usize> = (0..l).map(|i| start(a, i)).collect();
        add_squared_count(&mut penalty, &block, 1)?;
        targets.push(HammingTarget {
            qubits: block,
            weight: 1,
        });
    }
    for node in 0..l {
        let served: Vec<usize> = (0..m).map(|a| dest(a, node)).collect();
        add_squared_count(&mut penalty, &served, 1)?;
    }
    if problem.forbid_colocation {
        for i in 0..l {
            for (a, b) in (0..m).tuple_combinations() {
                penalty.add_quadratic(start(a, i), start(b, i), 1.0)?;
            }
        }
    }
    targets.push(HammingTarget {
        qubits: (m * l..n).collect(),
        weight: l,
    });
    let mut roles = Vec::with_capacity(n);
    for a in 0..m {
        roles.extend((0..l).map(|node| QubitRole::Start { ambulance: a, node }));
    }
    for a in 0..m {
        roles.extend((0..l).map(|node| QubitRole::Dest { ambulance: a, node }));
    }
    finish(
        EncodingKind::StartDest,
        problem,
        roles,
        targets,
        objective,
        penalty,
        false,
    )
}

/// Linear layout: node `i` costs `Σ_ℓ d(i, ℓ)` when it hosts an ambulance.
///
/// With `cardinality_penalty` the term `λ(Σ s_i - m)²` is added; without it
/// the feasible space must be enforced by the ansatz.
pub fn encode_position_linear(
    problem: &FacilityProblem,
    cardinality_penalty: bool,
) -> Result<Encoding> {
    let (m, l) = (problem.ambulances, problem.num_nodes());
    if m == 0 || m > l {
        return Err(invalid(format!("cannot place {m} ambulances on {l} nodes")));
    }
    let d = problem.distances();
    let mut objective = QuboModel::new(l);
    for i in 0..l {
        objective.add_linear(i, d.row(i).iter().sum())?;
    }
    let mut penalty = QuboModel::new(l);
    let all: Vec<usize> = (0..l).collect();
    if cardinality_penalty {
        add_squared_count(&mut penalty, &all, m)?;
    }
    finish(
        EncodingKind::PositionLinear,
        problem,
        (0..l).map(|node| QubitRole::Location { node }).collect(),
        vec![HammingTarget {
            qubits: all,
            weight: m,
        }],
        objective,
        penalty,
        cardinality_penalty,
    )
}

/// Built-in benchmark instances.
pub mod presets {
    use super::*;

    /// Five-node line, one ambulance, complement layout.
    pub fn problem_a(lambda: f64) -> Result<Encoding> {
        encode_single_complement(
            &FacilityProblem::new(Geometry::Line { nodes: 5 }, 1)
                .with_penalty(Penalty::Absolute(lambda)),
        )
    }

    /// Four-node line, two ambulances, start/destination layout.
    pub fn problem_b(penalty: Penalty) -> Result<Encoding> {
        encode_start_dest(&FacilityProblem::new(Geometry::Line { nodes: 4 }, 2).with_penalty(penalty))
    }

    /// Eight-node line, two ambulances, linear layout.
    pub fn problem_c(penalty: Penalty, cardinality_penalty: bool) -> Result<Encoding> {
        encode_position_linear(
            &FacilityProblem::new(Geometry::Line { nodes: 8 }, 2).with_penalty(penalty),
            cardinality_penalty,
        )
    }

    /// Square grid with two ambulances in the start/destination layout.
    pub fn grid_two_ambulances(side: usize, penalty: Penalty) -> Result<Encoding> {
        encode_start_dest(
            &FacilityProblem::new(
                Geometry::Grid {
                    rows: side,
                    cols: side,
                },
                2,
            )
            .with_penalty(penalty),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ising::{enumerate_spectrum, CostModel};

    fn line(nodes: usize, m: usize) -> FacilityProblem {
        FacilityProblem::new(Geometry::Line { nodes }, m)
    }

    #[test]
    fn grid_distances() {
        let d = DistanceMatrix::new(Geometry::Grid { rows: 3, cols: 2 }, Metric::SquaredEuclidean);
        assert_eq!(d.get(0, 5), 5.0);
        assert_eq!(d.max(), 5.0);
        let man = DistanceMatrix::new(Geometry::Grid { rows: 3, cols: 2 }, Metric::Manhattan);
        assert_eq!(man.get(0, 5), 3.0);
    }

    #[test]
    fn complement_line3() {
        let enc = encode_single_complement(&line(3, 1).with_penalty(Penalty::Absolute(0.0))).unwrap();
        assert_eq!(enc.complement_weight(), Some(2));
        assert_eq!(enc.model().quadratic_coeff(0, 2), -4.0);
        assert_eq!(enc.model().quadratic_coeff(0, 1), -1.0);
    }

    #[test]
    fn complement_rejects_two_ambulances() {
        assert!(encode_single_complement(&line(5, 2)).is_err());
    }

    #[test]
    fn complement_decodes_centre() {
        let enc = presets::problem_a(10.0).unwrap();
        let p = enc.decode(&"11011".parse().unwrap()).unwrap();
        assert_eq!(p.positions, vec![2]);
        assert_eq!(p.total_distance, 10.0);
        assert!(enc.decode(&"11111".parse().unwrap()).is_err());
    }

    #[test]
    fn start_dest_layout() {
        let enc = presets::problem_b(Penalty::Ratio(1.0)).unwrap();
        assert_eq!(enc.num_qubits(), 16);
        assert_eq!(enc.roles()[5], QubitRole::Start { ambulance: 1, node: 1 });
        assert_eq!(enc.roles()[13], QubitRole::Dest { ambulance: 1, node: 1 });
        assert_eq!(enc.sector_size(), 1120);
        let n_sector = (0..1u64 << 16).filter(|&i| enc.in_sector(i)).count();
        let n_feasible = (0..1u64 << 16).filter(|&i| enc.is_feasible(i)).count();
        assert_eq!(n_sector, 1120);
        assert_eq!(n_feasible, 4 * 4 * 16);
    }

    #[test]
    fn start_dest_feasible_energy_is_distance() {
        let enc = presets::problem_b(Penalty::Ratio(1.0)).unwrap();
        for idx in (0..1u64 << 16).filter(|&i| enc.is_feasible(i)) {
            let bits = BitString::from_index(idx, 16);
            let p = enc.decode(&bits).unwrap();
            assert_eq!(enc.model().energy_of_index(idx), p.total_distance);
            assert_eq!(enc.penalty().energy_of_index(idx), 0.0);
        }
    }

    #[test]
    fn start_dest_ground_states() {
        let enc = presets::problem_b(Penalty::Ratio(1.0)).unwrap();
        let spec = enumerate_spectrum(enc.model(), None).unwrap();
        assert_eq!(spec[0].energy, 2.0);
        assert_eq!(spec[0].states.len(), 12);
        assert!(spec[0].states.iter().all(|&i| enc.is_feasible(i)));
        assert_eq!(enc.feasible_objective_range().0, 2.0);
    }

    #[test]
    fn colocation_penalty() {
        let mut p = line(3, 2);
        p.forbid_colocation = true;
        let enc = encode_start_dest(&p).unwrap();
        // both start at node 0, ambulance 0 serves everything
        let mut bits = BitString::zeros(12);
        bits.set(0, true);
        bits.set(3, true);
        for node in 0..3 {
            bits.set(6 + node, true);
        }
        assert!(!enc.is_feasible(bits.to_index().unwrap()));
        assert!(enc.decode(&bits).is_err());
        assert_eq!(enc.penalty().energy_of_bits(&bits).unwrap(), 1.0);
    }

    #[test]
    fn position_linear_fields() {
        let enc = encode_position_linear(&line(3, 1), false).unwrap();
        let fields: Vec<f64> = (0..3).map(|i| enc.model().linear_coeff(i)).collect();
        assert_eq!(fields, vec![5.0, 2.0, 5.0]);
        assert_eq!(enc.model().num_terms(), 3);
    }

    #[test]
    fn problem_c_ground_state() {
        let enc = presets::problem_c(Penalty::Ratio(1.0), true).unwrap();
        let g = crate::ising::ground_level(enc.model(), None).unwrap().unwrap();
        assert_eq!(g.states, vec![0b0001_1000]);
        assert_eq!(g.energy, 88.0);
        assert_eq!(enc.feasible_objective_range().0, 88.0);
    }

    #[test]
    fn problem_file_keys() {
        let p = FacilityProblem::from_key_values([
            ("geometry", "grid"),
            ("rows", "3"),
            ("cols", "2"),
            ("ambulances", "2"),
            ("metric", "squared-euclidean"),
            ("lambda_ratio", "1.5"),
            ("forbid_colocation", "true"),
        ])
        .unwrap();
        assert_eq!(p.geometry, Geometry::Grid { rows: 3, cols: 2 });
        assert_eq!(p.lambda(), 7.5);
        assert!(p.forbid_colocation);
        assert!(FacilityProblem::from_key_values([("geometry", "torus")]).is_err());
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(8, 4), 70);
        assert_eq!(binomial(4, 5), 0);
        assert_eq!(binomial(16, 2), 120);
    }
}
