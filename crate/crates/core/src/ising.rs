//! QUBO and Ising models, the exact conversion between them, and exhaustive
//! spectrum enumeration.
//!
//! Binary variables `s ∈ {0,1}` map to spins through `z = 1 - 2s`, so the
//! all-zero bitstring is the all-up spin state.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::bits::BitString;
use crate::error::{check_capacity, invalid, Error, Result};

/// Largest register that [`enumerate_spectrum`] will walk.
pub const MAX_ENUMERATION_QUBITS: usize = 26;

/// Relative tolerance used when grouping energies into levels.
pub const ENERGY_TOLERANCE: f64 = 1e-9;

/// True when two energies belong to the same level.
pub fn same_energy(a: f64, b: f64) -> bool {
    (a - b).abs() <= ENERGY_TOLERANCE * a.abs().max(b.abs()).max(1.0)
}

/// Anything with a diagonal cost over computational basis states.
pub trait CostModel: Sync {
    fn num_qubits(&self) -> usize;

    fn energy_of_index(&self, index: u64) -> f64;

    /// Energies of all `2^n` basis states, indexed by basis index.
    fn diagonal(&self) -> Result<Vec<f64>>;
}

fn check_index(i: usize, n: usize) -> Result<()> {
    if i >= n {
        Err(Error::IndexOutOfRange { index: i, n })
    } else {
        Ok(())
    }
}

fn accumulate<K: Ord>(map: &mut BTreeMap<K, f64>, key: K, c: f64) {
    *map.entry(key).or_insert(0.0) += c;
}

/// Drops entries that cancelled to exactly zero.
fn prune<K: Ord>(map: &mut BTreeMap<K, f64>) {
    map.retain(|_, v| *v != 0.0);
}

/// `C(s) = offset + Σ_i a_i s_i + Σ_{i<j} b_ij s_i s_j` over binary `s`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct QuboModel {
    n: usize,
    linear: BTreeMap<usize, f64>,
    quadratic: BTreeMap<(usize, usize), f64>,
    offset: f64,
}

impl QuboModel {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            ..Self::default()
        }
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn linear(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.linear.iter().map(|(&i, &c)| (i, c))
    }

    pub fn quadratic(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.quadratic.iter().map(|(&k, &c)| (k, c))
    }

    pub fn linear_coeff(&self, i: usize) -> f64 {
        self.linear.get(&i).copied().unwrap_or(0.0)
    }

    pub fn quadratic_coeff(&self, i: usize, j: usize) -> f64 {
        let key = if i < j { (i, j) } else { (j, i) };
        self.quadratic.get(&key).copied().unwrap_or(0.0)
    }

    pub fn num_terms(&self) -> usize {
        self.linear.len() + self.quadratic.len()
    }

    pub fn add_offset(&mut self, c: f64) {
        self.offset += c;
    }

    pub fn add_linear(&mut self, i: usize, c: f64) -> Result<()> {
        check_index(i, self.n)?;
        accumulate(&mut self.linear, i, c);
        prune(&mut self.linear);
        Ok(())
    }

    /// Adds `c s_i s_j`; a diagonal pair folds into the linear term since `s² = s`.
    pub fn add_quadratic(&mut self, i: usize, j: usize, c: f64) -> Result<()> {
        check_index(i, self.n)?;
        check_index(j, self.n)?;
        if i == j {
            return self.add_linear(i, c);
        }
        let key = if i < j { (i, j) } else { (j, i) };
        accumulate(&mut self.quadratic, key, c);
        prune(&mut self.quadratic);
        Ok(())
    }

    /// Adds `factor * other` term by term.
    pub fn add_scaled(&mut self, other: &QuboModel, factor: f64) -> Result<()> {
        if other.n != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        for (i, c) in other.linear() {
            self.add_linear(i, factor * c)?;
        }
        for ((i, j), c) in other.quadratic() {
            self.add_quadratic(i, j, factor * c)?;
        }
        self.offset += factor * other.offset;
        Ok(())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = Self::new(self.n);
        out.add_scaled(self, factor).expect("same size");
        out
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.linear
            .values()
            .chain(self.quadratic.values())
            .fold(0.0f64, |m, c| m.max(c.abs()))
    }

    pub fn energy(&self, s: &[bool]) -> Result<f64> {
        if s.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: s.len(),
            });
        }
        let mut e = self.offset;
        for (&i, &c) in &self.linear {
            if s[i] {
                e += c;
            }
        }
        for (&(i, j), &c) in &self.quadratic {
            if s[i] && s[j] {
                e += c;
            }
        }
        Ok(e)
    }

    pub fn energy_of_bits(&self, s: &BitString) -> Result<f64> {
        self.energy(s.as_slice())
    }

    /// Exact Ising form under `s = (1 - z) / 2`.
    pub fn to_ising(&self) -> IsingModel {
        let mut out = IsingModel::new(self.n);
        out.offset = self.offset;
        for (&i, &a) in &self.linear {
            accumulate(&mut out.fields, i, -a / 2.0);
            out.offset += a / 2.0;
        }
        for (&(i, j), &b) in &self.quadratic {
            let q = b / 4.0;
            accumulate(&mut out.couplings, (i, j), q);
            accumulate(&mut out.fields, i, -q);
            accumulate(&mut out.fields, j, -q);
            out.offset += q;
        }
        prune(&mut out.fields);
        prune(&mut out.couplings);
        out
    }

    /// Adjacency view used by the local-search heuristics.
    pub fn graph(&self) -> QuboGraph {
        QuboGraph::from_model(self)
    }

    /// Serialises to the line-oriented model text format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "n {}", self.n);
        let _ = writeln!(out, "offset {:?}", self.offset);
        for (i, c) in self.linear() {
            let _ = writeln!(out, "lin {i} {c:?}");
        }
        for ((i, j), c) in self.quadratic() {
            let _ = writeln!(out, "quad {i} {j} {c:?}");
        }
        out
    }

    /// Parses the model text format. Blank lines and `#` comments are ignored.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut model: Option<QuboModel> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse {
                line: lineno + 1,
                message,
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            let num = |k: usize| -> Result<f64> {
                fields
                    .get(k)
                    .ok_or_else(|| err("missing field".into()))?
                    .parse::<f64>()
                    .map_err(|e| err(e.to_string()))
            };
            let idx = |k: usize| -> Result<usize> {
                fields
                    .get(k)
                    .ok_or_else(|| err("missing field".into()))?
                    .parse::<usize>()
                    .map_err(|e| err(e.to_string()))
            };
            match fields[0] {
                "n" => {
                    if model.is_some() {
                        return Err(err("duplicate n line".into()));
                    }
                    model = Some(QuboModel::new(idx(1)?));
                }
                kw @ ("offset" | "lin" | "quad") => {
                    let m = model
                        .as_mut()
                        .ok_or_else(|| err("n must come first".into()))?;
                    let res = match kw {
                        "offset" => {
                            m.add_offset(num(1)?);
                            Ok(())
                        }
                        "lin" => m.add_linear(idx(1)?, num(2)?),
                        _ => m.add_quadratic(idx(1)?, idx(2)?, num(3)?),
                    };
                    res.map_err(|e| err(e.to_string()))?;
                }
                other => return Err(err(format!("unknown keyword {other:?}"))),
            }
        }
        model.ok_or_else(|| invalid("model text has no n line"))
    }
}

impl CostModel for QuboModel {
    fn num_qubits(&self) -> usize {
        self.n
    }

    fn energy_of_index(&self, index: u64) -> f64 {
        let mut e = self.offset;
        for (&i, &c) in &self.linear {
            if index >> i & 1 == 1 {
                e += c;
            }
        }
        for (&(i, j), &c) in &self.quadratic {
            if index >> i & 1 == 1 && index >> j & 1 == 1 {
                e += c;
            }
        }
        e
    }

    fn diagonal(&self) -> Result<Vec<f64>> {
        check_capacity("qubits for diagonal", self.n, MAX_ENUMERATION_QUBITS)?;
        let g = self.graph();
        let size = 1usize << self.n;
        let mut diag = vec![0.0; size];
        diag[0] = self.offset;
        for idx in 1..size {
            let k = idx.trailing_zeros() as usize;
            let rest = idx & (idx - 1);
            let mut e = diag[rest] + g.linear[k];
            for &(j, c) in &g.neighbours[k] {
                if rest >> j & 1 == 1 {
                    e += c;
                }
            }
            diag[idx] = e;
        }
        Ok(diag)
    }
}

/// `H(z) = offset + Σ_i h_i z_i + Σ_{i<j} J_ij z_i z_j` over spins `z ∈ {±1}`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IsingModel {
    n: usize,
    fields: BTreeMap<usize, f64>,
    couplings: BTreeMap<(usize, usize), f64>,
    offset: f64,
}

impl IsingModel {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            ..Self::default()
        }
    }

    pub fn num_spins(&self) -> usize {
        self.n
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn fields(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.fields.iter().map(|(&i, &c)| (i, c))
    }

    pub fn couplings(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.couplings.iter().map(|(&k, &c)| (k, c))
    }

    pub fn field(&self, i: usize) -> f64 {
        self.fields.get(&i).copied().unwrap_or(0.0)
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        let key = if i < j { (i, j) } else { (j, i) };
        self.couplings.get(&key).copied().unwrap_or(0.0)
    }

    pub fn num_terms(&self) -> usize {
        self.fields.len() + self.couplings.len()
    }

    pub fn add_offset(&mut self, c: f64) {
        self.offset += c;
    }

    pub fn add_field(&mut self, i: usize, c: f64) -> Result<()> {
        check_index(i, self.n)?;
        accumulate(&mut self.fields, i, c);
        prune(&mut self.fields);
        Ok(())
    }

    /// Adds `c z_i z_j`; a diagonal pair is constant since `z² = 1`.
    pub fn add_coupling(&mut self, i: usize, j: usize, c: f64) -> Result<()> {
        check_index(i, self.n)?;
        check_index(j, self.n)?;
        if i == j {
            self.offset += c;
            return Ok(());
        }
        let key = if i < j { (i, j) } else { (j, i) };
        accumulate(&mut self.couplings, key, c);
        prune(&mut self.couplings);
        Ok(())
    }

    pub fn energy(&self, z: &[i8]) -> Result<f64> {
        if z.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: z.len(),
            });
        }
        if let Some(bad) = z.iter().find(|&&v| v != 1 && v != -1) {
            return Err(invalid(format!("spin value {bad} is not ±1")));
        }
        let mut e = self.offset;
        for (&i, &h) in &self.fields {
            e += h * f64::from(z[i]);
        }
        for (&(i, j), &c) in &self.couplings {
            e += c * f64::from(z[i] * z[j]);
        }
        Ok(e)
    }

    /// Exact QUBO form under `z = 1 - 2s`.
    pub fn to_qubo(&self) -> QuboModel {
        let mut out = QuboModel::new(self.n);
        out.offset = self.offset;
        for (&i, &h) in &self.fields {
            out.offset += h;
            accumulate(&mut out.linear, i, -2.0 * h);
        }
        for (&(i, j), &c) in &self.couplings {
            out.offset += c;
            accumulate(&mut out.linear, i, -2.0 * c);
            accumulate(&mut out.linear, j, -2.0 * c);
            accumulate(&mut out.quadratic, (i, j), 4.0 * c);
        }
        prune(&mut out.linear);
        prune(&mut out.quadratic);
        out
    }

    /// Root-mean-square of the coupling strengths.
    pub fn rms_coupling(&self) -> f64 {
        if self.couplings.is_empty() {
            return 0.0;
        }
        let s: f64 = self.couplings.values().map(|c| c * c).sum();
        (s / self.couplings.len() as f64).sqrt()
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.fields
            .values()
            .chain(self.couplings.values())
            .fold(0.0f64, |m, c| m.max(c.abs()))
    }
}

impl CostModel for IsingModel {
    fn num_qubits(&self) -> usize {
        self.n
    }

    fn energy_of_index(&self, index: u64) -> f64 {
        let z = |k: usize| if index >> k & 1 == 1 { -1.0 } else { 1.0 };
        let mut e = self.offset;
        for (&i, &h) in &self.fields {
            e += h * z(i);
        }
        for (&(i, j), &c) in &self.couplings {
            e += c * z(i) * z(j);
        }
        e
    }

    fn diagonal(&self) -> Result<Vec<f64>> {
        self.to_qubo().diagonal()
    }
}

/// Adjacency-list form of a QUBO for incremental local search.
#[derive(Debug, Clone)]
pub struct QuboGraph {
    pub(crate) linear: Vec<f64>,
    pub(crate) neighbours: Vec<Vec<(usize, f64)>>,
    pub(crate) offset: f64,
}

impl QuboGraph {
    pub fn from_model(model: &QuboModel) -> Self {
        let n = model.num_vars();
        let mut linear = vec![0.0; n];
        let mut neighbours = vec![Vec::new(); n];
        for (i, c) in model.linear() {
            linear[i] = c;
        }
        for ((i, j), c) in model.quadratic() {
            neighbours[i].push((j, c));
            neighbours[j].push((i, c));
        }
        Self {
            linear,
            neighbours,
            offset: model.offset(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.linear.len()
    }

    pub fn energy(&self, s: &[bool]) -> f64 {
        let mut e = self.offset;
        for (i, &si) in s.iter().enumerate() {
            if si {
                e += self.linear[i];
                for &(j, c) in &self.neighbours[i] {
                    if j > i && s[j] {
                        e += c;
                    }
                }
            }
        }
        e
    }

    /// `field[i] = a_i + Σ_j b_ij s_j`; flipping `i` changes the energy by
    /// `field[i]` when `s_i = 0` and by `-field[i]` when `s_i = 1`.
    pub fn local_fields(&self, s: &[bool]) -> Vec<f64> {
        (0..self.num_vars())
            .map(|i| {
                self.linear[i]
                    + self.neighbours[i]
                        .iter()
                        .filter(|(j, _)| s[*j])
                        .map(|(_, c)| c)
                        .sum::<f64>()
            })
            .collect()
    }

    pub fn flip_delta(field: &[f64], s: &[bool], i: usize) -> f64 {
        if s[i] {
            -field[i]
        } else {
            field[i]
        }
    }

    /// Flips `i` and updates the neighbours' local fields.
    pub fn apply_flip(&self, field: &mut [f64], s: &mut [bool], i: usize) {
        let sign = if s[i] { -1.0 } else { 1.0 };
        s[i] = !s[i];
        for &(j, c) in &self.neighbours[i] {
            field[j] += sign * c;
        }
    }
}

/// One energy level and the basis states at that energy.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumEntry {
    pub energy: f64,
    pub states: Vec<u64>,
}

/// All levels in ascending energy, optionally restricted by `keep`.
///
/// Energies within [`ENERGY_TOLERANCE`] (relative) of each other share a level.
pub fn enumerate_spectrum<M: CostModel + ?Sized>(
    model: &M,
    keep: Option<&dyn Fn(u64) -> bool>,
) -> Result<Vec<SpectrumEntry>> {
    let n = model.num_qubits();
    check_capacity("qubits for enumeration", n, MAX_ENUMERATION_QUBITS)?;
    let diag = model.diagonal()?;
    let mut pairs: Vec<(f64, u64)> = diag
        .iter()
        .enumerate()
        .map(|(i, &e)| (e, i as u64))
        .filter(|&(_, i)| keep.is_none_or(|f| f(i)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut out: Vec<SpectrumEntry> = Vec::new();
    for (e, i) in pairs {
        match out.last_mut() {
            Some(level) if same_energy(level.energy, e) => level.states.push(i),
            _ => out.push(SpectrumEntry {
                energy: e,
                states: vec![i],
            }),
        }
    }
    for level in &mut out {
        level.states.sort_unstable();
    }
    Ok(out)
}

/// Lowest level only, without materialising the full spectrum.
pub fn ground_level<M: CostModel + ?Sized>(
    model: &M,
    keep: Option<&dyn Fn(u64) -> bool>,
) -> Result<Option<SpectrumEntry>> {
    let n = model.num_qubits();
    check_capacity("qubits for enumeration", n, MAX_ENUMERATION_QUBITS)?;
    let mut best: Option<SpectrumEntry> = None;
    for idx in 0..(1u64 << n) {
        if !keep.is_none_or(|f| f(idx)) {
            continue;
        }
        let e = model.energy_of_index(idx);
        match &mut best {
            Some(level) if same_energy(level.energy, e) => level.states.push(idx),
            Some(level) if e > level.energy => {}
            _ => {
                best = Some(SpectrumEntry {
                    energy: e,
                    states: vec![idx],
                })
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn single_edge() -> QuboModel {
        let mut q = QuboModel::new(2);
        q.add_quadratic(0, 1, 1.0).unwrap();
        q
    }

    #[test]
    fn single_edge_ising_coefficients() {
        let h = single_edge().to_ising();
        assert_eq!(h.offset(), 0.25);
        assert_eq!(h.field(0), -0.25);
        assert_eq!(h.field(1), -0.25);
        assert_eq!(h.coupling(0, 1), 0.25);
    }

    #[test]
    fn diagonal_pair_folds_into_linear() {
        let mut q = QuboModel::new(3);
        q.add_quadratic(1, 1, 2.5).unwrap();
        assert_eq!(q.linear_coeff(1), 2.5);
        assert_eq!(q.num_terms(), 1);
    }

    #[test]
    fn rejects_out_of_range_and_bad_lengths() {
        let mut q = QuboModel::new(2);
        assert!(q.add_linear(2, 1.0).is_err());
        assert!(q.energy(&[true]).is_err());
        let h = IsingModel::new(2);
        assert!(h.energy(&[1, 0]).is_err());
    }

    #[test]
    fn text_round_trip_is_exact() {
        let mut q = QuboModel::new(4);
        q.add_offset(-1.0 / 3.0);
        q.add_linear(0, 0.1).unwrap();
        q.add_linear(3, -7.25).unwrap();
        q.add_quadratic(2, 1, 1e-17).unwrap();
        let back = QuboModel::from_text(&q.to_text()).unwrap();
        assert_eq!(back, q);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let e = QuboModel::from_text("n 2\nlin 0 x\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
        assert!(QuboModel::from_text("lin 0 1\n").is_err());
    }

    #[test]
    fn spectrum_partitions_states() {
        let q = single_edge();
        let spec = enumerate_spectrum(&q, None).unwrap();
        assert_eq!(spec.len(), 2);
        assert_eq!(spec[0].energy, 0.0);
        assert_eq!(spec[0].states, vec![0, 1, 2]);
        assert_eq!(spec[1].states, vec![3]);
        let g = ground_level(&q, Some(&|i| i != 0)).unwrap().unwrap();
        assert_eq!(g.states, vec![1, 2]);
    }

    #[test]
    fn enumeration_cap() {
        let q = QuboModel::new(MAX_ENUMERATION_QUBITS + 1);
        assert!(matches!(
            enumerate_spectrum(&q, None),
            Err(Error::CapacityExceeded { .. })
        ));
    }

    fn arb_qubo() -> impl Strategy<Value = QuboModel> {
        (1usize..=7).prop_flat_map(|n| {
            (
                proptest::collection::vec(-5.0f64..5.0, n),
                proptest::collection::vec(-5.0f64..5.0, n * n),
                -3.0f64..3.0,
            )
                .prop_map(move |(lin, quad, off)| {
                    let mut q = QuboModel::new(n);
                    q.add_offset(off);
                    for (i, c) in lin.into_iter().enumerate() {
                        q.add_linear(i, c).unwrap();
                    }
                    for i in 0..n {
                        for j in i + 1..n {
                            q.add_quadratic(i, j, quad[i * n + j]).unwrap();
                        }
                    }
                    q
                })
        })
    }

    proptest! {
        #[test]
        fn qubo_ising_energies_agree(q in arb_qubo()) {
            let h = q.to_ising();
            let n = q.num_vars();
            let diag = q.diagonal().unwrap();
            for idx in 0..(1u64 << n) {
                let s = BitString::from_index(idx, n);
                let eq = q.energy(s.as_slice()).unwrap();
                let eh = h.energy(&s.spins()).unwrap();
                prop_assert!((eq - eh).abs() <= 1e-12 * eq.abs().max(1.0));
                prop_assert!((diag[idx as usize] - eq).abs() <= 1e-12 * eq.abs().max(1.0));
                prop_assert!((h.energy_of_index(idx) - eq).abs() <= 1e-12 * eq.abs().max(1.0));
            }
        }

        #[test]
        fn round_trip_through_ising(q in arb_qubo()) {
            let back = q.to_ising().to_qubo();
            let n = q.num_vars();
            for idx in 0..(1u64 << n) {
                let a = q.energy_of_index(idx);
                let b = back.energy_of_index(idx);
                prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
            }
        }

        #[test]
        fn local_fields_track_flips(q in arb_qubo(), flips in proptest::collection::vec(0usize..7, 1..20)) {
            let g = q.graph();
            let n = g.num_vars();
            let mut s = vec![false; n];
            let mut field = g.local_fields(&s);
            let mut e = g.energy(&s);
            for f in flips {
                let i = f % n;
                e += QuboGraph::flip_delta(&field, &s, i);
                g.apply_flip(&mut field, &mut s, i);
                prop_assert!((e - g.energy(&s)).abs() < 1e-9);
            }
        }
    }
}
