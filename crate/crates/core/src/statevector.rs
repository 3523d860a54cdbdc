//! Dense statevector simulation.
//!
//! Amplitude `k` belongs to the basis state whose qubit `q` is bit `q` of `k`.
//! Phase separators apply `exp(-iγC)`, mixers `exp(-iβB)`.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;

use crate::bits::BitString;
use crate::encoders::binomial;
use crate::error::{check_capacity, invalid, Error, Result};
use crate::ising::CostModel;
use crate::stats::rng_from_seed;

pub const MAX_STATEVECTOR_QUBITS: usize = 24;
pub const MAX_XY_RING: usize = 12;
pub const MAX_LOCAL_UNITARY_QUBITS: usize = 12;

/// Maximum allowed deviation of `U†U` from the identity.
pub const UNITARITY_TOLERANCE: f64 = 1e-10;

pub type C64 = Complex64;

/// Initial content of one block in a block-product state.
#[derive(Debug, Clone, PartialEq)]
pub enum BlockContent {
    /// Equal superposition of all weight-`k` strings on the block.
    Dicke(usize),
    /// A computational basis string over the block's qubits, in block order.
    Basis(BitString),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub qubits: Vec<usize>,
    pub content: BlockContent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<C64>,
}

fn check_qubit(q: usize, n: usize) -> Result<()> {
    if q >= n {
        Err(Error::IndexOutOfRange { index: q, n })
    } else {
        Ok(())
    }
}

fn check_distinct(qubits: &[usize], n: usize) -> Result<()> {
    let mut seen = 0u64;
    for &q in qubits {
        check_qubit(q, n)?;
        if seen >> q & 1 == 1 {
            return Err(invalid(format!("qubit {q} listed twice")));
        }
        seen |= 1 << q;
    }
    Ok(())
}

/// Scatters the bits of `local` onto the listed qubit positions.
fn deposit(local: usize, qubits: &[usize]) -> usize {
    qubits
        .iter()
        .enumerate()
        .filter(|(k, _)| local >> k & 1 == 1)
        .fold(0, |acc, (_, &q)| acc | 1 << q)
}

impl StateVector {
    fn zeroed(n: usize) -> Result<Self> {
        check_capacity("statevector qubits", n, MAX_STATEVECTOR_QUBITS)?;
        Ok(Self {
            n,
            amps: vec![C64::new(0.0, 0.0); 1 << n],
        })
    }

    pub fn basis(n: usize, index: u64) -> Result<Self> {
        let mut s = Self::zeroed(n)?;
        let slot = s
            .amps
            .get_mut(index as usize)
            .ok_or_else(|| invalid(format!("basis index {index} out of range")))?;
        *slot = C64::new(1.0, 0.0);
        Ok(s)
    }

    pub fn uniform(n: usize) -> Result<Self> {
        let mut s = Self::zeroed(n)?;
        let a = C64::new(1.0 / ((1u64 << n) as f64).sqrt(), 0.0);
        s.amps.fill(a);
        Ok(s)
    }

    pub fn dicke(n: usize, k: usize) -> Result<Self> {
        if k > n {
            return Err(invalid(format!("Dicke weight {k} exceeds {n} qubits")));
        }
        let mut s = Self::zeroed(n)?;
        let a = C64::new(1.0 / (binomial(n, k) as f64).sqrt(), 0.0);
        for (i, amp) in s.amps.iter_mut().enumerate() {
            if i.count_ones() as usize == k {
                *amp = a;
            }
        }
        Ok(s)
    }

    /// Tensor product of per-block states; the blocks must partition `0..n`.
    pub fn block_product(n: usize, blocks: &[Block]) -> Result<Self> {
        let mut covered = 0u64;
        for b in blocks {
            check_distinct(&b.qubits, n)?;
            for &q in &b.qubits {
                if covered >> q & 1 == 1 {
                    return Err(invalid(format!("qubit {q} appears in two blocks")));
                }
                covered |= 1 << q;
            }
        }
        if covered.count_ones() as usize != n {
            return Err(invalid("blocks do not cover every qubit"));
        }
        let mut support: Vec<(usize, f64)> = vec![(0, 1.0)];
        for b in blocks {
            let m = b.qubits.len();
            let local: Vec<(usize, f64)> = match &b.content {
                BlockContent::Dicke(k) => {
                    if *k > m {
                        return Err(invalid(format!("Dicke weight {k} exceeds block of {m}")));
                    }
                    let a = 1.0 / (binomial(m, *k) as f64).sqrt();
                    (0..1usize << m)
                        .filter(|l| l.count_ones() as usize == *k)
                        .map(|l| (deposit(l, &b.qubits), a))
                        .collect()
                }
                BlockContent::Basis(bits) => {
                    if bits.len() != m {
                        return Err(Error::LengthMismatch {
                            expected: m,
                            got: bits.len(),
                        });
                    }
                    let l = bits.to_index()? as usize;
                    vec![(deposit(l, &b.qubits), 1.0)]
                }
            };
            support = support
                .iter()
                .flat_map(|&(i, a)| local.iter().map(move |&(j, b)| (i | j, a * b)))
                .collect();
        }
        let mut s = Self::zeroed(n)?;
        for (i, a) in support {
            s.amps[i] = C64::new(a, 0.0);
        }
        Ok(s)
    }

    pub fn from_amplitudes(n: usize, amps: Vec<C64>) -> Result<Self> {
        check_capacity("statevector qubits", n, MAX_STATEVECTOR_QUBITS)?;
        if amps.len() != 1 << n {
            return Err(Error::LengthMismatch {
                expected: 1 << n,
                got: amps.len(),
            });
        }
        Ok(Self { n, amps })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn amplitude(&self, index: u64) -> C64 {
        self.amps[index as usize]
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Total probability of basis states accepted by `keep`.
    pub fn probability_where(&self, keep: impl Fn(u64) -> bool) -> f64 {
        self.amps
            .iter()
            .enumerate()
            .filter(|(i, _)| keep(*i as u64))
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Multiplies amplitude `k` by `exp(-iγ·diag[k])`.
    pub fn apply_phase_diagonal(&mut self, diag: &[f64], gamma: f64) -> Result<()> {
        if diag.len() != self.amps.len() {
            return Err(Error::LengthMismatch {
                expected: self.amps.len(),
                got: diag.len(),
            });
        }
        for (a, &e) in self.amps.iter_mut().zip(diag) {
            if *a != C64::new(0.0, 0.0) {
                *a *= C64::from_polar(1.0, -gamma * e);
            }
        }
        Ok(())
    }

    pub fn apply_phase_separator<M: CostModel + ?Sized>(&mut self, model: &M, gamma: f64) -> Result<()> {
        if model.num_qubits() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: model.num_qubits(),
            });
        }
        self.apply_phase_diagonal(&model.diagonal()?, gamma)
    }

    pub fn apply_single_qubit(&mut self, q: usize, u: [[C64; 2]; 2]) -> Result<()> {
        check_qubit(q, self.n)?;
        let bit = 1usize << q;
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                let (a0, a1) = (self.amps[i], self.amps[i | bit]);
                self.amps[i] = u[0][0] * a0 + u[0][1] * a1;
                self.amps[i | bit] = u[1][0] * a0 + u[1][1] * a1;
            }
        }
        Ok(())
    }

    /// `exp(-iβ Σ_q X_q)`.
    pub fn apply_x_mixer(&mut self, beta: f64) {
        let (c, s) = (C64::new(beta.cos(), 0.0), C64::new(0.0, -beta.sin()));
        for q in 0..self.n {
            self.apply_single_qubit(q, [[c, s], [s, c]])
                .expect("qubit in range");
        }
    }

    /// `Ry(θ) = [[cos θ/2, -sin θ/2], [sin θ/2, cos θ/2]]`.
    pub fn apply_ry(&mut self, q: usize, theta: f64) -> Result<()> {
        let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        self.apply_single_qubit(
            q,
            [
                [C64::new(c, 0.0), C64::new(-s, 0.0)],
                [C64::new(s, 0.0), C64::new(c, 0.0)],
            ],
        )
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) -> Result<()> {
        check_qubit(control, self.n)?;
        check_qubit(target, self.n)?;
        if control == target {
            return Err(invalid("CNOT control equals target"));
        }
        let (cb, tb) = (1usize << control, 1usize << target);
        for i in 0..self.amps.len() {
            if i & cb != 0 && i & tb == 0 {
                self.amps.swap(i, i | tb);
            }
        }
        Ok(())
    }

    /// Applies a dense `2^k × 2^k` unitary to the listed qubits; local bit `j`
    /// of the matrix index is `qubits[j]`.
    pub fn apply_local_unitary(&mut self, qubits: &[usize], u: &DMatrix<C64>) -> Result<()> {
        let k = qubits.len();
        check_capacity("local unitary qubits", k, MAX_LOCAL_UNITARY_QUBITS)?;
        check_distinct(qubits, self.n)?;
        let dim = 1usize << k;
        if u.nrows() != dim || u.ncols() != dim {
            return Err(Error::LengthMismatch {
                expected: dim,
                got: u.nrows(),
            });
        }
        let dev = unitarity_deviation(u);
        if dev > UNITARITY_TOLERANCE {
            return Err(Error::NonUnitary(dev));
        }
        let offsets: Vec<usize> = (0..dim).map(|l| deposit(l, qubits)).collect();
        let mask = offsets[dim - 1];
        let mut buf = DVector::<C64>::zeros(dim);
        for base in 0..self.amps.len() {
            if base & mask != 0 {
                continue;
            }
            for (l, &o) in offsets.iter().enumerate() {
                buf[l] = self.amps[base | o];
            }
            let out = u * &buf;
            for (l, &o) in offsets.iter().enumerate() {
                self.amps[base | o] = out[l];
            }
        }
        Ok(())
    }

    /// `exp(-iβ H_XY)` on a ring, `H_XY = ½Σ(X_iX_{i+1} + Y_iY_{i+1})`.
    pub fn apply_xy_ring(&mut self, ring: &[usize], beta: f64) -> Result<()> {
        XyRingPropagator::shared(ring.len())?.apply(self, ring, beta)
    }

    pub fn expectation_diagonal(&self, diag: &[f64]) -> f64 {
        self.amps
            .iter()
            .zip(diag)
            .map(|(a, &e)| a.norm_sqr() * e)
            .sum()
    }

    pub fn expectation<M: CostModel + ?Sized>(&self, model: &M) -> Result<f64> {
        if model.num_qubits() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: model.num_qubits(),
            });
        }
        Ok(self.expectation_diagonal(&model.diagonal()?))
    }

    /// Draws `shots` computational-basis measurements.
    pub fn sample(&self, shots: usize, seed: u64) -> SampleSet {
        let mut cdf = Vec::with_capacity(self.amps.len());
        let mut acc = 0.0;
        for a in &self.amps {
            acc += a.norm_sqr();
            cdf.push(acc);
        }
        let total = acc;
        let mut rng = rng_from_seed(seed);
        let mut counts = BTreeMap::new();
        for _ in 0..shots {
            let u: f64 = rng.random::<f64>() * total;
            let mut idx = cdf.partition_point(|&c| c <= u);
            if idx >= cdf.len() {
                idx = cdf.len() - 1;
            }
            // never report a zero-probability state
            while self.amps[idx].norm_sqr() == 0.0 && idx > 0 {
                idx -= 1;
            }
            *counts.entry(idx as u64).or_insert(0u64) += 1;
        }
        SampleSet {
            n: self.n,
            shots,
            counts,
        }
    }
}

pub fn unitarity_deviation(u: &DMatrix<C64>) -> f64 {
    let prod = u.adjoint() * u;
    let mut dev = 0.0f64;
    for i in 0..prod.nrows() {
        for j in 0..prod.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((prod[(i, j)] - C64::new(target, 0.0)).norm());
        }
    }
    dev
}

/// Measurement counts keyed by basis index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleSet {
    pub n: usize,
    pub shots: usize,
    pub counts: BTreeMap<u64, u64>,
}

impl SampleSet {
    pub fn frequency(&self, index: u64) -> f64 {
        self.counts.get(&index).copied().unwrap_or(0) as f64 / self.shots as f64
    }

    /// Per-shot values of `f`, expanded from the counts.
    pub fn mean_of(&self, f: impl Fn(u64) -> f64) -> f64 {
        self.counts
            .iter()
            .map(|(&i, &c)| f(i) * c as f64)
            .sum::<f64>()
            / self.shots as f64
    }

    /// Sample mean and standard error of `f`.
    pub fn mean_and_stderr(&self, f: impl Fn(u64) -> f64) -> (f64, f64) {
        let n = self.shots as f64;
        let mean = self.mean_of(&f);
        let var = self
            .counts
            .iter()
            .map(|(&i, &c)| (f(i) - mean).powi(2) * c as f64)
            .sum::<f64>()
            / (n - 1.0).max(1.0);
        (mean, (var / n).sqrt())
    }

    pub fn labelled(&self) -> Vec<(String, u64)> {
        self.counts
            .iter()
            .map(|(&i, &c)| (crate::bits::index_to_string(i, self.n), c))
            .collect()
    }
}

struct XySector {
    members: Vec<usize>,
    /// Eigenvectors, column `j` is eigenvector `j`.
    vectors: DMatrix<f64>,
    /// Same matrix in row-major order.
    rows: Vec<f64>,
    values: DVector<f64>,
}

/// Eigendecomposition of the ring XY Hamiltonian, one block per Hamming
/// weight, reused for every angle.
pub struct XyRingPropagator {
    size: usize,
    sectors: Vec<XySector>,
}

impl XyRingPropagator {
    pub fn new(size: usize) -> Result<Self> {
        check_capacity("XY ring size", size, MAX_XY_RING)?;
        let edges = ring_edges(size);
        let mut sectors = Vec::new();
        for w in 1..size {
            let members: Vec<usize> = (0..1usize << size)
                .filter(|l| l.count_ones() as usize == w)
                .collect();
            let pos: HashMap<usize, usize> =
                members.iter().enumerate().map(|(k, &l)| (l, k)).collect();
            let d = members.len();
            let mut h = DMatrix::<f64>::zeros(d, d);
            for (k, &l) in members.iter().enumerate() {
                for &(a, b) in &edges {
                    if (l >> a & 1) != (l >> b & 1) {
                        let partner = l ^ (1 << a | 1 << b);
                        h[(pos[&partner], k)] += 1.0;
                    }
                }
            }
            let eig = SymmetricEigen::new(h);
            let rows = eig.eigenvectors.transpose().as_slice().to_vec();
            sectors.push(XySector {
                members,
                rows,
                vectors: eig.eigenvectors,
                values: eig.eigenvalues,
            });
        }
        Ok(Self { size, sectors })
    }

    /// Process-wide cache keyed by ring size.
    pub fn shared(size: usize) -> Result<Arc<Self>> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<XyRingPropagator>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        if let Some(p) = cache.lock().expect("cache lock").get(&size) {
            return Ok(Arc::clone(p));
        }
        let built = Arc::new(Self::new(size)?);
        cache
            .lock()
            .expect("cache lock")
            .entry(size)
            .or_insert_with(|| Arc::clone(&built));
        Ok(built)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Phase factors `exp(-iβλ)` for every weight block.
    pub(crate) fn phases(&self, beta: f64) -> Vec<Vec<C64>> {
        self.sectors
            .iter()
            .map(|sec| sec.values.iter().map(|v| C64::from_polar(1.0, -beta * v)).collect())
            .collect()
    }

    /// Block index and in-block position of a ring-local configuration, or
    /// `None` for the all-zero and all-one configurations.
    pub(crate) fn locate(&self, local: usize) -> Option<(usize, usize)> {
        let w = local.count_ones() as usize;
        if w == 0 || w >= self.size {
            return None;
        }
        let sector = w - 1;
        let pos = self.sectors[sector].members.binary_search(&local).ok()?;
        Some((sector, pos))
    }

    pub(crate) fn block_len(&self, sector: usize) -> usize {
        self.sectors[sector].members.len()
    }

    /// Applies the block propagator to amplitudes listed in member order.
    pub(crate) fn rotate(&self, sector: usize, phase: &[C64], amps: &mut [C64], scratch: &mut Vec<C64>) {
        let sec = &self.sectors[sector];
        let d = amps.len();
        let zero = C64::new(0.0, 0.0);
        scratch.clear();
        scratch.extend((0..d).map(|j| {
            let mut acc = zero;
            for (x, y) in sec.vectors.column(j).iter().zip(amps.iter()) {
                acc += y * *x;
            }
            acc * phase[j]
        }));
        for (k, out) in amps.iter_mut().enumerate() {
            let mut acc = zero;
            for (c, x) in scratch.iter().zip(&sec.rows[k * d..(k + 1) * d]) {
                acc += c * *x;
            }
            *out = acc;
        }
    }

    pub fn apply(&self, state: &mut StateVector, ring: &[usize], beta: f64) -> Result<()> {
        if ring.len() != self.size {
            return Err(Error::LengthMismatch {
                expected: self.size,
                got: ring.len(),
            });
        }
        check_distinct(ring, state.n)?;
        if self.size < 2 {
            return Ok(());
        }
        let phases = self.phases(beta);
        let offsets: Vec<usize> = (0..1usize << self.size).map(|l| deposit(l, ring)).collect();
        let mask = offsets[offsets.len() - 1];
        let zero = C64::new(0.0, 0.0);
        let mut buf: Vec<C64> = Vec::new();
        let mut scratch: Vec<C64> = Vec::new();
        for base in 0..state.amps.len() {
            if base & mask != 0 {
                continue;
            }
            for (k, sector) in self.sectors.iter().enumerate() {
                buf.clear();
                buf.extend(sector.members.iter().map(|&l| state.amps[base | offsets[l]]));
                if buf.iter().all(|a| *a == zero) {
                    continue;
                }
                self.rotate(k, &phases[k], &mut buf, &mut scratch);
                for (&l, &a) in sector.members.iter().zip(&buf) {
                    state.amps[base | offsets[l]] = a;
                }
            }
        }
        Ok(())
    }
}

/// Nearest-neighbour pairs of a ring; two qubits share a single edge.
pub fn ring_edges(size: usize) -> Vec<(usize, usize)> {
    match size {
        0 | 1 => Vec::new(),
        2 => vec![(0, 1)],
        _ => (0..size).map(|k| (k, (k + 1) % size)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ising::QuboModel;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn idx(s: &str) -> u64 {
        s.parse::<BitString>().unwrap().to_index().unwrap()
    }

    #[test]
    fn dicke_amplitudes() {
        let s = StateVector::dicke(4, 2).unwrap();
        assert_eq!(s.probabilities().iter().filter(|&&p| p > 0.0).count(), 6);
        assert_abs_diff_eq!(s.amplitude(idx("1100")).re, 1.0 / 6f64.sqrt(), epsilon = 1e-15);
        assert!(StateVector::dicke(3, 4).is_err());
    }

    #[test]
    fn capacity() {
        assert!(matches!(
            StateVector::uniform(MAX_STATEVECTOR_QUBITS + 1),
            Err(Error::CapacityExceeded { .. })
        ));
    }

    #[test]
    fn block_product_support() {
        let blocks = vec![
            Block {
                qubits: vec![0, 1],
                content: BlockContent::Dicke(1),
            },
            Block {
                qubits: vec![2, 3],
                content: BlockContent::Basis("10".parse().unwrap()),
            },
        ];
        let s = StateVector::block_product(4, &blocks).unwrap();
        assert_abs_diff_eq!(s.probabilities()[idx("1010") as usize], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(s.probabilities()[idx("0110") as usize], 0.5, epsilon = 1e-15);
        assert!(StateVector::block_product(5, &blocks).is_err());
    }

    #[test]
    fn x_mixer_pi_half_flips() {
        let mut s = StateVector::basis(3, 0).unwrap();
        s.apply_x_mixer(std::f64::consts::FRAC_PI_2);
        assert_abs_diff_eq!(s.probabilities()[7], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn ry_and_cnot_make_bell_pair() {
        let mut s = StateVector::basis(2, 0).unwrap();
        s.apply_ry(0, std::f64::consts::FRAC_PI_2).unwrap();
        s.apply_cnot(0, 1).unwrap();
        let p = s.probabilities();
        assert_abs_diff_eq!(p[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(p[3], 0.5, epsilon = 1e-12);
        assert!(s.apply_cnot(1, 1).is_err());
    }

    #[test]
    fn xy_two_qubit_rotation() {
        for &beta in &[0.0, 0.3, 1.1, std::f64::consts::FRAC_PI_2] {
            let mut s = StateVector::basis(2, idx("01")).unwrap();
            s.apply_xy_ring(&[0, 1], beta).unwrap();
            let p = s.probabilities();
            assert_abs_diff_eq!(p[idx("01") as usize], beta.cos().powi(2), epsilon = 1e-12);
            assert_abs_diff_eq!(p[idx("10") as usize], beta.sin().powi(2), epsilon = 1e-12);
        }
    }

    #[test]
    fn xy_matches_dense_exponential() {
        // dense check against the Taylor series of the full ring Hamiltonian
        let n = 4;
        let ring = [0usize, 1, 2, 3];
        let dim = 1 << n;
        let mut h = DMatrix::<C64>::zeros(dim, dim);
        for l in 0..dim {
            for &(a, b) in &ring_edges(4) {
                if (l >> a & 1) != (l >> b & 1) {
                    h[(l ^ (1 << a | 1 << b), l)] += C64::new(1.0, 0.0);
                }
            }
        }
        let beta = 0.37;
        let gen = h * C64::new(0.0, -beta);
        let mut u = DMatrix::<C64>::identity(dim, dim);
        let mut term = DMatrix::<C64>::identity(dim, dim);
        for k in 1..40 {
            term = &term * &gen / C64::new(k as f64, 0.0);
            u += &term;
        }
        let mut a = StateVector::uniform(n).unwrap();
        a.apply_ry(1, 0.4).unwrap();
        let mut b = a.clone();
        a.apply_xy_ring(&ring, beta).unwrap();
        b.apply_local_unitary(&ring, &u).unwrap();
        for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
            assert_abs_diff_eq!((x - y).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn non_unitary_rejected() {
        let mut s = StateVector::uniform(2).unwrap();
        let m = DMatrix::<C64>::identity(2, 2) * C64::new(1.1, 0.0);
        assert!(matches!(s.apply_local_unitary(&[0], &m), Err(Error::NonUnitary(_))));
    }

    #[test]
    fn phase_separator_is_diagonal() {
        let mut q = QuboModel::new(2);
        q.add_linear(0, 1.0).unwrap();
        let mut s = StateVector::uniform(2).unwrap();
        s.apply_phase_separator(&q, 0.5).unwrap();
        assert_abs_diff_eq!(s.amplitude(1).arg(), -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(s.amplitude(0).arg(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.expectation(&q).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn sampling_respects_support() {
        let s = StateVector::dicke(3, 1).unwrap();
        let samples = s.sample(3000, 9);
        assert_eq!(samples.counts.values().sum::<u64>(), 3000);
        assert!(samples.counts.keys().all(|&i| i.count_ones() == 1));
        assert_eq!(s.sample(3000, 9), samples);
    }

    proptest! {
        #[test]
        fn xy_preserves_weight_and_norm(beta in -7.0f64..7.0, theta in 0.0f64..6.3, ring_len in 2usize..=6) {
            let n = 6;
            let mut s = StateVector::dicke(n, 2).unwrap();
            s.apply_ry(0, theta).unwrap();
            s.apply_cnot(0, 5).unwrap();
            let before: Vec<f64> = (0..=n).map(|w| s.probability_where(|i| i.count_ones() as usize == w)).collect();
            let ring: Vec<usize> = (0..ring_len).collect();
            s.apply_xy_ring(&ring, beta).unwrap();
            prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
            for (w, &prior) in before.iter().enumerate() {
                let after = s.probability_where(|i| i.count_ones() as usize == w);
                prop_assert!((after - prior).abs() < 1e-12);
            }
        }

        #[test]
        fn xy_period_pi(beta in -3.0f64..3.0) {
            let mut a = StateVector::dicke(5, 2).unwrap();
            let mut b = a.clone();
            a.apply_xy_ring(&[1, 3], beta).unwrap();
            b.apply_xy_ring(&[1, 3], beta + std::f64::consts::PI).unwrap();
            for (x, y) in a.probabilities().iter().zip(b.probabilities()) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }

        #[test]
        fn x_mixer_preserves_norm(beta in -7.0f64..7.0, gamma in -3.0f64..3.0) {
            let mut q = QuboModel::new(4);
            q.add_quadratic(0, 3, 2.0).unwrap();
            q.add_linear(1, -1.0).unwrap();
            let mut s = StateVector::uniform(4).unwrap();
            s.apply_phase_separator(&q, gamma).unwrap();
            s.apply_x_mixer(beta);
            prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }
}
