//! Ideal statevector and noisy density-matrix simulation, exact expectation
//! values, and shot sampling.

mod channel;
mod kernels;

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use channel::{ChannelStructure, KrausChannel};

use crate::circuit::{Circuit, Gate, GateKind};
use crate::error::{Error, Result};
use crate::noise::NoiseModel;
use crate::observable::Observable;

/// Widest register the density-matrix engine accepts.
pub const MAX_DENSITY_QUBITS: usize = 8;
/// Widest register the statevector engine accepts.
pub const MAX_STATEVECTOR_QUBITS: usize = 24;

/// Anything that can report Born probabilities and exact expectations.
pub trait QuantumState {
    fn n_qubits(&self) -> usize;

    /// Probability of each computational basis state.
    fn probabilities(&self) -> Vec<f64>;

    /// `Σ cᵢ ⟨σⁱ⟩` without sampling.
    fn expectation(&self, observable: &Observable) -> Result<f64>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// `|0…0⟩`.
    pub fn zero(n_qubits: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        StateVector {
            n_qubits,
            amplitudes,
        }
    }

    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::contract(format!(
                "{len} amplitudes is not a power of two"
            )));
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::contract(format!(
                "state norm² is {norm}, expected 1"
            )));
        }
        Ok(StateVector {
            n_qubits: len.trailing_zeros() as usize,
            amplitudes,
        })
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn apply(&mut self, gate: &Gate) -> Result<()> {
        match *gate.qubits.as_slice() {
            _ if gate.kind == GateKind::Measure => {
                return Err(Error::contract("mid-circuit measurement is not supported"))
            }
            [q] => kernels::apply_1q(&mut self.amplitudes, q, &gate.matrix1()?),
            [a, b] => kernels::apply_2q(&mut self.amplitudes, a, b, &gate.matrix2()?),
            _ => unreachable!("arity checked on push"),
        }
        Ok(())
    }
}

impl QuantumState for StateVector {
    fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    fn expectation(&self, observable: &Observable) -> Result<f64> {
        check_width(self.n_qubits, observable)?;
        let mut total = 0.0;
        for term in observable.terms() {
            let masks = term.masks();
            let value: Complex64 = self
                .amplitudes
                .iter()
                .enumerate()
                .map(|(b, amp)| self.amplitudes[b ^ masks.flip_mask].conj() * masks.phase(b) * amp)
                .sum();
            total += term.coefficient() * value.re;
        }
        Ok(total)
    }
}

/// Density matrix stored as a `4ⁿ` vector; entry `(r, c)` lives at `r | c << n`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    entries: Vec<Complex64>,
}

impl DensityMatrix {
    /// `|0…0⟩⟨0…0|`.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        if n_qubits > MAX_DENSITY_QUBITS {
            return Err(Error::Size {
                what: "density matrix",
                got: n_qubits,
                limit: MAX_DENSITY_QUBITS,
            });
        }
        let mut entries = vec![Complex64::new(0.0, 0.0); 1 << (2 * n_qubits)];
        entries[0] = Complex64::new(1.0, 0.0);
        Ok(DensityMatrix { n_qubits, entries })
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn from_pure(state: &StateVector) -> Result<Self> {
        let mut rho = DensityMatrix::zero(state.n_qubits)?;
        let dim = 1usize << state.n_qubits;
        for c in 0..dim {
            for r in 0..dim {
                rho.entries[r | (c << state.n_qubits)] =
                    state.amplitudes[r] * state.amplitudes[c].conj();
            }
        }
        Ok(rho)
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row | (col << self.n_qubits)]
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim()).map(|i| self.get(i, i)).sum()
    }

    /// `max |ρ − ρ†|`.
    pub fn hermiticity_error(&self) -> f64 {
        let dim = self.dim();
        let mut worst: f64 = 0.0;
        for r in 0..dim {
            for c in 0..dim {
                worst = worst.max((self.get(r, c) - self.get(c, r).conj()).norm());
            }
        }
        worst
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let dim = self.dim();
        let m = nalgebra::DMatrix::from_fn(dim, dim, |r, c| self.get(r, c));
        m.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn apply_unitary(&mut self, gate: &Gate) -> Result<()> {
        let n = self.n_qubits;
        match *gate.qubits.as_slice() {
            _ if gate.kind == GateKind::Measure => {
                return Err(Error::contract("mid-circuit measurement is not supported"))
            }
            [q] => {
                let m = gate.matrix1()?;
                kernels::apply_1q(&mut self.entries, q, &m);
                kernels::apply_1q(&mut self.entries, q + n, &m.map(|z| z.conj()));
            }
            [a, b] => {
                let m = gate.matrix2()?;
                kernels::apply_2q(&mut self.entries, a, b, &m);
                kernels::apply_2q(&mut self.entries, a + n, b + n, &m.map(|z| z.conj()));
            }
            _ => unreachable!("arity checked on push"),
        }
        Ok(())
    }

    pub fn apply_channel(&mut self, channel: &KrausChannel, qubits: &[usize]) -> Result<()> {
        if qubits.len() != channel.arity() {
            return Err(Error::contract(format!(
                "{}-qubit channel applied to {:?}",
                channel.arity(),
                qubits
            )));
        }
        match channel.structure() {
            ChannelStructure::Depolarizing(p) => self.depolarize(qubits, p),
            ChannelStructure::General => self.apply_kraus(channel.operators(), qubits),
        }
        Ok(())
    }

    fn apply_kraus(&mut self, operators: &[nalgebra::DMatrix<Complex64>], qubits: &[usize]) {
        let n = self.n_qubits;
        let mut acc = vec![Complex64::new(0.0, 0.0); self.entries.len()];
        for k in operators {
            let mut copy = self.entries.clone();
            match *qubits {
                [q] => {
                    let m = Matrix2::from_iterator(k.iter().copied());
                    kernels::apply_1q(&mut copy, q, &m);
                    kernels::apply_1q(&mut copy, q + n, &m.map(|z| z.conj()));
                }
                [a, b] => {
                    let m = Matrix4::from_iterator(k.iter().copied());
                    kernels::apply_2q(&mut copy, a, b, &m);
                    kernels::apply_2q(&mut copy, a + n, b + n, &m.map(|z| z.conj()));
                }
                _ => unreachable!("arity checked by caller"),
            }
            for (a, c) in acc.iter_mut().zip(&copy) {
                *a += c;
            }
        }
        self.entries = acc;
    }

    /// `ρ ↦ (1−p)ρ + p·Tr_S(ρ)⊗I/2ᵏ` on the qubit set `S`.
    fn depolarize(&mut self, qubits: &[usize], p: f64) {
        if p == 0.0 {
            return;
        }
        let n = self.n_qubits;
        let k = qubits.len();
        let d = 1usize << k;
        let support_mask: usize = qubits.iter().map(|&q| (1 << q) | (1 << (q + n))).sum();
        // Offset of local pattern s placed on the row bits, and on the column bits.
        let spread = |s: usize, shift: usize| -> usize {
            qubits
                .iter()
                .enumerate()
                .map(|(i, &q)| ((s >> i) & 1) << (q + shift))
                .sum()
        };
        let row_offsets: Vec<usize> = (0..d).map(|s| spread(s, 0)).collect();
        let col_offsets: Vec<usize> = (0..d).map(|s| spread(s, n)).collect();
        for base in 0..self.entries.len() {
            if base & support_mask != 0 {
                continue;
            }
            let traced: Complex64 = (0..d)
                .map(|s| self.entries[base | row_offsets[s] | col_offsets[s]])
                .sum();
            for (sr, &ro) in row_offsets.iter().enumerate() {
                for (sc, &co) in col_offsets.iter().enumerate() {
                    let idx = base | ro | co;
                    self.entries[idx] *= 1.0 - p;
                    if sr == sc {
                        self.entries[idx] += traced * (p / d as f64);
                    }
                }
            }
        }
    }
}

impl QuantumState for DensityMatrix {
    fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    fn probabilities(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|i| self.get(i, i).re.max(0.0))
            .collect()
    }

    fn expectation(&self, observable: &Observable) -> Result<f64> {
        check_width(self.n_qubits, observable)?;
        let mut total = 0.0;
        for term in observable.terms() {
            let masks = term.masks();
            let value: Complex64 = (0..self.dim())
                .map(|b| self.get(b, b ^ masks.flip_mask) * masks.phase(b))
                .sum();
            total += term.coefficient() * value.re;
        }
        Ok(total)
    }
}

fn check_width(n: usize, observable: &Observable) -> Result<()> {
    if n != observable.n_qubits() {
        return Err(Error::contract(format!(
            "state has {n} qubits, observable has {}",
            observable.n_qubits()
        )));
    }
    Ok(())
}

/// Runs a bound, measurement-free circuit on `|0…0⟩`.
pub fn run_statevector(circuit: &Circuit) -> Result<StateVector> {
    if circuit.n_qubits() > MAX_STATEVECTOR_QUBITS {
        return Err(Error::Size {
            what: "statevector",
            got: circuit.n_qubits(),
            limit: MAX_STATEVECTOR_QUBITS,
        });
    }
    let mut state = StateVector::zero(circuit.n_qubits());
    for g in circuit.gates() {
        state.apply(g)?;
    }
    Ok(state)
}

/// Runs a bound circuit on `|0…0⟩⟨0…0|`, applying after every gate the
/// channels the noise model assigns to it. Readout error is not applied.
pub fn run_density(circuit: &Circuit, noise: &NoiseModel) -> Result<DensityMatrix> {
    let mut rho = DensityMatrix::zero(circuit.n_qubits())?;
    for g in circuit.gates() {
        rho.apply_unitary(g)?;
        for ch in noise.channels_for(g) {
            rho.apply_channel(ch, &g.qubits)?;
        }
    }
    Ok(rho)
}

/// Measurement outcomes keyed by basis index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counts {
    n_qubits: usize,
    shots: u64,
    counts: BTreeMap<usize, u64>,
}

impl Counts {
    pub fn new(n_qubits: usize, counts: BTreeMap<usize, u64>) -> Result<Self> {
        if let Some(&b) = counts.keys().find(|&&b| b >> n_qubits != 0) {
            return Err(Error::contract(format!(
                "outcome {b} does not fit in {n_qubits} qubits"
            )));
        }
        let counts: BTreeMap<usize, u64> = counts.into_iter().filter(|&(_, c)| c > 0).collect();
        Ok(Counts {
            n_qubits,
            shots: counts.values().sum(),
            counts,
        })
    }

    /// Builds counts from printed bitstrings (most-significant qubit first).
    pub fn from_bitstrings<'a>(pairs: impl IntoIterator<Item = (&'a str, u64)>) -> Result<Self> {
        let mut n_qubits = None;
        let mut map = BTreeMap::new();
        for (bits, count) in pairs {
            if n_qubits.is_some_and(|n| n != bits.len()) {
                return Err(Error::contract("bitstrings of differing length"));
            }
            n_qubits = Some(bits.len());
            let index = usize::from_str_radix(bits, 2)
                .map_err(|_| Error::contract(format!("`{bits}` is not a bitstring")))?;
            *map.entry(index).or_insert(0) += count;
        }
        Counts::new(n_qubits.unwrap_or(0), map)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    pub fn get(&self, index: usize) -> u64 {
        self.counts.get(&index).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, u64)> + '_ {
        self.counts.iter().map(|(&b, &c)| (b, c))
    }

    /// Bitstring with qubit `n−1` printed first.
    pub fn bitstring(&self, index: usize) -> String {
        format!("{:0width$b}", index, width = self.n_qubits)
    }

    /// Relative frequency of every basis state.
    pub fn frequencies(&self) -> Vec<f64> {
        let mut f = vec![0.0; 1 << self.n_qubits];
        if self.shots == 0 {
            return f;
        }
        for (b, c) in self.iter() {
            f[b] = c as f64 / self.shots as f64;
        }
        f
    }

    /// Relabels bits: logical bit `l` is read from bit `layout[l]` of each outcome.
    pub fn remap(&self, layout: &[usize]) -> Counts {
        let mut map = BTreeMap::new();
        for (b, c) in self.iter() {
            let logical: usize = layout
                .iter()
                .enumerate()
                .map(|(l, &phys)| ((b >> phys) & 1) << l)
                .sum();
            *map.entry(logical).or_insert(0) += c;
        }
        Counts {
            n_qubits: layout.len(),
            shots: self.shots,
            counts: map,
        }
    }
}

impl fmt::Display for Counts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .iter()
            .map(|(b, c)| format!("\"{}\": {c}", self.bitstring(b)))
            .collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

impl Serialize for Counts {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let map: BTreeMap<String, u64> = self.iter().map(|(b, c)| (self.bitstring(b), c)).collect();
        map.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Counts {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let map = BTreeMap::<String, u64>::deserialize(deserializer)?;
        Counts::from_bitstrings(map.iter().map(|(k, &v)| (k.as_str(), v)))
            .map_err(serde::de::Error::custom)
    }
}

/// Draws `shots` outcomes from a probability vector.
pub fn sample_probabilities<R: Rng + ?Sized>(
    probabilities: &[f64],
    shots: u64,
    rng: &mut R,
) -> Result<Counts> {
    let n_qubits = probabilities.len().trailing_zeros() as usize;
    let dist = WeightedIndex::new(probabilities)
        .map_err(|e| Error::contract(format!("invalid outcome distribution: {e}")))?;
    let mut map = BTreeMap::new();
    for _ in 0..shots {
        *map.entry(dist.sample(rng)).or_insert(0) += 1;
    }
    Counts::new(n_qubits, map)
}

/// Born-rule sampling, deterministic in `rng_seed`.
pub fn sample(state: &impl QuantumState, shots: u64, rng_seed: u64) -> Result<Counts> {
    if shots == 0 {
        return Err(Error::contract("at least one shot is required"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    sample_probabilities(&state.probabilities(), shots, &mut rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::build_ry_cnot_ansatz;
    use crate::noise::NoiseModel;
    use std::f64::consts::PI;

    fn circuit(n: usize, gates: Vec<Gate>) -> Circuit {
        Circuit::from_gates(n, gates).unwrap()
    }

    #[test]
    fn empty_circuit_is_zero_state() {
        let s = run_statevector(&Circuit::new(2)).unwrap();
        assert_eq!(s.amplitudes()[0], Complex64::new(1.0, 0.0));
        assert!(s.amplitudes()[1..].iter().all(|a| a.norm() == 0.0));
    }

    #[test]
    fn x_on_qubit_zero_sets_bit_zero() {
        let s = run_statevector(&circuit(2, vec![Gate::x(0)])).unwrap();
        assert!((s.amplitudes()[1].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ry_half_pi() {
        let s = run_statevector(&circuit(1, vec![Gate::ry(0, PI / 2.0)])).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s.amplitudes()[0] - Complex64::new(h, 0.0)).norm() < 1e-15);
        assert!((s.amplitudes()[1] - Complex64::new(h, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn unbound_parameter_rejected() {
        let c = build_ry_cnot_ansatz(2).unwrap();
        assert!(matches!(run_statevector(&c), Err(Error::Contract(_))));
    }

    #[test]
    fn statevector_matches_unitary_column() {
        let c = build_ry_cnot_ansatz(3)
            .unwrap()
            .bind(&[0.3, -1.2, 2.0])
            .unwrap();
        let s = run_statevector(&c).unwrap();
        let u = c.unitary().unwrap();
        for (i, a) in s.amplitudes().iter().enumerate() {
            assert!((a - u[(i, 0)]).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_noise_density_matches_pure() {
        let c = build_ry_cnot_ansatz(3)
            .unwrap()
            .bind(&[0.7, 1.1, -0.4])
            .unwrap();
        let rho = run_density(&c, &NoiseModel::ideal(3)).unwrap();
        let pure = DensityMatrix::from_pure(&run_statevector(&c).unwrap()).unwrap();
        for (a, b) in rho.entries.iter().zip(&pure.entries) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn full_depolarization_gives_maximally_mixed() {
        let mut rho = DensityMatrix::zero(1).unwrap();
        rho.apply_unitary(&Gate::x(0)).unwrap();
        let ch = KrausChannel::depolarizing(1, 1.0).unwrap();
        rho.apply_channel(&ch, &[0]).unwrap();
        assert!((rho.get(0, 0).re - 0.5).abs() < 1e-12);
        assert!((rho.get(1, 1).re - 0.5).abs() < 1e-12);
        assert!(rho.get(0, 1).norm() < 1e-12);
    }

    #[test]
    fn depolarizing_fast_path_matches_kraus_sum() {
        let c = build_ry_cnot_ansatz(3)
            .unwrap()
            .bind(&[0.7, 1.1, -0.4])
            .unwrap();
        let base = DensityMatrix::from_pure(&run_statevector(&c).unwrap()).unwrap();
        for (qubits, p) in [(vec![1], 0.2), (vec![2, 0], 0.35)] {
            let ch = KrausChannel::depolarizing(qubits.len(), p).unwrap();
            let mut fast = base.clone();
            fast.apply_channel(&ch, &qubits).unwrap();
            let mut slow = base.clone();
            slow.apply_kraus(ch.operators(), &qubits);
            for (a, b) in fast.entries.iter().zip(&slow.entries) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn expectation_basics() {
        let z = Observable::parse("Z 1.0").unwrap();
        let zero = StateVector::zero(1);
        assert!((zero.expectation(&z).unwrap() - 1.0).abs() < 1e-15);
        let mut mixed = DensityMatrix::zero(1).unwrap();
        mixed
            .apply_channel(&KrausChannel::depolarizing(1, 1.0).unwrap(), &[0])
            .unwrap();
        assert!(mixed.expectation(&z).unwrap().abs() < 1e-15);
        let zz = Observable::parse("ZZ 1.0").unwrap();
        assert!(matches!(zero.expectation(&zz), Err(Error::Contract(_))));
    }

    #[test]
    fn y_expectation_on_plus_i() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let s = StateVector::from_amplitudes(vec![Complex64::new(h, 0.0), Complex64::new(0.0, h)])
            .unwrap();
        let y = Observable::parse("Y 1.0").unwrap();
        assert!((s.expectation(&y).unwrap() - 1.0).abs() < 1e-15);
        let rho = DensityMatrix::from_pure(&s).unwrap();
        assert!((rho.expectation(&y).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sampling_zero_state() {
        let counts = sample(&StateVector::zero(4), 200, 1).unwrap();
        assert_eq!(counts.get(0), 200);
        assert_eq!(counts.bitstring(0), "0000");
    }

    #[test]
    fn sampling_is_binomial() {
        let s = run_statevector(&circuit(1, vec![Gate::ry(0, PI / 2.0)])).unwrap();
        let counts = sample(&s, 1_000_000, 11).unwrap();
        let ones = counts.get(1) as f64;
        assert!((ones - 500_000.0).abs() < 3.0 * 500.0, "{ones}");
        assert_eq!(counts.shots(), 1_000_000);
    }

    #[test]
    fn sampling_is_deterministic() {
        let c = build_ry_cnot_ansatz(3)
            .unwrap()
            .bind(&[0.1, 0.2, 0.3])
            .unwrap();
        let s = run_statevector(&c).unwrap();
        assert_eq!(sample(&s, 500, 42).unwrap(), sample(&s, 500, 42).unwrap());
    }

    #[test]
    fn counts_bitstrings_and_remap() {
        let counts = Counts::from_bitstrings([("0001", 100), ("0000", 100)]).unwrap();
        assert_eq!(counts.get(1), 100);
        assert_eq!(counts.shots(), 200);
        // physical bit 1 holds logical qubit 0
        let c = Counts::from_bitstrings([("10", 5)]).unwrap();
        let r = c.remap(&[1, 0]);
        assert_eq!(r.get(1), 5);
        let json = serde_json::to_string(&counts).unwrap();
        let back: Counts = serde_json::from_str(&json).unwrap();
        assert_eq!(back, counts);
    }
}
