//! Kraus channels on one or two qubits.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::observable::PauliTerm;

/// Extra structure the density-matrix engine can exploit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChannelStructure {
    /// `ρ ↦ (1−p)ρ + p·Tr_S(ρ)⊗I/2ᵏ`.
    Depolarizing(f64),
    General,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    operators: Vec<DMatrix<Complex64>>,
    arity: usize,
    structure: ChannelStructure,
}

impl KrausChannel {
    pub fn new(arity: usize, operators: Vec<DMatrix<Complex64>>) -> Result<Self> {
        let dim = 1usize << arity;
        if !(1..=2).contains(&arity) {
            return Err(Error::contract("channels act on one or two qubits"));
        }
        if operators.is_empty() || operators.iter().any(|k| k.shape() != (dim, dim)) {
            return Err(Error::contract(format!(
                "Kraus operators must be {dim}×{dim}"
            )));
        }
        Ok(KrausChannel {
            operators,
            arity,
            structure: ChannelStructure::General,
        })
    }

    /// Depolarizing channel: with probability `p` the support is replaced by
    /// the maximally mixed state. Kraus form: identity with weight
    /// `1 − p + p/4ᵏ`, each non-identity Pauli with weight `p/4ᵏ`.
    pub fn depolarizing(arity: usize, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::validation(format!(
                "depolarizing probability {p} outside [0, 1]"
            )));
        }
        let n_paulis = 1usize << (2 * arity);
        let mut ops = Vec::with_capacity(n_paulis);
        for code in 0..n_paulis {
            let label: String = (0..arity)
                .map(|q| ['I', 'X', 'Y', 'Z'][(code >> (2 * q)) & 3])
                .collect();
            let weight = if code == 0 {
                1.0 - p + p / n_paulis as f64
            } else {
                p / n_paulis as f64
            };
            if weight == 0.0 {
                continue;
            }
            let pauli = PauliTerm::new(&label, weight.sqrt())?;
            ops.push(pauli_matrix(&pauli));
        }
        let mut ch = KrausChannel::new(arity, ops)?;
        ch.structure = ChannelStructure::Depolarizing(p);
        Ok(ch)
    }

    /// Energy relaxation with decay probability `gamma`.
    pub fn amplitude_damping(gamma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::validation(format!("damping {gamma} outside [0, 1]")));
        }
        let k0 = DMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c((1.0 - gamma).sqrt())]);
        let k1 = DMatrix::from_row_slice(2, 2, &[c(0.0), c(gamma.sqrt()), c(0.0), c(0.0)]);
        KrausChannel::new(1, vec![k0, k1])
    }

    /// Pure dephasing; off-diagonal elements shrink by `sqrt(1 − lambda)`.
    pub fn phase_damping(lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::validation(format!(
                "dephasing {lambda} outside [0, 1]"
            )));
        }
        let k0 = DMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c((1.0 - lambda).sqrt())]);
        let k1 = DMatrix::from_row_slice(2, 2, &[c(0.0), c(0.0), c(0.0), c(lambda.sqrt())]);
        KrausChannel::new(1, vec![k0, k1])
    }

    /// Tensor product `a ⊗ b`, with `a` on local qubit 0.
    pub fn tensor(a: &KrausChannel, b: &KrausChannel) -> Result<Self> {
        if a.arity != 1 || b.arity != 1 {
            return Err(Error::contract("tensor expects two single-qubit channels"));
        }
        let mut ops = Vec::new();
        for ka in &a.operators {
            for kb in &b.operators {
                ops.push(kb.kronecker(ka));
            }
        }
        KrausChannel::new(2, ops)
    }

    /// Channel that applies `first` and then `second`.
    pub fn compose(first: &KrausChannel, second: &KrausChannel) -> Result<Self> {
        if first.arity != second.arity {
            return Err(Error::contract(
                "composed channels must share their support",
            ));
        }
        let mut ops = Vec::new();
        for k2 in &second.operators {
            for k1 in &first.operators {
                ops.push(k2 * k1);
            }
        }
        KrausChannel::new(first.arity, ops)
    }

    pub fn operators(&self) -> &[DMatrix<Complex64>] {
        &self.operators
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn structure(&self) -> ChannelStructure {
        self.structure
    }

    /// `max |Σ K†K − I|`.
    pub fn trace_preservation_error(&self) -> f64 {
        let dim = 1usize << self.arity;
        let mut sum = DMatrix::<Complex64>::zeros(dim, dim);
        for k in &self.operators {
            sum += k.adjoint() * k;
        }
        sum -= DMatrix::identity(dim, dim);
        sum.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Dense matrix of a Pauli term (coefficient included).
pub(crate) fn pauli_matrix(term: &PauliTerm) -> DMatrix<Complex64> {
    let dim = 1usize << term.n_qubits();
    let masks = term.masks();
    let mut m = DMatrix::zeros(dim, dim);
    for b in 0..dim {
        m[(b ^ masks.flip_mask, b)] = masks.phase(b) * term.coefficient();
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depolarizing_is_trace_preserving() {
        for arity in 1..=2 {
            for p in [0.0, 1e-3, 0.3, 1.0] {
                let ch = KrausChannel::depolarizing(arity, p).unwrap();
                assert!(ch.trace_preservation_error() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_depolarizing_is_identity() {
        let ch = KrausChannel::depolarizing(2, 0.0).unwrap();
        assert_eq!(ch.operators().len(), 1);
        let diff = &ch.operators()[0] - DMatrix::<Complex64>::identity(4, 4);
        assert!(diff.iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn thermal_composition_trace_preserving() {
        let ad = KrausChannel::amplitude_damping(0.1).unwrap();
        let pd = KrausChannel::phase_damping(0.05).unwrap();
        let dep = KrausChannel::depolarizing(1, 0.02).unwrap();
        let composed =
            KrausChannel::compose(&KrausChannel::compose(&dep, &ad).unwrap(), &pd).unwrap();
        assert!(composed.trace_preservation_error() < 1e-10);
        let two = KrausChannel::tensor(&ad, &pd).unwrap();
        assert!(two.trace_preservation_error() < 1e-10);
    }

    #[test]
    fn rejects_bad_probability() {
        assert!(KrausChannel::depolarizing(1, 1.5).is_err());
        assert!(KrausChannel::amplitude_damping(-0.1).is_err());
    }
}
