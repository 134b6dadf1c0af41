//! Qubit-wise commuting measurement groups, counts → energy, and readout
//! error mitigation.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, DVector};

use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::noise::{NoiseModel, ReadoutError};
use crate::observable::{Observable, Pauli, PauliTerm};
use crate::simulator::Counts;

const SINGULAR_TOL: f64 = 1e-10;

/// Terms sharing one measurement basis. `basis[q]` is `I` where no member
/// constrains qubit `q` (measured in Z).
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementGroup {
    pub basis: Vec<Pauli>,
    /// Indices into the observable's term list.
    pub terms: Vec<usize>,
}

impl MeasurementGroup {
    fn accepts(&self, term: &PauliTerm) -> bool {
        self.basis
            .iter()
            .zip(term.paulis())
            .all(|(&b, &p)| b == Pauli::I || p == Pauli::I || b == p)
    }

    fn absorb(&mut self, index: usize, term: &PauliTerm) {
        for (b, &p) in self.basis.iter_mut().zip(term.paulis()) {
            if p != Pauli::I {
                *b = p;
            }
        }
        self.terms.push(index);
    }

    pub fn label(&self) -> String {
        self.basis.iter().rev().map(|p| p.as_char()).collect()
    }
}

/// Greedy first-fit grouping in term order. Identity terms are left out.
pub fn group_terms(observable: &Observable) -> Vec<MeasurementGroup> {
    let mut groups: Vec<MeasurementGroup> = Vec::new();
    for (i, term) in observable.terms().iter().enumerate() {
        if term.is_identity() {
            continue;
        }
        match groups.iter_mut().find(|g| g.accepts(term)) {
            Some(g) => g.absorb(i, term),
            None => {
                let mut g = MeasurementGroup {
                    basis: vec![Pauli::I; observable.n_qubits()],
                    terms: Vec::new(),
                };
                g.absorb(i, term);
                groups.push(g);
            }
        }
    }
    groups
}

/// Rotations taking the group basis to Z, then MEASURE on every qubit.
pub fn basis_rotation(group: &MeasurementGroup, n_qubits: usize) -> Result<Circuit> {
    let mut c = Circuit::new(n_qubits);
    for (q, &p) in group.basis.iter().enumerate() {
        match p {
            Pauli::X => c.push(Gate::ry(q, -FRAC_PI_2))?,
            Pauli::Y => {
                c.push(Gate::rz(q, -FRAC_PI_2))?;
                c.push(Gate::ry(q, -FRAC_PI_2))?;
            }
            Pauli::I | Pauli::Z => {}
        }
    }
    for q in 0..n_qubits {
        c.push(Gate::measure(q))?;
    }
    Ok(c)
}

fn support_mask(term: &PauliTerm) -> usize {
    term.support().fold(0, |m, q| m | (1 << q))
}

/// `⟨term⟩` from a (quasi-)distribution over outcomes of a compatible basis.
pub fn distribution_expectation(distribution: &[f64], term: &PauliTerm) -> f64 {
    let mask = support_mask(term);
    distribution
        .iter()
        .enumerate()
        .map(|(b, &p)| {
            if (b & mask).count_ones().is_multiple_of(2) {
                p
            } else {
                -p
            }
        })
        .sum()
}

/// `⟨term⟩` from counts in a compatible basis: signed parity frequency.
pub fn term_expectation(counts: &Counts, term: &PauliTerm) -> f64 {
    if counts.shots() == 0 {
        return 0.0;
    }
    let mask = support_mask(term);
    let signed: i64 = counts
        .iter()
        .map(|(b, c)| {
            if (b & mask).count_ones().is_multiple_of(2) {
                c as i64
            } else {
                -(c as i64)
            }
        })
        .sum();
    signed as f64 / counts.shots() as f64
}

/// Energy from one outcome distribution per group, in group order.
pub fn energy_from_distributions(
    groups: &[MeasurementGroup],
    distributions: &[Vec<f64>],
    observable: &Observable,
) -> Result<f64> {
    if groups.len() != distributions.len() {
        return Err(Error::contract(format!(
            "{} groups but {} outcome distributions",
            groups.len(),
            distributions.len()
        )));
    }
    let mut energy = observable.identity_offset();
    let mut seen = vec![false; observable.terms().len()];
    for (g, dist) in groups.iter().zip(distributions) {
        for &i in &g.terms {
            let term = &observable.terms()[i];
            energy += term.coefficient() * distribution_expectation(dist, term);
            seen[i] = true;
        }
    }
    if let Some(i) = (0..seen.len()).find(|&i| !seen[i] && !observable.terms()[i].is_identity()) {
        return Err(Error::contract(format!(
            "term {} is not covered by any measured group",
            observable.terms()[i].label()
        )));
    }
    Ok(energy)
}

/// `Σ cᵢ⟨σⁱ⟩` with identity terms added exactly.
pub fn energy_from_counts(
    group_counts: &[(MeasurementGroup, Counts)],
    observable: &Observable,
) -> Result<f64> {
    let groups: Vec<MeasurementGroup> = group_counts.iter().map(|(g, _)| g.clone()).collect();
    let dists: Vec<Vec<f64>> = group_counts.iter().map(|(_, c)| c.frequencies()).collect();
    energy_from_distributions(&groups, &dists, observable)
}

/// Column-stochastic readout confusion (column = prepared, row = observed).
#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionMatrix {
    n_qubits: usize,
    matrix: DMatrix<f64>,
}

impl ConfusionMatrix {
    /// Tensor product of per-qubit confusions; `readout[q]` describes qubit `q`.
    pub fn from_readout(readout: &[ReadoutError]) -> Self {
        let mut m = DMatrix::from_element(1, 1, 1.0);
        for r in readout {
            let c = r.confusion();
            let local = DMatrix::from_row_slice(2, 2, &[c[0][0], c[0][1], c[1][0], c[1][1]]);
            m = local.kronecker(&m);
        }
        ConfusionMatrix {
            n_qubits: readout.len(),
            matrix: m,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Observed distribution for a prepared one.
    pub fn apply(&self, probabilities: &[f64]) -> Vec<f64> {
        (&self.matrix * DVector::from_column_slice(probabilities))
            .iter()
            .copied()
            .collect()
    }
}

/// Confusion of the first `n_qubits` qubits of `noise`.
pub fn build_confusion(noise: &NoiseModel, n_qubits: usize) -> Result<ConfusionMatrix> {
    let readout = noise.readout();
    if readout.len() < n_qubits {
        return Err(Error::contract(format!(
            "readout model covers {} qubits, {n_qubits} requested",
            readout.len()
        )));
    }
    Ok(ConfusionMatrix::from_readout(&readout[..n_qubits]))
}

/// Applies independent per-qubit bit flips to a distribution in place of the
/// full matrix product.
pub fn apply_readout(probabilities: &[f64], readout: &[ReadoutError]) -> Vec<f64> {
    let mut p = probabilities.to_vec();
    for (q, r) in readout.iter().enumerate() {
        if r.is_zero() {
            continue;
        }
        let bit = 1usize << q;
        for b in 0..p.len() {
            if b & bit == 0 {
                let (p0, p1) = (p[b], p[b | bit]);
                p[b] = (1.0 - r.p01) * p0 + r.p10 * p1;
                p[b | bit] = r.p01 * p0 + (1.0 - r.p10) * p1;
            }
        }
    }
    p
}

/// Least-squares inversion of the confusion, clipped to non-negative values
/// and renormalised.
pub fn mitigate(counts: &Counts, confusion: &ConfusionMatrix) -> Result<Vec<f64>> {
    if counts.n_qubits() != confusion.n_qubits {
        return Err(Error::contract(format!(
            "counts over {} qubits, confusion over {}",
            counts.n_qubits(),
            confusion.n_qubits
        )));
    }
    let svd = confusion.matrix.clone().svd(true, true);
    let max = svd.singular_values.max();
    let min = svd.singular_values.min();
    if min <= SINGULAR_TOL * max {
        return Err(Error::Conditioning(format!(
            "smallest singular value {min:e} against largest {max:e}"
        )));
    }
    let observed = DVector::from_vec(counts.frequencies());
    let solved = svd
        .solve(&observed, SINGULAR_TOL)
        .map_err(|e| Error::Conditioning(e.to_string()))?;
    let mut p: Vec<f64> = solved.iter().map(|&x| x.max(0.0)).collect();
    let total: f64 = p.iter().sum();
    if total <= 0.0 {
        return Err(Error::Conditioning(
            "mitigated distribution vanished".into(),
        ));
    }
    p.iter_mut().for_each(|x| *x /= total);
    Ok(p)
}
