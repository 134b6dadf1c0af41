//! Pauli-string observables: ingestion, serialisation, and exact diagonalisation.
//!
//! File format: one term per line, `<pauli-string> <coefficient>`. Blank lines
//! and everything after `#` are ignored. Character `q` of the string acts on
//! qubit `q`, so `ZIII` is Z on qubit 0. Repeated strings are summed.

use std::fmt;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{read_file, Error, Result};

/// Largest register `exact_ground_energy` accepts.
pub const MAX_EXACT_QUBITS: usize = 12;
/// Up to this width the dense Hermitian eigensolver is used; above it, Lanczos.
const DENSE_EIGEN_QUBITS: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_char(c: char) -> Option<Pauli> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// Bit masks describing how a Pauli string acts on a computational basis state:
/// `P|b⟩ = i^n_y · (-1)^popcount(b & sign_mask) · |b ⊕ flip_mask⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PauliMasks {
    pub flip_mask: usize,
    pub sign_mask: usize,
    pub n_y: u32,
}

impl PauliMasks {
    /// Phase picked up by basis state `b`.
    #[inline]
    pub fn phase(&self, b: usize) -> Complex64 {
        let base = match self.n_y % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
        if (b & self.sign_mask).count_ones() % 2 == 1 {
            -base
        } else {
            base
        }
    }
}

/// One weighted Pauli string `c · σ`.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliTerm {
    coefficient: f64,
    paulis: Vec<Pauli>,
}

impl PauliTerm {
    pub fn new(paulis: &str, coefficient: f64) -> Result<Self> {
        if !coefficient.is_finite() {
            return Err(Error::validation(format!(
                "coefficient of {paulis} is not finite"
            )));
        }
        let paulis = paulis
            .chars()
            .map(|c| {
                Pauli::from_char(c)
                    .ok_or_else(|| Error::validation(format!("'{c}' is not one of I, X, Y, Z")))
            })
            .collect::<Result<Vec<_>>>()?;
        if paulis.is_empty() {
            return Err(Error::validation("empty Pauli string"));
        }
        Ok(PauliTerm {
            coefficient,
            paulis,
        })
    }

    pub fn coefficient(&self) -> f64 {
        self.coefficient
    }

    pub fn paulis(&self) -> &[Pauli] {
        &self.paulis
    }

    pub fn n_qubits(&self) -> usize {
        self.paulis.len()
    }

    pub fn label(&self) -> String {
        self.paulis.iter().map(|p| p.as_char()).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.paulis.iter().all(|&p| p == Pauli::I)
    }

    /// Qubits on which the term acts non-trivially.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.paulis
            .iter()
            .enumerate()
            .filter(|(_, &p)| p != Pauli::I)
            .map(|(q, _)| q)
    }

    pub fn masks(&self) -> PauliMasks {
        let mut m = PauliMasks {
            flip_mask: 0,
            sign_mask: 0,
            n_y: 0,
        };
        for (q, p) in self.paulis.iter().enumerate() {
            match p {
                Pauli::I => {}
                Pauli::X => m.flip_mask |= 1 << q,
                Pauli::Y => {
                    m.flip_mask |= 1 << q;
                    m.sign_mask |= 1 << q;
                    m.n_y += 1;
                }
                Pauli::Z => m.sign_mask |= 1 << q,
            }
        }
        m
    }
}

/// A real-weighted sum of Pauli strings over a fixed register.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    n_qubits: usize,
    terms: Vec<PauliTerm>,
}

impl Observable {
    /// Builds an observable, summing coefficients of repeated strings.
    /// Terms keep the order in which their string first appeared.
    pub fn new(terms: Vec<PauliTerm>) -> Result<Self> {
        let n_qubits = terms
            .first()
            .map(PauliTerm::n_qubits)
            .ok_or_else(|| Error::validation("observable has no terms"))?;
        let mut merged: Vec<PauliTerm> = Vec::with_capacity(terms.len());
        for term in terms {
            if term.n_qubits() != n_qubits {
                return Err(Error::validation(format!(
                    "term {} has {} qubits, expected {n_qubits}",
                    term.label(),
                    term.n_qubits()
                )));
            }
            match merged.iter_mut().find(|t| t.paulis == term.paulis) {
                Some(existing) => existing.coefficient += term.coefficient,
                None => merged.push(term),
            }
        }
        Ok(Observable {
            n_qubits,
            terms: merged,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    /// Sum of the coefficients of identity terms.
    pub fn identity_offset(&self) -> f64 {
        self.terms
            .iter()
            .filter(|t| t.is_identity())
            .map(PauliTerm::coefficient)
            .sum()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut terms = Vec::new();
        let mut width: Option<usize> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                line: line_no,
                message,
            };
            let mut fields = line.split_whitespace();
            let (Some(label), Some(value), None) = (fields.next(), fields.next(), fields.next())
            else {
                return Err(parse_err(format!(
                    "expected `<pauli-string> <coefficient>`, got `{line}`"
                )));
            };
            let coefficient: f64 = value
                .parse()
                .map_err(|_| parse_err(format!("`{value}` is not a number")))?;
            let term = PauliTerm::new(label, coefficient).map_err(|e| parse_err(e.to_string()))?;
            match width {
                None => width = Some(term.n_qubits()),
                Some(w) if w != term.n_qubits() => {
                    return Err(parse_err(format!(
                        "string `{label}` has length {}, earlier terms have {w}",
                        term.n_qubits()
                    )))
                }
                Some(_) => {}
            }
            terms.push(term);
        }
        if terms.is_empty() {
            return Err(Error::Parse {
                line: 0,
                message: "no terms found".into(),
            });
        }
        Observable::new(terms)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = read_file(path)?;
        Observable::parse(&text).map_err(|e| e.context(format!("reading {}", path.display())))
    }

    /// Serialises in the observable file format. `parse(to_text())` reproduces `self`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for t in &self.terms {
            out.push_str(&format!("{} {:?}\n", t.label(), t.coefficient));
        }
        out
    }

    /// Dense `2ⁿ × 2ⁿ` matrix `Σ cᵢ σⁱ` under the little-endian qubit convention.
    pub fn matrix(&self) -> Result<DMatrix<Complex64>> {
        if self.n_qubits > MAX_EXACT_QUBITS {
            return Err(Error::Size {
                what: "dense observable matrix",
                got: self.n_qubits,
                limit: MAX_EXACT_QUBITS,
            });
        }
        let dim = 1usize << self.n_qubits;
        let mut m = DMatrix::<Complex64>::zeros(dim, dim);
        for term in &self.terms {
            let masks = term.masks();
            for b in 0..dim {
                m[(b ^ masks.flip_mask, b)] += masks.phase(b) * term.coefficient;
            }
        }
        Ok(m)
    }

    /// `H·v` without forming the matrix.
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); v.len()];
        for term in &self.terms {
            let masks = term.masks();
            for (b, amp) in v.iter().enumerate() {
                out[b ^ masks.flip_mask] += masks.phase(b) * term.coefficient * amp;
            }
        }
        out
    }

    /// Minimum eigenvalue of the observable.
    pub fn exact_ground_energy(&self) -> Result<f64> {
        if self.n_qubits > MAX_EXACT_QUBITS {
            return Err(Error::Size {
                what: "exact diagonalisation",
                got: self.n_qubits,
                limit: MAX_EXACT_QUBITS,
            });
        }
        if self.n_qubits <= DENSE_EIGEN_QUBITS {
            Ok(self.dense_ground_energy())
        } else {
            Ok(self.lanczos_ground_energy())
        }
    }

    pub(crate) fn dense_ground_energy(&self) -> f64 {
        let m = self.matrix().expect("width checked by caller");
        m.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Lanczos with full reorthogonalisation; exact once the Krylov space is exhausted.
    pub(crate) fn lanczos_ground_energy(&self) -> f64 {
        let dim = 1usize << self.n_qubits;
        let max_steps = dim.min(320);
        let mut rng = ChaCha8Rng::seed_from_u64(0x01a2_c205);
        let mut v: Vec<Complex64> = (0..dim)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        normalize(&mut v);

        let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(max_steps);
        let mut alphas = Vec::with_capacity(max_steps);
        let mut betas: Vec<f64> = Vec::with_capacity(max_steps);
        let mut previous = f64::INFINITY;
        for step in 0..max_steps {
            let mut w = self.apply(&v);
            let alpha = dot(&v, &w).re;
            basis.push(v);
            alphas.push(alpha);
            // Two passes of Gram-Schmidt against the whole Krylov basis.
            for _ in 0..2 {
                for q in &basis {
                    let overlap = dot(q, &w);
                    for (wi, qi) in w.iter_mut().zip(q) {
                        *wi -= overlap * qi;
                    }
                }
            }
            let beta = norm(&w);
            let estimate = tridiagonal_min(&alphas, &betas);
            let converged = step > 8 && (previous - estimate).abs() < 1e-14;
            previous = estimate;
            if beta < 1e-12 || converged {
                break;
            }
            betas.push(beta);
            for wi in w.iter_mut() {
                *wi /= beta;
            }
            v = w;
        }
        tridiagonal_min(&alphas, &betas[..alphas.len() - 1])
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn normalize(a: &mut [Complex64]) {
    let n = norm(a);
    for x in a.iter_mut() {
        *x /= n;
    }
}

fn tridiagonal_min(alphas: &[f64], betas: &[f64]) -> f64 {
    let k = alphas.len();
    let mut t = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alphas[i];
        if i + 1 < k {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    let vals: DVector<f64> = t.symmetric_eigenvalues();
    vals.iter().copied().fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_identity_line() {
        let obs = Observable::parse("IIII -0.81054\n").unwrap();
        assert_eq!(obs.terms().len(), 1);
        assert_eq!(obs.terms()[0].coefficient(), -0.81054);
        assert_eq!(obs.n_qubits(), 4);
    }

    #[test]
    fn duplicates_are_merged() {
        let obs = Observable::parse("ZIII 0.1\nZIII 0.2\n").unwrap();
        assert_eq!(obs.terms().len(), 1);
        assert!((obs.terms()[0].coefficient() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn comments_and_blank_lines() {
        let obs = Observable::parse("# header\n\nZZ 1.5 # trailing\nXX -2\n").unwrap();
        assert_eq!(obs.terms().len(), 2);
        assert_eq!(obs.terms()[1].coefficient(), -2.0);
    }

    #[test]
    fn errors_name_the_line() {
        let cases = [
            ("ZZ 1\nZZZ 2\n", 2),
            ("ZZ 1\nZZ abc\n", 2),
            ("ZQ 1\n", 1),
            ("ZZ\n", 1),
            ("ZZ 1 2\n", 1),
            ("# c\nZZ nan\n", 2),
        ];
        for (text, line) in cases {
            match Observable::parse(text) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?} gave {other:?}"),
            }
        }
        assert!(Observable::parse("# nothing\n").is_err());
    }

    #[test]
    fn identity_ground_energy() {
        let obs = Observable::parse("IIII -0.81054").unwrap();
        assert!((obs.exact_ground_energy().unwrap() + 0.81054).abs() < 1e-12);
    }

    #[test]
    fn z_ground_energy() {
        let obs = Observable::parse("Z 1.0").unwrap();
        assert!((obs.exact_ground_energy().unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn y_phase_convention() {
        // Y|0⟩ = i|1⟩ on qubit 0.
        let obs = Observable::parse("Y 1.0").unwrap();
        let m = obs.matrix().unwrap();
        assert_eq!(m[(1, 0)], Complex64::new(0.0, 1.0));
        assert_eq!(m[(0, 1)], Complex64::new(0.0, -1.0));
    }

    #[test]
    fn qubit_zero_is_least_significant() {
        let obs = Observable::parse("ZI 1.0").unwrap();
        let m = obs.matrix().unwrap();
        // basis index 1 has qubit 0 set
        assert_eq!(m[(1, 1)].re, -1.0);
        assert_eq!(m[(2, 2)].re, 1.0);
    }

    #[test]
    fn lanczos_matches_dense() {
        let text = "ZZIII 0.3\nXXYYI -0.2\nIZXZY 0.11\nYIIIY 0.4\nIIZZI -0.7\nXIIII 0.05\n";
        let obs = Observable::parse(text).unwrap();
        let dense = obs.dense_ground_energy();
        let lanczos = obs.lanczos_ground_energy();
        assert!((dense - lanczos).abs() < 1e-10, "{dense} vs {lanczos}");
    }

    #[test]
    fn size_limit() {
        let obs = Observable::parse(&format!("{} 1.0", "Z".repeat(13))).unwrap();
        assert!(matches!(obs.exact_ground_energy(), Err(Error::Size { .. })));
    }
}
