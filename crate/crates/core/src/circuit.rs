//! Gates, circuits, and the RY-CNOT ansatz.
//!
//! Basis state index `b` stores qubit `q` in bit `q`. For two-qubit gates the
//! first listed qubit is bit 0 of the local 4×4 matrix (so `CX` lists control
//! then target).

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, Matrix2, Matrix4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Widest circuit `unitary()` will build.
pub const MAX_UNITARY_QUBITS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateKind {
    Rx,
    Ry,
    Rz,
    Sx,
    X,
    Cx,
    Rxx,
    Swap,
    Measure,
}

impl GateKind {
    pub const ALL: [GateKind; 9] = [
        GateKind::Rx,
        GateKind::Ry,
        GateKind::Rz,
        GateKind::Sx,
        GateKind::X,
        GateKind::Cx,
        GateKind::Rxx,
        GateKind::Swap,
        GateKind::Measure,
    ];

    pub fn arity(self) -> usize {
        match self {
            GateKind::Cx | GateKind::Rxx | GateKind::Swap => 2,
            _ => 1,
        }
    }

    pub fn is_rotation(self) -> bool {
        matches!(
            self,
            GateKind::Rx | GateKind::Ry | GateKind::Rz | GateKind::Rxx
        )
    }

    pub fn is_two_qubit(self) -> bool {
        self.arity() == 2
    }

    /// Single-qubit unitary kinds (everything of arity one except measurement).
    pub fn is_single_qubit_unitary(self) -> bool {
        self.arity() == 1 && self != GateKind::Measure
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::Rx => "rx",
            GateKind::Ry => "ry",
            GateKind::Rz => "rz",
            GateKind::Sx => "sx",
            GateKind::X => "x",
            GateKind::Cx => "cx",
            GateKind::Rxx => "rxx",
            GateKind::Swap => "swap",
            GateKind::Measure => "measure",
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        GateKind::ALL
            .into_iter()
            .find(|k| k.name() == lower || (lower == "cnot" && *k == GateKind::Cx))
            .ok_or_else(|| Error::Decomposition(format!("unknown gate kind `{s}`")))
    }
}

/// Rotation angle: either a concrete value in radians or a parameter slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Angle {
    Value(f64),
    Param(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
    pub angle: Option<Angle>,
}

impl Gate {
    fn fixed(kind: GateKind, qubits: Vec<usize>) -> Gate {
        Gate {
            kind,
            qubits,
            angle: None,
        }
    }

    fn rotation(kind: GateKind, qubits: Vec<usize>, theta: f64) -> Gate {
        Gate {
            kind,
            qubits,
            angle: Some(Angle::Value(theta)),
        }
    }

    pub fn rx(q: usize, theta: f64) -> Gate {
        Gate::rotation(GateKind::Rx, vec![q], theta)
    }

    pub fn ry(q: usize, theta: f64) -> Gate {
        Gate::rotation(GateKind::Ry, vec![q], theta)
    }

    pub fn rz(q: usize, theta: f64) -> Gate {
        Gate::rotation(GateKind::Rz, vec![q], theta)
    }

    pub fn sx(q: usize) -> Gate {
        Gate::fixed(GateKind::Sx, vec![q])
    }

    pub fn x(q: usize) -> Gate {
        Gate::fixed(GateKind::X, vec![q])
    }

    pub fn cx(control: usize, target: usize) -> Gate {
        Gate::fixed(GateKind::Cx, vec![control, target])
    }

    pub fn rxx(a: usize, b: usize, theta: f64) -> Gate {
        Gate::rotation(GateKind::Rxx, vec![a, b], theta)
    }

    pub fn swap(a: usize, b: usize) -> Gate {
        Gate::fixed(GateKind::Swap, vec![a, b])
    }

    pub fn measure(q: usize) -> Gate {
        Gate::fixed(GateKind::Measure, vec![q])
    }

    /// A rotation whose angle is supplied when the circuit is bound.
    pub fn parameterized(kind: GateKind, qubits: Vec<usize>, slot: usize) -> Gate {
        Gate {
            kind,
            qubits,
            angle: Some(Angle::Param(slot)),
        }
    }

    /// Concrete angle, or `None` for fixed gates and unbound parameters.
    pub fn theta(&self) -> Option<f64> {
        match self.angle {
            Some(Angle::Value(v)) => Some(v),
            _ => None,
        }
    }

    pub fn is_bound(&self) -> bool {
        !matches!(self.angle, Some(Angle::Param(_)))
    }

    pub fn acts_on(&self, q: usize) -> bool {
        self.qubits.contains(&q)
    }

    fn bound_theta(&self) -> Result<f64> {
        match self.angle {
            Some(Angle::Value(v)) => Ok(v),
            Some(Angle::Param(slot)) => Err(Error::contract(format!(
                "{} on {:?} still references parameter {slot}",
                self.kind, self.qubits
            ))),
            None => Err(Error::contract(format!("{} has no angle", self.kind))),
        }
    }

    /// 2×2 matrix of a bound single-qubit gate.
    pub fn matrix1(&self) -> Result<Matrix2<Complex64>> {
        Ok(match self.kind {
            GateKind::Rx => rx_matrix(self.bound_theta()?),
            GateKind::Ry => ry_matrix(self.bound_theta()?),
            GateKind::Rz => rz_matrix(self.bound_theta()?),
            GateKind::Sx => sx_matrix(),
            GateKind::X => x_matrix(),
            other => {
                return Err(Error::contract(format!(
                    "{other} is not a single-qubit unitary"
                )))
            }
        })
    }

    /// 4×4 matrix of a bound two-qubit gate; local bit 0 is `qubits[0]`.
    pub fn matrix2(&self) -> Result<Matrix4<Complex64>> {
        Ok(match self.kind {
            GateKind::Cx => cx_matrix(),
            GateKind::Rxx => rxx_matrix(self.bound_theta()?),
            GateKind::Swap => swap_matrix(),
            other => {
                return Err(Error::contract(format!(
                    "{other} is not a two-qubit unitary"
                )))
            }
        })
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind)?;
        match self.angle {
            Some(Angle::Value(v)) => write!(f, "({v:.6})")?,
            Some(Angle::Param(p)) => write!(f, "(θ{p})")?,
            None => {}
        }
        let qs: Vec<String> = self.qubits.iter().map(|q| format!("q{q}")).collect();
        write!(f, " {}", qs.join(","))
    }
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub fn rx_matrix(theta: f64) -> Matrix2<Complex64> {
    let (s, c) = (theta / 2.0).sin_cos();
    let mis = Complex64::new(0.0, -s);
    Matrix2::new(c.into(), mis, mis, c.into())
}

pub fn ry_matrix(theta: f64) -> Matrix2<Complex64> {
    let (s, c) = (theta / 2.0).sin_cos();
    Matrix2::new(c.into(), (-s).into(), s.into(), c.into())
}

pub fn rz_matrix(theta: f64) -> Matrix2<Complex64> {
    Matrix2::new(
        Complex64::from_polar(1.0, -theta / 2.0),
        ZERO,
        ZERO,
        Complex64::from_polar(1.0, theta / 2.0),
    )
}

pub fn sx_matrix() -> Matrix2<Complex64> {
    let a = Complex64::new(0.5, 0.5);
    let b = Complex64::new(0.5, -0.5);
    Matrix2::new(a, b, b, a)
}

pub fn x_matrix() -> Matrix2<Complex64> {
    Matrix2::new(ZERO, ONE, ONE, ZERO)
}

pub fn cx_matrix() -> Matrix4<Complex64> {
    // control = local bit 0: |1,t⟩ ↔ |1,t⊕1⟩, i.e. indices 1 ↔ 3.
    let mut m = Matrix4::zeros();
    m[(0, 0)] = ONE;
    m[(3, 1)] = ONE;
    m[(2, 2)] = ONE;
    m[(1, 3)] = ONE;
    m
}

pub fn rxx_matrix(theta: f64) -> Matrix4<Complex64> {
    let (s, c) = (theta / 2.0).sin_cos();
    let mis = Complex64::new(0.0, -s);
    let mut m = Matrix4::identity() * Complex64::from(c);
    for i in 0..4 {
        m[(3 - i, i)] = mis;
    }
    m
}

pub fn swap_matrix() -> Matrix4<Complex64> {
    let mut m = Matrix4::zeros();
    m[(0, 0)] = ONE;
    m[(2, 1)] = ONE;
    m[(1, 2)] = ONE;
    m[(3, 3)] = ONE;
    m
}

/// An ordered gate list over a fixed register, possibly with parameter slots.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Circuit {
            n_qubits,
            gates: Vec::new(),
        }
    }

    pub fn from_gates(n_qubits: usize, gates: Vec<Gate>) -> Result<Self> {
        let mut c = Circuit::new(n_qubits);
        for g in gates {
            c.push(g)?;
        }
        Ok(c)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        if gate.qubits.len() != gate.kind.arity() {
            return Err(Error::contract(format!(
                "{} expects {} qubit(s), got {:?}",
                gate.kind,
                gate.kind.arity(),
                gate.qubits
            )));
        }
        if let Some(&q) = gate.qubits.iter().find(|&&q| q >= self.n_qubits) {
            return Err(Error::contract(format!(
                "qubit {q} out of range for a {}-qubit circuit",
                self.n_qubits
            )));
        }
        if gate.qubits.len() == 2 && gate.qubits[0] == gate.qubits[1] {
            return Err(Error::contract(format!(
                "{} needs distinct qubits, got {:?}",
                gate.kind, gate.qubits
            )));
        }
        if gate.kind.is_rotation() != gate.angle.is_some() {
            return Err(Error::contract(format!(
                "{} angle presence does not match its kind",
                gate.kind
            )));
        }
        self.gates.push(gate);
        Ok(())
    }

    /// Appends every gate of `other`, which must be no wider than `self`.
    pub fn extend(&mut self, other: &Circuit) -> Result<()> {
        for g in other.gates() {
            self.push(g.clone())?;
        }
        Ok(())
    }

    /// Map from parameter slot to the positions of the gates that use it.
    pub fn parameter_slots(&self) -> BTreeMap<usize, Vec<usize>> {
        let mut slots: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (pos, g) in self.gates.iter().enumerate() {
            if let Some(Angle::Param(slot)) = g.angle {
                slots.entry(slot).or_default().push(pos);
            }
        }
        slots
    }

    pub fn n_parameters(&self) -> usize {
        self.parameter_slots().len()
    }

    pub fn is_bound(&self) -> bool {
        self.gates.iter().all(Gate::is_bound)
    }

    pub fn has_measurements(&self) -> bool {
        self.gates.iter().any(|g| g.kind == GateKind::Measure)
    }

    /// Substitutes parameter values; `values[k]` fills slot `k`.
    pub fn bind(&self, values: &[f64]) -> Result<Circuit> {
        let slots = self.parameter_slots();
        if values.len() != slots.len() {
            return Err(Error::contract(format!(
                "circuit has {} parameter slot(s), got {} value(s)",
                slots.len(),
                values.len()
            )));
        }
        let mut gates = self.gates.clone();
        for g in gates.iter_mut() {
            if let Some(Angle::Param(slot)) = g.angle {
                let v = values.get(slot).ok_or_else(|| {
                    Error::contract(format!("parameter slot {slot} has no value"))
                })?;
                g.angle = Some(Angle::Value(*v));
            }
        }
        Ok(Circuit {
            n_qubits: self.n_qubits,
            gates,
        })
    }

    /// Same gates on a register of `n_qubits` (must not drop used qubits).
    pub fn with_width(&self, n_qubits: usize) -> Result<Circuit> {
        Circuit::from_gates(n_qubits, self.gates.clone())
    }

    /// Copy without measurement gates.
    pub fn without_measurements(&self) -> Circuit {
        Circuit {
            n_qubits: self.n_qubits,
            gates: self
                .gates
                .iter()
                .filter(|g| g.kind != GateKind::Measure)
                .cloned()
                .collect(),
        }
    }

    /// Full `2ⁿ × 2ⁿ` unitary: the product of gate unitaries in circuit order.
    pub fn unitary(&self) -> Result<DMatrix<Complex64>> {
        if self.n_qubits > MAX_UNITARY_QUBITS {
            return Err(Error::Size {
                what: "circuit unitary",
                got: self.n_qubits,
                limit: MAX_UNITARY_QUBITS,
            });
        }
        if self.has_measurements() {
            return Err(Error::contract("circuit_unitary: MEASURE present"));
        }
        let dim = 1usize << self.n_qubits;
        let mut u = DMatrix::<Complex64>::identity(dim, dim);
        for g in &self.gates {
            let full = embed(g, self.n_qubits)?;
            u = full * u;
        }
        Ok(u)
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "circuit on {} qubits, {} gates",
            self.n_qubits,
            self.gates.len()
        )?;
        for g in &self.gates {
            writeln!(f, "  {g}")?;
        }
        Ok(())
    }
}

/// The full-register matrix of one gate.
fn embed(gate: &Gate, n_qubits: usize) -> Result<DMatrix<Complex64>> {
    let dim = 1usize << n_qubits;
    let mut full = DMatrix::<Complex64>::zeros(dim, dim);
    match *gate.qubits.as_slice() {
        [q] => {
            let m = gate.matrix1()?;
            for col in 0..dim {
                let bit = (col >> q) & 1;
                for out in 0..2 {
                    let row = (col & !(1 << q)) | (out << q);
                    full[(row, col)] = m[(out, bit)];
                }
            }
        }
        [a, b] => {
            let m = gate.matrix2()?;
            for col in 0..dim {
                let local = ((col >> a) & 1) | (((col >> b) & 1) << 1);
                for out in 0..4 {
                    let row = (col & !(1 << a) & !(1 << b)) | ((out & 1) << a) | ((out >> 1) << b);
                    full[(row, col)] = m[(out, local)];
                }
            }
        }
        _ => unreachable!("arity checked on push"),
    }
    Ok(full)
}

/// Hardware-efficient RY-CNOT ansatz: one parameterised RY per qubit followed by
/// a circular CNOT entangler `0→1, 1→2, …, n−1→0`.
pub fn build_ry_cnot_ansatz(n_qubits: usize) -> Result<Circuit> {
    if n_qubits < 2 {
        return Err(Error::InvalidWidth(n_qubits));
    }
    let mut c = Circuit::new(n_qubits);
    for q in 0..n_qubits {
        c.push(Gate::parameterized(GateKind::Ry, vec![q], q))?;
    }
    for q in 0..n_qubits {
        c.push(Gate::cx(q, (q + 1) % n_qubits))?;
    }
    Ok(c)
}

/// Largest entry-wise difference between `b` and `a` after aligning their
/// global phase. Zero iff the matrices agree up to a unit scalar.
pub fn phase_invariant_distance(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch");
    let overlap: Complex64 = a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum();
    let phase = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        ONE
    };
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (y - phase * x).norm())
        .fold(0.0, f64::max)
}

/// Unitary that moves logical qubit `l` to position `layout[l]`.
pub fn permutation_matrix(layout: &[usize]) -> DMatrix<Complex64> {
    let n = layout.len();
    let dim = 1usize << n;
    let mut p = DMatrix::<Complex64>::zeros(dim, dim);
    for b in 0..dim {
        let mut image = 0;
        for (l, &phys) in layout.iter().enumerate() {
            image |= ((b >> l) & 1) << phys;
        }
        p[(image, b)] = ONE;
    }
    p
}
