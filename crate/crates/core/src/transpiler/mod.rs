//! Basis translation, SWAP routing and peephole optimisation for hardware
//! targets.
//!
//! Target files are TOML:
//!
//! ```toml
//! name = "line5"
//! n_qubits = 5
//! basis = ["rz", "sx", "x", "cx"]
//! edges = [[0, 1], [1, 2], [2, 3], [3, 4]]   # or: all_to_all = true
//! ```

mod passes;
mod routing;
mod synthesis;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use passes::{decompose_cx_to_rxx, Entangler};
pub use routing::{route, CouplingMap, Routed};
pub use synthesis::{synthesize, wrap_angle, zyz_angles, OneQubitFamily};

use crate::circuit::{Circuit, GateKind};
use crate::error::{read_file, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TranspileTarget {
    pub name: String,
    pub n_qubits: usize,
    pub basis: BTreeSet<GateKind>,
    /// `None` means every pair is coupled.
    pub coupling: Option<CouplingMap>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTarget {
    name: String,
    n_qubits: usize,
    basis: Vec<String>,
    #[serde(default)]
    edges: Vec<(usize, usize)>,
    #[serde(default)]
    all_to_all: bool,
}

impl TranspileTarget {
    pub fn new(
        name: impl Into<String>,
        n_qubits: usize,
        basis: impl IntoIterator<Item = GateKind>,
        coupling: Option<CouplingMap>,
    ) -> Result<Self> {
        let target = TranspileTarget {
            name: name.into(),
            n_qubits,
            basis: basis.into_iter().collect(),
            coupling,
        };
        target.one_qubit_family()?;
        target.entangler()?;
        if let Some(c) = &target.coupling {
            if c.n_qubits() != n_qubits {
                return Err(Error::validation(format!(
                    "coupling map covers {} qubits, target declares {n_qubits}",
                    c.n_qubits()
                )));
            }
        }
        Ok(target)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawTarget =
            toml::from_str(text).map_err(|e| Error::validation(e.message().to_string()))?;
        let basis = raw
            .basis
            .iter()
            .map(|s| s.parse::<GateKind>())
            .collect::<Result<Vec<_>>>()?;
        let coupling = match (raw.all_to_all, raw.edges.is_empty()) {
            (true, true) => None,
            (false, false) => Some(CouplingMap::new(raw.n_qubits, raw.edges)?),
            (true, false) => {
                return Err(Error::validation(
                    "give either `edges` or `all_to_all`, not both",
                ))
            }
            (false, true) if raw.n_qubits == 1 => None,
            (false, true) => return Err(Error::validation("target has no edges")),
        };
        TranspileTarget::new(raw.name, raw.n_qubits, basis, coupling)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        TranspileTarget::parse(&read_file(path)?)
            .map_err(|e| e.context(format!("reading {}", path.display())))
    }

    pub fn one_qubit_family(&self) -> Result<OneQubitFamily> {
        let has = |k| self.basis.contains(&k);
        if has(GateKind::Rz) && has(GateKind::Sx) {
            Ok(OneQubitFamily::ZSx {
                has_x: has(GateKind::X),
            })
        } else if has(GateKind::Rz) && has(GateKind::Rx) {
            Ok(OneQubitFamily::ZX)
        } else if has(GateKind::Rz) && has(GateKind::Ry) {
            Ok(OneQubitFamily::ZY)
        } else {
            Err(Error::Decomposition(format!(
                "basis of {} has no universal single-qubit family",
                self.name
            )))
        }
    }

    pub fn entangler(&self) -> Result<Entangler> {
        if self.basis.contains(&GateKind::Cx) {
            Ok(Entangler::Cx)
        } else if self.basis.contains(&GateKind::Rxx) {
            Ok(Entangler::Rxx)
        } else {
            Err(Error::Decomposition(format!(
                "basis of {} has no two-qubit gate",
                self.name
            )))
        }
    }

    pub fn is_coupled(&self, a: usize, b: usize) -> bool {
        match &self.coupling {
            None => a != b && a < self.n_qubits && b < self.n_qubits,
            Some(c) => c.is_coupled(a, b),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranspileReport {
    pub target: String,
    pub depth: usize,
    pub total_gates: usize,
    pub two_qubit_gates: usize,
    pub gate_counts: BTreeMap<String, usize>,
    pub swaps_inserted: usize,
    pub initial_layout: Vec<usize>,
    /// `final_layout[logical] = physical`.
    pub final_layout: Vec<usize>,
}

impl std::fmt::Display for TranspileReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "target: {}", self.target)?;
        writeln!(f, "depth: {}", self.depth)?;
        writeln!(f, "total gates: {}", self.total_gates)?;
        writeln!(f, "two-qubit gates: {}", self.two_qubit_gates)?;
        writeln!(f, "swaps inserted: {}", self.swaps_inserted)?;
        for (kind, n) in &self.gate_counts {
            writeln!(f, "  {kind}: {n}")?;
        }
        write!(f, "final layout: {:?}", self.final_layout)
    }
}

/// Layered depth: each gate sits one layer above the latest gate sharing a
/// qubit with it. Measurements are ignored.
pub fn depth(circuit: &Circuit) -> usize {
    let mut level = vec![0usize; circuit.n_qubits()];
    for g in circuit.gates() {
        if g.kind == GateKind::Measure {
            continue;
        }
        let l = g.qubits.iter().map(|&q| level[q]).max().unwrap_or(0) + 1;
        for &q in &g.qubits {
            level[q] = l;
        }
    }
    level.into_iter().max().unwrap_or(0)
}

pub fn gate_counts(circuit: &Circuit) -> BTreeMap<GateKind, usize> {
    let mut counts = BTreeMap::new();
    for g in circuit.gates() {
        *counts.entry(g.kind).or_insert(0) += 1;
    }
    counts
}

fn check_target_support(circuit: &Circuit, target: &TranspileTarget) -> Result<()> {
    if !circuit.is_bound() {
        return Err(Error::contract("bind parameters before transpiling"));
    }
    if circuit.n_qubits() > target.n_qubits {
        return Err(Error::Routing(format!(
            "circuit needs {} qubits, {} has {}",
            circuit.n_qubits(),
            target.name,
            target.n_qubits
        )));
    }
    Ok(())
}

/// Translation and peephole passes without routing.
pub fn optimize_passes(circuit: &Circuit, target: &TranspileTarget) -> Result<Circuit> {
    let family = target.one_qubit_family()?;
    let entangler = target.entangler()?;
    let n = circuit.n_qubits();
    let mut gates = circuit.gates().to_vec();
    passes::translate_two_qubit(&mut gates, entangler);
    passes::fixpoint(&mut gates, n, family)?;
    if entangler == Entangler::Rxx && family == OneQubitFamily::ZX {
        passes::slide_rx_through_rxx(&mut gates, n)?;
        passes::fixpoint(&mut gates, n, family)?;
    }
    let out = Circuit::from_gates(n, gates)?;
    if let Some(g) = out
        .gates()
        .iter()
        .find(|g| g.kind != GateKind::Measure && !target.basis.contains(&g.kind))
    {
        return Err(passes::unsupported(g.kind));
    }
    Ok(out)
}

/// Routes, translates and optimises `circuit` for `target`. The output acts
/// on physical qubits; logical qubit `l` ends on `report.final_layout[l]`.
pub fn transpile(
    circuit: &Circuit,
    target: &TranspileTarget,
) -> Result<(Circuit, TranspileReport)> {
    check_target_support(circuit, target)?;
    let routed = match &target.coupling {
        Some(map) => route(circuit, map)?,
        None => Routed {
            circuit: circuit.clone(),
            final_layout: (0..circuit.n_qubits()).collect(),
            swaps: 0,
        },
    };
    let out = optimize_passes(&routed.circuit, target)?;
    for g in out.gates() {
        if g.kind.is_two_qubit() && !target.is_coupled(g.qubits[0], g.qubits[1]) {
            return Err(Error::Routing(format!("{g} is not on a coupled pair")));
        }
    }
    let counts = gate_counts(&out);
    let report = TranspileReport {
        target: target.name.clone(),
        depth: depth(&out),
        total_gates: out.len(),
        two_qubit_gates: out.gates().iter().filter(|g| g.kind.is_two_qubit()).count(),
        gate_counts: counts.iter().map(|(k, n)| (k.to_string(), *n)).collect(),
        swaps_inserted: routed.swaps,
        initial_layout: (0..out.n_qubits()).collect(),
        final_layout: routed.final_layout,
    };
    Ok((out, report))
}
