//! Coupling maps and greedy SWAP routing.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};

/// Undirected qubit connectivity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CouplingMap {
    n_qubits: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl CouplingMap {
    pub fn new(n_qubits: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a == b {
                return Err(Error::validation(format!("self-edge on qubit {a}")));
            }
            if a >= n_qubits || b >= n_qubits {
                return Err(Error::validation(format!(
                    "edge ({a}, {b}) outside 0..{n_qubits}"
                )));
            }
            set.insert((a.min(b), a.max(b)));
        }
        Ok(CouplingMap {
            n_qubits,
            edges: set,
        })
    }

    pub fn line(n_qubits: usize) -> Self {
        CouplingMap::new(n_qubits, (1..n_qubits).map(|q| (q - 1, q))).expect("valid line")
    }

    pub fn all_to_all(n_qubits: usize) -> Self {
        let edges = (0..n_qubits).flat_map(|a| (a + 1..n_qubits).map(move |b| (a, b)));
        CouplingMap::new(n_qubits, edges).expect("valid complete graph")
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn is_coupled(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    fn neighbours(&self, q: usize) -> impl Iterator<Item = usize> + '_ {
        // BTreeSet order makes this ascending.
        (0..self.n_qubits).filter(move |&p| p != q && self.is_coupled(p, q))
    }

    /// Breadth-first shortest path `from … to`, preferring lower indices on ties.
    pub fn shortest_path(&self, from: usize, to: usize) -> Option<Vec<usize>> {
        let mut parent = vec![usize::MAX; self.n_qubits];
        let mut queue = VecDeque::from([from]);
        parent[from] = from;
        while let Some(q) = queue.pop_front() {
            if q == to {
                let mut path = vec![to];
                let mut cur = to;
                while cur != from {
                    cur = parent[cur];
                    path.push(cur);
                }
                path.reverse();
                return Some(path);
            }
            for p in self.neighbours(q) {
                if parent[p] == usize::MAX {
                    parent[p] = q;
                    queue.push_back(p);
                }
            }
        }
        None
    }

    pub fn is_connected(&self) -> bool {
        self.n_qubits <= 1 || (1..self.n_qubits).all(|q| self.shortest_path(0, q).is_some())
    }
}

/// Routed circuit plus `final_layout[logical] = physical`.
#[derive(Debug, Clone, PartialEq)]
pub struct Routed {
    pub circuit: Circuit,
    pub final_layout: Vec<usize>,
    pub swaps: usize,
}

/// Inserts SWAPs so that every two-qubit gate acts on coupled qubits. The
/// initial layout is the identity; the first operand of a distant gate walks
/// towards the second along a shortest path.
pub fn route(circuit: &Circuit, coupling: &CouplingMap) -> Result<Routed> {
    let n = coupling.n_qubits();
    if circuit.n_qubits() > n {
        return Err(Error::Routing(format!(
            "circuit needs {} qubits, coupling map has {n}",
            circuit.n_qubits()
        )));
    }
    // layout[logical] = physical, phys_to_log its inverse.
    let mut layout: Vec<usize> = (0..n).collect();
    let mut phys_to_log: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    let mut swaps = 0;
    for g in circuit.gates() {
        let mut mapped = g.clone();
        if let &[a, b] = g.qubits.as_slice() {
            let (pa, pb) = (layout[a], layout[b]);
            if !coupling.is_coupled(pa, pb) {
                let path = coupling.shortest_path(pa, pb).ok_or_else(|| {
                    Error::Routing(format!("no path between physical qubits {pa} and {pb}"))
                })?;
                for w in path.windows(2).take(path.len() - 2) {
                    let (x, y) = (w[0], w[1]);
                    out.push(Gate::swap(x, y));
                    swaps += 1;
                    let (lx, ly) = (phys_to_log[x], phys_to_log[y]);
                    phys_to_log.swap(x, y);
                    layout[lx] = y;
                    layout[ly] = x;
                }
            }
        }
        mapped.qubits = g.qubits.iter().map(|&q| layout[q]).collect();
        out.push(mapped);
    }
    let touched = out
        .iter()
        .flat_map(|g| g.qubits.iter().copied())
        .max()
        .map_or(0, |q| q + 1);
    let width = circuit.n_qubits().max(touched);
    layout.truncate(width);
    Ok(Routed {
        circuit: Circuit::from_gates(width, out)?,
        final_layout: layout,
        swaps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{
        build_ry_cnot_ansatz, permutation_matrix, phase_invariant_distance, GateKind,
    };

    #[test]
    fn shortest_path_on_line() {
        let line = CouplingMap::line(5);
        assert_eq!(line.shortest_path(3, 0), Some(vec![3, 2, 1, 0]));
        assert!(line.is_connected());
        let split = CouplingMap::new(4, [(0, 1), (2, 3)]).unwrap();
        assert!(!split.is_connected());
        assert!(CouplingMap::new(2, [(1, 1)]).is_err());
    }

    #[test]
    fn circular_entangler_needs_two_swaps() {
        let ansatz = build_ry_cnot_ansatz(4)
            .unwrap()
            .bind(&[0.1, 0.2, 0.3, 0.4])
            .unwrap();
        let routed = route(&ansatz, &CouplingMap::line(5)).unwrap();
        assert_eq!(routed.swaps, 2);
        assert_eq!(routed.circuit.n_qubits(), 4);
        for g in routed.circuit.gates() {
            if g.kind.is_two_qubit() {
                assert!(CouplingMap::line(5).is_coupled(g.qubits[0], g.qubits[1]));
            }
        }
    }

    #[test]
    fn coupled_circuit_untouched() {
        let c = Circuit::from_gates(3, vec![Gate::cx(0, 1), Gate::cx(2, 1)]).unwrap();
        let routed = route(&c, &CouplingMap::line(3)).unwrap();
        assert_eq!(routed.swaps, 0);
        assert_eq!(routed.circuit, c);
    }

    #[test]
    fn distant_cx_equivalent_up_to_permutation() {
        let c = Circuit::from_gates(3, vec![Gate::rx(0, 0.4), Gate::cx(0, 2)]).unwrap();
        let routed = route(&c, &CouplingMap::line(3)).unwrap();
        let kinds: Vec<_> = routed.circuit.gates().iter().map(|g| g.kind).collect();
        assert_eq!(kinds, vec![GateKind::Rx, GateKind::Swap, GateKind::Cx]);
        let expected = permutation_matrix(&routed.final_layout) * c.unitary().unwrap();
        let got = routed.circuit.unitary().unwrap();
        assert!(phase_invariant_distance(&expected, &got) < 1e-12);
    }

    #[test]
    fn disconnected_map_is_a_routing_error() {
        let c = Circuit::from_gates(4, vec![Gate::cx(0, 3)]).unwrap();
        let split = CouplingMap::new(4, [(0, 1), (2, 3)]).unwrap();
        assert!(matches!(route(&c, &split), Err(Error::Routing(_))));
    }
}
