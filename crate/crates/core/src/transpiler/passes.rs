//! Peephole rewrites over flat gate lists.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::Matrix2;
use num_complex::Complex64;

use super::synthesis::{is_zero_angle, synthesize, wrap_angle, xzx_angles, OneQubitFamily};
use crate::circuit::{Gate, GateKind};
use crate::error::{Error, Result};

const MAX_ROUNDS: usize = 10;

/// Two-qubit kind a basis offers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Entangler {
    Cx,
    Rxx,
}

fn next_on(gates: &[Gate], after: usize, q: usize) -> Option<usize> {
    (after + 1..gates.len()).find(|&j| gates[j].acts_on(q))
}

fn prev_on(gates: &[Gate], before: usize, q: usize) -> Option<usize> {
    (0..before).rev().find(|&j| gates[j].acts_on(q))
}

/// Index of the gate that directly follows `i` on both of its qubits, if any.
fn next_on_both(gates: &[Gate], i: usize) -> Option<usize> {
    let (a, b) = (gates[i].qubits[0], gates[i].qubits[1]);
    match (next_on(gates, i, a), next_on(gates, i, b)) {
        (Some(j), Some(k)) if j == k => Some(j),
        _ => None,
    }
}

fn prev_on_both(gates: &[Gate], i: usize) -> Option<usize> {
    let (a, b) = (gates[i].qubits[0], gates[i].qubits[1]);
    match (prev_on(gates, i, a), prev_on(gates, i, b)) {
        (Some(j), Some(k)) if j == k => Some(j),
        _ => None,
    }
}

/// Removes back-to-back identical CX pairs.
pub fn cancel_cx(gates: &mut Vec<Gate>) -> bool {
    let mut changed = false;
    let mut i = 0;
    while i < gates.len() {
        if gates[i].kind == GateKind::Cx {
            if let Some(j) = next_on_both(gates, i) {
                if gates[j].kind == GateKind::Cx && gates[j].qubits == gates[i].qubits {
                    gates.remove(j);
                    gates.remove(i);
                    changed = true;
                    i = i.saturating_sub(1);
                    continue;
                }
            }
        }
        i += 1;
    }
    changed
}

/// Fuses back-to-back RXX gates on the same pair.
pub fn merge_rxx(gates: &mut Vec<Gate>) -> bool {
    let mut changed = false;
    let mut i = 0;
    while i < gates.len() {
        if gates[i].kind == GateKind::Rxx {
            if let Some(j) = next_on_both(gates, i) {
                if gates[j].kind == GateKind::Rxx {
                    let sum = gates[i].theta().unwrap_or(0.0) + gates[j].theta().unwrap_or(0.0);
                    gates[i] = Gate::rxx(gates[i].qubits[0], gates[i].qubits[1], wrap_angle(sum));
                    gates.remove(j);
                    changed = true;
                    continue;
                }
            }
        }
        i += 1;
    }
    changed
}

/// Drops rotations whose angle is a multiple of 2π.
pub fn remove_zero_rotations(gates: &mut Vec<Gate>) -> bool {
    let before = gates.len();
    gates.retain(|g| !(g.kind.is_rotation() && g.theta().is_some_and(is_zero_angle)));
    gates.len() != before
}

/// Replaces each SWAP by three CX, oriented so that the outer CX matches a
/// neighbouring CX on the same pair when there is one.
pub fn expand_swaps(gates: &mut Vec<Gate>) {
    let mut i = 0;
    while i < gates.len() {
        if gates[i].kind != GateKind::Swap {
            i += 1;
            continue;
        }
        let (a, b) = (gates[i].qubits[0], gates[i].qubits[1]);
        let on_pair = |g: &Gate| g.kind == GateKind::Cx && g.acts_on(a) && g.acts_on(b);
        let outer = prev_on_both(gates, i)
            .filter(|&j| on_pair(&gates[j]))
            .or_else(|| next_on_both(gates, i).filter(|&j| on_pair(&gates[j])))
            .map(|j| (gates[j].qubits[0], gates[j].qubits[1]))
            .unwrap_or((a, b));
        let (c, t) = outer;
        gates.splice(i..=i, [Gate::cx(c, t), Gate::cx(t, c), Gate::cx(c, t)]);
        i += 3;
    }
}

fn hadamard(q: usize) -> [Gate; 2] {
    [Gate::rz(q, PI), Gate::ry(q, FRAC_PI_2)]
}

/// CX as one `RXX(π/2)` dressed with single-qubit rotations.
pub fn decompose_cx_to_rxx(control: usize, target: usize) -> Vec<Gate> {
    vec![
        Gate::ry(control, FRAC_PI_2),
        Gate::rxx(control, target, FRAC_PI_2),
        Gate::rx(control, -FRAC_PI_2),
        Gate::rx(target, -FRAC_PI_2),
        Gate::ry(control, -FRAC_PI_2),
    ]
}

fn rxx_to_cx(a: usize, b: usize, theta: f64) -> Vec<Gate> {
    let mut out = Vec::new();
    out.extend(hadamard(a));
    out.extend(hadamard(b));
    out.push(Gate::cx(a, b));
    out.push(Gate::rz(b, theta));
    out.push(Gate::cx(a, b));
    out.extend(hadamard(a));
    out.extend(hadamard(b));
    out
}

/// Rewrites every two-qubit gate into `entangler` plus single-qubit rotations.
pub fn translate_two_qubit(gates: &mut Vec<Gate>, entangler: Entangler) {
    expand_swaps(gates);
    cancel_cx(gates);
    let mut out = Vec::with_capacity(gates.len());
    for g in gates.drain(..) {
        match (g.kind, entangler) {
            (GateKind::Cx, Entangler::Rxx) => {
                out.extend(decompose_cx_to_rxx(g.qubits[0], g.qubits[1]))
            }
            (GateKind::Rxx, Entangler::Cx) => out.extend(rxx_to_cx(
                g.qubits[0],
                g.qubits[1],
                g.theta().unwrap_or(0.0),
            )),
            _ => out.push(g),
        }
    }
    *gates = out;
}

/// Collapses every maximal single-qubit run into the shortest sequence of
/// `family` gates. Runs already in the family are kept when resynthesis
/// would not shorten them.
pub fn merge_single_qubit_runs(
    gates: &mut Vec<Gate>,
    n_qubits: usize,
    family: OneQubitFamily,
) -> Result<bool> {
    let mut pending: Vec<Vec<Gate>> = vec![Vec::new(); n_qubits];
    let mut out = Vec::with_capacity(gates.len());
    let mut changed = false;
    let flush =
        |run: &mut Vec<Gate>, q: usize, out: &mut Vec<Gate>, changed: &mut bool| -> Result<()> {
            if run.is_empty() {
                return Ok(());
            }
            let mut u = Matrix2::<Complex64>::identity();
            for g in run.iter() {
                u = g.matrix1()? * u;
            }
            let synthesized = synthesize(&u, q, family);
            let keep =
                run.iter().all(|g| family.contains(g.kind)) && run.len() <= synthesized.len();
            if keep {
                out.append(run);
            } else {
                *changed = true;
                out.extend(synthesized);
                run.clear();
            }
            Ok(())
        };
    for g in gates.drain(..) {
        if g.kind.is_single_qubit_unitary() {
            pending[g.qubits[0]].push(g);
            continue;
        }
        for &q in &g.qubits {
            flush(&mut pending[q], q, &mut out, &mut changed)?;
        }
        out.push(g);
    }
    for (q, run) in pending.iter_mut().enumerate() {
        flush(run, q, &mut out, &mut changed)?;
    }
    *gates = out;
    Ok(changed)
}

/// Moves the X-rotation parts of single-qubit runs sandwiched between two
/// RXX gates through those RXX gates (RX on either qubit commutes with RXX),
/// leaving a lone RZ in the middle. Only the first interior run on a qubit
/// pushes backwards; the rest push forward so nothing bounces.
pub fn slide_rx_through_rxx(gates: &mut Vec<Gate>, n_qubits: usize) -> Result<()> {
    for q in 0..n_qubits {
        for r in 0.. {
            let on_q: Vec<usize> = (0..gates.len()).filter(|&j| gates[j].acts_on(q)).collect();
            let rxx: Vec<usize> = (0..on_q.len())
                .filter(|&k| gates[on_q[k]].kind == GateKind::Rxx)
                .collect();
            if r + 1 >= rxx.len() {
                break;
            }
            let run: Vec<usize> = on_q[rxx[r] + 1..rxx[r + 1]].to_vec();
            if run.is_empty() || !run.iter().all(|&j| gates[j].kind.is_single_qubit_unitary()) {
                continue;
            }
            let mut u = Matrix2::<Complex64>::identity();
            for &j in &run {
                u = gates[j].matrix1()? * u;
            }
            let (lead, mid, trail) = xzx_angles(&u);
            let (prev_rxx, next_rxx) = (on_q[rxx[r]], on_q[rxx[r + 1]]);
            let push_back = r == 0;
            let mut rebuilt = Vec::with_capacity(gates.len() + 3);
            for (j, g) in gates.iter().enumerate() {
                if j == prev_rxx && push_back && !is_zero_angle(lead) {
                    rebuilt.push(Gate::rx(q, wrap_angle(lead)));
                }
                if j == run[0] {
                    if !push_back && !is_zero_angle(lead) {
                        rebuilt.push(Gate::rx(q, wrap_angle(lead)));
                    }
                    if !is_zero_angle(mid) {
                        rebuilt.push(Gate::rz(q, wrap_angle(mid)));
                    }
                }
                if !run.contains(&j) {
                    rebuilt.push(g.clone());
                }
                if j == next_rxx && !is_zero_angle(trail) {
                    rebuilt.push(Gate::rx(q, wrap_angle(trail)));
                }
            }
            *gates = rebuilt;
        }
    }
    Ok(())
}

/// Runs the cancellation, merge and resynthesis passes until nothing changes.
pub fn fixpoint(gates: &mut Vec<Gate>, n_qubits: usize, family: OneQubitFamily) -> Result<()> {
    for _ in 0..MAX_ROUNDS {
        let mut changed = cancel_cx(gates);
        changed |= merge_rxx(gates);
        changed |= merge_single_qubit_runs(gates, n_qubits, family)?;
        changed |= remove_zero_rotations(gates);
        if !changed {
            return Ok(());
        }
    }
    log::debug!("peephole passes stopped after {MAX_ROUNDS} rounds");
    Ok(())
}

pub(crate) fn unsupported(kind: GateKind) -> Error {
    Error::Decomposition(format!("no rule to rewrite {kind} into the target basis"))
}
