#![allow(dead_code)]

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

use vqebench::circuit::{
    build_ry_cnot_ansatz, permutation_matrix, phase_invariant_distance, Circuit, Gate,
};
use vqebench::noise::{build_noise_model, CalibrationData, NoiseModel};
use vqebench::observable::Observable;
use vqebench::optimizers::Sinusoid;
use vqebench::simulator::{run_density, run_statevector, QuantumState};

pub const CASES: u32 = 1000;

pub fn repo(p: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(p)
}

pub struct H2 {
    pub observable: Observable,
    pub e_fci: f64,
    pub ansatz: Circuit,
}

pub fn h2() -> &'static H2 {
    static CELL: OnceLock<H2> = OnceLock::new();
    CELL.get_or_init(|| {
        let observable = Observable::load(repo("data/h2_0.735.obs")).unwrap();
        let e_fci = observable.exact_ground_energy().unwrap();
        H2 {
            observable,
            e_fci,
            ansatz: build_ry_cnot_ansatz(4).unwrap(),
        }
    })
}

pub fn manila_noise() -> &'static NoiseModel {
    static CELL: OnceLock<NoiseModel> = OnceLock::new();
    CELL.get_or_init(|| {
        let cal = CalibrationData::load(repo("data/manila.cal")).unwrap();
        build_noise_model(&cal, true).unwrap()
    })
}

pub fn angle() -> impl Strategy<Value = f64> {
    -PI..PI
}

pub fn gate_on(n: usize) -> impl Strategy<Value = Gate> {
    let q = 0..n;
    let pair = (0..n, 1..n).prop_map(move |(a, d)| (a, (a + d) % n));
    prop_oneof![
        (q.clone(), angle()).prop_map(|(q, t)| Gate::rx(q, t)),
        (q.clone(), angle()).prop_map(|(q, t)| Gate::ry(q, t)),
        (q.clone(), angle()).prop_map(|(q, t)| Gate::rz(q, t)),
        q.clone().prop_map(Gate::sx),
        q.prop_map(Gate::x),
        pair.clone().prop_map(|(a, b)| Gate::cx(a, b)),
        (pair.clone(), angle()).prop_map(|((a, b), t)| Gate::rxx(a, b, t)),
        pair.prop_map(|(a, b)| Gate::swap(a, b)),
    ]
}

/// Bound circuits of 2..=4 qubits with up to 16 gates.
pub fn circuit() -> impl Strategy<Value = Circuit> {
    (2usize..=4).prop_flat_map(|n| {
        proptest::collection::vec(gate_on(n), 0..16)
            .prop_map(move |gates| Circuit::from_gates(n, gates).unwrap())
    })
}

/// Circuits in the superconducting basis on coupled pairs of the 5-qubit line.
pub fn line_circuit() -> impl Strategy<Value = Circuit> {
    let g = prop_oneof![
        (0usize..5, angle()).prop_map(|(q, t)| Gate::rz(q, t)),
        (0usize..5).prop_map(Gate::sx),
        (0usize..5).prop_map(Gate::x),
        (0usize..4, any::<bool>()).prop_map(|(a, fwd)| if fwd {
            Gate::cx(a, a + 1)
        } else {
            Gate::cx(a + 1, a)
        }),
    ];
    proptest::collection::vec(g, 0..12).prop_map(|gates| Circuit::from_gates(5, gates).unwrap())
}

pub fn params() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(angle(), 4)
}

pub fn check_unitarity(c: &Circuit) -> Result<(), TestCaseError> {
    let u = c
        .unitary()
        .map_err(|e| TestCaseError::fail(e.to_string()))?;
    let dim = u.nrows();
    let err = (u.adjoint() * &u - DMatrix::<Complex64>::identity(dim, dim)).camax();
    prop_assert!(err < 1e-10, "U†U deviates by {err}");
    let psi = run_statevector(c).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert!((psi.norm_sqr() - 1.0).abs() < 1e-10);
    Ok(())
}

pub fn check_trace(c: &Circuit, noise: &NoiseModel) -> Result<(), TestCaseError> {
    let rho = run_density(c, noise).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let tr = rho.trace();
    prop_assert!(
        (tr.re - 1.0).abs() < 1e-10 && tr.im.abs() < 1e-10,
        "trace {tr}"
    );
    prop_assert!(rho.hermiticity_error() < 1e-10);
    prop_assert!(rho.min_eigenvalue() >= -1e-8);
    Ok(())
}

pub fn exact_cost(theta: &[f64]) -> f64 {
    let h = h2();
    run_statevector(&h.ansatz.bind(theta).unwrap())
        .unwrap()
        .expectation(&h.observable)
        .unwrap()
}

pub fn check_variational(theta: &[f64]) -> Result<(), TestCaseError> {
    let e = exact_cost(theta);
    prop_assert!(e >= h2().e_fci - 1e-9, "{e} below E_FCI");
    Ok(())
}

/// Fits the sinusoid through θⱼ and θⱼ ± π/2, then checks it at θⱼ + δ.
pub fn check_sinusoid(theta: &[f64], j: usize, delta: f64) -> Result<(), TestCaseError> {
    let at = |shift: f64| {
        let mut x = theta.to_vec();
        x[j] += shift;
        exact_cost(&x)
    };
    let s = Sinusoid::fit(at(0.0), at(PI / 2.0), at(-PI / 2.0));
    let residual = (s.eval(delta) - at(delta)).abs();
    prop_assert!(residual < 1e-9, "residual {residual}");
    Ok(())
}

pub fn check_equivalent(input: &Circuit, out: &Circuit, layout: &[usize]) -> f64 {
    let wide = input.with_width(out.n_qubits()).unwrap();
    let mut full = layout.to_vec();
    full.extend(layout.len()..out.n_qubits());
    let expected = permutation_matrix(&full) * wide.unitary().unwrap();
    phase_invariant_distance(&expected, &out.unitary().unwrap())
}
