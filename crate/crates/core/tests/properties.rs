mod common;

use std::collections::BTreeMap;
use std::f64::consts::PI;

use proptest::prelude::*;

use common::*;
use vqebench::circuit::{build_ry_cnot_ansatz, Circuit, Gate};
use vqebench::measurement::{mitigate, term_expectation, ConfusionMatrix};
use vqebench::noise::{estimate_duration, CalibrationData, ReadoutError};
use vqebench::observable::{Observable, PauliTerm};
use vqebench::optimizers::Sinusoid;
use vqebench::simulator::{run_statevector, sample, Counts, KrausChannel};
use vqebench::transpiler::{transpile, TranspileTarget};

fn target(name: &str) -> TranspileTarget {
    TranspileTarget::load(repo(&format!("targets/{name}.tgt"))).unwrap()
}

fn counts(n: usize) -> impl Strategy<Value = Counts> {
    proptest::collection::btree_map(0..(1usize << n), 1u64..500, 1..8)
        .prop_map(move |m| Counts::new(n, m).unwrap())
}

fn pauli_string(n: usize) -> impl Strategy<Value = String> {
    proptest::collection::vec(prop_oneof![Just('I'), Just('X'), Just('Y'), Just('Z')], n)
        .prop_map(|v| v.into_iter().collect())
}

fn readout() -> impl Strategy<Value = ReadoutError> {
    (0.0..0.2, 0.0..0.2).prop_map(|(p01, p10)| ReadoutError { p01, p10 })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: CASES, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn circuits_are_unitary(c in circuit()) {
        check_unitarity(&c)?;
    }

    #[test]
    fn noisy_density_stays_physical(c in line_circuit()) {
        check_trace(&c, manila_noise())?;
    }

    #[test]
    fn exact_energy_respects_variational_bound(theta in params()) {
        check_variational(&theta)?;
    }

    #[test]
    fn single_parameter_cost_is_a_sinusoid(theta in params(), j in 0usize..4, delta in angle()) {
        check_sinusoid(&theta, j, delta)?;
    }

    #[test]
    fn sinusoid_update_never_raises_exact_cost(theta in params(), j in 0usize..4) {
        let at = |shift: f64| {
            let mut x = theta.clone();
            x[j] += shift;
            exact_cost(&x)
        };
        let before = at(0.0);
        let s = Sinusoid::fit(before, at(PI / 2.0), at(-PI / 2.0));
        let after = at(s.argmin());
        prop_assert!(after <= before + 1e-9);
        prop_assert!((after - s.min()).abs() < 1e-9);
    }

    #[test]
    fn kraus_channels_preserve_trace(p in 0.0..=1.0f64, gamma in 0.0..=1.0f64, lambda in 0.0..=1.0f64, k in 1usize..=2) {
        let dep = KrausChannel::depolarizing(k, p).unwrap();
        prop_assert!(dep.trace_preservation_error() < 1e-10);
        let ad = KrausChannel::amplitude_damping(gamma).unwrap();
        let pd = KrausChannel::phase_damping(lambda).unwrap();
        let thermal = KrausChannel::compose(&ad, &pd).unwrap();
        prop_assert!(thermal.trace_preservation_error() < 1e-10);
        let pair = KrausChannel::tensor(&thermal, &ad).unwrap();
        prop_assert!(pair.trace_preservation_error() < 1e-10);
    }

    #[test]
    fn transpiled_ansatz_is_equivalent(theta in params()) {
        let bound = build_ry_cnot_ansatz(4).unwrap().bind(&theta).unwrap();
        for name in ["marmot", "manila"] {
            let t = target(name);
            let (out, rep) = transpile(&bound, &t).unwrap();
            prop_assert!(out.gates().iter().all(|g| t.basis.contains(&g.kind)));
            prop_assert!(out.gates().iter().filter(|g| g.qubits.len() == 2).all(|g| t.is_coupled(g.qubits[0], g.qubits[1])));
            let d = check_equivalent(&bound, &out, &rep.final_layout);
            prop_assert!(d < 1e-8, "{name}: distance {d}");
        }
    }

    #[test]
    fn transpiled_random_circuits_are_equivalent(c in circuit()) {
        for name in ["marmot", "manila"] {
            let (out, rep) = transpile(&c, &target(name)).unwrap();
            let d = check_equivalent(&c, &out, &rep.final_layout);
            prop_assert!(d < 1e-8, "{name}: distance {d}");
        }
    }

    #[test]
    fn transpiling_is_stable(theta in params()) {
        let bound = build_ry_cnot_ansatz(4).unwrap().bind(&theta).unwrap();
        let t = target("marmot");
        let (once, _) = transpile(&bound, &t).unwrap();
        let (twice, rep) = transpile(&once, &t).unwrap();
        prop_assert!(rep.two_qubit_gates <= 4);
        prop_assert!(twice.len() <= once.len());
    }

    #[test]
    fn term_expectation_is_bounded(c in counts(4), s in pauli_string(4)) {
        let term = PauliTerm::new(&s, 1.0).unwrap();
        let e = term_expectation(&c, &term);
        prop_assert!((-1.0..=1.0).contains(&e));
    }

    #[test]
    fn mitigated_distribution_is_normalised(c in counts(3), ro in proptest::collection::vec(readout(), 3)) {
        let confusion = ConfusionMatrix::from_readout(&ro);
        for col in 0..8 {
            let s: f64 = confusion.matrix().column(col).sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
        }
        let p = mitigate(&c, &confusion).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(p.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn observable_text_round_trips(terms in proptest::collection::vec((pauli_string(3), -2.0..2.0f64), 1..6)) {
        let obs = Observable::new(terms.iter().map(|(s, c)| PauliTerm::new(s, *c).unwrap()).collect()).unwrap();
        let back = Observable::parse(&obs.to_text()).unwrap();
        prop_assert_eq!(obs.terms().len(), back.terms().len());
        for (a, b) in obs.terms().iter().zip(back.terms()) {
            prop_assert_eq!(a.label(), b.label());
            prop_assert!((a.coefficient() - b.coefficient()).abs() <= 1e-12 * a.coefficient().abs().max(1.0));
        }
    }

    #[test]
    fn sampling_is_deterministic(theta in params(), seed in any::<u64>()) {
        let state = run_statevector(&build_ry_cnot_ansatz(4).unwrap().bind(&theta).unwrap()).unwrap();
        let a = sample(&state, 200, seed).unwrap();
        prop_assert_eq!(a.shots(), 200);
        prop_assert_eq!(a, sample(&state, 200, seed).unwrap());
    }

    #[test]
    fn appending_gates_never_shortens_duration(c in line_circuit(), q in 0usize..4) {
        let cal = CalibrationData::load(repo("data/manila.cal")).unwrap();
        let before = estimate_duration(&c, &cal).unwrap();
        let mut longer = c.clone();
        longer.push(Gate::cx(q, q + 1)).unwrap();
        let after = estimate_duration(&longer, &cal).unwrap();
        prop_assert!(after >= before);
        prop_assert!(after >= cal.gate_duration(&Gate::cx(q, q + 1)).unwrap());
        prop_assert!(estimate_duration(&Circuit::new(5), &cal).unwrap() == 0.0);
    }
}

#[test]
fn measured_counts_cover_every_basis_state() {
    let n = 3;
    let mut m = BTreeMap::new();
    m.insert(0b101, 7);
    let c = Counts::new(n, m).unwrap();
    assert_eq!(c.bitstring(0b101), "101");
    assert_eq!(c.frequencies().len(), 8);
}
