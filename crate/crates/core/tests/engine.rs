mod common;

use std::process::Command;

use common::*;
use vqebench::noise::build_noise_model;
use vqebench::observable::Observable;
use vqebench::report::{render_svg, PlotKind, ReportInput, ReportSpec};
use vqebench::simulator::{run_density, run_statevector, QuantumState};
use vqebench::transpiler::transpile;
use vqebench::vqe::{
    aggregate, distance_scan, load_scan_table, read_run_dir, run_vqe, write_run_dir, Estimator,
    Experiment, ExperimentConfig, RunRecord,
};

fn base(name: &str) -> ExperimentConfig {
    ExperimentConfig::new(name, repo("data/h2_0.735.obs"))
}

fn on(name: &str, profile: &str) -> ExperimentConfig {
    let mut c = base(name);
    c.target = Some(repo(&format!("targets/{profile}.tgt")));
    c.calibration = Some(repo(&format!("data/{profile}.cal")));
    c
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_vqebench"))
}

/// Standard error of one sampled energy, from that evaluation's own counts.
fn standard_error(exp: &Experiment, groups: &[vqebench::vqe::GroupCounts], shots: u64) -> f64 {
    let terms = exp.observable.terms();
    let mut var = 0.0;
    for (g, gc) in exp.groups().iter().zip(groups) {
        let (mut m1, mut m2) = (0.0, 0.0);
        for (b, n) in gc.counts.iter() {
            let v: f64 = g
                .terms
                .iter()
                .map(|&t| {
                    let parity = terms[t].support().filter(|&q| (b >> q) & 1 == 1).count();
                    terms[t].coefficient() * if parity % 2 == 0 { 1.0 } else { -1.0 }
                })
                .sum();
            let w = n as f64 / shots as f64;
            m1 += w * v;
            m2 += w * v * v;
        }
        var += (m2 - m1 * m1) / shots as f64;
    }
    var.sqrt()
}

#[test]
fn measured_energies_respect_the_shot_noise_floor() {
    let cfg = base("floor");
    let exp = Experiment::load(&cfg).unwrap();
    let records = exp.run().unwrap();
    let (mut below, mut total) = (0, 0);
    for r in &records {
        for e in &r.evaluation_log {
            let sigma = standard_error(&exp, &e.groups, cfg.shots);
            total += 1;
            if e.energy < r.e_fci - 3.0 * sigma {
                below += 1;
            }
        }
    }
    assert!(total > 1000);
    assert!(
        below * 100 <= total,
        "{below} of {total} evaluations below E_FCI − 3σ"
    );
}

#[test]
fn exact_path_never_dips_below_ground_energy() {
    let mut cfg = base("exact");
    cfg.estimator = Estimator::Exact;
    for r in run_vqe(&cfg).unwrap() {
        assert!(r.energies.iter().all(|&e| e >= r.e_fci - 1e-9));
        assert_eq!(r.energies.len(), cfg.iterations);
    }
}

#[test]
fn quantum_time_is_additive() {
    let mut cfg = on("time", "manila");
    cfg.seeds = 2;
    cfg.iterations = 3;
    for r in run_vqe(&cfg).unwrap() {
        let sum: f64 = r.evaluation_log.iter().map(|e| e.quantum_time_s).sum();
        assert!((sum - r.total_quantum_time_s).abs() <= 1e-12 * sum);
        let per = r.evaluation_log[0].quantum_time_s;
        assert!(per > 0.0);
        let expected = per * r.total_evaluations as f64;
        assert!((r.total_quantum_time_s - expected).abs() <= 1e-9 * expected);
        assert!(r.quantum_time_s.windows(2).all(|w| w[1] >= w[0]));
    }
}

#[test]
fn ideal_run_has_no_quantum_time() {
    let mut cfg = base("ideal");
    cfg.seeds = 1;
    cfg.iterations = 1;
    assert_eq!(run_vqe(&cfg).unwrap()[0].total_quantum_time_s, 0.0);
}

#[test]
fn two_qubit_error_scaling_never_lowers_the_error() {
    let mean = |scale: f64| {
        let mut cfg = on("scaled", "manila");
        cfg.two_qubit_error_scale = scale;
        let records = run_vqe(&cfg).unwrap();
        aggregate(&records, 0).unwrap().final_error.mean
    };
    let errors: Vec<f64> = [1.0, 2.0, 4.0].into_iter().map(mean).collect();
    assert!(errors.windows(2).all(|w| w[1] >= w[0]), "errors {errors:?}");
}

#[test]
fn noise_raises_the_energy_of_a_good_state() {
    let mut cfg = base("exact");
    cfg.estimator = Estimator::Exact;
    let best: RunRecord = run_vqe(&cfg)
        .unwrap()
        .into_iter()
        .min_by(|a, b| a.final_energy.total_cmp(&b.final_energy))
        .unwrap();
    let theta = best.params.last().unwrap();
    let h = h2();
    let bound = h.ansatz.bind(theta).unwrap();
    let ideal = run_statevector(&bound)
        .unwrap()
        .expectation(&h.observable)
        .unwrap();
    for profile in ["manila", "marmot"] {
        let target =
            vqebench::transpiler::TranspileTarget::load(repo(&format!("targets/{profile}.tgt")))
                .unwrap();
        let cal =
            vqebench::noise::CalibrationData::load(repo(&format!("data/{profile}.cal"))).unwrap();
        let (out, rep) = transpile(&bound, &target).unwrap();
        let noise = build_noise_model(&cal, true).unwrap();
        let width = out.n_qubits();
        let mut obs_text = String::new();
        for t in h.observable.terms() {
            let mut s = vec!['I'; width];
            for (l, p) in t.paulis().iter().enumerate() {
                s[rep.final_layout[l]] = p.as_char();
            }
            obs_text.push_str(&format!(
                "{} {}\n",
                s.iter().collect::<String>(),
                t.coefficient()
            ));
        }
        let physical = Observable::parse(&obs_text).unwrap();
        let noisy = run_density(&out, &noise)
            .unwrap()
            .expectation(&physical)
            .unwrap();
        assert!(noisy > ideal, "{profile}: noisy {noisy} ideal {ideal}");
    }
}

#[test]
fn exact_scan_reaches_the_ground_energy() {
    let table = load_scan_table(repo("data/h2_scan.toml")).unwrap();
    let mut cfg = base("scan");
    cfg.estimator = Estimator::Exact;
    let exp = Experiment::load(&cfg).unwrap();
    let points = distance_scan(&table, &exp).unwrap();
    assert_eq!(points.len(), 1);
    assert!((points[0].e_fci + 1.13619).abs() < 2e-3);
    assert!((points[0].vqe_min - points[0].e_fci).abs() < 0.01);
}

#[test]
fn run_directory_round_trip_feeds_reports() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = on("roundtrip", "marmot");
    cfg.seeds = 3;
    cfg.iterations = 2;
    let exp = Experiment::load(&cfg).unwrap();
    let records = exp.run().unwrap();
    let summary = aggregate(&records, 1).unwrap();
    assert_eq!(summary.runs, 2);
    write_run_dir(
        dir.path(),
        &records,
        &summary,
        exp.ansatz_report().unwrap().as_ref(),
    )
    .unwrap();
    let back = read_run_dir(dir.path()).unwrap();
    assert_eq!(back.len(), 3);
    for (a, b) in records.iter().zip(&back) {
        assert_eq!(a.energies, b.energies);
        assert_eq!(a.total_quantum_time_s, b.total_quantum_time_s);
        assert_eq!(a.config_hash, b.config_hash);
    }
    let input = ReportInput::load(dir.path()).unwrap();
    assert_eq!(input.transpile.as_ref().unwrap().two_qubit_gates, 4);
    let spec = |kind| ReportSpec {
        kind,
        inputs: vec![],
        output: "x.svg".into(),
        exclude_outliers: 0,
    };
    let bars = render_svg(&spec(PlotKind::GateCountBars), std::slice::from_ref(&input)).unwrap();
    assert!(bars.contains(&records[0].config_hash));
    render_svg(&spec(PlotKind::Convergence), &[input]).unwrap();
}

#[test]
fn cli_ham_prints_ground_energy() {
    let out = bin()
        .arg("ham")
        .arg(repo("data/h2_0.735.obs"))
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("E_FCI: -1.137247 Ha"));
}

#[test]
fn cli_ham_missing_file_names_the_path() {
    let out = bin().args(["ham", "no/such/file.obs"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no/such/file.obs"));
}

#[test]
fn cli_usage_errors_exit_two() {
    assert_eq!(
        bin().arg("frobnicate").output().unwrap().status.code(),
        Some(2)
    );
    assert_eq!(
        bin()
            .args(["vqe", "--bogus"])
            .output()
            .unwrap()
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn cli_transpile_reports_two_qubit_gates() {
    let out = bin()
        .arg("transpile")
        .arg("--target")
        .arg(repo("targets/marmot.tgt"))
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("two-qubit gates: 4"));
    let out = bin()
        .arg("transpile")
        .arg("--target")
        .arg(repo("targets/manila.tgt"))
        .output()
        .unwrap();
    assert!(String::from_utf8_lossy(&out.stdout).contains("two-qubit gates: 8"));
}

#[test]
fn cli_vqe_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let runs = dir.path().join("run");
    let out = bin()
        .arg("vqe")
        .arg("--config")
        .arg(repo("configs/manila.toml"))
        .args([
            "--seeds",
            "2",
            "--iterations",
            "2",
            "--shots",
            "50",
            "--mitigate",
        ])
        .arg("--out")
        .arg(&runs)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let records = read_run_dir(&runs).unwrap();
    assert_eq!(records.len(), 2);
    assert!(records[0].config.mitigate);
    assert_eq!(records[0].shots_per_group, 50);
    let svg = dir.path().join("conv.svg");
    let csv = dir.path().join("conv.csv");
    let out = bin()
        .args(["report", "--kind", "convergence", "--exclude-outliers", "1"])
        .arg(&runs)
        .arg("--out")
        .arg(&svg)
        .arg("--csv")
        .arg(&csv)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(std::fs::read_to_string(&svg).unwrap().contains("<svg"));
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 5);
}
