//! VQE runs: configuration, per-seed optimisation on a (noisy, transpiled)
//! shot simulator, aggregation, distance scans and run logs.
//!
//! Experiment configs are TOML; relative paths resolve against the config
//! file's directory:
//!
//! ```toml
//! name = "h2-manila"
//! observable = "../data/h2_0.735.obs"
//! target = "../targets/manila.tgt"      # optional: logical circuit if absent
//! calibration = "../data/manila.cal"    # optional: noiseless if absent
//! shots = 200                           # per measurement group
//! iterations = 15
//! seeds = 9
//! mitigate = false
//!
//! [optimizer]
//! name = "nft"
//! reset_interval = 32
//! ```

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::circuit::{build_ry_cnot_ansatz, Circuit};
use crate::error::{read_file, Error, Result};
use crate::measurement::{
    apply_readout, basis_rotation, energy_from_distributions, group_terms, mitigate,
    ConfusionMatrix, MeasurementGroup,
};
use crate::noise::{build_noise_model, estimate_duration, CalibrationData, NoiseModel};
use crate::observable::Observable;
use crate::optimizers::{CostEvaluator, OptimizerConfig};
use crate::simulator::{run_density, run_statevector, sample_probabilities, Counts, QuantumState};
use crate::transpiler::{transpile, TranspileReport, TranspileTarget};

/// How each energy is obtained.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// Grouped basis measurements with finite shots (noise and transpilation apply).
    #[default]
    Shots,
    /// Noiseless `⟨ψ|H|ψ⟩` on the logical circuit.
    Exact,
}

fn default_shots() -> u64 {
    200
}
fn default_iterations() -> usize {
    15
}
fn default_seeds() -> usize {
    9
}
fn default_init_range() -> [f64; 2] {
    [-PI, PI]
}
fn default_scale() -> f64 {
    1.0
}
fn default_master_seed() -> u64 {
    20230
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub observable: PathBuf,
    #[serde(default)]
    pub target: Option<PathBuf>,
    #[serde(default)]
    pub calibration: Option<PathBuf>,
    #[serde(default = "default_shots")]
    pub shots: u64,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default = "default_seeds")]
    pub seeds: usize,
    /// Initial parameters are uniform in `[lo, hi]`.
    #[serde(default = "default_init_range")]
    pub init_range: [f64; 2],
    #[serde(default)]
    pub mitigate: bool,
    #[serde(default)]
    pub thermal: bool,
    /// Keep only the readout part of the calibration.
    #[serde(default)]
    pub readout_only: bool,
    /// Multiplies every two-qubit error rate.
    #[serde(default = "default_scale")]
    pub two_qubit_error_scale: f64,
    #[serde(default)]
    pub estimator: Estimator,
    #[serde(default = "default_master_seed")]
    pub master_seed: u64,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
}

impl ExperimentConfig {
    /// Defaults for everything except the observable.
    pub fn new(name: impl Into<String>, observable: impl Into<PathBuf>) -> Self {
        ExperimentConfig {
            name: name.into(),
            observable: observable.into(),
            target: None,
            calibration: None,
            shots: default_shots(),
            iterations: default_iterations(),
            seeds: default_seeds(),
            init_range: default_init_range(),
            mitigate: false,
            thermal: false,
            readout_only: false,
            two_qubit_error_scale: 1.0,
            estimator: Estimator::Shots,
            master_seed: default_master_seed(),
            optimizer: OptimizerConfig::default(),
        }
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::config(e.message().to_string()))?;
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base_dir.join(&*p);
            }
        };
        resolve(&mut cfg.observable);
        cfg.target.as_mut().map(resolve);
        cfg.calibration.as_mut().map(resolve);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let base = path.parent().unwrap_or(Path::new("."));
        ExperimentConfig::parse(&read_file(path)?, base)
            .map_err(|e| e.context(format!("reading {}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 || self.seeds == 0 || self.shots == 0 {
            return Err(Error::config(
                "iterations, seeds and shots must all be at least 1",
            ));
        }
        let [lo, hi] = self.init_range;
        if lo.is_nan() || hi.is_nan() || lo >= hi {
            return Err(Error::config(format!("init_range [{lo}, {hi}] is empty")));
        }
        if self.two_qubit_error_scale.is_nan() || self.two_qubit_error_scale < 0.0 {
            return Err(Error::config("two_qubit_error_scale must be non-negative"));
        }
        if self.calibration.is_some() && self.target.is_none() {
            return Err(Error::config(
                "a calibration needs a target to transpile for",
            ));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serialises");
        Sha256::digest(json.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// Counts of one measurement group in one evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupCounts {
    pub basis: String,
    pub counts: Counts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationLog {
    pub index: usize,
    pub energy: f64,
    pub quantum_time_s: f64,
    pub groups: Vec<GroupCounts>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: usize,
    pub optimizer: String,
    /// What one iteration means for this optimiser.
    pub iteration_unit: String,
    pub shots_per_group: u64,
    pub groups: usize,
    pub e_fci: f64,
    /// Per-iteration energies (Ha).
    pub energies: Vec<f64>,
    pub final_energy: f64,
    pub min_energy: f64,
    pub params: Vec<Vec<f64>>,
    /// Cumulative evaluations at the end of each iteration.
    pub evaluations: Vec<usize>,
    /// Cumulative gate-schedule time (s) at the end of each iteration.
    pub quantum_time_s: Vec<f64>,
    pub total_evaluations: usize,
    pub total_quantum_time_s: f64,
    pub config_hash: String,
    pub config: ExperimentConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub evaluation_log: Vec<EvaluationLog>,
}

impl RunRecord {
    pub fn final_error(&self) -> f64 {
        (self.final_energy - self.e_fci).abs()
    }

    /// Mean `|E − E_FCI|` over the last `k` iterations.
    pub fn tail_error(&self, k: usize) -> f64 {
        let tail = &self.energies[self.energies.len().saturating_sub(k)..];
        tail.iter().map(|e| (e - self.e_fci).abs()).sum::<f64>() / tail.len().max(1) as f64
    }

    /// First iteration (1-based) with `|E − E_FCI| < tol`.
    pub fn iterations_to(&self, tol: f64) -> Option<usize> {
        self.energies
            .iter()
            .position(|e| (e - self.e_fci).abs() < tol)
            .map(|i| i + 1)
    }
}

fn iteration_unit(opt: &OptimizerConfig) -> &'static str {
    match opt {
        OptimizerConfig::Nft { .. } => "one sweep over all parameters",
        OptimizerConfig::Spsa { .. } => "one perturbation update",
        OptimizerConfig::NelderMead { .. } => "one simplex step",
    }
}

const X0_STREAM: u64 = (1 << 40) - 1;
const SPSA_STREAM: u64 = (1 << 40) - 2;

fn stream_rng(master: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(stream);
    rng
}

/// Loaded, validated resources for one experiment.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub observable: Observable,
    pub target: Option<TranspileTarget>,
    pub calibration: Option<CalibrationData>,
    noise: Option<NoiseModel>,
    ansatz: Circuit,
    groups: Vec<MeasurementGroup>,
    e_fci: f64,
}

impl Experiment {
    pub fn load(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let observable = Observable::load(&config.observable)?;
        let target = config
            .target
            .as_ref()
            .map(TranspileTarget::load)
            .transpose()?;
        let calibration = config
            .calibration
            .as_ref()
            .map(CalibrationData::load)
            .transpose()?;
        Experiment::new(config.clone(), observable, target, calibration)
    }

    pub fn new(
        config: ExperimentConfig,
        observable: Observable,
        target: Option<TranspileTarget>,
        calibration: Option<CalibrationData>,
    ) -> Result<Self> {
        config.validate()?;
        let calibration = calibration.map(|cal| {
            let cal = cal.scale_two_qubit_errors(config.two_qubit_error_scale);
            if config.readout_only {
                cal.readout_only()
            } else {
                cal
            }
        });
        let noise = calibration
            .as_ref()
            .map(|cal| build_noise_model(cal, config.thermal))
            .transpose()?;
        let n = observable.n_qubits();
        if let Some(t) = &target {
            if n > t.n_qubits {
                return Err(Error::config(format!(
                    "observable needs {n} qubits, target {} has {}",
                    t.name, t.n_qubits
                )));
            }
        }
        let ansatz = build_ry_cnot_ansatz(n)?;
        let groups = group_terms(&observable);
        let e_fci = observable.exact_ground_energy()?;
        Ok(Experiment {
            config,
            observable,
            target,
            calibration,
            noise,
            ansatz,
            groups,
            e_fci,
        })
    }

    pub fn e_fci(&self) -> f64 {
        self.e_fci
    }

    pub fn groups(&self) -> &[MeasurementGroup] {
        &self.groups
    }

    pub fn n_parameters(&self) -> usize {
        self.ansatz.n_parameters()
    }

    /// Same experiment on another observable of the same width.
    pub fn with_observable(&self, observable: Observable) -> Result<Self> {
        Experiment::new(
            self.config.clone(),
            observable,
            self.target.clone(),
            self.calibration.clone(),
        )
    }

    /// Initial parameters for seed `seed_id`.
    pub fn initial_point(&self, seed_id: usize) -> Vec<f64> {
        let [lo, hi] = self.config.init_range;
        let mut rng = stream_rng(
            self.config.master_seed,
            ((seed_id as u64) << 40) | X0_STREAM,
        );
        (0..self.n_parameters())
            .map(|_| rng.random_range(lo..hi))
            .collect()
    }

    /// Transpiled report for the bare ansatz at generic angles.
    pub fn ansatz_report(&self) -> Result<Option<TranspileReport>> {
        let Some(t) = &self.target else {
            return Ok(None);
        };
        let generic: Vec<f64> = (0..self.n_parameters())
            .map(|k| 0.37 + 0.61 * k as f64)
            .collect();
        Ok(Some(transpile(&self.ansatz.bind(&generic)?, t)?.1))
    }

    /// Noiseless exact energy at `x`.
    pub fn exact_energy(&self, x: &[f64]) -> Result<f64> {
        run_statevector(&self.ansatz.bind(x)?)?.expectation(&self.observable)
    }

    /// One sampled energy. Returns the energy, the gate-schedule time spent
    /// (shots × circuit duration, summed over groups) and the raw counts.
    pub fn sampled_energy(
        &self,
        x: &[f64],
        seed_id: usize,
        eval_index: usize,
    ) -> Result<EvaluationLog> {
        let n = self.observable.n_qubits();
        let bound = self.ansatz.bind(x)?;
        let mut dists = Vec::with_capacity(self.groups.len());
        let mut logs = Vec::with_capacity(self.groups.len());
        let mut time = 0.0;
        for (gi, group) in self.groups.iter().enumerate() {
            let mut circuit = bound.clone();
            circuit.extend(&basis_rotation(group, n)?)?;
            let (physical, layout) = match &self.target {
                Some(t) => {
                    let (c, report) = transpile(&circuit, t)?;
                    (c, report.final_layout)
                }
                None => (circuit, (0..n).collect()),
            };
            let body = physical.without_measurements();
            let width = body.n_qubits();
            let mut probs = match &self.noise {
                Some(noise) => run_density(&body, noise)?.probabilities(),
                None => run_statevector(&body)?.probabilities(),
            };
            if let Some(noise) = &self.noise {
                probs = apply_readout(&probs, &noise.readout()[..width]);
            }
            probs.iter_mut().for_each(|p| *p = p.max(0.0));
            let stream = ((seed_id as u64) << 40) | ((eval_index as u64) << 8) | gi as u64;
            let mut rng = stream_rng(self.config.master_seed, stream);
            let physical_counts = sample_probabilities(&probs, self.config.shots, &mut rng)?;
            let counts = physical_counts.remap(&layout[..n]);
            let dist = match (&self.noise, self.config.mitigate) {
                (Some(noise), true) => {
                    let ro: Vec<_> = layout[..n].iter().map(|&p| noise.readout()[p]).collect();
                    mitigate(&counts, &ConfusionMatrix::from_readout(&ro))?
                }
                _ => counts.frequencies(),
            };
            if let Some(cal) = &self.calibration {
                time += self.config.shots as f64 * estimate_duration(&physical, cal)?;
            }
            dists.push(dist);
            logs.push(GroupCounts {
                basis: group.label(),
                counts,
            });
        }
        Ok(EvaluationLog {
            index: eval_index,
            energy: energy_from_distributions(&self.groups, &dists, &self.observable)?,
            quantum_time_s: time,
            groups: logs,
        })
    }

    /// Optimises from seed `seed_id`'s initial point.
    pub fn run_seed(&self, seed_id: usize) -> Result<RunRecord> {
        let x0 = self.initial_point(seed_id);
        let spsa_seed = stream_rng(
            self.config.master_seed,
            ((seed_id as u64) << 40) | SPSA_STREAM,
        )
        .random();
        let mut log: Vec<EvaluationLog> = Vec::new();
        let trace = {
            let mut eval = CostEvaluator::new(|x: &[f64]| match self.config.estimator {
                Estimator::Exact => self.exact_energy(x),
                Estimator::Shots => {
                    let entry = self.sampled_energy(x, seed_id, log.len())?;
                    let e = entry.energy;
                    log.push(entry);
                    Ok(e)
                }
            });
            let trace =
                self.config
                    .optimizer
                    .run(&mut eval, &x0, self.config.iterations, spsa_seed);
            trace.map_err(|e| e.context(format!("{}: seed {seed_id}", self.config.name)))?
        };
        let mut cumulative = Vec::with_capacity(log.len());
        let mut acc = 0.0;
        for entry in &log {
            acc += entry.quantum_time_s;
            cumulative.push(acc);
        }
        let time_at = |evals: usize| {
            if evals == 0 {
                0.0
            } else {
                cumulative.get(evals - 1).copied().unwrap_or(acc)
            }
        };
        let energies = trace.costs();
        let final_energy = *energies
            .last()
            .ok_or_else(|| Error::contract("optimiser produced no iterations"))?;
        Ok(RunRecord {
            seed: seed_id,
            optimizer: self.config.optimizer.label().into(),
            iteration_unit: iteration_unit(&self.config.optimizer).into(),
            shots_per_group: self.config.shots,
            groups: self.groups.len(),
            e_fci: self.e_fci,
            min_energy: energies.iter().copied().fold(f64::INFINITY, f64::min),
            final_energy,
            energies,
            params: trace.entries.iter().map(|e| e.params.clone()).collect(),
            evaluations: trace.entries.iter().map(|e| e.evaluations).collect(),
            quantum_time_s: trace
                .entries
                .iter()
                .map(|e| time_at(e.evaluations))
                .collect(),
            total_evaluations: trace.last().map_or(0, |e| e.evaluations),
            total_quantum_time_s: acc,
            config_hash: self.config.hash(),
            config: self.config.clone(),
            evaluation_log: log,
        })
    }

    /// All seeds, in parallel, ordered by seed id.
    pub fn run(&self) -> Result<Vec<RunRecord>> {
        (0..self.config.seeds)
            .into_par_iter()
            .map(|s| self.run_seed(s))
            .collect()
    }
}

/// Loads every referenced file and runs all seeds.
pub fn run_vqe(config: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    Experiment::load(config)?.run()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Stat {
        let n = values.len().max(1) as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Stat {
            mean,
            std: var.sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub runs: usize,
    pub excluded_seeds: Vec<usize>,
    pub e_fci: f64,
    pub final_energy: Stat,
    pub min_energy: Stat,
    pub final_error: Stat,
    /// Per-seed mean `|E − E_FCI|` over the last four iterations; σ over seeds.
    pub last4_error: Stat,
    /// Mean over seeds of the σ of each seed's last four energies.
    pub last4_within_seed_std: f64,
    pub quantum_time_s: Stat,
    pub evaluations: Stat,
}

/// Statistics over records, optionally dropping the `drop_worst` seeds with
/// the largest final error.
pub fn aggregate(records: &[RunRecord], drop_worst: usize) -> Result<Summary> {
    if records.is_empty() {
        return Err(Error::contract("no records to aggregate"));
    }
    if drop_worst >= records.len() {
        return Err(Error::contract(format!(
            "cannot drop {drop_worst} of {} records",
            records.len()
        )));
    }
    let mut order: Vec<&RunRecord> = records.iter().collect();
    order.sort_by(|a, b| {
        b.final_error()
            .total_cmp(&a.final_error())
            .then(a.seed.cmp(&b.seed))
    });
    let mut excluded: Vec<usize> = order[..drop_worst].iter().map(|r| r.seed).collect();
    excluded.sort_unstable();
    let kept: Vec<&RunRecord> = records
        .iter()
        .filter(|r| !excluded.contains(&r.seed))
        .collect();
    let field = |f: &dyn Fn(&RunRecord) -> f64| -> Vec<f64> { kept.iter().map(|r| f(r)).collect() };
    let within: Vec<f64> = kept
        .iter()
        .map(|r| Stat::of(&r.energies[r.energies.len().saturating_sub(4)..]).std)
        .collect();
    Ok(Summary {
        runs: kept.len(),
        excluded_seeds: excluded,
        e_fci: records[0].e_fci,
        final_energy: Stat::of(&field(&|r| r.final_energy)),
        min_energy: Stat::of(&field(&|r| r.min_energy)),
        final_error: Stat::of(&field(&|r| r.final_error())),
        last4_error: Stat::of(&field(&|r| r.tail_error(4))),
        last4_within_seed_std: within.iter().sum::<f64>() / within.len() as f64,
        quantum_time_s: Stat::of(&field(&|r| r.total_quantum_time_s)),
        evaluations: Stat::of(&field(&|r| r.total_evaluations as f64)),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub distance: f64,
    pub vqe_min: f64,
    pub e_fci: f64,
}

/// One row of a scan table: a bond length and its observable file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanEntry {
    pub distance: f64,
    pub observable: PathBuf,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScanFile {
    point: Vec<ScanEntry>,
}

/// Reads a TOML scan table of `[[point]]` entries; paths resolve against
/// the table's directory.
pub fn load_scan_table(path: impl AsRef<Path>) -> Result<Vec<(f64, Observable)>> {
    let path = path.as_ref();
    let base = path.parent().unwrap_or(Path::new("."));
    let file: ScanFile = toml::from_str(&read_file(path)?)
        .map_err(|e| Error::config(format!("{}: {}", path.display(), e.message())))?;
    file.point
        .into_iter()
        .map(|p| Ok((p.distance, Observable::load(base.join(&p.observable))?)))
        .collect()
}

/// For each distance, the lowest VQE energy over all iterations and seeds
/// next to the exact ground energy.
pub fn distance_scan(
    table: &[(f64, Observable)],
    experiment: &Experiment,
) -> Result<Vec<ScanPoint>> {
    if table.is_empty() {
        return Err(Error::contract("scan table is empty"));
    }
    table
        .par_iter()
        .map(|(d, obs)| {
            let exp = experiment.with_observable(obs.clone())?;
            let records = exp
                .run()
                .map_err(|e| e.context(format!("distance {d:.3} Å")))?;
            let vqe_min = records
                .iter()
                .map(|r| r.min_energy)
                .fold(f64::INFINITY, f64::min);
            Ok(ScanPoint {
                distance: *d,
                vqe_min,
                e_fci: exp.e_fci(),
            })
        })
        .collect()
}

/// Scan output as written to `<dir>/scan`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub config_hash: String,
    pub points: Vec<ScanPoint>,
}

pub fn write_scan(dir: &Path, result: &ScanResult) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let path = dir.join("scan");
    let text = serde_json::to_string_pretty(result).expect("scan serialises");
    fs::write(&path, text + "\n").map_err(io_err(&path))
}

/// Reads `<dir>/scan`, or `None` when the directory holds no scan.
pub fn read_scan(dir: &Path) -> Result<Option<ScanResult>> {
    let path = dir.join("scan");
    if !path.exists() {
        return Ok(None);
    }
    serde_json::from_str(&read_file(&path)?)
        .map(Some)
        .map_err(|e| Error::Parse {
            line: e.line(),
            message: format!("{}: {e}", path.display()),
        })
}

/// The transpile report stored in `<dir>/summary`, if the run had a target.
pub fn read_summary_report(dir: &Path) -> Result<Option<TranspileReport>> {
    let path = dir.join("summary");
    if !path.exists() {
        return Ok(None);
    }
    let mut body: BTreeMap<String, serde_json::Value> = serde_json::from_str(&read_file(&path)?)
        .map_err(|e| Error::Parse {
            line: e.line(),
            message: format!("{}: {e}", path.display()),
        })?;
    body.remove("transpile")
        .map(|v| {
            serde_json::from_value(v)
                .map_err(|e| Error::validation(format!("{}: {e}", path.display())))
        })
        .transpose()
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum LogLine {
    Header {
        config_hash: String,
        config: ExperimentConfig,
    },
    Evaluation(EvaluationLog),
    Iteration {
        iteration: usize,
        energy_ha: f64,
        evaluations: usize,
        quantum_time_s: f64,
        params: Vec<f64>,
    },
    Final(Box<RunRecord>),
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `seed<k>.record` files and a `summary` into `dir`.
pub fn write_run_dir(
    dir: &Path,
    records: &[RunRecord],
    summary: &Summary,
    report: Option<&TranspileReport>,
) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    for r in records {
        let path = dir.join(format!("seed{}.record", r.seed));
        let mut out = Vec::new();
        let mut line = |l: &LogLine| {
            out.extend(serde_json::to_vec(l).expect("log line serialises"));
            out.push(b'\n');
        };
        line(&LogLine::Header {
            config_hash: r.config_hash.clone(),
            config: r.config.clone(),
        });
        for e in &r.evaluation_log {
            line(&LogLine::Evaluation(e.clone()));
        }
        for i in 0..r.energies.len() {
            line(&LogLine::Iteration {
                iteration: i + 1,
                energy_ha: r.energies[i],
                evaluations: r.evaluations[i],
                quantum_time_s: r.quantum_time_s[i],
                params: r.params[i].clone(),
            });
        }
        let mut bare = r.clone();
        bare.evaluation_log.clear();
        line(&LogLine::Final(Box::new(bare)));
        fs::write(&path, out).map_err(io_err(&path))?;
    }
    let path = dir.join("summary");
    let mut body = BTreeMap::new();
    body.insert(
        "summary",
        serde_json::to_value(summary).expect("summary serialises"),
    );
    if let Some(rep) = report {
        body.insert(
            "transpile",
            serde_json::to_value(rep).expect("report serialises"),
        );
    }
    let mut f = fs::File::create(&path).map_err(io_err(&path))?;
    serde_json::to_writer_pretty(&mut f, &body).expect("summary serialises");
    writeln!(f).map_err(io_err(&path))?;
    Ok(())
}

/// Reads back every `seed<k>.record` in `dir`, ordered by seed.
pub fn read_run_dir(dir: &Path) -> Result<Vec<RunRecord>> {
    let mut records = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let path = entry.map_err(io_err(dir))?.path();
        if path.extension().is_none_or(|e| e != "record") {
            continue;
        }
        let text = read_file(&path)?;
        let mut found = None;
        for (i, line) in text.lines().enumerate() {
            let parsed: LogLine = serde_json::from_str(line).map_err(|e| Error::Parse {
                line: i + 1,
                message: format!("{}: {e}", path.display()),
            })?;
            if let LogLine::Final(r) = parsed {
                found = Some(*r);
            }
        }
        records.push(
            found.ok_or_else(|| {
                Error::validation(format!("{} has no final record", path.display()))
            })?,
        );
    }
    if records.is_empty() {
        return Err(Error::validation(format!(
            "no records in {}",
            dir.display()
        )));
    }
    records.sort_by_key(|r| r.seed);
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data(p: &str) -> PathBuf {
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(p)
    }

    fn synthetic(seed: usize, energies: Vec<f64>) -> RunRecord {
        let n = energies.len();
        RunRecord {
            seed,
            optimizer: "nft".into(),
            iteration_unit: String::new(),
            shots_per_group: 200,
            groups: 5,
            e_fci: -1.0,
            final_energy: *energies.last().unwrap(),
            min_energy: energies.iter().copied().fold(f64::INFINITY, f64::min),
            energies,
            params: vec![vec![]; n],
            evaluations: (1..=n).collect(),
            quantum_time_s: vec![0.0; n],
            total_evaluations: n,
            total_quantum_time_s: 1.0,
            config_hash: String::new(),
            config: ExperimentConfig::new("t", "x.obs"),
            evaluation_log: vec![],
        }
    }

    #[test]
    fn aggregate_basics() {
        let one = aggregate(&[synthetic(0, vec![-0.9, -0.95])], 0).unwrap();
        assert_eq!(one.final_energy.std, 0.0);
        let flat: Vec<_> = (0..3).map(|s| synthetic(s, vec![-0.5; 5])).collect();
        assert_eq!(aggregate(&flat, 0).unwrap().final_energy.mean, -0.5);
        assert!(aggregate(&[], 0).is_err());

        let nine: Vec<_> = (0..9)
            .map(|s| synthetic(s, vec![-1.0 + 0.01 * s as f64]))
            .collect();
        let s = aggregate(&nine, 2).unwrap();
        assert_eq!(s.runs, 7);
        assert_eq!(s.excluded_seeds, vec![7, 8]);
    }

    #[test]
    fn config_defaults_and_validation() {
        let cfg =
            ExperimentConfig::parse("name = \"a\"\nobservable = \"h.obs\"", Path::new("/tmp/x"))
                .unwrap();
        assert_eq!(cfg.shots, 200);
        assert_eq!(cfg.iterations, 15);
        assert_eq!(cfg.seeds, 9);
        assert_eq!(cfg.observable, PathBuf::from("/tmp/x/h.obs"));
        assert!(ExperimentConfig::parse(
            "name = \"a\"\nobservable = \"h\"\nshots = 0",
            Path::new(".")
        )
        .is_err());
        assert!(ExperimentConfig::parse(
            "name = \"a\"\nobservable = \"h\"\ncalibration = \"c\"",
            Path::new(".")
        )
        .is_err());
        assert!(ExperimentConfig::parse(
            "name = \"a\"\nobservable = \"h\"\nbogus = 1",
            Path::new(".")
        )
        .is_err());
    }

    #[test]
    fn runs_are_deterministic() {
        let mut cfg = ExperimentConfig::new("det", data("data/h2_0.735.obs"));
        cfg.target = Some(data("targets/manila.tgt"));
        cfg.calibration = Some(data("data/manila.cal"));
        cfg.iterations = 2;
        cfg.seeds = 2;
        let a = run_vqe(&cfg).unwrap();
        let b = run_vqe(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[0].energies.len(), 2);
        assert!(a[0].total_quantum_time_s > 0.0);
        let sum: f64 = a[0].evaluation_log.iter().map(|e| e.quantum_time_s).sum();
        assert!((sum - a[0].total_quantum_time_s).abs() < 1e-15);
    }

    #[test]
    fn run_log_round_trip() {
        let mut cfg = ExperimentConfig::new("log", data("data/h2_0.735.obs"));
        cfg.iterations = 1;
        cfg.seeds = 2;
        let records = run_vqe(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_run_dir(dir.path(), &records, &aggregate(&records, 0).unwrap(), None).unwrap();
        let back = read_run_dir(dir.path()).unwrap();
        assert_eq!(back.len(), 2);
        let mut stripped = records[1].clone();
        stripped.evaluation_log.clear();
        assert_eq!(back[1], stripped);
    }

    #[test]
    fn empty_scan_is_rejected() {
        let cfg = ExperimentConfig::new("scan", data("data/h2_0.735.obs"));
        let exp = Experiment::load(&cfg).unwrap();
        assert!(matches!(distance_scan(&[], &exp), Err(Error::Contract(_))));
    }
}
