//! Hardware calibration profiles, noise models built from them, and
//! gate-schedule duration estimates.
//!
//! Calibration files are TOML with the sections `single_qubit`, `two_qubit`,
//! `readout`, `coherence` and `durations`:
//!
//! ```toml
//! name = "example"
//! n_qubits = 2
//!
//! [single_qubit]
//! error = [2.0e-4, 3.0e-4]   # per qubit, or one number for all
//! virtual = ["rz"]           # frame changes: no error, no duration
//!
//! [two_qubit]
//! error = { "0_1" = 5.6e-3 } # per directed edge `a_b`, or one number
//!
//! [readout]                  # optional, defaults to 0
//! p01 = 0.02                 # P(read 1 | prepared 0)
//! p10 = 0.02                 # P(read 0 | prepared 1)
//!
//! [coherence]                # optional
//! t1 = 169e-6
//! t2 = 76e-6
//!
//! [durations]                # seconds, per gate kind
//! sx = 35.5e-9
//! cx = { "0_1" = 277.3e-9 }
//! ```
//!
//! Per-edge entries fall back to the reverse direction when one is missing.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate, GateKind};
use crate::error::{read_file, Error, Result};
use crate::simulator::KrausChannel;

/// One value for every qubit, or one per qubit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerQubit {
    Uniform(f64),
    Each(Vec<f64>),
}

impl PerQubit {
    fn resolve(&self, n_qubits: usize, what: &str) -> Result<Vec<f64>> {
        match self {
            PerQubit::Uniform(v) => Ok(vec![*v; n_qubits]),
            PerQubit::Each(vs) if vs.len() == n_qubits => Ok(vs.clone()),
            PerQubit::Each(vs) => Err(Error::validation(format!(
                "{what} lists {} values for {n_qubits} qubits",
                vs.len()
            ))),
        }
    }
}

/// One value for every pair, or one per directed edge keyed `"a_b"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerEdge {
    Uniform(f64),
    Each(BTreeMap<String, f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCalibration {
    #[serde(default)]
    name: Option<String>,
    n_qubits: usize,
    single_qubit: RawSingle,
    two_qubit: RawTwo,
    #[serde(default)]
    readout: Option<RawReadout>,
    #[serde(default)]
    coherence: Option<RawCoherence>,
    #[serde(default)]
    durations: BTreeMap<String, PerEdge>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSingle {
    error: PerQubit,
    #[serde(default, rename = "virtual")]
    virtual_kinds: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTwo {
    error: PerEdge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawReadout {
    #[serde(default = "zero_per_qubit")]
    p01: PerQubit,
    #[serde(default = "zero_per_qubit")]
    p10: PerQubit,
}

fn zero_per_qubit() -> PerQubit {
    PerQubit::Uniform(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCoherence {
    t1: PerQubit,
    t2: PerQubit,
}

/// Error rate or duration table over qubit pairs.
#[derive(Debug, Clone, PartialEq)]
pub enum EdgeTable {
    Uniform(f64),
    Directed(BTreeMap<(usize, usize), f64>),
}

impl EdgeTable {
    /// Value for `a → b`, falling back to `b → a`.
    pub fn get(&self, a: usize, b: usize) -> Option<f64> {
        match self {
            EdgeTable::Uniform(v) => Some(*v),
            EdgeTable::Directed(map) => map.get(&(a, b)).or_else(|| map.get(&(b, a))).copied(),
        }
    }

    fn map_values(&mut self, f: impl Fn(f64) -> f64) {
        match self {
            EdgeTable::Uniform(v) => *v = f(*v),
            EdgeTable::Directed(map) => map.values_mut().for_each(|v| *v = f(*v)),
        }
    }

    fn values(&self) -> Vec<f64> {
        match self {
            EdgeTable::Uniform(v) => vec![*v],
            EdgeTable::Directed(map) => map.values().copied().collect(),
        }
    }
}

/// Per-gate duration: a constant, or a per-edge table for two-qubit kinds.
#[derive(Debug, Clone, PartialEq)]
pub enum Duration {
    Fixed(f64),
    PerEdge(EdgeTable),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReadoutError {
    /// P(read 1 | prepared 0).
    pub p01: f64,
    /// P(read 0 | prepared 1).
    pub p10: f64,
}

impl ReadoutError {
    /// Column-stochastic 2×2 confusion matrix (column = prepared, row = observed).
    pub fn confusion(&self) -> [[f64; 2]; 2] {
        [[1.0 - self.p01, self.p10], [self.p01, 1.0 - self.p10]]
    }

    pub fn is_zero(&self) -> bool {
        self.p01 == 0.0 && self.p10 == 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationData {
    pub name: String,
    pub n_qubits: usize,
    pub single_qubit_error: Vec<f64>,
    pub virtual_kinds: Vec<GateKind>,
    pub two_qubit_error: EdgeTable,
    pub readout: Vec<ReadoutError>,
    /// `(T1, T2)` per qubit, in seconds.
    pub coherence: Option<Vec<(f64, f64)>>,
    pub durations: BTreeMap<GateKind, Duration>,
}

fn parse_edge_key(key: &str, n_qubits: usize) -> Result<(usize, usize)> {
    let bad = || Error::validation(format!("edge key `{key}` is not of the form `a_b`"));
    let (a, b) = key.split_once('_').ok_or_else(bad)?;
    let a: usize = a.trim().parse().map_err(|_| bad())?;
    let b: usize = b.trim().parse().map_err(|_| bad())?;
    if a >= n_qubits || b >= n_qubits {
        return Err(Error::validation(format!(
            "edge {key} names a qubit outside 0..{n_qubits}"
        )));
    }
    if a == b {
        return Err(Error::validation(format!("edge {key} is a self-loop")));
    }
    Ok((a, b))
}

fn edge_table(raw: &PerEdge, n_qubits: usize) -> Result<EdgeTable> {
    Ok(match raw {
        PerEdge::Uniform(v) => EdgeTable::Uniform(*v),
        PerEdge::Each(map) => EdgeTable::Directed(
            map.iter()
                .map(|(k, v)| Ok((parse_edge_key(k, n_qubits)?, *v)))
                .collect::<Result<_>>()?,
        ),
    })
}

fn check_probability(v: f64, what: &str) -> Result<()> {
    if !(0.0..=1.0).contains(&v) || v.is_nan() {
        return Err(Error::validation(format!("{what} = {v} is not in [0, 1]")));
    }
    Ok(())
}

impl CalibrationData {
    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawCalibration =
            toml::from_str(text).map_err(|e| Error::validation(e.message().to_string()))?;
        let n = raw.n_qubits;
        if n == 0 {
            return Err(Error::validation("n_qubits must be at least 1"));
        }
        let single_qubit_error = raw.single_qubit.error.resolve(n, "single_qubit.error")?;
        for (q, &e) in single_qubit_error.iter().enumerate() {
            check_probability(e, &format!("single-qubit error on qubit {q}"))?;
        }
        let virtual_kinds = raw
            .single_qubit
            .virtual_kinds
            .iter()
            .map(|k| {
                k.parse::<GateKind>()
                    .map_err(|e| Error::validation(e.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        let two_qubit_error = edge_table(&raw.two_qubit.error, n)?;
        for e in two_qubit_error.values() {
            check_probability(e, "two-qubit error")?;
        }
        let readout = match &raw.readout {
            None => vec![ReadoutError { p01: 0.0, p10: 0.0 }; n],
            Some(r) => {
                let p01 = r.p01.resolve(n, "readout.p01")?;
                let p10 = r.p10.resolve(n, "readout.p10")?;
                p01.into_iter()
                    .zip(p10)
                    .map(|(p01, p10)| {
                        check_probability(p01, "readout p01")?;
                        check_probability(p10, "readout p10")?;
                        Ok(ReadoutError { p01, p10 })
                    })
                    .collect::<Result<Vec<_>>>()?
            }
        };
        let coherence = match &raw.coherence {
            None => None,
            Some(c) => {
                let t1 = c.t1.resolve(n, "coherence.t1")?;
                let t2 = c.t2.resolve(n, "coherence.t2")?;
                let pairs: Vec<(f64, f64)> = t1.into_iter().zip(t2).collect();
                for (q, &(t1, t2)) in pairs.iter().enumerate() {
                    if !(t1 > 0.0 && t2 > 0.0) {
                        return Err(Error::validation(format!(
                            "coherence times on qubit {q} must be positive"
                        )));
                    }
                    if t2 > 2.0 * t1 {
                        log::warn!("qubit {q}: T2 = {t2} s exceeds 2·T1 = {} s", 2.0 * t1);
                    }
                }
                Some(pairs)
            }
        };
        let mut durations = BTreeMap::new();
        for (kind, entry) in &raw.durations {
            let kind: GateKind = kind
                .parse()
                .map_err(|e: Error| Error::validation(e.to_string()))?;
            let value = match entry {
                PerEdge::Uniform(v) => Duration::Fixed(*v),
                PerEdge::Each(_) if !kind.is_two_qubit() => {
                    return Err(Error::validation(format!(
                        "per-edge durations given for single-qubit kind {kind}"
                    )))
                }
                PerEdge::Each(_) => Duration::PerEdge(edge_table(entry, n)?),
            };
            let all = match &value {
                Duration::Fixed(v) => vec![*v],
                Duration::PerEdge(t) => t.values(),
            };
            if all.iter().any(|&d| !(d > 0.0 && d.is_finite())) {
                return Err(Error::validation(format!(
                    "durations for {kind} must be positive"
                )));
            }
            durations.insert(kind, value);
        }
        Ok(CalibrationData {
            name: raw.name.unwrap_or_else(|| "unnamed".into()),
            n_qubits: n,
            single_qubit_error,
            virtual_kinds,
            two_qubit_error,
            readout,
            coherence,
            durations,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        CalibrationData::parse(&read_file(path)?)
            .map_err(|e| e.context(format!("reading {}", path.display())))
    }

    pub fn is_virtual(&self, kind: GateKind) -> bool {
        self.virtual_kinds.contains(&kind)
    }

    /// Error rate used for `gate`'s depolarizing channel.
    pub fn gate_error(&self, gate: &Gate) -> Result<f64> {
        self.check_qubits(gate)?;
        Ok(match (gate.kind, gate.qubits.as_slice()) {
            (GateKind::Measure, _) => 0.0,
            (k, _) if self.is_virtual(k) => 0.0,
            (_, &[q]) => self.single_qubit_error[q],
            (GateKind::Swap, &[a, b]) => {
                let p = self.pair_error(a, b)?;
                1.0 - (1.0 - p).powi(3)
            }
            (_, &[a, b]) => self.pair_error(a, b)?,
            _ => unreachable!("arity checked on push"),
        })
    }

    fn pair_error(&self, a: usize, b: usize) -> Result<f64> {
        self.two_qubit_error.get(a, b).ok_or_else(|| {
            Error::config(format!("no two-qubit error calibrated for pair ({a}, {b})"))
        })
    }

    fn check_qubits(&self, gate: &Gate) -> Result<()> {
        match gate.qubits.iter().find(|&&q| q >= self.n_qubits) {
            Some(q) => Err(Error::config(format!(
                "qubit {q} is not calibrated on {} ({} qubits)",
                self.name, self.n_qubits
            ))),
            None => Ok(()),
        }
    }

    /// Execution time of one gate in seconds.
    pub fn gate_duration(&self, gate: &Gate) -> Result<f64> {
        self.check_qubits(gate)?;
        if gate.kind == GateKind::Measure || self.is_virtual(gate.kind) {
            return Ok(0.0);
        }
        match (self.durations.get(&gate.kind), gate.qubits.as_slice()) {
            (Some(Duration::Fixed(d)), _) => Ok(*d),
            (Some(Duration::PerEdge(t)), &[a, b]) => t.get(a, b).ok_or_else(|| {
                Error::config(format!("no {} duration for pair ({a}, {b})", gate.kind))
            }),
            _ => Err(Error::config(format!(
                "no duration for {} in calibration {}",
                gate.kind, self.name
            ))),
        }
    }

    /// Copy with every two-qubit error multiplied by `factor` (clamped to 1).
    pub fn scale_two_qubit_errors(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.two_qubit_error.map_values(|v| (v * factor).min(1.0));
        out
    }

    /// Copy with gate errors zeroed, keeping readout error only.
    pub fn readout_only(&self) -> Self {
        let mut out = self.clone();
        out.single_qubit_error.iter_mut().for_each(|e| *e = 0.0);
        out.two_qubit_error.map_values(|_| 0.0);
        out
    }
}

/// Critical-path duration: gates start as soon as all their qubits are free.
pub fn estimate_duration(circuit: &Circuit, cal: &CalibrationData) -> Result<f64> {
    let mut free_at = vec![0.0f64; circuit.n_qubits()];
    for g in circuit.gates() {
        let start = g.qubits.iter().map(|&q| free_at[q]).fold(0.0, f64::max);
        let end = start + cal.gate_duration(g)?;
        for &q in &g.qubits {
            free_at[q] = end;
        }
    }
    Ok(free_at.into_iter().fold(0.0, f64::max))
}

type ChannelKey = (GateKind, Vec<usize>);

/// Executable noise: channels applied after each gate, plus readout confusion.
#[derive(Debug, Clone, Default)]
pub struct NoiseModel {
    channels: HashMap<ChannelKey, Vec<KrausChannel>>,
    readout: Vec<ReadoutError>,
}

impl NoiseModel {
    /// No gate noise and no readout error.
    pub fn ideal(n_qubits: usize) -> Self {
        NoiseModel {
            channels: HashMap::new(),
            readout: vec![ReadoutError { p01: 0.0, p10: 0.0 }; n_qubits],
        }
    }

    pub fn channels_for(&self, gate: &Gate) -> &[KrausChannel] {
        self.channels
            .get(&(gate.kind, gate.qubits.clone()))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn readout(&self) -> &[ReadoutError] {
        &self.readout
    }

    pub fn has_readout_error(&self) -> bool {
        self.readout.iter().any(|r| !r.is_zero())
    }

    /// Every channel in the model (for invariant checks).
    pub fn all_channels(&self) -> impl Iterator<Item = &KrausChannel> {
        self.channels.values().flatten()
    }
}

/// Builds depolarizing channels from calibrated error rates, optionally
/// followed by amplitude and phase damping derived from T1/T2 and the gate
/// duration. Readout confusion is copied from the calibration.
pub fn build_noise_model(cal: &CalibrationData, include_thermal: bool) -> Result<NoiseModel> {
    let n = cal.n_qubits;
    let mut channels = HashMap::new();
    let mut add = |gate: Gate| -> Result<()> {
        let mut list = Vec::new();
        let p = cal.gate_error(&gate)?;
        if p > 0.0 {
            list.push(KrausChannel::depolarizing(gate.qubits.len(), p)?);
        }
        if include_thermal {
            if let (Some(coh), Ok(t)) = (&cal.coherence, cal.gate_duration(&gate)) {
                if t > 0.0 {
                    for (i, &q) in gate.qubits.iter().enumerate() {
                        let thermal = thermal_channel(t, coh[q].0, coh[q].1)?;
                        list.push(embed_single(thermal, i, gate.qubits.len())?);
                    }
                }
            }
        }
        if !list.is_empty() {
            channels.insert((gate.kind, gate.qubits.clone()), list);
        }
        Ok(())
    };
    for kind in GateKind::ALL
        .into_iter()
        .filter(|k| k.is_single_qubit_unitary())
    {
        for q in 0..n {
            let gate = match kind {
                GateKind::Sx => Gate::sx(q),
                GateKind::X => Gate::x(q),
                GateKind::Rx => Gate::rx(q, 0.0),
                GateKind::Ry => Gate::ry(q, 0.0),
                _ => Gate::rz(q, 0.0),
            };
            add(gate)?;
        }
    }
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| (0..n).map(move |b| (a, b)))
        .filter(|&(a, b)| a != b && cal.two_qubit_error.get(a, b).is_some())
        .collect();
    for (a, b) in pairs {
        add(Gate::cx(a, b))?;
        add(Gate::rxx(a, b, 0.0))?;
        add(Gate::swap(a, b))?;
    }
    Ok(NoiseModel {
        channels,
        readout: cal.readout.clone(),
    })
}

/// Amplitude damping `1 − exp(−t/T1)` followed by the pure dephasing needed
/// to bring coherences down to `exp(−t/T2)`.
fn thermal_channel(t: f64, t1: f64, t2: f64) -> Result<KrausChannel> {
    let gamma = 1.0 - (-t / t1).exp();
    let dephasing_rate = (1.0 / t2 - 0.5 / t1).max(0.0);
    let lambda = 1.0 - (-2.0 * t * dephasing_rate).exp();
    KrausChannel::compose(
        &KrausChannel::amplitude_damping(gamma)?,
        &KrausChannel::phase_damping(lambda)?,
    )
}

/// Places a single-qubit channel on local position `index` of an `arity`-qubit support.
fn embed_single(ch: KrausChannel, index: usize, arity: usize) -> Result<KrausChannel> {
    if arity == 1 {
        return Ok(ch);
    }
    let id = KrausChannel::depolarizing(1, 0.0)?;
    if index == 0 {
        KrausChannel::tensor(&ch, &id)
    } else {
        KrausChannel::tensor(&id, &ch)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observable::Observable;
    use crate::simulator::{run_density, DensityMatrix, QuantumState};

    const TWO_QUBIT: &str = r#"
n_qubits = 2
[single_qubit]
error = 0.1
[two_qubit]
error = 0.0
[durations]
rx = 1.0e-6
cx = { "0_1" = 3.0e-7 }
"#;

    #[test]
    fn parses_minimal_profile() {
        let cal = CalibrationData::parse(TWO_QUBIT).unwrap();
        assert_eq!(cal.single_qubit_error, vec![0.1, 0.1]);
        assert_eq!(cal.readout[1], ReadoutError { p01: 0.0, p10: 0.0 });
        // reverse-direction fallback
        assert_eq!(cal.gate_duration(&Gate::cx(1, 0)).unwrap(), 3.0e-7);
    }

    #[test]
    fn empty_file_is_rejected() {
        assert!(matches!(
            CalibrationData::parse(""),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn bad_probability_and_qubit() {
        let bad_p = TWO_QUBIT.replace("error = 0.1", "error = 1.5");
        assert!(matches!(
            CalibrationData::parse(&bad_p),
            Err(Error::Validation(_))
        ));
        let bad_q = TWO_QUBIT.replace("\"0_1\"", "\"0_7\"");
        assert!(matches!(
            CalibrationData::parse(&bad_q),
            Err(Error::Validation(_))
        ));
        let bad_len = TWO_QUBIT.replace("error = 0.1", "error = [0.1, 0.2, 0.3]");
        assert!(matches!(
            CalibrationData::parse(&bad_len),
            Err(Error::Validation(_))
        ));
        let bad_dur = TWO_QUBIT.replace("rx = 1.0e-6", "rx = 0.0");
        assert!(matches!(
            CalibrationData::parse(&bad_dur),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn depolarizing_contracts_z() {
        let cal = CalibrationData::parse(TWO_QUBIT).unwrap();
        let model = build_noise_model(&cal, false).unwrap();
        let c = Circuit::from_gates(2, vec![Gate::rx(0, 0.0)]).unwrap();
        let rho = run_density(&c, &model).unwrap();
        let z = Observable::parse("ZI 1.0").unwrap();
        assert!((rho.expectation(&z).unwrap() - 0.9).abs() < 1e-12);
    }

    #[test]
    fn zero_error_model_is_noiseless() {
        let cal = CalibrationData::parse(&TWO_QUBIT.replace("error = 0.1", "error = 0.0")).unwrap();
        let model = build_noise_model(&cal, false).unwrap();
        assert_eq!(model.all_channels().count(), 0);
        let c = Circuit::from_gates(2, vec![Gate::rx(0, 1.0), Gate::cx(0, 1)]).unwrap();
        let rho = run_density(&c, &model).unwrap();
        let pure =
            DensityMatrix::from_pure(&crate::simulator::run_statevector(&c).unwrap()).unwrap();
        for r in 0..4 {
            for col in 0..4 {
                assert!((rho.get(r, col) - pure.get(r, col)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn thermal_channels_trace_preserving() {
        let text = format!("{TWO_QUBIT}\n[coherence]\nt1 = 1.0e-5\nt2 = 1.5e-5\n");
        let cal = CalibrationData::parse(&text).unwrap();
        let model = build_noise_model(&cal, true).unwrap();
        assert!(model.all_channels().count() > 0);
        for ch in model.all_channels() {
            assert!(ch.trace_preservation_error() < 1e-10);
        }
        // amplitude damping pulls |1⟩ towards |0⟩
        let c = Circuit::from_gates(2, vec![Gate::x(0), Gate::rx(0, 0.0)]).unwrap();
        let quiet = cal.clone();
        let rho = run_density(&c, &build_noise_model(&quiet, true).unwrap()).unwrap();
        assert!(rho.get(1, 1).re < 1.0);
    }

    #[test]
    fn duration_schedule() {
        let cal = CalibrationData::parse(TWO_QUBIT).unwrap();
        assert_eq!(estimate_duration(&Circuit::new(2), &cal).unwrap(), 0.0);
        let c = Circuit::from_gates(2, vec![Gate::rx(0, 1.0), Gate::rx(1, 1.0), Gate::cx(0, 1)])
            .unwrap();
        assert!((estimate_duration(&c, &cal).unwrap() - 1.3e-6).abs() < 1e-18);
        let missing = Circuit::from_gates(2, vec![Gate::rz(0, 1.0)]).unwrap();
        assert!(matches!(
            estimate_duration(&missing, &cal),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn scaling_and_readout_only() {
        let cal = CalibrationData::parse(&TWO_QUBIT.replace("error = 0.0", "error = 0.3")).unwrap();
        let scaled = cal.scale_two_qubit_errors(4.0);
        assert_eq!(scaled.two_qubit_error.get(0, 1), Some(1.0));
        let ro = cal.readout_only();
        assert_eq!(ro.single_qubit_error, vec![0.0, 0.0]);
        assert_eq!(ro.two_qubit_error.get(1, 0), Some(0.0));
    }
}
