use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use vqebench::circuit::build_ry_cnot_ansatz;
use vqebench::error::Result;
use vqebench::noise::{estimate_duration, CalibrationData};
use vqebench::observable::Observable;
use vqebench::report::{render_csv, write_report, PlotKind, ReportInput, ReportSpec};
use vqebench::transpiler::{transpile, TranspileTarget};
use vqebench::vqe::{
    aggregate, distance_scan, load_scan_table, write_run_dir, write_scan, Experiment,
    ExperimentConfig, ScanResult,
};

#[derive(Parser)]
#[command(
    name = "vqebench",
    version,
    about = "VQE hardware benchmarking on simulated devices"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate an observable file and print its exact ground energy.
    Ham { observable: PathBuf },
    /// Transpile the RY-CNOT ansatz to a target and print the report.
    Transpile {
        #[arg(long)]
        target: PathBuf,
        #[arg(long, default_value_t = 4)]
        qubits: usize,
        /// Calibration used to estimate the circuit duration.
        #[arg(long)]
        calibration: Option<PathBuf>,
    },
    /// Run a VQE experiment.
    Vqe(RunArgs),
    /// Run the experiment at every bond length of a scan table.
    Scan {
        #[arg(long)]
        table: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Render a figure from run directories.
    Report {
        #[arg(long, value_enum)]
        kind: PlotKind,
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        exclude_outliers: usize,
        /// Also write the per-iteration table of the first input.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    target: Option<PathBuf>,
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    mitigate: bool,
    #[arg(long)]
    thermal: bool,
    #[arg(long, default_value_t = 0)]
    exclude_outliers: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed_master: Option<u64>,
}

impl RunArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut c = ExperimentConfig::load(&self.config)?;
        if let Some(t) = &self.target {
            c.target = Some(t.clone());
        }
        if let Some(n) = self.seeds {
            c.seeds = n;
        }
        if let Some(n) = self.shots {
            c.shots = n;
        }
        if let Some(n) = self.iterations {
            c.iterations = n;
        }
        if let Some(m) = self.seed_master {
            c.master_seed = m;
        }
        c.mitigate |= self.mitigate;
        c.thermal |= self.thermal;
        c.validate()?;
        Ok(c)
    }

    fn out_dir(&self, c: &ExperimentConfig) -> PathBuf {
        self.out
            .clone()
            .unwrap_or_else(|| Path::new("runs").join(&c.name))
    }
}

fn ham(path: &Path) -> Result<()> {
    let obs = Observable::load(path)?;
    println!("observable: {}", path.display());
    println!("qubits: {}", obs.n_qubits());
    println!("terms: {}", obs.terms().len());
    println!("E_FCI: {:.6} Ha", obs.exact_ground_energy()?);
    Ok(())
}

fn transpile_cmd(target: &Path, qubits: usize, calibration: Option<&Path>) -> Result<()> {
    let target = TranspileTarget::load(target)?;
    let ansatz = build_ry_cnot_ansatz(qubits)?;
    let generic: Vec<f64> = (0..ansatz.n_parameters())
        .map(|k| 0.37 + 0.61 * k as f64)
        .collect();
    let (circuit, report) = transpile(&ansatz.bind(&generic)?, &target)?;
    println!("{report}");
    if let Some(path) = calibration {
        let cal = CalibrationData::load(path)?;
        println!(
            "estimated duration: {:.3e} s",
            estimate_duration(&circuit, &cal)?
        );
    }
    Ok(())
}

fn vqe(args: &RunArgs) -> Result<()> {
    let config = args.config()?;
    let exp = Experiment::load(&config)?;
    let report = exp.ansatz_report()?;
    let records = exp.run()?;
    let summary = aggregate(&records, args.exclude_outliers)?;
    println!("experiment: {} ({})", config.name, config.hash());
    println!("E_FCI: {:.6} Ha", summary.e_fci);
    for r in &records {
        println!(
            "seed {}: final {:.6} Ha  min {:.6} Ha  error {:.6} Ha  evaluations {}  quantum time {:.3e} s",
            r.seed,
            r.final_energy,
            r.min_energy,
            r.final_error(),
            r.total_evaluations,
            r.total_quantum_time_s
        );
    }
    if !summary.excluded_seeds.is_empty() {
        println!("excluded seeds: {:?}", summary.excluded_seeds);
    }
    println!(
        "final energy: {:.6} ± {:.6} Ha over {} seeds",
        summary.final_energy.mean, summary.final_energy.std, summary.runs
    );
    println!(
        "minimum energy: {:.6} ± {:.6} Ha",
        summary.min_energy.mean, summary.min_energy.std
    );
    println!(
        "last-4 error: {:.6} ± {:.6} Ha (σ over seeds), {:.6} Ha (σ within seeds)",
        summary.last4_error.mean, summary.last4_error.std, summary.last4_within_seed_std
    );
    println!(
        "quantum time: {:.3e} s per seed",
        summary.quantum_time_s.mean
    );
    let dir = args.out_dir(&config);
    write_run_dir(&dir, &records, &summary, report.as_ref())?;
    println!("records: {}", dir.display());
    Ok(())
}

fn scan(table: &Path, args: &RunArgs) -> Result<()> {
    let config = args.config()?;
    let exp = Experiment::load(&config)?;
    let points = distance_scan(&load_scan_table(table)?, &exp)?;
    println!(
        "{:>12}  {:>14}  {:>14}",
        "distance (Å)", "VQE min (Ha)", "E_FCI (Ha)"
    );
    for p in &points {
        println!(
            "{:>12.3}  {:>14.6}  {:>14.6}",
            p.distance, p.vqe_min, p.e_fci
        );
    }
    let dir = args.out_dir(&config);
    write_scan(
        &dir,
        &ScanResult {
            config_hash: config.hash(),
            points,
        },
    )?;
    println!("scan: {}", dir.join("scan").display());
    Ok(())
}

fn report(spec: ReportSpec, csv: Option<&Path>) -> Result<()> {
    write_report(&spec)?;
    println!("figure: {}", spec.output.display());
    if let Some(path) = csv {
        let input = ReportInput::load(&spec.inputs[0])?;
        let text = render_csv(&input.records)?;
        std::fs::write(path, text).map_err(|source| vqebench::error::Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        println!("table: {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    let result = match &cli.command {
        Command::Ham { observable } => ham(observable),
        Command::Transpile {
            target,
            qubits,
            calibration,
        } => transpile_cmd(target, *qubits, calibration.as_deref()),
        Command::Vqe(args) => vqe(args),
        Command::Scan { table, run } => scan(table, run),
        Command::Report {
            kind,
            inputs,
            out,
            exclude_outliers,
            csv,
        } => report(
            ReportSpec {
                kind: *kind,
                inputs: inputs.clone(),
                output: out.clone(),
                exclude_outliers: *exclude_outliers,
            },
            csv.as_deref(),
        ),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
