//! CSV export and SVG figures for run directories.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transpiler::TranspileReport;
use crate::vqe::{read_run_dir, read_scan, read_summary_report, RunRecord, ScanResult, Stat};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 84.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 44.0;
const BOTTOM: f64 = 64.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum PlotKind {
    Convergence,
    EnergyErrorBox,
    DistanceCurve,
    GateCountBars,
    OptimizerComparison,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportSpec {
    pub kind: PlotKind,
    pub inputs: Vec<PathBuf>,
    pub output: PathBuf,
    /// Worst seeds (by final error) left out of mean and band.
    pub exclude_outliers: usize,
}

/// Everything a figure can draw from one input directory.
#[derive(Debug, Clone, Default)]
pub struct ReportInput {
    pub label: String,
    pub records: Vec<RunRecord>,
    pub transpile: Option<TranspileReport>,
    pub scan: Option<ScanResult>,
}

impl ReportInput {
    pub fn load(dir: &Path) -> Result<Self> {
        let has_records = std::fs::read_dir(dir)
            .map_err(|source| Error::Io {
                path: dir.to_path_buf(),
                source,
            })?
            .filter_map(|e| e.ok())
            .any(|e| e.path().extension().is_some_and(|x| x == "record"));
        let records = if has_records {
            read_run_dir(dir)?
        } else {
            Vec::new()
        };
        let scan = read_scan(dir)?;
        if records.is_empty() && scan.is_none() {
            return Err(Error::validation(format!(
                "{} holds no records or scan",
                dir.display()
            )));
        }
        let label = records
            .first()
            .map(|r| r.config.name.clone())
            .or_else(|| dir.file_name().map(|n| n.to_string_lossy().into_owned()))
            .unwrap_or_default();
        Ok(ReportInput {
            label,
            records,
            transpile: read_summary_report(dir)?,
            scan,
        })
    }

    pub fn from_records(records: Vec<RunRecord>) -> Self {
        let label = records
            .first()
            .map(|r| r.config.name.clone())
            .unwrap_or_default();
        ReportInput {
            label,
            records,
            ..Default::default()
        }
    }
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub seed: usize,
    pub iteration: usize,
    pub energy_ha: f64,
    pub evals: usize,
    pub quantum_time_s: f64,
}

/// `seed,iteration,energy_ha,evals,quantum_time_s`, one row per iteration.
/// Floats are written in shortest round-trip form.
pub fn render_csv(records: &[RunRecord]) -> Result<String> {
    if records.is_empty() {
        return Err(Error::contract("no records to render"));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        for i in 0..r.energies.len() {
            w.serialize(CsvRow {
                seed: r.seed,
                iteration: i + 1,
                energy_ha: r.energies[i],
                evals: r.evaluations[i],
                quantum_time_s: r.quantum_time_s[i],
            })
            .map_err(|e| Error::validation(e.to_string()))?;
        }
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::validation(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn parse_csv(text: &str) -> Result<Vec<CsvRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let headers = r.headers().map_err(csv_err)?.clone();
    if headers != vec!["seed", "iteration", "energy_ha", "evals", "quantum_time_s"] {
        return Err(Error::Parse {
            line: 1,
            message: format!("unexpected header {headers:?}"),
        });
    }
    r.deserialize().map(|row| row.map_err(csv_err)).collect()
}

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::Parse {
        line,
        message: e.to_string(),
    }
}

/// Per-iteration mean and σ over `records` after dropping the `exclude`
/// seeds with the largest final error. Returns the kept seeds too.
pub fn band(records: &[RunRecord], exclude: usize) -> Result<(Vec<Stat>, Vec<usize>)> {
    if records.is_empty() {
        return Err(Error::contract("no records for a band"));
    }
    if exclude >= records.len() {
        return Err(Error::contract(format!(
            "cannot exclude {exclude} of {} records",
            records.len()
        )));
    }
    let mut order: Vec<&RunRecord> = records.iter().collect();
    order.sort_by(|a, b| {
        b.final_error()
            .total_cmp(&a.final_error())
            .then(a.seed.cmp(&b.seed))
    });
    let mut kept: Vec<usize> = order[exclude..].iter().map(|r| r.seed).collect();
    kept.sort_unstable();
    let len = records.iter().map(|r| r.energies.len()).min().unwrap_or(0);
    let stats = (0..len)
        .map(|i| {
            let vals: Vec<f64> = records
                .iter()
                .filter(|r| kept.contains(&r.seed))
                .map(|r| r.energies[i])
                .collect();
            Stat::of(&vals)
        })
        .collect();
    Ok((stats, kept))
}

struct Axis {
    lo: f64,
    hi: f64,
    ticks: Vec<f64>,
}

impl Axis {
    fn fit(values: impl IntoIterator<Item = f64>) -> Axis {
        let (mut lo, mut hi) = values
            .into_iter()
            .filter(|v| v.is_finite())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
                (a.min(v), b.max(v))
            });
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo < 1e-9 {
            let pad = if lo.abs() > 1e-9 {
                lo.abs() * 0.05
            } else {
                0.5
            };
            lo -= pad;
            hi += pad;
        }
        let step = nice_step((hi - lo) / 5.0);
        let lo = (lo / step).floor() * step;
        let hi = (hi / step).ceil() * step;
        let n = ((hi - lo) / step).round() as usize;
        let ticks = (0..=n).map(|k| lo + k as f64 * step).collect();
        Axis { lo, hi, ticks }
    }

    fn x(&self, v: f64) -> f64 {
        LEFT + (v - self.lo) / (self.hi - self.lo) * (WIDTH - LEFT - RIGHT)
    }

    fn y(&self, v: f64) -> f64 {
        HEIGHT - BOTTOM - (v - self.lo) / (self.hi - self.lo) * (HEIGHT - TOP - BOTTOM)
    }
}

fn nice_step(raw: f64) -> f64 {
    let mag = 10f64.powf(raw.log10().floor());
    let f = raw / mag;
    let m = if f <= 1.0 {
        1.0
    } else if f <= 2.0 {
        2.0
    } else if f <= 5.0 {
        5.0
    } else {
        10.0
    };
    m * mag
}

fn tick_label(v: f64, step: f64) -> String {
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    let s = format!("{v:.decimals$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

struct Svg {
    body: String,
}

impl Svg {
    fn new(title: &str, hashes: &[String]) -> Svg {
        let mut body = String::new();
        let _ = writeln!(
            body,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let joined = hashes.join(" ");
        let _ = writeln!(
            body,
            "<metadata>config-hash: {}</metadata>",
            escape(&joined)
        );
        let _ = writeln!(
            body,
            r##"<rect width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>"##
        );
        let _ = writeln!(
            body,
            r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
            WIDTH / 2.0,
            escape(title)
        );
        let short: Vec<&str> = hashes.iter().map(|h| &h[..h.len().min(12)]).collect();
        let _ = writeln!(
            body,
            r##"<text x="{}" y="{}" text-anchor="end" font-size="9" fill="#888888">config {}</text>"##,
            WIDTH - 4.0,
            HEIGHT - 6.0,
            escape(&short.join(" "))
        );
        Svg { body }
    }

    fn axes(&mut self, x: &Axis, y: &Axis, xlabel: &str, ylabel: &str, xticks: bool) {
        let (x0, x1) = (LEFT, WIDTH - RIGHT);
        let (y0, y1) = (HEIGHT - BOTTOM, TOP);
        let ystep = y.ticks.get(1).map_or(1.0, |t| t - y.ticks[0]);
        for &t in &y.ticks {
            let py = y.y(t);
            let _ = writeln!(
                self.body,
                r##"<line x1="{x0:.2}" y1="{py:.2}" x2="{x1:.2}" y2="{py:.2}" stroke="#e5e5e5"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
                x0 - 6.0,
                py + 4.0,
                tick_label(t, ystep)
            );
        }
        if xticks {
            let xstep = x.ticks.get(1).map_or(1.0, |t| t - x.ticks[0]);
            for &t in &x.ticks {
                let px = x.x(t);
                let _ = writeln!(
                    self.body,
                    r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                    y0 + 18.0,
                    tick_label(t, xstep)
                );
            }
        }
        let _ = writeln!(
            self.body,
            r##"<path d="M{x0:.2},{y1:.2} L{x0:.2},{y0:.2} L{x1:.2},{y0:.2}" fill="none" stroke="#333333"/>"##
        );
        let _ = writeln!(
            self.body,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            (x0 + x1) / 2.0,
            HEIGHT - 24.0,
            escape(xlabel)
        );
        let _ = writeln!(
            self.body,
            r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
            (y0 + y1) / 2.0,
            (y0 + y1) / 2.0,
            escape(ylabel)
        );
    }

    fn hline(&mut self, y: &Axis, value: f64, label: &str) {
        let py = y.y(value);
        let _ = writeln!(
            self.body,
            r##"<line x1="{LEFT:.2}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}" stroke="#000000" stroke-dasharray="6 4"/><text x="{:.2}" y="{:.2}" text-anchor="end" font-size="10">{}</text>"##,
            WIDTH - RIGHT,
            WIDTH - RIGHT - 4.0,
            py - 4.0,
            escape(label)
        );
    }

    fn polyline(
        &mut self,
        pts: &[(f64, f64)],
        color: &str,
        width: f64,
        opacity: f64,
        dashed: bool,
    ) {
        let mut d = String::new();
        for (i, (x, y)) in pts.iter().enumerate() {
            let _ = write!(d, "{}{x:.2},{y:.2}", if i == 0 { "M" } else { " L" });
        }
        let dash = if dashed {
            r#" stroke-dasharray="3 3""#
        } else {
            ""
        };
        let _ = writeln!(
            self.body,
            r#"<path d="{d}" fill="none" stroke="{color}" stroke-width="{width}" stroke-opacity="{opacity}"{dash}/>"#
        );
    }

    fn polygon(&mut self, pts: &[(f64, f64)], color: &str, opacity: f64) {
        let mut d = String::new();
        for (i, (x, y)) in pts.iter().enumerate() {
            let _ = write!(d, "{}{x:.2},{y:.2}", if i == 0 { "M" } else { " L" });
        }
        let _ = writeln!(
            self.body,
            r#"<path d="{d} Z" fill="{color}" fill-opacity="{opacity}" stroke="none"/>"#
        );
    }

    fn legend(&mut self, entries: &[(String, &str)]) {
        for (i, (label, color)) in entries.iter().enumerate() {
            let y = TOP + 10.0 + 16.0 * i as f64;
            let x = WIDTH - RIGHT - 180.0;
            let _ = writeln!(
                self.body,
                r#"<rect x="{x:.2}" y="{:.2}" width="12" height="4" fill="{color}"/><text x="{:.2}" y="{:.2}">{}</text>"#,
                y - 4.0,
                x + 18.0,
                y + 1.0,
                escape(label)
            );
        }
    }

    fn finish(mut self) -> String {
        self.body.push_str("</svg>\n");
        self.body
    }
}

fn color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

fn hashes(inputs: &[ReportInput]) -> Vec<String> {
    let mut out: Vec<String> = inputs
        .iter()
        .flat_map(|i| {
            i.records
                .iter()
                .map(|r| r.config_hash.clone())
                .chain(i.scan.iter().map(|s| s.config_hash.clone()))
        })
        .collect();
    out.sort();
    out.dedup();
    out
}

fn e_fci(inputs: &[ReportInput]) -> Option<f64> {
    inputs
        .iter()
        .flat_map(|i| i.records.first())
        .map(|r| r.e_fci)
        .next()
}

fn need_records(inputs: &[ReportInput]) -> Result<()> {
    if inputs.is_empty() || inputs.iter().any(|i| i.records.is_empty()) {
        return Err(Error::contract("plot needs run records in every input"));
    }
    Ok(())
}

/// Renders one figure. Output depends only on the inputs.
pub fn render_svg(spec: &ReportSpec, inputs: &[ReportInput]) -> Result<String> {
    match spec.kind {
        PlotKind::Convergence => convergence(inputs, spec.exclude_outliers),
        PlotKind::EnergyErrorBox => error_box(inputs),
        PlotKind::DistanceCurve => distance_curve(inputs),
        PlotKind::GateCountBars => gate_bars(inputs),
        PlotKind::OptimizerComparison => optimizer_comparison(inputs, spec.exclude_outliers),
    }
}

fn convergence(inputs: &[ReportInput], exclude: usize) -> Result<String> {
    need_records(inputs)?;
    let reference = e_fci(inputs).expect("records present");
    let mut bands = Vec::new();
    for input in inputs {
        bands.push(band(&input.records, exclude)?);
    }
    let iters = inputs
        .iter()
        .flat_map(|i| &i.records)
        .map(|r| r.energies.len())
        .max()
        .unwrap_or(1);
    let x = Axis::fit([1.0, iters.max(2) as f64]);
    let y = Axis::fit(
        inputs
            .iter()
            .flat_map(|i| &i.records)
            .flat_map(|r| r.energies.iter().copied())
            .chain([reference]),
    );
    let mut svg = Svg::new("VQE convergence", &hashes(inputs));
    svg.axes(&x, &y, "iteration", "energy (Ha)", true);
    let mut legend = Vec::new();
    for (k, (input, (stats, kept))) in inputs.iter().zip(&bands).enumerate() {
        let c = color(k);
        let upper: Vec<(f64, f64)> = stats
            .iter()
            .enumerate()
            .map(|(i, s)| (x.x(i as f64 + 1.0), y.y(s.mean + s.std)))
            .collect();
        let lower = stats
            .iter()
            .enumerate()
            .rev()
            .map(|(i, s)| (x.x(i as f64 + 1.0), y.y(s.mean - s.std)));
        let outline: Vec<(f64, f64)> = upper.iter().copied().chain(lower).collect();
        svg.polygon(&outline, c, 0.18);
        for r in &input.records {
            let pts: Vec<(f64, f64)> = r
                .energies
                .iter()
                .enumerate()
                .map(|(i, e)| (x.x(i as f64 + 1.0), y.y(*e)))
                .collect();
            svg.polyline(&pts, c, 1.0, 0.3, !kept.contains(&r.seed));
        }
        let mean: Vec<(f64, f64)> = stats
            .iter()
            .enumerate()
            .map(|(i, s)| (x.x(i as f64 + 1.0), y.y(s.mean)))
            .collect();
        svg.polyline(&mean, c, 2.5, 1.0, false);
        legend.push((format!("{} (mean ±1σ of {})", input.label, kept.len()), c));
    }
    svg.hline(&y, reference, &format!("E_FCI = {reference:.6} Ha"));
    svg.legend(&legend);
    Ok(svg.finish())
}

fn quartile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (i, frac) = (pos.floor() as usize, pos.fract());
    if i + 1 < sorted.len() {
        sorted[i] * (1.0 - frac) + sorted[i + 1] * frac
    } else {
        sorted[i]
    }
}

fn error_box(inputs: &[ReportInput]) -> Result<String> {
    need_records(inputs)?;
    let errors: Vec<Vec<f64>> = inputs
        .iter()
        .map(|i| {
            let mut v: Vec<f64> = i.records.iter().map(|r| r.final_error()).collect();
            v.sort_by(f64::total_cmp);
            v
        })
        .collect();
    let x = Axis {
        lo: 0.0,
        hi: inputs.len() as f64,
        ticks: Vec::new(),
    };
    let y = Axis::fit(errors.iter().flatten().copied().chain([0.0]));
    let mut svg = Svg::new("Final energy error per seed", &hashes(inputs));
    svg.axes(&x, &y, "run", "|E - E_FCI| (Ha)", false);
    for (k, (input, v)) in inputs.iter().zip(&errors).enumerate() {
        let c = color(k);
        let cx = x.x(k as f64 + 0.5);
        let half = 0.18 * (x.x(1.0) - x.x(0.0));
        let (q1, med, q3) = (quartile(v, 0.25), quartile(v, 0.5), quartile(v, 0.75));
        let (lo, hi) = (v[0], v[v.len() - 1]);
        let _ = writeln!(
            svg.body,
            r#"<line x1="{cx:.2}" y1="{:.2}" x2="{cx:.2}" y2="{:.2}" stroke="{c}"/>"#,
            y.y(lo),
            y.y(hi)
        );
        let _ = writeln!(
            svg.body,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{c}" fill-opacity="0.25" stroke="{c}"/>"#,
            cx - half,
            y.y(q3),
            2.0 * half,
            (y.y(q1) - y.y(q3)).max(0.5)
        );
        let _ = writeln!(
            svg.body,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{c}" stroke-width="2.5"/>"#,
            cx - half,
            y.y(med),
            cx + half,
            y.y(med)
        );
        for e in v {
            let _ = writeln!(
                svg.body,
                r#"<circle cx="{cx:.2}" cy="{:.2}" r="3" fill="{c}" fill-opacity="0.7"/>"#,
                y.y(*e)
            );
        }
        let _ = writeln!(
            svg.body,
            r#"<text x="{cx:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            HEIGHT - BOTTOM + 18.0,
            escape(&input.label)
        );
    }
    svg.hline(&y, 0.0, "E_FCI");
    Ok(svg.finish())
}

fn distance_curve(inputs: &[ReportInput]) -> Result<String> {
    let scans: Vec<(&str, &ScanResult)> = inputs
        .iter()
        .filter_map(|i| i.scan.as_ref().map(|s| (i.label.as_str(), s)))
        .collect();
    if scans.is_empty() || scans.iter().any(|(_, s)| s.points.is_empty()) {
        return Err(Error::contract("distance curve needs a non-empty scan"));
    }
    let pts = || scans.iter().flat_map(|(_, s)| s.points.iter());
    let x = Axis::fit(pts().map(|p| p.distance));
    let y = Axis::fit(pts().flat_map(|p| [p.vqe_min, p.e_fci]));
    let mut svg = Svg::new("Ground-state energy against bond length", &hashes(inputs));
    svg.axes(&x, &y, "distance (Å)", "energy (Ha)", true);
    let mut exact: Vec<_> = pts().map(|p| (p.distance, p.e_fci)).collect();
    exact.sort_by(|a, b| a.0.total_cmp(&b.0));
    exact.dedup_by(|a, b| a.0 == b.0);
    let line: Vec<_> = exact.iter().map(|(d, e)| (x.x(*d), y.y(*e))).collect();
    svg.polyline(&line, "#000000", 1.5, 1.0, true);
    for (d, e) in &exact {
        let _ = writeln!(
            svg.body,
            r##"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="#000000"/>"##,
            x.x(*d),
            y.y(*e)
        );
    }
    let mut legend = vec![("E_FCI".to_string(), "#000000")];
    for (k, (label, scan)) in scans.iter().enumerate() {
        let c = color(k);
        let mut p: Vec<_> = scan
            .points
            .iter()
            .map(|p| (p.distance, p.vqe_min))
            .collect();
        p.sort_by(|a, b| a.0.total_cmp(&b.0));
        let line: Vec<_> = p.iter().map(|(d, e)| (x.x(*d), y.y(*e))).collect();
        svg.polyline(&line, c, 1.5, 1.0, false);
        for (px, py) in &line {
            let _ = writeln!(
                svg.body,
                r#"<circle cx="{px:.2}" cy="{py:.2}" r="4" fill="{c}"/>"#
            );
        }
        legend.push((format!("{label} VQE minimum"), c));
    }
    svg.legend(&legend);
    Ok(svg.finish())
}

fn gate_bars(inputs: &[ReportInput]) -> Result<String> {
    let reports: Vec<&TranspileReport> =
        inputs.iter().filter_map(|i| i.transpile.as_ref()).collect();
    if reports.is_empty() {
        return Err(Error::contract("gate-count plot needs transpiled runs"));
    }
    let metrics = ["two-qubit gates", "total gates", "depth"];
    let value = |r: &TranspileReport, m: usize| match m {
        0 => r.two_qubit_gates,
        1 => r.total_gates,
        _ => r.depth,
    } as f64;
    let x = Axis {
        lo: 0.0,
        hi: metrics.len() as f64,
        ticks: Vec::new(),
    };
    let y = Axis::fit(
        reports
            .iter()
            .flat_map(|r| (0..3).map(|m| value(r, m)))
            .chain([0.0]),
    );
    let mut svg = Svg::new("Transpiled ansatz size", &hashes(inputs));
    svg.axes(&x, &y, "", "count", false);
    let slot = x.x(1.0) - x.x(0.0);
    let bar = 0.7 * slot / reports.len() as f64;
    for (m, name) in metrics.iter().enumerate() {
        for (k, r) in reports.iter().enumerate() {
            let bx = x.x(m as f64) + 0.15 * slot + k as f64 * bar;
            let v = value(r, m);
            let _ = writeln!(
                svg.body,
                r#"<rect x="{bx:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/><text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="10">{v}</text>"#,
                y.y(v),
                bar - 2.0,
                y.y(0.0) - y.y(v),
                color(k),
                bx + bar / 2.0 - 1.0,
                y.y(v) - 4.0
            );
        }
        let _ = writeln!(
            svg.body,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{name}</text>"#,
            x.x(m as f64 + 0.5),
            HEIGHT - BOTTOM + 18.0
        );
    }
    let legend: Vec<_> = reports
        .iter()
        .enumerate()
        .map(|(k, r)| (r.target.clone(), color(k)))
        .collect();
    svg.legend(&legend);
    Ok(svg.finish())
}

fn optimizer_comparison(inputs: &[ReportInput], exclude: usize) -> Result<String> {
    need_records(inputs)?;
    let reference = e_fci(inputs).expect("records present");
    let mut series = Vec::new();
    for input in inputs {
        let (stats, _) = band(&input.records, exclude)?;
        let name = input.records[0].optimizer.clone();
        series.push((name, stats));
    }
    let iters = series.iter().map(|(_, s)| s.len()).max().unwrap_or(1);
    let x = Axis::fit([1.0, iters.max(2) as f64]);
    let y = Axis::fit(
        series
            .iter()
            .flat_map(|(_, s)| s.iter().map(|v| v.mean))
            .chain([reference]),
    );
    let mut svg = Svg::new("Optimizer comparison", &hashes(inputs));
    svg.axes(&x, &y, "iteration", "mean energy (Ha)", true);
    let mut legend = Vec::new();
    for (k, (name, stats)) in series.iter().enumerate() {
        let pts: Vec<_> = stats
            .iter()
            .enumerate()
            .map(|(i, s)| (x.x(i as f64 + 1.0), y.y(s.mean)))
            .collect();
        svg.polyline(&pts, color(k), 2.0, 1.0, false);
        legend.push((name.clone(), color(k)));
    }
    svg.hline(&y, reference, &format!("E_FCI = {reference:.6} Ha"));
    svg.legend(&legend);
    Ok(svg.finish())
}

/// Loads every input directory and renders `spec` to its output path.
pub fn write_report(spec: &ReportSpec) -> Result<()> {
    if spec.inputs.is_empty() {
        return Err(Error::contract("report needs at least one input directory"));
    }
    let inputs = spec
        .inputs
        .iter()
        .map(|d| ReportInput::load(d).map_err(|e| e.context(format!("loading {}", d.display()))))
        .collect::<Result<Vec<_>>>()?;
    let svg = render_svg(spec, &inputs)?;
    if let Some(parent) = spec.output.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|source| Error::Io {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    std::fs::write(&spec.output, svg).map_err(|source| Error::Io {
        path: spec.output.clone(),
        source,
    })
}
