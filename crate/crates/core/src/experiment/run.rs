use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use log::info;

use crate::analytic::{sensitivity_rates, OutcomeDensity, RateApprox};
use crate::error::{Error, Result};
use crate::hilbert::C64;
use crate::params::{Detection, HamiltonianKind};
use crate::sme::{simulate_ensemble, CavityInit, Equation, Feedback, Layout, LinearSampling, Model, TrajectoryRecord};
use crate::stats::Histogram;

use super::config::ExperimentConfig;

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "CAVITY_SME_OUTPUT";

/// `$CAVITY_SME_OUTPUT`, or `./output`.
pub fn default_output_dir() -> PathBuf {
    std::env::var_os(OUTPUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("output"))
}

/// Next `g_s` from the current populations under the bang-bang law.
pub fn feedback_toggle(populations: &[f64], feedback: &Feedback, current: f64) -> f64 {
    let p = populations.get(feedback.target).copied().unwrap_or(0.0);
    feedback.next_g_s(p, current)
}

pub fn build_model(cfg: &ExperimentConfig) -> Result<Model> {
    let layout = cfg.layout.unwrap_or({
        if Model::sectors_allowed(&cfg.params) && cfg.feedback.is_none() && cfg.equation != Equation::Sse {
            Layout::Sectors
        } else {
            Layout::Joint
        }
    });
    Model::with_layout(cfg.params.clone(), layout)
}

/// All trajectories of `cfg`, in index order.
pub fn simulate_config(cfg: &ExperimentConfig) -> Result<Vec<TrajectoryRecord>> {
    cfg.validate()?;
    let model = build_model(cfg)?;
    info!(
        "{}: {} trajectories of {} steps, layout {:?}, dimension {}",
        cfg.name,
        cfg.trajectories,
        cfg.simulation().steps(cfg.params.dt),
        model.layout(),
        model.block_dim()
    );
    simulate_ensemble(&model, &cfg.simulation(), cfg.seed, cfg.trajectories)
}

/// Histogram of `y` at one time.
#[derive(Clone, Debug)]
pub struct HistogramTable {
    pub t: f64,
    pub histogram: Histogram,
    /// Predicted density at the bin centers when a closed form applies.
    pub analytic: Option<Vec<f64>>,
}

/// Mixture density of `y` predicted for this configuration, if the setup
/// matches the closed-form assumptions: no coherent drive, dispersive
/// Hamiltonian, `φ = 0`, constant real probe, transmitted detection and a
/// cavity starting at its conditional steady state.
pub fn predicted_density(cfg: &ExperimentConfig, t: f64) -> Option<OutcomeDensity> {
    let p = &cfg.params;
    let applies = p.g_s == 0.0
        && cfg.feedback.is_none()
        && p.hamiltonian == HamiltonianKind::Dicke
        && p.phi == 0.0
        && p.detection == Detection::Transmitted
        && cfg.beta_off.is_none()
        && cfg.beta.im == 0.0
        && cfg.beta.re >= 0.0
        && cfg.initial.cavity == CavityInit::Steady
        && matches!(cfg.equation, Equation::Linear | Equation::Nonlinear);
    if !applies {
        return None;
    }
    let rates = sensitivity_rates(p, RateApprox::Exact).ok()?;
    let amps = cfg.initial.system_amplitudes(p.atoms).ok()?;
    let c0: Vec<f64> = amps.iter().map(|a| a.norm_sqr()).collect();
    OutcomeDensity::new(t, &c0, &rates).ok()
}

fn record_index(rec: &TrajectoryRecord, t: f64) -> usize {
    rec.times
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

fn sample_weights(
    cfg: &ExperimentConfig,
    records: &[TrajectoryRecord],
    idx: impl Fn(&TrajectoryRecord) -> usize,
) -> Vec<f64> {
    let weighted = cfg.equation == Equation::Linear && cfg.sampling == LinearSampling::Ostensible;
    records
        .iter()
        .map(|r| if weighted { r.weight[idx(r)] } else { 1.0 })
        .collect()
}

pub fn histogram_at(cfg: &ExperimentConfig, records: &[TrajectoryRecord], t: f64) -> Result<HistogramTable> {
    let idx = |r: &TrajectoryRecord| record_index(r, t);
    let values: Vec<f64> = records.iter().map(|r| r.y[idx(r)]).collect();
    let weights = sample_weights(cfg, records, idx);
    let density = predicted_density(cfg, t);
    let (lo, hi) = match &density {
        Some(d) => d.support(5.0),
        None => {
            let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if lo < hi {
                (lo, hi + 1e-9 * (hi - lo))
            } else {
                (lo - 0.5, lo + 0.5)
            }
        }
    };
    let histogram = Histogram::from_weighted(&values, &weights, cfg.output.histogram_bins, lo, hi)?;
    let analytic = density.map(|d| histogram.centers().iter().map(|&y| d.pdf(y)).collect());
    Ok(HistogramTable { t, histogram, analytic })
}

/// Ensemble averages at each recorded time (weighted by `Tr ρ̃` for the
/// linear equation with ostensible sampling).
pub fn ensemble_mean(cfg: &ExperimentConfig, records: &[TrajectoryRecord]) -> Vec<(f64, Vec<f64>, C64)> {
    let Some(first) = records.first() else {
        return Vec::new();
    };
    (0..first.times.len())
        .map(|i| {
            let w = sample_weights(cfg, records, |_| i);
            let total: f64 = w.iter().sum();
            let dim = first.populations[i].len();
            let mut pops = vec![0.0; dim];
            let mut field = C64::new(0.0, 0.0);
            for (r, wi) in records.iter().zip(&w) {
                for (acc, p) in pops.iter_mut().zip(&r.populations[i]) {
                    *acc += wi * p / total;
                }
                field += r.field[i] * (wi / total);
            }
            (first.times[i], pops, field)
        })
        .collect()
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV file with the resolved configuration echoed as `#` lines.
struct CsvOut {
    path: PathBuf,
    writer: csv::Writer<BufWriter<File>>,
}

impl CsvOut {
    fn create(path: PathBuf, cfg: &ExperimentConfig, header: &[String]) -> Result<Self> {
        let mut file = BufWriter::new(File::create(&path)?);
        for line in cfg.to_text().lines() {
            writeln!(file, "# {line}")?;
        }
        let mut writer = csv::Writer::from_writer(file);
        writer.write_record(header).map_err(csv_error)?;
        Ok(CsvOut { path, writer })
    }

    fn row(&mut self, fields: &[String]) -> Result<()> {
        self.writer.write_record(fields).map_err(csv_error)
    }

    fn finish(mut self) -> Result<PathBuf> {
        self.writer.flush()?;
        Ok(self.path)
    }
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

fn population_header(atoms: usize) -> impl Iterator<Item = String> {
    (0..=atoms).map(|n| format!("p{n}"))
}

/// Writes the CSV files of one run and returns their paths.
pub fn write_outputs(cfg: &ExperimentConfig, records: &[TrajectoryRecord], dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let atoms = cfg.params.atoms;
    let mut files = Vec::new();

    let header: Vec<String> = ["trajectory", "t", "y", "re_a", "im_a", "purity", "weight", "g_s"]
        .into_iter()
        .map(String::from)
        .chain(population_header(atoms))
        .collect();
    let mut out = CsvOut::create(dir.join(format!("{}_series.csv", cfg.name)), cfg, &header)?;
    for (k, r) in records.iter().enumerate().take(cfg.output.series) {
        for i in 0..r.times.len() {
            let mut row = vec![
                k.to_string(),
                num(r.times[i]),
                num(r.y[i]),
                num(r.field[i].re),
                num(r.field[i].im),
                num(r.purity[i]),
                num(r.weight[i]),
                num(r.g_s[i]),
            ];
            row.extend(r.populations[i].iter().map(|p| num(*p)));
            out.row(&row)?;
        }
    }
    files.push(out.finish()?);

    let header: Vec<String> = ["trajectory", "seed", "final_y", "final_weight"]
        .into_iter()
        .map(String::from)
        .chain(population_header(atoms))
        .chain(
            [
                "min_eigenvalue",
                "positivity_violations",
                "max_trace_drift",
                "max_cutoff_population",
                "clicks",
            ]
            .into_iter()
            .map(String::from),
        )
        .collect();
    let mut out = CsvOut::create(dir.join(format!("{}_summary.csv", cfg.name)), cfg, &header)?;
    for (k, r) in records.iter().enumerate() {
        let d = &r.diagnostics;
        let mut row = vec![
            k.to_string(),
            r.seed.to_string(),
            num(r.final_y()),
            num(r.final_weight()),
        ];
        row.extend(r.populations.last().into_iter().flatten().map(|p| num(*p)));
        row.extend([
            num(d.min_eigenvalue),
            d.positivity_violations.to_string(),
            num(d.max_trace_drift),
            num(d.max_cutoff_population),
            d.clicks.to_string(),
        ]);
        out.row(&row)?;
    }
    files.push(out.finish()?);

    let header: Vec<String> = std::iter::once("t".to_string())
        .chain(population_header(atoms))
        .chain(["re_a".to_string(), "im_a".to_string()])
        .collect();
    let mut out = CsvOut::create(dir.join(format!("{}_mean.csv", cfg.name)), cfg, &header)?;
    for (t, pops, field) in ensemble_mean(cfg, records) {
        let mut row = vec![num(t)];
        row.extend(pops.iter().map(|p| num(*p)));
        row.extend([num(field.re), num(field.im)]);
        out.row(&row)?;
    }
    files.push(out.finish()?);

    if !cfg.output.histogram_times.is_empty() {
        let header: Vec<String> = ["t", "y", "density", "predicted"]
            .into_iter()
            .map(String::from)
            .collect();
        let mut out = CsvOut::create(dir.join(format!("{}_histogram.csv", cfg.name)), cfg, &header)?;
        for &t in &cfg.output.histogram_times {
            let table = histogram_at(cfg, records, t)?;
            let density = table.histogram.density();
            for (i, y) in table.histogram.centers().into_iter().enumerate() {
                let predicted = table.analytic.as_ref().map_or(String::new(), |a| num(a[i]));
                out.row(&[num(t), num(y), num(density[i]), predicted])?;
            }
        }
        files.push(out.finish()?);
    }
    Ok(files)
}

/// What a run produced.
#[derive(Clone, Debug)]
pub struct RunSummary {
    pub name: String,
    pub trajectories: usize,
    pub files: Vec<PathBuf>,
    /// Mean final populations `⟨n|ρ_sys|n⟩`.
    pub final_populations: Vec<f64>,
    pub final_field: C64,
    pub positivity_violations: usize,
    pub min_eigenvalue: f64,
}

impl std::fmt::Display for RunSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "experiment,{}", self.name)?;
        writeln!(f, "trajectories,{}", self.trajectories)?;
        for (n, p) in self.final_populations.iter().enumerate() {
            writeln!(f, "final_p{n},{p:.10}")?;
        }
        writeln!(f, "final_re_a,{:.10}", self.final_field.re)?;
        writeln!(f, "final_im_a,{:.10}", self.final_field.im)?;
        writeln!(f, "positivity_violations,{}", self.positivity_violations)?;
        writeln!(f, "min_eigenvalue,{:.3e}", self.min_eigenvalue)?;
        for file in &self.files {
            writeln!(f, "file,{}", file.display())?;
        }
        Ok(())
    }
}

/// Simulates `cfg` and writes its CSV files. The directory is `out_dir` if
/// given, else the configured one, else [`default_output_dir`].
pub fn run(cfg: &ExperimentConfig, out_dir: Option<&Path>) -> Result<RunSummary> {
    let records = simulate_config(cfg)?;
    let dir = out_dir
        .map(Path::to_path_buf)
        .or_else(|| cfg.output.dir.clone())
        .unwrap_or_else(default_output_dir);
    let files = write_outputs(cfg, &records, &dir)?;
    let mean = ensemble_mean(cfg, &records);
    let (_, final_populations, final_field) = mean.last().cloned().unwrap_or_default();
    Ok(RunSummary {
        name: cfg.name.clone(),
        trajectories: records.len(),
        files,
        final_populations,
        final_field,
        positivity_violations: records.iter().map(|r| r.diagnostics.positivity_violations).sum(),
        min_eigenvalue: records
            .iter()
            .map(|r| r.diagnostics.min_eigenvalue)
            .fold(f64::INFINITY, f64::min),
    })
}
