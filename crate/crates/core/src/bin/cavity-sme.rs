use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cavity_sme::analytic::{local_maxima, populations, sensitivity_rate, OutcomeDensity, RateApprox};
use cavity_sme::experiment::{self, exit_code, parse_entries, parse_override, presets, Entry, ExperimentConfig};
use cavity_sme::homodyne::{closed_form_deviation, u_pq_gaussian, HomodyneKernel, UPDATE_PAIRS};
use cavity_sme::{Error, Result};

/// Stochastic master equation trajectories for a probed cavity.
///
/// Settings are resolved as preset defaults < configuration file < flags.
/// CSV files go to --out, else the config's `output.dir`, else
/// $CAVITY_SME_OUTPUT, else ./output.
#[derive(Parser)]
#[command(name = "cavity-sme", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a configuration file and/or a preset.
    Simulate {
        /// Configuration file.
        config: Option<PathBuf>,
        /// Start from this preset (overrides a `preset` key in the file).
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trajectories: Option<usize>,
        #[arg(long)]
        t_end: Option<f64>,
        /// Any key, as `section.key=value`; repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Inspect the built-in presets.
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
    /// Finite-oscillator homodyne readout amplitudes.
    Oracle {
        #[command(subcommand)]
        action: OracleAction,
    },
    /// Closed-form predictions.
    Analytic {
        #[command(subcommand)]
        action: AnalyticAction,
    },
}

#[derive(Subcommand)]
enum PresetAction {
    /// Names and one-line descriptions.
    List,
    /// The full resolved configuration of one preset.
    Show { name: String },
}

#[derive(Subcommand)]
enum OracleAction {
    /// Exact and strong-oscillator u_pq(k) for the six update pairs.
    Upq {
        #[arg(long)]
        mu: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        phi: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum AnalyticAction {
    /// Outcome density and conditioned populations for the N = 4 collapse.
    Fig2 {
        #[arg(long)]
        r2t: f64,
        #[arg(long, default_value_t = 401)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Simulate {
            config,
            preset,
            out,
            seed,
            trajectories,
            t_end,
            set,
        } => {
            let file = match &config {
                Some(path) => parse_entries(&fs::read_to_string(path)?)?,
                None => Vec::new(),
            };
            let mut flags: Vec<Entry> = Vec::new();
            let mut flag = |k: &str, v: String| {
                flags.push(Entry {
                    line: 0,
                    section: None,
                    key: k.into(),
                    value: v,
                })
            };
            if let Some(p) = preset {
                flag("preset", p);
            }
            if let Some(s) = seed {
                flag("seed", s.to_string());
            }
            if let Some(n) = trajectories {
                flag("trajectories", n.to_string());
            }
            if let Some(t) = t_end {
                flag("t_end", t.to_string());
            }
            for s in &set {
                flags.push(parse_override(s)?);
            }
            if config.is_none() && !flags.iter().any(|e| e.key == "preset") {
                return Err(Error::Config {
                    line: 0,
                    message: "give a configuration file or --preset".into(),
                });
            }
            let cfg = ExperimentConfig::resolve(&file, &flags)?;
            let report = cfg.params.validity();
            if !report.all_ok() {
                log::warn!("continuum conditions: {report}");
            }
            let summary = experiment::run(&cfg, out.as_deref())?;
            print!("{summary}");
            Ok(())
        }
        Command::Presets { action } => {
            match action {
                PresetAction::List => {
                    for p in presets::all() {
                        println!("{:<16} {}", p.name, p.summary);
                    }
                }
                PresetAction::Show { name } => print!("{}", presets::preset(&name)?.to_text()),
            }
            Ok(())
        }
        Command::Oracle {
            action: OracleAction::Upq { mu, phi, out },
        } => {
            let kernel = HomodyneKernel::exact(mu, phi)?;
            let mut text = String::new();
            text.push_str(&format!(
                "# mu = {mu}\n# phi = {phi}\n# lo_cutoff = {}\n",
                kernel.lo_cutoff
            ));
            text.push_str(&format!("# tail_mass = {:.6e}\n", kernel.tail_mass));
            text.push_str(&format!(
                "# max_relative_deviation = {:.6e}\n",
                closed_form_deviation(&kernel)?
            ));
            let mut header = vec!["k".to_string()];
            for (p, q) in UPDATE_PAIRS {
                for part in ["exact_re", "exact_im", "limit_re", "limit_im"] {
                    header.push(format!("u{p}{q}_{part}"));
                }
            }
            text.push_str(&header.join(","));
            text.push('\n');
            for k in kernel.k_range() {
                let mut row = vec![k.to_string()];
                for (p, q) in UPDATE_PAIRS {
                    let e = kernel.u(p, q, k);
                    let g = u_pq_gaussian(p, q, k, mu, phi)?;
                    row.extend([e.re, e.im, g.re, g.im].map(|x| format!("{x:.16e}")));
                }
                text.push_str(&row.join(","));
                text.push('\n');
            }
            emit(&text, out)
        }
        Command::Analytic {
            action: AnalyticAction::Fig2 { r2t, points, out },
        } => {
            if r2t.is_nan() || r2t <= 0.0 || points < 2 {
                return Err(Error::Config {
                    line: 0,
                    message: "need r2t > 0 and at least 2 points".into(),
                });
            }
            let cfg = presets::preset("dicke_fig2")?;
            let r = sensitivity_rate(1, &cfg.params, RateApprox::SmallG)?;
            let atoms = cfg.params.atoms;
            let rates: Vec<f64> = (0..=atoms).map(|n| r * n as f64).collect();
            let c0 = cavity_sme::analytic::binomial_weights(atoms);
            let t = r2t / (r * r);
            let density = OutcomeDensity::new(t, &c0, &rates)?;
            let (lo, hi) = density.support(4.0);
            let ys: Vec<f64> = (0..points)
                .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
                .collect();
            let pdf: Vec<f64> = ys.iter().map(|&y| density.pdf(y)).collect();
            let mut text = format!(
                "# r = {r}\n# r2t = {r2t}\n# t = {t}\n# peaks = {}\n",
                local_maxima(&pdf).len()
            );
            let mut header = vec!["y".to_string(), "density".to_string()];
            header.extend((0..=atoms).map(|n| format!("p{n}")));
            text.push_str(&header.join(","));
            text.push('\n');
            for (y, p) in ys.iter().zip(&pdf) {
                let mut row = vec![format!("{y:.16e}"), format!("{p:.16e}")];
                row.extend(populations(t, *y, &c0, &rates)?.iter().map(|x| format!("{x:.16e}")));
                text.push_str(&row.join(","));
                text.push('\n');
            }
            emit(&text, out)
        }
    }
}

fn emit(text: &str, out: Option<PathBuf>) -> Result<()> {
    match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(&path, text)?;
            println!("file,{}", path.display());
        }
        None => match io::stdout().lock().write_all(text.as_bytes()) {
            Err(e) if e.kind() == io::ErrorKind::BrokenPipe => {}
            other => other?,
        },
    }
    Ok(())
}
