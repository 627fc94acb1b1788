//! Plain-text experiment configuration.
//!
//! ```text
//! # comment
//! preset = zeno_fig3
//! seed = 7
//!
//! [system]
//! g_s = 0.005          # trailing comments are allowed
//! ```
//!
//! Top-level keys come before the first `[section]` header. A key may also be
//! given as `section.key` at the top level, which is the form used by
//! command-line overrides.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::hilbert::C64;
use crate::params::{CavityParams, DriveSchedule};
use crate::sme::{
    CavityInit, Equation, Feedback, InitialState, Layout, LinearSampling, Scheme, SimulationConfig, SystemInit,
};

use super::presets;

/// One `key = value` assignment with its source line (0 for overrides).
#[derive(Clone, Debug, PartialEq)]
pub struct Entry {
    pub line: usize,
    pub section: Option<String>,
    pub key: String,
    pub value: String,
}

/// Splits a configuration text into entries, without interpreting keys.
pub fn parse_entries(text: &str) -> Result<Vec<Entry>> {
    let mut section = None;
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| Error::Config {
                    line,
                    message: format!("unterminated section header `{content}`"),
                })?
                .trim();
            if name.is_empty() || name.contains(['[', ']', '.']) {
                return Err(Error::Config {
                    line,
                    message: format!("invalid section name `{name}`"),
                });
            }
            section = Some(name.to_string());
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| Error::Config {
            line,
            message: format!("expected `key = value`, got `{content}`"),
        })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::Config {
                line,
                message: "empty key".into(),
            });
        }
        entries.push(Entry {
            line,
            section: section.clone(),
            key: key.to_string(),
            value: value.trim().to_string(),
        });
    }
    Ok(entries)
}

/// Parses `key=value` or `section.key=value` from the command line.
pub fn parse_override(text: &str) -> Result<Entry> {
    let (key, value) = text.split_once('=').ok_or_else(|| Error::Config {
        line: 0,
        message: format!("override `{text}` is not of the form key=value"),
    })?;
    Ok(Entry {
        line: 0,
        section: None,
        key: key.trim().to_string(),
        value: value.trim().to_string(),
    })
}

/// Where and what to write.
#[derive(Clone, Debug, PartialEq)]
pub struct OutputSpec {
    /// Overrides the default output directory when set.
    pub dir: Option<PathBuf>,
    /// Number of trajectories whose full time series are written.
    pub series: usize,
    /// Times at which the integrated record `y` is histogrammed.
    pub histogram_times: Vec<f64>,
    pub histogram_bins: usize,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            dir: None,
            series: 20,
            histogram_times: Vec::new(),
            histogram_bins: 80,
        }
    }
}

/// A fully resolved experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub preset: Option<String>,
    pub params: CavityParams,
    pub beta: C64,
    /// Probe switched off from this time on.
    pub beta_off: Option<f64>,
    pub equation: Equation,
    pub scheme: Scheme,
    pub sampling: LinearSampling,
    /// `None` picks the sector layout whenever it is exact.
    pub layout: Option<Layout>,
    pub initial: InitialState,
    pub trajectories: usize,
    pub seed: u64,
    pub t_end: f64,
    pub record_stride: usize,
    pub check_every: usize,
    pub feedback: Option<Feedback>,
    pub output: OutputSpec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let params = CavityParams::zeno_figure(0.0);
        ExperimentConfig {
            name: "custom".into(),
            preset: None,
            beta: params.beta.value_at(0.0),
            beta_off: None,
            params,
            equation: Equation::Nonlinear,
            scheme: Scheme::Milstein,
            sampling: LinearSampling::Ostensible,
            layout: None,
            initial: InitialState::default(),
            trajectories: 1,
            seed: 1,
            t_end: 20.0,
            record_stride: 10,
            check_every: 100,
            feedback: None,
            output: OutputSpec::default(),
        }
    }
}

const DEFAULT_FEEDBACK: Feedback = Feedback {
    target: 1,
    g_s_high: 0.05,
    g_s_low: 0.0,
    low: 0.2,
    high: 0.8,
};

impl ExperimentConfig {
    /// Parses a configuration text. A `preset` key supplies the defaults that
    /// the remaining keys override, wherever it appears.
    pub fn parse(text: &str) -> Result<Self> {
        Self::resolve(&parse_entries(text)?, &[])
    }

    /// Preset defaults, then `file` entries, then `overrides`.
    pub fn resolve(file: &[Entry], overrides: &[Entry]) -> Result<Self> {
        let preset = overrides
            .iter()
            .chain(file)
            .find(|e| e.section.is_none() && e.key == "preset");
        let mut cfg = match preset {
            Some(e) => presets::preset(&e.value).map_err(|err| Error::Config {
                line: e.line,
                message: err.to_string(),
            })?,
            None => ExperimentConfig::default(),
        };
        for e in file.iter().chain(overrides) {
            cfg.apply(e)?;
        }
        cfg.finish()?;
        Ok(cfg)
    }

    /// Applies one entry; errors carry the entry's line.
    pub fn apply(&mut self, entry: &Entry) -> Result<()> {
        let (section, key) = match (&entry.section, entry.key.split_once('.')) {
            (Some(s), None) => (s.as_str(), entry.key.as_str()),
            (None, Some((s, k))) => (s, k),
            (None, None) => ("", entry.key.as_str()),
            (Some(s), Some(_)) => {
                return Err(Error::Config {
                    line: entry.line,
                    message: format!("dotted key `{}` inside section [{s}]", entry.key),
                })
            }
        };
        self.set(section, key, &entry.value).map_err(|message| Error::Config {
            line: entry.line,
            message: if section.is_empty() {
                format!("`{key}`: {message}")
            } else {
                format!("`{section}.{key}`: {message}")
            },
        })
    }

    fn set(&mut self, section: &str, key: &str, v: &str) -> std::result::Result<(), String> {
        let p = &mut self.params;
        match (section, key) {
            ("", "preset") => self.preset = Some(v.to_string()),
            ("", "name") => {
                if v.is_empty() || !v.chars().all(|ch| ch.is_ascii_alphanumeric() || ch == '_' || ch == '-') {
                    return Err(format!("name must be non-empty and use [A-Za-z0-9_-], got `{v}`"));
                }
                self.name = v.to_string();
            }
            ("", "seed") => self.seed = parse_num(v)?,
            ("", "trajectories") => self.trajectories = parse_num(v)?,
            ("", "t_end") => self.t_end = parse_f64(v)?,

            ("cavity", "kappa1") => p.kappa1 = parse_f64(v)?,
            ("cavity", "kappa2") => p.kappa2 = parse_f64(v)?,
            ("cavity", "kappa_loss") => p.kappa_loss = parse_f64(v)?,
            ("cavity", "eta") => p.eta = parse_f64(v)?,
            ("cavity", "phi") => p.phi = parse_angle(v)?,
            ("cavity", "beta") => self.beta.re = parse_f64(v)?,
            ("cavity", "beta_im") => self.beta.im = parse_f64(v)?,
            ("cavity", "beta_off") => {
                self.beta_off = if v == "none" { None } else { Some(parse_f64(v)?) };
            }
            ("cavity", "detection") => p.detection = v.parse().map_err(|e: Error| e.to_string())?,
            ("cavity", "cutoff") => p.cutoff = parse_num(v)?,

            ("system", "atoms") => p.atoms = parse_num(v)?,
            ("system", "hamiltonian") => p.hamiltonian = v.parse().map_err(|e: Error| e.to_string())?,
            ("system", "g") => p.g = parse_f64(v)?,
            ("system", "g_s") => p.g_s = parse_f64(v)?,
            ("system", "initial") => self.initial.system = parse_system_init(v)?,
            ("system", "cavity_init") => self.initial.cavity = parse_cavity_init(v)?,

            ("integrator", "equation") => self.equation = v.parse().map_err(|e: Error| e.to_string())?,
            ("integrator", "scheme") => self.scheme = v.parse().map_err(|e: Error| e.to_string())?,
            ("integrator", "sampling") => self.sampling = v.parse().map_err(|e: Error| e.to_string())?,
            ("integrator", "dt") => p.dt = parse_f64(v)?,
            ("integrator", "layout") => {
                self.layout = if v == "auto" {
                    None
                } else {
                    Some(v.parse().map_err(|e: Error| e.to_string())?)
                };
            }
            ("integrator", "record_stride") => self.record_stride = parse_num(v)?,
            ("integrator", "check_every") => self.check_every = parse_num(v)?,

            ("feedback", "enabled") => match v {
                "true" => {
                    self.feedback.get_or_insert(DEFAULT_FEEDBACK);
                }
                "false" => self.feedback = None,
                _ => return Err(format!("expected true or false, got `{v}`")),
            },
            ("feedback", k) => {
                let fb = self.feedback.get_or_insert(DEFAULT_FEEDBACK);
                match k {
                    "target" => fb.target = parse_num(v)?,
                    "g_s_high" => fb.g_s_high = parse_f64(v)?,
                    "g_s_low" => fb.g_s_low = parse_f64(v)?,
                    "low" => fb.low = parse_f64(v)?,
                    "high" => fb.high = parse_f64(v)?,
                    _ => return Err("unknown key".into()),
                }
            }

            ("output", "dir") => self.output.dir = Some(PathBuf::from(v)),
            ("output", "series") => self.output.series = parse_num(v)?,
            ("output", "histogram_times") => {
                self.output.histogram_times = if v.is_empty() {
                    Vec::new()
                } else {
                    v.split(',')
                        .map(|s| parse_f64(s.trim()))
                        .collect::<std::result::Result<_, _>>()?
                };
            }
            ("output", "histogram_bins") => self.output.histogram_bins = parse_num(v)?,
            _ => return Err("unknown key".into()),
        }
        Ok(())
    }

    /// Rebuilds derived fields and checks cross-field constraints.
    fn finish(&mut self) -> Result<()> {
        self.params.beta = match self.beta_off {
            Some(t) => DriveSchedule::switched_off_at(self.beta, t),
            None => DriveSchedule::constant(self.beta),
        };
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.trajectories == 0 {
            return Err(Error::invalid("trajectories", "must be at least 1"));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(Error::invalid("t_end", format!("must be positive, got {}", self.t_end)));
        }
        if self.t_end < self.params.dt {
            return Err(Error::invalid("t_end", "shorter than one step"));
        }
        if self.record_stride == 0 || self.check_every == 0 {
            return Err(Error::invalid("record_stride", "strides must be at least 1"));
        }
        if let Some(fb) = &self.feedback {
            fb.validate()?;
        }
        if self.layout == Some(Layout::Sectors) && self.params.g_s != 0.0 {
            return Err(Error::invalid("layout", "sector layout needs g_s = 0"));
        }
        if self.output.histogram_bins == 0 {
            return Err(Error::invalid("histogram_bins", "must be at least 1"));
        }
        if let Some(t) = self
            .output
            .histogram_times
            .iter()
            .find(|t| !(**t > 0.0 && **t <= self.t_end))
        {
            return Err(Error::invalid(
                "histogram_times",
                format!("time {t} outside (0, t_end]"),
            ));
        }
        self.initial.system_amplitudes(self.params.atoms)?;
        Ok(())
    }

    pub fn simulation(&self) -> SimulationConfig {
        let mut sim = SimulationConfig::new(self.equation, self.scheme, self.t_end)
            .with_initial(self.initial.clone())
            .with_stride(self.record_stride)
            .with_sampling(self.sampling);
        sim.check_every = self.check_every;
        if let Some(fb) = self.feedback {
            sim = sim.with_feedback(fb);
        }
        sim
    }

    /// The resolved configuration in the input format; parsing it back gives
    /// the same configuration.
    pub fn to_text(&self) -> String {
        let p = &self.params;
        let mut s = String::new();
        let kv = |s: &mut String, k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv(&mut s, "name", self.name.clone());
        if let Some(preset) = &self.preset {
            kv(&mut s, "preset", preset.clone());
        }
        kv(&mut s, "seed", self.seed.to_string());
        kv(&mut s, "trajectories", self.trajectories.to_string());
        kv(&mut s, "t_end", fmt_f64(self.t_end));
        s.push_str("\n[cavity]\n");
        kv(&mut s, "kappa1", fmt_f64(p.kappa1));
        kv(&mut s, "kappa2", fmt_f64(p.kappa2));
        kv(&mut s, "kappa_loss", fmt_f64(p.kappa_loss));
        kv(&mut s, "eta", fmt_f64(p.eta));
        kv(&mut s, "phi", fmt_f64(p.phi));
        kv(&mut s, "beta", fmt_f64(self.beta.re));
        kv(&mut s, "beta_im", fmt_f64(self.beta.im));
        kv(&mut s, "beta_off", self.beta_off.map_or("none".into(), fmt_f64));
        kv(&mut s, "detection", p.detection.to_string());
        kv(&mut s, "cutoff", p.cutoff.to_string());
        s.push_str("\n[system]\n");
        kv(&mut s, "atoms", p.atoms.to_string());
        kv(&mut s, "hamiltonian", p.hamiltonian.to_string());
        kv(&mut s, "g", fmt_f64(p.g));
        kv(&mut s, "g_s", fmt_f64(p.g_s));
        kv(&mut s, "initial", fmt_system_init(&self.initial.system));
        kv(&mut s, "cavity_init", fmt_cavity_init(&self.initial.cavity));
        s.push_str("\n[integrator]\n");
        kv(&mut s, "equation", self.equation.to_string());
        kv(&mut s, "scheme", self.scheme.to_string());
        kv(&mut s, "sampling", self.sampling.to_string());
        kv(&mut s, "dt", fmt_f64(p.dt));
        kv(&mut s, "layout", self.layout.map_or("auto".into(), |l| l.to_string()));
        kv(&mut s, "record_stride", self.record_stride.to_string());
        kv(&mut s, "check_every", self.check_every.to_string());
        s.push_str("\n[feedback]\n");
        match &self.feedback {
            None => kv(&mut s, "enabled", "false".into()),
            Some(fb) => {
                kv(&mut s, "enabled", "true".into());
                kv(&mut s, "target", fb.target.to_string());
                kv(&mut s, "g_s_high", fmt_f64(fb.g_s_high));
                kv(&mut s, "g_s_low", fmt_f64(fb.g_s_low));
                kv(&mut s, "low", fmt_f64(fb.low));
                kv(&mut s, "high", fmt_f64(fb.high));
            }
        }
        s.push_str("\n[output]\n");
        if let Some(dir) = &self.output.dir {
            kv(&mut s, "dir", dir.display().to_string());
        }
        kv(&mut s, "series", self.output.series.to_string());
        let times: Vec<String> = self.output.histogram_times.iter().map(|t| fmt_f64(*t)).collect();
        kv(&mut s, "histogram_times", times.join(", "));
        kv(&mut s, "histogram_bins", self.output.histogram_bins.to_string());
        s
    }
}

/// Shortest decimal that parses back to the same `f64`.
pub(crate) fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

fn parse_f64(v: &str) -> std::result::Result<f64, String> {
    let x: f64 = v.parse().map_err(|_| format!("expected a number, got `{v}`"))?;
    if !x.is_finite() {
        return Err(format!("expected a finite number, got `{v}`"));
    }
    Ok(x)
}

fn parse_num<T: std::str::FromStr>(v: &str) -> std::result::Result<T, String> {
    v.parse()
        .map_err(|_| format!("expected a non-negative integer, got `{v}`"))
}

/// A number, or a multiple of `pi` such as `-pi/2`, `0.25*pi`, `pi`.
fn parse_angle(v: &str) -> std::result::Result<f64, String> {
    let s: String = v.chars().filter(|ch| !ch.is_whitespace()).collect();
    if !s.contains("pi") {
        return parse_f64(&s);
    }
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => (-1.0, rest),
        None => (1.0, s.as_str()),
    };
    let bad = || format!("cannot read angle `{v}`; use a number or forms like pi, -pi/2, 0.5*pi");
    let (factor, rest) = match body.split_once("*pi") {
        Some((f, rest)) => (f.parse::<f64>().map_err(|_| bad())?, rest),
        None => (1.0, body.strip_prefix("pi").ok_or_else(bad)?),
    };
    let divisor = match rest.strip_prefix('/') {
        Some(d) => d.parse::<f64>().map_err(|_| bad())?,
        None if rest.is_empty() => 1.0,
        None => return Err(bad()),
    };
    Ok(sign * factor * PI / divisor)
}

fn parse_system_init(v: &str) -> std::result::Result<SystemInit, String> {
    if v == "binomial" {
        return Ok(SystemInit::Binomial);
    }
    if let Some(n) = v.strip_prefix("dicke:") {
        return Ok(SystemInit::Dicke(parse_num(n.trim())?));
    }
    if let Some(list) = v.strip_prefix("amplitudes:") {
        let amps = list
            .split(',')
            .map(|a| parse_f64(a.trim()).map(|x| C64::new(x, 0.0)))
            .collect::<std::result::Result<_, _>>()?;
        return Ok(SystemInit::Amplitudes(amps));
    }
    Err(format!(
        "expected `dicke:<n>`, `binomial` or `amplitudes:<a0>, <a1>, ...`, got `{v}`"
    ))
}

fn fmt_system_init(s: &SystemInit) -> String {
    match s {
        SystemInit::Dicke(n) => format!("dicke:{n}"),
        SystemInit::Binomial => "binomial".into(),
        SystemInit::Amplitudes(a) => {
            let parts: Vec<String> = a.iter().map(|z| fmt_f64(z.re)).collect();
            format!("amplitudes:{}", parts.join(", "))
        }
    }
}

fn parse_cavity_init(v: &str) -> std::result::Result<CavityInit, String> {
    match v {
        "vacuum" => Ok(CavityInit::Vacuum),
        "steady" => Ok(CavityInit::Steady),
        _ => {
            let rest = v
                .strip_prefix("coherent:")
                .ok_or_else(|| format!("expected `vacuum`, `steady` or `coherent:<re>[, <im>]`, got `{v}`"))?;
            let mut parts = rest.split(',').map(|x| parse_f64(x.trim()));
            let re = parts.next().transpose()?.unwrap_or(0.0);
            let im = parts.next().transpose()?.unwrap_or(0.0);
            if parts.next().is_some() {
                return Err("coherent amplitude takes at most two numbers".into());
            }
            Ok(CavityInit::Coherent(C64::new(re, im)))
        }
    }
}

fn fmt_cavity_init(c: &CavityInit) -> String {
    match c {
        CavityInit::Vacuum => "vacuum".into(),
        CavityInit::Steady => "steady".into(),
        CavityInit::Coherent(z) => format!("coherent:{}, {}", fmt_f64(z.re), fmt_f64(z.im)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::HamiltonianKind;

    #[test]
    fn parses_sections_and_comments() {
        let text = "\
# demo
name = demo
seed = 42 # trailing

[system]
atoms = 2
hamiltonian = shifted
initial = binomial

[cavity]
phi = -pi/2
beta = 0.5
beta_off = 200
";
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!(cfg.name, "demo");
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.params.atoms, 2);
        assert_eq!(cfg.params.hamiltonian, HamiltonianKind::Shifted);
        assert!((cfg.params.phi + PI / 2.0).abs() < 1e-15);
        assert_eq!(cfg.params.beta.value_at(199.0), C64::new(0.5, 0.0));
        assert_eq!(cfg.params.beta.value_at(200.0), C64::new(0.0, 0.0));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let cases = [
            ("seed = 1\n[system]\nbogus = 3\n", 3),
            ("seed = 1\n\n[cavity\n", 3),
            ("seed = x\n", 1),
            ("just words\n", 1),
            ("[cavity]\nphi = pi/zero\n", 2),
            ("preset = nope\n", 1),
        ];
        for (text, line) in cases {
            match ExperimentConfig::parse(text) {
                Err(Error::Config { line: l, .. }) => assert_eq!(l, line, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn validation_errors_surface() {
        let err = ExperimentConfig::parse("[cavity]\nkappa1 = 0.7\n").unwrap_err();
        assert!(matches!(err, Error::InvalidParameter { name: "kappa1", .. }), "{err}");
        let err = ExperimentConfig::parse("[feedback]\nlow = 0.9\n").unwrap_err();
        assert!(matches!(err, Error::InvalidParameter { .. }), "{err}");
    }

    #[test]
    fn precedence_overrides_file_overrides_preset() {
        let file = parse_entries("preset = zeno_fig3\nseed = 5\n[system]\ng_s = 0.005\n").unwrap();
        let cfg = ExperimentConfig::resolve(&file, &[]).unwrap();
        assert_eq!(cfg.params.g_s, 0.005);
        assert_eq!(cfg.seed, 5);
        assert_eq!(cfg.trajectories, presets::preset("zeno_fig3").unwrap().trajectories);
        let flags = [
            parse_override("system.g_s=0.05").unwrap(),
            parse_override("seed=9").unwrap(),
        ];
        let cfg = ExperimentConfig::resolve(&file, &flags).unwrap();
        assert_eq!(cfg.params.g_s, 0.05);
        assert_eq!(cfg.seed, 9);
    }

    #[test]
    fn text_round_trip_for_every_preset() {
        for p in presets::all() {
            let text = p.config.to_text();
            let back = ExperimentConfig::parse(&text).unwrap();
            assert_eq!(back, p.config, "{}", p.name);
        }
    }

    #[test]
    fn angles() {
        assert_eq!(parse_angle("0.3").unwrap(), 0.3);
        assert_eq!(parse_angle("pi").unwrap(), PI);
        assert_eq!(parse_angle("-pi/2").unwrap(), -PI / 2.0);
        assert_eq!(parse_angle("0.5*pi").unwrap(), PI / 2.0);
        assert!(parse_angle("pie").is_err());
    }
}
