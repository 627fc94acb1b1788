//! Named starting configurations.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::hilbert::C64;
use crate::params::{CavityParams, Detection, DriveSchedule, HamiltonianKind};
use crate::sme::{CavityInit, Equation, Feedback, InitialState, LinearSampling, SystemInit};

use super::config::{ExperimentConfig, OutputSpec};

pub struct Preset {
    pub name: &'static str,
    pub summary: &'static str,
    pub config: ExperimentConfig,
}

fn base(name: &str, params: CavityParams) -> ExperimentConfig {
    ExperimentConfig {
        name: name.into(),
        preset: Some(name.into()),
        beta: params.beta.value_at(0.0),
        params,
        ..ExperimentConfig::default()
    }
}

fn with_beta(mut cfg: ExperimentConfig) -> ExperimentConfig {
    cfg.params.beta = match cfg.beta_off {
        Some(t) => DriveSchedule::switched_off_at(cfg.beta, t),
        None => DriveSchedule::constant(cfg.beta),
    };
    cfg
}

fn empty_cavity() -> ExperimentConfig {
    let mut p = CavityParams::zeno_figure(0.0);
    p.g = 0.0;
    p.cutoff = 6;
    p.hamiltonian = HamiltonianKind::Dicke;
    ExperimentConfig {
        equation: Equation::Sse,
        t_end: 20.0,
        record_stride: 10,
        ..base("empty_cavity", p)
    }
}

/// `N = 4`, binomial atoms, cavity at its conditional steady state; the
/// small-coupling rate is `r = 8βg√(κ₁κ₂η)/κ² = 0.2`, so `r²t = 1, 10, 50`
/// at `t = 25, 250, 1250`.
fn dicke_fig2() -> ExperimentConfig {
    let p = CavityParams {
        beta: DriveSchedule::constant(C64::new(0.5, 0.0)),
        g: 0.1,
        g_s: 0.0,
        atoms: 4,
        cutoff: 5,
        dt: 0.02,
        hamiltonian: HamiltonianKind::Dicke,
        ..CavityParams::zeno_figure(0.0)
    };
    ExperimentConfig {
        equation: Equation::Linear,
        sampling: LinearSampling::Physical,
        initial: InitialState::new(SystemInit::Binomial, CavityInit::Steady),
        trajectories: 10_000,
        t_end: 1250.0,
        record_stride: 250,
        output: OutputSpec {
            series: 10,
            histogram_times: vec![25.0, 250.0, 1250.0],
            ..OutputSpec::default()
        },
        ..base("dicke_fig2", p)
    }
}

fn zeno_fig3() -> ExperimentConfig {
    ExperimentConfig {
        trajectories: 20,
        t_end: 2000.0,
        record_stride: 100,
        ..base("zeno_fig3", CavityParams::zeno_figure(0.001))
    }
}

fn jumps_fig4() -> ExperimentConfig {
    let p = CavityParams {
        dt: 0.02,
        ..CavityParams::zeno_figure(0.001)
    };
    ExperimentConfig {
        trajectories: 20,
        t_end: 50_000.0,
        record_stride: 500,
        ..base("jumps_fig4", p)
    }
}

/// `N = 2` with the symmetric shift, lossless single-port probing of the
/// `x` quadrature; the probe is switched off at `t = 400` and the cavity
/// rings down with the detector on.
fn superposition() -> ExperimentConfig {
    let p = CavityParams {
        kappa1: 1.0,
        kappa2: 0.0,
        kappa_loss: 0.0,
        eta: 1.0,
        phi: -PI / 2.0,
        beta: DriveSchedule::constant(C64::new(0.5, 0.0)),
        g: 0.25,
        g_s: 0.0,
        atoms: 2,
        cutoff: 8,
        dt: 0.01,
        hamiltonian: HamiltonianKind::Shifted,
        detection: Detection::Reflected,
    };
    with_beta(ExperimentConfig {
        equation: Equation::Sse,
        initial: InitialState::new(SystemInit::Binomial, CavityInit::Vacuum),
        beta_off: Some(400.0),
        trajectories: 1000,
        t_end: 440.0,
        record_stride: 100,
        ..base("superposition", p)
    })
}

fn feedback() -> ExperimentConfig {
    ExperimentConfig {
        trajectories: 20,
        t_end: 2000.0,
        record_stride: 100,
        feedback: Some(Feedback {
            target: 1,
            g_s_high: 0.05,
            g_s_low: 0.0,
            low: 0.2,
            high: 0.8,
        }),
        ..base("feedback", CavityParams::zeno_figure(0.0))
    }
}

fn photon_counting() -> ExperimentConfig {
    ExperimentConfig {
        equation: Equation::Counting,
        trajectories: 20,
        t_end: 2000.0,
        record_stride: 100,
        ..base("photon_counting", CavityParams::zeno_figure(0.001))
    }
}

pub fn all() -> Vec<Preset> {
    vec![
        Preset {
            name: "empty_cavity",
            summary: "empty cavity filled from vacuum by the probe (pure-state equation)",
            config: empty_cavity(),
        },
        Preset {
            name: "dicke_fig2",
            summary: "N = 4 Dicke-state collapse, histograms of y at r^2 t = 1, 10, 50",
            config: dicke_fig2(),
        },
        Preset {
            name: "zeno_fig3",
            summary: "one atom, weak coherent drive g_s = 0.001 inhibited by the measurement",
            config: zeno_fig3(),
        },
        Preset {
            name: "jumps_fig4",
            summary: "one atom, quantum jumps between |0> and |1> over g_s t up to 50",
            config: jumps_fig4(),
        },
        Preset {
            name: "superposition",
            summary: "N = 2, symmetric shift, x-quadrature probing then ring-down",
            config: superposition(),
        },
        Preset {
            name: "feedback",
            summary: "bang-bang control of g_s stabilizing |1>",
            config: feedback(),
        },
        Preset {
            name: "photon_counting",
            summary: "zeno configuration with photon counting instead of homodyne detection",
            config: photon_counting(),
        },
    ]
}

pub fn names() -> Vec<&'static str> {
    all().into_iter().map(|p| p.name).collect()
}

pub fn preset(name: &str) -> Result<ExperimentConfig> {
    all()
        .into_iter()
        .find(|p| p.name == name)
        .map(|p| p.config)
        .ok_or_else(|| {
            Error::invalid(
                "preset",
                format!("unknown preset `{name}`, expected one of: {}", names().join(", ")),
            )
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_is_valid() {
        for p in all() {
            p.config.validate().unwrap_or_else(|e| panic!("{}: {e}", p.name));
            let report = p.config.params.validity();
            assert!(report.all_ok(), "{}: {report}", p.name);
            assert_eq!(p.config.name, p.name);
        }
    }

    #[test]
    fn fig2_rate() {
        let cfg = preset("dicke_fig2").unwrap();
        let r = crate::analytic::sensitivity_rate(1, &cfg.params, crate::analytic::RateApprox::SmallG).unwrap();
        assert!((r - 0.2).abs() < 1e-12);
    }
}
