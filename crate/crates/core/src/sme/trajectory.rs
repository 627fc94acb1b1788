use log::warn;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hilbert::{c, min_eigenvalue, partial_trace, projector, CMatrix, CVector, Keep, C64};
use crate::noise::{trajectory_seed, NoiseStream};

use super::model::{InitialState, Layout, Model};
use super::stepper::Stepper;
use super::{Equation, LinearSampling, Scheme};

/// Smallest eigenvalue tolerated before a step is reported as a positivity
/// violation.
pub const POSITIVITY_TOLERANCE: f64 = 1e-6;

/// Largest population of the top Fock state tolerated without a warning.
pub const CUTOFF_MONITOR: f64 = 1e-6;

/// Bang-bang control of `g_s` on the population of one Dicke state, with
/// hysteresis between `low` and `high`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Feedback {
    pub target: usize,
    pub g_s_high: f64,
    pub g_s_low: f64,
    pub low: f64,
    pub high: f64,
}

impl Feedback {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.low && self.low < self.high && self.high < 1.0) {
            return Err(Error::invalid(
                "feedback",
                format!(
                    "thresholds must satisfy 0 < low < high < 1, got ({}, {})",
                    self.low, self.high
                ),
            ));
        }
        if !self.g_s_high.is_finite() || !self.g_s_low.is_finite() {
            return Err(Error::invalid("feedback", "g_s levels must be finite"));
        }
        Ok(())
    }

    /// `g_s` for the next step given the current target population.
    pub fn next_g_s(&self, p_target: f64, current: f64) -> f64 {
        if p_target < self.low {
            self.g_s_high
        } else if p_target > self.high {
            self.g_s_low
        } else {
            current
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationConfig {
    pub equation: Equation,
    pub scheme: Scheme,
    pub t_end: f64,
    /// Record every this many steps (the last step is always recorded).
    pub record_stride: usize,
    pub initial: InitialState,
    pub sampling: LinearSampling,
    /// Full eigenvalue check every this many steps.
    pub check_every: usize,
    pub feedback: Option<Feedback>,
}

impl SimulationConfig {
    pub fn new(equation: Equation, scheme: Scheme, t_end: f64) -> Self {
        SimulationConfig {
            equation,
            scheme,
            t_end,
            record_stride: 1,
            initial: InitialState::default(),
            sampling: LinearSampling::Ostensible,
            check_every: 100,
            feedback: None,
        }
    }

    pub fn with_initial(mut self, initial: InitialState) -> Self {
        self.initial = initial;
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.record_stride = stride;
        self
    }

    pub fn with_sampling(mut self, sampling: LinearSampling) -> Self {
        self.sampling = sampling;
        self
    }

    pub fn with_feedback(mut self, feedback: Feedback) -> Self {
        self.feedback = Some(feedback);
        self
    }

    pub fn steps(&self, dt: f64) -> usize {
        (self.t_end / dt).round() as usize
    }
}

/// Health of one trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostics {
    pub steps: usize,
    /// Steps on which the full spectrum was computed.
    pub checked_steps: usize,
    pub min_eigenvalue: f64,
    pub positivity_violations: usize,
    /// `max |Tr ρ − 1|` before renormalization (normalized schemes,
    /// excluding click steps).
    pub max_trace_drift: f64,
    /// Largest population of the top Fock state seen on a checked step.
    pub max_cutoff_population: f64,
    pub clicks: usize,
}

impl Default for Diagnostics {
    fn default() -> Self {
        Diagnostics {
            steps: 0,
            checked_steps: 0,
            min_eigenvalue: f64::INFINITY,
            positivity_violations: 0,
            max_trace_drift: 0.0,
            max_cutoff_population: 0.0,
            clicks: 0,
        }
    }
}

/// Time series for one noise realization.
///
/// `increments[i]` is the record increment accumulated since the previous
/// sample (`dy`, or the number of clicks), `y[i]` its running sum.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRecord {
    pub seed: u64,
    pub times: Vec<f64>,
    pub increments: Vec<f64>,
    pub y: Vec<f64>,
    /// `populations[i][n] = ⟨n|ρ_sys|n⟩`.
    pub populations: Vec<Vec<f64>>,
    pub field: Vec<C64>,
    /// `Tr ρ²` of the joint state; NaN in the sector layout.
    pub purity: Vec<f64>,
    /// `Tr ρ̃` for the linear equation, 1 otherwise.
    pub weight: Vec<f64>,
    pub g_s: Vec<f64>,
    /// Reduced atomic state at the end (diagonal only in the sector layout).
    pub final_system: CMatrix,
    pub diagnostics: Diagnostics,
}

impl TrajectoryRecord {
    pub fn final_y(&self) -> f64 {
        *self.y.last().unwrap_or(&0.0)
    }

    pub fn final_weight(&self) -> f64 {
        *self.weight.last().unwrap_or(&1.0)
    }

    pub fn population_series(&self, n: usize) -> Vec<f64> {
        self.populations.iter().map(|p| p[n]).collect()
    }
}

enum State {
    Blocks(Vec<CMatrix>),
    Ket(CVector),
}

struct Observation {
    populations: Vec<f64>,
    field: C64,
    purity: f64,
    cutoff: f64,
    trace: f64,
}

fn observe(model: &Model, state: &State) -> Observation {
    let space = model.space;
    let dc = space.fock.dim();
    let ds = space.spin.dim();
    match state {
        State::Ket(psi) => {
            let populations = (0..ds)
                .map(|n| (0..dc).map(|p| psi[n * dc + p].norm_sqr()).sum())
                .collect();
            let mut ap = CVector::zeros(psi.len());
            model.a.mul_vec_into(psi.as_slice(), ap.as_mut_slice());
            Observation {
                populations,
                field: psi.dotc(&ap),
                purity: psi.norm_squared().powi(2),
                cutoff: (0..ds).map(|n| psi[n * dc + dc - 1].norm_sqr()).sum(),
                trace: 1.0,
            }
        }
        State::Blocks(blocks) => {
            let trace: f64 = blocks
                .iter()
                .map(|b| b.diagonal().iter().map(|z| z.re).sum::<f64>())
                .sum();
            let field: C64 = blocks.iter().map(|b| model.a.trace_product(b)).sum::<C64>() / trace;
            match model.layout() {
                Layout::Joint => {
                    let rho = &blocks[0];
                    let populations = (0..ds)
                        .map(|n| (0..dc).map(|p| rho[(n * dc + p, n * dc + p)].re).sum::<f64>() / trace)
                        .collect();
                    Observation {
                        populations,
                        field,
                        purity: rho.iter().map(|z| z.norm_sqr()).sum::<f64>() / (trace * trace),
                        cutoff: (0..ds).map(|n| rho[(n * dc + dc - 1, n * dc + dc - 1)].re).sum::<f64>() / trace,
                        trace,
                    }
                }
                Layout::Sectors => Observation {
                    populations: blocks
                        .iter()
                        .map(|b| b.diagonal().iter().map(|z| z.re).sum::<f64>() / trace)
                        .collect(),
                    field,
                    purity: f64::NAN,
                    cutoff: blocks.iter().map(|b| b[(dc - 1, dc - 1)].re).sum::<f64>() / trace,
                    trace,
                },
            }
        }
    }
}

fn target_population(model: &Model, state: &State, n: usize) -> f64 {
    let dc = model.space.fock.dim();
    match state {
        State::Ket(psi) => (0..dc).map(|p| psi[n * dc + p].norm_sqr()).sum(),
        State::Blocks(blocks) => match model.layout() {
            Layout::Joint => (0..dc).map(|p| blocks[0][(n * dc + p, n * dc + p)].re).sum(),
            Layout::Sectors => blocks[n].diagonal().iter().map(|z| z.re).sum(),
        },
    }
}

fn min_eigenvalue_of(state: &State, trace: f64) -> f64 {
    match state {
        State::Ket(_) => 0.0,
        State::Blocks(blocks) => blocks
            .iter()
            .map(|b| min_eigenvalue(b) / trace)
            .fold(f64::INFINITY, f64::min),
    }
}

fn final_system(model: &Model, state: &State) -> Result<CMatrix> {
    Ok(match state {
        State::Ket(psi) => partial_trace(&projector(psi), model.space, Keep::System)?,
        State::Blocks(blocks) => match model.layout() {
            Layout::Joint => {
                let rho = &blocks[0];
                let tr: f64 = rho.diagonal().iter().map(|z| z.re).sum();
                partial_trace(rho, model.space, Keep::System)? / c(tr, 0.0)
            }
            Layout::Sectors => {
                let traces: Vec<f64> = blocks.iter().map(|b| b.diagonal().iter().map(|z| z.re).sum()).collect();
                let total: f64 = traces.iter().sum();
                CMatrix::from_diagonal(&CVector::from_iterator(
                    traces.len(),
                    traces.iter().map(|t| c(t / total, 0.0)),
                ))
            }
        },
    })
}

/// One trajectory with per-trajectory seed `seed`.
pub fn simulate(model: &Model, config: &SimulationConfig, seed: u64) -> Result<TrajectoryRecord> {
    simulate_with_noise(model, config, &mut NoiseStream::new(seed))
}

/// One trajectory drawing from an explicit stream. Step `i` consumes draw
/// `i` (one Gaussian, or one uniform for counting), so runs that differ only
/// in physical parameters share their noise realization.
pub fn simulate_with_noise(
    model: &Model,
    config: &SimulationConfig,
    noise: &mut NoiseStream,
) -> Result<TrajectoryRecord> {
    let params = &model.params;
    let dt = params.dt;
    if !(config.t_end > 0.0) {
        return Err(Error::invalid(
            "t_end",
            format!("must be positive, got {}", config.t_end),
        ));
    }
    if config.record_stride == 0 {
        return Err(Error::invalid("record_stride", "must be at least 1"));
    }
    let steps = config.steps(dt);
    if steps == 0 {
        return Err(Error::invalid(
            "t_end",
            format!("t_end = {} is shorter than dt = {dt}", config.t_end),
        ));
    }
    if let Some(fb) = &config.feedback {
        fb.validate()?;
        if fb.target > params.atoms {
            return Err(Error::invalid(
                "feedback",
                format!("target |{}⟩ exceeds N = {}", fb.target, params.atoms),
            ));
        }
    }
    let mut stepper = Stepper::new(model);
    if config.feedback.is_some() && !model.supports_coherent_drive() {
        return Err(Error::invalid(
            "feedback",
            "feedback needs the zeno Hamiltonian on the joint layout",
        ));
    }
    let mut state = match config.equation {
        Equation::Sse => {
            if model.layout() != Layout::Joint {
                return Err(Error::invalid(
                    "layout",
                    "the pure-state equation needs the joint layout",
                ));
            }
            super::stepper::check_pure_state_config(params)?;
            State::Ket(config.initial.ket(params)?)
        }
        _ => State::Blocks(model.initial_blocks(&config.initial)?),
    };

    let seed = noise.seed();
    let capacity = steps / config.record_stride + 2;
    let mut rec = TrajectoryRecord {
        seed,
        times: Vec::with_capacity(capacity),
        increments: Vec::with_capacity(capacity),
        y: Vec::with_capacity(capacity),
        populations: Vec::with_capacity(capacity),
        field: Vec::with_capacity(capacity),
        purity: Vec::with_capacity(capacity),
        weight: Vec::with_capacity(capacity),
        g_s: Vec::with_capacity(capacity),
        final_system: CMatrix::zeros(0, 0),
        diagnostics: Diagnostics::default(),
    };
    let mut y = 0.0;
    let mut pending = 0.0;
    let mut log_weight = 0.0;
    let physical = config.sampling == LinearSampling::Physical;
    let push = |rec: &mut TrajectoryRecord, t: f64, y: f64, inc: f64, weight: f64, g_s: f64, obs: Observation| {
        rec.times.push(t);
        rec.increments.push(inc);
        rec.y.push(y);
        rec.populations.push(obs.populations);
        rec.field.push(obs.field);
        rec.purity.push(obs.purity);
        rec.weight.push(weight);
        rec.g_s.push(g_s);
    };
    let obs = observe(model, &state);
    push(&mut rec, 0.0, 0.0, 0.0, obs.trace, stepper.g_s(), obs);

    for i in 0..steps {
        let t = i as f64 * dt;
        let report = match (&mut state, config.equation) {
            (State::Ket(psi), Equation::Sse) => stepper.sse(psi, noise.next_increment(dt), t, config.scheme),
            (State::Blocks(b), Equation::Nonlinear) => stepper.nonlinear(b, noise.next_increment(dt), t, config.scheme),
            (State::Blocks(b), Equation::Linear) => {
                let dw = noise.next_increment(dt);
                let dy = if physical { dw + stepper.signal(b) * dt } else { dw };
                let report = stepper.linear(b, dy, t, config.scheme);
                if physical {
                    if let Ok(r) = &report {
                        log_weight += r.trace.ln();
                        let inv = c(1.0 / r.trace, 0.0);
                        b.iter_mut().for_each(|m| *m *= inv);
                    }
                }
                report
            }
            (State::Blocks(b), Equation::Counting) => stepper.counting(b, noise.next_uniform(), t),
            _ => unreachable!("state kind follows the equation"),
        }
        .map_err(|e| match e {
            Error::NonFinite { detail, .. } => Error::NonFinite {
                step: i + 1,
                detail: format!("{detail} at t = {:.6}", t + dt),
            },
            other => other,
        })?;
        pending += report.increment;
        y += report.increment;
        if report.clicked {
            rec.diagnostics.clicks += 1;
        }
        // After a click the raw trace is ⟨a†a⟩, not 1 + O(dt²).
        if config.equation != Equation::Linear && !report.clicked {
            rec.diagnostics.max_trace_drift = rec.diagnostics.max_trace_drift.max((report.trace - 1.0).abs());
        }
        if let Some(fb) = &config.feedback {
            let p = target_population(model, &state, fb.target);
            let next = fb.next_g_s(p, stepper.g_s());
            stepper.set_g_s(next)?;
        }
        let last = i + 1 == steps;
        let check = (i + 1) % config.check_every.max(1) == 0 || last;
        let record = (i + 1) % config.record_stride == 0 || last;
        if check || record {
            let obs = observe(model, &state);
            if check {
                let d = &mut rec.diagnostics;
                d.checked_steps += 1;
                let lam = min_eigenvalue_of(&state, obs.trace);
                d.min_eigenvalue = d.min_eigenvalue.min(lam);
                if lam < -POSITIVITY_TOLERANCE {
                    d.positivity_violations += 1;
                }
                d.max_cutoff_population = d.max_cutoff_population.max(obs.cutoff);
            }
            if record {
                let weight = if physical { log_weight.exp() } else { obs.trace };
                push(&mut rec, (i + 1) as f64 * dt, y, pending, weight, stepper.g_s(), obs);
                pending = 0.0;
            }
        }
    }
    rec.diagnostics.steps = steps;
    rec.final_system = final_system(model, &state)?;
    if rec.diagnostics.positivity_violations > 0 {
        warn!(
            "seed {seed}: {} checked steps had eigenvalues below -{POSITIVITY_TOLERANCE:e} (min {:.3e})",
            rec.diagnostics.positivity_violations, rec.diagnostics.min_eigenvalue
        );
    }
    if rec.diagnostics.max_cutoff_population > CUTOFF_MONITOR {
        warn!(
            "seed {seed}: top Fock state population reached {:.3e}; consider a larger cutoff",
            rec.diagnostics.max_cutoff_population
        );
    }
    Ok(rec)
}

/// `count` independent trajectories with seeds
/// `trajectory_seed(base_seed, i)`, run in parallel and returned in index
/// order.
pub fn simulate_ensemble(
    model: &Model,
    config: &SimulationConfig,
    base_seed: u64,
    count: usize,
) -> Result<Vec<TrajectoryRecord>> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            simulate(model, config, trajectory_seed(base_seed, i as u64)).map_err(|e| Error::Trajectory {
                index: i,
                source: Box::new(e),
            })
        })
        .collect()
}
