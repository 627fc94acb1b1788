//! Conditioned evolution: homodyne (nonlinear and linear), pure-state and
//! photon-counting unravelings, plus the trajectory driver.
//!
//! All density-operator steppers share the decomposition
//!
//! ```text
//! D(ρ) = Kρ + (Kρ)† + κ âρâ†,      K = −iH + √κ₁(βâ† − β*â) − (κ/2)â†â
//! B(X) = LX + (LX)†,               L = c â,  c = −i e^{−iφ} √(η κ_det)
//! ```
//!
//! so that the nonlinear equation reads `dρ = D(ρ)dt + (B(ρ) − Tr(Bρ)ρ)dW`
//! and the linear one `dρ̃ = D(ρ̃)dt + B(ρ̃)dy`.

mod model;
mod stepper;
mod trajectory;

pub use model::{CavityInit, InitialState, Layout, Model, SystemInit};
pub use stepper::{lindblad_evolve, step_counting, step_linear, step_nonlinear, step_sse, StepReport, Stepper};
pub use trajectory::{
    simulate, simulate_ensemble, simulate_with_noise, Diagnostics, Feedback, SimulationConfig, TrajectoryRecord,
    POSITIVITY_TOLERANCE,
};

/// Which conditioned equation to integrate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Equation {
    #[default]
    Nonlinear,
    Linear,
    Sse,
    Counting,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Scheme {
    Euler,
    #[default]
    Milstein,
}

/// How the linear equation draws its record increments.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LinearSampling {
    /// `dy ~ N(0, dt)`; the trace of `ρ̃` is the likelihood weight.
    #[default]
    Ostensible,
    /// `dy = dW + Tr(Bρ̃)/Tr(ρ̃) dt`, the physical outcome distribution. The
    /// state is renormalized each step and the log-trace accumulated.
    Physical,
}

keyword_enum!(Equation, "equation",
    "nonlinear" => Equation::Nonlinear,
    "linear" => Equation::Linear,
    "sse" => Equation::Sse,
    "counting" => Equation::Counting,
);

keyword_enum!(Scheme, "scheme",
    "euler" => Scheme::Euler,
    "milstein" => Scheme::Milstein,
);

keyword_enum!(LinearSampling, "sampling",
    "ostensible" => LinearSampling::Ostensible,
    "physical" => LinearSampling::Physical,
);
