//! Conditioned dynamics of a quantum system inside a probed optical cavity.
//!
//! The crate integrates the stochastic master equations that describe a
//! system coupled to a single cavity mode whose output light is monitored by
//! homodyne detection (or photon counting). It contains:
//!
//! * [`hilbert`]: truncated Fock and symmetric-spin operator algebra,
//! * [`sme`]: time steppers for the nonlinear, linear, pure-state and
//!   photon-counting equations, plus a trajectory driver,
//! * [`analytic`]: closed-form solutions used as oracles,
//! * [`homodyne`]: the finite-step, finite-oscillator homodyne model that the
//!   continuum equations are derived from,
//! * [`experiment`]: configuration files, presets and CSV output for the
//!   command-line harness.
//!
//! Units: `ħ = 1` and the total cavity decay rate `κ = κ₁ + κ₂ + κ_L = 1`
//! sets the time unit. Couplings are in units of `κ`, drive amplitudes in
//! units of `√κ`.
//!
//! Joint basis ordering is `|n⟩ ⊗ |p⟩` with the atomic excitation number `n`
//! varying slowest: index `n * (cutoff + 1) + p`.

// `!(x > 0.0)` is used on purpose to reject NaN alongside bad values.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

/// `FromStr` and `Display` for fieldless enums with lowercase keywords.
macro_rules! keyword_enum {
    ($ty:ty, $what:literal, $($name:literal => $variant:expr),+ $(,)?) => {
        impl std::str::FromStr for $ty {
            type Err = $crate::error::Error;
            fn from_str(s: &str) -> Result<Self, $crate::error::Error> {
                match s.trim().to_ascii_lowercase().as_str() {
                    $($name => Ok($variant),)+
                    other => Err($crate::error::Error::invalid($what, format!(
                        "unknown value `{other}`, expected one of: {}", [$($name),+].join(", ")
                    ))),
                }
            }
        }

        impl std::fmt::Display for $ty {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                $(if *self == $variant { return f.write_str($name); })+
                unreachable!()
            }
        }
    };
}

pub mod analytic;
pub mod error;
pub mod experiment;
pub mod hilbert;
pub mod homodyne;
pub mod noise;
pub mod params;
pub mod sme;
pub mod stats;

pub use error::{Error, Result};
pub use hilbert::{CMatrix, CVector, C64};
pub use params::{CavityParams, Detection, DriveSchedule, HamiltonianKind};
