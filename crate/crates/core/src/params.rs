//! Physical constants of the probed cavity.

use std::fmt;

use crate::error::{Error, Result};
use crate::hilbert::C64;

/// Tolerance on the `κ₁ + κ₂ + κ_L = 1` unit convention.
pub const KAPPA_SUM_TOLERANCE: f64 = 1e-9;

/// Threshold used to operationalise the `≪ 1` continuum conditions.
pub const CONTINUUM_THRESHOLD: f64 = 0.1;

/// Which output port of the cavity is sent to the detector.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Detection {
    /// Light leaving through the far beam splitter (rate `κ₂`).
    #[default]
    Transmitted,
    /// Light leaving through the input beam splitter (rate `κ₁`).
    Reflected,
}

/// System Hamiltonian family.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum HamiltonianKind {
    /// `g a†a n̂`: dispersive shift proportional to the number of atoms in `|f⟩`.
    #[default]
    Dicke,
    /// `g a†a (n̂ − N/2)`: symmetric shift, `|n⟩` and `|N−n⟩` share the same
    /// `x`-quadrature signal.
    Shifted,
    /// `g a†a n̂ + g_s Σ(σ₊ + σ₋)`: dispersive probe plus a coherent drive
    /// between neighbouring Dicke states.
    Zeno,
}

impl HamiltonianKind {
    pub fn name(self) -> &'static str {
        match self {
            HamiltonianKind::Dicke => "dicke",
            HamiltonianKind::Shifted => "shifted",
            HamiltonianKind::Zeno => "zeno",
        }
    }
}

keyword_enum!(HamiltonianKind, "hamiltonian",
    "dicke" => HamiltonianKind::Dicke,
    "shifted" => HamiltonianKind::Shifted,
    "zeno" => HamiltonianKind::Zeno,
);

keyword_enum!(Detection, "detection",
    "transmitted" => Detection::Transmitted,
    "reflected" => Detection::Reflected,
);

/// Piecewise-constant input amplitude `β(t)` in units of `√κ`.
///
/// Each segment starts at its time and holds until the next one. Segments
/// switch on step boundaries: the value used for a step is the one in force
/// at the step's start time.
#[derive(Clone, Debug, PartialEq)]
pub struct DriveSchedule {
    segments: Vec<(f64, C64)>,
}

impl DriveSchedule {
    pub fn constant(beta: C64) -> Self {
        DriveSchedule {
            segments: vec![(0.0, beta)],
        }
    }

    /// Drive at `beta` until `t_off`, zero afterwards.
    pub fn switched_off_at(beta: C64, t_off: f64) -> Self {
        DriveSchedule {
            segments: vec![(0.0, beta), (t_off, C64::new(0.0, 0.0))],
        }
    }

    pub fn from_segments(mut segments: Vec<(f64, C64)>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::invalid("beta", "drive schedule needs at least one segment"));
        }
        if segments
            .iter()
            .any(|(t, b)| !t.is_finite() || !b.re.is_finite() || !b.im.is_finite())
        {
            return Err(Error::invalid("beta", "drive schedule contains non-finite values"));
        }
        segments.sort_by(|a, b| a.0.total_cmp(&b.0));
        if segments[0].0 > 0.0 {
            segments.insert(0, (0.0, C64::new(0.0, 0.0)));
        }
        Ok(DriveSchedule { segments })
    }

    pub fn segments(&self) -> &[(f64, C64)] {
        &self.segments
    }

    pub fn value_at(&self, t: f64) -> C64 {
        let mut value = self.segments[0].1;
        for &(start, beta) in &self.segments {
            if start <= t {
                value = beta;
            } else {
                break;
            }
        }
        value
    }

    pub fn max_abs(&self) -> f64 {
        self.segments.iter().map(|(_, b)| b.norm()).fold(0.0, f64::max)
    }

    pub fn is_real_nonnegative(&self) -> bool {
        self.segments.iter().all(|(_, b)| b.im == 0.0 && b.re >= 0.0)
    }
}

/// All constants of the setup, in units where `ħ = 1` and `κ = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct CavityParams {
    /// Input coupling rate `κ₁`.
    pub kappa1: f64,
    /// Output coupling rate `κ₂`.
    pub kappa2: f64,
    /// Intracavity loss rate `κ_L`.
    pub kappa_loss: f64,
    /// Overall detection efficiency `η = η_D η_P`.
    pub eta: f64,
    /// Local oscillator phase. The measured combination is
    /// `−i e^{−iφ} a + i e^{iφ} a†` for either detection port.
    pub phi: f64,
    pub beta: DriveSchedule,
    /// Dispersive coupling `g`.
    pub g: f64,
    /// Coherent drive `g_s` between Dicke states (zeno Hamiltonian only).
    pub g_s: f64,
    /// Number of atoms `N`.
    pub atoms: usize,
    /// Fock cutoff `N_p`.
    pub cutoff: usize,
    /// Integration step in units of `1/κ`.
    pub dt: f64,
    pub hamiltonian: HamiltonianKind,
    pub detection: Detection,
}

impl CavityParams {
    /// Parameters of the quantum Zeno figure: one atom, `κ₁ = κ₂ = 0.5`,
    /// `η = 1`, `φ = 0`, `g = 0.2`, `β = 0.2`, `N_p = 3`.
    pub fn zeno_figure(g_s: f64) -> Self {
        CavityParams {
            kappa1: 0.5,
            kappa2: 0.5,
            kappa_loss: 0.0,
            eta: 1.0,
            phi: 0.0,
            beta: DriveSchedule::constant(C64::new(0.2, 0.0)),
            g: 0.2,
            g_s,
            atoms: 1,
            cutoff: 3,
            dt: 1e-2,
            hamiltonian: HamiltonianKind::Zeno,
            detection: Detection::Transmitted,
        }
    }

    pub fn kappa(&self) -> f64 {
        self.kappa1 + self.kappa2 + self.kappa_loss
    }

    /// Rate of the port that reaches the detector, before efficiency.
    pub fn detected_port_rate(&self) -> f64 {
        match self.detection {
            Detection::Transmitted => self.kappa2,
            Detection::Reflected => self.kappa1,
        }
    }

    /// `c` in the measurement operator `L = c a`, with
    /// `c = −i e^{−iφ} √(η κ_det)`.
    pub fn measurement_coefficient(&self) -> C64 {
        let phase = C64::from_polar(1.0, -self.phi);
        C64::new(0.0, -1.0) * phase * (self.eta * self.detected_port_rate()).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        let rates = [
            ("kappa1", self.kappa1),
            ("kappa2", self.kappa2),
            ("kappa_loss", self.kappa_loss),
        ];
        for (name, rate) in rates {
            if !rate.is_finite() || rate < 0.0 {
                return Err(Error::invalid(
                    name,
                    format!("must be finite and non-negative, got {rate}"),
                ));
            }
        }
        if (self.kappa() - 1.0).abs() > KAPPA_SUM_TOLERANCE {
            return Err(Error::invalid(
                "kappa1",
                format!(
                    "kappa1 + kappa2 + kappa_loss must equal 1 (time unit), got {}",
                    self.kappa()
                ),
            ));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::invalid("eta", format!("must lie in [0, 1], got {}", self.eta)));
        }
        if !self.phi.is_finite() {
            return Err(Error::invalid("phi", "must be finite"));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::invalid("dt", format!("must be positive, got {}", self.dt)));
        }
        if !self.g.is_finite() || !self.g_s.is_finite() {
            return Err(Error::invalid("g", "couplings must be finite"));
        }
        if self.g_s != 0.0 && self.hamiltonian != HamiltonianKind::Zeno {
            return Err(Error::invalid(
                "g_s",
                format!(
                    "g_s = {} needs the zeno Hamiltonian, got {}",
                    self.g_s, self.hamiltonian
                ),
            ));
        }
        Ok(())
    }

    /// Smallest cutoff that keeps the steady coherent field faithfully
    /// represented: `max(3, ⌈16 κ₁ |β|² / κ²⌉)`.
    pub fn default_cutoff(&self) -> usize {
        let beta = self.beta.max_abs();
        let needed = (16.0 * self.kappa1 * beta * beta / (self.kappa() * self.kappa())).ceil();
        (needed as usize).max(3)
    }

    /// Continuum-limit conditions with `τ = dt`.
    pub fn validity(&self) -> ValidityReport {
        let dt = self.dt;
        let beta = self.beta.max_abs();
        // Largest Hamiltonian matrix element scale: g N_p N + g_s N.
        let h_scale =
            self.g.abs() * (self.cutoff as f64) * (self.atoms.max(1) as f64) + self.g_s.abs() * self.atoms as f64;
        let checks = vec![
            ValidityCheck::new("kappa1*dt", self.kappa1 * dt),
            ValidityCheck::new("kappa2*dt", self.kappa2 * dt),
            ValidityCheck::new("sqrt(kappa1)*|beta|*dt", self.kappa1.sqrt() * beta * dt),
            ValidityCheck::new("|H|*dt", h_scale * dt),
        ];
        ValidityReport { checks }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidityCheck {
    pub name: &'static str,
    pub value: f64,
    pub ok: bool,
}

impl ValidityCheck {
    fn new(name: &'static str, value: f64) -> Self {
        ValidityCheck {
            name,
            value,
            ok: value < CONTINUUM_THRESHOLD,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidityReport {
    pub checks: Vec<ValidityCheck>,
}

impl ValidityReport {
    pub fn all_ok(&self) -> bool {
        self.checks.iter().all(|c| c.ok)
    }
}

impl fmt::Display for ValidityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.checks.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(
                f,
                "{} = {:.3e} ({})",
                c.name,
                c.value,
                if c.ok { "ok" } else { "NOT small" }
            )?;
        }
        Ok(())
    }
}
