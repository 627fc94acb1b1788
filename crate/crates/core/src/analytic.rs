//! Closed-form solutions for the driven cavity with a dispersively coupled
//! system and `g_s = 0`.
//!
//! In that regime every diagonal block of the joint density operator stays a
//! weighted coherent state, `ρ_nn = C_n |ξ_n⟩⟨ξ_n|`, so the conditioned
//! dynamics reduce to one complex amplitude and one weight per sector.

use std::f64::consts::PI;

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::hilbert::{c, dispersive_shift, C64};
use crate::params::CavityParams;

/// `ξ(t) = (ξ₀ − ξ_ss) e^{−κt/2} + ξ_ss` with `ξ_ss = 2√κ₁ β / κ`.
pub fn empty_cavity_amplitude(t: f64, xi0: C64, beta: C64, kappa1: f64, kappa: f64) -> C64 {
    let steady = beta * (2.0 * kappa1.sqrt() / kappa);
    (xi0 - steady) * (-kappa * t / 2.0).exp() + steady
}

/// Ratio between the steady intracavity amplitude and the input amplitude
/// per unit `√dt`, without the `1/√τ`: `2√κ₁/κ`.
pub fn enhancement_factor(kappa1: f64, kappa2: f64, kappa_loss: f64) -> f64 {
    2.0 * kappa1.sqrt() / (kappa1 + kappa2 + kappa_loss)
}

/// [`enhancement_factor`] divided by `√τ`. For `κ₁ = κ₂`, `κ_L = 0` this is
/// `1/t₂` with `t₂² = κ₂ τ`.
pub fn enhancement_factor_per_round_trip(kappa1: f64, kappa2: f64, kappa_loss: f64, tau: f64) -> f64 {
    enhancement_factor(kappa1, kappa2, kappa_loss) / tau.sqrt()
}

/// Mean number of round trips of a photon in the cavity, `1/(κτ)`.
pub fn mean_round_trips(kappa: f64, tau: f64) -> f64 {
    1.0 / (kappa * tau)
}

fn sector_frequency(n: usize, params: &CavityParams) -> f64 {
    params.g * dispersive_shift(params.hamiltonian, n, params.atoms)
}

/// Steady amplitude of sector `n` at drive `beta`:
/// `2√κ₁β / (κ + 2igλ_n)`, `λ_n` the dispersive shift of the Hamiltonian.
pub fn xi_n_steady_at(n: usize, params: &CavityParams, beta: C64) -> C64 {
    beta * (2.0 * params.kappa1.sqrt()) / c(params.kappa(), 2.0 * sector_frequency(n, params))
}

pub fn xi_n_steady(n: usize, params: &CavityParams) -> C64 {
    xi_n_steady_at(n, params, params.beta.value_at(0.0))
}

/// Transient `ξ_n(t)` from `ξ_n(0) = xi0` at constant drive `β(0)`.
pub fn xi_n(t: f64, n: usize, xi0: C64, params: &CavityParams) -> C64 {
    let steady = xi_n_steady(n, params);
    let rate = c(params.kappa() / 2.0, sector_frequency(n, params));
    (xi0 - steady) * (-rate * t).exp() + steady
}

/// `r = −2 Re(c ξ)` for measurement coefficient `c`; the drift of `dy` in
/// sector `n` is `−r_n dt` and `dC_n = −r_n C_n dy`.
pub fn rate_from_amplitude(coefficient: C64, xi: C64) -> f64 {
    -2.0 * (coefficient * xi).re
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RateApprox {
    Exact,
    /// Drops `4g²λ_n²` from the denominator, so `r_n = r λ_n`.
    SmallG,
}

/// `r_n = 8βgλ_n√(κ₁κ_det η)/(κ² + 4g²λ_n²)` for `φ = 0` and real `β`.
pub fn sensitivity_rate(n: usize, params: &CavityParams, approx: RateApprox) -> Result<f64> {
    let beta = params.beta.value_at(0.0);
    if beta.im != 0.0 {
        return Err(Error::invalid(
            "beta",
            format!("sensitivity rates need a real drive, got {beta}"),
        ));
    }
    let kappa = params.kappa();
    let lambda = dispersive_shift(params.hamiltonian, n, params.atoms);
    let num = 8.0 * beta.re * params.g * lambda * (params.kappa1 * params.detected_port_rate() * params.eta).sqrt();
    Ok(match approx {
        RateApprox::Exact => num / (kappa * kappa + 4.0 * params.g * params.g * lambda * lambda),
        RateApprox::SmallG => num / (kappa * kappa),
    })
}

pub fn sensitivity_rates(params: &CavityParams, approx: RateApprox) -> Result<Vec<f64>> {
    (0..=params.atoms)
        .map(|n| sensitivity_rate(n, params, approx))
        .collect()
}

/// `C_n(0) = N!/(n!(N−n)!)/2^N`, the populations of `((|f⟩+|g⟩)/√2)^{⊗N}`.
pub fn binomial_weights(atoms: usize) -> Vec<f64> {
    let mut w = vec![1.0f64; atoms + 1];
    for n in 1..=atoms {
        w[n] = w[n - 1] * (atoms - n + 1) as f64 / n as f64;
    }
    let scale = 0.5f64.powi(atoms as i32);
    w.iter().map(|x| x * scale).collect()
}

fn check_lengths(c0: &[f64], r: &[f64]) -> Result<()> {
    if c0.len() != r.len() {
        return Err(Error::Dimension(format!("{} weights but {} rates", c0.len(), r.len())));
    }
    Ok(())
}

/// `ln C_n(t) = ln C_n(0) − r_n y − r_n² t/2`.
pub fn log_weights(t: f64, y: f64, c0: &[f64], r: &[f64]) -> Result<Vec<f64>> {
    check_lengths(c0, r)?;
    Ok(c0
        .iter()
        .zip(r)
        .map(|(&c, &rn)| c.ln() - rn * y - rn * rn * t / 2.0)
        .collect())
}

/// `C_n(t) = C_n(0) exp(−r_n y − r_n² t/2)`.
pub fn weights(t: f64, y: f64, c0: &[f64], r: &[f64]) -> Result<Vec<f64>> {
    Ok(log_weights(t, y, c0, r)?.into_iter().map(f64::exp).collect())
}

/// Normalized weights `C_n / Σ C_m`, evaluated in log space.
pub fn populations(t: f64, y: f64, c0: &[f64], r: &[f64]) -> Result<Vec<f64>> {
    Ok(normalize_log(&log_weights(t, y, c0, r)?))
}

pub(crate) fn normalize_log(logs: &[f64]) -> Vec<f64> {
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return vec![f64::NAN; logs.len()];
    }
    let shifted: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    let total: f64 = shifted.iter().sum();
    shifted.into_iter().map(|x| x / total).collect()
}

/// Bayesian posterior of component `n` given `y` under the mixture
/// [`outcome_density`].
pub fn posterior(t: f64, y: f64, c0: &[f64], r: &[f64]) -> Result<Vec<f64>> {
    check_lengths(c0, r)?;
    let logs: Vec<f64> = c0
        .iter()
        .zip(r)
        .map(|(&c, &rn)| c.ln() - (y + rn * t).powi(2) / (2.0 * t))
        .collect();
    Ok(normalize_log(&logs))
}

/// Mixture of Gaussians with means `−r_n t`, variance `t` and weights `C_n(0)`.
#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeDensity {
    pub t: f64,
    pub weights: Vec<f64>,
    pub means: Vec<f64>,
}

impl OutcomeDensity {
    pub fn new(t: f64, c0: &[f64], r: &[f64]) -> Result<Self> {
        check_lengths(c0, r)?;
        if !(t > 0.0) {
            return Err(Error::invalid("t", format!("outcome density needs t > 0, got {t}")));
        }
        Ok(OutcomeDensity {
            t,
            weights: c0.to_vec(),
            means: r.iter().map(|rn| -rn * t).collect(),
        })
    }

    pub fn pdf(&self, y: f64) -> f64 {
        let norm = 1.0 / (2.0 * PI * self.t).sqrt();
        self.weights
            .iter()
            .zip(&self.means)
            .map(|(w, m)| w * norm * (-(y - m).powi(2) / (2.0 * self.t)).exp())
            .sum()
    }

    pub fn cdf(&self, y: f64) -> f64 {
        let sd = self.t.sqrt();
        self.weights
            .iter()
            .zip(&self.means)
            .map(|(w, m)| w * Normal::new(*m, sd).map(|d| d.cdf(y)).unwrap_or(0.0))
            .sum()
    }

    /// Interval holding all components to `±width` standard deviations.
    pub fn support(&self, width: f64) -> (f64, f64) {
        let sd = self.t.sqrt();
        let lo = self.means.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo - width * sd, hi + width * sd)
    }
}

/// `P(y) = Σ_n C_n(0) (2πt)^{−1/2} exp(−(y + r_n t)²/(2t))`.
pub fn outcome_density(y: f64, t: f64, c0: &[f64], r: &[f64]) -> Result<f64> {
    Ok(OutcomeDensity::new(t, c0, r)?.pdf(y))
}

/// Probability `2^{1−N}` of ending in `{|0⟩, |N⟩}` in the shifted-Hamiltonian
/// protocol.
pub fn superposition_success(atoms: usize) -> Result<f64> {
    if atoms == 0 {
        return Err(Error::invalid("atoms", "the superposition protocol needs N ≥ 1"));
    }
    Ok(0.5f64.powi(atoms as i32 - 1))
}

/// Indices of strict interior local maxima of a sampled curve.
pub fn local_maxima(values: &[f64]) -> Vec<usize> {
    (1..values.len().saturating_sub(1))
        .filter(|&i| values[i] > values[i - 1] && values[i] > values[i + 1])
        .collect()
}

/// Weights for time-dependent rates: `ln C_n = ln C_n(0) − ∫ r_n dy − ½∫ r_n² dt`,
/// with both integrals by the trapezoidal rule on the grid of `times`.
///
/// `rates[n][i]` is `r_n(times[i])`, `dy[i]` the increment over
/// `[times[i], times[i+1]]`.
pub fn weights_time_dependent(times: &[f64], dy: &[f64], rates: &[Vec<f64>], c0: &[f64]) -> Result<Vec<f64>> {
    if dy.len() + 1 != times.len() {
        return Err(Error::Dimension(format!(
            "{} increments need {} grid points, got {}",
            dy.len(),
            dy.len() + 1,
            times.len()
        )));
    }
    if rates.len() != c0.len() || rates.iter().any(|r| r.len() != times.len()) {
        return Err(Error::Dimension("rate table does not match grid and weights".into()));
    }
    let logs: Vec<f64> = rates
        .iter()
        .zip(c0)
        .map(|(r, &c)| {
            let mut acc = c.ln();
            for i in 0..dy.len() {
                let h = times[i + 1] - times[i];
                acc -= 0.5 * (r[i] + r[i + 1]) * dy[i];
                acc -= 0.25 * (r[i] * r[i] + r[i + 1] * r[i + 1]) * h;
            }
            acc
        })
        .collect();
    Ok(logs.into_iter().map(f64::exp).collect())
}

/// `r_n(t) = −2 Re(c ξ_n(t))` along the transient from `xi0`.
pub fn rate_transient(t: f64, n: usize, xi0: C64, params: &CavityParams) -> f64 {
    rate_from_amplitude(params.measurement_coefficient(), xi_n(t, n, xi0, params))
}
