//! Finite-step, finite-oscillator homodyne model.
//!
//! One time step mixes the cavity with one input segment and one output
//! segment, then interferes the output with a local oscillator `|α⟩` on a
//! 50:50 beam splitter and records the count difference `k = n − m`.
//! [`HomodyneKernel`] holds the readout amplitudes `u_pq(k)` and
//! [`DiscreteOracle`] applies the resulting conditioned update.
//!
//! Beam-splitter convention: `U a_j† U† = Σ_k M_jk a_k†` with
//! `M = [[1, −i], [−i, 1]]/√2` (rows: oscillator, signal). Mode 1 counts
//! `m + k` photons, mode 2 counts `m`.

use std::ops::RangeInclusive;

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::hilbert::{c, hamiltonian_with_drive, hermitize, trace, CMatrix, JointSpace, C64};
use crate::noise::NoiseStream;
use crate::params::{CavityParams, Detection};

/// Largest tolerated norm deficit of the truncated oscillator expansion.
pub const LO_TRUNCATION_TOLERANCE: f64 = 1e-8;

/// `(p, q)` pairs that enter the conditioned update.
pub const UPDATE_PAIRS: [(usize, usize); 6] = [(0, 0), (1, 0), (0, 1), (1, 1), (2, 0), (0, 2)];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelKind {
    /// Exact sums over the truncated two-mode Fock basis.
    Exact,
    /// Strong-oscillator Gaussian closed forms.
    Gaussian,
}

/// Half-width `⌈4√(2μ)⌉ + 4` of the retained `k` range.
pub fn k_half_width(mu: f64) -> i64 {
    (4.0 * (2.0 * mu).sqrt()).ceil() as i64 + 4
}

/// Oscillator cutoff `|α|² + 10|α| + k_max` (plus a small margin).
pub fn default_lo_cutoff(mu: f64, k_max: i64) -> usize {
    let a2 = 2.0 * mu;
    (a2 + 10.0 * a2.sqrt()).ceil() as usize + k_max.unsigned_abs() as usize + 10
}

/// Truncated coherent amplitudes `e^{−|x|²/2} xⁿ/√n!`, `n = 0..=cutoff`,
/// evaluated in log space, and their norm deficit.
fn coherent_amplitudes(x: C64, cutoff: usize) -> (Vec<C64>, f64) {
    let r = x.norm();
    let arg = x.arg();
    let mut amps = Vec::with_capacity(cutoff + 1);
    let mut norm2 = 0.0;
    for n in 0..=cutoff {
        let amp = if r == 0.0 {
            if n == 0 {
                c(1.0, 0.0)
            } else {
                c(0.0, 0.0)
            }
        } else {
            let ln_mag = -r * r / 2.0 + n as f64 * r.ln() - 0.5 * ln_gamma(n as f64 + 1.0);
            C64::from_polar(ln_mag.exp(), n as f64 * arg)
        };
        norm2 += amp.norm_sqr();
        amps.push(amp);
    }
    (amps, (1.0 - norm2).max(0.0))
}

/// Amplitudes of `U₃|α⟩|p⟩` on `|n1⟩|n2⟩`.
struct SplitState {
    coh1: Vec<C64>,
    coh2: Vec<C64>,
}

impl SplitState {
    fn new(alpha: C64, cutoff: usize) -> Result<Self> {
        let (coh1, d1) = coherent_amplitudes(alpha / 2f64.sqrt(), cutoff);
        let (coh2, d2) = coherent_amplitudes(alpha * c(0.0, -1.0) / 2f64.sqrt(), cutoff);
        let deficit = d1.max(d2);
        if deficit > LO_TRUNCATION_TOLERANCE {
            return Err(Error::Truncation {
                deficit,
                tolerance: LO_TRUNCATION_TOLERANCE,
            });
        }
        Ok(SplitState { coh1, coh2 })
    }

    fn get(v: &[C64], i: i64) -> C64 {
        if i < 0 || i as usize >= v.len() {
            c(0.0, 0.0)
        } else {
            v[i as usize]
        }
    }

    /// `A_p(n1, n2) = (1/√p!) Σ_j C(p,j) z^j w^{p−j} √(n1!/(n1−j)!) √(n2!/(n2−p+j)!)
    ///  coh1[n1−j] coh2[n2−p+j]` with `z = −i/√2`, `w = 1/√2`.
    fn amplitude(&self, p: usize, n1: i64, n2: i64) -> C64 {
        let z = c(0.0, -std::f64::consts::FRAC_1_SQRT_2);
        let w = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let mut acc = c(0.0, 0.0);
        for j in 0..=p {
            let j2 = (p - j) as i64;
            let j = j as i64;
            if n1 - j < 0 || n2 - j2 < 0 {
                continue;
            }
            let f1: f64 = (0..j).map(|i| (n1 - i) as f64).product::<f64>().sqrt();
            let f2: f64 = (0..j2).map(|i| (n2 - i) as f64).product::<f64>().sqrt();
            let binom = binomial(p, j as usize);
            acc += z.powi(j as i32)
                * w.powi(j2 as i32)
                * (binom * f1 * f2)
                * Self::get(&self.coh1, n1 - j)
                * Self::get(&self.coh2, n2 - j2);
        }
        acc / factorial(p).sqrt()
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Exact `u_pq(k) = Σ_m ⟨m+k|⟨m|U₃|α⟩|p⟩⟨q|⟨α|U₃†|m⟩|m+k⟩`.
pub fn u_pq_exact(p: usize, q: usize, k: i64, alpha: C64, lo_cutoff: usize) -> Result<C64> {
    if p > 2 || q > 2 {
        return Err(Error::invalid(
            "p",
            format!("photon numbers must be 0, 1 or 2, got ({p}, {q})"),
        ));
    }
    let split = SplitState::new(alpha, lo_cutoff)?;
    Ok(u_from_split(&split, p, q, k, lo_cutoff))
}

fn u_from_split(split: &SplitState, p: usize, q: usize, k: i64, lo_cutoff: usize) -> C64 {
    let top = lo_cutoff as i64 + 2;
    let mut acc = c(0.0, 0.0);
    for m in (-k).max(0)..=top {
        let n1 = m + k;
        if n1 > top {
            break;
        }
        acc += split.amplitude(p, n1, m) * split.amplitude(q, n1, m).conj();
    }
    acc
}

/// Strong-oscillator limits of `u_pq(k)` for the pairs in [`UPDATE_PAIRS`].
pub fn u_pq_gaussian(p: usize, q: usize, k: i64, mu: f64, phi: f64) -> Result<C64> {
    let kf = k as f64;
    let u00 = (-kf * kf / (4.0 * mu)).exp() / (2.0 * (std::f64::consts::PI * mu).sqrt());
    let e = |m: f64| C64::from_polar(1.0, m * phi);
    let u10 = c(0.0, -kf) * e(-1.0) / (2.0 * mu).sqrt() * u00;
    let u20 = -e(-2.0) * ((kf * kf - 2.0 * mu) / (2.0 * 2f64.sqrt() * mu)) * u00;
    Ok(match (p, q) {
        (0, 0) => c(u00, 0.0),
        (1, 0) => u10,
        (0, 1) => u10.conj(),
        (1, 1) => c(kf * kf / (2.0 * mu) * u00, 0.0),
        (2, 0) => u20,
        (0, 2) => u20.conj(),
        _ => {
            return Err(Error::invalid(
                "p",
                format!("no strong-oscillator form for (p, q) = ({p}, {q})"),
            ))
        }
    })
}

/// Table of `u_pq(k)` over `|k| ≤ k_max` for all `p, q ∈ {0, 1, 2}` (exact)
/// or the six update pairs (Gaussian).
#[derive(Clone, Debug)]
pub struct HomodyneKernel {
    pub kind: KernelKind,
    pub alpha: C64,
    pub mu: f64,
    pub lo_cutoff: usize,
    pub k_max: i64,
    table: Vec<[C64; 9]>,
    /// `1 − Σ_{|k|≤k_max} u_00(k)`.
    pub tail_mass: f64,
}

impl HomodyneKernel {
    /// Oscillator with `μ = |α|²/2` and phase `φ`.
    pub fn exact(mu: f64, phi: f64) -> Result<Self> {
        let k_max = k_half_width(mu);
        Self::exact_with(mu, phi, k_max, default_lo_cutoff(mu, k_max))
    }

    pub fn exact_with(mu: f64, phi: f64, k_max: i64, lo_cutoff: usize) -> Result<Self> {
        check_mu(mu)?;
        let alpha = C64::from_polar((2.0 * mu).sqrt(), phi);
        let split = SplitState::new(alpha, lo_cutoff)?;
        let table = (-k_max..=k_max)
            .map(|k| {
                let mut row = [c(0.0, 0.0); 9];
                for p in 0..3 {
                    for q in 0..3 {
                        row[p * 3 + q] = u_from_split(&split, p, q, k, lo_cutoff);
                    }
                }
                row
            })
            .collect();
        Ok(Self::finish(KernelKind::Exact, alpha, mu, lo_cutoff, k_max, table))
    }

    pub fn gaussian(mu: f64, phi: f64) -> Result<Self> {
        check_mu(mu)?;
        let k_max = k_half_width(mu);
        let table = (-k_max..=k_max)
            .map(|k| {
                let mut row = [c(f64::NAN, f64::NAN); 9];
                for (p, q) in UPDATE_PAIRS {
                    row[p * 3 + q] = u_pq_gaussian(p, q, k, mu, phi).expect("update pair");
                }
                row
            })
            .collect();
        let alpha = C64::from_polar((2.0 * mu).sqrt(), phi);
        Ok(Self::finish(KernelKind::Gaussian, alpha, mu, 0, k_max, table))
    }

    fn finish(kind: KernelKind, alpha: C64, mu: f64, lo_cutoff: usize, k_max: i64, table: Vec<[C64; 9]>) -> Self {
        let mass: f64 = table.iter().map(|row| row[0].re).sum();
        HomodyneKernel {
            kind,
            alpha,
            mu,
            lo_cutoff,
            k_max,
            table,
            tail_mass: 1.0 - mass,
        }
    }

    pub fn phi(&self) -> f64 {
        self.alpha.arg()
    }

    pub fn k_range(&self) -> RangeInclusive<i64> {
        -self.k_max..=self.k_max
    }

    /// `u_pq(k)`; zero outside the retained range.
    pub fn u(&self, p: usize, q: usize, k: i64) -> C64 {
        if k.abs() > self.k_max || p > 2 || q > 2 {
            return c(0.0, 0.0);
        }
        self.table[(k + self.k_max) as usize][p * 3 + q]
    }

    /// `Σ_k u_pq(k)` over the retained range.
    pub fn column_sum(&self, p: usize, q: usize) -> C64 {
        self.table.iter().map(|row| row[p * 3 + q]).sum()
    }
}

/// Largest deviation of the exact table from the strong-oscillator forms
/// over `|k| ≤ 4√(2μ)` and all update pairs, relative to the closed form.
/// Closed-form values below `1e-4` of their pair's maximum are replaced by
/// that floor so isolated zeros do not dominate.
pub fn closed_form_deviation(kernel: &HomodyneKernel) -> Result<f64> {
    let mu = kernel.mu;
    let phi = kernel.phi();
    let half = (4.0 * (2.0 * mu).sqrt()).floor() as i64;
    let mut worst: f64 = 0.0;
    for (p, q) in UPDATE_PAIRS {
        let closed: Vec<C64> = (-half..=half)
            .map(|k| u_pq_gaussian(p, q, k, mu, phi))
            .collect::<Result<_>>()?;
        let floor = 1e-4 * closed.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for (k, cl) in (-half..=half).zip(&closed) {
            let err = (kernel.u(p, q, k) - cl).norm() / cl.norm().max(floor);
            worst = worst.max(err);
        }
    }
    Ok(worst)
}

fn check_mu(mu: f64) -> Result<()> {
    if !(mu.is_finite() && mu > 0.0) {
        return Err(Error::invalid(
            "mu",
            format!("oscillator strength must be positive, got {mu}"),
        ));
    }
    Ok(())
}

/// Input-segment density-matrix coefficients for a coherent input `|β√dt⟩`
/// to second order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InputCoefficients {
    pub c00: f64,
    pub c10: C64,
    pub c11: f64,
    pub c20: C64,
}

impl InputCoefficients {
    pub fn coherent(beta: C64, dt: f64) -> Self {
        InputCoefficients {
            c00: 1.0 - beta.norm_sqr() * dt,
            c10: beta * dt.sqrt(),
            c11: beta.norm_sqr() * dt,
            c20: beta * beta * dt / 2f64.sqrt(),
        }
    }
}

/// Beam-splitter amplitudes for one step: `t_i² = κ_i dt`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiscreteStepParams {
    pub t1: f64,
    pub t2: f64,
    pub input: InputCoefficients,
    pub dt: f64,
}

impl DiscreteStepParams {
    pub fn new(params: &CavityParams, t: f64) -> Result<Self> {
        let t1 = (params.kappa1 * params.dt).sqrt();
        let t2 = (params.kappa2 * params.dt).sqrt();
        if t1 > 1.0 || t2 > 1.0 {
            return Err(Error::invalid(
                "dt",
                format!("transmissions t1 = {t1}, t2 = {t2} exceed 1"),
            ));
        }
        Ok(DiscreteStepParams {
            t1,
            t2,
            input: InputCoefficients::coherent(params.beta.value_at(t), params.dt),
            dt: params.dt,
        })
    }
}

/// The pieces `X_pq` of the conditioned update
/// `Num_k = Σ_pq u_pq(k) X_pq`.
#[derive(Clone, Debug)]
pub struct UpdatePieces {
    pub x: [CMatrix; 6],
}

impl UpdatePieces {
    pub fn traces(&self) -> [C64; 6] {
        std::array::from_fn(|i| trace(&self.x[i]))
    }

    pub fn combine(&self, weights: [C64; 6]) -> CMatrix {
        let mut out = &self.x[0] * weights[0];
        for i in 1..6 {
            out += &self.x[i] * weights[i];
        }
        out
    }
}

/// Discrete-time measurement model on a lossless cavity with the transmitted
/// light homodyned.
#[derive(Clone, Debug)]
pub struct DiscreteOracle {
    pub params: CavityParams,
    pub kernel: HomodyneKernel,
    h: CMatrix,
    a: CMatrix,
    ad: CMatrix,
    n: CMatrix,
    a2: CMatrix,
    sums: [C64; 6],
}

impl DiscreteOracle {
    pub fn new(params: CavityParams, kernel: HomodyneKernel) -> Result<Self> {
        params.validate()?;
        if params.kappa_loss != 0.0 || params.eta != 1.0 || params.detection != Detection::Transmitted {
            return Err(Error::invalid(
                "kappa_loss",
                "the discrete model describes a lossless cavity with ideal transmitted-port detection",
            ));
        }
        if (kernel.phi() - params.phi)
            .rem_euclid(2.0 * std::f64::consts::PI)
            .min((params.phi - kernel.phi()).rem_euclid(2.0 * std::f64::consts::PI))
            > 1e-12
        {
            return Err(Error::invalid("phi", "kernel phase differs from the configured phase"));
        }
        let space = JointSpace::of(&params);
        let h = hamiltonian_with_drive(&params, params.hamiltonian, params.g_s)?;
        let a = space.a();
        let ad = a.adjoint();
        let n = &ad * &a;
        let a2 = &a * &a;
        let sums = UPDATE_PAIRS.map(|(p, q)| kernel.column_sum(p, q));
        Ok(DiscreteOracle {
            params,
            kernel,
            h,
            a,
            ad,
            n,
            a2,
            sums,
        })
    }

    pub fn pieces(&self, rho: &CMatrix, t: f64) -> Result<UpdatePieces> {
        let sp = DiscreteStepParams::new(&self.params, t)?;
        let (t1, t2, dt) = (sp.t1, sp.t2, sp.dt);
        let c10 = sp.input.c10;
        let ar = &self.a * rho;
        let ra = rho * &self.a;
        let adr = &self.ad * rho;
        let rad = rho * &self.ad;
        let ara = &ar * &self.ad;
        let nr = &self.n * rho;
        let rn = rho * &self.n;
        let i = c(0.0, 1.0);
        let mut x0 = rho.clone();
        x0 -= (&self.h * rho - rho * &self.h) * (i * dt);
        x0 += (&adr - &rad) * (c10 * t1);
        x0 -= (&ar - &ra) * (c10.conj() * t1);
        x0 += (&ara * c(2.0, 0.0) - &nr - &rn) * c(0.5 * t1 * t1, 0.0);
        x0 -= (&nr + &rn) * c(0.5 * t2 * t2, 0.0);
        let s2 = t2 * t2 / 2f64.sqrt();
        let x20 = &self.a2 * rho * c(s2, 0.0);
        let x02 = x20.adjoint();
        Ok(UpdatePieces {
            x: [
                x0,
                &ar * c(t2, 0.0),
                &rad * c(t2, 0.0),
                &ara * c(t2 * t2, 0.0),
                x20,
                x02,
            ],
        })
    }

    fn weights(&self, k: i64) -> [C64; 6] {
        UPDATE_PAIRS.map(|(p, q)| self.kernel.u(p, q, k))
    }

    fn norm(&self, traces: &[C64; 6]) -> f64 {
        traces.iter().zip(&self.sums).map(|(t, s)| t * s).sum::<C64>().re
    }

    fn probabilities_from(&self, traces: &[C64; 6]) -> Vec<f64> {
        let z = self.norm(traces);
        self.kernel
            .k_range()
            .map(|k| self.weights(k).iter().zip(traces).map(|(u, tr)| u * tr).sum::<C64>().re / z)
            .collect()
    }

    fn draw(&self, probs: &[f64], noise: &mut NoiseStream) -> i64 {
        let u = noise.next_uniform();
        let mut acc = 0.0;
        for (k, p) in self.kernel.k_range().zip(probs) {
            acc += p;
            if u < acc {
                return k;
            }
        }
        self.kernel.k_max
    }

    fn update(&self, pieces: &UpdatePieces, traces: &[C64; 6], k: i64) -> Result<(CMatrix, f64)> {
        let z = self.norm(traces);
        let mut num = pieces.combine(self.weights(k));
        let raw = trace(&num).re;
        let p_k = raw / z;
        if !(p_k > 0.0) {
            return Err(Error::NonPositiveProbability { k, probability: p_k });
        }
        num /= c(raw, 0.0);
        hermitize(&mut num);
        Ok((num, p_k))
    }

    /// Normalized outcome probabilities over [`HomodyneKernel::k_range`].
    pub fn probabilities(&self, rho: &CMatrix, t: f64) -> Result<Vec<f64>> {
        Ok(self.probabilities_from(&self.pieces(rho, t)?.traces()))
    }

    /// Conditioned update for outcome `k`; returns `(ρ', P_k)`.
    pub fn step(&self, rho: &CMatrix, k: i64, t: f64) -> Result<(CMatrix, f64)> {
        let pieces = self.pieces(rho, t)?;
        self.update(&pieces, &pieces.traces(), k)
    }

    /// Draws `k` from the exact normalized `P_k` by inversion.
    pub fn sample_k(&self, rho: &CMatrix, t: f64, noise: &mut NoiseStream) -> Result<i64> {
        Ok(self.draw(&self.probabilities(rho, t)?, noise))
    }

    /// Draws `k` and applies the update.
    pub fn sample_step(&self, rho: &CMatrix, t: f64, noise: &mut NoiseStream) -> Result<(CMatrix, i64)> {
        let pieces = self.pieces(rho, t)?;
        let traces = pieces.traces();
        let k = self.draw(&self.probabilities_from(&traces), noise);
        let (next, _) = self.update(&pieces, &traces, k)?;
        Ok((next, k))
    }

    /// `Σ_k Num_k`, the unconditional map of one step.
    pub fn averaged_step(&self, rho: &CMatrix, t: f64) -> Result<CMatrix> {
        let pieces = self.pieces(rho, t)?;
        let mut out = pieces.combine(self.sums);
        let z = trace(&out).re;
        out /= c(z, 0.0);
        hermitize(&mut out);
        Ok(out)
    }
}

/// Conditioned update for outcome `k` at `t = 0` (convenience wrapper).
pub fn discrete_step(rho: &CMatrix, k: i64, oracle: &DiscreteOracle) -> Result<(CMatrix, f64)> {
    oracle.step(rho, k, 0.0)
}

pub fn sample_k(rho: &CMatrix, oracle: &DiscreteOracle, noise: &mut NoiseStream) -> Result<i64> {
    oracle.sample_k(rho, 0.0, noise)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{basis_ket, hermiticity_defect, max_abs_diff, projector};
    use crate::params::DriveSchedule;
    use std::f64::consts::PI;

    #[test]
    fn u10_vanishes_at_zero() {
        let kernel = HomodyneKernel::exact(8.0, 0.3).unwrap();
        assert!(kernel.u(1, 0, 0).norm() < 1e-12);
        let u00 = kernel.u(0, 0, 0).re;
        let limit = 1.0 / (2.0 * (8.0 * PI).sqrt());
        assert!((u00 - limit).abs() / limit < 0.2);
    }

    #[test]
    fn ratios_match_closed_forms() {
        let mu = 32.0;
        let phi = 0.7;
        let kernel = HomodyneKernel::exact(mu, phi).unwrap();
        for k in [-12i64, -3, 5, 17] {
            let u00 = kernel.u(0, 0, k);
            let g00 = u_pq_gaussian(0, 0, k, mu, phi).unwrap();
            for (p, q) in UPDATE_PAIRS {
                let exact = kernel.u(p, q, k) / u00;
                let closed = u_pq_gaussian(p, q, k, mu, phi).unwrap() / g00;
                let rel = (exact - closed).norm() / closed.norm().max(1e-12);
                // u_20 carries a 1/(4μ) correction; the others are exact ratios.
                let tol = if p + q == 2 && p != q { 0.5 / mu } else { 1e-9 };
                assert!(rel < tol, "({p},{q}) at k = {k}: {exact} vs {closed}");
            }
        }
        let u11 = kernel.u(1, 1, 6) / kernel.u(0, 0, 6);
        assert!((u11.re - 36.0 / (2.0 * mu)).abs() < 1e-9);
    }

    #[test]
    fn deviation_shrinks_with_oscillator_strength() {
        let e8 = closed_form_deviation(&HomodyneKernel::exact(8.0, 0.4).unwrap()).unwrap();
        let e32 = closed_form_deviation(&HomodyneKernel::exact(32.0, 0.4).unwrap()).unwrap();
        assert!(e8 > e32, "{e8} vs {e32}");
    }

    #[test]
    fn conjugate_and_parity_symmetries() {
        let kernel = HomodyneKernel::exact(8.0, 1.1).unwrap();
        for k in kernel.k_range() {
            for p in 0..3 {
                for q in 0..3 {
                    let u = kernel.u(p, q, k);
                    assert!((u - kernel.u(q, p, k).conj()).norm() < 1e-12);
                    let sign = if (p + q) % 2 == 0 { 1.0 } else { -1.0 };
                    assert!((kernel.u(p, q, -k) - u * sign).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn completeness() {
        let mu = 8.0;
        let wide = 60;
        let kernel = HomodyneKernel::exact_with(mu, 0.0, wide, default_lo_cutoff(mu, wide)).unwrap();
        assert!(kernel.tail_mass.abs() < 1e-8);
        for p in 0..3 {
            for q in 0..3 {
                let expected = if p == q { 1.0 } else { 0.0 };
                assert!((kernel.column_sum(p, q) - c(expected, 0.0)).norm() < 1e-8);
            }
        }
        assert!(matches!(
            HomodyneKernel::exact_with(mu, 0.0, 5, 10),
            Err(Error::Truncation { .. })
        ));
    }

    fn oracle(mu: f64, beta: f64) -> DiscreteOracle {
        let mut p = CavityParams::zeno_figure(0.05);
        p.beta = DriveSchedule::constant(c(beta, 0.0));
        p.dt = 1e-3;
        DiscreteOracle::new(p, HomodyneKernel::exact(mu, 0.0).unwrap()).unwrap()
    }

    #[test]
    fn vacuum_readout_is_oscillator_noise() {
        let mut p = CavityParams::zeno_figure(0.0);
        p.beta = DriveSchedule::constant(c(0.0, 0.0));
        p.g = 0.0;
        let o = DiscreteOracle::new(p, HomodyneKernel::exact(8.0, 0.0).unwrap()).unwrap();
        let rho = projector(&basis_ket(8, 0));
        let probs = o.probabilities(&rho, 0.0).unwrap();
        let z = 1.0 - o.kernel.tail_mass;
        for (k, pk) in o.kernel.k_range().zip(&probs) {
            assert!((pk - o.kernel.u(0, 0, k).re / z).abs() < 1e-14);
        }
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let (next, _) = o.step(&rho, 3, 0.0).unwrap();
        assert!(max_abs_diff(&next, &rho) < 1e-14);
    }

    #[test]
    fn update_is_hermitian_and_normalized() {
        let o = oracle(50.0, 0.3);
        let psi = crate::hilbert::kron_vec(
            &crate::hilbert::CVector::from_vec(vec![c(0.6, 0.0), c(0.0, 0.8)]),
            &crate::hilbert::coherent_state(c(0.3, 0.1), crate::hilbert::FockSpace::new(3)),
        );
        let rho = projector(&psi);
        let probs = o.probabilities(&rho, 0.0).unwrap();
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for k in [-20, 0, 7] {
            let (next, pk) = o.step(&rho, k, 0.0).unwrap();
            assert!(pk > 0.0);
            assert!(hermiticity_defect(&next) < 1e-12);
            assert!((trace(&next).re - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn averaged_map_is_euler_lindblad() {
        let o = oracle(50.0, 0.3);
        let rho = projector(&crate::hilbert::kron_vec(
            &crate::hilbert::CVector::from_vec(vec![c(0.6, 0.0), c(0.0, 0.8)]),
            &crate::hilbert::coherent_state(c(0.2, 0.0), crate::hilbert::FockSpace::new(3)),
        ));
        let avg = o.averaged_step(&rho, 0.0).unwrap();
        let mut unmeasured = o.params.clone();
        unmeasured.eta = 0.0;
        let (euler, _) = crate::sme::step_linear(&rho, 0.0, &unmeasured, crate::sme::Scheme::Euler).unwrap();
        // Differences only from the truncated k range (tail mass of u_11, u_20).
        assert!(max_abs_diff(&avg, &euler) < 1e-8, "{}", max_abs_diff(&avg, &euler));
    }

    #[test]
    fn rejects_inconsistent_setups() {
        let mut p = CavityParams::zeno_figure(0.0);
        p.kappa_loss = 0.1;
        p.kappa2 = 0.4;
        assert!(DiscreteOracle::new(p, HomodyneKernel::gaussian(8.0, 0.0).unwrap()).is_err());
        let p = CavityParams::zeno_figure(0.0);
        assert!(DiscreteOracle::new(p, HomodyneKernel::gaussian(8.0, 0.5).unwrap()).is_err());
        assert!(u_pq_gaussian(2, 1, 0, 8.0, 0.0).is_err());
        assert!(u_pq_exact(3, 0, 0, c(4.0, 0.0), 100).is_err());
        assert!(HomodyneKernel::exact(-1.0, 0.0).is_err());
    }
}
