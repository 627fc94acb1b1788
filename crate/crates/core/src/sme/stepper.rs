use crate::error::{Error, Result};
use crate::hilbert::{adjoint_into, c, hermitize, CMatrix, CVector, SparseOp, C64};
use crate::noise::NoiseStream;
use crate::params::CavityParams;

use super::model::Model;
use super::Scheme;

/// What one step produced besides the new state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepReport {
    /// Record increment: `dy` for homodyne equations, `1` or `0` for counting.
    pub increment: f64,
    /// Trace before renormalization (linear: the step's likelihood factor).
    pub trace: f64,
    pub clicked: bool,
}

/// Per-trajectory stepping engine: caches `K` for the current drive and
/// owns all scratch buffers.
pub struct Stepper<'m> {
    model: &'m Model,
    dt: f64,
    ks: Vec<SparseOp>,
    key: Option<(C64, f64)>,
    g_s: f64,
    a2: SparseOp,
    num: SparseOp,
    ar: CMatrix,
    kr: CMatrix,
    t1: CMatrix,
    t2: CMatrix,
    g: CMatrix,
    v: [CVector; 5],
    steps: usize,
}

/// Field moments summed over blocks.
#[derive(Clone, Copy, Debug)]
struct Moments {
    trace: f64,
    a: C64,
    a2: C64,
    n: f64,
}

impl<'m> Stepper<'m> {
    pub fn new(model: &'m Model) -> Self {
        let d = model.block_dim();
        let a = model.a.to_dense();
        let zero = || CMatrix::zeros(d, d);
        Stepper {
            model,
            dt: model.params.dt,
            ks: Vec::new(),
            key: None,
            g_s: model.params.g_s,
            a2: SparseOp::from_dense(&(&a * &a)),
            num: SparseOp::from_dense(&(a.adjoint() * &a)),
            ar: zero(),
            kr: zero(),
            t1: zero(),
            t2: zero(),
            g: zero(),
            v: std::array::from_fn(|_| CVector::zeros(d)),
            steps: 0,
        }
    }

    pub fn model(&self) -> &Model {
        self.model
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Overrides the step size (used by convergence studies on one model).
    pub fn set_dt(&mut self, dt: f64) {
        self.dt = dt;
    }

    pub fn g_s(&self) -> f64 {
        self.g_s
    }

    /// Coherent coupling for subsequent steps (feedback).
    pub fn set_g_s(&mut self, g_s: f64) -> Result<()> {
        if g_s != 0.0 && !self.model.supports_coherent_drive() {
            return Err(Error::invalid("g_s", "model has no coherent drive term"));
        }
        self.g_s = g_s;
        Ok(())
    }

    pub fn steps_taken(&self) -> usize {
        self.steps
    }

    fn prepare(&mut self, t: f64) {
        let beta = self.model.params.beta.value_at(t);
        if self.key != Some((beta, self.g_s)) {
            self.ks = (0..self.model.blocks())
                .map(|b| SparseOp::from_dense(&self.model.generator(b, beta, self.g_s)))
                .collect();
            self.key = Some((beta, self.g_s));
        }
    }

    fn moments(&self, blocks: &[CMatrix]) -> Moments {
        let mut m = Moments {
            trace: 0.0,
            a: c(0.0, 0.0),
            a2: c(0.0, 0.0),
            n: 0.0,
        };
        for rho in blocks {
            m.trace += rho.diagonal().iter().map(|z| z.re).sum::<f64>();
            m.a += self.model.a.trace_product(rho);
            m.a2 += self.a2.trace_product(rho);
            m.n += self.num.trace_product(rho).re;
        }
        m
    }

    /// `Tr(Bρ)/Tr(ρ)`: the conditional mean of the record increment per unit time.
    pub fn signal(&self, blocks: &[CMatrix]) -> f64 {
        let m = self.moments(blocks);
        2.0 * (self.model.coefficient * m.a).re / m.trace
    }

    /// `t1 ← D(ρ)` for block `b`, leaving `ar = âρ`. With `kraus` the
    /// second-order term `KρK† dt` is added, so that `ρ + t1 dt` equals
    /// `(1 + K dt) ρ (1 + K dt)† + κ âρâ† dt` and stays positive.
    fn drift_block(&mut self, b: usize, rho: &CMatrix, kraus: bool) {
        let d = rho.nrows();
        let kappa = self.model.params.kappa();
        self.model.a.mul_mat_into(rho, &mut self.ar);
        self.ks[b].mul_mat_into(rho, &mut self.kr);
        if kraus {
            // t2 ← K (Kρ)† = (KρK†)† = KρK†.
            adjoint_into(&self.kr, &mut self.t1);
            self.ks[b].mul_mat_into(&self.t1, &mut self.g);
        }
        adjoint_into(&self.ar, &mut self.t1);
        self.model.a.mul_mat_into(&self.t1, &mut self.t2);
        let dt = self.dt;
        let kr = self.kr.as_slice();
        let t2 = self.t2.as_slice();
        let kk = self.g.as_slice();
        let out = self.t1.as_mut_slice();
        for j in 0..d {
            for i in 0..d {
                let mut v = kr[i + j * d] + kr[j + i * d].conj() + t2[i + j * d] * kappa;
                if kraus {
                    v += kk[i + j * d] * dt;
                }
                out[i + j * d] = v;
            }
        }
    }

    /// `out ← B(x)` given `lx = âx`.
    fn apply_b(coefficient: C64, lx: &CMatrix, out: &mut CMatrix) {
        let d = lx.nrows();
        let l = lx.as_slice();
        let o = out.as_mut_slice();
        for j in 0..d {
            for i in 0..d {
                o[i + j * d] = coefficient * l[i + j * d] + (coefficient * l[j + i * d]).conj();
            }
        }
    }

    fn finish(&mut self, blocks: &mut [CMatrix], renormalize: bool) -> Result<f64> {
        self.steps += 1;
        let mut total = 0.0;
        for rho in blocks.iter_mut() {
            hermitize(rho);
            total += rho.diagonal().iter().map(|z| z.re).sum::<f64>();
        }
        if !total.is_finite() {
            return Err(Error::NonFinite {
                step: self.steps,
                detail: format!("trace became {total}"),
            });
        }
        if renormalize {
            if total <= 0.0 {
                return Err(Error::NonFinite {
                    step: self.steps,
                    detail: format!("trace collapsed to {total:e}"),
                });
            }
            let inv = c(1.0 / total, 0.0);
            for rho in blocks.iter_mut() {
                *rho *= inv;
            }
        }
        Ok(total)
    }

    /// Nonlinear homodyne step with Wiener increment `dw`, starting at time `t`.
    ///
    /// Milstein adds `½ G′G (dW² − dt)` with the full derivative of
    /// `G(ρ) = B(ρ) − Tr(Bρ)ρ`: `G′G = B(G) − Tr(B(G))ρ − Tr(Bρ)G`.
    pub fn nonlinear(&mut self, blocks: &mut [CMatrix], dw: f64, t: f64, scheme: Scheme) -> Result<StepReport> {
        self.prepare(t);
        let dt = self.dt;
        let cf = self.model.coefficient;
        let m = self.moments(blocks);
        let s = 2.0 * (cf * m.a).re;
        let tr_bg = 2.0 * (cf * (cf * m.a2 + cf.conj() * m.n - m.a * s)).re;
        let w2 = 0.5 * (dw * dw - dt);
        for (b, rho) in blocks.iter_mut().enumerate() {
            let d = rho.nrows();
            self.drift_block(b, rho, true);
            Self::apply_b(cf, &self.ar, &mut self.g);
            {
                let g = self.g.as_mut_slice();
                let r = rho.as_slice();
                for idx in 0..d * d {
                    g[idx] -= r[idx] * s;
                }
            }
            if scheme == Scheme::Milstein {
                self.model.a.mul_mat_into(&self.g, &mut self.ar);
                Self::apply_b(cf, &self.ar, &mut self.kr);
            }
            let drift = self.t1.as_slice();
            let g = self.g.as_slice();
            let bg = self.kr.as_slice();
            let r = rho.as_mut_slice();
            for idx in 0..d * d {
                let mut next = r[idx] + drift[idx] * dt + g[idx] * dw;
                if scheme == Scheme::Milstein {
                    next += (bg[idx] - r[idx] * tr_bg - g[idx] * s) * w2;
                }
                r[idx] = next;
            }
        }
        let trace = self.finish(blocks, true)?;
        Ok(StepReport {
            increment: dw + s * dt,
            trace,
            clicked: false,
        })
    }

    /// Linear homodyne step `ρ̃ + D(ρ̃)dt + B(ρ̃)dy` (+ `½B(B(ρ̃))(dy² − dt)`).
    /// Returns the new trace in `StepReport::trace`; no renormalization.
    pub fn linear(&mut self, blocks: &mut [CMatrix], dy: f64, t: f64, scheme: Scheme) -> Result<StepReport> {
        self.prepare(t);
        let dt = self.dt;
        let cf = self.model.coefficient;
        let w2 = 0.5 * (dy * dy - dt);
        for (b, rho) in blocks.iter_mut().enumerate() {
            let d = rho.nrows();
            self.drift_block(b, rho, false);
            Self::apply_b(cf, &self.ar, &mut self.g);
            if scheme == Scheme::Milstein {
                self.model.a.mul_mat_into(&self.g, &mut self.ar);
                Self::apply_b(cf, &self.ar, &mut self.kr);
            }
            let drift = self.t1.as_slice();
            let bx = self.g.as_slice();
            let bbx = self.kr.as_slice();
            let r = rho.as_mut_slice();
            for idx in 0..d * d {
                let mut next = r[idx] + drift[idx] * dt + bx[idx] * dy;
                if scheme == Scheme::Milstein {
                    next += bbx[idx] * w2;
                }
                r[idx] = next;
            }
        }
        let trace = self.finish(blocks, false)?;
        Ok(StepReport {
            increment: dy,
            trace,
            clicked: false,
        })
    }

    /// Photon-counting step. `uniform` in `(0, 1)` decides the click.
    pub fn counting(&mut self, blocks: &mut [CMatrix], uniform: f64, t: f64) -> Result<StepReport> {
        self.prepare(t);
        let dt = self.dt;
        let rate = self.model.params.eta * self.model.params.detected_port_rate();
        let m = self.moments(blocks);
        let mean_n = (m.n / m.trace).max(0.0);
        let p_click = rate * mean_n * dt;
        let clicked = p_click > 0.0 && uniform < p_click;
        for (b, rho) in blocks.iter_mut().enumerate() {
            let d = rho.nrows();
            if clicked {
                self.model.a.mul_mat_into(rho, &mut self.ar);
                adjoint_into(&self.ar, &mut self.t1);
                self.model.a.mul_mat_into(&self.t1, &mut self.t2);
                rho.copy_from(&self.t2);
            } else {
                self.drift_block(b, rho, true);
                let drift = self.t1.as_slice();
                let jump = self.t2.as_slice();
                let r = rho.as_mut_slice();
                for idx in 0..d * d {
                    r[idx] += (drift[idx] - (jump[idx] - r[idx] * mean_n) * rate) * dt;
                }
            }
        }
        let trace = self.finish(blocks, true)?;
        Ok(StepReport {
            increment: if clicked { 1.0 } else { 0.0 },
            trace,
            clicked,
        })
    }

    /// `out[b] ← D(ρ_b)`.
    pub fn drift(&mut self, blocks: &[CMatrix], t: f64, out: &mut [CMatrix]) {
        self.prepare(t);
        for (b, rho) in blocks.iter().enumerate() {
            self.drift_block(b, rho, false);
            out[b].copy_from(&self.t1);
        }
    }

    /// One classical RK4 step of the unconditional master equation.
    pub fn lindblad_rk4(&mut self, blocks: &mut [CMatrix], t: f64) {
        let dt = self.dt;
        let zeros = || -> Vec<CMatrix> { blocks.iter().map(|b| CMatrix::zeros(b.nrows(), b.ncols())).collect() };
        let (mut k1, mut k2, mut k3, mut k4) = (zeros(), zeros(), zeros(), zeros());
        let stage = |base: &[CMatrix], k: &[CMatrix], h: f64| -> Vec<CMatrix> {
            base.iter().zip(k).map(|(r, k)| r + k * c(h, 0.0)).collect()
        };
        self.drift(blocks, t, &mut k1);
        let s = stage(blocks, &k1, dt / 2.0);
        self.drift(&s, t, &mut k2);
        let s = stage(blocks, &k2, dt / 2.0);
        self.drift(&s, t, &mut k3);
        let s = stage(blocks, &k3, dt);
        self.drift(&s, t, &mut k4);
        for (b, rho) in blocks.iter_mut().enumerate() {
            *rho += (&k1[b] + &k2[b] * c(2.0, 0.0) + &k3[b] * c(2.0, 0.0) + &k4[b]) * c(dt / 6.0, 0.0);
            hermitize(rho);
        }
        self.steps += 1;
    }

    /// Pure-state step for a lossless, fully detected cavity.
    ///
    /// Every output port is homodyned at the same phase, which acts as one
    /// channel `L = −i e^{−iφ} √κ â`:
    /// `dψ = [Kψ + ⟨L†⟩Lψ − ½|⟨L⟩|²ψ]dt + (L − ⟨L⟩)ψ dW`, renormalized.
    pub fn sse(&mut self, psi: &mut CVector, dw: f64, t: f64, scheme: Scheme) -> Result<StepReport> {
        check_pure_state_config(&self.model.params)?;
        if self.model.blocks() != 1 {
            return Err(Error::invalid("layout", "pure-state evolution needs the joint layout"));
        }
        self.prepare(t);
        let dt = self.dt;
        let cf = sse_coefficient(&self.model.params);
        let a = &self.model.a;
        let [la, kpsi, b, lb, l2psi] = &mut self.v;
        a.mul_vec_into(psi.as_slice(), la.as_mut_slice());
        *la *= cf;
        self.ks[0].mul_vec_into(psi.as_slice(), kpsi.as_mut_slice());
        let mean_l = psi.dotc(la);
        for i in 0..psi.len() {
            b[i] = la[i] - mean_l * psi[i];
        }
        let w2 = 0.5 * (dw * dw - dt);
        let mut spread = c(0.0, 0.0);
        if scheme == Scheme::Milstein {
            a.mul_vec_into(b.as_slice(), lb.as_mut_slice());
            *lb *= cf;
            a.mul_vec_into(la.as_slice(), l2psi.as_mut_slice());
            let mean_l2 = psi.dotc(l2psi) * cf;
            spread = c(la.norm_squared() - mean_l.norm_sqr(), 0.0) + mean_l2 - mean_l * mean_l;
        }
        let half_var = 0.5 * mean_l.norm_sqr();
        for i in 0..psi.len() {
            let drift = kpsi[i] + mean_l.conj() * la[i] - psi[i] * half_var;
            let mut next = psi[i] + drift * dt + b[i] * dw;
            if scheme == Scheme::Milstein {
                next += (lb[i] - mean_l * b[i] - spread * psi[i]) * w2;
            }
            psi[i] = next;
        }
        self.steps += 1;
        let norm = psi.norm();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::NonFinite {
                step: self.steps,
                detail: format!("state norm became {norm}"),
            });
        }
        *psi /= c(norm, 0.0);
        Ok(StepReport {
            increment: dw + 2.0 * mean_l.re * dt,
            trace: norm * norm,
            clicked: false,
        })
    }
}

pub(crate) fn sse_coefficient(params: &CavityParams) -> C64 {
    c(0.0, -1.0) * C64::from_polar(1.0, -params.phi) * params.kappa().sqrt()
}

pub(crate) fn check_pure_state_config(params: &CavityParams) -> Result<()> {
    if params.kappa_loss.abs() > 1e-12 || (params.eta - 1.0).abs() > 1e-12 {
        return Err(Error::NotLossless(format!(
            "kappa_loss = {}, eta = {}",
            params.kappa_loss, params.eta
        )));
    }
    Ok(())
}

fn single_block(rho: &CMatrix, model: &Model) -> Result<Vec<CMatrix>> {
    let d = model.block_dim();
    if rho.nrows() != d || rho.ncols() != d {
        return Err(Error::Dimension(format!(
            "state is {}x{}, model needs {d}x{d}",
            rho.nrows(),
            rho.ncols()
        )));
    }
    Ok(vec![rho.clone()])
}

/// One nonlinear homodyne step from `t = 0` (convenience wrapper).
pub fn step_nonlinear(rho: &CMatrix, dw: f64, params: &CavityParams, scheme: Scheme) -> Result<CMatrix> {
    let model = Model::new(params.clone())?;
    let mut blocks = single_block(rho, &model)?;
    Stepper::new(&model).nonlinear(&mut blocks, dw, 0.0, scheme)?;
    Ok(blocks.pop().unwrap())
}

/// One linear step; returns `(ρ̃', Tr ρ̃')`.
pub fn step_linear(rho: &CMatrix, dy: f64, params: &CavityParams, scheme: Scheme) -> Result<(CMatrix, f64)> {
    let model = Model::new(params.clone())?;
    let mut blocks = single_block(rho, &model)?;
    let report = Stepper::new(&model).linear(&mut blocks, dy, 0.0, scheme)?;
    Ok((blocks.pop().unwrap(), report.trace))
}

pub fn step_sse(psi: &CVector, dw: f64, params: &CavityParams, scheme: Scheme) -> Result<CVector> {
    let model = Model::new(params.clone())?;
    if psi.len() != model.block_dim() {
        return Err(Error::Dimension(format!(
            "ket of length {} on a {}-dim space",
            psi.len(),
            model.block_dim()
        )));
    }
    let mut out = psi.clone();
    Stepper::new(&model).sse(&mut out, dw, 0.0, scheme)?;
    Ok(out)
}

/// One photon-counting step drawing its uniform from `noise`.
pub fn step_counting(rho: &CMatrix, params: &CavityParams, noise: &mut NoiseStream) -> Result<(CMatrix, bool)> {
    let model = Model::new(params.clone())?;
    let mut blocks = single_block(rho, &model)?;
    let report = Stepper::new(&model).counting(&mut blocks, noise.next_uniform(), 0.0)?;
    Ok((blocks.pop().unwrap(), report.clicked))
}

/// Unconditional evolution (`η = 0` master equation) by RK4 with the
/// model's `dt`, sampled at every multiple of `sample_every` steps.
/// Returns `(t, blocks)` pairs including `t = 0`.
pub fn lindblad_evolve(
    model: &Model,
    initial: Vec<CMatrix>,
    t_end: f64,
    sample_every: usize,
) -> Vec<(f64, Vec<CMatrix>)> {
    let dt = model.params.dt;
    let steps = (t_end / dt).round() as usize;
    let every = sample_every.max(1);
    let mut stepper = Stepper::new(model);
    let mut blocks = initial;
    let mut out = vec![(0.0, blocks.clone())];
    for i in 0..steps {
        stepper.lindblad_rk4(&mut blocks, i as f64 * dt);
        if (i + 1) % every == 0 || i + 1 == steps {
            out.push(((i + 1) as f64 * dt, blocks.clone()));
        }
    }
    out
}
