use crate::analytic::xi_n_steady_at;
use crate::error::{Error, Result};
use crate::hilbert::{
    annihilation, c, coherent_state, dispersive_shift, hamiltonian_with_drive, photon_number, spin_flip, CMatrix,
    CVector, FockSpace, JointSpace, SparseOp, C64,
};
use crate::params::{CavityParams, HamiltonianKind};

/// How the density operator is stored while stepping.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Layout {
    /// One matrix on the full joint space.
    Joint,
    /// Only the diagonal blocks `ρ_nn` (cavity operators, one per Dicke
    /// sector). Exact for populations and field moments when nothing couples
    /// different `n`, i.e. `g_s = 0`.
    Sectors,
}

keyword_enum!(Layout, "layout",
    "joint" => Layout::Joint,
    "sectors" => Layout::Sectors,
);

/// Immutable operator set for one parameter choice. Shared between threads.
#[derive(Clone, Debug)]
pub struct Model {
    pub params: CavityParams,
    pub space: JointSpace,
    layout: Layout,
    /// `−iH₀ − (κ/2)â†â` per block, without drive and without `g_s`.
    base: Vec<CMatrix>,
    /// `−i Σ(σ₊+σ₋) ⊗ I`, joint layout only.
    flip: Option<CMatrix>,
    a_dense: CMatrix,
    ad_dense: CMatrix,
    pub(crate) a: SparseOp,
    pub(crate) coefficient: C64,
}

impl Model {
    pub fn new(params: CavityParams) -> Result<Self> {
        Self::with_layout(params, Layout::Joint)
    }

    /// Sector layout if the parameters allow it, joint otherwise.
    pub fn auto(params: CavityParams) -> Result<Self> {
        let layout = if Self::sectors_allowed(&params) {
            Layout::Sectors
        } else {
            Layout::Joint
        };
        Self::with_layout(params, layout)
    }

    pub fn sectors_allowed(params: &CavityParams) -> bool {
        params.g_s == 0.0
    }

    pub fn with_layout(params: CavityParams, layout: Layout) -> Result<Self> {
        params.validate()?;
        if layout == Layout::Sectors && !Self::sectors_allowed(&params) {
            return Err(Error::invalid("g_s", "sector layout needs g_s = 0"));
        }
        let space = JointSpace::of(&params);
        let kappa = params.kappa();
        let (base, flip, a_dense) = match layout {
            Layout::Joint => {
                let h0 = hamiltonian_with_drive(&params, params.hamiltonian, 0.0)?;
                let n_cav = space.cavity_op(&photon_number(space.fock));
                let base = h0 * c(0.0, -1.0) - n_cav * c(kappa / 2.0, 0.0);
                let flip = (params.hamiltonian == HamiltonianKind::Zeno)
                    .then(|| space.system_op(&spin_flip(space.spin)) * c(0.0, -1.0));
                (vec![base], flip, space.a())
            }
            Layout::Sectors => {
                let fock = space.fock;
                let n_cav = photon_number(fock);
                let base = (0..space.spin.dim())
                    .map(|n| {
                        let shift = params.g * dispersive_shift(params.hamiltonian, n, params.atoms);
                        &n_cav * c(-kappa / 2.0, -shift)
                    })
                    .collect();
                (base, None, annihilation(fock))
            }
        };
        let ad_dense = a_dense.adjoint();
        Ok(Model {
            coefficient: params.measurement_coefficient(),
            a: SparseOp::from_dense(&a_dense),
            a_dense,
            ad_dense,
            base,
            flip,
            layout,
            space,
            params,
        })
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn blocks(&self) -> usize {
        self.base.len()
    }

    pub fn block_dim(&self) -> usize {
        self.a_dense.nrows()
    }

    pub fn fock(&self) -> FockSpace {
        self.space.fock
    }

    /// `K` for block `b` at drive `beta` and coherent coupling `g_s`.
    pub fn generator(&self, block: usize, beta: C64, g_s: f64) -> CMatrix {
        let s1 = self.params.kappa1.sqrt();
        let mut k = self.base[block].clone();
        k += &self.ad_dense * (beta * s1) - &self.a_dense * (beta.conj() * s1);
        if let Some(flip) = &self.flip {
            if g_s != 0.0 {
                k += flip * c(g_s, 0.0);
            }
        }
        k
    }

    /// `Σσ₊ + σ₋` term is only representable on the joint layout.
    pub fn supports_coherent_drive(&self) -> bool {
        self.flip.is_some()
    }

    /// Initial density matrices in this model's layout.
    pub fn initial_blocks(&self, init: &InitialState) -> Result<Vec<CMatrix>> {
        let ket = init.ket(&self.params)?;
        Ok(match self.layout {
            Layout::Joint => vec![&ket * ket.adjoint()],
            Layout::Sectors => {
                let dc = self.space.fock.dim();
                (0..self.space.spin.dim())
                    .map(|n| {
                        let part = ket.rows(n * dc, dc).into_owned();
                        &part * part.adjoint()
                    })
                    .collect()
            }
        })
    }
}

/// Atomic part of a product-form initial state.
#[derive(Clone, Debug, PartialEq)]
pub enum SystemInit {
    Dicke(usize),
    /// `((|f⟩+|g⟩)/√2)^{⊗N}` in the symmetric basis.
    Binomial,
    /// Arbitrary amplitudes on `|0⟩..|N⟩`, renormalized.
    Amplitudes(Vec<C64>),
}

/// Cavity part of the initial state.
#[derive(Clone, Debug, PartialEq)]
pub enum CavityInit {
    Vacuum,
    Coherent(C64),
    /// Each sector `n` holds its own steady amplitude `ξ_n` at `β(0)`, as
    /// after probing with the detector turned off: `Σ a_n |n⟩|ξ_n⟩`.
    Steady,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InitialState {
    pub system: SystemInit,
    pub cavity: CavityInit,
}

impl Default for InitialState {
    fn default() -> Self {
        InitialState {
            system: SystemInit::Dicke(0),
            cavity: CavityInit::Vacuum,
        }
    }
}

impl InitialState {
    pub fn new(system: SystemInit, cavity: CavityInit) -> Self {
        InitialState { system, cavity }
    }

    pub fn system_amplitudes(&self, atoms: usize) -> Result<CVector> {
        let d = atoms + 1;
        let amps = match &self.system {
            SystemInit::Dicke(n) => {
                if *n > atoms {
                    return Err(Error::invalid(
                        "initial",
                        format!("Dicke state |{n}⟩ needs at least {n} atoms"),
                    ));
                }
                crate::hilbert::basis_ket(d, *n)
            }
            SystemInit::Binomial => {
                let w = crate::analytic::binomial_weights(atoms);
                CVector::from_iterator(d, w.into_iter().map(|x| c(x.sqrt(), 0.0)))
            }
            SystemInit::Amplitudes(v) => {
                if v.len() != d {
                    return Err(Error::Dimension(format!("{} amplitudes for {d} Dicke states", v.len())));
                }
                CVector::from_column_slice(v)
            }
        };
        let norm = amps.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::invalid(
                "initial",
                "system amplitudes have zero or non-finite norm",
            ));
        }
        Ok(amps / c(norm, 0.0))
    }

    /// Joint ket.
    pub fn ket(&self, params: &CavityParams) -> Result<CVector> {
        let space = JointSpace::of(params);
        let sys = self.system_amplitudes(params.atoms)?;
        let dc = space.fock.dim();
        let mut ket = CVector::zeros(space.dim());
        let beta0 = params.beta.value_at(0.0);
        for n in 0..space.spin.dim() {
            let cav = match &self.cavity {
                CavityInit::Vacuum => crate::hilbert::basis_ket(dc, 0),
                CavityInit::Coherent(xi) => coherent_state(*xi, space.fock),
                CavityInit::Steady => coherent_state(xi_n_steady_at(n, params, beta0), space.fock),
            };
            ket.rows_mut(n * dc, dc).copy_from(&(cav * sys[n]));
        }
        Ok(ket)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{creation, hermiticity_defect, max_abs_diff, partial_trace, trace, Keep};

    fn dicke4() -> CavityParams {
        let mut p = CavityParams::zeno_figure(0.0);
        p.hamiltonian = HamiltonianKind::Dicke;
        p.atoms = 4;
        p.cutoff = 4;
        p
    }

    #[test]
    fn sector_blocks_match_joint_diagonal() {
        let p = dicke4();
        let init = InitialState::new(SystemInit::Binomial, CavityInit::Steady);
        let joint = Model::new(p.clone()).unwrap();
        let sectors = Model::auto(p).unwrap();
        assert_eq!(sectors.layout(), Layout::Sectors);
        let rho = &joint.initial_blocks(&init).unwrap()[0];
        let blocks = sectors.initial_blocks(&init).unwrap();
        let dc = 5;
        for (n, b) in blocks.iter().enumerate() {
            let view = rho.view((n * dc, n * dc), (dc, dc)).into_owned();
            assert!(max_abs_diff(&view, b) < 1e-15);
        }
        let sys = partial_trace(rho, joint.space, Keep::System).unwrap();
        for (n, w) in crate::analytic::binomial_weights(4).iter().enumerate() {
            assert!((sys[(n, n)].re - w).abs() < 1e-12);
            assert!((trace(&blocks[n]).re - w).abs() < 1e-12);
        }
    }

    #[test]
    fn generator_is_hermitian_part_damping() {
        let p = CavityParams::zeno_figure(0.05);
        let m = Model::new(p).unwrap();
        let k = m.generator(0, c(0.2, 0.1), 0.05);
        // K + K† = −κ â†â.
        let sum = &k + k.adjoint();
        let n = m.space.cavity_op(&photon_number(m.fock()));
        assert!(max_abs_diff(&sum, &(n * c(-1.0, 0.0))) < 1e-14);
        let h = (&k - k.adjoint()) * c(0.0, 0.5);
        assert!(hermiticity_defect(&h) < 1e-14);
        assert!(m.space.cavity_op(&creation(m.fock())) == m.ad_dense);
    }

    #[test]
    fn rejects_sectors_with_coherent_drive() {
        assert!(Model::with_layout(CavityParams::zeno_figure(0.01), Layout::Sectors).is_err());
        assert_eq!(
            Model::auto(CavityParams::zeno_figure(0.01)).unwrap().layout(),
            Layout::Joint
        );
    }
}
