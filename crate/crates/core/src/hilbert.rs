//! Truncated Fock space, symmetric spin space and their product.
//!
//! Operators are plain dense complex matrices. Stepping code converts the few
//! operators it applies every step into [`SparseOp`] once, since the ladder
//! and number operators have at most a few non-zeros per row.

use log::warn;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::params::{CavityParams, HamiltonianKind};

pub type C64 = nalgebra::Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Deficit of a truncated coherent state above which a warning is logged.
pub const COHERENT_DEFICIT_WARN: f64 = 1e-6;

#[inline]
pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Cavity mode with photon numbers `0..=cutoff`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FockSpace {
    pub cutoff: usize,
}

impl FockSpace {
    pub fn new(cutoff: usize) -> Self {
        FockSpace { cutoff }
    }

    pub fn dim(&self) -> usize {
        self.cutoff + 1
    }
}

/// Symmetric Dicke states `|n⟩`, `n = 0..=atoms` atoms in `|f⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SpinSpace {
    pub atoms: usize,
}

impl SpinSpace {
    pub fn new(atoms: usize) -> Self {
        SpinSpace { atoms }
    }

    pub fn dim(&self) -> usize {
        self.atoms + 1
    }
}

/// `system ⊗ cavity`, system index slowest.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct JointSpace {
    pub spin: SpinSpace,
    pub fock: FockSpace,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Keep {
    System,
    Cavity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ladder {
    Raise,
    Lower,
}

impl JointSpace {
    pub fn new(atoms: usize, cutoff: usize) -> Self {
        JointSpace {
            spin: SpinSpace::new(atoms),
            fock: FockSpace::new(cutoff),
        }
    }

    pub fn of(params: &CavityParams) -> Self {
        JointSpace::new(params.atoms, params.cutoff)
    }

    pub fn dim(&self) -> usize {
        self.spin.dim() * self.fock.dim()
    }

    #[inline]
    pub fn index(&self, n: usize, photons: usize) -> usize {
        n * self.fock.dim() + photons
    }

    /// `I_sys ⊗ op`.
    pub fn cavity_op(&self, op: &CMatrix) -> CMatrix {
        kron(&CMatrix::identity(self.spin.dim(), self.spin.dim()), op)
    }

    /// `op ⊗ I_cav`.
    pub fn system_op(&self, op: &CMatrix) -> CMatrix {
        kron(op, &CMatrix::identity(self.fock.dim(), self.fock.dim()))
    }

    /// `â` on the joint space.
    pub fn a(&self) -> CMatrix {
        self.cavity_op(&annihilation(self.fock))
    }

    pub fn product_ket(&self, system: &CVector, cavity: &CVector) -> Result<CVector> {
        if system.len() != self.spin.dim() || cavity.len() != self.fock.dim() {
            return Err(Error::Dimension(format!(
                "product of {} and {} components on a {}x{} space",
                system.len(),
                cavity.len(),
                self.spin.dim(),
                self.fock.dim()
            )));
        }
        Ok(kron_vec(system, cavity))
    }
}

/// `â` on the Fock factor: `⟨n−1|â|n⟩ = √n`.
pub fn annihilation(fock: FockSpace) -> CMatrix {
    let d = fock.dim();
    let mut m = CMatrix::zeros(d, d);
    for n in 1..d {
        m[(n - 1, n)] = c((n as f64).sqrt(), 0.0);
    }
    m
}

pub fn creation(fock: FockSpace) -> CMatrix {
    annihilation(fock).adjoint()
}

/// `â†â` on the Fock factor.
pub fn photon_number(fock: FockSpace) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_iterator(
        fock.dim(),
        (0..fock.dim()).map(|n| c(n as f64, 0.0)),
    ))
}

/// `n̂` on the spin factor.
pub fn excitation_number(spin: SpinSpace) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_iterator(
        spin.dim(),
        (0..spin.dim()).map(|n| c(n as f64, 0.0)),
    ))
}

/// `Σσ₊|n⟩ = √((n+1)(N−n)) |n+1⟩`, `Σσ₋|n⟩ = √(n(N+1−n)) |n−1⟩`.
pub fn collective_ladder(spin: SpinSpace, direction: Ladder) -> CMatrix {
    let d = spin.dim();
    let big_n = spin.atoms as f64;
    let mut m = CMatrix::zeros(d, d);
    for n in 0..spin.atoms {
        let nf = n as f64;
        let amp = ((nf + 1.0) * (big_n - nf)).sqrt();
        match direction {
            Ladder::Raise => m[(n + 1, n)] = c(amp, 0.0),
            Ladder::Lower => m[(n, n + 1)] = c(amp, 0.0),
        }
    }
    m
}

/// Eigenvalue of the atomic factor multiplying `g â†â` in sector `n`.
pub fn dispersive_shift(kind: HamiltonianKind, n: usize, atoms: usize) -> f64 {
    match kind {
        HamiltonianKind::Dicke | HamiltonianKind::Zeno => n as f64,
        HamiltonianKind::Shifted => n as f64 - atoms as f64 / 2.0,
    }
}

/// System Hamiltonian on the joint space (`ħ = 1`).
pub fn hamiltonian(params: &CavityParams, kind: HamiltonianKind) -> Result<CMatrix> {
    hamiltonian_with_drive(params, kind, params.g_s)
}

/// Same as [`hamiltonian`] with an explicit `g_s` (feedback changes it).
pub fn hamiltonian_with_drive(params: &CavityParams, kind: HamiltonianKind, g_s: f64) -> Result<CMatrix> {
    if !params.g.is_finite() || !g_s.is_finite() {
        return Err(Error::invalid("g", "couplings must be finite"));
    }
    let space = JointSpace::of(params);
    let shift = CMatrix::from_diagonal(&CVector::from_iterator(
        space.spin.dim(),
        (0..space.spin.dim()).map(|n| c(dispersive_shift(kind, n, params.atoms), 0.0)),
    ));
    let mut h = kron(&shift, &photon_number(space.fock)) * c(params.g, 0.0);
    if kind == HamiltonianKind::Zeno && g_s != 0.0 {
        h += space.system_op(&spin_flip(space.spin)) * c(g_s, 0.0);
    }
    Ok(h)
}

/// `Σ(σ₊ + σ₋)` on the spin factor.
pub fn spin_flip(spin: SpinSpace) -> CMatrix {
    collective_ladder(spin, Ladder::Raise) + collective_ladder(spin, Ladder::Lower)
}

/// Truncated coherent state with amplitudes `∝ ξⁿ/√(n!)`, renormalized.
pub fn coherent_state(xi: C64, fock: FockSpace) -> CVector {
    let (ket, deficit) = coherent_state_with_deficit(xi, fock);
    if deficit > COHERENT_DEFICIT_WARN {
        warn!(
            "coherent state |{xi}⟩ truncated at N_p = {}: norm deficit {deficit:.2e}",
            fock.cutoff
        );
    }
    ket
}

/// The renormalized ket and `1 − Σ_{n≤N_p} |⟨n|ξ⟩|²`.
pub fn coherent_state_with_deficit(xi: C64, fock: FockSpace) -> (CVector, f64) {
    let d = fock.dim();
    let mut amps = CVector::zeros(d);
    amps[0] = c(1.0, 0.0);
    for n in 1..d {
        amps[n] = amps[n - 1] * xi / (n as f64).sqrt();
    }
    let norm2: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
    let deficit = (1.0 - norm2 * (-xi.norm_sqr()).exp()).max(0.0);
    amps /= c(norm2.sqrt(), 0.0);
    (amps, deficit)
}

pub fn basis_ket(dim: usize, i: usize) -> CVector {
    let mut v = CVector::zeros(dim);
    v[i] = c(1.0, 0.0);
    v
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn kron_vec(a: &CVector, b: &CVector) -> CVector {
    a.kronecker(b)
}

pub fn projector(ket: &CVector) -> CMatrix {
    ket * ket.adjoint()
}

pub fn partial_trace(rho: &CMatrix, space: JointSpace, keep: Keep) -> Result<CMatrix> {
    check_square(rho, space.dim(), "partial_trace")?;
    let ds = space.spin.dim();
    let dc = space.fock.dim();
    Ok(match keep {
        Keep::System => CMatrix::from_fn(ds, ds, |n, m| {
            (0..dc).map(|p| rho[(space.index(n, p), space.index(m, p))]).sum()
        }),
        Keep::Cavity => CMatrix::from_fn(dc, dc, |p, q| {
            (0..ds).map(|n| rho[(space.index(n, p), space.index(n, q))]).sum()
        }),
    })
}

/// `Tr(op ρ)`.
pub fn expect(op: &CMatrix, rho: &CMatrix) -> Result<C64> {
    if op.shape() != rho.shape() || !op.is_square() {
        return Err(Error::Dimension(format!(
            "expect: operator {:?} vs state {:?}",
            op.shape(),
            rho.shape()
        )));
    }
    let d = op.nrows();
    let mut acc = c(0.0, 0.0);
    for i in 0..d {
        for k in 0..d {
            acc += op[(i, k)] * rho[(k, i)];
        }
    }
    Ok(acc)
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}

/// `max |ρ − ρ†|`.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let d = m.nrows();
    let mut worst: f64 = 0.0;
    for j in 0..d {
        for i in 0..=j {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Replaces `m` by `(m + m†)/2`.
pub fn hermitize(m: &mut CMatrix) {
    let d = m.nrows();
    for j in 0..d {
        m[(j, j)].im = 0.0;
        for i in 0..j {
            let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }
}

/// Smallest eigenvalue of the Hermitian part of `m`.
pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    let mut h = m.clone();
    hermitize(&mut h);
    h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

/// `Tr(ρ²)` for Hermitian `ρ`.
pub fn purity(rho: &CMatrix) -> f64 {
    rho.iter().map(|z| z.norm_sqr()).sum()
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn check_square(m: &CMatrix, dim: usize, what: &str) -> Result<()> {
    if m.nrows() != dim || m.ncols() != dim {
        return Err(Error::Dimension(format!(
            "{what}: expected {dim}x{dim}, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// Compressed-row complex matrix used for repeated `S·X` products.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOp {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl SparseOp {
    pub fn from_dense(m: &CMatrix) -> Self {
        assert!(m.is_square(), "SparseOp needs a square matrix");
        let dim = m.nrows();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for i in 0..dim {
            for j in 0..dim {
                let v = m[(i, j)];
                if v.re != 0.0 || v.im != 0.0 {
                    cols.push(j);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        SparseOp {
            dim,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for idx in self.row_ptr[i]..self.row_ptr[i + 1] {
                m[(i, self.cols[idx])] = self.vals[idx];
            }
        }
        m
    }

    /// `out = S·x` for column-major `x`.
    pub fn mul_mat_into(&self, x: &CMatrix, out: &mut CMatrix) {
        let d = self.dim;
        debug_assert_eq!(x.nrows(), d);
        debug_assert_eq!(out.shape(), x.shape());
        let xs = x.as_slice();
        let os = out.as_mut_slice();
        for j in 0..x.ncols() {
            let xc = &xs[j * d..(j + 1) * d];
            let oc = &mut os[j * d..(j + 1) * d];
            for i in 0..d {
                let mut acc = C64::new(0.0, 0.0);
                for idx in self.row_ptr[i]..self.row_ptr[i + 1] {
                    acc += self.vals[idx] * xc[self.cols[idx]];
                }
                oc[i] = acc;
            }
        }
    }

    pub fn mul_mat(&self, x: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(x.nrows(), x.ncols());
        self.mul_mat_into(x, &mut out);
        out
    }

    pub fn mul_vec_into(&self, x: &[C64], out: &mut [C64]) {
        for i in 0..self.dim {
            let mut acc = C64::new(0.0, 0.0);
            for idx in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[idx] * x[self.cols[idx]];
            }
            out[i] = acc;
        }
    }

    /// `Tr(S·x)` without forming the product.
    pub fn trace_product(&self, x: &CMatrix) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..self.dim {
            for idx in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[idx] * x[(self.cols[idx], i)];
            }
        }
        acc
    }
}

/// `out = x†`.
pub fn adjoint_into(x: &CMatrix, out: &mut CMatrix) {
    let d = x.nrows();
    for j in 0..d {
        for i in 0..d {
            out[(i, j)] = x[(j, i)].conj();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: C64, b: C64) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn ladder_matrix_elements() {
        let f = FockSpace::new(5);
        let a = annihilation(f);
        assert!(close(a[(3, 4)], c(2.0, 0.0)));
        let vac = basis_ket(6, 0);
        assert!((&a * &vac).norm() == 0.0);
        let one = basis_ket(6, 1);
        assert!(((&a * &one) - basis_ket(6, 0)).norm() < 1e-15);
        let n = creation(f) * &a;
        assert!(max_abs_diff(&n, &photon_number(f)) < 1e-14);
    }

    #[test]
    fn truncated_commutator() {
        let f = FockSpace::new(4);
        let a = annihilation(f);
        let ad = creation(f);
        let comm = &a * &ad - &ad * &a;
        let mut expected = CMatrix::identity(5, 5);
        expected[(4, 4)] = c(1.0 - 5.0, 0.0);
        assert!(max_abs_diff(&comm, &expected) < 1e-14);
    }

    #[test]
    fn collective_elements() {
        let s = SpinSpace::new(4);
        let up = collective_ladder(s, Ladder::Raise);
        let v = &up * basis_ket(5, 1);
        assert!((v[2] - c(6f64.sqrt(), 0.0)).norm() < 1e-15);
        assert_eq!((&up * basis_ket(5, 4)).norm(), 0.0);
        let down = collective_ladder(SpinSpace::new(1), Ladder::Lower);
        assert!(close((&down * basis_ket(2, 1))[0], c(1.0, 0.0)));
        assert_eq!(up.adjoint(), collective_ladder(s, Ladder::Lower));
    }

    #[test]
    fn hamiltonian_elements() {
        let mut p = CavityParams::zeno_figure(0.0);
        p.cutoff = 1;
        p.hamiltonian = HamiltonianKind::Dicke;
        let h = hamiltonian(&p, HamiltonianKind::Dicke).unwrap();
        let sp = JointSpace::of(&p);
        assert!(close(h[(sp.index(1, 1), sp.index(1, 1))], c(p.g, 0.0)));
        p.g = 0.0;
        let h = hamiltonian(&p, HamiltonianKind::Dicke).unwrap();
        assert_eq!(h.norm(), 0.0);

        assert_eq!(dispersive_shift(HamiltonianKind::Shifted, 0, 2), -1.0);
        assert_eq!(dispersive_shift(HamiltonianKind::Shifted, 2, 2), 1.0);
    }

    #[test]
    fn coherent_expectation() {
        let f = FockSpace::new(3);
        let xi = c(0.2828, 0.0);
        let ket = coherent_state(xi, f);
        assert!((ket.norm() - 1.0).abs() < 1e-15);
        let a_mean = (ket.adjoint() * annihilation(f) * &ket)[0];
        assert!((a_mean - xi).norm() < 1e-4);
        let rho = projector(&coherent_state(c(0.5, 0.3), FockSpace::new(20)));
        let n = expect(&photon_number(FockSpace::new(20)), &rho).unwrap();
        assert!((n.re - 0.34).abs() < 1e-12);
        assert_eq!(coherent_state(c(0.0, 0.0), f), basis_ket(4, 0));
    }

    #[test]
    fn tensor_identity_and_dimension_errors() {
        let i = kron(&CMatrix::identity(2, 2), &CMatrix::identity(3, 3));
        assert_eq!(i, CMatrix::identity(6, 6));
        let space = JointSpace::new(1, 2);
        assert!(partial_trace(&CMatrix::identity(5, 5), space, Keep::System).is_err());
        assert!(expect(&CMatrix::identity(2, 2), &CMatrix::identity(3, 3)).is_err());
    }

    #[test]
    fn sparse_matches_dense() {
        let space = JointSpace::new(2, 3);
        let a = space.a();
        let s = SparseOp::from_dense(&a);
        assert_eq!(s.to_dense(), a);
        let x = CMatrix::from_fn(12, 12, |i, j| c(i as f64 - 0.3 * j as f64, (i * j) as f64 * 0.1));
        assert!(max_abs_diff(&s.mul_mat(&x), &(&a * &x)) < 1e-12);
        assert!((s.trace_product(&x) - trace(&(&a * &x))).norm() < 1e-12);
    }

    fn arb_ket(dim: usize) -> impl Strategy<Value = CVector> {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), dim).prop_filter_map("zero ket", move |v| {
            let ket = CVector::from_iterator(dim, v.into_iter().map(|(r, i)| c(r, i)));
            let n = ket.norm();
            (n > 1e-3).then(|| ket / c(n, 0.0))
        })
    }

    proptest! {
        #[test]
        fn partial_trace_inverts_tensor(s in arb_ket(3), f in arb_ket(4)) {
            let space = JointSpace::new(2, 3);
            let rs = projector(&s);
            let rf = projector(&f);
            let rho = kron(&rs, &rf);
            let sys = partial_trace(&rho, space, Keep::System).unwrap();
            let cav = partial_trace(&rho, space, Keep::Cavity).unwrap();
            prop_assert!(max_abs_diff(&sys, &rs) < 1e-12);
            prop_assert!(max_abs_diff(&cav, &rf) < 1e-12);
            prop_assert!((trace(&sys) - trace(&rho)).norm() < 1e-12);
            prop_assert!((expect(&CMatrix::identity(12, 12), &rho).unwrap() - trace(&rho)).norm() < 1e-12);
        }

        #[test]
        fn hamiltonians_are_hermitian(
            g in -1.0f64..1.0, g_s in -0.5f64..0.5, atoms in 0usize..5, cutoff in 0usize..6, kind in 0usize..3
        ) {
            let kind = [HamiltonianKind::Dicke, HamiltonianKind::Shifted, HamiltonianKind::Zeno][kind];
            let mut p = CavityParams::zeno_figure(0.0);
            p.g = g;
            p.atoms = atoms;
            p.cutoff = cutoff;
            let h = hamiltonian_with_drive(&p, kind, g_s).unwrap();
            prop_assert!(hermiticity_defect(&h) < 1e-12);
        }
    }
}
