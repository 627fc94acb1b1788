//! The finite-oscillator measurement step against the continuum equations.

use cavity_sme::hilbert::{basis_ket, coherent_state, kron_vec, max_abs_diff, projector, FockSpace};
use cavity_sme::homodyne::{DiscreteOracle, HomodyneKernel};
use cavity_sme::noise::NoiseStream;
use cavity_sme::sme::{step_nonlinear, Scheme};
use cavity_sme::stats::{chi_square_gof, mean_and_standard_error};
use cavity_sme::{CMatrix, CavityParams, C64};

const MU: f64 = 200.0;

fn setup(dt: f64, xi: C64) -> (CavityParams, CMatrix) {
    let mut p = CavityParams::zeno_figure(0.0);
    p.dt = dt;
    let sys = (basis_ket(2, 0) + basis_ket(2, 1)) * C64::new(0.5f64.sqrt(), 0.0);
    let rho = projector(&kron_vec(&sys, &coherent_state(xi, FockSpace::new(p.cutoff))));
    (p, rho)
}

/// `−i e^{−iφ} Tr(âρ) + c.c.`
fn quadrature(p: &CavityParams, rho: &CMatrix) -> f64 {
    let space = cavity_sme::hilbert::JointSpace::of(p);
    let a = cavity_sme::hilbert::expect(&space.a(), rho).unwrap();
    2.0 * (C64::new(0.0, -1.0) * C64::from_polar(1.0, -p.phi) * a).re
}

#[test]
fn readout_mean_and_variance() {
    let (p, rho) = setup(1e-3, C64::new(0.0, 0.5));
    let oracle = DiscreteOracle::new(p.clone(), HomodyneKernel::exact(MU, p.phi).unwrap()).unwrap();
    let t2 = (p.kappa2 * p.dt).sqrt();
    let predicted = t2 * quadrature(&p, &rho);

    let probs = oracle.probabilities(&rho, 0.0).unwrap();
    let scaled: Vec<f64> = oracle.kernel.k_range().map(|k| k as f64 / (2.0 * MU).sqrt()).collect();
    let mean: f64 = probs.iter().zip(&scaled).map(|(p, x)| p * x).sum();
    let var: f64 = probs.iter().zip(&scaled).map(|(p, x)| p * (x - mean).powi(2)).sum();
    assert!(
        (mean - predicted).abs() < 0.02 * predicted.abs(),
        "mean {mean} vs {predicted}"
    );
    assert!((var - 1.0).abs() < 0.01, "variance {var}");

    let mut noise = NoiseStream::new(17);
    let draws: Vec<f64> = (0..100_000)
        .map(|_| oracle.sample_k(&rho, 0.0, &mut noise).unwrap() as f64 / (2.0 * MU).sqrt())
        .collect();
    let (m, se) = mean_and_standard_error(&draws);
    assert!(
        (m - predicted).abs() < 5.0 * se,
        "sampled mean {m} ± {se} vs {predicted}"
    );
    assert!(predicted.abs() > 5.0 * se, "signal too weak to test");
}

#[test]
fn vacuum_samples_follow_u00() {
    let mut p = CavityParams::zeno_figure(0.0);
    p.beta = cavity_sme::DriveSchedule::constant(C64::new(0.0, 0.0));
    p.g = 0.0;
    let kernel = HomodyneKernel::exact(32.0, 0.0).unwrap();
    let oracle = DiscreteOracle::new(p, kernel).unwrap();
    let rho = projector(&basis_ket(8, 0));
    let probs = oracle.probabilities(&rho, 0.0).unwrap();
    let ks: Vec<i64> = oracle.kernel.k_range().collect();
    let mut noise = NoiseStream::new(3);
    // Unit cells centred on the integer outcomes.
    let draws: Vec<f64> = (0..100_000)
        .map(|_| oracle.sample_k(&rho, 0.0, &mut noise).unwrap() as f64)
        .collect();
    let cdf = |x: f64| -> f64 {
        ks.iter()
            .zip(&probs)
            .filter(|(k, _)| (**k as f64) < x)
            .map(|(_, p)| p)
            .sum()
    };
    let (lo, hi) = (-20.5, 20.5);
    let gof = chi_square_gof(&draws, cdf, 41, lo, hi).unwrap();
    assert!(gof.p_value > 0.01, "{gof:?}");
}

/// Largest mismatch between the discrete update and one continuum step over
/// outcomes within two standard deviations.
fn mismatch(dt: f64, scheme: Scheme) -> f64 {
    let (p, rho) = setup(dt, C64::new(0.3, 0.4));
    let oracle = DiscreteOracle::new(p.clone(), HomodyneKernel::exact(MU, p.phi).unwrap()).unwrap();
    let drift = (p.kappa2 * dt).sqrt() * quadrature(&p, &rho);
    let root = (2.0 * MU).sqrt();
    let mut worst: f64 = 0.0;
    for k in (-(2.0 * root) as i64)..=((2.0 * root) as i64) {
        let dw = (k as f64 / root - drift) * dt.sqrt();
        let (discrete, _) = oracle.step(&rho, k, 0.0).unwrap();
        let continuum = step_nonlinear(&rho, dw, &p, scheme).unwrap();
        worst = worst.max(max_abs_diff(&discrete, &continuum));
    }
    worst
}

#[test]
fn discrete_step_is_a_milstein_step() {
    let coarse = mismatch(1e-2, Scheme::Milstein);
    let fine = mismatch(1e-3, Scheme::Milstein);
    let slope = (coarse / fine).log10();
    assert!(slope > 1.3, "Milstein mismatch {coarse:e} -> {fine:e}, slope {slope}");

    // Without the (dW² − dt) term the agreement is only first order.
    let euler = (mismatch(1e-2, Scheme::Euler) / mismatch(1e-3, Scheme::Euler)).log10();
    assert!((euler - 1.0).abs() < 0.2, "Euler slope {euler}");
}
