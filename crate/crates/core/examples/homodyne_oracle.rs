//! The finite-oscillator homodyne model: readout amplitudes u_pq(k) against
//! their strong-oscillator Gaussian forms, and one discrete measurement step.
//!
//! ```text
//! cargo run --release --example homodyne_oracle
//! ```

use cavity_sme::homodyne::{closed_form_deviation, u_pq_gaussian, DiscreteOracle, HomodyneKernel};
use cavity_sme::noise::NoiseStream;
use cavity_sme::sme::{InitialState, Model};
use cavity_sme::CavityParams;

fn main() -> cavity_sme::Result<()> {
    println!("{:>6} {:>12}", "mu", "deviation");
    for mu in [8.0, 32.0, 128.0, 512.0] {
        let kernel = HomodyneKernel::exact(mu, 0.0)?;
        println!("{mu:>6} {:>12.4e}", closed_form_deviation(&kernel)?);
    }

    let mu = 50.0;
    let kernel = HomodyneKernel::exact(mu, 0.0)?;
    println!("\nmu = {mu}: u00 and u10 (exact, then limit)");
    for k in (-20..=20).step_by(4) {
        println!(
            "k = {k:>3}: u00 {:.5} ({:.5}), u10 {:.5} ({:.5})",
            kernel.u(0, 0, k).re,
            u_pq_gaussian(0, 0, k, mu, 0.0)?.re,
            kernel.u(1, 0, k),
            u_pq_gaussian(1, 0, k, mu, 0.0)?
        );
    }

    let mut p = CavityParams::zeno_figure(0.05);
    p.dt = 1e-3;
    let model = Model::new(p.clone())?;
    let rho = model.initial_blocks(&InitialState::default())?.remove(0);
    let oracle = DiscreteOracle::new(p.clone(), HomodyneKernel::exact(200.0, p.phi)?)?;
    let mut noise = NoiseStream::new(5);
    let (next, k) = oracle.sample_step(&rho, 0.0, &mut noise)?;
    let (_, p_k) = oracle.step(&rho, k, 0.0)?;
    let trace: f64 = next.diagonal().iter().map(|z| z.re).sum();
    println!("\none discrete step at mu = 200: outcome k = {k}, P_k = {p_k:.4e}, trace after {trace:.12}");
    Ok(())
}
