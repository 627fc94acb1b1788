//! Strong convergence of the Euler and Milstein schemes: each Brownian path
//! is sampled at dt = 1e-5 and summed for the coarse steps, and errors are
//! taken against the fine-step solution on the same path.
//!
//! ```text
//! cargo run --release --example integrator_order
//! ```

use cavity_sme::hilbert::max_abs_diff;
use cavity_sme::noise::NoiseStream;
use cavity_sme::sme::{CavityInit, InitialState, Model, Scheme, Stepper, SystemInit};
use cavity_sme::{CMatrix, CavityParams};

fn main() -> cavity_sme::Result<()> {
    let model = Model::new(CavityParams::zeno_figure(0.05))?;
    let init = InitialState::new(SystemInit::Binomial, CavityInit::Steady);
    let dt_ref = 1e-5;
    let paths = 5;
    let factors = [1000, 100, 10];

    let solve = |dw: &[f64], factor: usize, scheme: Scheme| -> cavity_sme::Result<CMatrix> {
        let mut stepper = Stepper::new(&model);
        stepper.set_dt(dt_ref * factor as f64);
        let mut blocks = model.initial_blocks(&init)?;
        for (i, chunk) in dw.chunks(factor).enumerate() {
            stepper.nonlinear(&mut blocks, chunk.iter().sum(), i as f64 * stepper.dt(), scheme)?;
        }
        Ok(blocks.remove(0))
    };

    for scheme in [Scheme::Euler, Scheme::Milstein] {
        let mut errors = [0.0; 3];
        for path in 0..paths {
            let mut noise = NoiseStream::new(7 + path);
            let dw: Vec<f64> = (0..100_000).map(|_| noise.next_increment(dt_ref)).collect();
            let reference = solve(&dw, 1, scheme)?;
            for (e, &f) in errors.iter_mut().zip(&factors) {
                *e += max_abs_diff(&solve(&dw, f, scheme)?, &reference) / paths as f64;
            }
        }
        println!("{scheme}, mean over {paths} paths:");
        let mut previous: Option<f64> = None;
        for (&factor, &err) in factors.iter().zip(&errors) {
            let slope = previous
                .map(|p| format!("  slope {:.2}", (p / err).log10()))
                .unwrap_or_default();
            println!("  dt = {:.0e}: max |error| = {err:.3e}{slope}", dt_ref * factor as f64);
            previous = Some(err);
        }
    }
    Ok(())
}
