//! Two atoms with a symmetric dispersive shift. Measuring the x quadrature
//! cannot tell |0> from |2>, so about half the runs end in the entangled
//! state (|0> + e^{iθ}|2>)/√2 after the probe is switched off.
//!
//! ```text
//! cargo run --release --example superposition
//! ```

use cavity_sme::analytic::superposition_success;
use cavity_sme::experiment::{presets, simulate_config};
use cavity_sme::hilbert::purity;

fn main() -> cavity_sme::Result<()> {
    let mut cfg = presets::preset("superposition")?;
    cfg.trajectories = 200;
    let records = simulate_config(&cfg)?;
    let mut hits = 0;
    for rec in &records {
        let s = &rec.final_system;
        if (s[(0, 0)].re - 0.5).abs() < 0.05 && (s[(2, 2)].re - 0.5).abs() < 0.05 {
            hits += 1;
            if hits <= 3 {
                let phase = s[(2, 0)].arg();
                println!(
                    "seed {:>20}: purity {:.6}, relative phase {phase:+.3}",
                    rec.seed,
                    purity(s)
                );
            }
        }
    }
    println!(
        "{hits}/{} runs end in the superposition, expected fraction {}",
        records.len(),
        superposition_success(cfg.params.atoms)?
    );
    Ok(())
}
