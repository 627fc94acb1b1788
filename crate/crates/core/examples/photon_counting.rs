//! The same single-atom setup monitored by a photon counter instead of a
//! homodyne detector. The transmitted light reveals the atomic state through
//! the click rate.
//!
//! ```text
//! cargo run --release --example photon_counting
//! ```

use cavity_sme::experiment::{presets, simulate_config};

fn main() -> cavity_sme::Result<()> {
    let mut cfg = presets::preset("photon_counting")?;
    cfg.trajectories = 4;
    cfg.t_end = 400.0;
    cfg.record_stride = 2000;
    let records = simulate_config(&cfg)?;
    for rec in &records {
        let rate = rec.diagnostics.clicks as f64 / cfg.t_end;
        let p0 = rec.populations.last().map_or(f64::NAN, |p| p[0]);
        println!(
            "seed {:>20}: {} clicks ({rate:.3} per unit time), final <0|rho|0> = {p0:.4}",
            rec.seed, rec.diagnostics.clicks
        );
    }
    Ok(())
}
