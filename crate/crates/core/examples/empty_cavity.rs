//! An empty cavity filled from vacuum by the probe, integrated with the
//! pure-state equation and compared with the closed-form amplitude.
//!
//! ```text
//! cargo run --release --example empty_cavity
//! ```

use cavity_sme::analytic::empty_cavity_amplitude;
use cavity_sme::experiment::{presets, simulate_config};
use cavity_sme::C64;

fn main() -> cavity_sme::Result<()> {
    let mut cfg = presets::preset("empty_cavity")?;
    cfg.trajectories = 1;
    let rec = &simulate_config(&cfg)?[0];
    let p = &cfg.params;

    println!("{:>6} {:>12} {:>12} {:>10}", "t", "Re<a> sim", "Re<a> exact", "error");
    for (i, (&t, field)) in rec.times.iter().zip(&rec.field).enumerate() {
        if i % 20 != 0 {
            continue;
        }
        let exact = empty_cavity_amplitude(t, C64::new(0.0, 0.0), cfg.beta, p.kappa1, p.kappa());
        println!(
            "{t:>6.1} {:>12.6} {:>12.6} {:>10.2e}",
            field.re,
            exact.re,
            (field - exact).norm()
        );
    }
    Ok(())
}
