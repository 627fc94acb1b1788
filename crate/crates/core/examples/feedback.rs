//! Bang-bang feedback: the drive g_s is switched on whenever the |1>
//! population falls below 0.2 and off above 0.8, which parks the atom in |1>.
//!
//! ```text
//! cargo run --release --example feedback
//! ```

use cavity_sme::experiment::{presets, simulate_config};

fn main() -> cavity_sme::Result<()> {
    let mut cfg = presets::preset("feedback")?;
    cfg.trajectories = 4;
    cfg.t_end = 500.0;
    cfg.record_stride = 500;
    let records = simulate_config(&cfg)?;
    for rec in &records {
        let p1 = rec.population_series(1);
        let on = rec.g_s.iter().filter(|&&g| g > 0.0).count() as f64 / rec.g_s.len() as f64;
        let late: Vec<f64> = p1.iter().skip(p1.len() / 2).copied().collect();
        let mean = late.iter().sum::<f64>() / late.len() as f64;
        println!(
            "seed {:>20}: <1|rho|1> averaged over the second half {mean:.3}, drive on {:.0}% of samples",
            rec.seed,
            100.0 * on
        );
    }
    Ok(())
}
