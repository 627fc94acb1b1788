//! A weakly driven, strongly monitored atom sits in |0> or |1> and switches
//! abruptly. Prints the switching times found with 0.2/0.8 hysteresis.
//!
//! ```text
//! cargo run --release --example quantum_jumps [t_end]
//! ```

use cavity_sme::experiment::{presets, simulate_config};

fn main() -> cavity_sme::Result<()> {
    let mut cfg = presets::preset("jumps_fig4")?;
    cfg.trajectories = 1;
    cfg.record_stride = 100;
    cfg.t_end = std::env::args().nth(1).and_then(|t| t.parse().ok()).unwrap_or(50_000.0);
    let rec = &simulate_config(&cfg)?[0];
    let p1 = rec.population_series(1);

    let mut state = if p1[0] > 0.5 { 1 } else { 0 };
    let mut dwell_start = 0.0;
    println!("g_s t     now in");
    for (&t, &p) in rec.times.iter().zip(&p1) {
        let next = match state {
            0 if p > 0.8 => 1,
            1 if p < 0.2 => 0,
            s => s,
        };
        if next != state {
            println!(
                "{:>7.2}   |{next}>   (dwelt {:.0} in |{state}>)",
                t * cfg.params.g_s,
                t - dwell_start
            );
            state = next;
            dwell_start = t;
        }
    }
    let undecided = p1.iter().filter(|&&p| (0.1..=0.9).contains(&p)).count() as f64 / p1.len() as f64;
    println!("fraction of time with 0.1 <= <1|rho|1> <= 0.9: {undecided:.3}");
    Ok(())
}
