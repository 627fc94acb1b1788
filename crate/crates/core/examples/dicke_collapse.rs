//! Four atoms probed through the cavity collapse onto a Dicke state. The
//! integrated homodyne record `y` is histogrammed and compared with the
//! Gaussian mixture it should follow.
//!
//! ```text
//! cargo run --release --example dicke_collapse
//! ```

use cavity_sme::analytic::{sensitivity_rate, RateApprox};
use cavity_sme::experiment::{histogram_at, presets, simulate_config};
use cavity_sme::stats::chi_square_gof;

fn main() -> cavity_sme::Result<()> {
    let mut cfg = presets::preset("dicke_fig2")?;
    let r = sensitivity_rate(1, &cfg.params, RateApprox::SmallG)?;
    let t = 10.0 / (r * r);
    cfg.t_end = t;
    cfg.trajectories = 300;
    cfg.record_stride = 2500;
    cfg.output.histogram_times = vec![t];
    cfg.output.histogram_bins = 40;

    let records = simulate_config(&cfg)?;
    let table = histogram_at(&cfg, &records, t)?;
    let predicted = table.analytic.clone().expect("closed form applies");
    let density = table.histogram.density();
    println!("r^2 t = 10, {} trajectories", records.len());
    println!("{:>9} {:>10} {:>10}", "y", "histogram", "predicted");
    for ((y, h), p) in table.histogram.centers().iter().zip(&density).zip(&predicted) {
        let bar = "#".repeat((h * 1000.0).round() as usize);
        println!("{y:>9.2} {h:>10.5} {p:>10.5} {bar}");
    }

    let d = cavity_sme::experiment::predicted_density(&cfg, t).expect("closed form applies");
    let (lo, hi) = d.support(4.0);
    let y: Vec<f64> = records.iter().map(|rec| rec.final_y()).collect();
    let gof = chi_square_gof(&y, |v| d.cdf(v), 20, lo, hi)?;
    println!(
        "chi^2 = {:.1} on {} dof, p = {:.3}",
        gof.statistic, gof.dof, gof.p_value
    );

    let collapsed = records
        .iter()
        .filter(|rec| rec.populations.last().is_some_and(|p| p.iter().any(|&x| x > 0.9)))
        .count();
    println!(
        "{collapsed} of {} trajectories have one Dicke population above 0.9",
        records.len()
    );
    Ok(())
}
