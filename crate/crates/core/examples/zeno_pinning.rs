//! One atom driven between |0> and |1> while the cavity monitors its state.
//! Weak driving is frozen by the measurement; strong driving nearly follows
//! the unmonitored Rabi oscillation. All curves share one noise realization.
//!
//! ```text
//! cargo run --release --example zeno_pinning
//! ```

use cavity_sme::noise::NoiseStream;
use cavity_sme::sme::{simulate_with_noise, Equation, Model, Scheme, SimulationConfig};
use cavity_sme::CavityParams;

fn main() -> cavity_sme::Result<()> {
    let samples = 11;
    let mut curves = Vec::new();
    for g_s in [0.001, 0.005, 0.05] {
        let mut p = CavityParams::zeno_figure(g_s);
        p.dt = 0.01;
        let t_end = 2.0 / g_s;
        let stride = (t_end / p.dt).round() as usize / (samples - 1);
        let model = Model::new(p)?;
        let sim = SimulationConfig::new(Equation::Nonlinear, Scheme::Milstein, t_end).with_stride(stride);
        let rec = simulate_with_noise(&model, &sim, &mut NoiseStream::new(2024))?;
        curves.push(rec.population_series(0));
    }

    println!("<0|rho|0> against g_s t");
    println!(
        "{:>6} {:>9} {:>9} {:>9} {:>9}",
        "g_s t", "0.001", "0.005", "0.05", "Rabi"
    );
    for (i, ((weak, mid), strong)) in curves[0].iter().zip(&curves[1]).zip(&curves[2]).enumerate() {
        let x = 2.0 * i as f64 / (samples - 1) as f64;
        println!("{x:>6.2} {weak:>9.4} {mid:>9.4} {strong:>9.4} {:>9.4}", x.cos().powi(2));
    }
    Ok(())
}
