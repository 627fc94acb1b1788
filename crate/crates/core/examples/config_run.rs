//! Configuration text resolved over a preset, run, and written as CSV.
//!
//! ```text
//! cargo run --release --example config_run
//! ```

use cavity_sme::experiment::{parse_entries, parse_override, run, ExperimentConfig};

const CONFIG: &str = "
# two short zeno trajectories with a stronger drive
preset = zeno_fig3
name = zeno_demo
trajectories = 2
t_end = 50

[system]
g_s = 0.02

[integrator]
record_stride = 50
";

fn main() -> cavity_sme::Result<()> {
    let file = parse_entries(CONFIG)?;
    // Command-line style override, wins over the text above.
    let flags = vec![parse_override("seed=42")?];
    let cfg = ExperimentConfig::resolve(&file, &flags)?;
    print!("{}", cfg.to_text());

    let dir = std::env::temp_dir().join("cavity-sme-example");
    let summary = run(&cfg, Some(&dir))?;
    println!();
    print!("{summary}");
    Ok(())
}
