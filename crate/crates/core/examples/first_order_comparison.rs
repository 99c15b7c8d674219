//! Runs the three first-order presets on identical settings and prints the
//! metric table with percent differences against the norm-normalized law.
//!
//! ```bash
//! cargo run --release --example first_order_comparison
//! ```

use hgsmc::analysis::run_scenario;
use hgsmc::{presets, BoundMode};

fn main() -> hgsmc::Result<()> {
    let names = ["fo-sato", "fo-hybrid-poly", "fo-hybrid-erf"];
    let mut rows = Vec::new();
    for name in names {
        let run = run_scenario(&presets::load(name)?, BoundMode::Rederived)?;
        rows.push((name, run.metrics));
    }
    let base = rows[0].1.clone();
    let pct = |v: f64, b: f64| 100.0 * (v - b) / b;

    println!(
        "{:<16} {:>8} {:>8} {:>8} {:>9} {:>8}",
        "law", "rms", "iae", "mean_u", "t_entry", "t_tot"
    );
    for (name, m) in &rows {
        println!(
            "{:<16} {:>8.4} {:>8.4} {:>8.4} {:>9} {:>8.3}",
            name,
            m.rms,
            m.iae,
            m.mean_u,
            m.t_entry.map_or("-".into(), |t| format!("{t:.3}")),
            m.t_tot
        );
    }
    println!();
    for (name, m) in &rows[1..] {
        println!(
            "{name}: rms {:+.1}%, iae {:+.1}%, mean_u {:+.1}% vs {}",
            pct(m.rms, base.rms),
            pct(m.iae, base.iae),
            pct(m.mean_u, base.mean_u),
            names[0]
        );
    }
    Ok(())
}
