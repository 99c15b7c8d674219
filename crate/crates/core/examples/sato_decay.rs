//! The norm-normalized law shrinks the state norm at a near-constant rate.
//! Fits the pre-entry slope and compares it with the guaranteed band.

use hgsmc::analysis::run_scenario;
use hgsmc::{presets, BoundMode};

fn main() -> hgsmc::Result<()> {
    let mut cfg = presets::load("fo-sato")?;
    for x0 in [3.0, 6.0, 12.0] {
        cfg.initial.x0 = Some(vec![x0]);
        cfg.sim.horizon = 12.0;
        let run = run_scenario(&cfg, BoundMode::Rederived)?;
        let fit = run.audit.sato_slope_fit.expect("starts outside the layer");
        println!(
            "x0 = {x0:>5}: slope {:.4} in [{:.2}, {:.2}]: {}, entry {:.3} s <= bound {:.3} s, mean |u| {:.4}",
            fit.slope,
            fit.lower,
            fit.upper,
            fit.within,
            run.audit.t_entry_measured.unwrap_or(f64::NAN),
            run.audit.t_out_bound,
            run.metrics.mean_u
        );
    }
    Ok(())
}
