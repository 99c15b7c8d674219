//! Prints the entry-time bounds of every preset in both bound modes,
//! without simulating.

use hgsmc::cli::bounds_document;
use hgsmc::presets;

fn main() -> hgsmc::Result<()> {
    for name in presets::names() {
        let doc = bounds_document(&presets::load(name)?)?;
        println!("{name}");
        for r in &doc.reports {
            println!(
                "  {:<14} t_out {:>8.4}  t_in {:>7.4}  total {:>8.4}",
                r.mode.as_str(),
                r.t_out,
                r.t_in,
                r.t_total
            );
        }
        if let Some(r) = doc.reports[0].residual_radius {
            println!(
                "  residual radius {r:.4} (refined {:.4})",
                doc.residual_radius_refined.unwrap_or(f64::NAN)
            );
        }
        println!("  gain jump at eps {:+.4}", doc.gain_jump_at_eps);
    }
    Ok(())
}
