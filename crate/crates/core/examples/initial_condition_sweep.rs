//! Sweeps the initial state of the first-order hybrid law over a log grid
//! and checks every measured layer-entry time against its bound.

use hgsmc::sweep::{self, SweepSpec};
use hgsmc::{presets, BoundMode};

const SPEC: &str = r#"
[[axis]]
path = "initial.x0"
logspace = [-1.0, 1.0, 25]
"#;

fn main() -> hgsmc::Result<()> {
    let base = presets::load("fo-hybrid-poly")?;
    let spec = SweepSpec::from_toml_str(SPEC)?;
    let entries = sweep::sweep(&base, &spec, BoundMode::Rederived)?;

    let mut respected = 0;
    for e in &entries {
        let run = e
            .outcome
            .as_ref()
            .map_err(|err| hgsmc::Error::Audit(err.to_string()))?;
        let a = &run.audit;
        respected += usize::from(a.respected);
        println!(
            "x0 = {:>8.4}  entry {:>7.4}  bound {:>8.4}  {}",
            e.variant.config.initial.x0.as_ref().unwrap()[0],
            a.t_entry_measured.unwrap_or(f64::NAN),
            a.t_out_bound,
            if a.respected { "ok" } else { "VIOLATED" }
        );
    }
    println!("{respected}/{} respected", entries.len());
    Ok(())
}
