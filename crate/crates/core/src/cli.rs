//! Command-line front end. The `hgsmc` binary is a thin wrapper around [`run`].

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::analysis::{run_scenario, scenario_bounds, MetricsReport, RunOutcome};
use crate::bounds::{residual_radius_refined, BoundMode, BoundReport};
use crate::config::SimConfig;
use crate::controllers::InnerLaw;
use crate::error::{Error, Result};
use crate::presets;
use crate::sweep::{self, SweepSpec};

#[derive(Debug, Parser)]
#[command(
    name = "hgsmc",
    version,
    about = "Hybrid-gain sliding-mode simulation lab"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one scenario and write trajectory, metrics, bounds and audit.
    Simulate {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Simulate several scenarios on shared settings and tabulate metrics.
    Compare {
        /// Preset names or config paths; the first one is the baseline.
        #[arg(required = true, num_args = 2..)]
        scenarios: Vec<String>,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Run a parameter sweep over a base scenario.
    Sweep {
        #[command(flatten)]
        source: Source,
        /// Sweep spec (TOML with [[variant]] and/or [[axis]] tables).
        #[arg(long)]
        spec: PathBuf,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Print the entry-time bounds of a scenario in both modes without simulating.
    Bounds {
        #[command(flatten)]
        source: Source,
    },
    /// List the built-in presets, or print one.
    Presets {
        /// Print the TOML source of this preset.
        name: Option<String>,
    },
}

#[derive(Debug, Args)]
pub struct Source {
    /// Scenario config file.
    pub config: Option<PathBuf>,
    /// Built-in preset name instead of a config file.
    #[arg(long, conflicts_with = "config")]
    pub preset: Option<String>,
}

#[derive(Debug, Args)]
pub struct RunOpts {
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Bound mode used by the audit.
    #[arg(long, default_value = "rederived")]
    pub mode: BoundMode,
    /// Override the step size.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Override the horizon.
    #[arg(long)]
    pub horizon: Option<f64>,
}

impl Source {
    fn load(&self) -> Result<SimConfig> {
        match (&self.config, &self.preset) {
            (Some(path), None) => load_config_file(path),
            (None, Some(name)) => presets::load(name),
            _ => Err(Error::config(
                "config",
                "give a config path or --preset NAME",
            )),
        }
    }
}

fn load_config_file(path: &Path) -> Result<SimConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    SimConfig::from_toml_str(&text)
}

fn load_named(name: &str) -> Result<SimConfig> {
    let path = Path::new(name);
    if path.is_file() {
        load_config_file(path)
    } else {
        presets::load(name)
    }
}

impl RunOpts {
    fn apply(&self, cfg: &mut SimConfig) -> Result<()> {
        if let Some(dt) = self.dt {
            cfg.sim.dt = dt;
        }
        if let Some(h) = self.horizon {
            cfg.sim.horizon = h;
        }
        cfg.validate()
    }
}

/// Writes `contents` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(contents).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Contents of `bounds.json` and the `bounds` subcommand output.
#[derive(Debug, Clone, Serialize)]
pub struct BoundsDocument {
    pub scenario: String,
    pub reports: Vec<BoundReport>,
    /// Root of `a r^γ + b r^α = d̄` for polynomial inner laws.
    pub residual_radius_refined: Option<f64>,
    pub gain_jump_at_eps: f64,
}

pub fn bounds_document(cfg: &SimConfig) -> Result<BoundsDocument> {
    let reports = BoundMode::ALL
        .iter()
        .map(|m| scenario_bounds(cfg, *m))
        .collect::<Result<Vec<_>>>()?;
    Ok(bounds_document_from(cfg, reports))
}

fn bounds_document_from(cfg: &SimConfig, reports: Vec<BoundReport>) -> BoundsDocument {
    let refined = cfg
        .controller
        .hybrid_gains()
        .iter()
        .zip(cfg.dbar())
        .filter_map(|(g, db)| match &g.inner {
            InnerLaw::Poly(p) => Some(residual_radius_refined(p, g.outer.gamma, *db)),
            InnerLaw::Erf(_) => None,
        })
        .reduce(f64::max);
    BoundsDocument {
        scenario: cfg.name.clone(),
        gain_jump_at_eps: reports.first().map_or(0.0, |r| r.gain_jump_at_eps),
        reports,
        residual_radius_refined: refined,
    }
}

/// Writes the four artifacts of one run into `dir`.
pub fn write_run(dir: &Path, cfg: &SimConfig, run: &RunOutcome) -> Result<()> {
    create_dir(dir)?;
    let csv = run.trajectory.to_csv_string();
    write_atomic(&dir.join("trajectory.csv"), csv.as_bytes())?;
    write_json(&dir.join("metrics.json"), &run.metrics)?;
    write_json(
        &dir.join("bounds.json"),
        &bounds_document_from(cfg, run.bounds.clone()),
    )?;
    write_json(&dir.join("audit.json"), &run.audit)?;
    write_atomic(&dir.join("config.toml"), cfg.to_toml_string().as_bytes())
}

fn cmd_simulate(source: &Source, opts: &RunOpts) -> Result<()> {
    let mut cfg = source.load()?;
    opts.apply(&mut cfg)?;
    let run = run_scenario(&cfg, opts.mode)?;
    write_run(&opts.out, &cfg, &run)?;
    println!(
        "{}: rms {:.4}, iae {:.4}, mean_u {:.4}, t_entry {}, bound respected: {}",
        display_name(&cfg),
        run.metrics.rms,
        run.metrics.iae,
        run.metrics.mean_u,
        fmt_opt(run.metrics.t_entry),
        run.audit.respected
    );
    Ok(())
}

fn display_name(cfg: &SimConfig) -> &str {
    if cfg.name.is_empty() {
        "scenario"
    } else {
        &cfg.name
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "not reached".into(), |t| format!("{t:.4}"))
}

/// Fields that must agree for a comparison to be fair.
fn shared_fields(cfg: &SimConfig) -> Vec<(&'static str, Value)> {
    let plant = match &cfg.plant {
        crate::config::PlantConfig::FirstOrder => json!("first-order"),
        crate::config::PlantConfig::TwoLink(p) => serde_json::to_value(p).expect("serializable"),
    };
    vec![
        ("plant", plant),
        (
            "initial",
            serde_json::to_value(&cfg.initial).expect("serializable"),
        ),
        (
            "reference",
            serde_json::to_value(&cfg.reference).expect("serializable"),
        ),
        ("sim.dt", json!(cfg.sim.dt)),
        ("sim.horizon", json!(cfg.sim.horizon)),
        (
            "sim.integrator",
            serde_json::to_value(cfg.sim.integrator).expect("serializable"),
        ),
        (
            "disturbance",
            serde_json::to_value(&cfg.disturbance).expect("serializable"),
        ),
    ]
}

fn percent(v: f64, base: f64) -> Option<f64> {
    (base != 0.0).then(|| 100.0 * (v - base) / base)
}

/// `comparison.json` for already-evaluated runs; the first entry is the baseline.
pub fn comparison_document(names: &[String], metrics: &[MetricsReport]) -> Value {
    let base = &metrics[0];
    let mut table = serde_json::Map::new();
    let mut order = Vec::new();
    for (name, m) in names.iter().zip(metrics) {
        let mut key = name.clone();
        let mut n = 2;
        while table.contains_key(&key) {
            key = format!("{name}#{n}");
            n += 1;
        }
        let t_entry_pct = match (m.t_entry, base.t_entry) {
            (Some(a), Some(b)) => percent(a, b),
            _ => None,
        };
        table.insert(
            key.clone(),
            json!({
                "rms": m.rms,
                "iae": m.iae,
                "mean_u": m.mean_u,
                "t_entry": m.t_entry,
                "t_tot": m.t_tot,
                "percent_vs_baseline": {
                    "rms": percent(m.rms, base.rms),
                    "iae": percent(m.iae, base.iae),
                    "mean_u": percent(m.mean_u, base.mean_u),
                    "t_entry": t_entry_pct,
                },
            }),
        );
        order.push(key);
    }
    json!({ "baseline": order[0], "order": order, "table": table })
}

fn cmd_compare(scenarios: &[String], opts: &RunOpts) -> Result<()> {
    let mut cfgs = Vec::with_capacity(scenarios.len());
    for name in scenarios {
        let mut cfg = load_named(name)?;
        opts.apply(&mut cfg)?;
        cfgs.push(cfg);
    }
    let reference = shared_fields(&cfgs[0]);
    for (name, cfg) in scenarios.iter().zip(&cfgs).skip(1) {
        for ((field, a), (_, b)) in reference.iter().zip(shared_fields(cfg)) {
            if *a != b {
                return Err(Error::config(
                    *field,
                    format!(
                        "`{name}` differs from `{}`; refusing an unfair comparison",
                        scenarios[0]
                    ),
                ));
            }
        }
    }
    let runs: Vec<RunOutcome> = {
        use rayon::prelude::*;
        cfgs.par_iter()
            .map(|c| run_scenario(c, opts.mode))
            .collect::<Result<_>>()?
    };
    let metrics: Vec<MetricsReport> = runs.iter().map(|r| r.metrics.clone()).collect();
    create_dir(&opts.out)?;
    let doc = comparison_document(scenarios, &metrics);
    write_json(&opts.out.join("comparison.json"), &doc)?;
    for (name, m) in scenarios.iter().zip(&metrics) {
        println!(
            "{name:>16}  rms {:.4}  iae {:.4}  mean_u {:.4}  t_entry {}",
            m.rms,
            m.iae,
            m.mean_u,
            fmt_opt(m.t_entry)
        );
    }
    Ok(())
}

fn cmd_sweep(source: &Source, spec_path: &Path, opts: &RunOpts) -> Result<i32> {
    let mut base = source.load()?;
    opts.apply(&mut base)?;
    let text = std::fs::read_to_string(spec_path).map_err(|e| Error::io(spec_path, e))?;
    let spec = SweepSpec::from_toml_str(&text)?;
    let variants = sweep::expand(&base, &spec)?;
    let entries = sweep::run_variants(variants, opts.mode);
    create_dir(&opts.out)?;
    let mut rows = Vec::with_capacity(entries.len());
    let mut respected = 0;
    let mut status = 0;
    for entry in &entries {
        let dir = opts.out.join(&entry.variant.id);
        let row = match &entry.outcome {
            Ok(run) => {
                write_run(&dir, &entry.variant.config, run)?;
                respected += usize::from(run.audit.respected);
                json!({
                    "id": entry.variant.id,
                    "ok": true,
                    "respected": run.audit.respected,
                    "t_entry": run.metrics.t_entry,
                    "t_out_bound": run.audit.t_out_bound,
                    "error": null,
                })
            }
            Err(e) => {
                create_dir(&dir)?;
                write_atomic(
                    &dir.join("config.toml"),
                    entry.variant.config.to_toml_string().as_bytes(),
                )?;
                eprintln!("variant {}: {e}", entry.variant.id);
                if status == 0 {
                    status = e.exit_code();
                }
                json!({
                    "id": entry.variant.id,
                    "ok": false,
                    "respected": false,
                    "t_entry": null,
                    "t_out_bound": null,
                    "error": e.to_string(),
                })
            }
        };
        rows.push(row);
    }
    let summary = json!({
        "bound_mode": opts.mode,
        "total": entries.len(),
        "succeeded": entries.iter().filter(|e| e.outcome.is_ok()).count(),
        "respected_count": respected,
        "variants": rows,
    });
    write_json(&opts.out.join("summary.json"), &summary)?;
    println!(
        "respected {respected}/{} under {} bounds",
        entries.len(),
        opts.mode
    );
    Ok(status)
}

fn cmd_bounds(source: &Source) -> Result<()> {
    let cfg = source.load()?;
    let doc = bounds_document(&cfg)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&doc).expect("reports serialize")
    );
    Ok(())
}

fn cmd_presets(name: Option<&str>) -> Result<()> {
    match name {
        Some(n) => print!("{}", presets::source(n)?),
        None => {
            for n in presets::names() {
                println!("{n}");
            }
        }
    }
    Ok(())
}

/// Parses `args` (including the program name) and executes the command.
/// Returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match &cli.command {
        Command::Simulate { source, opts } => cmd_simulate(source, opts).map(|_| 0),
        Command::Compare { scenarios, opts } => cmd_compare(scenarios, opts).map(|_| 0),
        Command::Sweep { source, spec, opts } => cmd_sweep(source, spec, opts),
        Command::Bounds { source } => cmd_bounds(source).map(|_| 0),
        Command::Presets { name } => cmd_presets(name.as_deref()).map(|_| 0),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
