//! Parameter sweeps over a base scenario.
//!
//! A sweep spec is a TOML document with explicit variants, axes, or both:
//!
//! ```toml
//! [[variant]]
//! id = "slow"
//! set = { "controller.k0" = 0.6 }
//!
//! [[axis]]
//! path = "initial.x0"
//! values = [4.0, -5.0, 6.0]
//!
//! [[axis]]
//! path = "sim.dt"
//! logspace = [-4.0, -3.0, 2]   # 10^-4 .. 10^-3, two points
//! ```
//!
//! Axes expand to their Cartesian product (first axis slowest). Paths are
//! dotted, with `[i]` for list elements (`controller.joints[1].k0`).

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Deserialize;
use toml::Value;

use crate::analysis::{run_scenario, RunOutcome};
use crate::bounds::BoundMode;
use crate::config::SimConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default, rename = "variant")]
    pub variants: Vec<VariantSpec>,
    #[serde(default, rename = "axis")]
    pub axes: Vec<AxisSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariantSpec {
    pub id: Option<String>,
    #[serde(default)]
    pub set: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub path: String,
    pub values: Option<Vec<Value>>,
    /// `[start, stop, count]`, inclusive.
    pub linspace: Option<(f64, f64, usize)>,
    /// `[start_exp, stop_exp, count]` in powers of ten, inclusive.
    pub logspace: Option<(f64, f64, usize)>,
}

fn spaced(start: f64, stop: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![start],
        _ => (0..n)
            .map(|i| start + (stop - start) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

impl AxisSpec {
    pub fn points(&self) -> Result<Vec<Value>> {
        let field = format!("axis `{}`", self.path);
        match (&self.values, self.linspace, self.logspace) {
            (Some(v), None, None) => Ok(v.clone()),
            (None, Some((a, b, n)), None) => {
                Ok(spaced(a, b, n).into_iter().map(Value::Float).collect())
            }
            (None, None, Some((a, b, n))) => Ok(spaced(a, b, n)
                .into_iter()
                .map(|e| Value::Float(10f64.powf(e)))
                .collect()),
            _ => Err(Error::config(
                field,
                "needs exactly one of values, linspace, logspace",
            )),
        }
    }
}

/// `(path, value)` pairs applied to the base config, with an optional id.
pub type OverrideList = (Option<String>, Vec<(String, Value)>);

/// One concrete configuration of a sweep.
#[derive(Debug, Clone)]
pub struct Variant {
    pub id: String,
    pub overrides: Vec<(String, Value)>,
    pub config: SimConfig,
}

impl SweepSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            what: "sweep spec".into(),
            reason: e.to_string(),
        })
    }

    /// Override lists in run order. An empty spec yields one empty list.
    pub fn override_lists(&self) -> Result<Vec<OverrideList>> {
        let mut out: Vec<OverrideList> = self
            .variants
            .iter()
            .map(|v| {
                (
                    v.id.clone(),
                    v.set.iter().map(|(k, v)| (k.clone(), v.clone())).collect(),
                )
            })
            .collect();
        if !self.axes.is_empty() {
            let mut product: Vec<Vec<(String, Value)>> = vec![vec![]];
            for axis in &self.axes {
                let points = axis.points()?;
                product = product
                    .into_iter()
                    .flat_map(|prefix| {
                        points.iter().map(move |p| {
                            let mut next = prefix.clone();
                            next.push((axis.path.clone(), p.clone()));
                            next
                        })
                    })
                    .collect();
            }
            out.extend(product.into_iter().map(|o| (None, o)));
        }
        if out.is_empty() {
            out.push((Some("base".into()), vec![]));
        }
        Ok(out)
    }
}

enum Segment {
    Key(String),
    Index(usize),
}

fn parse_path(path: &str) -> Result<Vec<Segment>> {
    let bad = || Error::config(path, "malformed override path");
    let mut segs = Vec::new();
    for part in path.split('.') {
        let (key, mut rest) = match part.find('[') {
            Some(i) => (&part[..i], &part[i..]),
            None => (part, ""),
        };
        if key.is_empty() {
            return Err(bad());
        }
        segs.push(Segment::Key(key.to_string()));
        while !rest.is_empty() {
            let close = rest.find(']').ok_or_else(bad)?;
            if !rest.starts_with('[') {
                return Err(bad());
            }
            let idx = rest[1..close].parse::<usize>().map_err(|_| bad())?;
            segs.push(Segment::Index(idx));
            rest = &rest[close + 1..];
        }
    }
    Ok(segs)
}

/// Integers become floats where the existing field holds floats, so that
/// `x0 = 4` and `x0 = 4.0` are interchangeable in sweep specs.
fn coerce(new: Value, old: &Value) -> Value {
    let wants_float = match old {
        Value::Float(_) => true,
        Value::Array(a) => a.first().is_some_and(|v| matches!(v, Value::Float(_))),
        _ => false,
    };
    match new {
        Value::Integer(i) if wants_float => Value::Float(i as f64),
        Value::Array(a) if wants_float => Value::Array(
            a.into_iter()
                .map(|v| match v {
                    Value::Integer(i) => Value::Float(i as f64),
                    other => other,
                })
                .collect(),
        ),
        other => other,
    }
}

/// Replaces the value at `path`, which must already exist in `root`.
pub fn set_path(root: &mut Value, path: &str, value: Value) -> Result<()> {
    let missing = || {
        Error::config(
            path,
            "override path does not address an existing config field",
        )
    };
    let mut cur = root;
    for seg in parse_path(path)? {
        cur = match seg {
            Segment::Key(k) => cur
                .as_table_mut()
                .and_then(|t| t.get_mut(&k))
                .ok_or_else(missing)?,
            Segment::Index(i) => cur
                .as_array_mut()
                .and_then(|a| a.get_mut(i))
                .ok_or_else(missing)?,
        };
    }
    *cur = coerce(value, cur);
    Ok(())
}

fn value_label(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
    .replace(['/', '\\'], "_")
}

/// Applies every override list to `base`. All paths are checked before any
/// variant is returned, so a bad path fails the whole sweep up front.
pub fn expand(base: &SimConfig, spec: &SweepSpec) -> Result<Vec<Variant>> {
    let base_tree = Value::try_from(base).map_err(|e| Error::Parse {
        what: "base config".into(),
        reason: e.to_string(),
    })?;
    let lists = spec.override_lists()?;
    let mut trees = Vec::with_capacity(lists.len());
    for (_, overrides) in &lists {
        let mut tree = base_tree.clone();
        for (path, value) in overrides {
            set_path(&mut tree, path, value.clone())?;
        }
        trees.push(tree);
    }
    let width = lists.len().to_string().len();
    lists
        .into_iter()
        .zip(trees)
        .enumerate()
        .map(|(i, ((id, overrides), tree))| {
            let id = id.unwrap_or_else(|| {
                let label: Vec<String> = overrides
                    .iter()
                    .map(|(p, v)| format!("{p}={}", value_label(v)))
                    .collect();
                format!("{i:0width$}_{}", label.join(","))
            });
            let config = tree.try_into::<SimConfig>().map_err(|e| Error::Parse {
                what: format!("variant `{id}`"),
                reason: e.to_string(),
            })?;
            Ok(Variant {
                id,
                overrides,
                config,
            })
        })
        .collect()
}

/// Result of one variant; a failed variant keeps its error.
#[derive(Debug)]
pub struct SweepEntry {
    pub variant: Variant,
    pub outcome: Result<RunOutcome>,
}

/// Runs every variant in parallel. Output order matches variant order and
/// each outcome depends only on its own config.
pub fn run_variants(variants: Vec<Variant>, mode: BoundMode) -> Vec<SweepEntry> {
    variants
        .into_par_iter()
        .map(|variant| {
            let outcome = run_scenario(&variant.config, mode);
            SweepEntry { variant, outcome }
        })
        .collect()
}

pub fn sweep(base: &SimConfig, spec: &SweepSpec, mode: BoundMode) -> Result<Vec<SweepEntry>> {
    Ok(run_variants(expand(base, spec)?, mode))
}
