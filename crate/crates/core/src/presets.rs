//! Named scenario presets compiled into the library.

use crate::config::SimConfig;
use crate::error::{Error, Result};

const PRESETS: &[(&str, &str)] = &[
    (
        "fo-hybrid-poly",
        include_str!("../presets/fo-hybrid-poly.toml"),
    ),
    (
        "fo-hybrid-erf",
        include_str!("../presets/fo-hybrid-erf.toml"),
    ),
    ("fo-sato", include_str!("../presets/fo-sato.toml")),
    (
        "el-hybrid-poly",
        include_str!("../presets/el-hybrid-poly.toml"),
    ),
    (
        "el-hybrid-erf",
        include_str!("../presets/el-hybrid-erf.toml"),
    ),
];

/// A published metric value a preset is expected to reproduce.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Target {
    pub metric: &'static str,
    pub value: f64,
    /// Relative tolerance.
    pub tol: f64,
}

const fn target(metric: &'static str, value: f64, tol: f64) -> Target {
    Target { metric, value, tol }
}

const EXPECTED: &[(&str, [Target; 3])] = &[
    (
        "fo-hybrid-poly",
        [
            target("rms", 0.9145, 0.10),
            target("iae", 3.3160, 0.10),
            target("mean_u", 0.9663, 0.05),
        ],
    ),
    (
        "fo-sato",
        [
            target("rms", 0.9318, 0.10),
            target("iae", 3.4052, 0.10),
            target("mean_u", 1.4000, 0.05),
        ],
    ),
    (
        "fo-hybrid-erf",
        [
            target("rms", 0.9145, 0.10),
            target("iae", 3.3161, 0.10),
            target("mean_u", 0.9621, 0.05),
        ],
    ),
];

/// Published metric targets for the first-order comparison presets.
pub fn expected(name: &str) -> Option<&'static [Target]> {
    EXPECTED
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| t.as_slice())
}

impl Target {
    pub fn check(&self, m: &crate::analysis::MetricsReport) -> Option<bool> {
        let v = match self.metric {
            "rms" => m.rms,
            "iae" => m.iae,
            "mean_u" => m.mean_u,
            _ => return None,
        };
        Some((v - self.value).abs() <= self.tol * self.value.abs())
    }
}

pub fn names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

/// Raw TOML text of a preset.
pub fn source(name: &str) -> Result<&'static str> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
        .ok_or_else(|| {
            Error::config(
                "preset",
                format!(
                    "unknown preset `{name}` (available: {})",
                    names().collect::<Vec<_>>().join(", ")
                ),
            )
        })
}

pub fn load(name: &str) -> Result<SimConfig> {
    SimConfig::from_toml_str(source(name)?)
}
