//! Scenario configuration: one TOML document per scenario, with a section per
//! parameter block.
//!
//! ```toml
//! name = "fo-hybrid-poly"
//!
//! [plant]
//! kind = "first-order"
//!
//! [controller]
//! kind = "hybrid-poly"
//! k0 = 0.8
//! k1 = 0.8
//! eps0 = 0.25
//! gamma = 0.7
//! a = 2.5
//! b = 1.2
//! alpha = 1.8
//! eps = 0.08
//!
//! [disturbance]
//! kind = "sinusoid-scaled"
//! amplitudes = [0.8]
//! frequencies = [5.0]
//! bound = [0.5]
//!
//! [initial]
//! x0 = 3.0
//!
//! [sim]
//! dt = 1e-3
//! horizon = 8.0
//! integrator = "euler"
//! ```

use std::f64::consts::PI;

use nalgebra::Vector2;
use serde::{Deserialize, Deserializer, Serialize};

use crate::controllers::{
    sliding_variable, ErfInner, HybridGain, InnerLaw, JointReference, OuterGain, PolyInner,
    SatoParams, SlidingSurface,
};
use crate::dynamics::{DisturbanceSpec, ManipulatorState, TwoLinkParams};
use crate::error::{Error, Result};

/// Largest number of integration steps a single run may request.
pub const MAX_STEPS: f64 = 1e8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    #[serde(default)]
    pub name: String,
    pub plant: PlantConfig,
    pub controller: ControllerConfig,
    pub disturbance: DisturbanceSpec,
    pub initial: InitialCondition,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<ReferenceSpec>,
    #[serde(default)]
    pub sim: StepConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PlantConfig {
    FirstOrder,
    TwoLink(TwoLinkParams),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolyJoint {
    pub k0: f64,
    pub k1: f64,
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErfJoint {
    pub k0: f64,
    pub k1: f64,
    pub u: f64,
}

fn default_eps() -> f64 {
    0.08
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ControllerConfig {
    HybridPoly {
        k0: f64,
        k1: f64,
        eps0: f64,
        gamma: f64,
        a: f64,
        b: f64,
        alpha: f64,
        eps: f64,
    },
    HybridErf {
        k0: f64,
        k1: f64,
        eps0: f64,
        gamma: f64,
        u: f64,
        eps: f64,
    },
    Sato {
        k: f64,
        sigma: f64,
        /// Layer radius used for entry-time measurement and the bound.
        #[serde(default = "default_eps")]
        eps: f64,
    },
    ElHybridPoly {
        eps0: f64,
        gamma: f64,
        alpha: f64,
        eps: f64,
        lambda: Vec<f64>,
        joints: Vec<PolyJoint>,
    },
    ElHybridErf {
        eps0: f64,
        gamma: f64,
        eps: f64,
        lambda: Vec<f64>,
        joints: Vec<ErfJoint>,
    },
}

impl ControllerConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            ControllerConfig::HybridPoly { .. } => "hybrid-poly",
            ControllerConfig::HybridErf { .. } => "hybrid-erf",
            ControllerConfig::Sato { .. } => "sato",
            ControllerConfig::ElHybridPoly { .. } => "el-hybrid-poly",
            ControllerConfig::ElHybridErf { .. } => "el-hybrid-erf",
        }
    }

    pub fn eps(&self) -> f64 {
        match self {
            ControllerConfig::HybridPoly { eps, .. }
            | ControllerConfig::HybridErf { eps, .. }
            | ControllerConfig::Sato { eps, .. }
            | ControllerConfig::ElHybridPoly { eps, .. }
            | ControllerConfig::ElHybridErf { eps, .. } => *eps,
        }
    }

    fn is_el(&self) -> bool {
        matches!(
            self,
            ControllerConfig::ElHybridPoly { .. } | ControllerConfig::ElHybridErf { .. }
        )
    }

    /// Hybrid gains, one per channel for the manipulator laws and a single
    /// entry for the first-order laws. Empty for the norm-normalized law.
    pub fn hybrid_gains(&self) -> Vec<HybridGain> {
        match *self {
            ControllerConfig::HybridPoly {
                k0,
                k1,
                eps0,
                gamma,
                a,
                b,
                alpha,
                eps,
            } => vec![HybridGain {
                outer: OuterGain {
                    k0,
                    k1,
                    eps0,
                    gamma,
                },
                inner: InnerLaw::Poly(PolyInner { a, b, alpha }),
                eps,
            }],
            ControllerConfig::HybridErf {
                k0,
                k1,
                eps0,
                gamma,
                u,
                eps,
            } => vec![HybridGain {
                outer: OuterGain {
                    k0,
                    k1,
                    eps0,
                    gamma,
                },
                inner: InnerLaw::Erf(ErfInner { u }),
                eps,
            }],
            ControllerConfig::Sato { .. } => Vec::new(),
            ControllerConfig::ElHybridPoly {
                eps0,
                gamma,
                alpha,
                eps,
                ref joints,
                ..
            } => joints
                .iter()
                .map(|j| HybridGain {
                    outer: OuterGain {
                        k0: j.k0,
                        k1: j.k1,
                        eps0,
                        gamma,
                    },
                    inner: InnerLaw::Poly(PolyInner {
                        a: j.a,
                        b: j.b,
                        alpha,
                    }),
                    eps,
                })
                .collect(),
            ControllerConfig::ElHybridErf {
                eps0,
                gamma,
                eps,
                ref joints,
                ..
            } => joints
                .iter()
                .map(|j| HybridGain {
                    outer: OuterGain {
                        k0: j.k0,
                        k1: j.k1,
                        eps0,
                        gamma,
                    },
                    inner: InnerLaw::Erf(ErfInner { u: j.u }),
                    eps,
                })
                .collect(),
        }
    }

    pub fn sato(&self) -> Option<SatoParams> {
        match *self {
            ControllerConfig::Sato { k, sigma, .. } => Some(SatoParams { k, sigma }),
            _ => None,
        }
    }

    pub fn surface(&self) -> Option<SlidingSurface> {
        match self {
            ControllerConfig::ElHybridPoly { lambda, .. }
            | ControllerConfig::ElHybridErf { lambda, .. } => Some(SlidingSurface {
                lambda: lambda.clone(),
            }),
            _ => None,
        }
    }
}

/// Initial condition. `x0` accepts a scalar or a list.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialCondition {
    #[serde(
        default,
        deserialize_with = "scalar_or_list",
        skip_serializing_if = "Option::is_none"
    )]
    pub x0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q0: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qdot0: Option<[f64; 2]>,
}

fn scalar_or_list<'de, D: Deserializer<'de>>(
    d: D,
) -> std::result::Result<Option<Vec<f64>>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(f64),
        Many(Vec<f64>),
    }
    Ok(Some(match OneOrMany::deserialize(d)? {
        OneOrMany::One(v) => vec![v],
        OneOrMany::Many(v) => v,
    }))
}

/// Desired joint trajectory `q_d,i(t) = offset_i + amplitude_i sin(ω_i t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSpec {
    pub amplitudes: [f64; 2],
    pub frequencies: [f64; 2],
    #[serde(default)]
    pub offsets: [f64; 2],
}

impl ReferenceSpec {
    pub fn sine(amplitudes: [f64; 2], frequency: f64) -> Self {
        Self {
            amplitudes,
            frequencies: [frequency; 2],
            offsets: [0.0; 2],
        }
    }

    pub fn at(&self, t: f64) -> JointReference {
        let mut r = JointReference {
            q: Vector2::zeros(),
            qdot: Vector2::zeros(),
            qddot: Vector2::zeros(),
        };
        for i in 0..2 {
            let (a, w) = (self.amplitudes[i], self.frequencies[i]);
            let (sin, cos) = (w * t).sin_cos();
            r.q[i] = self.offsets[i] + a * sin;
            r.qdot[i] = a * w * cos;
            r.qddot[i] = -a * w * w * sin;
        }
        r
    }
}

impl Default for ReferenceSpec {
    fn default() -> Self {
        Self::sine([0.1, 0.2], PI)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntegratorKind {
    #[default]
    Euler,
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepConfig {
    pub dt: f64,
    pub horizon: f64,
    #[serde(default)]
    pub integrator: IntegratorKind,
}

impl Default for StepConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            horizon: 8.0,
            integrator: IntegratorKind::Euler,
        }
    }
}

impl StepConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::config("sim.dt", "dt must be positive and finite"));
        }
        if !(self.horizon.is_finite() && self.horizon >= self.dt) {
            return Err(Error::config(
                "sim.horizon",
                "horizon must be finite and at least dt",
            ));
        }
        if self.horizon / self.dt > MAX_STEPS {
            return Err(Error::config(
                "sim.horizon",
                format!(
                    "horizon/dt = {} exceeds the step limit {MAX_STEPS}",
                    self.horizon / self.dt
                ),
            ));
        }
        Ok(())
    }

    /// Number of integration steps, `floor(horizon / dt)`.
    pub fn steps(&self) -> usize {
        (self.horizon / self.dt + 1e-9).floor() as usize
    }
}

fn default_delta() -> f64 {
    1e-3
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Final settle radius.
    #[serde(default = "default_delta")]
    pub delta: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            delta: default_delta(),
        }
    }
}

impl SimConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: SimConfig = toml::from_str(text).map_err(|e| Error::Parse {
            what: "scenario config".into(),
            reason: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario configs always serialize")
    }

    pub fn dbar(&self) -> &[f64] {
        &self.disturbance.bound
    }

    /// Checks every parameter block and the compatibility between them.
    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        self.disturbance.validate()?;
        let dbar = self.dbar();
        let eps = self.controller.eps();
        if !(self.analysis.delta > 0.0 && self.analysis.delta < eps) {
            return Err(Error::config(
                "analysis.delta",
                format!(
                    "requires 0 < delta < eps = {eps}, got {}",
                    self.analysis.delta
                ),
            ));
        }
        match &self.plant {
            PlantConfig::FirstOrder => {
                if self.controller.is_el() {
                    return Err(Error::config(
                        "controller.kind",
                        format!("`{}` needs a two-link plant", self.controller.kind()),
                    ));
                }
                let x0 = self.initial.x0.as_ref().ok_or_else(|| {
                    Error::config("initial.x0", "required for a first-order plant")
                })?;
                if x0.is_empty() || x0.iter().any(|v| !v.is_finite()) {
                    return Err(Error::config(
                        "initial.x0",
                        "must be a non-empty list of finite values",
                    ));
                }
                if x0.len() != dbar.len() {
                    return Err(Error::config(
                        "disturbance.bound",
                        format!("has {} entries but the state has {}", dbar.len(), x0.len()),
                    ));
                }
                let dmax = dbar.iter().fold(0.0, |m: f64, v| m.max(*v));
                if let Some(sato) = self.controller.sato() {
                    sato.validate(dmax, "controller.")?;
                    if eps.is_nan() || eps <= 0.0 {
                        return Err(Error::config("controller.eps", "eps must be positive"));
                    }
                } else {
                    for g in self.controller.hybrid_gains() {
                        g.validate(dmax, "controller.")?;
                    }
                }
            }
            PlantConfig::TwoLink(p) => {
                p.validate()?;
                if !self.controller.is_el() {
                    return Err(Error::config(
                        "controller.kind",
                        format!("`{}` needs a first-order plant", self.controller.kind()),
                    ));
                }
                for (name, v) in [
                    ("initial.q0", self.initial.q0),
                    ("initial.qdot0", self.initial.qdot0),
                ] {
                    match v {
                        Some(v) if v.iter().all(|x| x.is_finite()) => {}
                        _ => return Err(Error::config(name, "required, two finite entries")),
                    }
                }
                let reference = self
                    .reference
                    .as_ref()
                    .ok_or_else(|| Error::config("reference", "required for a two-link plant"))?;
                if reference
                    .amplitudes
                    .iter()
                    .chain(&reference.frequencies)
                    .chain(&reference.offsets)
                    .any(|v| !v.is_finite())
                {
                    return Err(Error::config("reference", "entries must be finite"));
                }
                if dbar.len() != 2 {
                    return Err(Error::config(
                        "disturbance.bound",
                        format!("two-link plant needs 2 entries, got {}", dbar.len()),
                    ));
                }
                let surf = self
                    .controller
                    .surface()
                    .unwrap_or(SlidingSurface { lambda: vec![] });
                if surf.lambda.len() != 2 {
                    return Err(Error::config(
                        "controller.lambda",
                        "needs exactly 2 entries",
                    ));
                }
                surf.validate("controller.")?;
                let gains = self.controller.hybrid_gains();
                if gains.len() != 2 {
                    return Err(Error::config(
                        "controller.joints",
                        format!("needs exactly 2 joint gain blocks, got {}", gains.len()),
                    ));
                }
                for (i, (g, db)) in gains.iter().zip(dbar).enumerate() {
                    g.validate(*db, &format!("controller.joints[{i}]."))?;
                }
            }
        }
        Ok(())
    }

    /// Initial manipulator state; `None` for first-order plants.
    pub fn manipulator_state0(&self) -> Option<ManipulatorState> {
        match (self.initial.q0, self.initial.qdot0) {
            (Some(q), Some(qd)) => Some(ManipulatorState::new(q, qd)),
            _ => None,
        }
    }

    /// Sliding variable at `t = 0`: the state itself for first-order plants,
    /// `ė + Λe` for the manipulator.
    pub fn initial_sliding(&self) -> Result<Vec<f64>> {
        match &self.plant {
            PlantConfig::FirstOrder => self
                .initial
                .x0
                .clone()
                .ok_or_else(|| Error::config("initial.x0", "required for a first-order plant")),
            PlantConfig::TwoLink(_) => {
                let state = self
                    .manipulator_state0()
                    .ok_or_else(|| Error::config("initial.q0", "required for a two-link plant"))?;
                let reference = self
                    .reference
                    .as_ref()
                    .ok_or_else(|| Error::config("reference", "required for a two-link plant"))?
                    .at(0.0);
                let surf = self
                    .controller
                    .surface()
                    .ok_or_else(|| Error::config("controller.lambda", "required"))?;
                let e = state.q - reference.q;
                let edot = state.qdot - reference.qdot;
                sliding_variable(e.as_slice(), edot.as_slice(), &surf)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    #[test]
    fn scalar_and_list_initial_states() {
        let base = presets::load("fo-hybrid-poly").unwrap().to_toml_string();
        let scalar = base.replace("x0 = [3.0]", "x0 = 4");
        assert_ne!(scalar, base);
        let cfg = SimConfig::from_toml_str(&scalar).unwrap();
        assert_eq!(cfg.initial.x0, Some(vec![4.0]));
    }

    #[test]
    fn unknown_field_is_rejected() {
        let text = presets::source("fo-hybrid-poly")
            .unwrap()
            .replace("k0 = 0.8", "k0 = 0.8\nkzero = 1.0");
        let err = SimConfig::from_toml_str(&text).unwrap_err();
        assert!(err.to_string().contains("kzero"), "{err}");
    }

    #[test]
    fn plant_controller_mismatch() {
        let mut cfg = presets::load("fo-sato").unwrap();
        cfg.plant = PlantConfig::TwoLink(TwoLinkParams::default());
        assert!(
            matches!(cfg.validate(), Err(Error::Config { field, .. }) if field == "controller.kind")
        );
    }

    #[test]
    fn step_guards() {
        let mut s = StepConfig::default();
        assert_eq!(s.steps(), 8000);
        s.dt = 0.1;
        s.horizon = 0.3;
        assert_eq!(s.steps(), 3);
        s.dt = 0.0;
        assert!(s.validate().is_err());
        s.dt = 1e-9;
        s.horizon = 1.0;
        assert!(s.validate().is_err());
        s.dt = 1.0;
        s.horizon = 0.5;
        assert!(s.validate().is_err());
    }

    #[test]
    fn reference_derivatives_match_finite_differences() {
        let r = ReferenceSpec::default();
        let h = 1e-6;
        let t = 0.37;
        let (a, b, c) = (r.at(t - h), r.at(t), r.at(t + h));
        for i in 0..2 {
            assert!(((c.q[i] - a.q[i]) / (2.0 * h) - b.qdot[i]).abs() < 1e-8);
            assert!(((c.qdot[i] - a.qdot[i]) / (2.0 * h) - b.qddot[i]).abs() < 1e-7);
        }
    }

    #[test]
    fn el_initial_sliding_variable() {
        let cfg = presets::load("el-hybrid-poly").unwrap();
        let s0 = cfg.initial_sliding().unwrap();
        let lambda = cfg.controller.surface().unwrap().lambda;
        assert_eq!(s0[0], -0.1 * PI + lambda[0] * 2.0);
        assert_eq!(s0[1], -0.2 * PI + lambda[1] * 2.0);
    }
}
