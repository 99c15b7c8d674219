//! Control laws: the first-order hybrid-gain law with polynomial or erf inner
//! gain, the norm-normalized SATO baseline, and the Euler–Lagrange hybrid-gain
//! law built on a linear sliding surface.
//!
//! The hybrid gain switches strictly at `|x| = ε`; the inner branch owns the
//! boundary point. The two branches generally disagree at `ε`, see
//! [`HybridGain::jump_at_eps`].

use std::f64::consts::PI;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::dynamics::{ManipulatorState, TwoLinkParams};
use crate::error::{Error, Result};

/// `√π / 2`
pub fn half_sqrt_pi() -> f64 {
    0.5 * PI.sqrt()
}

/// Sign with `sgn(0) = 0`.
pub fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Constants of the bounded outer gain
/// `G_out(x) = k0 + k1 |x|^γ / (ε0^γ + |x|^γ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OuterGain {
    pub k0: f64,
    pub k1: f64,
    pub eps0: f64,
    pub gamma: f64,
}

impl OuterGain {
    pub fn validate(&self, dbar: f64, prefix: &str) -> Result<()> {
        finite(prefix, "k0", self.k0)?;
        finite(prefix, "k1", self.k1)?;
        finite(prefix, "eps0", self.eps0)?;
        finite(prefix, "gamma", self.gamma)?;
        if self.k0 <= dbar {
            return Err(Error::config(
                format!("{prefix}k0"),
                format!(
                    "k0 must exceed disturbance bound (k0 = {} <= {dbar})",
                    self.k0
                ),
            ));
        }
        if self.k1 <= 0.0 {
            return Err(Error::config(format!("{prefix}k1"), "k1 must be positive"));
        }
        if self.eps0 <= 0.0 {
            return Err(Error::config(
                format!("{prefix}eps0"),
                "eps0 must be positive",
            ));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::config(
                format!("{prefix}gamma"),
                format!("requires 0 < gamma < 1, got {}", self.gamma),
            ));
        }
        Ok(())
    }
}

/// Mixed-power inner law `G_in(x) = a |x|^γ + b |x|^α`, with `γ` shared with
/// the outer gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolyInner {
    pub a: f64,
    pub b: f64,
    pub alpha: f64,
}

/// Exponential inner law `G_in(x) = (√π/2) U e^{x²}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErfInner {
    pub u: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case")]
pub enum InnerLaw {
    Poly(PolyInner),
    Erf(ErfInner),
}

impl InnerLaw {
    pub fn validate(&self, gamma: f64, dbar: f64, prefix: &str) -> Result<()> {
        match self {
            InnerLaw::Poly(p) => {
                finite(prefix, "a", p.a)?;
                finite(prefix, "b", p.b)?;
                finite(prefix, "alpha", p.alpha)?;
                if p.a <= 0.0 {
                    return Err(Error::config(format!("{prefix}a"), "a must be positive"));
                }
                if p.b <= 0.0 {
                    return Err(Error::config(format!("{prefix}b"), "b must be positive"));
                }
                if !(gamma < 1.0 && 1.0 < p.alpha) {
                    return Err(Error::config(
                        format!("{prefix}alpha"),
                        format!("requires 0 < gamma < 1 < alpha, got alpha = {}", p.alpha),
                    ));
                }
            }
            InnerLaw::Erf(e) => {
                finite(prefix, "u", e.u)?;
                let floor = dbar / half_sqrt_pi();
                if e.u <= floor {
                    return Err(Error::config(
                        format!("{prefix}u"),
                        format!("U must exceed (2/sqrt(pi))*dbar = {floor}, got {}", e.u),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Full hybrid gain: outer law for `|x| > ε`, inner law for `|x| ≤ ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HybridGain {
    pub outer: OuterGain,
    pub inner: InnerLaw,
    pub eps: f64,
}

impl HybridGain {
    pub fn validate(&self, dbar: f64, prefix: &str) -> Result<()> {
        self.outer.validate(dbar, prefix)?;
        self.inner.validate(self.outer.gamma, dbar, prefix)?;
        finite(prefix, "eps", self.eps)?;
        if !(self.eps > 0.0 && self.eps <= self.outer.eps0) {
            return Err(Error::config(
                format!("{prefix}eps"),
                format!(
                    "requires 0 < eps <= eps0 = {}, got {}",
                    self.outer.eps0, self.eps
                ),
            ));
        }
        Ok(())
    }

    pub fn gain(&self, x: f64) -> f64 {
        let abs_x = x.abs();
        if abs_x > self.eps {
            gain_outer(abs_x, &self.outer)
        } else {
            self.inner_gain(x)
        }
    }

    fn inner_gain(&self, x: f64) -> f64 {
        match &self.inner {
            InnerLaw::Poly(p) => gain_inner_poly(x.abs(), self.outer.gamma, p),
            InnerLaw::Erf(e) => gain_inner_erf(x, e.u),
        }
    }

    /// `G_in(ε) − lim_{|x|↓ε} G_out(x)`: the size of the gain discontinuity
    /// at the layer boundary. Negative when the inner law is weaker.
    pub fn jump_at_eps(&self) -> f64 {
        self.inner_gain(self.eps) - gain_outer(self.eps, &self.outer)
    }
}

fn finite(prefix: &str, name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(format!("{prefix}{name}"), "must be finite"))
    }
}

/// Bounded outer gain. Lies in `[k0, k0 + k1)` and is strictly increasing in
/// `abs_x` (up to floating-point resolution of the ratio term).
pub fn gain_outer(abs_x: f64, p: &OuterGain) -> f64 {
    let xg = abs_x.powf(p.gamma);
    p.k0 + p.k1 * xg / (p.eps0.powf(p.gamma) + xg)
}

pub fn gain_inner_poly(abs_x: f64, gamma: f64, p: &PolyInner) -> f64 {
    p.a * abs_x.powf(gamma) + p.b * abs_x.powf(p.alpha)
}

pub fn gain_inner_erf(x: f64, u: f64) -> f64 {
    half_sqrt_pi() * u * (x * x).exp()
}

/// `u = −G_hyb(x) sgn(x)`.
pub fn control_first_order(x: f64, p: &HybridGain) -> f64 {
    -p.gain(x) * sgn(x)
}

/// Norm-normalized baseline gains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SatoParams {
    pub k: f64,
    pub sigma: f64,
}

impl SatoParams {
    pub fn validate(&self, dbar: f64, prefix: &str) -> Result<()> {
        finite(prefix, "k", self.k)?;
        finite(prefix, "sigma", self.sigma)?;
        if self.k <= dbar {
            return Err(Error::config(
                format!("{prefix}k"),
                format!("K must exceed disturbance bound (K = {} <= {dbar})", self.k),
            ));
        }
        if self.sigma < 0.0 {
            return Err(Error::config(
                format!("{prefix}sigma"),
                "sigma must be non-negative",
            ));
        }
        Ok(())
    }
}

/// `−K s / (‖s‖₂ + σ)`. Zero at `s = 0`.
pub fn control_sato(s: &[f64], p: &SatoParams) -> Vec<f64> {
    let mut out = vec![0.0; s.len()];
    control_sato_into(s, p, &mut out);
    out
}

pub(crate) fn control_sato_into(s: &[f64], p: &SatoParams, out: &mut [f64]) {
    let norm = s.iter().map(|v| v * v).sum::<f64>().sqrt();
    let denom = norm + p.sigma;
    if denom == 0.0 {
        out.fill(0.0);
        return;
    }
    for (o, v) in out.iter_mut().zip(s) {
        *o = -p.k * v / denom;
    }
}

/// Linear surface `s = ė + Λ e` with diagonal `Λ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlidingSurface {
    pub lambda: Vec<f64>,
}

impl SlidingSurface {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        for (i, &l) in self.lambda.iter().enumerate() {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::config(
                    format!("{prefix}lambda[{i}]"),
                    "slopes must be finite and positive",
                ));
            }
        }
        Ok(())
    }
}

pub fn sliding_variable(e: &[f64], edot: &[f64], surf: &SlidingSurface) -> Result<Vec<f64>> {
    if e.len() != edot.len() || e.len() != surf.lambda.len() {
        return Err(Error::config(
            "controller.lambda",
            format!(
                "dimension mismatch: e has {}, edot has {}, lambda has {}",
                e.len(),
                edot.len(),
                surf.lambda.len()
            ),
        ));
    }
    Ok(e.iter()
        .zip(edot)
        .zip(&surf.lambda)
        .map(|((e, ed), l)| ed + l * e)
        .collect())
}

/// Desired joint position, velocity and acceleration at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointReference {
    pub q: Vector2<f64>,
    pub qdot: Vector2<f64>,
    pub qddot: Vector2<f64>,
}

/// Intermediate quantities of the Euler–Lagrange law, kept for logging.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElControl {
    pub tau: Vector2<f64>,
    pub e: Vector2<f64>,
    pub s: Vector2<f64>,
}

/// `τ = M(q) q̈_r + C(q, q̇) q̇_r + g(q) − K_hyb(s) sgn(s)` with
/// `e = q − q_d`, `q̇_r = q̇_d − Λe`, `q̈_r = q̈_d − Λė` and `s = ė + Λe`.
///
/// The model terms use `p` as given; friction is not compensated.
pub fn control_el(
    state: &ManipulatorState,
    reference: &JointReference,
    surf: &SlidingSurface,
    gains: &[HybridGain],
    p: &TwoLinkParams,
) -> Result<ElControl> {
    if surf.lambda.len() != 2 || gains.len() != 2 {
        return Err(Error::config(
            "controller.joints",
            format!(
                "two-link law needs 2 slopes and 2 joint gains, got {} and {}",
                surf.lambda.len(),
                gains.len()
            ),
        ));
    }
    let lambda = Vector2::new(surf.lambda[0], surf.lambda[1]);
    let e = state.q - reference.q;
    let edot = state.qdot - reference.qdot;
    let qdot_r = reference.qdot - lambda.component_mul(&e);
    let qddot_r = reference.qddot - lambda.component_mul(&edot);
    let s = edot + lambda.component_mul(&e);
    let switching = Vector2::new(
        gains[0].gain(s[0]) * sgn(s[0]),
        gains[1].gain(s[1]) * sgn(s[1]),
    );
    let tau = p.mass_matrix(&state.q) * qddot_r
        + p.coriolis_matrix(&state.q, &state.qdot) * qdot_r
        + p.gravity(&state.q)
        - switching;
    if !tau.iter().chain(s.iter()).all(|v| v.is_finite()) {
        return Err(Error::NonFinite("two-link control torque".into()));
    }
    Ok(ElControl { tau, e, s })
}
