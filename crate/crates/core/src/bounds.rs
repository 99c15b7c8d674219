//! Closed-form layer-entry and settling-time bounds.
//!
//! Every bound is available in two forms. [`BoundMode::PaperLiteral`]
//! evaluates the printed expressions verbatim, including the logarithmic
//! first-range term and the clamped second-range term. [`BoundMode::Rederived`]
//! integrates the comparison inequalities directly:
//!
//! * for `V ≥ ε0`, `V̇ ≤ −(k0 − d̄)` gives the linear time
//!   `(max{|x0|, ε0} − max{ε, ε0}) / (k0 − d̄)`;
//! * for `ε ≤ V ≤ ε0`, `V̇ ≤ −k1 V^γ / (2 ε0^γ)` gives
//!   `2 ε0^γ / (k1 (1 − γ)) · (min{|x0|, ε0}^{1−γ} − ε^{1−γ})₊`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::controllers::{half_sqrt_pi, HybridGain, InnerLaw, PolyInner, SatoParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundMode {
    PaperLiteral,
    Rederived,
}

impl BoundMode {
    pub const ALL: [BoundMode; 2] = [BoundMode::PaperLiteral, BoundMode::Rederived];

    pub fn as_str(self) -> &'static str {
        match self {
            BoundMode::PaperLiteral => "paper-literal",
            BoundMode::Rederived => "rederived",
        }
    }
}

impl fmt::Display for BoundMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BoundMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper-literal" => Ok(BoundMode::PaperLiteral),
            "rederived" => Ok(BoundMode::Rederived),
            other => Err(Error::config(
                "mode",
                format!("expected `paper-literal` or `rederived`, got `{other}`"),
            )),
        }
    }
}

/// Control-law family a [`BoundReport`] was computed for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundLaw {
    Hybrid,
    Sato,
}

/// Per-component entry of a multi-channel bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentBound {
    pub initial: f64,
    pub t_out: f64,
    pub t_in: f64,
    pub gain_jump_at_eps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub mode: BoundMode,
    pub law: BoundLaw,
    pub t_out: f64,
    pub t_in: f64,
    pub t_total: f64,
    pub per_component: Option<Vec<ComponentBound>>,
    /// Largest-magnitude gain discontinuity at `|x| = ε` over components.
    pub gain_jump_at_eps: f64,
    pub eps: f64,
    /// `|x_i(0)|` or `|s_i(0)|` the bound was computed from.
    pub initial: Vec<f64>,
    /// Guaranteed decrease rate of `|x_i|` outside the layer, `k0_i − d̄_i`
    /// (or `K − d̄` for the norm-normalized law).
    pub reaching_rate: Vec<f64>,
    /// Disturbance bounds the report was computed with.
    pub dbar: Vec<f64>,
    /// `(d̄/a)^{1/γ}` for polynomial inner laws (largest over components).
    pub residual_radius: Option<f64>,
}

fn require_feasible(k0: f64, dbar: f64, what: &str) -> Result<()> {
    if k0 > dbar {
        Ok(())
    } else {
        Err(Error::Infeasible(format!(
            "{what}: k0 must exceed disturbance bound (k0 = {k0} <= dbar = {dbar})"
        )))
    }
}

/// Outer-region layer-entry bound for initial state `x0`.
pub fn t_out_bound(x0: f64, p: &HybridGain, dbar: f64, mode: BoundMode) -> Result<f64> {
    let o = &p.outer;
    require_feasible(o.k0, dbar, "outer gain")?;
    if !(p.eps > 0.0 && p.eps <= o.eps0) {
        return Err(Error::config(
            "controller.eps",
            format!("requires 0 < eps <= eps0 = {}, got {}", o.eps0, p.eps),
        ));
    }
    let r0 = x0.abs();
    let margin = o.k0 - dbar;
    let power = 1.0 - o.gamma;
    let t = match mode {
        BoundMode::PaperLiteral => {
            let t1 = (r0.max(o.eps0) / p.eps.max(o.eps0)).ln() / margin;
            let diff = p.eps.powf(power) - r0.min(o.eps0).powf(power);
            let t2 = o.eps0.powf(o.gamma) / (o.k1 * power) * diff.max(0.0);
            t1 + t2
        }
        BoundMode::Rederived => {
            let t1 = (r0.max(o.eps0) - p.eps.max(o.eps0)) / margin;
            let diff = r0.min(o.eps0).powf(power) - p.eps.powf(power);
            let t2 = 2.0 * o.eps0.powf(o.gamma) / (o.k1 * power) * diff.max(0.0);
            t1 + t2
        }
    };
    Ok(t.max(0.0))
}

/// Fixed-time constant of the mixed-power inner law; independent of state.
pub fn t_in_poly_bound(p: &PolyInner, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::config(
            "controller.gamma",
            format!("requires 0 < gamma < 1, got {gamma}"),
        ));
    }
    if p.alpha <= 1.0 {
        return Err(Error::config(
            "controller.alpha",
            format!("requires alpha > 1, got {}", p.alpha),
        ));
    }
    if p.a <= 0.0 || p.b <= 0.0 {
        return Err(Error::config("controller.a", "a and b must be positive"));
    }
    Ok(1.0 / (p.a * (1.0 - gamma)) + 1.0 / (p.b * (p.alpha - 1.0)))
}

/// `ε / ((√π/2) U − d̄)`.
pub fn t_in_erf_bound(u: f64, dbar: f64, eps: f64) -> Result<f64> {
    let margin = erf_margin(u, dbar)?;
    Ok(eps / margin)
}

/// The per-joint form printed for the manipulator, `1 / (U − (2/√π) d̄)`.
pub fn t_in_erf_bound_el_printed(u: f64, dbar: f64) -> Result<f64> {
    erf_margin(u, dbar)?;
    Ok(1.0 / (u - dbar / half_sqrt_pi()))
}

fn erf_margin(u: f64, dbar: f64) -> Result<f64> {
    let margin = half_sqrt_pi() * u - dbar;
    // a margin within rounding of zero is the boundary case U = 2 d̄ / √π
    if margin <= 4.0 * f64::EPSILON * dbar.abs().max(1.0) {
        return Err(Error::Infeasible(format!(
            "erf inner law needs U > (2/sqrt(pi))*dbar = {}, got U = {u}",
            dbar / half_sqrt_pi()
        )));
    }
    Ok(margin)
}

/// Time for the norm-normalized law to bring `‖s‖∞` from `r0` down to `eps`.
pub fn t_sato_bound(r0: f64, eps: f64, k: f64, dbar: f64) -> Result<f64> {
    if k <= dbar {
        return Err(Error::Infeasible(format!(
            "SATO gain must exceed disturbance bound (K = {k} <= dbar = {dbar})"
        )));
    }
    if r0 < eps {
        return Err(Error::config(
            "initial",
            format!("requires r0 >= eps, got r0 = {r0} < {eps}"),
        ));
    }
    Ok((r0 - eps) / (k - dbar))
}

/// `(d̄/a)^{1/γ}`: below this radius `a|x|^γ < d̄`, so the inner law alone can
/// no longer dominate the disturbance. Ignores the `b` term, so it
/// over-estimates the residual set.
pub fn residual_radius(p: &PolyInner, gamma: f64, dbar: f64) -> f64 {
    (dbar / p.a).powf(1.0 / gamma)
}

/// Root of `a r^γ + b r^α = d̄` by bisection on `[0, residual_radius]`.
pub fn residual_radius_refined(p: &PolyInner, gamma: f64, dbar: f64) -> f64 {
    let f = |r: f64| p.a * r.powf(gamma) + p.b * r.powf(p.alpha) - dbar;
    let (mut lo, mut hi) = (0.0, residual_radius(p, gamma, dbar));
    if hi == 0.0 {
        return 0.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

fn inner_bound(gain: &HybridGain, dbar: f64, mode: BoundMode, per_joint_el: bool) -> Result<f64> {
    match &gain.inner {
        InnerLaw::Poly(p) => t_in_poly_bound(p, gain.outer.gamma),
        InnerLaw::Erf(e) => {
            if per_joint_el && mode == BoundMode::PaperLiteral {
                t_in_erf_bound_el_printed(e.u, dbar)
            } else {
                t_in_erf_bound(e.u, dbar, gain.eps)
            }
        }
    }
}

fn component_bounds(
    s0: &[f64],
    gains: &[&HybridGain],
    dbar: &[f64],
    mode: BoundMode,
    per_joint_el: bool,
    label: &str,
) -> Result<BoundReport> {
    if s0.len() != gains.len() || s0.len() != dbar.len() {
        return Err(Error::config(
            "disturbance.bound",
            format!(
                "dimension mismatch: {} initial components, {} gains, {} bounds",
                s0.len(),
                gains.len(),
                dbar.len()
            ),
        ));
    }
    let mut comps = Vec::with_capacity(s0.len());
    for (i, ((&s, g), &db)) in s0.iter().zip(gains).zip(dbar).enumerate() {
        let which = format!("{label} {}", i + 1);
        require_feasible(g.outer.k0, db, &which)?;
        let t_out = t_out_bound(s, g, db, mode).map_err(|e| match e {
            Error::Infeasible(msg) => Error::Infeasible(format!("{which}: {msg}")),
            other => other,
        })?;
        let t_in = inner_bound(g, db, mode, per_joint_el).map_err(|e| match e {
            Error::Infeasible(msg) => Error::Infeasible(format!("{which}: {msg}")),
            other => other,
        })?;
        comps.push(ComponentBound {
            initial: s.abs(),
            t_out,
            t_in,
            gain_jump_at_eps: g.jump_at_eps(),
        });
    }
    let t_out = comps.iter().map(|c| c.t_out).fold(0.0, f64::max);
    let t_in = comps.iter().map(|c| c.t_in).fold(0.0, f64::max);
    let gain_jump_at_eps = comps
        .iter()
        .map(|c| c.gain_jump_at_eps)
        .fold(0.0, |acc: f64, j| if j.abs() > acc.abs() { j } else { acc });
    let residual_radius = gains
        .iter()
        .zip(dbar)
        .filter_map(|(g, &db)| match &g.inner {
            InnerLaw::Poly(p) => Some(residual_radius(p, g.outer.gamma, db)),
            InnerLaw::Erf(_) => None,
        })
        .reduce(f64::max);
    Ok(BoundReport {
        mode,
        law: BoundLaw::Hybrid,
        t_out,
        t_in,
        t_total: t_out + t_in,
        gain_jump_at_eps,
        eps: gains.first().map_or(0.0, |g| g.eps),
        initial: comps.iter().map(|c| c.initial).collect(),
        reaching_rate: gains
            .iter()
            .zip(dbar)
            .map(|(g, db)| g.outer.k0 - db)
            .collect(),
        dbar: dbar.to_vec(),
        per_component: (comps.len() > 1).then_some(comps),
        residual_radius,
    })
}

/// First-order hybrid law applied componentwise to `x0`.
pub fn first_order_bounds(
    x0: &[f64],
    gain: &HybridGain,
    dbar: &[f64],
    mode: BoundMode,
) -> Result<BoundReport> {
    let gains = vec![gain; x0.len()];
    component_bounds(x0, &gains, dbar, mode, false, "component")
}

/// Per-joint bounds of the manipulator law: `T_out = max_i T_out^(i)`,
/// `T_in = max_i T_in^(i)`.
pub fn el_bounds(
    s0: &[f64],
    gains: &[HybridGain],
    dbar: &[f64],
    mode: BoundMode,
) -> Result<BoundReport> {
    let refs: Vec<&HybridGain> = gains.iter().collect();
    component_bounds(s0, &refs, dbar, mode, true, "joint")
}

/// Bound for the norm-normalized law; identical in both modes. The inner
/// time is the constant-rate descent from `ε` to the origin.
pub fn sato_bounds(
    x0: &[f64],
    p: &SatoParams,
    eps: f64,
    dbar: &[f64],
    mode: BoundMode,
) -> Result<BoundReport> {
    let r0 = x0.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    let db = dbar.iter().fold(0.0, |m: f64, v| m.max(*v));
    let t_out = if r0 <= eps {
        t_sato_bound(eps, eps, p.k, db)?
    } else {
        t_sato_bound(r0, eps, p.k, db)?
    };
    let t_in = t_sato_bound(eps, 0.0, p.k, db)?;
    Ok(BoundReport {
        mode,
        law: BoundLaw::Sato,
        t_out,
        t_in,
        t_total: t_out + t_in,
        per_component: None,
        gain_jump_at_eps: 0.0,
        eps,
        initial: vec![r0],
        reaching_rate: vec![p.k - db],
        dbar: dbar.to_vec(),
        residual_radius: None,
    })
}
