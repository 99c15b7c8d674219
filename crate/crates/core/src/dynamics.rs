//! Plant models and matched disturbance signals.
//!
//! Two plants are provided: the perturbed first-order integrator
//! `ẋ = u + d(t)` and a planar two-link manipulator in Euler–Lagrange form
//! `M(q) q̈ + C(q, q̇) q̇ + g(q) = τ + d(t) − F_d q̇`.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DisturbanceKind {
    /// `d_i(t) = amplitude_i · bound_i · sin(ω_i t + φ_i)`; amplitudes are
    /// fractions of the declared bound.
    SinusoidScaled,
    /// `d_i(t) = amplitude_i · sin(ω_i t + φ_i)` with absolute amplitudes.
    PerChannelList,
    Zero,
}

/// A bounded analytic disturbance signal with a declared per-component bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisturbanceSpec {
    pub kind: DisturbanceKind,
    #[serde(default)]
    pub amplitudes: Vec<f64>,
    #[serde(default)]
    pub frequencies: Vec<f64>,
    #[serde(default)]
    pub phases: Vec<f64>,
    pub bound: Vec<f64>,
}

impl DisturbanceSpec {
    /// `scale · bound · sin(frequency · t)` on a single channel.
    pub fn sinusoid_scaled(scale: f64, frequency: f64, bound: f64) -> Self {
        Self {
            kind: DisturbanceKind::SinusoidScaled,
            amplitudes: vec![scale],
            frequencies: vec![frequency],
            phases: vec![0.0],
            bound: vec![bound],
        }
    }

    /// Independent sinusoids, one per channel, with the amplitude doubling
    /// as the declared bound.
    pub fn per_channel(amplitudes: &[f64], frequencies: &[f64], phases: &[f64]) -> Self {
        Self {
            kind: DisturbanceKind::PerChannelList,
            amplitudes: amplitudes.to_vec(),
            frequencies: frequencies.to_vec(),
            phases: phases.to_vec(),
            bound: amplitudes.iter().map(|a| a.abs()).collect(),
        }
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            kind: DisturbanceKind::Zero,
            amplitudes: Vec::new(),
            frequencies: Vec::new(),
            phases: Vec::new(),
            bound: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.bound.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.bound.len();
        if n == 0 {
            return Err(Error::config(
                "disturbance.bound",
                "must have at least one component",
            ));
        }
        for (i, &b) in self.bound.iter().enumerate() {
            if !b.is_finite() || b < 0.0 {
                return Err(Error::config(
                    format!("disturbance.bound[{i}]"),
                    "must be finite and non-negative",
                ));
            }
            if self.kind != DisturbanceKind::Zero && b <= 0.0 {
                return Err(Error::config(
                    format!("disturbance.bound[{i}]"),
                    "must be strictly positive for a non-zero disturbance",
                ));
            }
        }
        if self.kind == DisturbanceKind::Zero {
            return Ok(());
        }
        if self.amplitudes.len() != n {
            return Err(Error::config(
                "disturbance.amplitudes",
                format!(
                    "expected {n} entries to match the bound, got {}",
                    self.amplitudes.len()
                ),
            ));
        }
        if self.frequencies.len() != n {
            return Err(Error::config(
                "disturbance.frequencies",
                format!(
                    "expected {n} entries to match the bound, got {}",
                    self.frequencies.len()
                ),
            ));
        }
        if !self.phases.is_empty() && self.phases.len() != n {
            return Err(Error::config(
                "disturbance.phases",
                format!("expected 0 or {n} entries, got {}", self.phases.len()),
            ));
        }
        for (i, (&a, &b)) in self.amplitudes.iter().zip(&self.bound).enumerate() {
            let peak = match self.kind {
                DisturbanceKind::SinusoidScaled => a.abs() * b,
                _ => a.abs(),
            };
            if !peak.is_finite() || peak > b {
                return Err(Error::config(
                    format!("disturbance.amplitudes[{i}]"),
                    format!("peak {peak} exceeds the declared bound {b}"),
                ));
            }
        }
        if let Some(i) = self
            .frequencies
            .iter()
            .chain(&self.phases)
            .position(|v| !v.is_finite())
        {
            return Err(Error::config(
                "disturbance.frequencies",
                format!("entry {i} is not finite"),
            ));
        }
        Ok(())
    }

    /// Evaluates `d(t)`, checking the dimensions of the spec first.
    pub fn eval(&self, t: f64) -> Result<Vec<f64>> {
        self.validate()?;
        let mut out = vec![0.0; self.dim()];
        self.eval_into(t, &mut out);
        Ok(out)
    }

    /// Unchecked evaluation for a spec that already passed [`validate`](Self::validate).
    pub(crate) fn eval_into(&self, t: f64, out: &mut [f64]) {
        if self.kind == DisturbanceKind::Zero {
            out.fill(0.0);
            return;
        }
        for (i, o) in out.iter_mut().enumerate() {
            let phase = self.phases.get(i).copied().unwrap_or(0.0);
            let wave = (self.frequencies[i] * t + phase).sin();
            let raw = match self.kind {
                DisturbanceKind::SinusoidScaled => self.amplitudes[i] * self.bound[i] * wave,
                _ => self.amplitudes[i] * wave,
            };
            // sin can exceed 1 by an ulp after phase rounding
            *o = raw.clamp(-self.bound[i], self.bound[i]);
        }
    }
}

/// Right-hand side of the perturbed first-order integrator. The state does
/// not enter.
pub fn integrator_rhs(_x: f64, u: f64, d: f64) -> f64 {
    u + d
}

/// Inertia, friction and gravity constants of the planar two-link arm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoLinkParams {
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    pub fd1: f64,
    pub fd2: f64,
    #[serde(default)]
    pub gravity_enabled: bool,
    /// Gravity torque amplitudes `[g1, g2]` in N·m, used only when gravity is
    /// enabled: `g(q) = [g1 cos q1 + g2 cos(q1+q2), g2 cos(q1+q2)]`.
    #[serde(default)]
    pub gravity_torques: [f64; 2],
}

impl Default for TwoLinkParams {
    /// The horizontal-plane benchmark arm.
    fn default() -> Self {
        Self {
            p1: 3.473,
            p2: 0.196,
            p3: 0.242,
            fd1: 1.1,
            fd2: 1.1,
            gravity_enabled: false,
            gravity_torques: [0.0, 0.0],
        }
    }
}

impl TwoLinkParams {
    /// Requires `p2 > 0` and `(p1 − p2)·p2 − p3² > 0`, which is exactly the
    /// condition for `det M(q) > 0` at every `q2` (the determinant is
    /// `p1 p2 − p2² − p3² cos² q2`).
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("p1", self.p1),
            ("p2", self.p2),
            ("p3", self.p3),
            ("fd1", self.fd1),
            ("fd2", self.fd2),
            ("gravity_torques[0]", self.gravity_torques[0]),
            ("gravity_torques[1]", self.gravity_torques[1]),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::config(format!("plant.{name}"), "must be finite"));
            }
        }
        if self.p1 <= 0.0 {
            return Err(Error::config("plant.p1", "must be positive"));
        }
        if self.p2 <= 0.0 {
            return Err(Error::config("plant.p2", "must be positive"));
        }
        if self.min_det() <= 0.0 {
            return Err(Error::config(
                "plant.p3",
                format!(
                    "mass matrix loses definiteness: (p1 - p2)*p2 - p3^2 = {} must be positive",
                    self.min_det()
                ),
            ));
        }
        if self.fd1 < 0.0 || self.fd2 < 0.0 {
            return Err(Error::config(
                "plant.fd1",
                "friction coefficients must be non-negative",
            ));
        }
        Ok(())
    }

    fn min_det(&self) -> f64 {
        (self.p1 - self.p2) * self.p2 - self.p3 * self.p3
    }

    pub fn mass_matrix(&self, q: &Vector2<f64>) -> Matrix2<f64> {
        let c2 = q[1].cos();
        let off = self.p2 + self.p3 * c2;
        Matrix2::new(self.p1 + 2.0 * self.p3 * c2, off, off, self.p2)
    }

    pub fn coriolis_matrix(&self, q: &Vector2<f64>, qdot: &Vector2<f64>) -> Matrix2<f64> {
        let h = self.p3 * q[1].sin();
        Matrix2::new(-h * qdot[1], -h * (qdot[0] + qdot[1]), h * qdot[0], 0.0)
    }

    pub fn gravity(&self, q: &Vector2<f64>) -> Vector2<f64> {
        if !self.gravity_enabled {
            return Vector2::zeros();
        }
        let [g1, g2] = self.gravity_torques;
        let c12 = (q[0] + q[1]).cos();
        Vector2::new(g1 * q[0].cos() + g2 * c12, g2 * c12)
    }

    pub fn friction(&self, qdot: &Vector2<f64>) -> Vector2<f64> {
        Vector2::new(self.fd1 * qdot[0], self.fd2 * qdot[1])
    }

    /// Smallest and largest eigenvalue of `M(q)` over a fine grid in `q2`
    /// (the matrix does not depend on `q1`). Diagnostic for the inertia bound
    /// `μ₁ I ≤ M(q) ≤ μ₂ I`.
    pub fn inertia_eigen_range(&self) -> (f64, f64) {
        const GRID: usize = 720;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for k in 0..=GRID {
            let q2 = std::f64::consts::TAU * k as f64 / GRID as f64;
            let m = self.mass_matrix(&Vector2::new(0.0, q2));
            let (a, b, d) = (m[(0, 0)], m[(0, 1)], m[(1, 1)]);
            let mean = 0.5 * (a + d);
            let r = (0.25 * (a - d) * (a - d) + b * b).sqrt();
            lo = lo.min(mean - r);
            hi = hi.max(mean + r);
        }
        (lo, hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManipulatorState {
    pub q: Vector2<f64>,
    pub qdot: Vector2<f64>,
}

impl ManipulatorState {
    pub fn new(q: [f64; 2], qdot: [f64; 2]) -> Self {
        Self {
            q: Vector2::from(q),
            qdot: Vector2::from(qdot),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(self.qdot.iter()).all(|v| v.is_finite())
    }
}

/// Forward dynamics of the two-link arm. Returns `(q̇, q̈)` with
/// `q̈ = M⁻¹ (τ + d − C q̇ − g − F_d q̇)`.
pub fn manipulator_rhs(
    state: &ManipulatorState,
    tau: &Vector2<f64>,
    d: &Vector2<f64>,
    p: &TwoLinkParams,
) -> Result<(Vector2<f64>, Vector2<f64>)> {
    if !tau.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("joint torque".into()));
    }
    let m = p.mass_matrix(&state.q);
    let bias = p.coriolis_matrix(&state.q, &state.qdot) * state.qdot
        + p.gravity(&state.q)
        + p.friction(&state.qdot);
    let rhs = (tau + d) - bias;
    let qddot = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::NonFinite("singular mass matrix".into()))?;
    Ok((state.qdot, qddot))
}
