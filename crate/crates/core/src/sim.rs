//! Deterministic fixed-step closed-loop simulation.
//!
//! Control is computed once per step from the pre-step state and held over
//! the step. The disturbance is evaluated at every stage time of the
//! integrator. Sample `k` sits at `t = k·dt` exactly (no accumulated time).

use std::io::{self, Write};

use nalgebra::Vector2;

use crate::config::{IntegratorKind, PlantConfig, ReferenceSpec, SimConfig, StepConfig};
use crate::controllers::{control_el, control_sato_into, HybridGain, SatoParams, SlidingSurface};
use crate::dynamics::{manipulator_rhs, DisturbanceSpec, ManipulatorState, TwoLinkParams};
use crate::error::{Error, Result};

/// Row-major sequence of equally sized sample vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    dim: usize,
    data: Vec<f64>,
}

impl Series {
    pub fn with_capacity(dim: usize, rows: usize) -> Self {
        Self {
            dim,
            data: Vec::with_capacity(dim * rows),
        }
    }

    pub fn from_rows<R: AsRef<[f64]>>(dim: usize, rows: impl IntoIterator<Item = R>) -> Self {
        let mut s = Self::with_capacity(dim, 0);
        for r in rows {
            s.push(r.as_ref());
        }
        s
    }

    pub fn push(&mut self, row: &[f64]) {
        assert_eq!(
            row.len(),
            self.dim,
            "row width must match the series dimension"
        );
        self.data.extend_from_slice(row);
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.data[k * self.dim..(k + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + DoubleEndedIterator {
        self.data.chunks_exact(self.dim.max(1))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Uniformly sampled closed-loop run.
///
/// `state` is the plant state (`x`, or `[q1, q2, q̇1, q̇2]` for the
/// manipulator), `s` the sliding variable (equal to `state` for the
/// first-order plant) and `error` the regulation error the performance
/// metrics are computed on (`x`, or `q − q_d`).
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub t: Vec<f64>,
    pub state: Series,
    pub u: Series,
    pub s: Series,
    pub d: Series,
    pub error: Series,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        match (self.t.first(), self.t.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }

    /// CSV header `t,x_1..x_n,u_1..u_m,s_1..s_k,d_1..d_k`.
    pub fn csv_header(&self) -> String {
        let mut cols = vec!["t".to_string()];
        for (prefix, dim) in [
            ("x", self.state.dim()),
            ("u", self.u.dim()),
            ("s", self.s.dim()),
            ("d", self.d.dim()),
        ] {
            cols.extend((1..=dim).map(|i| format!("{prefix}_{i}")));
        }
        cols.join(",")
    }

    /// One row per sample, every value printed with 17 significant digits so
    /// that 64-bit floats round-trip exactly.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{}", self.csv_header())?;
        let mut line = String::new();
        for k in 0..self.len() {
            line.clear();
            push_float(&mut line, self.t[k]);
            for series in [&self.state, &self.u, &self.s, &self.d] {
                for v in series.row(k) {
                    line.push(',');
                    push_float(&mut line, *v);
                }
            }
            line.push('\n');
            w.write_all(line.as_bytes())?;
        }
        w.flush()
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is ASCII")
    }
}

fn push_float(line: &mut String, v: f64) {
    use std::fmt::Write as _;
    let _ = write!(line, "{v:.16e}");
}

/// A static state-feedback law `u = κ(x)` for the first-order plant.
pub trait FeedbackLaw {
    fn control(&self, x: &[f64], u: &mut [f64]);
}

/// Componentwise hybrid-gain law.
impl FeedbackLaw for HybridGain {
    fn control(&self, x: &[f64], u: &mut [f64]) {
        for (ui, xi) in u.iter_mut().zip(x) {
            *ui = crate::controllers::control_first_order(*xi, self);
        }
    }
}

impl FeedbackLaw for SatoParams {
    fn control(&self, x: &[f64], u: &mut [f64]) {
        control_sato_into(x, self, u);
    }
}

impl<F: Fn(&[f64], &mut [f64])> FeedbackLaw for F {
    fn control(&self, x: &[f64], u: &mut [f64]) {
        self(x, u)
    }
}

#[allow(clippy::needless_range_loop)]
/// Advances `x` by one step of `method`. `rhs(t, x, dx)` writes the
/// derivative and may fail on non-finite intermediate values.
fn advance<F>(
    method: IntegratorKind,
    t: f64,
    dt: f64,
    x: &mut [f64],
    scratch: &mut Scratch,
    mut rhs: F,
) -> Result<()>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    match method {
        IntegratorKind::Euler => {
            rhs(t, x, &mut scratch.k1)?;
            for (xi, ki) in x.iter_mut().zip(&scratch.k1) {
                *xi += dt * ki;
            }
        }
        IntegratorKind::Rk4 => {
            let n = x.len();
            let half = 0.5 * dt;
            rhs(t, x, &mut scratch.k1)?;
            for i in 0..n {
                scratch.tmp[i] = x[i] + half * scratch.k1[i];
            }
            rhs(t + half, &scratch.tmp, &mut scratch.k2)?;
            for i in 0..n {
                scratch.tmp[i] = x[i] + half * scratch.k2[i];
            }
            rhs(t + half, &scratch.tmp, &mut scratch.k3)?;
            for i in 0..n {
                scratch.tmp[i] = x[i] + dt * scratch.k3[i];
            }
            rhs(t + dt, &scratch.tmp, &mut scratch.k4)?;
            for i in 0..n {
                x[i] += dt / 6.0
                    * (scratch.k1[i] + 2.0 * scratch.k2[i] + 2.0 * scratch.k3[i] + scratch.k4[i]);
            }
        }
    }
    Ok(())
}

struct Scratch {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Self {
            k1: vec![0.0; n],
            k2: vec![0.0; n],
            k3: vec![0.0; n],
            k4: vec![0.0; n],
            tmp: vec![0.0; n],
        }
    }
}

fn at_step(step: usize, dt: f64, err: Error) -> Error {
    match err {
        Error::NonFinite(what) => Error::Divergence {
            step,
            time: step as f64 * dt,
            reason: format!("non-finite value in {what}"),
        },
        other => other,
    }
}

fn check_finite(step: usize, dt: f64, x: &[f64]) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Divergence {
            step,
            time: step as f64 * dt,
            reason: "state became non-finite".into(),
        })
    }
}

/// Closed loop `ẋ = κ(x) + d(t)` on the first-order integrator.
pub fn simulate_first_order(
    x0: &[f64],
    law: &dyn FeedbackLaw,
    disturbance: &DisturbanceSpec,
    step: &StepConfig,
) -> Result<Trajectory> {
    step.validate()?;
    disturbance.validate()?;
    let n = x0.len();
    if disturbance.dim() != n {
        return Err(Error::config(
            "disturbance.bound",
            format!("has {} entries but the state has {n}", disturbance.dim()),
        ));
    }
    let steps = step.steps();
    let dt = step.dt;
    let rows = steps + 1;
    let mut traj = Trajectory {
        dt,
        t: Vec::with_capacity(rows),
        state: Series::with_capacity(n, rows),
        u: Series::with_capacity(n, rows),
        s: Series::with_capacity(n, rows),
        d: Series::with_capacity(n, rows),
        error: Series::with_capacity(n, rows),
    };
    let mut x = x0.to_vec();
    let mut u = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut scratch = Scratch::new(n);
    check_finite(0, dt, &x)?;
    for k in 0..=steps {
        let t = k as f64 * dt;
        law.control(&x, &mut u);
        check_finite(k, dt, &u).map_err(|_| Error::Divergence {
            step: k,
            time: t,
            reason: "control became non-finite".into(),
        })?;
        disturbance.eval_into(t, &mut d);
        traj.t.push(t);
        traj.state.push(&x);
        traj.u.push(&u);
        traj.s.push(&x);
        traj.d.push(&d);
        traj.error.push(&x);
        if k == steps {
            break;
        }
        let mut stage_d = vec![0.0; n];
        advance(
            step.integrator,
            t,
            dt,
            &mut x,
            &mut scratch,
            |ts, _x, dx| {
                disturbance.eval_into(ts, &mut stage_d);
                for ((dxi, ui), di) in dx.iter_mut().zip(&u).zip(&stage_d) {
                    *dxi = ui + di;
                }
                Ok(())
            },
        )?;
        check_finite(k + 1, dt, &x)?;
    }
    Ok(traj)
}

/// Closed loop of the two-link arm under the hybrid-gain tracking law.
#[allow(clippy::too_many_arguments)]
pub fn simulate_two_link(
    state0: &ManipulatorState,
    reference: &ReferenceSpec,
    surf: &SlidingSurface,
    gains: &[HybridGain],
    params: &TwoLinkParams,
    disturbance: &DisturbanceSpec,
    step: &StepConfig,
) -> Result<Trajectory> {
    step.validate()?;
    disturbance.validate()?;
    params.validate()?;
    if disturbance.dim() != 2 {
        return Err(Error::config(
            "disturbance.bound",
            format!("two-link plant needs 2 entries, got {}", disturbance.dim()),
        ));
    }
    let steps = step.steps();
    let dt = step.dt;
    let rows = steps + 1;
    let mut traj = Trajectory {
        dt,
        t: Vec::with_capacity(rows),
        state: Series::with_capacity(4, rows),
        u: Series::with_capacity(2, rows),
        s: Series::with_capacity(2, rows),
        d: Series::with_capacity(2, rows),
        error: Series::with_capacity(2, rows),
    };
    let mut x = vec![state0.q[0], state0.q[1], state0.qdot[0], state0.qdot[1]];
    let mut d = [0.0; 2];
    let mut scratch = Scratch::new(4);
    check_finite(0, dt, &x)?;
    for k in 0..=steps {
        let t = k as f64 * dt;
        let state = ManipulatorState::new([x[0], x[1]], [x[2], x[3]]);
        let out = control_el(&state, &reference.at(t), surf, gains, params)
            .map_err(|e| at_step(k, dt, e))?;
        disturbance.eval_into(t, &mut d);
        traj.t.push(t);
        traj.state.push(&x);
        traj.u.push(out.tau.as_slice());
        traj.s.push(out.s.as_slice());
        traj.d.push(&d);
        traj.error.push(out.e.as_slice());
        if k == steps {
            break;
        }
        let tau = out.tau;
        let mut stage_d = [0.0; 2];
        advance(
            step.integrator,
            t,
            dt,
            &mut x,
            &mut scratch,
            |ts, xs, dx| {
                disturbance.eval_into(ts, &mut stage_d);
                let st = ManipulatorState::new([xs[0], xs[1]], [xs[2], xs[3]]);
                let (qdot, qddot) = manipulator_rhs(&st, &tau, &Vector2::from(stage_d), params)?;
                dx.copy_from_slice(&[qdot[0], qdot[1], qddot[0], qddot[1]]);
                Ok(())
            },
        )
        .map_err(|e| at_step(k + 1, dt, e))?;
        check_finite(k + 1, dt, &x)?;
    }
    Ok(traj)
}

/// Runs the scenario described by `cfg`. Identical configs produce
/// bit-identical trajectories.
pub fn simulate(cfg: &SimConfig) -> Result<Trajectory> {
    cfg.validate()?;
    match &cfg.plant {
        PlantConfig::FirstOrder => {
            let x0 = cfg.initial.x0.as_deref().unwrap_or_default();
            if let Some(sato) = cfg.controller.sato() {
                simulate_first_order(x0, &sato, &cfg.disturbance, &cfg.sim)
            } else {
                let gain = cfg.controller.hybrid_gains()[0];
                simulate_first_order(x0, &gain, &cfg.disturbance, &cfg.sim)
            }
        }
        PlantConfig::TwoLink(params) => {
            let state0 = cfg
                .manipulator_state0()
                .ok_or_else(|| Error::config("initial.q0", "required for a two-link plant"))?;
            let reference = cfg
                .reference
                .as_ref()
                .ok_or_else(|| Error::config("reference", "required for a two-link plant"))?;
            let surf = cfg
                .controller
                .surface()
                .ok_or_else(|| Error::config("controller.lambda", "required"))?;
            simulate_two_link(
                &state0,
                reference,
                &surf,
                &cfg.controller.hybrid_gains(),
                params,
                &cfg.disturbance,
                &cfg.sim,
            )
        }
    }
}
