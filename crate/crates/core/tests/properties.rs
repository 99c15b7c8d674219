use nalgebra::Vector2;
use proptest::prelude::*;

use hgsmc::analysis::{iae, mean_control, rms_error};
use hgsmc::bounds::{t_out_bound, BoundMode};
use hgsmc::config::{IntegratorKind, StepConfig};
use hgsmc::controllers::{
    control_first_order, control_sato, gain_outer, HybridGain, InnerLaw, OuterGain, PolyInner,
    SatoParams,
};
use hgsmc::dynamics::{DisturbanceSpec, TwoLinkParams};
use hgsmc::presets;
use hgsmc::sim::{simulate_first_order, Series, Trajectory};

fn outer() -> impl Strategy<Value = OuterGain> {
    (0.6..5.0f64, 0.01..5.0f64, 0.05..1.0f64, 0.05..0.95f64).prop_map(|(k0, k1, eps0, gamma)| {
        OuterGain {
            k0,
            k1,
            eps0,
            gamma,
        }
    })
}

fn hybrid() -> impl Strategy<Value = HybridGain> {
    (
        outer(),
        0.1..5.0f64,
        0.1..5.0f64,
        1.05..3.0f64,
        0.05..1.0f64,
    )
        .prop_map(|(outer, a, b, alpha, frac)| HybridGain {
            outer,
            inner: InnerLaw::Poly(PolyInner { a, b, alpha }),
            eps: frac * outer.eps0,
        })
}

fn reversed(traj: &Trajectory) -> Trajectory {
    let rev = |s: &Series| Series::from_rows(s.dim(), s.rows().rev().map(|r| r.to_vec()));
    Trajectory {
        dt: traj.dt,
        t: traj.t.clone(),
        state: rev(&traj.state),
        u: rev(&traj.u),
        s: rev(&traj.s),
        d: rev(&traj.d),
        error: rev(&traj.error),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn outer_gain_stays_in_range(p in outer(), e in -9.0..6.0f64) {
        let g = gain_outer(10f64.powf(e), &p);
        prop_assert!(g >= p.k0 && g <= p.k0 + p.k1);
    }

    #[test]
    fn outer_gain_is_monotone(p in outer(), a in 0.0..100.0f64, b in 0.0..100.0f64) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(gain_outer(lo, &p) <= gain_outer(hi, &p));
    }

    #[test]
    fn first_order_control_opposes_state(g in hybrid(), x in -50.0..50.0f64) {
        let u = control_first_order(x, &g);
        prop_assert!(x * u <= 0.0);
        if x.abs() > g.eps {
            prop_assert!(u.abs() >= g.outer.k0 && u.abs() <= g.outer.k0 + g.outer.k1);
        }
    }

    #[test]
    fn sato_magnitude_and_direction(
        k in 0.1..10.0f64,
        sigma in 0.0..1e-3f64,
        s in prop::collection::vec(-10.0..10.0f64, 1..6),
    ) {
        let u = control_sato(&s, &SatoParams { k, sigma });
        let norm_s = s.iter().map(|v| v * v).sum::<f64>().sqrt();
        let norm_u = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!(norm_u <= k * (1.0 + 1e-12));
        // u = −c s with c ≥ 0
        let c = k / (norm_s + sigma);
        for (ui, si) in u.iter().zip(&s) {
            prop_assert!((ui + c * si).abs() <= 1e-12 * (1.0 + k));
        }
    }

    #[test]
    fn disturbance_respects_bound(
        amps in prop::collection::vec(-3.0..3.0f64, 1..4),
        w in 0.0..20.0f64,
        t in 0.0..100.0f64,
    ) {
        let n = amps.len();
        let spec = DisturbanceSpec::per_channel(&amps, &vec![w; n], &vec![0.3; n]);
        let d = spec.eval(t).unwrap();
        for (di, b) in d.iter().zip(&spec.bound) {
            prop_assert!(di.abs() <= *b);
        }
    }

    #[test]
    fn mass_matrix_symmetric_positive(q1 in -10.0..10.0f64, q2 in -10.0..10.0f64) {
        let p = TwoLinkParams::default();
        let m = p.mass_matrix(&Vector2::new(q1, q2));
        prop_assert_eq!(m[(0, 1)], m[(1, 0)]);
        prop_assert!(m[(0, 0)] > 0.0 && m.determinant() > 0.0);
    }

    #[test]
    fn rederived_t_out_grows_with_distance(g in hybrid(), a in 0.0..20.0f64, b in 0.0..20.0f64) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let t_lo = t_out_bound(lo, &g, 0.5, BoundMode::Rederived).unwrap();
        let t_hi = t_out_bound(hi, &g, 0.5, BoundMode::Rederived).unwrap();
        prop_assert!(t_lo >= 0.0 && t_lo <= t_hi);
        prop_assert_eq!(t_lo, t_out_bound(-lo, &g, 0.5, BoundMode::Rederived).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn integrals_ignore_time_reversal(x0 in -8.0..8.0f64, horizon in 0.5..3.0f64) {
        let cfg = presets::load("fo-hybrid-erf").unwrap();
        let gain = cfg.controller.hybrid_gains()[0];
        let step = StepConfig { dt: 1e-3, horizon, integrator: IntegratorKind::Euler };
        let traj = simulate_first_order(&[x0], &gain, &cfg.disturbance, &step).unwrap();
        let back = reversed(&traj);
        prop_assert!((rms_error(&traj) - rms_error(&back)).abs() <= 1e-12 * (1.0 + rms_error(&traj)));
        prop_assert!((iae(&traj) - iae(&back)).abs() <= 1e-12 * (1.0 + iae(&traj)));
    }

    #[test]
    fn simulation_is_deterministic(x0 in -8.0..8.0f64, rk4 in any::<bool>()) {
        let mut cfg = presets::load("fo-hybrid-poly").unwrap();
        cfg.initial.x0 = Some(vec![x0]);
        cfg.sim.horizon = 1.0;
        cfg.sim.integrator = if rk4 { IntegratorKind::Rk4 } else { IntegratorKind::Euler };
        let a = hgsmc::simulate(&cfg).unwrap().to_csv_string();
        let b = hgsmc::simulate(&cfg).unwrap().to_csv_string();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn hybrid_mean_control_below_outer_ceiling(x0 in -10.0..10.0f64, poly in any::<bool>()) {
        let name = if poly { "fo-hybrid-poly" } else { "fo-hybrid-erf" };
        let mut cfg = presets::load(name).unwrap();
        cfg.initial.x0 = Some(vec![x0]);
        let gain = cfg.controller.hybrid_gains()[0];
        let traj = hgsmc::simulate(&cfg).unwrap();
        prop_assert!(mean_control(&traj) < gain.outer.k0 + gain.outer.k1);
        for (x, u) in traj.state.rows().zip(traj.u.rows()) {
            if x[0].abs() > gain.eps {
                prop_assert!(u[0].abs() <= gain.outer.k0 + gain.outer.k1);
            }
        }
    }

    #[test]
    fn sato_mean_control_equals_gain_far_from_origin(x0 in 50.0..200.0f64) {
        let mut cfg = presets::load("fo-sato").unwrap();
        cfg.initial.x0 = Some(vec![x0]);
        cfg.sim.horizon = 10.0;
        let traj = hgsmc::simulate(&cfg).unwrap();
        let m = mean_control(&traj);
        prop_assert!((m - 1.4).abs() <= 1.4e-3, "mean_u {}", m);
    }

    #[test]
    fn euler_converges_under_step_refinement(x0 in 2.0..8.0f64) {
        // outside the layer the hybrid law is smooth in x; compare the
        // pre-entry segment (first 1 s) at dt and dt/10
        let cfg = presets::load("fo-hybrid-poly").unwrap();
        let gain = cfg.controller.hybrid_gains()[0];
        let coarse = StepConfig { dt: 1e-3, horizon: 1.0, integrator: IntegratorKind::Euler };
        let fine = StepConfig { dt: 1e-4, ..coarse };
        let a = simulate_first_order(&[x0], &gain, &cfg.disturbance, &coarse).unwrap();
        let b = simulate_first_order(&[x0], &gain, &cfg.disturbance, &fine).unwrap();
        let mut acc = 0.0;
        for k in 0..a.len() {
            let diff = a.state.row(k)[0] - b.state.row(10 * k)[0];
            acc += diff * diff;
        }
        let rms = (acc / a.len() as f64).sqrt();
        prop_assert!(rms <= 10.0 * coarse.dt, "rms difference {}", rms);
    }
}
