mod common;

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::Vector3;
use proptest::prelude::*;
use vortexpacket::berry::berry_curvature;
use vortexpacket::dynamics::*;
use vortexpacket::error::{Error, Warning};
use vortexpacket::fields::FieldConfig;
use vortexpacket::units::UnitSystem;

use common::{lorentz_rk4, wrap, Sampler};

fn units() -> UnitSystem {
    UnitSystem::default()
}

fn uniform_eb(e: Vector3<f64>, b: Vector3<f64>) -> FieldConfig {
    FieldConfig::custom(Arc::new(move |_| e), Arc::new(move |_| b)).with_potentials(
        Arc::new(move |r: &Vector3<f64>| -e.dot(r)),
        Arc::new(move |r: &Vector3<f64>| 0.5 * b.cross(r)),
        "symmetric",
    )
}

fn dopri(t_final: f64) -> IntegratorConfig {
    IntegratorConfig { method: Method::DormandPrince, t_final, rtol: 1e-10, atol: 1e-12, ..Default::default() }
}

#[test]
fn solved_velocity_satisfies_implicit_equations() {
    let mut s = Sampler::new();
    let mut checked = 0;
    while checked < 200 {
        let e = s.vector(0.5);
        let b = s.vector(0.8);
        let l = s.int(-4, 4);
        let g = s.uniform(0.0, 2.5);
        let field = uniform_eb(e, b).with_g_factor(g);
        let d = PacketDynamics::new(units(), field, l);
        let p = s.vector(2.0);
        if p.norm() < 0.4 {
            continue;
        }
        let state = PacketState::new(s.vector(1.0), p, l);
        let Ok(v) = d.rhs_solve(&state) else { continue };
        let (dh_r, dh_p) = d.hamiltonian_gradient(&state.r, &state.p).unwrap();
        let curv = berry_curvature(&p).unwrap();
        let hl = l as f64;
        let charge = -1.0;
        // r' = dH/dp - hbar l p' x curv, p' = -dH/dr + e r' x B
        let res_r = v.r_dot - (dh_p - hl * v.p_dot.cross(&curv));
        let res_p = v.p_dot - (-dh_r + charge * v.r_dot.cross(&b));
        let scale = 1.0 + v.r_dot.norm() + v.p_dot.norm();
        assert!(res_r.norm() < 1e-12 * scale && res_p.norm() < 1e-12 * scale, "{res_r:?} {res_p:?}");
        checked += 1;
    }
}

#[test]
fn zero_l_matches_plain_lorentz_tracer() {
    let e = Vector3::new(0.02, -0.05, 0.01);
    let b = Vector3::new(0.1, 0.3, 0.9);
    let d = PacketDynamics::new(units(), uniform_eb(e, b), 0);
    let s0 = PacketState::new(Vector3::new(0.1, 0.0, -0.2), Vector3::new(0.3, 0.8, 0.5), 0);
    let steps = 2000;
    let h = 0.01;
    let icfg = IntegratorConfig { t_final: steps as f64 * h, step: Some(h), ..Default::default() };
    let traj = d.integrate(&s0, &icfg).unwrap();
    let last = traj.last().unwrap().state;
    let (r, p) = lorentz_rk4(s0.r, s0.p, e, b, -1.0, 1.0, h, steps);
    assert!((last.r - r).norm() < 1e-11, "{:?}", last.r - r);
    assert!((last.p - p).norm() < 1e-11, "{:?}", last.p - p);
}

fn hall_shift_exact(l: i32, e0: f64, p0: f64, t: f64) -> f64 {
    let a = -e0;
    l as f64 * a * t / (p0 * (p0 * p0 + a * a * t * t).sqrt())
}

#[test]
fn hall_shift_converges_to_hbar_l_over_p() {
    let (e0, p0) = (0.02, 1.0);
    let t_final = 100.0 * p0 / e0;
    let field = FieldConfig::uniform_electric(Vector3::new(0.0, e0, 0.0));
    let icfg = IntegratorConfig { t_final, ..Default::default() };
    let x_of = |l: i32| {
        let d = PacketDynamics::new(units(), field.clone(), l);
        let traj = d.integrate(&PacketState::new(Vector3::zeros(), Vector3::new(0.0, 0.0, p0), l), &icfg).unwrap();
        traj.last().unwrap().state.r.x
    };
    let x0 = x_of(0);
    assert_eq!(x0, 0.0);
    for l in -3..=3 {
        let shift = x_of(l) - x0;
        assert!((shift - hall_shift_exact(l, e0, p0, t_final)).abs() < 1e-9, "l={l}");
        // e < 0, E > 0: the packet is pushed to -hbar l / p0
        let asym = -(l as f64) / p0;
        assert!((shift - asym).abs() <= 1e-3 * asym.abs(), "l={l}: {shift} vs {asym}");
    }
}

#[test]
fn magnetic_drift_law() {
    for g in [0.0, 0.5, 1.0, 2.0, 3.0] {
        for l in [-2, 1, 2, 5] {
            let b0 = 0.7;
            let p0 = 1.3;
            let field = FieldConfig::uniform_magnetic(Vector3::new(0.0, 0.0, b0)).with_g_factor(g);
            let d = PacketDynamics::new(units(), field, l);
            let t = 3.0 * 2.0 * PI / b0;
            let traj = d.integrate(&PacketState::new(Vector3::zeros(), Vector3::new(p0, 0.0, 0.0), l), &dopri(t)).unwrap();
            let measured = traj.last().unwrap().state.r.z / t;
            let expected = -(l as f64) * (1.0 - g / 2.0) * b0 / p0;
            if g == 2.0 {
                assert!(measured.abs() < 1e-8, "g=2 l={l}: {measured}");
            } else {
                assert!((measured / expected - 1.0).abs() < 1e-4, "g={g} l={l}: {measured} vs {expected}");
            }
        }
    }
}

fn energy_drift(traj: &Trajectory) -> f64 {
    let h0 = traj.points[0].energy;
    traj.points.iter().map(|p| (p.energy - h0).abs()).fold(0.0, f64::max) / h0.abs()
}

#[test]
fn energy_is_conserved_in_static_fields() {
    let fields = [
        FieldConfig::uniform_electric(Vector3::new(0.0, 0.05, 0.0)),
        FieldConfig::uniform_magnetic(Vector3::new(0.0, 0.2, 1.0)).with_g_factor(1.0),
        uniform_eb(Vector3::new(0.01, 0.02, 0.0), Vector3::new(0.0, 0.0, 0.5)).with_g_factor(0.0),
        // confining for e < 0, divergence-free B with a matching A
        FieldConfig::custom(
            Arc::new(|r: &Vector3<f64>| 0.001 * r),
            Arc::new(|r: &Vector3<f64>| Vector3::new(-0.005 * r.x, -0.005 * r.y, 0.5 + 0.01 * r.z)),
        )
        .with_potentials(
            Arc::new(|r: &Vector3<f64>| -0.0005 * r.norm_squared()),
            Arc::new(|r: &Vector3<f64>| 0.5 * (0.5 + 0.01 * r.z) * Vector3::new(-r.y, r.x, 0.0)),
            "user",
        ),
    ];
    for (k, field) in fields.into_iter().enumerate() {
        for l in [0, 1, -3] {
            for model in [OamModel::Slaved, OamModel::Precessing] {
                let d = PacketDynamics::new(units(), field.clone(), l);
                let s0 = PacketState::new(Vector3::new(0.2, -0.1, 0.0), Vector3::new(0.6, 0.3, 0.7), l);
                let icfg = IntegratorConfig { oam_model: model, ..dopri(40.0) };
                let traj = d.integrate(&s0, &icfg).unwrap();
                let drift = energy_drift(&traj);
                assert!(drift < 1e-8, "field {k} l={l} {model:?}: {drift:e}");
            }
        }
    }
}

#[test]
fn rk4_is_fourth_order_in_uniform_e() {
    let (e0, p0, l) = (0.5, 1.0, 2);
    let t_final = 10.0;
    let d = PacketDynamics::new(units(), FieldConfig::uniform_electric(Vector3::new(0.0, e0, 0.0)), l);
    let s0 = PacketState::new(Vector3::zeros(), Vector3::new(0.0, 0.0, p0), l);
    let exact = hall_shift_exact(l, e0, p0, t_final);
    let errors: Vec<f64> = [20, 40, 80, 160, 320]
        .iter()
        .map(|n| {
            let icfg = IntegratorConfig { t_final, step: Some(t_final / *n as f64), ..Default::default() };
            (d.integrate(&s0, &icfg).unwrap().last().unwrap().state.r.x - exact).abs()
        })
        .collect();
    for w in errors.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order >= 3.8, "errors {errors:?}");
    }
}

#[test]
fn precessing_helicity_is_conserved() {
    let b0 = 1.0;
    let period = 2.0 * PI / b0;
    let cases = [
        (FieldConfig::uniform_magnetic(Vector3::new(0.0, 0.0, b0)).with_g_factor(2.0), 2),
        (FieldConfig::uniform_magnetic(Vector3::new(0.3, 0.0, b0)).with_g_factor(2.0), -3),
        (FieldConfig::uniform_electric(Vector3::new(0.0, 0.1, 0.05)).with_g_factor(1.0), 1),
        (FieldConfig::uniform_electric(Vector3::new(0.02, 0.0, 0.1)).with_g_factor(0.3), 4),
        (FieldConfig::free().with_g_factor(1.0), 2),
    ];
    for (k, (field, l)) in cases.into_iter().enumerate() {
        let d = PacketDynamics::new(units(), field, l);
        let s0 = PacketState::new(Vector3::zeros(), Vector3::new(0.8, 0.1, 0.5), l);
        let icfg = IntegratorConfig { t_final: 10.0 * period, oam_model: OamModel::Precessing, ..Default::default() };
        let traj = d.integrate(&s0, &icfg).unwrap();
        assert!(traj.max_helicity_drift < 1e-9, "case {k}: {:e}", traj.max_helicity_drift);
        assert!(traj.validity_warning().is_none(), "case {k}");
    }
}

#[test]
fn anomalous_g_breaks_alignment_within_a_period() {
    let b0 = 1.0;
    let period = 2.0 * PI / b0;
    for p in [Vector3::new(1.0, 0.0, 0.0), Vector3::new(0.6, 0.2, 0.7)] {
        let field = FieldConfig::uniform_magnetic(Vector3::new(0.0, 0.0, b0)).with_g_factor(1.0);
        let d = PacketDynamics::new(units(), field, 1);
        let icfg = IntegratorConfig { t_final: 2.0 * period, oam_model: OamModel::Precessing, ..Default::default() };
        let traj = d.integrate(&PacketState::new(Vector3::zeros(), p, 1), &icfg).unwrap();
        let (t, angle) = traj.validity_warning().expect("warning");
        assert!(t < period && angle > 1e-3, "t={t} angle={angle}");
    }
}

#[test]
fn precession_rate_for_g_two() {
    // l_vec turns at |e| B / m, matching the cyclotron rotation of p
    let field = FieldConfig::uniform_magnetic(Vector3::new(0.0, 0.0, 2.0)).with_g_factor(2.0);
    let d = PacketDynamics::new(units(), field, 1);
    let mut s = PacketState::new(Vector3::zeros(), Vector3::x(), 1);
    s.l_vec = Vector3::new(1.0, 0.0, 0.0);
    let rate = d.precess_oam(&s).unwrap();
    assert!((rate - Vector3::new(0.0, 2.0, 0.0)).norm() < 1e-15, "{rate:?}");
    let v = d.rhs_solve(&s).unwrap();
    assert!((v.p_dot.normalize() - rate.normalize()).norm() < 1e-15);
}

#[test]
fn slaved_oam_tracks_momentum() {
    let field = uniform_eb(Vector3::new(0.0, 0.05, 0.0), Vector3::new(0.0, 0.0, 0.8));
    let d = PacketDynamics::new(units(), field, -2);
    let traj = d.integrate(&PacketState::new(Vector3::zeros(), Vector3::new(0.7, 0.0, 0.4), -2), &dopri(30.0)).unwrap();
    for pt in &traj.points {
        assert!((pt.state.l_vec - (-2.0) * pt.state.p.normalize()).norm() < 1e-14);
        assert!((pt.helicity + 2.0).abs() < 1e-14);
    }
}

#[test]
fn berry_phase_of_cyclotron_orbit_is_cap_area() {
    // p circles a latitude of colatitude theta once per orbit
    let b0 = 1.0;
    for (l, g) in [(1, 2.0), (3, 1.0), (-2, 0.0)] {
        let field = FieldConfig::uniform_magnetic(Vector3::new(0.0, 0.0, b0)).with_g_factor(g);
        let d = PacketDynamics::new(units(), field, l);
        let p0 = Vector3::new(0.8, 0.0, 0.6);
        let s0 = PacketState::new(Vector3::zeros(), p0, l);
        let v = d.rhs_solve(&s0).unwrap();
        let omega = v.p_dot.y / p0.x;
        let icfg = IntegratorConfig { t_final: 2.0 * PI / omega.abs(), ..dopri(0.0) };
        let traj = d.integrate(&s0, &icfg).unwrap();
        let last = traj.last().unwrap().state;
        assert!((last.p - p0).norm() < 1e-8, "{:?}", last.p);
        let cap = 2.0 * PI * (1.0 - 0.6);
        let expected = -(l as f64) * omega.signum() * cap;
        assert!(wrap(last.theta_berry - expected).abs() < 1e-7, "l={l}: {} vs {expected}", last.theta_berry);
    }
}

#[test]
fn free_dynamical_phase() {
    let d = PacketDynamics::new(units(), FieldConfig::free(), 1);
    let p = Vector3::new(0.3, 0.4, 1.2);
    let traj = d.integrate(&PacketState::new(Vector3::zeros(), p, 1), &IntegratorConfig { t_final: 5.0, ..Default::default() }).unwrap();
    let last = traj.last().unwrap().state;
    assert!((last.theta_dyn - p.norm_squared() * 5.0 / 2.0).abs() < 1e-12);
    assert_eq!(last.theta_dirac, 0.0);
    assert_eq!(last.theta_berry, 0.0);
    assert!((last.r - 5.0 * p).norm() < 1e-12);
}

#[test]
fn first_order_form_agrees_without_magnetic_field() {
    let field = FieldConfig::uniform_electric(Vector3::new(0.1, -0.2, 0.05));
    let d = PacketDynamics::new(units(), field, 3);
    let mut s = Sampler::new();
    for _ in 0..20 {
        let p = s.vector(2.0) + Vector3::new(0.0, 0.0, 2.5);
        let a = d.velocities(&Vector3::zeros(), &p, EquationForm::Exact).unwrap();
        let b = d.velocities(&Vector3::zeros(), &p, EquationForm::FirstOrder).unwrap();
        assert!((a.r_dot - b.r_dot).norm() < 1e-15 && (a.p_dot - b.p_dot).norm() < 1e-15);
    }
}

#[test]
fn first_order_differs_at_second_order_in_l() {
    let field = uniform_eb(Vector3::new(0.0, 0.1, 0.0), Vector3::new(0.0, 0.3, 0.4));
    let p = Vector3::new(0.5, 0.2, 1.5);
    let mut prev = None;
    for scale in [1.0, 0.5, 0.25] {
        // vary hbar l through hbar
        let u = UnitSystem::new(scale, 1.0, -1.0).unwrap();
        let d = PacketDynamics::new(u, field.clone(), 1);
        let a = d.velocities(&Vector3::zeros(), &p, EquationForm::Exact).unwrap();
        let b = d.velocities(&Vector3::zeros(), &p, EquationForm::FirstOrder).unwrap();
        let diff = (a.r_dot - b.r_dot).norm();
        if let Some(prev) = prev {
            let ratio: f64 = prev / diff;
            assert!((ratio.log2() - 2.0).abs() < 0.1, "ratio {ratio}");
        }
        prev = Some(diff);
    }
}

#[test]
fn passing_near_the_gauge_string_switches_to_geometric_phase() {
    let d = PacketDynamics::new(units(), FieldConfig::uniform_electric(Vector3::new(0.0, 0.0, 0.2)), 1);
    // e < 0: p_z grows more negative; p stays close to -z
    let s0 = PacketState::new(Vector3::zeros(), Vector3::new(0.01, 0.0, -1.0), 1);
    let traj = d.integrate(&s0, &IntegratorConfig { t_final: 2.0, ..Default::default() }).unwrap();
    assert!(traj.geometric_berry_steps > 0);
    assert!(traj.warnings.iter().any(|w| matches!(w, Warning::BerryGeometricFallback { .. })));
    assert!(traj.last().unwrap().state.theta_berry.is_finite());
}

#[test]
fn momentum_through_zero_aborts_with_partial_trajectory() {
    let d = PacketDynamics::new(units(), FieldConfig::uniform_electric(Vector3::new(0.0, 0.0, 1.0)), 1);
    let s0 = PacketState::new(Vector3::zeros(), Vector3::new(0.0, 0.0, 1.0), 1);
    let icfg = IntegratorConfig { t_final: 2.0, step: Some(0.25), ..Default::default() };
    let err = d.integrate(&s0, &icfg).unwrap_err();
    assert!(matches!(err.error, Error::MonopoleSingularity { .. }), "{err}");
    assert!(!err.partial.points.is_empty());
    assert!(err.t < 1.0 + 1e-12);
}

#[test]
fn invalid_tolerance_is_rejected() {
    let d = PacketDynamics::new(units(), FieldConfig::free(), 1);
    let icfg = IntegratorConfig { rtol: 0.1, ..Default::default() };
    let err = d.integrate(&PacketState::new(Vector3::zeros(), Vector3::z(), 1), &icfg).unwrap_err();
    assert!(matches!(err.error, Error::InvalidParameter { name: "rtol", .. }));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn d_factor_formula(l in -4i32..=4, bx in -1.0f64..1.0, bz in -1.0f64..1.0, px in -2.0f64..2.0, pz in 0.5f64..2.0) {
        let b = Vector3::new(bx, 0.2, bz);
        let p = Vector3::new(px, -0.3, pz);
        let d = PacketDynamics::new(units(), FieldConfig::uniform_magnetic(b), l);
        let expected = 1.0 + (l as f64) * b.dot(&(-p / p.norm().powi(3)));
        prop_assert!((d.d_factor(&Vector3::zeros(), &p).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn mirror_symmetry_in_l(l in 1i32..=4, e0 in 0.01f64..0.3) {
        let field = FieldConfig::uniform_electric(Vector3::new(0.0, e0, 0.0));
        let icfg = IntegratorConfig { t_final: 20.0, ..Default::default() };
        let run = |l: i32| PacketDynamics::new(units(), field.clone(), l)
            .integrate(&PacketState::new(Vector3::zeros(), Vector3::z(), l), &icfg).unwrap();
        let (a, b) = (run(l), run(-l));
        for (pa, pb) in a.points.iter().zip(&b.points) {
            prop_assert!((pa.state.r.x + pb.state.r.x).abs() < 1e-12);
            prop_assert!((pa.state.r.y - pb.state.r.y).abs() < 1e-12);
        }
    }
}
