//! Fast built-in invariant checks behind `vortexpacket selftest`.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};

use crate::berry::{berry_curvature, berry_phase_loop, MomentumPath};
use crate::config::{parse_config, RunConfig};
use crate::dynamics::{IntegratorConfig, Method, OamModel, PacketDynamics, PacketState};
use crate::error::Result;
use crate::fields::FieldConfig;
use crate::grid::mode_overlap;
use crate::modes::{oam_expectation, sample_mode, ModeSpec};
use crate::paraxial::propagate;
use crate::scenarios::drift_velocity;
use crate::special::gauss_legendre;
use crate::symplectic::build_frame;
use crate::units::UnitSystem;

pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, value: f64, limit: f64) -> Check {
    Check { name, passed: value.is_finite() && value <= limit, detail: format!("{value:.3e} (limit {limit:.0e})") }
}

fn run(name: &'static str, f: impl FnOnce() -> Result<(f64, f64)>) -> Check {
    match f() {
        Ok((value, limit)) => check(name, value, limit),
        Err(e) => Check { name, passed: false, detail: format!("error: {e}") },
    }
}

pub fn run_all() -> Vec<Check> {
    let units = UnitSystem::default();
    vec![
        run("mode norm and OAM", || {
            let mut worst: f64 = 0.0;
            for l in -2..=2 {
                let spec = ModeSpec::with_defaults(l, 1, 0, 1.0, &units)?;
                let g = sample_mode(&spec, 128, 6.0 * spec.waist, 0.0, &units)?.field;
                worst = worst.max((g.norm() - 1.0).abs()).max((oam_expectation(&g)? - l as f64).abs());
            }
            Ok((worst, 1e-6))
        }),
        run("paraxial propagation overlap", || {
            let spec = ModeSpec::with_defaults(1, 0, 0, 1.0, &units)?;
            let tau = 0.7 * spec.rayleigh_time(&units);
            let g0 = sample_mode(&spec, 128, 8.0 * spec.waist, 0.0, &units)?.field;
            let g1 = propagate(&g0, tau / 10.0, 10, &units)?.field;
            let exact = sample_mode(&spec, 128, 8.0 * spec.waist, tau, &units)?.field;
            Ok((1.0 - mode_overlap(&g1, &exact)?.norm(), 1e-5))
        }),
        run("monopole flux", || {
            let (x, w) = gauss_legendre(32);
            let n_phi = 64;
            let mut flux = 0.0;
            for (c, wc) in x.iter().zip(&w) {
                let s = (1.0 - c * c).sqrt();
                for k in 0..n_phi {
                    let phi = 2.0 * PI * (k as f64 + 0.5) / n_phi as f64;
                    let n = Vector3::new(s * phi.cos(), s * phi.sin(), *c);
                    let p = 1.7 * n + Vector3::new(0.2, -0.1, 0.3);
                    let dir = p - Vector3::new(0.2, -0.1, 0.3);
                    flux += wc * (2.0 * PI / n_phi as f64) * 1.7 * 1.7 * berry_curvature(&p)?.dot(&dir.normalize());
                }
            }
            Ok(((flux + 4.0 * PI).abs(), 1e-6))
        }),
        run("loop phase routes", || {
            let mut worst: f64 = 0.0;
            for (theta, l) in [(0.4, 1), (1.2, -2), (2.0, 3)] {
                let lp = berry_phase_loop(&MomentumPath::circle(1.3, theta, 64)?, l)?;
                worst = worst.max(lp.method_discrepancy().unwrap_or(f64::INFINITY).abs());
            }
            Ok((worst, 1e-8))
        }),
        run("bracket closed forms", || {
            let b = Vector3::new(0.3, -0.2, 0.5);
            let cfg = FieldConfig::uniform_magnetic(b);
            let p = Vector3::new(0.4, 0.7, -0.9);
            let l = 2;
            let f = build_frame(&Vector3::new(0.1, 0.2, 0.3), &p, l, &cfg, &units)?;
            let e = units.charge;
            let hl = units.hbar * l as f64;
            let curv = berry_curvature(&p)?;
            let d = 1.0 - e * hl * b.dot(&curv);
            let eps = |a: &Vector3<f64>| Matrix3::new(0.0, a.z, -a.y, -a.z, 0.0, a.x, a.y, -a.x, 0.0);
            let rr = hl * eps(&curv) / d;
            let pp = e * eps(&b) / d;
            let rp = (Matrix3::identity() - e * hl * b * curv.transpose()) / d;
            let mut worst: f64 = (f.d - d).abs();
            for i in 0..3 {
                for j in 0..3 {
                    worst = worst
                        .max((f.brackets[(i, j)] - rr[(i, j)]).abs())
                        .max((f.brackets[(i + 3, j + 3)] - pp[(i, j)]).abs())
                        .max((f.brackets[(i, j + 3)] - rp[(i, j)]).abs());
                }
            }
            Ok((worst, 1e-12))
        }),
        run("Hall shift l = 1", || {
            let e0 = 0.5;
            let dyn1 = PacketDynamics::new(units, FieldConfig::uniform_electric(Vector3::new(0.0, e0, 0.0)), 1);
            let icfg = IntegratorConfig { t_final: 20.0, step: Some(0.01), ..IntegratorConfig::default() };
            let traj = dyn1.integrate(&PacketState::new(Vector3::zeros(), Vector3::z(), 1), &icfg)?;
            let last = traj.last().expect("final point");
            let a = units.charge * e0;
            let t = last.state.t;
            let exact = a * t / (1.0 + a * a * t * t).sqrt();
            Ok(((last.state.r.x - exact).abs(), 1e-8))
        }),
        run("magnetic drift g = 0", || {
            let cfg = FieldConfig::uniform_magnetic(Vector3::z()).with_g_factor(0.0);
            let dynamics = PacketDynamics::new(units, cfg, 1);
            let t_final = 2.0 * PI;
            let icfg = IntegratorConfig { t_final, method: Method::DormandPrince, ..IntegratorConfig::default() };
            let traj = dynamics.integrate(&PacketState::new(Vector3::zeros(), Vector3::x(), 1), &icfg)?;
            let v = traj.last().expect("final point").state.r.z / t_final;
            let expected = drift_velocity(&units, 0.0, 1, 1.0, 1.0);
            Ok(((v - expected).abs() / expected.abs(), 1e-8))
        }),
        run("precessing helicity g = 2", || {
            let cfg = FieldConfig::uniform_magnetic(Vector3::z()).with_g_factor(2.0);
            let dynamics = PacketDynamics::new(units, cfg, 2);
            let icfg = IntegratorConfig {
                t_final: 4.0 * PI,
                oam_model: OamModel::Precessing,
                method: Method::DormandPrince,
                ..IntegratorConfig::default()
            };
            let p = Vector3::new(1.0, 0.0, 0.4);
            let traj = dynamics.integrate(&PacketState::new(Vector3::zeros(), p, 2), &icfg)?;
            Ok((traj.max_helicity_drift, 1e-9))
        }),
        run("config round trip", || {
            let cfg = RunConfig::default();
            let back = parse_config(&cfg.serialize())?;
            Ok((if back == cfg { 0.0 } else { 1.0 }, 0.0))
        }),
    ]
}
